#pragma once

// Seeded generator of nightly sleep event sequences with an injected gradual
// drift over the final part of the series, plus per-period summary statistics.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynamo/detector.hpp"
#include "dynamo/events.hpp"

namespace dynamo {

// Moments of one behavioural regime. Onset is a UTC clock time in seconds
// after midnight; values before noon are read as the following morning.
struct RegimeSpec {
    double onset_mean = 22 * 3600.0;
    double onset_std = 0.0;
    double duration_mean_h = 8.0;       // total sleep per night
    double duration_std_h = 0.0;
    double interruption_mean_min = 0.0;  // total time awake inside the episode
    double interruption_std_min = 0.0;
    double interruption_count_mean = 0.0;
    double interruption_count_std = 0.0;

    void validate() const;
    friend bool operator==(const RegimeSpec&, const RegimeSpec&) = default;
};

enum class DriftShape { LinearRamp, Step, Sawtooth };

enum class DriftFeature { Duration, Interruptions, Onset };

struct DriftSpec {
    double fraction = 0.4;
    DriftShape shape = DriftShape::LinearRamp;
    double ramp_fraction = 0.15;  // ramp (or sawtooth period) as a share of the drift span
    std::vector<DriftFeature> features{DriftFeature::Duration};
    RegimeSpec target;

    void validate() const;
};

struct GeneratorSpec {
    std::string name = "custom";
    std::size_t days = 1460;
    Timestamp start = 1577880000;  // 2020-01-01 12:00:00 UTC
    std::string kind = "sleep";
    RegimeSpec normal;
    std::optional<DriftSpec> drift;

    void validate() const;
};

struct GeneratedData {
    EventSequence events;
    DriftLabels labels;  // truth only
};

// Throws ValidationError when a regime cannot be realised (a moment outside
// the physical bounds, or a std too wide for the bounded support).
GeneratedData generate(const GeneratorSpec& spec, std::uint64_t seed);

// Presets shaped after the four monitored-patient datasets.
GeneratorSpec preset(const std::string& name);  // "ELP1-D", "ELP1-I", "ELP2-D", "ELP2-I"
std::vector<std::string> preset_names();

struct Moments {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
    std::size_t count = 0;
};

struct PeriodStats {
    std::size_t days = 0;
    Moments duration_h;
    Moments interruption_min;
    Moments onset;  // seconds after midnight, may exceed 86400 for after-midnight onsets
    Moments interruption_count;
};

struct DatasetStats {
    std::size_t days = 0;
    double drift_fraction = 0.0;
    PeriodStats normal;
    std::optional<PeriodStats> drift;
};

// Per-night statistics over the sequence's intervals; the last
// round(days * drift_fraction) intervals form the drift period.
DatasetStats stats(const EventSequence& seq, double drift_fraction);

std::string format_clock(double seconds_after_midnight);
double parse_clock(const std::string& text);  // "HH:MM[:SS]"

void to_json(nlohmann::json& j, const RegimeSpec& r);
void from_json(const nlohmann::json& j, RegimeSpec& r);
void to_json(nlohmann::json& j, const DriftSpec& d);
void from_json(const nlohmann::json& j, DriftSpec& d);
void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);
void to_json(nlohmann::json& j, const DatasetStats& s);

GeneratorSpec load_generator_spec(const std::filesystem::path& path);

}  // namespace dynamo
