#pragma once

// Divergence tests between reference and detection reading series, and the
// average-vote consensus over the resulting decision matrix.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynamo/trackers.hpp"

namespace dynamo {

using ReadingSeries = std::vector<TrackReading>;

// Reading series for one window, keyed by tracker name in ensemble order.
struct WindowReadings {
    std::vector<std::string> keys;
    std::vector<ReadingSeries> series;

    static WindowReadings for_trackers(std::span<const Tracker> trackers);
    void clear();
    std::size_t tracker_count() const noexcept { return keys.size(); }
};

// Scalar series of one component (0-based) of a reading series.
std::vector<double> component_series(const ReadingSeries& series, std::size_t component);

// Holds when the reference total variation dominates the detection one.
bool gamma1(std::span<const double> x, std::span<const double> y);

// Holds when mean(y) lies strictly inside mean(x) +/- std(x), population std.
bool gamma2(std::span<const double> x, std::span<const double> y);

struct DivergenceTest {
    std::string name;
    std::function<bool(std::span<const double> reference, std::span<const double> detection)> holds;
};

DivergenceTest total_variation_test();  // gamma1
DivergenceTest mean_band_test();        // gamma2
std::vector<DivergenceTest> default_tests();

// For multi-component readings: does a test hold when it holds in at least
// one component, or only when it holds in all of them?
enum class ComponentRule { HoldsInAny, HoldsInAll };

// v x u drift votes: entry (t, j) is 1 when test t does not hold on tracker j.
struct DecisionMatrix {
    std::size_t tests = 0;
    std::size_t trackers = 0;
    std::vector<std::uint8_t> votes;

    std::uint8_t at(std::size_t t, std::size_t j) const { return votes[t * trackers + j]; }
    double mean() const;
};

void to_json(nlohmann::json& j, const DecisionMatrix& y);

DecisionMatrix apply_tests(const WindowReadings& reference, const WindowReadings& detection,
                           std::span<const DivergenceTest> tests, ComponentRule rule = ComponentRule::HoldsInAny);

// Drift when the mean vote strictly exceeds the threshold.
bool consensus(const DecisionMatrix& y, double threshold);

}  // namespace dynamo
