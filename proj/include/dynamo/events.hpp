#pragma once

// Behavioural event sequences: validation, partitioning into fixed-length
// intervals with boundary splitting, and per-interval sleep feature rows.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dynamo {

using Timestamp = std::int64_t;  // seconds since the Unix epoch, UTC

inline constexpr Timestamp kSecondsPerDay = 86400;

struct Event {
    std::string kind;
    Timestamp begin = 0;
    Timestamp end = 0;

    Timestamp duration() const noexcept { return end - begin; }
    friend bool operator==(const Event&, const Event&) = default;
};

// Events ordered by begin and pairwise non-overlapping, observed over
// [start, end) and partitioned into intervals of length `delta`.
struct EventSequence {
    std::vector<Event> events;
    Timestamp start = 0;
    Timestamp end = 0;
    Timestamp delta = kSecondsPerDay;

    // n = ceil((end - start) / delta)
    std::size_t interval_count() const;
    // 1-based interval bounds; the interval is [interval_begin(j), interval_end(j)).
    Timestamp interval_begin(std::size_t j) const { return start + static_cast<Timestamp>(j - 1) * delta; }
    Timestamp interval_end(std::size_t j) const;

    // Throws ValidationError naming the offending event(s).
    void validate() const;

    EventSequence of_kind(const std::string& kind) const;

    friend bool operator==(const EventSequence&, const EventSequence&) = default;
};

// A piece of an event after boundary splitting. `source` is the index of the
// originating event in the sequence, so split pieces can be re-joined.
struct EventFragment {
    Event event;
    std::size_t source = 0;

    // Inclusive end: a fragment cut at midnight ends at 23:59:59.
    Timestamp last_second() const noexcept { return event.end - 1; }
};

struct IntervalEvents {
    std::size_t index = 0;  // 1-based
    Timestamp begin = 0;
    Timestamp end = 0;
    std::vector<EventFragment> fragments;
};

// Splits every event that crosses an interval boundary into contiguous
// fragments. Fragments are half-open, so durations are conserved exactly.
// Always returns exactly seq.interval_count() entries.
std::vector<IntervalEvents> partition_and_split(const EventSequence& seq);

// Daily observation window given as UTC clock times. The window for interval
// j opens at the first `begin_clock` at or after the interval start and lasts
// until the next `end_clock`. A disabled window uses the interval bounds.
struct ObservationWindow {
    Timestamp begin_clock = 21 * 3600;
    Timestamp end_clock = 12 * 3600;
    bool enabled = true;

    static ObservationWindow whole_interval() { return {0, 0, false}; }
    Timestamp length() const;
};

inline constexpr std::size_t kSleepFeatureCount = 5;

// Per-interval feature vector [Z1..Z5]: first onset, last offset (both in
// seconds since the window opened), cumulative duration, event count and
// cumulative gap duration. An interval with no events carries no features.
struct DailyFeatureRow {
    std::size_t interval_index = 0;  // 1-based
    std::optional<std::vector<double>> features;

    bool is_empty() const noexcept { return !features.has_value(); }
    friend bool operator==(const DailyFeatureRow&, const DailyFeatureRow&) = default;
};

std::vector<DailyFeatureRow> extract_daily_features(const std::vector<IntervalEvents>& intervals,
                                                    const ObservationWindow& window = {});

// Bounds used when an event CSV carries no monitoring metadata: intervals of
// `delta` seconds anchored at `anchor_clock` (default noon, so that a night
// watched from 21:00 to 12:00 falls inside a single interval).
struct LoadOptions {
    Timestamp delta = kSecondsPerDay;
    Timestamp anchor_clock = 12 * 3600;
};

EventSequence load_events(const std::filesystem::path& path, const LoadOptions& options = {});
void save_events(const EventSequence& seq, const std::filesystem::path& path);

// Feature CSV `interval,z1..z5` with 0-based interval indices; an interval
// without events is written with `empty` in every feature column.
std::vector<DailyFeatureRow> load_feature_rows(const std::filesystem::path& path);
void save_feature_rows(const std::vector<DailyFeatureRow>& rows, const std::filesystem::path& path);

}  // namespace dynamo
