#pragma once

// Two-window drift detector over a centroid trajectory, with an optional
// queue of past behaviours used to recognise recurring drifts.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynamo/divergence.hpp"
#include "dynamo/matrix.hpp"
#include "dynamo/trackers.hpp"

namespace dynamo {

struct DetectorConfig {
    std::size_t delta = 4;    // step after a quiet iteration
    std::size_t ell = 16;     // reference + detection length, even
    std::size_t lambda = 4;   // look-back when rebuilding each window
    double sigma = 0.3422;    // consensus threshold
    std::vector<Tracker> trackers = default_trackers();
    std::vector<DivergenceTest> tests = default_tests();
    ComponentRule rule = ComponentRule::HoldsInAny;

    static DetectorConfig synthetic();
    static DetectorConfig realistic();

    // Throws ValidationError unless 4 <= ell <= n/2, ell even, delta >= 1,
    // lambda < n, 0 < sigma < 1 and both ensembles are non-empty.
    void validate(std::size_t n) const;
};

void to_json(nlohmann::json& j, const DetectorConfig& cfg);

struct DriftLabels {
    std::vector<std::uint8_t> predicted;
    std::optional<std::vector<std::uint8_t>> truth;

    std::size_t size() const noexcept { return predicted.size(); }
    void validate() const;
};

// Interval range flagged by one drift decision, 1-based inclusive.
struct DriftSpan {
    std::size_t first = 0;
    std::size_t last = 0;
    bool recurrent = false;
};

struct DetectorStep {
    std::size_t t = 0;    // 1-based start of the reference window
    std::size_t ell = 0;  // window budget used in this iteration
    double vote_mean = 0.0;
    bool drift = false;
};

struct DetectorRun {
    DriftLabels labels;
    std::vector<DetectorStep> steps;
    std::vector<DriftSpan> spans;
    std::vector<std::uint8_t> recurrent;  // per interval, set on recurrent drift spans
    std::size_t unvisited_tail = 0;       // intervals left when the shrunk budget fell below 4
    double seconds = 0.0;
};

void to_json(nlohmann::json& j, const DetectorRun& run);

DriftLabels run(const RowMatrix& q, const DetectorConfig& cfg);
DetectorRun run_traced(const RowMatrix& q, const DetectorConfig& cfg);

// Snapshot of the trajectory rows a reference window covered when it was
// replaced. Immutable once queued.
struct BehaviourSnapshot {
    std::size_t first = 0;
    std::size_t last = 0;
    RowMatrix rows;
};

// Bounded FIFO of past reference windows; the oldest entry is evicted first.
class BehaviourQueue {
public:
    explicit BehaviourQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(BehaviourSnapshot snapshot);
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return items_.size(); }
    const std::deque<BehaviourSnapshot>& items() const noexcept { return items_; }

private:
    std::size_t capacity_;
    std::deque<BehaviourSnapshot> items_;
};

struct RecurrenceConfig {
    std::size_t capacity = 16;
    double alpha = 0.01;
};

// Two samples of rows match when no feature column is rejected by the
// two-sample KS test at `alpha`.
bool rows_match(const RowBlock& a, const RowBlock& b, double alpha);

// True when samples of these sizes can be rejected at `alpha` at all, so that
// a match between them carries information.
bool rows_informative(std::size_t a, std::size_t b, double alpha);

// Like run_traced, plus a queue of past behaviours. Every drift adopts the
// rows from its detection window up to the next drift's detection window (or
// the end of the trajectory). Once that behaviour is complete it is compared
// with the queue: the drift is recurrent when the adopted rows differ from the
// behaviour they replaced and match an earlier queued one. The adopted rows
// are queued afterwards. A capacity of zero disables the queue.
DetectorRun run_with_recurrence(const RowMatrix& q, const DetectorConfig& cfg, const RecurrenceConfig& rc);

// Label CSV: `interval,predicted[,truth]`, 0-based interval index. Either
// label column may be absent on load.
void save_labels(const DriftLabels& labels, const std::filesystem::path& path);
DriftLabels load_labels(const std::filesystem::path& path);

}  // namespace dynamo
