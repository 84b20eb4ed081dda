#pragma once

// Hyperbox trackers over windows of trajectory rows.

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynamo/matrix.hpp"

namespace dynamo {

// Rows Q[first..last] (1-based, inclusive) of a trajectory. A default
// constructed window is the "no history yet" sentinel.
struct CentroidWindow {
    RowBlock rows;
    std::size_t first = 0;
    std::size_t last = 0;

    static CentroidWindow slice(const RowMatrix& q, std::size_t first, std::size_t last);
    bool empty() const noexcept { return rows.empty(); }
    std::size_t size() const noexcept { return rows.rows(); }
    std::size_t dims() const noexcept { return rows.cols(); }
};

// Per-feature bounds of the window's bounding box.
struct Hyperbox {
    std::vector<double> lower;
    std::vector<double> upper;
};

Hyperbox bounding_box(const CentroidWindow& w);

// Volume of the bounding box: prod_h (max_h - min_h).
double psi1_volume(const CentroidWindow& w);

// Euclidean norm of the per-feature spans.
double psi2_l2(const CentroidWindow& w);

// m x 2 matrix; row h = [max(w1_h) - max(w2_h), min(w1_h) - min(w2_h)].
// An empty w1 is read as w2, giving zeros.
RowMatrix psi3_span_diff(const CentroidWindow& w1, const CentroidWindow& w2);

// (||max(w1) - max(w2)||_2, ||min(w1) - min(w2)||_2), same sentinel rule.
std::pair<double, double> psi4_span_diff_l2(const CentroidWindow& w1, const CentroidWindow& w2);

enum class ReadingShape { Scalar, Pair, Matrix };

// One tracker output. `values` holds 1 (scalar), 2 (pair) or 2m (m x 2
// matrix, row-major) numbers; every component is tested on its own.
struct TrackReading {
    std::string tracker;
    ReadingShape shape = ReadingShape::Scalar;
    std::vector<double> values;

    std::size_t components() const noexcept { return values.size(); }
    friend bool operator==(const TrackReading&, const TrackReading&) = default;
};

void to_json(nlohmann::json& j, const TrackReading& r);

// A tracker measures how the current window changed relative to the
// previous one. Every tracker receives both windows; single-window trackers
// ignore `prev`. `prev` may be the empty sentinel.
struct Tracker {
    std::string name;
    std::function<TrackReading(const CentroidWindow& prev, const CentroidWindow& curr)> track;
};

Tracker volume_tracker();          // psi1
Tracker span_norm_tracker();       // psi2
Tracker span_diff_tracker();       // psi3
Tracker span_diff_norm_tracker();  // psi4

std::vector<Tracker> default_trackers();

}  // namespace dynamo
