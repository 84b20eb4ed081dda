#include "dynamo/trackers.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace dynamo {

CentroidWindow CentroidWindow::slice(const RowMatrix& q, std::size_t first, std::size_t last) {
    if (first < 1 || last < first || last > q.rows())
        throw DimensionError("window [" + std::to_string(first) + ", " + std::to_string(last) +
                             "] outside trajectory of " + std::to_string(q.rows()) + " rows");
    return {RowBlock(q, first - 1, last - first + 1), first, last};
}

Hyperbox bounding_box(const CentroidWindow& w) {
    Hyperbox box;
    if (w.empty()) return box;
    const auto first = w.rows.row(0);
    box.lower.assign(first.begin(), first.end());
    box.upper.assign(first.begin(), first.end());
    for (std::size_t r = 1; r < w.size(); ++r) {
        const auto row = w.rows.row(r);
        for (std::size_t h = 0; h < row.size(); ++h) {
            box.lower[h] = std::min(box.lower[h], row[h]);
            box.upper[h] = std::max(box.upper[h], row[h]);
        }
    }
    return box;
}

double psi1_volume(const CentroidWindow& w) {
    if (w.empty()) return 0.0;
    const Hyperbox box = bounding_box(w);
    double v = 1.0;
    for (std::size_t h = 0; h < box.lower.size(); ++h) v *= box.upper[h] - box.lower[h];
    return v;
}

double psi2_l2(const CentroidWindow& w) {
    if (w.empty()) return 0.0;
    const Hyperbox box = bounding_box(w);
    double s = 0.0;
    for (std::size_t h = 0; h < box.lower.size(); ++h) {
        const double span = box.upper[h] - box.lower[h];
        s += span * span;
    }
    return std::sqrt(s);
}

namespace {

std::pair<Hyperbox, Hyperbox> paired_boxes(const CentroidWindow& w1, const CentroidWindow& w2) {
    const CentroidWindow& a = w1.empty() ? w2 : w1;
    const CentroidWindow& b = w2.empty() ? a : w2;
    if (a.dims() != b.dims())
        throw DimensionError("windows differ in feature dimension: " + std::to_string(a.dims()) + " vs " +
                             std::to_string(b.dims()));
    return {bounding_box(a), bounding_box(b)};
}

}  // namespace

RowMatrix psi3_span_diff(const CentroidWindow& w1, const CentroidWindow& w2) {
    const auto [a, b] = paired_boxes(w1, w2);
    RowMatrix g(a.lower.size(), 2);
    for (std::size_t h = 0; h < a.lower.size(); ++h) {
        g(h, 0) = a.upper[h] - b.upper[h];
        g(h, 1) = a.lower[h] - b.lower[h];
    }
    return g;
}

std::pair<double, double> psi4_span_diff_l2(const CentroidWindow& w1, const CentroidWindow& w2) {
    const auto [a, b] = paired_boxes(w1, w2);
    double smax = 0.0, smin = 0.0;
    for (std::size_t h = 0; h < a.lower.size(); ++h) {
        const double dmax = a.upper[h] - b.upper[h];
        const double dmin = a.lower[h] - b.lower[h];
        smax += dmax * dmax;
        smin += dmin * dmin;
    }
    return {std::sqrt(smax), std::sqrt(smin)};
}

void to_json(nlohmann::json& j, const TrackReading& r) {
    const char* shape = r.shape == ReadingShape::Scalar ? "scalar" : r.shape == ReadingShape::Pair ? "pair" : "matrix";
    j = nlohmann::json{{"tracker", r.tracker}, {"shape", shape}, {"values", r.values}};
}

Tracker volume_tracker() {
    return {"psi1_volume", [](const CentroidWindow&, const CentroidWindow& curr) {
                return TrackReading{"psi1_volume", ReadingShape::Scalar, {psi1_volume(curr)}};
            }};
}

Tracker span_norm_tracker() {
    return {"psi2_l2", [](const CentroidWindow&, const CentroidWindow& curr) {
                return TrackReading{"psi2_l2", ReadingShape::Scalar, {psi2_l2(curr)}};
            }};
}

Tracker span_diff_tracker() {
    return {"psi3_span_diff", [](const CentroidWindow& prev, const CentroidWindow& curr) {
                const RowMatrix g = psi3_span_diff(prev, curr);
                return TrackReading{"psi3_span_diff", ReadingShape::Matrix, {g.data().begin(), g.data().end()}};
            }};
}

Tracker span_diff_norm_tracker() {
    return {"psi4_span_diff_l2", [](const CentroidWindow& prev, const CentroidWindow& curr) {
                const auto [gmax, gmin] = psi4_span_diff_l2(prev, curr);
                return TrackReading{"psi4_span_diff_l2", ReadingShape::Pair, {gmax, gmin}};
            }};
}

std::vector<Tracker> default_trackers() {
    return {volume_tracker(), span_norm_tracker(), span_diff_tracker(), span_diff_norm_tracker()};
}

}  // namespace dynamo
