#include "dynamo/divergence.hpp"

#include <cmath>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dynamo/error.hpp"

namespace dynamo {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DimensionError("series lengths differ: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.empty()) throw DimensionError("series must not be empty");
}

double total_variation(std::span<const double> s) {
    double tv = 0.0;
    for (std::size_t j = 1; j < s.size(); ++j) tv += std::abs(s[j] - s[j - 1]);
    return tv;
}

double mean_of(std::span<const double> s) {
    double sum = 0.0;
    for (double v : s) sum += v;
    return sum / static_cast<double>(s.size());
}

}  // namespace

WindowReadings WindowReadings::for_trackers(std::span<const Tracker> trackers) {
    WindowReadings w;
    for (const auto& t : trackers) w.keys.push_back(t.name);
    w.series.resize(trackers.size());
    return w;
}

void WindowReadings::clear() {
    for (auto& s : series) s.clear();
}

std::vector<double> component_series(const ReadingSeries& series, std::size_t component) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& r : series) {
        if (component >= r.components())
            throw DimensionError("reading of " + r.tracker + " has " + std::to_string(r.components()) +
                                 " components, asked for component " + std::to_string(component));
        out.push_back(r.values[component]);
    }
    return out;
}

bool gamma1(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y);
    return total_variation(x) >= total_variation(y);
}

bool gamma2(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y);
    const double mx = mean_of(x);
    double var = 0.0;
    for (double v : x) var += (v - mx) * (v - mx);
    const double sx = std::sqrt(var / static_cast<double>(x.size()));
    const double my = mean_of(y);
    if (sx == 0.0) spdlog::debug("gamma2: constant reference series, band is empty");
    // A constant reference has an empty band, so this never holds for it.
    return mx - sx < my && my < mx + sx;
}

DivergenceTest total_variation_test() { return {"gamma1_total_variation", gamma1}; }
DivergenceTest mean_band_test() { return {"gamma2_mean_band", gamma2}; }
std::vector<DivergenceTest> default_tests() { return {total_variation_test(), mean_band_test()}; }

double DecisionMatrix::mean() const {
    if (votes.empty()) return 0.0;
    double s = 0.0;
    for (auto v : votes) s += v;
    return s / static_cast<double>(votes.size());
}

void to_json(nlohmann::json& j, const DecisionMatrix& y) {
    j = nlohmann::json::array();
    for (std::size_t t = 0; t < y.tests; ++t) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < y.trackers; ++k) row.push_back(y.at(t, k));
        j.push_back(row);
    }
}

DecisionMatrix apply_tests(const WindowReadings& reference, const WindowReadings& detection,
                           std::span<const DivergenceTest> tests, ComponentRule rule) {
    if (reference.keys != detection.keys) throw ValidationError("reference and detection trackers differ");
    DecisionMatrix y{tests.size(), reference.keys.size(), std::vector<std::uint8_t>(tests.size() * reference.keys.size())};
    for (std::size_t j = 0; j < reference.keys.size(); ++j) {
        const ReadingSeries& r = reference.series[j];
        const ReadingSeries& d = detection.series[j];
        if (r.empty() || d.empty()) throw DimensionError("empty reading series for " + reference.keys[j]);
        const std::size_t comps = r.front().components();
        for (const auto* s : {&r, &d})
            for (const auto& reading : *s)
                if (reading.components() != comps)
                    throw DimensionError("inhomogeneous reading shapes for " + reference.keys[j]);

        std::vector<std::vector<double>> rc(comps), dc(comps);
        for (std::size_t c = 0; c < comps; ++c) {
            rc[c] = component_series(r, c);
            dc[c] = component_series(d, c);
        }
        for (std::size_t t = 0; t < tests.size(); ++t) {
            bool holds = rule == ComponentRule::HoldsInAll;
            for (std::size_t c = 0; c < comps; ++c) {
                const bool h = tests[t].holds(rc[c], dc[c]);
                if (rule == ComponentRule::HoldsInAny && h) {
                    holds = true;
                    break;
                }
                if (rule == ComponentRule::HoldsInAll && !h) {
                    holds = false;
                    break;
                }
            }
            y.votes[t * y.trackers + j] = holds ? 0 : 1;
        }
    }
    return y;
}

bool consensus(const DecisionMatrix& y, double threshold) { return y.mean() > threshold; }

}  // namespace dynamo
