#include "dynamo/dynclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "csv_util.hpp"

namespace dynamo {

namespace {

void check_dims(std::span<const double> point, const MicroCluster& mc) {
    if (point.size() != mc.dims())
        throw DimensionError("point has " + std::to_string(point.size()) + " features, micro-cluster has " +
                             std::to_string(mc.dims()));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* to_string(DensityLabel label) {
    switch (label) {
        case DensityLabel::Dense: return "dense";
        case DensityLabel::SemiDense: return "semi-dense";
        case DensityLabel::LowDense: return "low-dense";
    }
    return "?";
}

double box_volume(std::span<const double> spans) {
    double v = 1.0;
    for (double u : spans) v *= u;
    return v;
}

MicroCluster MicroCluster::seed(std::span<const double> point, std::span<const double> spans, Timestamp now) {
    if (point.size() != spans.size())
        throw DimensionError("point and span vectors differ in length");
    for (double u : spans)
        if (!(u > 0.0)) throw ValidationError("hyperbox spans must be positive");
    MicroCluster mc;
    mc.count = 1;
    mc.members.append_row(point);
    mc.created_at = now;
    mc.last_assigned = now;
    mc.centroid.assign(point.begin(), point.end());
    mc.spans.assign(spans.begin(), spans.end());
    mc.density = 1.0 / box_volume(mc.spans);
    return mc;
}

bool reachable(std::span<const double> point, const MicroCluster& mc) {
    check_dims(point, mc);
    for (std::size_t h = 0; h < point.size(); ++h)
        if (!(std::abs(point[h] - mc.centroid[h]) < mc.spans[h] / 2.0)) return false;
    return true;
}

std::optional<std::size_t> assign(std::span<const double> point, std::span<const MicroCluster> candidates) {
    std::optional<std::size_t> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (!reachable(point, candidates[k])) continue;
        double l1 = 0.0;
        for (std::size_t h = 0; h < point.size(); ++h) l1 += std::abs(point[h] - candidates[k].centroid[h]);
        if (l1 < best_dist) {
            best_dist = l1;
            best = k;
        }
    }
    return best;
}

MicroCluster update_on_assign(MicroCluster mc, std::span<const double> point, Timestamp now) {
    check_dims(point, mc);
    mc.members.append_row(point);
    mc.count += 1;
    mc.last_assigned = std::max(now, mc.created_at);
    for (std::size_t h = 0; h < mc.dims(); ++h) {
        double sum = 0.0;
        for (std::size_t r = 0; r < mc.members.rows(); ++r) sum += mc.members(r, h);
        mc.centroid[h] = sum / static_cast<double>(mc.count);
    }
    mc.density = static_cast<double>(mc.count) / box_volume(mc.spans);
    return mc;
}

double forgetting_factor(Timestamp now, Timestamp last_assigned, const ForgettingConfig& cfg) {
    const double elapsed = static_cast<double>(now - last_assigned) / cfg.time_unit_seconds;
    return std::exp(-cfg.rate * elapsed);
}

std::vector<double> discounted_densities(std::span<const MicroCluster> mcs, Timestamp now,
                                         const ForgettingConfig& cfg) {
    std::vector<double> out;
    out.reserve(mcs.size());
    for (const auto& mc : mcs) out.push_back(mc.density * forgetting_factor(now, mc.last_assigned, cfg));
    return out;
}

std::vector<DensityLabel> classify_densities(std::span<const double> densities, DenseCut cut) {
    std::vector<DensityLabel> labels;
    if (densities.empty()) return labels;
    const double median = median_of({densities.begin(), densities.end()});
    const double mean =
        std::accumulate(densities.begin(), densities.end(), 0.0) / static_cast<double>(densities.size());
    labels.reserve(densities.size());
    for (double d : densities) {
        if (d < median)
            labels.push_back(DensityLabel::LowDense);
        else if (cut == DenseCut::Median || d >= mean)
            labels.push_back(DensityLabel::Dense);
        else
            labels.push_back(DensityLabel::SemiDense);
    }
    return labels;
}

std::vector<DensityLabel> classify_density(std::span<const MicroCluster> mcs, Timestamp now,
                                           const ForgettingConfig& cfg, DenseCut cut) {
    const auto d = discounted_densities(mcs, now, cfg);
    return classify_densities(d, cut);
}

bool boxes_connected(const MicroCluster& a, const MicroCluster& b, std::size_t max_disjoint) {
    if (a.dims() != b.dims()) throw DimensionError("micro-clusters differ in dimensionality");
    std::size_t disjoint = 0;
    for (std::size_t h = 0; h < a.dims(); ++h) {
        // closed boxes [O - U/2, O + U/2]
        const double reach = 0.5 * (a.spans[h] + b.spans[h]);
        if (std::abs(a.centroid[h] - b.centroid[h]) > reach) ++disjoint;
    }
    return disjoint <= max_disjoint;
}

double DynamicCluster::mean_density() const {
    if (densities.empty()) return 0.0;
    return std::accumulate(densities.begin(), densities.end(), 0.0) / static_cast<double>(densities.size());
}

std::vector<double> DynamicCluster::centroid() const {
    if (members.empty()) return {};
    std::vector<double> c(members.front().dims(), 0.0);
    for (const auto& mc : members)
        for (std::size_t h = 0; h < c.size(); ++h) c[h] += mc.centroid[h];
    for (double& v : c) v /= static_cast<double>(members.size());
    return c;
}

std::vector<DynamicCluster> connected_components(std::span<const MicroCluster> mcs,
                                                 std::span<const DensityLabel> labels,
                                                 std::span<const double> densities, std::size_t max_disjoint,
                                                 std::size_t interval) {
    if (labels.size() != mcs.size() || densities.size() != mcs.size())
        throw DimensionError("labels/densities must match the micro-cluster count");
    const std::size_t k = mcs.size();
    std::vector<int> component(k, -1);
    std::vector<DynamicCluster> out;
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < k; ++s) {
        if (component[s] >= 0 || labels[s] == DensityLabel::LowDense) continue;
        std::vector<std::size_t> members;
        bool has_dense = false;
        component[s] = next;
        stack.assign(1, s);
        while (!stack.empty()) {
            const std::size_t a = stack.back();
            stack.pop_back();
            members.push_back(a);
            has_dense = has_dense || labels[a] == DensityLabel::Dense;
            for (std::size_t b = 0; b < k; ++b) {
                if (component[b] >= 0 || labels[b] == DensityLabel::LowDense) continue;
                if (boxes_connected(mcs[a], mcs[b], max_disjoint)) {
                    component[b] = next;
                    stack.push_back(b);
                }
            }
        }
        ++next;
        if (!has_dense) continue;
        std::sort(members.begin(), members.end());
        DynamicCluster c;
        c.interval = interval;
        c.index = out.size() + 1;
        for (std::size_t id : members) {
            c.member_ids.push_back(id);
            c.members.push_back(mcs[id]);
            c.densities.push_back(densities[id]);
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::optional<std::size_t> densest_cluster(std::span<const DynamicCluster> clusters) {
    std::optional<std::size_t> best;
    double best_density = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < clusters.size(); ++l) {
        const double d = clusters[l].mean_density();
        if (d > best_density) {
            best_density = d;
            best = l;
        }
    }
    return best;
}

double FeatureScaler::forward(std::size_t h, double v) const {
    if (identity()) return v;
    const double range = hi[h] - lo[h];
    if (range <= 0.0) return v - lo[h];
    return 2.0 * (v - lo[h]) / range - 1.0;
}

double FeatureScaler::inverse(std::size_t h, double v) const {
    if (identity()) return v;
    const double range = hi[h] - lo[h];
    if (range <= 0.0) return v + lo[h];
    return (v + 1.0) * range / 2.0 + lo[h];
}

std::vector<double> FeatureScaler::forward(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t h = 0; h < v.size(); ++h) out[h] = forward(h, v[h]);
    return out;
}

std::vector<double> FeatureScaler::inverse(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t h = 0; h < v.size(); ++h) out[h] = inverse(h, v[h]);
    return out;
}

RowMatrix Trajectory::raw_rows() const {
    RowMatrix out(rows.rows(), rows.cols());
    for (std::size_t j = 0; j < rows.rows(); ++j)
        for (std::size_t h = 0; h < rows.cols(); ++h) out(j, h) = scaler.inverse(h, rows(j, h));
    return out;
}

IntervalClustering cluster_interval(const IntervalPoints& interval, std::span<const double> spans,
                                    const ClusteringConfig& cfg) {
    IntervalClustering out;
    // Every interval starts from an empty micro-cluster set.
    for (const TimedPoint& p : interval.points) {
        if (const auto k = assign(p.features, out.micro_clusters))
            out.micro_clusters[*k] = update_on_assign(std::move(out.micro_clusters[*k]), p.features, p.time);
        else
            out.micro_clusters.push_back(MicroCluster::seed(p.features, spans, p.time));
    }
    if (out.micro_clusters.empty()) return out;
    out.densities = discounted_densities(out.micro_clusters, interval.wake_up, cfg.forgetting);
    out.labels = classify_densities(out.densities, cfg.dense_cut);
    out.clusters = connected_components(out.micro_clusters, out.labels, out.densities, cfg.max_disjoint_dims,
                                        interval.index);
    out.densest = densest_cluster(out.clusters);
    return out;
}

Trajectory build_trajectory(const std::vector<IntervalPoints>& intervals, const ClusteringConfig& cfg) {
    if (!(cfg.span_fraction > 0.0)) throw ValidationError("span fraction must be positive");

    std::size_t m = 0;
    for (const auto& iv : intervals)
        for (const auto& p : iv.points) {
            if (m == 0) m = p.features.size();
            if (p.features.size() != m)
                throw DimensionError("interval " + std::to_string(iv.index) + " has a point with " +
                                     std::to_string(p.features.size()) + " features, expected " +
                                     std::to_string(m));
        }

    Trajectory q;
    q.rows = RowMatrix(intervals.size(), m);
    q.carried.assign(intervals.size(), false);
    if (m == 0) {
        std::fill(q.carried.begin(), q.carried.end(), true);
        return q;
    }

    // Warm-up statistics: feature ranges over the first intervals.
    auto fit_range = [&](std::size_t limit) {
        std::vector<double> lo(m, std::numeric_limits<double>::infinity());
        std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
        bool any = false;
        for (std::size_t j = 0; j < std::min(limit, intervals.size()); ++j)
            for (const auto& p : intervals[j].points) {
                any = true;
                for (std::size_t h = 0; h < m; ++h) {
                    lo[h] = std::min(lo[h], p.features[h]);
                    hi[h] = std::max(hi[h], p.features[h]);
                }
            }
        return any ? std::optional{std::pair{lo, hi}} : std::nullopt;
    };
    auto range = fit_range(std::max<std::size_t>(cfg.warmup_intervals, 1));
    if (!range) {
        spdlog::warn("no points inside the {}-interval warm-up; fitting feature ranges on the whole series",
                     cfg.warmup_intervals);
        range = fit_range(intervals.size());
    }
    auto [lo, hi] = *range;
    if (cfg.normalise) q.scaler = FeatureScaler{lo, hi};

    q.spans.resize(m);
    for (std::size_t h = 0; h < m; ++h) {
        const double width = q.scaler.forward(h, hi[h]) - q.scaler.forward(h, lo[h]);
        q.spans[h] = std::max(cfg.span_fraction * width, cfg.min_span);
    }

    IntervalPoints scaled;
    for (std::size_t j = 0; j < intervals.size(); ++j) {
        const IntervalPoints& iv = intervals[j];
        scaled.index = iv.index;
        scaled.wake_up = iv.wake_up;
        scaled.points.clear();
        for (const auto& p : iv.points) scaled.points.push_back({q.scaler.forward(p.features), p.time});

        const IntervalClustering result = cluster_interval(scaled, q.spans, cfg);
        auto row = q.rows.row(j);
        if (result.densest) {
            const auto c = result.clusters[*result.densest].centroid();
            std::copy(c.begin(), c.end(), row.begin());
        } else {
            q.carried[j] = true;
            if (j == 0) {
                spdlog::warn("interval {} has no dense cluster and no predecessor; using a zero row", iv.index);
                std::fill(row.begin(), row.end(), 0.0);
            } else {
                const auto prev = q.rows.row(j - 1);
                std::copy(prev.begin(), prev.end(), row.begin());
            }
        }
    }
    return q;
}

Trajectory build_trajectory(const std::vector<DailyFeatureRow>& rows, const ClusteringConfig& cfg) {
    std::vector<IntervalPoints> intervals;
    intervals.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        // Daily rows carry no intra-interval clock, so each point is stamped
        // at its interval's wake-up time.
        const auto wake = static_cast<Timestamp>(j + 1) * kSecondsPerDay;
        IntervalPoints iv{rows[j].interval_index == 0 ? j + 1 : rows[j].interval_index, wake, {}};
        if (rows[j].features) iv.points.push_back({*rows[j].features, wake});
        intervals.push_back(std::move(iv));
    }
    return build_trajectory(intervals, cfg);
}

void save_trajectory_csv(const Trajectory& q, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "interval";
    for (std::size_t h = 1; h <= q.feature_dim(); ++h) out << ",q" << h;
    out << '\n';
    for (std::size_t j = 0; j < q.interval_count(); ++j) {
        out << j;
        for (double v : q.rows.row(j)) out << ',' << csv::format_double(v);
        out << '\n';
    }
    if (!out) throw ValidationError("write failed", path.string());
}

RowMatrix load_trajectory_csv(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    RowMatrix m;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    bool saw_header = false;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = csv::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = csv::split(view);
        if (!saw_header) {
            saw_header = true;
            if (fields.size() < 2 || csv::trim(fields[0]) != "interval")
                throw ValidationError("expected header 'interval,q1,...'", path.string(), lineno);
            width = fields.size() - 1;
            m = RowMatrix(0, width);
            continue;
        }
        if (fields.size() != width + 1)
            throw ValidationError("expected " + std::to_string(width + 1) + " fields", path.string(), lineno);
        std::size_t idx = 0;
        if (!csv::parse_int(fields[0], idx) || idx != m.rows())
            throw ValidationError("intervals must be consecutive and 0-based", path.string(), lineno);
        values.assign(width, 0.0);
        for (std::size_t h = 0; h < width; ++h)
            if (!csv::parse_double(fields[h + 1], values[h]))
                throw ValidationError("q" + std::to_string(h + 1) + " is not a number", path.string(), lineno);
        m.append_row(values);
    }
    if (!saw_header) throw ValidationError("missing header", path.string());
    return m;
}

void save_trajectory_json(const Trajectory& q, const ClusteringConfig& cfg, const std::filesystem::path& path) {
    nlohmann::json j;
    j["n"] = q.interval_count();
    j["m"] = q.feature_dim();
    j["config"] = {{"span_fraction", cfg.span_fraction},
                   {"min_span", cfg.min_span},
                   {"max_disjoint_dims", cfg.max_disjoint_dims},
                   {"warmup_intervals", cfg.warmup_intervals},
                   {"normalise", cfg.normalise},
                   {"dense_cut", cfg.dense_cut == DenseCut::Mean ? "mean" : "median"},
                   {"forgetting_rate", cfg.forgetting.rate},
                   {"forgetting_time_unit_seconds", cfg.forgetting.time_unit_seconds}};
    j["spans"] = q.spans;
    j["scaler"] = {{"lo", q.scaler.lo}, {"hi", q.scaler.hi}};
    j["rows"] = nlohmann::json::array();
    for (std::size_t r = 0; r < q.interval_count(); ++r) {
        const auto row = q.rows.row(r);
        j["rows"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["carried"] = q.carried;
    auto out = csv::open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace dynamo
