#pragma once

// Per-interval micro-clustering, density classification with forgetting,
// connected-cluster formation and densest-cluster trajectory assembly.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dynamo/events.hpp"
#include "dynamo/matrix.hpp"

namespace dynamo {

enum class DensityLabel { Dense, SemiDense, LowDense };

const char* to_string(DensityLabel label);

// How the Dense/SemiDense cut is drawn above the median density.
enum class DenseCut {
    Mean,    // >= mean and >= median -> Dense, >= median only -> SemiDense
    Median,  // >= median -> Dense, no SemiDense class
};

struct MicroCluster {
    std::size_t count = 0;           // p
    RowMatrix members;               // F, one row per assigned point
    Timestamp created_at = 0;        // alpha
    Timestamp last_assigned = 0;     // beta
    double density = 0.0;            // d = p / prod(spans)
    std::vector<double> centroid;    // O, column means of F
    std::vector<double> spans;       // U, fixed per dimension

    static MicroCluster seed(std::span<const double> point, std::span<const double> spans, Timestamp now);
    std::size_t dims() const noexcept { return centroid.size(); }
};

double box_volume(std::span<const double> spans);

// |point[h] - O[h]| < U[h] / 2 in every dimension.
bool reachable(std::span<const double> point, const MicroCluster& mc);

// Closest reachable candidate by L1 distance; ties go to the lowest index.
std::optional<std::size_t> assign(std::span<const double> point, std::span<const MicroCluster> candidates);

MicroCluster update_on_assign(MicroCluster mc, std::span<const double> point, Timestamp now);

struct ForgettingConfig {
    double rate = 0.02;
    // Elapsed time (now - beta) is measured in units of this many seconds.
    double time_unit_seconds = 3600.0;
};

// exp(-rate * (now - last_assigned)); in (0, 1], equal to 1 iff now == last_assigned.
double forgetting_factor(Timestamp now, Timestamp last_assigned, const ForgettingConfig& cfg = {});

std::vector<double> discounted_densities(std::span<const MicroCluster> mcs, Timestamp now,
                                         const ForgettingConfig& cfg = {});

// Labels relative to the median (and mean) of the given densities.
std::vector<DensityLabel> classify_densities(std::span<const double> densities, DenseCut cut = DenseCut::Mean);

std::vector<DensityLabel> classify_density(std::span<const MicroCluster> mcs, Timestamp now,
                                           const ForgettingConfig& cfg = {}, DenseCut cut = DenseCut::Mean);

// True when the closed boxes centred at the two centroids overlap in at
// least dims - max_disjoint dimensions.
bool boxes_connected(const MicroCluster& a, const MicroCluster& b, std::size_t max_disjoint);

struct DynamicCluster {
    std::size_t interval = 0;             // 1-based interval index
    std::size_t index = 0;                // 1-based cluster index within the interval
    std::vector<std::size_t> member_ids;  // positions in the interval's micro-cluster list
    std::vector<MicroCluster> members;
    std::vector<double> densities;        // discounted member densities

    double mean_density() const;
    std::vector<double> centroid() const;  // mean of member centroids
};

// Connected groups of Dense/SemiDense micro-clusters; LowDense boxes take no
// part in the graph. A group is emitted only when it holds a Dense member.
std::vector<DynamicCluster> connected_components(std::span<const MicroCluster> mcs,
                                                 std::span<const DensityLabel> labels,
                                                 std::span<const double> densities, std::size_t max_disjoint,
                                                 std::size_t interval = 0);

// Argmax of mean member density, lowest index on ties; nullopt when empty.
std::optional<std::size_t> densest_cluster(std::span<const DynamicCluster> clusters);

struct ClusteringConfig {
    double span_fraction = 0.06;
    double min_span = 1e-9;
    std::size_t max_disjoint_dims = 0;  // theta
    std::size_t warmup_intervals = 15;
    bool normalise = true;
    DenseCut dense_cut = DenseCut::Mean;
    ForgettingConfig forgetting{};
};

// Per-feature min-max scaling onto [-1, 1] fitted over a warm-up range.
// A feature that is constant during warm-up is only shifted.
struct FeatureScaler {
    std::vector<double> lo;
    std::vector<double> hi;

    bool identity() const noexcept { return lo.empty(); }
    double forward(std::size_t h, double v) const;
    double inverse(std::size_t h, double v) const;
    std::vector<double> forward(std::span<const double> v) const;
    std::vector<double> inverse(std::span<const double> v) const;
};

struct TimedPoint {
    std::vector<double> features;
    Timestamp time = 0;
};

struct IntervalPoints {
    std::size_t index = 0;  // 1-based
    Timestamp wake_up = 0;  // interval end, used as "now" for forgetting
    std::vector<TimedPoint> points;
};

struct Trajectory {
    RowMatrix rows;                // Q, n x m, in scaled units
    FeatureScaler scaler;
    std::vector<bool> carried;     // row j copied from row j-1 (or zero-filled)
    std::vector<double> spans;     // micro-cluster spans used

    std::size_t interval_count() const noexcept { return rows.rows(); }
    std::size_t feature_dim() const noexcept { return rows.cols(); }
    RowMatrix raw_rows() const;    // rows mapped back to feature units
};

// Result of clustering one interval, exposed for inspection and tests.
struct IntervalClustering {
    std::vector<MicroCluster> micro_clusters;
    std::vector<double> densities;
    std::vector<DensityLabel> labels;
    std::vector<DynamicCluster> clusters;
    std::optional<std::size_t> densest;
};

IntervalClustering cluster_interval(const IntervalPoints& interval, std::span<const double> spans,
                                    const ClusteringConfig& cfg);

Trajectory build_trajectory(const std::vector<IntervalPoints>& intervals, const ClusteringConfig& cfg = {});
Trajectory build_trajectory(const std::vector<DailyFeatureRow>& rows, const ClusteringConfig& cfg = {});

void save_trajectory_csv(const Trajectory& q, const std::filesystem::path& path);
RowMatrix load_trajectory_csv(const std::filesystem::path& path);
void save_trajectory_json(const Trajectory& q, const ClusteringConfig& cfg, const std::filesystem::path& path);

}  // namespace dynamo
