#pragma once

// Confusion-matrix metrics, multi-run aggregation, end-to-end runs on
// generated datasets and random-search tuning of the detector.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynamo/baselines.hpp"
#include "dynamo/datagen.hpp"
#include "dynamo/detector.hpp"
#include "dynamo/dynclust.hpp"

namespace dynamo {

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

// f1 = 2TP / (2TP + FP + FN), 0 when the denominator is 0.
// fpr = FP / (FP + TN) and fnr = FN / (FN + TP), each 0 when undefined.
// For an aggregate, f1/fpr/fnr are means over runs and counts are summed.
struct MetricReport {
    Confusion counts;
    double f1 = 0.0, fpr = 0.0, fnr = 0.0;
    double f1_std = 0.0, fpr_std = 0.0, fnr_std = 0.0;
    std::size_t runs = 1;
};

MetricReport score(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
MetricReport score(const DriftLabels& labels);  // needs labels.truth

// Means and sample standard deviations across runs.
MetricReport aggregate(std::span<const MetricReport> runs);

void to_json(nlohmann::json& j, const MetricReport& r);

// Trajectory of the sleep features of a sequence: interval partitioning,
// daily features inside the observation window, then densest-cluster rows.
Trajectory sleep_trajectory(const EventSequence& seq, const ClusteringConfig& ccfg = {},
                            const ObservationWindow& window = {});

struct LabelledTrajectory {
    std::string name;
    RowMatrix q;
    std::vector<std::uint8_t> truth;
};

struct Comparison {
    MetricReport dynamo, kis, ikssw, iks_bdd;
    double seconds_per_run = 0.0;  // mean DynAmo detector time
};

void to_json(nlohmann::json& j, const Comparison& c);

// Generates `runs` datasets with seeds base_seed, base_seed + 1, ..., builds
// their trajectories and scores DynAmo and the baselines on each. The KS
// baselines use the detector's ell and delta.
Comparison compare_on_generated(const GeneratorSpec& spec, std::size_t runs, std::uint64_t base_seed,
                                const DetectorConfig& dcfg, const ClusteringConfig& ccfg = {}, std::size_t jobs = 1);

struct SearchSpace {
    std::size_t lambda_lo = 1, lambda_hi = 180;
    std::size_t ell_lo = 4, ell_hi = 30;
    std::size_t delta_lo = 1, delta_hi = 10;
    double sigma_lo = 0.05, sigma_hi = 0.95;
    std::size_t trials = 100;
    std::uint64_t seed = 0;

    static SearchSpace realistic();  // lambda in [1, 180]
    static SearchSpace synthetic();  // lambda in [1, 20], ell in [4, 20]

    // Narrows the ranges to configs valid for every trajectory of length
    // >= n; throws ValidationError when nothing is left.
    SearchSpace feasible_for(std::size_t n) const;
    void validate() const;
};

struct Trial {
    std::size_t index = 0;
    std::size_t lambda = 0, ell = 0, delta = 0;
    double sigma = 0.0;
    double mean_f1 = 0.0;
    friend bool operator==(const Trial&, const Trial&) = default;
};

struct TuneOptions {
    std::size_t jobs = 1;
    std::optional<DetectorConfig> seed_trial;  // evaluated as trial 0 when set
    DetectorConfig base;                        // supplies trackers, tests and rule
};

struct TuneResult {
    Trial best;
    std::vector<Trial> trials;  // in trial order
};

double mean_f1(std::span<const LabelledTrajectory> bundle, const DetectorConfig& cfg);

// Seeded uniform random search maximising mean F1 over the bundle. The
// first best trial wins ties.
TuneResult tune(std::span<const LabelledTrajectory> bundle, const SearchSpace& space, const TuneOptions& options = {});

DetectorConfig config_of(const Trial& trial, const DetectorConfig& base = {});

// Trial log CSV: `trial,lambda,ell,delta,sigma,mean_f1`.
void save_trial_log(std::span<const Trial> trials, const std::filesystem::path& path);
std::vector<Trial> load_trial_log(const std::filesystem::path& path);

}  // namespace dynamo
