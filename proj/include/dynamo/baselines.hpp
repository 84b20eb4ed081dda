#pragma once

// Two-sample Kolmogorov-Smirnov test and the KS-window comparison detectors.

#include <cstddef>
#include <cstdint>
#include <span>

#include "dynamo/detector.hpp"
#include "dynamo/matrix.hpp"

namespace dynamo {

struct KSResult {
    double statistic = 0.0;  // D = sup |F1 - F2|
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    bool rejects(double alpha) const noexcept { return p_value < alpha; }
};

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

// D is exact over the pooled sample points. The p-value is the asymptotic
// Kolmogorov tail at (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D with
// ne = n1 n2 / (n1 + n2). Throws ValidationError on an empty sample.
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Fair-coin labels, one per interval.
DriftLabels kis(std::size_t n, std::uint64_t seed);

enum class FeatureCombination {
    AnyFeature,  // drift when any feature column rejects
    RowMean,     // one test on the per-row mean of the features
};

struct KSWindowConfig {
    std::size_t ell = 30;
    std::size_t delta = 10;
    double alpha = 0.01;
    FeatureCombination combine = FeatureCombination::AnyFeature;

    void validate(std::size_t n) const;
};

// Reference [t, t+ell/2-1] and detection [t+ell/2, t+ell-1] slide together by
// delta; a rejected detection window is labelled.
DriftLabels ikssw(const RowMatrix& q, const KSWindowConfig& cfg);

// Reference fixed at [1, ell/2]; the detection window slides from ell/2+1.
DriftLabels iks_bdd(const RowMatrix& q, const KSWindowConfig& cfg);

// True when the KS test rejects between the two row blocks under `combine`.
bool ks_rows_reject(const RowBlock& a, const RowBlock& b, double alpha, FeatureCombination combine);

}  // namespace dynamo
