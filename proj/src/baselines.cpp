#include "dynamo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dynamo/error.hpp"

namespace dynamo {

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Small-argument form: 1 - sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2)).
        const double w = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double odd = 2.0 * k - 1.0;
            cdf += std::exp(-odd * odd * w);
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("KS test needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::ranges::sort(x);
    std::ranges::sort(y);
    const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (j == y.size()) v = x[i];
        else if (i == x.size()) v = y[j];
        else v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    const double ne = n1 * n2 / (n1 + n2);
    const double root = std::sqrt(ne);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d), x.size(), y.size()};
}

DriftLabels kis(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    DriftLabels labels;
    labels.predicted.resize(n);
    for (auto& v : labels.predicted) v = coin(rng) ? 1 : 0;
    return labels;
}

void KSWindowConfig::validate(std::size_t n) const {
    auto fail = [&](const std::string& what) {
        throw ValidationError("KS window config: " + what + " (n = " + std::to_string(n) + ")");
    };
    if (delta < 1) fail("delta must be >= 1");
    if (ell < 4 || ell % 2 != 0) fail("ell must be even and >= 4, got " + std::to_string(ell));
    if (ell > n / 2) fail("ell must be <= n/2, got " + std::to_string(ell));
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
}

namespace {

std::vector<double> column(const RowBlock& block, std::size_t h) {
    std::vector<double> out(block.rows());
    for (std::size_t r = 0; r < block.rows(); ++r) out[r] = block(r, h);
    return out;
}

std::vector<double> row_means(const RowBlock& block) {
    std::vector<double> out(block.rows(), 0.0);
    for (std::size_t r = 0; r < block.rows(); ++r) {
        for (double v : block.row(r)) out[r] += v;
        out[r] /= static_cast<double>(block.cols());
    }
    return out;
}

}  // namespace

bool ks_rows_reject(const RowBlock& a, const RowBlock& b, double alpha, FeatureCombination combine) {
    if (a.cols() != b.cols()) throw DimensionError("row blocks differ in feature dimension");
    if (combine == FeatureCombination::RowMean) return ks_two_sample(row_means(a), row_means(b)).rejects(alpha);
    for (std::size_t h = 0; h < a.cols(); ++h)
        if (ks_two_sample(column(a, h), column(b, h)).rejects(alpha)) return true;
    return false;
}

DriftLabels ikssw(const RowMatrix& q, const KSWindowConfig& cfg) {
    const std::size_t n = q.rows();
    cfg.validate(n);
    const std::size_t half = cfg.ell / 2;
    DriftLabels labels;
    labels.predicted.assign(n, 0);
    for (std::size_t t = 1; t + cfg.ell - 1 <= n; t += cfg.delta) {
        if (ks_rows_reject(RowBlock(q, t - 1, half), RowBlock(q, t - 1 + half, half), cfg.alpha, cfg.combine))
            std::fill_n(labels.predicted.begin() + static_cast<std::ptrdiff_t>(t - 1 + half), half, 1);
    }
    return labels;
}

DriftLabels iks_bdd(const RowMatrix& q, const KSWindowConfig& cfg) {
    const std::size_t n = q.rows();
    cfg.validate(n);
    const std::size_t half = cfg.ell / 2;
    DriftLabels labels;
    labels.predicted.assign(n, 0);
    const RowBlock reference(q, 0, half);
    for (std::size_t t = half + 1; t + half - 1 <= n; t += cfg.delta) {
        if (ks_rows_reject(reference, RowBlock(q, t - 1, half), cfg.alpha, cfg.combine))
            std::fill_n(labels.predicted.begin() + static_cast<std::ptrdiff_t>(t - 1), half, 1);
    }
    return labels;
}

}  // namespace dynamo
