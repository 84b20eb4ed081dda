#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dynamo/baselines.hpp"
#include "support/oracles.hpp"

using namespace dynamo;

namespace {

using V = std::vector<double>;

V normal_sample(std::mt19937_64& rng, std::size_t n, double shift = 0.0) {
    std::normal_distribution<double> g(shift, 1.0);
    V out(n);
    for (auto& v : out) v = g(rng);
    return out;
}

RowMatrix column_matrix(const V& v) {
    RowMatrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

}  // namespace

TEST_CASE("KS statistic on hand-checked samples") {
    CHECK(ks_two_sample(V{1, 2, 3}, V{3, 1, 2}).statistic == 0.0);
    CHECK(ks_two_sample(V{1, 2, 3}, V{3, 1, 2}).p_value == 1.0);
    CHECK(ks_two_sample(V{0, 0, 0}, V{1, 1, 1}).statistic == 1.0);
    const KSResult r = ks_two_sample(V{1, 2, 3, 4}, V{3, 4, 5, 6});
    CHECK(r.statistic == 0.5);
    CHECK(r.n1 == 4);
    CHECK(r.n2 == 4);
    CHECK(r.p_value > 0.05);
    CHECK_THROWS_AS(ks_two_sample(V{}, V{1}), ValidationError);
}

TEST_CASE("Kolmogorov survival function") {
    CHECK(kolmogorov_survival(0.0) == 1.0);
    // reference values of 1 - K(x)
    CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.963945).epsilon(1e-5));
    CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.269999).epsilon(1e-5));
    CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049442).epsilon(1e-4));
    CHECK(kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(1e-2));
    // both series agree where they meet
    CHECK(std::abs(kolmogorov_survival(1.18 - 1e-9) - kolmogorov_survival(1.18 + 1e-9)) < 1e-8);
    double last = 1.0;
    for (double x = 0.05; x < 4.0; x += 0.05) {
        const double s = kolmogorov_survival(x);
        CHECK(s <= last);
        last = s;
    }
}

TEST_CASE("property: D matches the brute-force ECDF sweep") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_int_distribution<int> small(0, 5);
    for (int trial = 0; trial < 1000; ++trial) {
        V a = normal_sample(rng, size(rng)), b = normal_sample(rng, size(rng), 0.5);
        if (trial % 3 == 0) {
            for (auto& v : a) v = small(rng);
            for (auto& v : b) v = small(rng);
        }
        CHECK(ks_two_sample(a, b).statistic == oracle::ks_statistic(a, b));
    }
}

TEST_CASE("property: D is symmetric and invariant under monotone transforms") {
    std::mt19937_64 rng(78);
    std::uniform_int_distribution<std::size_t> size(2, 40);
    for (int trial = 0; trial < 300; ++trial) {
        V a = normal_sample(rng, size(rng)), b = normal_sample(rng, size(rng), 0.3);
        const double d = ks_two_sample(a, b).statistic;
        CHECK(ks_two_sample(b, a).statistic == d);
        V ea = a, eb = b;
        for (auto& v : ea) v = std::exp(v) * 3.0 + 1.0;
        for (auto& v : eb) v = std::exp(v) * 3.0 + 1.0;
        CHECK(ks_two_sample(ea, eb).statistic == d);
    }
}

TEST_CASE("false rejections on stationary noise stay near alpha") {
    std::mt19937_64 rng(79);
    int rejected = 0;
    const int trials = 4000;
    for (int i = 0; i < trials; ++i)
        if (ks_two_sample(normal_sample(rng, 15), normal_sample(rng, 15)).rejects(0.01)) ++rejected;
    const double rate = double(rejected) / trials;
    CHECK(rate >= 0.005);
    CHECK(rate <= 0.02);
}

TEST_CASE("fair-coin labels") {
    CHECK(kis(0, 1).predicted.empty());
    CHECK(kis(100, 5).predicted == kis(100, 5).predicted);
    CHECK(kis(100, 5).predicted != kis(100, 6).predicted);
    // mean label over many seeds sits at 1/2 within three standard errors
    double total = 0.0;
    const std::size_t n = 1000, runs = 30;
    for (std::uint64_t s = 0; s < runs; ++s)
        for (auto v : kis(n, s).predicted) total += v;
    const double mean = total / double(n * runs);
    CHECK(std::abs(mean - 0.5) < 3.0 * 0.5 / std::sqrt(double(n * runs)));
}

TEST_CASE("sliding KS windows flag a step once it enters the detection half") {
    std::mt19937_64 rng(80);
    V series = normal_sample(rng, 200);
    for (std::size_t i = 100; i < 200; ++i) series[i] += 5.0;
    const RowMatrix q = column_matrix(series);
    const DriftLabels sw = ikssw(q, {30, 10});
    REQUIRE(sw.size() == 200);
    CHECK(std::count(sw.predicted.begin(), sw.predicted.begin() + 90, 1) < 15);
    CHECK(std::count(sw.predicted.begin() + 100, sw.predicted.begin() + 130, 1) > 0);
    const DriftLabels bdd = iks_bdd(q, {30, 10});
    CHECK(std::count(bdd.predicted.begin() + 120, bdd.predicted.end(), 1) >= 70);
}

TEST_CASE("KS window configuration errors") {
    const RowMatrix q(40, 2);
    CHECK_THROWS_AS(ikssw(q, {30, 10}), ValidationError);
    CHECK_THROWS_AS(iks_bdd(q, {30, 10}), ValidationError);
    CHECK_THROWS_AS(ikssw(q, {10, 0}), ValidationError);
    CHECK_THROWS_AS(ikssw(q, {9, 2}), ValidationError);
    CHECK_NOTHROW(ikssw(q, {20, 5}));
}

TEST_CASE("row-mean combination runs a single test") {
    std::mt19937_64 rng(81);
    RowMatrix a(20, 2), b(20, 2);
    std::normal_distribution<double> g(0, 1);
    for (std::size_t i = 0; i < 20; ++i) {
        a(i, 0) = g(rng);
        a(i, 1) = g(rng);
        b(i, 0) = g(rng) + 10.0;  // column 0 moves up, column 1 moves down
        b(i, 1) = g(rng) - 10.0;
    }
    const RowBlock ra(a, 0, 20), rb(b, 0, 20);
    CHECK(ks_rows_reject(ra, rb, 0.01, FeatureCombination::AnyFeature));
    CHECK_FALSE(ks_rows_reject(ra, rb, 0.01, FeatureCombination::RowMean));
}
