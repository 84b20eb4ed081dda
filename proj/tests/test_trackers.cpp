#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dynamo/trackers.hpp"

using namespace dynamo;

namespace {

constexpr double kTol = 1e-9;

CentroidWindow whole(const RowMatrix& q) { return CentroidWindow::slice(q, 1, q.rows()); }

RowMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::normal_distribution<double> g(0.0, 2.0);
    RowMatrix q(n, m);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t h = 0; h < m; ++h) q(j, h) = g(rng);
    return q;
}

}  // namespace

TEST_CASE("volume of the bounding box") {
    const RowMatrix q = RowMatrix::from_rows({{0, 0}, {1, 2}, {3, 1}});
    CHECK(psi1_volume(whole(q)) == doctest::Approx(6.0).epsilon(kTol));
    CHECK(psi1_volume(CentroidWindow::slice(q, 2, 2)) == 0.0);
    CHECK(psi1_volume(whole(RowMatrix::from_rows({{0, 0}, {0, 5}}))) == 0.0);
    CHECK(psi1_volume(CentroidWindow{}) == 0.0);
}

TEST_CASE("L2 norm of the spans") {
    const RowMatrix q = RowMatrix::from_rows({{0, 0}, {1, 2}, {3, 1}});
    CHECK(std::abs(psi2_l2(whole(q)) - std::sqrt(13.0)) < kTol);
    CHECK(std::abs(psi2_l2(whole(q)) - 3.6056) < 1e-4);
    CHECK(psi2_l2(CentroidWindow::slice(q, 3, 3)) == 0.0);
    const RowMatrix square = RowMatrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    CHECK(std::abs(psi2_l2(whole(square)) - std::sqrt(2.0)) < kTol);
}

TEST_CASE("span differences between two windows") {
    const RowMatrix a = RowMatrix::from_rows({{0, 0}, {2, 2}});
    const RowMatrix b = RowMatrix::from_rows({{1, 1}, {1, 1}});
    const RowMatrix g = psi3_span_diff(whole(a), whole(b));
    REQUIRE(g.rows() == 2);
    REQUIRE(g.cols() == 2);
    CHECK(std::abs(g(0, 0) - 1.0) < kTol);
    CHECK(std::abs(g(0, 1) + 1.0) < kTol);
    CHECK(std::abs(g(1, 0) - 1.0) < kTol);
    CHECK(std::abs(g(1, 1) + 1.0) < kTol);
    CHECK(psi3_span_diff(whole(a), whole(a)) == RowMatrix(2, 2, 0.0));
    CHECK(psi3_span_diff(CentroidWindow{}, whole(a)) == RowMatrix(2, 2, 0.0));

    const auto [gmax, gmin] = psi4_span_diff_l2(whole(a), whole(b));
    CHECK(std::abs(gmax - std::sqrt(2.0)) < kTol);
    CHECK(std::abs(gmin - std::sqrt(2.0)) < kTol);
    const auto same = psi4_span_diff_l2(whole(a), whole(a));
    CHECK(same.first == 0.0);
    CHECK(same.second == 0.0);

    const RowMatrix c = RowMatrix::from_rows({{0}, {4}});
    const RowMatrix d = RowMatrix::from_rows({{1}, {1}});
    const auto one = psi4_span_diff_l2(whole(c), whole(d));
    CHECK(std::abs(one.first - 3.0) < kTol);
    CHECK(std::abs(one.second - 1.0) < kTol);
}

TEST_CASE("windows of different width are rejected") {
    const RowMatrix a = RowMatrix::from_rows({{0, 0}, {2, 2}});
    const RowMatrix b = RowMatrix::from_rows({{1}, {1}});
    CHECK_THROWS_AS(psi3_span_diff(whole(a), whole(b)), DimensionError);
    CHECK_THROWS_AS(CentroidWindow::slice(a, 0, 1), DimensionError);
    CHECK_THROWS_AS(CentroidWindow::slice(a, 2, 3), DimensionError);
}

TEST_CASE("tracker readings carry their shape") {
    const RowMatrix a = RowMatrix::from_rows({{0, 0}, {2, 2}});
    const RowMatrix b = RowMatrix::from_rows({{1, 1}, {1, 1}});
    const auto trackers = default_trackers();
    REQUIRE(trackers.size() == 4);
    const TrackReading r1 = trackers[0].track(whole(b), whole(a));
    CHECK(r1.shape == ReadingShape::Scalar);
    CHECK(r1.values == std::vector<double>{4.0});
    const TrackReading r3 = trackers[2].track(whole(a), whole(b));
    CHECK(r3.shape == ReadingShape::Matrix);
    CHECK(r3.values == std::vector<double>{1, -1, 1, -1});
    const TrackReading r4 = trackers[3].track(CentroidWindow{}, whole(b));
    CHECK(r4.shape == ReadingShape::Pair);
    CHECK(r4.values == std::vector<double>{0, 0});
}

TEST_CASE("property: volume and norm ignore translation") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> shift(-100, 100);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 5;
        RowMatrix q = random_matrix(rng, 2 + trial % 9, m);
        const double v = psi1_volume(whole(q)), l = psi2_l2(whole(q));
        std::vector<double> c(m);
        for (auto& x : c) x = shift(rng);
        for (std::size_t j = 0; j < q.rows(); ++j)
            for (std::size_t h = 0; h < m; ++h) q(j, h) += c[h];
        CHECK(psi1_volume(whole(q)) == doctest::Approx(v).epsilon(1e-9));
        CHECK(psi2_l2(whole(q)) == doctest::Approx(l).epsilon(1e-9));
    }
}

TEST_CASE("property: uniform scaling by c scales volume by c^m and squared norm by c^2") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> scale(0.1, 10);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 5;
        RowMatrix q = random_matrix(rng, 2 + trial % 9, m);
        const double v = psi1_volume(whole(q)), l = psi2_l2(whole(q));
        const double c = scale(rng);
        for (std::size_t j = 0; j < q.rows(); ++j)
            for (std::size_t h = 0; h < m; ++h) q(j, h) *= c;
        CHECK(psi1_volume(whole(q)) == doctest::Approx(v * std::pow(c, double(m))).epsilon(1e-9));
        CHECK(psi2_l2(whole(q)) * psi2_l2(whole(q)) == doctest::Approx(l * l * c * c).epsilon(1e-9));
    }
}

TEST_CASE("property: span differences vanish on self and flip sign on swap") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + trial % 5;
        const RowMatrix a = random_matrix(rng, 1 + trial % 7, m);
        const RowMatrix b = random_matrix(rng, 1 + trial % 5, m);
        CHECK(psi3_span_diff(whole(a), whole(a)) == RowMatrix(m, 2, 0.0));
        const auto self = psi4_span_diff_l2(whole(b), whole(b));
        CHECK(self.first == 0.0);
        CHECK(self.second == 0.0);
        const RowMatrix ab = psi3_span_diff(whole(a), whole(b));
        const RowMatrix ba = psi3_span_diff(whole(b), whole(a));
        for (std::size_t h = 0; h < m; ++h)
            for (std::size_t k = 0; k < 2; ++k) CHECK(ab(h, k) == -ba(h, k));
    }
}
