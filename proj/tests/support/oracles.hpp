#pragma once

// Independent reference implementations used by the tests. They work on
// plain nested vectors and share no code with the library.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

struct DetectorParams {
    std::size_t lambda = 4;
    std::size_t ell = 16;
    std::size_t delta = 4;
    double sigma = 0.3422;
    bool all_components = false;  // false: a test holds when any component holds
};

// Straight transcription of the two-window detector with the four hyperbox
// trackers and the two divergence tests. Returns 0/1 per interval.
std::vector<int> detect(const Rows& q, const DetectorParams& p);

// Empirical CDF sweep over every pooled point.
double ks_statistic(const std::vector<double>& a, const std::vector<double>& b);

struct Box {
    std::vector<double> centre;
    std::vector<double> spans;
};

enum Label { Dense = 0, Semi = 1, Low = 2 };

struct DensestChoice {
    bool found = false;
    std::vector<std::size_t> members;  // ascending ids of the densest group
    double mean_density = 0.0;
    std::size_t groups = 0;            // groups holding a Dense member
};

// Transitive closure over non-Low boxes, then argmax of mean member density
// among groups with a Dense member; ties keep the group with the lowest id.
DensestChoice densest(const std::vector<Box>& boxes, const std::vector<int>& labels,
                      const std::vector<double>& densities, std::size_t max_disjoint);

inline Rows random_rows(std::mt19937_64& rng, std::size_t n, std::size_t m, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Rows q(n, std::vector<double>(m));
    for (auto& r : q)
        for (auto& v : r) v = g(rng);
    return q;
}

}  // namespace oracle
