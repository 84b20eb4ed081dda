// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <new>
#include <random>
#include <string>
#include <vector>

#include "dynamo/baselines.hpp"
#include "dynamo/datagen.hpp"
#include "dynamo/detector.hpp"
#include "dynamo/divergence.hpp"
#include "dynamo/dynclust.hpp"
#include "dynamo/eval.hpp"
#include "dynamo/trackers.hpp"
#include "support/oracles.hpp"
#include "support/scratch.hpp"

// Allocation accounting for the memory criterion. Each block carries its size
// in a header so frees can be subtracted.
namespace {

std::atomic<long long> g_live{0};
std::atomic<long long> g_peak{0};
constexpr std::size_t kHeader = alignof(std::max_align_t);

void* counted_alloc(std::size_t size) {
    void* raw = std::malloc(size + kHeader);
    if (!raw) throw std::bad_alloc();
    *static_cast<std::size_t*>(raw) = size;
    const long long now = g_live.fetch_add(static_cast<long long>(size)) + static_cast<long long>(size);
    long long peak = g_peak.load();
    while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
    }
    return static_cast<char*>(raw) + kHeader;
}

void counted_free(void* p) noexcept {
    if (!p) return;
    void* raw = static_cast<char*>(p) - kHeader;
    g_live.fetch_sub(static_cast<long long>(*static_cast<std::size_t*>(raw)));
    std::free(raw);
}

}  // namespace

void* operator new(std::size_t size) { return counted_alloc(size); }
void* operator new[](std::size_t size) { return counted_alloc(size); }
void operator delete(void* p) noexcept { counted_free(p); }
void operator delete[](void* p) noexcept { counted_free(p); }
void operator delete(void* p, std::size_t) noexcept { counted_free(p); }
void operator delete[](void* p, std::size_t) noexcept { counted_free(p); }

using namespace dynamo;

namespace {

using Clock = std::chrono::steady_clock;
using V = std::vector<double>;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failed = 0;

void report(int id, const std::string& name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++g_failed;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

oracle::Rows square_wave(std::uint64_t seed, std::size_t period, std::size_t segments, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    oracle::Rows q(period * segments, std::vector<double>(3));
    for (std::size_t j = 0; j < q.size(); ++j)
        for (auto& v : q[j]) v = ((j / period) % 2 == 1 ? 1.0 : -1.0) + g(rng);
    return q;
}

// 1. detector against the naive transcription

Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2023);
    std::uniform_int_distribution<std::size_t> ns(8, 200), ms(1, 5);
    std::uniform_real_distribution<double> sig(0.05, 0.95);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = ns(rng), m = ms(rng);
        DetectorConfig cfg;
        cfg.ell = 2 * std::uniform_int_distribution<std::size_t>(2, n / 4)(rng);
        cfg.lambda = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(n - 1, 30))(rng);
        cfg.delta = std::uniform_int_distribution<std::size_t>(1, cfg.ell)(rng);
        cfg.sigma = sig(rng);
        cfg.rule = trial % 4 == 3 ? ComponentRule::HoldsInAll : ComponentRule::HoldsInAny;
        oracle::Rows rows = oracle::random_rows(rng, n, m);
        if (trial % 5 == 0)
            for (std::size_t j = n / 2; j < n; ++j) rows[j][0] += 3.0;
        const auto got = run(RowMatrix::from_rows(rows), cfg).predicted;
        const auto want = oracle::detect(rows, {cfg.lambda, cfg.ell, cfg.delta, cfg.sigma,
                                                cfg.rule == ComponentRule::HoldsInAll});
        if (std::vector<int>(got.begin(), got.end()) != want) ++mismatches;
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < 10.0, fmt("%d/100 mismatches, %.2f s", mismatches, secs)};
}

// 2. densest cluster against the brute-force closure

Outcome densest_selection() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dims(1, 4), count(1, 12), label(0, 2), theta(0, 2);
    std::uniform_real_distribution<double> pos(0.0, 10.0), span(0.5, 3.0), dens(0.1, 5.0);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = dims(rng), k = count(rng);
        const std::size_t th = std::min<std::size_t>(theta(rng), m - 1);
        std::vector<MicroCluster> mcs;
        std::vector<oracle::Box> boxes;
        V densities;
        std::vector<int> raw;
        std::vector<DensityLabel> labels;
        for (std::size_t i = 0; i < k; ++i) {
            V c(m), u(m);
            for (std::size_t h = 0; h < m; ++h) {
                c[h] = pos(rng);
                u[h] = span(rng);
            }
            mcs.push_back(MicroCluster::seed(c, u, 0));
            boxes.push_back({c, u});
            densities.push_back(dens(rng));
            raw.push_back(label(rng));
            labels.push_back(raw.back() == 0 ? DensityLabel::Dense
                             : raw.back() == 1 ? DensityLabel::SemiDense
                                               : DensityLabel::LowDense);
        }
        const auto clusters = connected_components(mcs, labels, densities, th);
        const auto best = densest_cluster(clusters);
        const auto want = oracle::densest(boxes, raw, densities, th);
        bool same = clusters.size() == want.groups && best.has_value() == want.found;
        if (same && best)
            same = clusters[*best].member_ids == want.members && clusters[*best].mean_density() == want.mean_density;
        if (!same) ++mismatches;
    }
    return {mismatches == 0, fmt("%d/1000 mismatches", mismatches)};
}

// 3. tracker and divergence fixtures

const std::size_t kComponents[] = {1, 1, 4, 2};

WindowReadings readings(const std::vector<std::vector<V>>& per_tracker) {
    WindowReadings w = WindowReadings::for_trackers(default_trackers());
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& comps = per_tracker[k];
        for (std::size_t s = 0; s < comps[0].size(); ++s) {
            TrackReading r{w.keys[k], ReadingShape::Scalar, {}};
            for (std::size_t c = 0; c < kComponents[k]; ++c) r.values.push_back(comps[c % comps.size()][s]);
            w.series[k].push_back(r);
        }
    }
    return w;
}

Outcome tracker_fixtures() {
    constexpr double tol = 1e-9;
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const char* what) {
        if (!ok) failed.emplace_back(what);
    };
    auto whole = [](const RowMatrix& q) { return CentroidWindow::slice(q, 1, q.rows()); };
    const RowMatrix tri = RowMatrix::from_rows({{0, 0}, {1, 2}, {3, 1}});
    expect(std::abs(psi1_volume(whole(tri)) - 6.0) < tol, "volume");
    expect(std::abs(psi2_l2(whole(tri)) - std::sqrt(13.0)) < tol, "span norm");
    expect(std::abs(psi2_l2(whole(tri)) - 3.6056) < 1e-4, "span norm, printed value");
    const RowMatrix square = RowMatrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    expect(std::abs(psi2_l2(whole(square)) - std::sqrt(2.0)) < tol, "unit square");

    const RowMatrix a = RowMatrix::from_rows({{0, 0}, {2, 2}});
    const RowMatrix b = RowMatrix::from_rows({{1, 1}, {1, 1}});
    const RowMatrix g = psi3_span_diff(whole(a), whole(b));
    const double want3[2][2] = {{1, -1}, {1, -1}};
    for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t c = 0; c < 2; ++c) expect(std::abs(g(h, c) - want3[h][c]) < tol, "span differences");
    const auto [gmax, gmin] = psi4_span_diff_l2(whole(a), whole(b));
    expect(std::abs(gmax - std::sqrt(2.0)) < tol && std::abs(gmin - std::sqrt(2.0)) < tol, "span difference norms");
    const auto one = psi4_span_diff_l2(whole(RowMatrix::from_rows({{0}, {4}})), whole(RowMatrix::from_rows({{1}, {1}})));
    expect(std::abs(one.first - 3.0) < tol && std::abs(one.second - 1.0) < tol, "1-D span difference norms");

    expect(gamma1(V{1, 2, 3}, V{3, 3, 3}), "TV holds");
    expect(!gamma1(V{0, 0, 0}, V{0, 5, 0}), "TV fails");
    expect(gamma2(V{1, 2, 3}, V{2.1, 2.2, 1.9}), "mean band holds");

    const V calm{2, 2, 2, 2}, busy{1, 3, 1, 3}, rough{0, 4, 0, 4}, far{9, 9, 9, 9};
    const auto ref = readings({{busy}, {busy}, {busy}, {busy}});
    const DecisionMatrix inv = apply_tests(ref, readings({{rough}, {calm}, {calm}, {calm}}), default_tests());
    expect(inv.at(0, 0) == 1 && std::count(inv.votes.begin(), inv.votes.end(), 1) == 1, "one TV inversion");
    const DecisionMatrix pair = apply_tests(ref, readings({{calm}, {calm}, {calm}, {calm, far}}), default_tests());
    expect(pair.at(1, 3) == 0, "pair under the any rule");

    DecisionMatrix three{2, 4, {1, 1, 1, 0, 0, 0, 0, 0}};
    expect(std::abs(three.mean() - 0.375) < tol && consensus(three, 0.3422), "3 of 8 votes");

    std::string detail = failed.empty() ? "all fixtures within 1e-9" : "failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
    return {failed.empty(), detail};
}

// 4. KS statistic and null rejection rate

V normal_sample(std::mt19937_64& rng, std::size_t n, double shift = 0.0) {
    std::normal_distribution<double> g(shift, 1.0);
    V out(n);
    for (auto& v : out) v = g(rng);
    return out;
}

Outcome ks_checks() {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_int_distribution<int> small(0, 5);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        V a = normal_sample(rng, size(rng)), b = normal_sample(rng, size(rng), 0.5);
        if (trial % 3 == 0) {
            for (auto& v : a) v = small(rng);
            for (auto& v : b) v = small(rng);
        }
        if (ks_two_sample(a, b).statistic != oracle::ks_statistic(a, b)) ++mismatches;
    }
    // half-windows of the realistic ell = 30
    int rejected = 0;
    for (int trial = 0; trial < 1000; ++trial)
        if (ks_two_sample(normal_sample(rng, 15), normal_sample(rng, 15)).rejects(0.01)) ++rejected;
    const double rate = rejected / 1000.0;
    return {mismatches == 0 && rate >= 0.005 && rate <= 0.02,
            fmt("%d/1000 D mismatches, null rejection rate %.4f", mismatches, rate)};
}

// 5. generator moments

Outcome generator_fidelity() {
    const GeneratorSpec spec = preset("ELP1-D");
    const GeneratedData d = generate(spec, 1);
    const DatasetStats st = stats(d.events, 0.4);
    auto within = [](const Moments& m, double mean, double sd) {
        return std::abs(m.mean - mean) <= 3.0 * sd / std::sqrt(double(m.count));
    };
    const bool duration = within(st.normal.duration_h, spec.normal.duration_mean_h, spec.normal.duration_std_h);
    const bool onset = within(st.normal.onset, spec.normal.onset_mean, spec.normal.onset_std);
    const bool wake =
        within(st.normal.interruption_min, spec.normal.interruption_mean_min, spec.normal.interruption_std_min);
    const auto& truth = *d.labels.truth;
    const auto drift_days = std::count(truth.begin(), truth.end(), 1);
    const bool tail = std::all_of(truth.end() - drift_days, truth.end(), [](auto v) { return v == 1; });
    return {duration && onset && wake && drift_days == 584 && tail && truth.size() == 1460,
            fmt("duration %.3f +/- %.3f h (target 8.96 +/- 1.24), onset ok %d, interruption ok %d, drift span %ld",
                st.normal.duration_h.mean, st.normal.duration_h.std, int(onset), int(wake), long(drift_days))};
}

// 6. detection quality on the generator analogues

Outcome detection_quality() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"ELP1-D", "ELP1-I"}) {
        const auto start = Clock::now();
        const Comparison c = compare_on_generated(preset(name), 30, 1, DetectorConfig::realistic(), {}, 1);
        const double per_dataset = seconds_since(start) / 30.0;
        const bool ok = c.dynamo.f1 >= 0.60 && c.dynamo.f1 >= c.kis.f1 + 0.10 && c.dynamo.f1 >= c.ikssw.f1 + 0.10 &&
                        per_dataset < 60.0;
        pass = pass && ok;
        detail += fmt("%s F1 dynamo %.4f kis %.4f ikssw %.4f (%.2f s/dataset); ", name, c.dynamo.f1, c.kis.f1,
                      c.ikssw.f1, per_dataset);
    }
    return {pass, detail};
}

// 7. time and memory growth

Outcome complexity() {
    auto trajectory = [](std::size_t n) {
        std::mt19937_64 rng(n);
        return RowMatrix::from_rows(oracle::random_rows(rng, n, 5));
    };
    auto config = [](std::size_t n) {
        DetectorConfig cfg = DetectorConfig::realistic();
        cfg.ell = n / 10;
        return cfg;
    };
    auto best_time = [&](std::size_t n) {
        const RowMatrix q = trajectory(n);
        const DetectorConfig cfg = config(n);
        double best = 1e300;
        for (int rep = 0; rep < 5; ++rep) {
            const auto start = Clock::now();
            const DriftLabels l = run(q, cfg);
            best = std::min(best, seconds_since(start));
            if (l.size() != n) return -1.0;
        }
        return best;
    };
    const double t1 = best_time(4000), t2 = best_time(8000);
    const double time_ratio = t2 / t1;

    const std::vector<std::size_t> sizes{1000, 2000, 4000, 8000};
    std::vector<double> peaks;
    for (std::size_t n : sizes) {
        const RowMatrix q = trajectory(n);
        const DetectorConfig cfg = config(n);
        const long long base = g_live.load();
        g_peak.store(base);
        {
            const DriftLabels l = run(q, cfg);
        }
        peaks.push_back(double(g_peak.load() - base));
    }
    // least-squares line through (n, peak); every point within 1.5x of it
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        sx += double(sizes[i]);
        sy += peaks[i];
        sxx += double(sizes[i]) * double(sizes[i]);
        sxy += double(sizes[i]) * peaks[i];
    }
    const double k = double(sizes.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / k;
    double worst = 1.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double fit = icpt + slope * double(sizes[i]);
        worst = std::max(worst, fit > 0 ? std::max(peaks[i] / fit, fit / peaks[i]) : 1e300);
    }
    const double growth = std::log(peaks.back() / peaks.front()) / std::log(double(sizes.back()) / double(sizes.front()));
    const bool pass = t1 > 0 && time_ratio <= 4.5 && worst <= 1.5 && growth <= 1.5;
    return {pass, fmt("time ratio %.2f (%.3f s -> %.3f s), peak bytes %.0f..%.0f, worst deviation from linear fit "
                      "%.3fx, log-log slope %.3f",
                      time_ratio, t1, t2, peaks.front(), peaks.back(), worst, growth)};
}

// 8. recurrence

Outcome recurrence() {
    std::size_t revisits = 0, hits = 0, first_visit_flags = 0, monotone_flags = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const DetectorRun r =
            run_with_recurrence(RowMatrix::from_rows(square_wave(seed, 20, 12, 0.05)), DetectorConfig::synthetic(), {});
        for (std::size_t k = 1; k < 12; ++k) {
            const std::size_t boundary = 20 * k + 1;
            const auto it = std::find_if(r.spans.begin(), r.spans.end(), [&](const DriftSpan& s) { return s.last >= boundary; });
            if (it == r.spans.end()) {
                if (k >= 2) ++revisits;
                continue;
            }
            if (k == 1) first_visit_flags += it->recurrent;
            else {
                ++revisits;
                hits += it->recurrent;
            }
        }

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 0.05);
        oracle::Rows rows(240, std::vector<double>(3));
        for (std::size_t j = 0; j < rows.size(); ++j)
            for (auto& v : rows[j]) v = 0.05 * double(j) + g(rng);
        const DetectorRun m = run_with_recurrence(RowMatrix::from_rows(rows), DetectorConfig::synthetic(), {});
        monotone_flags += std::count(m.recurrent.begin(), m.recurrent.end(), 1);
    }
    const double rate = double(hits) / double(revisits);
    return {rate >= 0.8 && monotone_flags == 0,
            fmt("%zu/%zu revisited transitions recurrent (%.2f), %zu first-visit flags, %zu monotone flags", hits,
                revisits, rate, first_visit_flags, monotone_flags)};
}

// 9. tuner

Outcome tuner() {
    ScratchDir dir("acceptance-tune");
    std::vector<LabelledTrajectory> bundle;
    for (const char* name : {"ELP1-D", "ELP1-I"})
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            const GeneratedData g = generate(preset(name), seed);
            bundle.push_back({name, sleep_trajectory(g.events).rows, *g.labels.truth});
        }
    const DetectorConfig defaults = DetectorConfig::realistic();
    const double default_f1 = mean_f1(bundle, defaults);
    bool never_below = true, lossless = true, first_is_default = true;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        SearchSpace space = SearchSpace::realistic();
        space.trials = 25;
        space.seed = seed;
        TuneOptions opt;
        opt.jobs = 4;
        opt.seed_trial = defaults;
        const TuneResult r = tune(bundle, space, opt);
        never_below = never_below && r.best.mean_f1 >= default_f1;
        const Trial& t0 = r.trials.front();
        first_is_default = first_is_default && t0.lambda == defaults.lambda && t0.ell == defaults.ell &&
                           t0.delta == defaults.delta && t0.sigma == defaults.sigma && t0.mean_f1 == default_f1;
        const auto path = dir / ("trials" + std::to_string(seed) + ".csv");
        save_trial_log(r.trials, path);
        lossless = lossless && load_trial_log(path) == r.trials;
    }
    return {never_below && lossless && first_is_default,
            fmt("defaults F1 %.4f, never below %d, trial 0 is the defaults %d, log reloads losslessly %d", default_f1,
                int(never_below), int(first_is_default), int(lossless))};
}

void guarded(int id, const std::string& name, const std::function<Outcome()>& body) {
    try {
        report(id, name, body());
    } catch (const std::exception& e) {
        report(id, name, {false, std::string("exception: ") + e.what()});
    }
}

}  // namespace

int main() {
    guarded(1, "oracle equivalence", oracle_equivalence);
    guarded(2, "densest-cluster selection", densest_selection);
    guarded(3, "tracker and divergence fixtures", tracker_fixtures);
    guarded(4, "KS statistic and null rejection rate", ks_checks);
    guarded(5, "generator fidelity", generator_fidelity);
    guarded(6, "end-to-end detection quality", detection_quality);
    guarded(7, "complexity", complexity);
    guarded(8, "recurrence", recurrence);
    guarded(9, "tuner sanity", tuner);
    std::printf("%d of 9 criteria failed\n", g_failed);
    return g_failed;
}
