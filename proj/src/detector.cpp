#include "dynamo/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "csv_util.hpp"
#include "dynamo/baselines.hpp"
#include "dynamo/error.hpp"

namespace dynamo {

DetectorConfig DetectorConfig::synthetic() {
    DetectorConfig cfg;
    cfg.lambda = 4;
    cfg.delta = 4;
    cfg.ell = 16;
    cfg.sigma = 0.3422;
    return cfg;
}

DetectorConfig DetectorConfig::realistic() {
    DetectorConfig cfg;
    cfg.lambda = 25;
    cfg.delta = 10;
    cfg.ell = 30;
    cfg.sigma = 0.2666;
    return cfg;
}

void DetectorConfig::validate(std::size_t n) const {
    auto fail = [&](const std::string& what) {
        throw ValidationError("detector config: " + what + " (n = " + std::to_string(n) + ")");
    };
    if (delta < 1) fail("delta must be >= 1");
    if (ell < 4) fail("ell must be >= 4, got " + std::to_string(ell));
    if (ell % 2 != 0) fail("ell must be even, got " + std::to_string(ell));
    if (ell > n / 2) fail("ell must be <= n/2, got " + std::to_string(ell));
    if (lambda >= n) fail("lambda must be < n, got " + std::to_string(lambda));
    if (!(sigma > 0.0 && sigma < 1.0)) fail("sigma must lie in (0, 1)");
    if (trackers.empty()) fail("tracker set is empty");
    if (tests.empty()) fail("test set is empty");
    if (delta > ell / 2) spdlog::warn("delta {} exceeds ell/2 = {}: quiet steps skip intervals", delta, ell / 2);
}

void to_json(nlohmann::json& j, const DetectorConfig& cfg) {
    std::vector<std::string> trackers, tests;
    for (const auto& t : cfg.trackers) trackers.push_back(t.name);
    for (const auto& t : cfg.tests) tests.push_back(t.name);
    j = nlohmann::json{{"lambda", cfg.lambda},
                       {"ell", cfg.ell},
                       {"delta", cfg.delta},
                       {"sigma", cfg.sigma},
                       {"trackers", trackers},
                       {"tests", tests},
                       {"component_rule", cfg.rule == ComponentRule::HoldsInAny ? "any" : "all"}};
}

void DriftLabels::validate() const {
    if (truth && !predicted.empty() && truth->size() != predicted.size())
        throw DimensionError("predicted and truth labels differ in length: " + std::to_string(predicted.size()) +
                             " vs " + std::to_string(truth->size()));
    for (const auto* v : {&predicted, truth ? &*truth : nullptr}) {
        if (!v) continue;
        for (auto x : *v)
            if (x > 1) throw ValidationError("labels must be 0 or 1");
    }
}

namespace {

void fill_window(const RowMatrix& q, std::size_t from, std::size_t to, std::size_t lambda,
                 std::span<const Tracker> trackers, WindowReadings& out) {
    out.clear();
    CentroidWindow prev;
    for (std::size_t j = from; j <= to; ++j) {
        const std::size_t first = j > lambda ? j - lambda : 1;
        const CentroidWindow curr = CentroidWindow::slice(q, first, j);
        for (std::size_t k = 0; k < trackers.size(); ++k) out.series[k].push_back(trackers[k].track(prev, curr));
        prev = curr;
    }
}

DetectorRun detect(const RowMatrix& q, const DetectorConfig& cfg, bool trace) {
    const std::size_t n = q.rows();
    cfg.validate(n);
    const auto started = std::chrono::steady_clock::now();

    DetectorRun result;
    result.labels.predicted.assign(n, 0);
    WindowReadings reference = WindowReadings::for_trackers(cfg.trackers);
    WindowReadings detection = WindowReadings::for_trackers(cfg.trackers);

    std::size_t ell = cfg.ell;
    std::size_t t = 1;
    while (t <= n) {
        if (n - t + 1 < ell) {
            ell = (n - t + 1) / 2;
            ell -= ell % 2;
            if (ell < 4) {
                result.unvisited_tail = n - t + 1;
                spdlog::debug("detector stops at t = {}: {} intervals left, too few for two windows", t,
                              result.unvisited_tail);
                break;
            }
        }
        const std::size_t half = ell / 2;
        fill_window(q, t, t + half - 1, cfg.lambda, cfg.trackers, reference);
        fill_window(q, t + half, t + ell - 1, cfg.lambda, cfg.trackers, detection);

        const DecisionMatrix votes = apply_tests(reference, detection, cfg.tests, cfg.rule);
        const bool drift = consensus(votes, cfg.sigma);
        if (trace) result.steps.push_back({t, ell, votes.mean(), drift});
        if (drift) {
            for (std::size_t j = t + half; j <= t + ell - 1; ++j) result.labels.predicted[j - 1] = 1;
            if (trace) result.spans.push_back({t + half, t + ell - 1, false});
            t += half;
        } else {
            t += cfg.delta;
        }
    }
    if (trace) result.recurrent.assign(n, 0);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace

DriftLabels run(const RowMatrix& q, const DetectorConfig& cfg) {
    return detect(q, cfg, false).labels;
}

DetectorRun run_traced(const RowMatrix& q, const DetectorConfig& cfg) {
    return detect(q, cfg, true);
}

void BehaviourQueue::push(BehaviourSnapshot snapshot) {
    if (capacity_ == 0) return;
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(snapshot));
}

bool rows_informative(std::size_t a, std::size_t b, double alpha) {
    if (a == 0 || b == 0) return false;
    const double ne = double(a) * double(b) / double(a + b);
    const double root = std::sqrt(ne);
    return kolmogorov_survival(root + 0.12 + 0.11 / root) < alpha;
}

bool rows_match(const RowBlock& a, const RowBlock& b, double alpha) {
    return !ks_rows_reject(a, b, alpha, FeatureCombination::AnyFeature);
}

DetectorRun run_with_recurrence(const RowMatrix& q, const DetectorConfig& cfg, const RecurrenceConfig& rc) {
    DetectorRun result = run_traced(q, cfg);
    if (rc.capacity == 0 || result.spans.empty()) return result;

    auto snapshot = [&](std::size_t first, std::size_t last) {
        BehaviourSnapshot snap{first, last, RowMatrix(last - first + 1, q.cols())};
        for (std::size_t j = first; j <= last; ++j) std::ranges::copy(q.row(j - 1), snap.rows.row(j - first).begin());
        return snap;
    };
    auto block = [](const BehaviourSnapshot& s) { return RowBlock(s.rows, 0, s.rows.rows()); };

    // Each drift adopts a behaviour that lasts until the next drift's detection
    // window opens; it is judged once replaced, against every queued behaviour.
    BehaviourQueue queue(rc.capacity);
    queue.push(snapshot(1, result.spans.front().first - 1));
    for (std::size_t k = 0; k < result.spans.size(); ++k) {
        DriftSpan& span = result.spans[k];
        const std::size_t last = k + 1 < result.spans.size() ? result.spans[k + 1].first - 1 : q.rows();
        BehaviourSnapshot adopted = snapshot(span.first, last);
        const BehaviourSnapshot& previous = queue.items().back();
        const std::size_t size = adopted.rows.rows();
        if (rows_informative(size, previous.rows.rows(), rc.alpha) &&
            !rows_match(block(adopted), block(previous), rc.alpha)) {
            for (const auto& past : queue.items()) {
                if (rows_informative(size, past.rows.rows(), rc.alpha) && rows_match(block(adopted), block(past), rc.alpha)) {
                    span.recurrent = true;
                    break;
                }
            }
        }
        if (span.recurrent)
            std::fill(result.recurrent.begin() + static_cast<std::ptrdiff_t>(span.first - 1),
                      result.recurrent.begin() + static_cast<std::ptrdiff_t>(span.last), 1);
        queue.push(std::move(adopted));
    }
    return result;
}

void to_json(nlohmann::json& j, const DetectorRun& run) {
    auto steps = nlohmann::json::array();
    for (const auto& s : run.steps)
        steps.push_back({{"t", s.t - 1}, {"ell", s.ell}, {"vote_mean", s.vote_mean}, {"drift", s.drift}});
    auto spans = nlohmann::json::array();
    for (const auto& s : run.spans)
        spans.push_back({{"first", s.first - 1}, {"last", s.last - 1}, {"recurrent", s.recurrent}});
    j = nlohmann::json{{"n", run.labels.size()},
                       {"iterations", steps},
                       {"drift_spans", spans},
                       {"flagged", std::count(run.labels.predicted.begin(), run.labels.predicted.end(), 1)},
                       {"unvisited_tail", run.unvisited_tail},
                       {"seconds", run.seconds}};
}

void save_labels(const DriftLabels& labels, const std::filesystem::path& path) {
    labels.validate();
    auto out = csv::open_out(path);
    const bool has_pred = !labels.predicted.empty() || !labels.truth;
    const std::size_t n = has_pred ? labels.predicted.size() : labels.truth->size();
    out << "interval";
    if (has_pred) out << ",predicted";
    if (labels.truth) out << ",truth";
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        out << i;
        if (has_pred) out << ',' << int(labels.predicted[i]);
        if (labels.truth) out << ',' << int((*labels.truth)[i]);
        out << '\n';
    }
    if (!out) throw ValidationError("failed writing labels", path.string());
}

DriftLabels load_labels(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    const std::string file = path.string();
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ValidationError("empty label file", file, 1);
    ++lineno;
    const auto header = csv::split(csv::trim(line));
    int pred_col = -1, truth_col = -1;
    if (header.empty() || csv::trim(header[0]) != "interval")
        throw ValidationError("label header must start with 'interval'", file, lineno);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto name = csv::trim(header[c]);
        if (name == "predicted" && pred_col < 0) pred_col = static_cast<int>(c);
        else if (name == "truth" && truth_col < 0) truth_col = static_cast<int>(c);
        else throw ValidationError("unexpected label column '" + std::string(name) + "'", file, lineno);
    }
    if (pred_col < 0 && truth_col < 0) throw ValidationError("label file has no label column", file, lineno);

    DriftLabels labels;
    if (truth_col >= 0) labels.truth.emplace();
    auto parse_label = [&](std::string_view s) -> std::uint8_t {
        int v = 0;
        if (!csv::parse_int(s, v) || (v != 0 && v != 1))
            throw ValidationError("label must be 0 or 1, got '" + std::string(csv::trim(s)) + "'", file, lineno);
        return static_cast<std::uint8_t>(v);
    };
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != header.size())
            throw ValidationError("expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(f.size()),
                                  file, lineno);
        std::size_t idx = 0;
        if (!csv::parse_int(f[0], idx) || idx != expected)
            throw ValidationError("intervals must be consecutive from 0, expected " + std::to_string(expected),
                                  file, lineno);
        ++expected;
        if (pred_col >= 0) labels.predicted.push_back(parse_label(f[pred_col]));
        if (truth_col >= 0) labels.truth->push_back(parse_label(f[truth_col]));
    }
    return labels;
}

}  // namespace dynamo
