#include "dynamo/eval.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "dynamo/error.hpp"
#include "parallel.hpp"

namespace dynamo {

MetricReport score(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
    if (predicted.size() != truth.size())
        throw DimensionError("predicted and truth labels differ in length: " + std::to_string(predicted.size()) +
                             " vs " + std::to_string(truth.size()));
    MetricReport r;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] != 0, y = truth[i] != 0;
        if (p && y) ++r.counts.tp;
        else if (p) ++r.counts.fp;
        else if (y) ++r.counts.fn;
        else ++r.counts.tn;
    }
    const auto& c = r.counts;
    auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 0.0 : double(num) / double(den); };
    r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    r.fpr = ratio(c.fp, c.fp + c.tn);
    r.fnr = ratio(c.fn, c.fn + c.tp);
    return r;
}

MetricReport score(const DriftLabels& labels) {
    if (!labels.truth) throw ValidationError("labels carry no ground truth to score against");
    return score(labels.predicted, *labels.truth);
}

MetricReport aggregate(std::span<const MetricReport> runs) {
    MetricReport out;
    out.runs = runs.size();
    if (runs.empty()) return out;
    auto stat = [&](double MetricReport::*field, double& mean, double& sd) {
        mean = 0.0;
        for (const auto& r : runs) mean += r.*field;
        mean /= static_cast<double>(runs.size());
        sd = 0.0;
        if (runs.size() > 1) {
            for (const auto& r : runs) sd += (r.*field - mean) * (r.*field - mean);
            sd = std::sqrt(sd / static_cast<double>(runs.size() - 1));
        }
    };
    stat(&MetricReport::f1, out.f1, out.f1_std);
    stat(&MetricReport::fpr, out.fpr, out.fpr_std);
    stat(&MetricReport::fnr, out.fnr, out.fnr_std);
    for (const auto& r : runs) {
        out.counts.tp += r.counts.tp;
        out.counts.fp += r.counts.fp;
        out.counts.tn += r.counts.tn;
        out.counts.fn += r.counts.fn;
    }
    return out;
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = nlohmann::json{{"f1", r.f1},
                       {"fpr", r.fpr},
                       {"fnr", r.fnr},
                       {"f1_std", r.f1_std},
                       {"fpr_std", r.fpr_std},
                       {"fnr_std", r.fnr_std},
                       {"runs", r.runs},
                       {"tp", r.counts.tp},
                       {"fp", r.counts.fp},
                       {"tn", r.counts.tn},
                       {"fn", r.counts.fn}};
}

Trajectory sleep_trajectory(const EventSequence& seq, const ClusteringConfig& ccfg, const ObservationWindow& window) {
    return build_trajectory(extract_daily_features(partition_and_split(seq), window), ccfg);
}

void to_json(nlohmann::json& j, const Comparison& c) {
    j = nlohmann::json{{"dynamo", c.dynamo},
                       {"kis", c.kis},
                       {"ikssw", c.ikssw},
                       {"iks_bdd", c.iks_bdd},
                       {"seconds_per_run", c.seconds_per_run}};
}

Comparison compare_on_generated(const GeneratorSpec& spec, std::size_t runs, std::uint64_t base_seed,
                                const DetectorConfig& dcfg, const ClusteringConfig& ccfg, std::size_t jobs) {
    if (runs == 0) throw ValidationError("need at least one run");
    std::vector<MetricReport> dyn(runs), coin(runs), sw(runs), bdd(runs);
    std::vector<double> seconds(runs);
    const KSWindowConfig ks{dcfg.ell, dcfg.delta};
    detail::parallel_for(runs, jobs, [&](std::size_t i) {
        const std::uint64_t seed = base_seed + i;
        const GeneratedData data = generate(spec, seed);
        const Trajectory q = sleep_trajectory(data.events, ccfg);
        const auto& truth = *data.labels.truth;
        const auto t0 = std::chrono::steady_clock::now();
        const DriftLabels pred = run(q.rows, dcfg);
        seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        dyn[i] = score(pred.predicted, truth);
        coin[i] = score(kis(truth.size(), seed).predicted, truth);
        sw[i] = score(ikssw(q.rows, ks).predicted, truth);
        bdd[i] = score(iks_bdd(q.rows, ks).predicted, truth);
    });
    Comparison c{aggregate(dyn), aggregate(coin), aggregate(sw), aggregate(bdd), 0.0};
    for (double s : seconds) c.seconds_per_run += s / static_cast<double>(runs);
    return c;
}

SearchSpace SearchSpace::realistic() { return {}; }

SearchSpace SearchSpace::synthetic() {
    SearchSpace s;
    s.lambda_hi = 20;
    s.ell_hi = 20;
    return s;
}

void SearchSpace::validate() const {
    if (trials < 1) throw ValidationError("search space: trial budget must be >= 1");
    if (lambda_lo > lambda_hi) throw ValidationError("search space: empty lambda range");
    if (ell_lo < 4 || ell_lo > ell_hi) throw ValidationError("search space: ell range must lie in [4, ...] and be non-empty");
    if ((ell_lo + ell_lo % 2) > ell_hi) throw ValidationError("search space: ell range holds no even value");
    if (delta_lo < 1 || delta_lo > delta_hi) throw ValidationError("search space: delta range must lie in [1, ...]");
    if (!(sigma_lo > 0.0 && sigma_lo <= sigma_hi && sigma_hi < 1.0))
        throw ValidationError("search space: sigma range must lie inside (0, 1)");
}

SearchSpace SearchSpace::feasible_for(std::size_t n) const {
    SearchSpace s = *this;
    if (n >= 1) s.lambda_hi = std::min(s.lambda_hi, n - 1);
    s.ell_hi = std::min(s.ell_hi, n / 2);
    s.ell_hi -= s.ell_hi % 2;
    s.ell_lo += s.ell_lo % 2;
    if (s.lambda_lo > s.lambda_hi || s.ell_lo > s.ell_hi)
        throw ValidationError("search space infeasible for trajectories of " + std::to_string(n) + " intervals");
    s.validate();
    return s;
}

DetectorConfig config_of(const Trial& trial, const DetectorConfig& base) {
    DetectorConfig cfg = base;
    cfg.lambda = trial.lambda;
    cfg.ell = trial.ell;
    cfg.delta = trial.delta;
    cfg.sigma = trial.sigma;
    return cfg;
}

double mean_f1(std::span<const LabelledTrajectory> bundle, const DetectorConfig& cfg) {
    if (bundle.empty()) throw ValidationError("empty dataset bundle");
    double sum = 0.0;
    for (const auto& d : bundle) sum += score(run(d.q, cfg).predicted, d.truth).f1;
    return sum / static_cast<double>(bundle.size());
}

TuneResult tune(std::span<const LabelledTrajectory> bundle, const SearchSpace& space, const TuneOptions& options) {
    space.validate();
    if (bundle.empty()) throw ValidationError("empty dataset bundle");
    std::size_t n = bundle.front().q.rows();
    for (const auto& d : bundle) n = std::min(n, d.q.rows());
    const SearchSpace s = space.feasible_for(n);

    std::vector<Trial> trials(s.trials);
    std::mt19937_64 rng(s.seed);
    std::uniform_int_distribution<std::size_t> lambda(s.lambda_lo, s.lambda_hi);
    std::uniform_int_distribution<std::size_t> half(s.ell_lo / 2, s.ell_hi / 2);
    std::uniform_int_distribution<std::size_t> delta(s.delta_lo, s.delta_hi);
    std::uniform_real_distribution<double> sigma(s.sigma_lo, s.sigma_hi);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        Trial& t = trials[i];
        t.index = i;
        if (i == 0 && options.seed_trial) {
            const DetectorConfig& c = *options.seed_trial;
            c.validate(n);
            t.lambda = c.lambda;
            t.ell = c.ell;
            t.delta = c.delta;
            t.sigma = c.sigma;
            continue;
        }
        t.lambda = lambda(rng);
        t.ell = 2 * half(rng);
        t.delta = delta(rng);
        t.sigma = sigma(rng);
    }

    detail::parallel_for(trials.size(), options.jobs,
                         [&](std::size_t i) { trials[i].mean_f1 = mean_f1(bundle, config_of(trials[i], options.base)); });

    TuneResult result;
    result.best = trials.front();
    for (const auto& t : trials)
        if (t.mean_f1 > result.best.mean_f1) result.best = t;
    result.trials = std::move(trials);
    return result;
}

void save_trial_log(std::span<const Trial> trials, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "trial,lambda,ell,delta,sigma,mean_f1\n";
    for (const auto& t : trials)
        out << t.index << ',' << t.lambda << ',' << t.ell << ',' << t.delta << ',' << csv::format_double(t.sigma) << ','
            << csv::format_double(t.mean_f1) << '\n';
    if (!out) throw ValidationError("write failed", path.string());
}

std::vector<Trial> load_trial_log(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    const std::string file = path.string();
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || csv::trim(line) != "trial,lambda,ell,delta,sigma,mean_f1")
        throw ValidationError("expected header 'trial,lambda,ell,delta,sigma,mean_f1'", file, lineno);
    std::vector<Trial> trials;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        Trial t;
        const bool ok = f.size() == 6 && csv::parse_int(f[0], t.index) && csv::parse_int(f[1], t.lambda) &&
                        csv::parse_int(f[2], t.ell) && csv::parse_int(f[3], t.delta) &&
                        csv::parse_double(f[4], t.sigma) && csv::parse_double(f[5], t.mean_f1);
        if (!ok) throw ValidationError("malformed trial row", file, lineno);
        trials.push_back(t);
    }
    return trials;
}

}  // namespace dynamo
