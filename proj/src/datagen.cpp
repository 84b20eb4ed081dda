#include "dynamo/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "dynamo/error.hpp"

namespace dynamo {

namespace {

constexpr double kMaxSleepHours = 15.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

double pdf(double x) { return std::isinf(x) ? 0.0 : std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Truncated {
    double mu = 0.0;
    double sigma = 0.0;
    double lo = -kInf;
    double hi = kInf;
    double mass = 1.0;  // probability of landing inside [lo, hi]
};

// Mean and std of N(mu, sigma) restricted to [lo, hi].
std::pair<double, double> truncated_moments(double mu, double sigma, double lo, double hi, double& mass) {
    const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
    // Work on the side with the smaller tail to keep the mass accurate.
    mass = a > 0.0 ? cdf(-a) - cdf(-b) : cdf(b) - cdf(a);
    if (mass <= 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    const double pa = pdf(a), pb = pdf(b);
    const double apa = std::isinf(a) ? 0.0 : a * pa;
    const double bpb = std::isinf(b) ? 0.0 : b * pb;
    const double r = (pa - pb) / mass;
    const double var = sigma * sigma * (1.0 + (apa - bpb) / mass - r * r);
    return {mu + sigma * r, std::sqrt(std::max(var, 0.0))};
}

// Finds the untruncated (mu, sigma) whose truncation to [lo, hi] has the
// requested mean and std.
Truncated match_moments(double mean, double sd, double lo, double hi, const std::string& what) {
    require(mean > lo && mean < hi, what + ": mean " + std::to_string(mean) + " outside the feasible range");
    if (sd == 0.0) return {mean, 0.0, lo, hi, 1.0};
    Truncated t{mean, sd, lo, hi, 1.0};
    for (int it = 0; it < 500; ++it) {
        double mass = 0.0;
        const auto [m, s] = truncated_moments(t.mu, t.sigma, lo, hi, mass);
        t.mass = mass;
        if (!std::isfinite(m) || s <= 0.0 || mass < 1e-4) break;
        const double em = mean - m, es = sd / s;
        if (std::abs(em) < 1e-9 * std::max(1.0, std::abs(mean)) && std::abs(es - 1.0) < 1e-9) return t;
        t.mu += em;
        t.sigma *= es;
    }
    throw ValidationError(what + ": no truncated Gaussian on the physical range has mean " + std::to_string(mean) +
                          " and std " + std::to_string(sd));
}

double sample(const Truncated& t, std::mt19937_64& rng) {
    if (t.sigma == 0.0) return t.mu;
    std::normal_distribution<double> normal(t.mu, t.sigma);
    while (true) {
        const double x = normal(rng);
        if (x > t.lo && x < t.hi) return x;
    }
}

RegimeSpec blend(const RegimeSpec& normal, const DriftSpec& drift, double w) {
    RegimeSpec r = normal;
    auto mix = [w](double a, double b) { return (1.0 - w) * a + w * b; };
    for (auto f : drift.features) {
        const RegimeSpec& g = drift.target;
        switch (f) {
            case DriftFeature::Duration:
                r.duration_mean_h = mix(normal.duration_mean_h, g.duration_mean_h);
                r.duration_std_h = mix(normal.duration_std_h, g.duration_std_h);
                break;
            case DriftFeature::Interruptions:
                r.interruption_mean_min = mix(normal.interruption_mean_min, g.interruption_mean_min);
                r.interruption_std_min = mix(normal.interruption_std_min, g.interruption_std_min);
                r.interruption_count_mean = mix(normal.interruption_count_mean, g.interruption_count_mean);
                r.interruption_count_std = mix(normal.interruption_count_std, g.interruption_count_std);
                break;
            case DriftFeature::Onset:
                r.onset_mean = mix(normal.onset_mean, g.onset_mean);
                r.onset_std = mix(normal.onset_std, g.onset_std);
                break;
        }
    }
    return r;
}

double drift_weight(const DriftSpec& d, std::size_t k, std::size_t span) {
    const std::size_t ramp = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d.ramp_fraction * span)));
    switch (d.shape) {
        case DriftShape::Step: return 1.0;
        case DriftShape::LinearRamp: return std::min(1.0, static_cast<double>(k + 1) / ramp);
        case DriftShape::Sawtooth: return static_cast<double>(k % ramp + 1) / ramp;
    }
    return 1.0;
}

struct NightSampler {
    Truncated onset, duration, interruptions;
    double count_mean = 0.0, count_std = 0.0;

    explicit NightSampler(const RegimeSpec& r)
        : onset(match_moments(r.onset_mean - 12 * 3600.0, r.onset_std, 0.0, 86400.0, "onset")),
          duration(match_moments(r.duration_mean_h, r.duration_std_h, 0.0, kMaxSleepHours, "sleep duration")),
          count_mean(r.interruption_count_mean),
          count_std(r.interruption_count_std) {
        if (r.interruption_mean_min > 0.0)
            interruptions = match_moments(r.interruption_mean_min, r.interruption_std_min, 0.0, kInf, "interruptions");
    }
};

// Splits `total` seconds into `parts` pieces of at least one second each,
// in random proportions.
std::vector<Timestamp> split_seconds(Timestamp total, std::size_t parts, std::mt19937_64& rng) {
    std::vector<Timestamp> out(parts, 1);
    if (parts == 1) {
        out[0] = total;
        return out;
    }
    std::gamma_distribution<double> gamma(2.0, 1.0);
    std::vector<double> w(parts);
    double sum = 0.0;
    for (auto& x : w) sum += (x = gamma(rng));
    const Timestamp spare = total - static_cast<Timestamp>(parts);
    Timestamp used = 0;
    for (std::size_t i = 0; i + 1 < parts; ++i) {
        const auto extra = static_cast<Timestamp>(std::floor(w[i] / sum * static_cast<double>(spare)));
        out[i] += extra;
        used += extra;
    }
    out.back() += spare - used;
    return out;
}

void realise_night(const NightSampler& s, Timestamp day_start, std::mt19937_64& rng, const std::string& kind,
                   std::vector<Event>& out) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const auto onset = static_cast<Timestamp>(std::llround(sample(s.onset, rng)));
        const auto sleep = static_cast<Timestamp>(std::llround(sample(s.duration, rng) * 3600.0));
        Timestamp awake = 0;
        std::size_t k = 0;
        if (s.interruptions.sigma > 0.0 || s.interruptions.mu > 0.0) {
            awake = static_cast<Timestamp>(std::llround(sample(s.interruptions, rng) * 60.0));
            std::normal_distribution<double> count(s.count_mean, s.count_std);
            const double draw = s.count_std > 0.0 ? count(rng) : s.count_mean;
            k = static_cast<std::size_t>(std::max(1.0, std::round(draw)));
            k = std::min<std::size_t>({k, static_cast<std::size_t>(std::max<Timestamp>(awake, 0)),
                                       static_cast<std::size_t>(std::max<Timestamp>(sleep - 1, 0))});
            if (k == 0) awake = 0;
        }
        if (sleep < 1 || onset < 0 || onset + sleep + awake > kSecondsPerDay) continue;

        const auto segments = split_seconds(sleep, k + 1, rng);
        const auto gaps = k > 0 ? split_seconds(awake, k, rng) : std::vector<Timestamp>{};
        Timestamp at = day_start + onset;
        for (std::size_t i = 0; i <= k; ++i) {
            out.push_back({kind, at, at + segments[i]});
            at += segments[i];
            if (i < k) at += gaps[i];
        }
        return;
    }
    throw ValidationError("regime cannot place a night inside its day");
}

Moments moments_of(const std::vector<double>& v) {
    Moments m;
    m.count = v.size();
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

PeriodStats period_stats(const std::vector<IntervalEvents>& intervals, std::size_t from, std::size_t to) {
    std::vector<double> dur, gap, onset, count;
    for (std::size_t j = from; j < to; ++j) {
        const auto& iv = intervals[j];
        if (iv.fragments.empty()) continue;
        double asleep = 0.0, awake = 0.0;
        for (std::size_t i = 0; i < iv.fragments.size(); ++i) {
            asleep += static_cast<double>(iv.fragments[i].event.duration());
            if (i > 0) awake += static_cast<double>(iv.fragments[i].event.begin - iv.fragments[i - 1].event.end);
        }
        const Timestamp first = iv.fragments.front().event.begin;
        const Timestamp clock = ((iv.begin % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
        dur.push_back(asleep / 3600.0);
        gap.push_back(awake / 60.0);
        onset.push_back(static_cast<double>(first - iv.begin + clock));
        count.push_back(static_cast<double>(iv.fragments.size() - 1));
    }
    return {to - from, moments_of(dur), moments_of(gap), moments_of(onset), moments_of(count)};
}

const char* shape_name(DriftShape s) {
    switch (s) {
        case DriftShape::LinearRamp: return "ramp";
        case DriftShape::Step: return "step";
        case DriftShape::Sawtooth: return "sawtooth";
    }
    return "ramp";
}

const char* feature_name(DriftFeature f) {
    switch (f) {
        case DriftFeature::Duration: return "duration";
        case DriftFeature::Interruptions: return "interruptions";
        case DriftFeature::Onset: return "onset";
    }
    return "duration";
}

}  // namespace

void RegimeSpec::validate() const {
    require(onset_std >= 0 && duration_std_h >= 0 && interruption_std_min >= 0 && interruption_count_std >= 0,
            "regime standard deviations must be >= 0");
    require(duration_mean_h > 0, "regime sleep duration mean must be > 0");
    require(interruption_mean_min >= 0, "regime interruption mean must be >= 0");
    require(interruption_count_mean >= 0, "regime interruption count mean must be >= 0");
    require(onset_mean >= 0 && onset_mean < 2 * 86400.0, "regime onset must be a clock time");
}

void DriftSpec::validate() const {
    require(fraction > 0.0 && fraction < 1.0, "drift fraction must lie in (0, 1)");
    require(ramp_fraction > 0.0 && ramp_fraction <= 1.0, "drift ramp fraction must lie in (0, 1]");
    require(!features.empty(), "drift must perturb at least one feature");
    target.validate();
}

void GeneratorSpec::validate() const {
    require(days >= 10, "generator needs at least 10 days, got " + std::to_string(days));
    normal.validate();
    if (drift) drift->validate();
}

GeneratedData generate(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    const std::size_t drift_days =
        spec.drift ? static_cast<std::size_t>(std::llround(static_cast<double>(spec.days) * spec.drift->fraction)) : 0;
    const std::size_t drift_from = spec.days - drift_days;

    GeneratedData data;
    data.events.start = spec.start;
    data.events.end = spec.start + static_cast<Timestamp>(spec.days) * kSecondsPerDay;
    data.events.delta = kSecondsPerDay;
    data.labels.truth.emplace(spec.days, 0);

    // Onset before noon means the next morning.
    RegimeSpec normal = spec.normal;
    auto wrap = [](RegimeSpec& r) {
        if (r.onset_mean < 12 * 3600.0) r.onset_mean += 86400.0;
    };
    wrap(normal);
    DriftSpec drift = spec.drift.value_or(DriftSpec{});
    wrap(drift.target);

    const NightSampler base(normal);
    std::map<double, NightSampler> drift_samplers;
    for (std::size_t d = 0; d < spec.days; ++d) {
        const Timestamp day_start = spec.start + static_cast<Timestamp>(d) * kSecondsPerDay;
        if (d < drift_from) {
            realise_night(base, day_start, rng, spec.kind, data.events.events);
            continue;
        }
        (*data.labels.truth)[d] = 1;
        const double w = drift_weight(drift, d - drift_from, drift_days);
        auto it = drift_samplers.find(w);
        if (it == drift_samplers.end()) it = drift_samplers.emplace(w, NightSampler(blend(normal, drift, w))).first;
        realise_night(it->second, day_start, rng, spec.kind, data.events.events);
    }
    data.events.validate();
    return data;
}

std::vector<std::string> preset_names() { return {"ELP1-D", "ELP1-I", "ELP2-D", "ELP2-I"}; }

GeneratorSpec preset(const std::string& name) {
    auto regime = [](const char* onset, const char* onset_sd, double dur, double dur_sd, double gap, double gap_sd,
                     double count, double count_sd) {
        return RegimeSpec{parse_clock(onset), parse_clock(onset_sd), dur, dur_sd, gap, gap_sd, count, count_sd};
    };
    GeneratorSpec s;
    s.name = name;
    s.days = 1460;
    DriftSpec d;
    d.fraction = 0.4;
    if (name == "ELP1-D") {
        s.normal = regime("22:04:36", "00:37:54", 8.96, 1.24, 9.22, 3.76, 2.0, 1.0);
        d.features = {DriftFeature::Duration};
        d.target = regime("22:04:36", "00:37:54", 9.22, 0.78, 9.17, 3.69, 2.0, 1.0);
    } else if (name == "ELP1-I") {
        s.normal = regime("22:45:24", "00:09:01", 7.54, 0.22, 12.76, 8.05, 2.0, 1.0);
        d.features = {DriftFeature::Interruptions};
        d.target = regime("22:45:24", "00:09:01", 7.52, 0.25, 15.19, 6.61, 3.5, 1.2);
    } else if (name == "ELP2-D") {
        s.normal = regime("21:35:57", "00:57:31", 8.46, 1.51, 22.90, 11.82, 3.0, 1.5);
        d.features = {DriftFeature::Duration};
        d.target = regime("21:35:57", "00:57:31", 8.73, 1.18, 23.06, 12.07, 3.0, 1.5);
    } else if (name == "ELP2-I") {
        s.normal = regime("22:16:26", "00:43:56", 6.89, 0.93, 35.84, 18.93, 3.0, 1.5);
        d.features = {DriftFeature::Interruptions};
        d.target = regime("22:16:26", "00:43:56", 6.86, 0.95, 39.61, 16.82, 4.5, 1.8);
    } else {
        throw ValidationError("unknown generator preset '" + name + "'");
    }
    s.drift = d;
    return s;
}

DatasetStats stats(const EventSequence& seq, double drift_fraction) {
    const auto intervals = partition_and_split(seq);
    DatasetStats out;
    out.days = intervals.size();
    out.drift_fraction = drift_fraction;
    const auto drift_days =
        static_cast<std::size_t>(std::llround(static_cast<double>(out.days) * std::clamp(drift_fraction, 0.0, 1.0)));
    out.normal = period_stats(intervals, 0, out.days - drift_days);
    if (drift_days > 0) out.drift = period_stats(intervals, out.days - drift_days, out.days);
    return out;
}

std::string format_clock(double seconds) {
    auto s = static_cast<long long>(std::llround(seconds));
    s = ((s % 86400) + 86400) % 86400;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", s / 3600, (s / 60) % 60, s % 60);
    return buf;
}

double parse_clock(const std::string& text) {
    int h = 0, m = 0, sec = 0;
    const auto fields = [&] {
        std::vector<std::string_view> f;
        std::size_t pos = 0;
        std::string_view v(text);
        while (true) {
            const auto c = v.find(':', pos);
            f.push_back(v.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
        return f;
    }();
    const bool ok = (fields.size() == 2 || fields.size() == 3) && csv::parse_int(fields[0], h) &&
                    csv::parse_int(fields[1], m) && (fields.size() == 2 || csv::parse_int(fields[2], sec)) && h >= 0 &&
                    m >= 0 && m < 60 && sec >= 0 && sec < 60;
    if (!ok) throw ValidationError("invalid clock time '" + text + "', expected HH:MM[:SS]");
    return h * 3600.0 + m * 60.0 + sec;
}

namespace {

double clock_field(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string()) return parse_clock(v.get<std::string>());
    return v.get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const RegimeSpec& r) {
    j = nlohmann::json{{"onset_mean", format_clock(r.onset_mean)},
                       {"onset_std", format_clock(r.onset_std)},
                       {"duration_mean_h", r.duration_mean_h},
                       {"duration_std_h", r.duration_std_h},
                       {"interruption_mean_min", r.interruption_mean_min},
                       {"interruption_std_min", r.interruption_std_min},
                       {"interruption_count_mean", r.interruption_count_mean},
                       {"interruption_count_std", r.interruption_count_std}};
}

void from_json(const nlohmann::json& j, RegimeSpec& r) {
    RegimeSpec d;
    r.onset_mean = clock_field(j, "onset_mean", d.onset_mean);
    r.onset_std = clock_field(j, "onset_std", d.onset_std);
    r.duration_mean_h = j.value("duration_mean_h", d.duration_mean_h);
    r.duration_std_h = j.value("duration_std_h", d.duration_std_h);
    r.interruption_mean_min = j.value("interruption_mean_min", d.interruption_mean_min);
    r.interruption_std_min = j.value("interruption_std_min", d.interruption_std_min);
    r.interruption_count_mean = j.value("interruption_count_mean", d.interruption_count_mean);
    r.interruption_count_std = j.value("interruption_count_std", d.interruption_count_std);
}

void to_json(nlohmann::json& j, const DriftSpec& d) {
    std::vector<std::string> features;
    for (auto f : d.features) features.emplace_back(feature_name(f));
    j = nlohmann::json{{"fraction", d.fraction},
                       {"shape", shape_name(d.shape)},
                       {"ramp_fraction", d.ramp_fraction},
                       {"features", features},
                       {"target", d.target}};
}

void from_json(const nlohmann::json& j, DriftSpec& d) {
    DriftSpec def;
    d.fraction = j.value("fraction", def.fraction);
    d.ramp_fraction = j.value("ramp_fraction", def.ramp_fraction);
    const std::string shape = j.value("shape", std::string("ramp"));
    if (shape == "ramp") d.shape = DriftShape::LinearRamp;
    else if (shape == "step") d.shape = DriftShape::Step;
    else if (shape == "sawtooth") d.shape = DriftShape::Sawtooth;
    else throw ValidationError("unknown drift shape '" + shape + "'");
    d.features.clear();
    for (const auto& f : j.value("features", std::vector<std::string>{"duration"})) {
        if (f == "duration") d.features.push_back(DriftFeature::Duration);
        else if (f == "interruptions") d.features.push_back(DriftFeature::Interruptions);
        else if (f == "onset") d.features.push_back(DriftFeature::Onset);
        else throw ValidationError("unknown drift feature '" + f + "'");
    }
    d.target = j.contains("target") ? j.at("target").get<RegimeSpec>() : RegimeSpec{};
}

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
    j = nlohmann::json{{"name", s.name}, {"days", s.days}, {"start", s.start}, {"kind", s.kind}, {"normal", s.normal}};
    if (s.drift) j["drift"] = *s.drift;
}

void from_json(const nlohmann::json& j, GeneratorSpec& s) {
    if (j.contains("preset")) s = preset(j.at("preset").get<std::string>());
    s.name = j.value("name", s.name);
    s.days = j.value("days", s.days);
    s.start = j.value("start", s.start);
    s.kind = j.value("kind", s.kind);
    if (j.contains("normal")) s.normal = j.at("normal").get<RegimeSpec>();
    if (j.contains("drift")) {
        if (j.at("drift").is_null()) s.drift.reset();
        else s.drift = j.at("drift").get<DriftSpec>();
    }
}

void to_json(nlohmann::json& j, const DatasetStats& s) {
    auto period = [](const PeriodStats& p) {
        auto mom = [](const Moments& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}, {"n", m.count}}; };
        return nlohmann::json{{"days", p.days},
                              {"duration_h", mom(p.duration_h)},
                              {"interruption_min", mom(p.interruption_min)},
                              {"onset", {{"mean", format_clock(p.onset.mean)}, {"std", format_clock(p.onset.std)}}},
                              {"onset_seconds", mom(p.onset)},
                              {"interruption_count", mom(p.interruption_count)}};
    };
    j = nlohmann::json{{"days", s.days}, {"drift_fraction", s.drift_fraction}, {"normal", period(s.normal)}};
    if (s.drift) j["drift"] = period(*s.drift);
}

GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        return j.get<GeneratorSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid generator spec: ") + e.what(), path.string());
    }
}

}  // namespace dynamo
