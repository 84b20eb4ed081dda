#include "dynamo/events.hpp"

#include <algorithm>
#include <sstream>

#include "csv_util.hpp"
#include "dynamo/error.hpp"

namespace dynamo {

namespace {

Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

Timestamp positive_mod(Timestamp a, Timestamp b) { return a - floor_div(a, b) * b; }

std::string describe(const Event& e, std::size_t index) {
    std::ostringstream os;
    os << "event #" << index << " (" << e.kind << ", " << e.begin << ", " << e.end << ")";
    return os.str();
}

}  // namespace

std::size_t EventSequence::interval_count() const {
    if (delta <= 0) throw ValidationError("interval length must be positive");
    if (end <= start) return 0;
    return static_cast<std::size_t>((end - start + delta - 1) / delta);
}

Timestamp EventSequence::interval_end(std::size_t j) const {
    return std::min(start + static_cast<Timestamp>(j) * delta, end);
}

void EventSequence::validate() const {
    if (delta <= 0) throw ValidationError("interval length must be positive");
    if (end < start) throw ValidationError("monitoring end precedes monitoring start");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.begin >= e.end) throw ValidationError(describe(e, i) + ": begin must precede end");
        if (e.begin < start || e.end > end)
            throw ValidationError(describe(e, i) + ": outside the monitoring period [" + std::to_string(start) +
                                  ", " + std::to_string(end) + ")");
        if (i > 0) {
            const Event& prev = events[i - 1];
            if (e.begin < prev.begin)
                throw ValidationError(describe(e, i) + ": events are not sorted by begin time");
            if (e.begin < prev.end)
                throw ValidationError(describe(prev, i - 1) + " overlaps " + describe(e, i));
        }
    }
}

EventSequence EventSequence::of_kind(const std::string& kind) const {
    EventSequence out{{}, start, end, delta};
    std::copy_if(events.begin(), events.end(), std::back_inserter(out.events),
                 [&](const Event& e) { return e.kind == kind; });
    return out;
}

std::vector<IntervalEvents> partition_and_split(const EventSequence& seq) {
    seq.validate();
    const std::size_t n = seq.interval_count();
    std::vector<IntervalEvents> out(n);
    for (std::size_t j = 1; j <= n; ++j) {
        out[j - 1].index = j;
        out[j - 1].begin = seq.interval_begin(j);
        out[j - 1].end = seq.interval_end(j);
    }
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const Event& e = seq.events[i];
        auto j = static_cast<std::size_t>(floor_div(e.begin - seq.start, seq.delta));
        Timestamp cursor = e.begin;
        while (cursor < e.end) {
            const Timestamp cut = std::min(e.end, out[j].end);
            out[j].fragments.push_back({{e.kind, cursor, cut}, i});
            cursor = cut;
            ++j;
        }
    }
    return out;
}

Timestamp ObservationWindow::length() const {
    const Timestamp len = positive_mod(end_clock - begin_clock, kSecondsPerDay);
    return len == 0 ? kSecondsPerDay : len;
}

std::vector<DailyFeatureRow> extract_daily_features(const std::vector<IntervalEvents>& intervals,
                                                    const ObservationWindow& window) {
    std::vector<DailyFeatureRow> rows;
    rows.reserve(intervals.size());
    std::vector<Event> pieces;
    std::vector<std::size_t> sources;

    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const IntervalEvents& iv = intervals[k];
        Timestamp open = iv.begin;
        Timestamp close = iv.end;
        if (window.enabled) {
            open = iv.begin + positive_mod(window.begin_clock - iv.begin, kSecondsPerDay);
            close = open + window.length();
        }

        pieces.clear();
        sources.clear();
        for (std::size_t q = k; q < intervals.size() && intervals[q].begin < close; ++q) {
            for (const EventFragment& frag : intervals[q].fragments) {
                const Timestamp b = std::max(frag.event.begin, open);
                const Timestamp f = std::min(frag.event.end, close);
                if (b >= f) continue;
                // Pieces of one split event are glued back together.
                if (!pieces.empty() && sources.back() == frag.source && pieces.back().end == b) {
                    pieces.back().end = f;
                    continue;
                }
                pieces.push_back({frag.event.kind, b, f});
                sources.push_back(frag.source);
            }
        }

        DailyFeatureRow row{iv.index, std::nullopt};
        if (!pieces.empty()) {
            double total = 0.0;
            double gaps = 0.0;
            for (std::size_t p = 0; p < pieces.size(); ++p) {
                total += static_cast<double>(pieces[p].duration());
                if (p > 0) gaps += static_cast<double>(pieces[p].begin - pieces[p - 1].end);
            }
            row.features = std::vector<double>{static_cast<double>(pieces.front().begin - open),
                                               static_cast<double>(pieces.back().end - open), total,
                                               static_cast<double>(pieces.size()), gaps};
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

EventSequence load_events(const std::filesystem::path& path, const LoadOptions& options) {
    if (options.delta <= 0) throw ValidationError("interval length must be positive", path.string());
    auto in = csv::open_in(path);
    EventSequence seq;
    seq.delta = options.delta;
    bool have_bounds = false;
    bool saw_header = false;
    std::vector<std::size_t> line_of;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = csv::trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            // "# monitoring start=<s> end=<t> delta=<d>"
            std::istringstream meta{std::string(view.substr(1))};
            std::string word;
            Timestamp s = 0, t = 0, d = 0;
            int found = 0;
            while (meta >> word) {
                const auto eq = word.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = word.substr(0, eq);
                Timestamp value = 0;
                if (!csv::parse_int(std::string_view(word).substr(eq + 1), value))
                    throw ValidationError("malformed metadata value '" + word + "'", path.string(), lineno);
                if (key == "start") s = value, found |= 1;
                if (key == "end") t = value, found |= 2;
                if (key == "delta") d = value, found |= 4;
            }
            if (found == 7) {
                seq.start = s;
                seq.end = t;
                seq.delta = d;
                have_bounds = true;
            }
            continue;
        }
        if (!saw_header) {
            saw_header = true;
            if (view == "kind,begin,end") continue;
            throw ValidationError("expected header 'kind,begin,end'", path.string(), lineno);
        }
        const auto fields = csv::split(view);
        if (fields.size() != 3)
            throw ValidationError("expected 3 fields, found " + std::to_string(fields.size()), path.string(),
                                  lineno);
        Event e;
        e.kind = std::string(csv::trim(fields[0]));
        if (e.kind.empty()) throw ValidationError("empty event kind", path.string(), lineno);
        if (!csv::parse_int(fields[1], e.begin))
            throw ValidationError("begin is not an integer timestamp", path.string(), lineno);
        if (!csv::parse_int(fields[2], e.end))
            throw ValidationError("end is not an integer timestamp", path.string(), lineno);
        if (e.begin >= e.end) throw ValidationError("begin must precede end", path.string(), lineno);
        if (!seq.events.empty()) {
            const Event& prev = seq.events.back();
            if (e.begin < prev.begin)
                throw ValidationError("events are not sorted by begin time", path.string(), lineno);
            if (e.begin < prev.end)
                throw ValidationError("event overlaps the event on line " + std::to_string(line_of.back()),
                                      path.string(), lineno);
        }
        seq.events.push_back(std::move(e));
        line_of.push_back(lineno);
    }
    if (!saw_header && !have_bounds) throw ValidationError("missing header 'kind,begin,end'", path.string());

    if (!have_bounds) {
        if (seq.events.empty()) {
            seq.start = seq.end = 0;
        } else {
            const Timestamp anchor = positive_mod(options.anchor_clock, seq.delta);
            const Timestamp first = seq.events.front().begin;
            const Timestamp last = seq.events.back().end;
            seq.start = anchor + floor_div(first - anchor, seq.delta) * seq.delta;
            seq.end = anchor - floor_div(anchor - last, seq.delta) * seq.delta;
        }
    }
    try {
        seq.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(e.what(), path.string());
    }
    return seq;
}

void save_events(const EventSequence& seq, const std::filesystem::path& path) {
    auto out = csv::open_out(path);
    out << "# monitoring start=" << seq.start << " end=" << seq.end << " delta=" << seq.delta << "\n";
    out << "kind,begin,end\n";
    for (const Event& e : seq.events) out << e.kind << ',' << e.begin << ',' << e.end << '\n';
    if (!out) throw ValidationError("write failed", path.string());
}

std::vector<DailyFeatureRow> load_feature_rows(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    std::vector<DailyFeatureRow> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = csv::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = csv::split(view);
        if (!saw_header) {
            saw_header = true;
            if (fields.size() < 2 || csv::trim(fields[0]) != "interval")
                throw ValidationError("expected header 'interval,z1,...'", path.string(), lineno);
            width = fields.size() - 1;
            continue;
        }
        DailyFeatureRow row;
        if (!csv::parse_int(fields[0], row.interval_index))
            throw ValidationError("interval is not an integer", path.string(), lineno);
        ++row.interval_index;  // 0-based on disk
        if (csv::trim(fields[1]) == "empty") {
            rows.push_back(std::move(row));
            continue;
        }
        if (fields.size() != width + 1)
            throw ValidationError("expected " + std::to_string(width + 1) + " fields", path.string(), lineno);
        std::vector<double> values(width);
        for (std::size_t h = 0; h < width; ++h)
            if (!csv::parse_double(fields[h + 1], values[h]))
                throw ValidationError("feature " + std::to_string(h + 1) + " is not a number", path.string(),
                                      lineno);
        row.features = std::move(values);
        rows.push_back(std::move(row));
    }
    if (!saw_header) throw ValidationError("missing header", path.string());
    return rows;
}

void save_feature_rows(const std::vector<DailyFeatureRow>& rows, const std::filesystem::path& path) {
    std::size_t width = kSleepFeatureCount;
    for (const auto& r : rows)
        if (r.features) {
            width = r.features->size();
            break;
        }
    auto out = csv::open_out(path);
    out << "interval";
    for (std::size_t h = 1; h <= width; ++h) out << ",z" << h;
    out << '\n';
    for (const auto& r : rows) {
        out << (r.interval_index == 0 ? 0 : r.interval_index - 1);
        if (!r.features) {
            for (std::size_t h = 0; h < width; ++h) out << ",empty";
        } else {
            for (double v : *r.features) out << ',' << csv::format_double(v);
        }
        out << '\n';
    }
    if (!out) throw ValidationError("write failed", path.string());
}

}  // namespace dynamo
