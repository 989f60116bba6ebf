#include "aw/autotuner.hpp"

#include "aw/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unistd.h>

namespace aw {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitOn(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

std::optional<double> number(const std::string& s) {
    if (s.empty())
        return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

const char* kStats[] = {"mean", "min", "max", "stddev"};

// Knob values compare as numbers when both are numeric.
int compareKnob(const std::string& a, const std::string& b) {
    const auto x = number(a), y = number(b);
    if (x && y)
        return *x < *y ? -1 : *x > *y ? 1 : 0;
    return a.compare(b) < 0 ? -1 : a == b ? 0 : 1;
}

bool knobsLess(const OperatingPoint& a, const OperatingPoint& b) {
    for (std::size_t i = 0; i < a.knobs.size() && i < b.knobs.size(); ++i)
        if (const int c = compareKnob(a.knobs[i].second, b.knobs[i].second); c != 0)
            return c < 0;
    return false;
}

} // namespace

const std::string* OperatingPoint::knob(std::string_view name) const {
    for (const auto& [k, v] : knobs)
        if (k == name)
            return &v;
    return nullptr;
}

bool KnowledgeBase::hasMetric(std::string_view name) const {
    return std::find(metricNames.begin(), metricNames.end(), name) != metricNames.end();
}

KnowledgeBase parseKnowledge(std::string_view csv) {
    std::vector<std::string> rows;
    std::istringstream in{std::string(csv)};
    for (std::string line; std::getline(in, line);)
        if (!trim(line).empty())
            rows.push_back(line);
    if (rows.empty())
        throw SchemaError("missing header");

    // Column roles from the header.
    struct Column {
        bool isKnob;
        std::string name;
        int stat; // index into kStats
    };
    KnowledgeBase kb;
    std::vector<Column> cols;
    std::map<std::string, std::set<int>> seenStats;
    std::set<std::string> names;
    for (const std::string& h : splitOn(rows[0], ',')) {
        if (h.empty())
            throw SchemaError("empty column name in header");
        std::vector<std::string> parts = splitOn(h, ':');
        if (parts[0] == "knob" && parts.size() == 2) {
            cols.push_back({true, parts[1], -1});
        } else if (parts.size() == 1) {
            cols.push_back({true, parts[0], -1});
        } else {
            if (parts[0] == "metric")
                parts.erase(parts.begin());
            const auto stat = parts.size() == 2 ? std::find(std::begin(kStats), std::end(kStats), parts[1])
                                                : std::end(kStats);
            if (stat == std::end(kStats) || parts[0].empty())
                throw SchemaError("bad column '" + h + "'");
            const int idx = static_cast<int>(stat - std::begin(kStats));
            if (!seenStats[parts[0]].insert(idx).second)
                throw SchemaError("column '" + h + "' repeated");
            cols.push_back({false, parts[0], idx});
            if (std::find(kb.metricNames.begin(), kb.metricNames.end(), parts[0]) == kb.metricNames.end())
                kb.metricNames.push_back(parts[0]);
            continue;
        }
        if (!names.insert(cols.back().name).second)
            throw SchemaError("knob '" + cols.back().name + "' repeated");
        kb.knobNames.push_back(cols.back().name);
    }
    for (const auto& m : kb.metricNames) {
        if (names.count(m))
            throw SchemaError("'" + m + "' is both a knob and a metric");
        if (seenStats[m].size() != 4)
            throw SchemaError("metric '" + m + "' needs mean, min, max and stddev columns");
    }

    std::set<std::vector<std::string>> configs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto cells = splitOn(rows[r], ',');
        const std::string where = "row " + std::to_string(r + 1);
        if (cells.size() != cols.size())
            throw SchemaError(where + ": expected " + std::to_string(cols.size()) + " cells, got " +
                              std::to_string(cells.size()));
        OperatingPoint p;
        std::vector<std::string> config;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (cols[c].isKnob) {
                if (cells[c].empty())
                    throw SchemaError(where + ": empty knob '" + cols[c].name + "'");
                p.knobs.emplace_back(cols[c].name, cells[c]);
                config.push_back(cells[c]);
                continue;
            }
            const auto v = number(cells[c]);
            if (!v)
                throw SchemaError(where + ": metric '" + cols[c].name + "' is not a number: '" + cells[c] + "'");
            MetricStats& s = p.metrics[cols[c].name];
            (cols[c].stat == 0 ? s.mean : cols[c].stat == 1 ? s.min : cols[c].stat == 2 ? s.max : s.stddev) = *v;
        }
        for (const auto& [name, s] : p.metrics) {
            // Printed statistics may be off by rounding in the last digit.
            const double tol = 1e-9 * std::max({1.0, std::fabs(s.min), std::fabs(s.max)});
            if (s.stddev < 0 || s.min > s.mean + tol || s.mean > s.max + tol)
                throw SchemaError(where + ": metric '" + name + "' violates min <= mean <= max, stddev >= 0");
        }
        if (!configs.insert(config).second) {
            std::string text;
            for (const auto& [k, v] : p.knobs)
                text += (text.empty() ? "" : ",") + k + "=" + v;
            throw DuplicatePoint(text);
        }
        kb.points.push_back(std::move(p));
    }
    return kb;
}

KnowledgeBase loadKnowledge(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parseKnowledge(ss.str());
}

Constraint parseConstraint(std::string_view text) {
    Constraint c;
    const std::string t = trim(text);
    auto op = t.find("<=");
    c.relation = Constraint::Relation::AtMost;
    if (op == std::string::npos) {
        op = t.find(">=");
        c.relation = Constraint::Relation::AtLeast;
    }
    const auto colon = t.rfind(':');
    if (op == std::string::npos || colon == std::string::npos || colon < op)
        throw ConfigError("constraint '" + t + "' is not metric<=value:priority or metric>=value:priority");
    c.metric = trim(t.substr(0, op));
    const auto threshold = number(trim(t.substr(op + 2, colon - op - 2)));
    const auto priority = number(trim(t.substr(colon + 1)));
    if (c.metric.empty() || !threshold || !priority || *priority < 1 || std::floor(*priority) != *priority)
        throw ConfigError("constraint '" + t + "' is not metric<=value:priority or metric>=value:priority");
    c.threshold = *threshold;
    c.priority = static_cast<int>(*priority);
    return c;
}

Rank parseRank(std::string_view text) {
    const std::string t = trim(text);
    const auto colon = t.find(':');
    const std::string dir = colon == std::string::npos ? "" : trim(t.substr(0, colon));
    if (dir != "max" && dir != "min")
        throw ConfigError("rank '" + t + "' must start with max: or min:");
    Rank r;
    r.maximize = dir == "max";
    for (const std::string& term : splitOn(t.substr(colon + 1), '+')) {
        const auto star = term.find('*');
        RankTerm rt;
        rt.metric = trim(term.substr(0, star));
        if (star != std::string::npos) {
            const auto w = number(trim(term.substr(star + 1)));
            if (!w)
                throw ConfigError("bad weight in rank term '" + term + "'");
            rt.weight = *w;
        }
        if (rt.metric.empty())
            throw ConfigError("empty rank term in '" + t + "'");
        r.terms.push_back(rt);
    }
    return r;
}

FeedbackState::FeedbackState(std::vector<std::string> metrics, std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0)
        throw ConfigError("feedback capacity must be positive");
    for (auto& m : metrics)
        buffers_[std::move(m)];
}

void FeedbackState::setActive(const OperatingPoint& point) {
    active_ = point;
    for (auto& [name, buf] : buffers_)
        buf.clear();
}

void FeedbackState::observe(const std::string& metric, double value) {
    const auto it = buffers_.find(metric);
    if (it == buffers_.end())
        throw UnknownMetric(metric);
    it->second.push_back(value);
    if (it->second.size() > capacity_)
        it->second.pop_front();
}

double FeedbackState::scale(const std::string& metric) const {
    const auto it = buffers_.find(metric);
    if (it == buffers_.end() || it->second.empty() || !active_)
        return 1.0;
    const auto expected = active_->metrics.find(metric);
    if (expected == active_->metrics.end() || expected->second.mean <= 0)
        return 1.0;
    const double mean = std::accumulate(it->second.begin(), it->second.end(), 0.0) /
                        static_cast<double>(it->second.size());
    return mean > 0 ? mean / expected->second.mean : 1.0;
}

std::size_t FeedbackState::size(const std::string& metric) const {
    const auto it = buffers_.find(metric);
    if (it == buffers_.end())
        throw UnknownMetric(metric);
    return it->second.size();
}

const OperatingPoint& selectBest(const KnowledgeBase& kb, const Problem& problem, const FeedbackState* feedback) {
    if (kb.points.empty())
        throw EmptyKnowledge("knowledge base has no operating points");
    if (problem.rank.terms.empty())
        throw ConfigError("rank needs at least one term");
    std::set<int> priorities;
    for (const auto& c : problem.constraints) {
        if (!kb.hasMetric(c.metric))
            throw UnknownMetric(c.metric);
        if (!priorities.insert(c.priority).second)
            throw ConfigError("two constraints share priority " + std::to_string(c.priority));
    }
    for (const auto& t : problem.rank.terms)
        if (!kb.hasMetric(t.metric))
            throw UnknownMetric(t.metric);

    auto value = [&](const OperatingPoint& p, const std::string& metric) {
        return p.metrics.at(metric).mean * (feedback ? feedback->scale(metric) : 1.0);
    };
    auto rank = [&](const OperatingPoint& p) {
        double r = 0;
        for (const auto& t : problem.rank.terms)
            r += t.weight * value(p, t.metric);
        return r;
    };
    // Amount by which a point misses a constraint, 0 when satisfied.
    auto violation = [&](const OperatingPoint& p, const Constraint& c) {
        const double v = value(p, c.metric);
        return c.relation == Constraint::Relation::AtMost ? std::max(0.0, v - c.threshold)
                                                          : std::max(0.0, c.threshold - v);
    };
    // Is a better than b by rank, then knob order.
    auto better = [&](const OperatingPoint& a, const OperatingPoint& b) {
        const double ra = rank(a), rb = rank(b);
        if (ra != rb)
            return problem.rank.maximize ? ra > rb : ra < rb;
        return knobsLess(a, b);
    };

    std::vector<Constraint> active = problem.constraints;
    std::sort(active.begin(), active.end(), [](const auto& a, const auto& b) { return a.priority < b.priority; });
    while (true) {
        const OperatingPoint* best = nullptr;
        for (const auto& p : kb.points) {
            const bool ok = std::all_of(active.begin(), active.end(),
                                        [&](const Constraint& c) { return violation(p, c) == 0; });
            if (ok && (!best || better(p, *best)))
                best = &p;
        }
        if (best)
            return *best;
        if (active.size() == 1)
            break;
        active.pop_back();
    }

    const Constraint& top = active.front();
    const OperatingPoint* best = nullptr;
    for (const auto& p : kb.points) {
        if (!best) {
            best = &p;
            continue;
        }
        const double vp = violation(p, top), vb = violation(*best, top);
        if (vp < vb || (vp == vb && better(p, *best)))
            best = &p;
    }
    return *best;
}

std::string knobFileText(const OperatingPoint& point) {
    std::string out;
    for (const auto& [k, v] : point.knobs)
        out += k + "=" + v + "\n";
    return out;
}

void writeKnobFile(const OperatingPoint& point, const std::filesystem::path& path) {
    writeFileAtomic(path, knobFileText(point));
}

void writeFileAtomic(const std::filesystem::path& path, std::string_view text) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("cannot write " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot write " + path.string() + ": " + ec.message());
    }
}

} // namespace aw
