#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aw {

struct MetricStats {
    double mean = 0, min = 0, max = 0, stddev = 0;
};

struct OperatingPoint {
    std::vector<std::pair<std::string, std::string>> knobs; // knowledge column order
    std::map<std::string, MetricStats> metrics;

    const std::string* knob(std::string_view name) const;
};

struct KnowledgeBase {
    std::vector<std::string> knobNames;
    std::vector<std::string> metricNames;
    std::vector<OperatingPoint> points;

    bool hasMetric(std::string_view name) const;
};

/// Knowledge CSV: `knob:<name>` columns (a bare name also counts as a knob),
/// then `metric:<name>:<stat>` or `<name>:<stat>` for stat in mean, min,
/// max, stddev. Throws SchemaError, DuplicatePoint or IoError.
KnowledgeBase parseKnowledge(std::string_view csv);
KnowledgeBase loadKnowledge(const std::filesystem::path& path);

struct Constraint {
    enum class Relation { AtMost, AtLeast };
    std::string metric;
    Relation relation = Relation::AtMost;
    double threshold = 0;
    int priority = 1; // 1 is the most important
};

struct RankTerm {
    std::string metric;
    double weight = 1;
};

struct Rank {
    bool maximize = true;
    std::vector<RankTerm> terms;
};

struct Problem {
    std::vector<Constraint> constraints;
    Rank rank;
};

/// `metric<=value:priority` or `metric>=value:priority`. ConfigError.
Constraint parseConstraint(std::string_view text);
/// `max|min:metric[*weight][+metric[*weight]...]`. ConfigError.
Rank parseRank(std::string_view text);

/// Per-metric ring buffers of runtime observations. The scale of a metric is
/// the buffer mean over the active point's expected mean.
class FeedbackState {
public:
    explicit FeedbackState(std::vector<std::string> metrics, std::size_t capacity = 16);

    /// Switches the reference point and drops older observations.
    void setActive(const OperatingPoint& point);
    void observe(const std::string& metric, double value); // UnknownMetric
    double scale(const std::string& metric) const;
    std::size_t size(const std::string& metric) const;
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::map<std::string, std::deque<double>> buffers_;
    std::optional<OperatingPoint> active_;
};

/// Best point under `problem`, with means multiplied by the feedback scales.
/// Infeasible problems drop constraints from the lowest priority upwards; if
/// even the priority-1 constraint alone cannot be met, the point violating it
/// least wins. Ties go to the rank, then to the smallest knob tuple. Throws
/// EmptyKnowledge, UnknownMetric or ConfigError (duplicate priorities, no
/// rank term).
const OperatingPoint& selectBest(const KnowledgeBase& kb, const Problem& problem,
                                 const FeedbackState* feedback = nullptr);

/// `name=value` lines in knob order.
std::string knobFileText(const OperatingPoint& point);
void writeKnobFile(const OperatingPoint& point, const std::filesystem::path& path); // IoError

/// Writes `text` to a sibling temp file and renames it over `path`.
void writeFileAtomic(const std::filesystem::path& path, std::string_view text);

} // namespace aw
