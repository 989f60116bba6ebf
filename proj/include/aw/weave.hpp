#pragma once

#include "aw/ast.hpp"
#include "aw/ctype.hpp"
#include "aw/edit.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aw {

enum class JpKind { File, Function, Decl, Stmt, Loop, Call, Pragma, VarRef };

const char* toString(JpKind kind);
std::optional<JpKind> jpKindFromString(std::string_view name);

/// Names of the attributes readable on a join point of `kind`.
const std::vector<std::string>& attributeNames(JpKind kind);

/// Handle to a node of a Session's unit. Resolving a handle whose node has
/// been replaced or removed raises InvalidAnchor.
struct JoinPoint {
    JpKind kind = JpKind::File;
    NodeId node = 0;

    friend bool operator==(const JoinPoint&, const JoinPoint&) = default;
};

/// One `attr op value` test; op is ==, != or contains.
struct Filter {
    std::string attribute;
    std::string op = "==";
    std::string value;
};

struct ChainStep {
    JpKind kind = JpKind::Function;
    std::vector<Filter> filters; // all must hold
};

using SelectChain = std::vector<ChainStep>;
using JpTuple = std::vector<JoinPoint>;

/// Whether `child` may follow `parent` in a select chain.
bool legalStep(JpKind parent, JpKind child);

/// Throws IllegalChain when a chain is not a legal path from the file.
void validateChain(const SelectChain& chain);

struct WeaveReport {
    long selects = 0;
    long attributes = 0;
    long actions = 0;
    long inserts = 0;
    long nativeSloc = 0;

    static std::string csvHeader(); // File,Selects,Attributes,Actions,Inserts,NativeSLoC
    std::string csvRow(const std::string& file) const;
};

struct StaticMetricsRow {
    int aspectSloc = 0;
    int aspectCount = 0;
    int inputSloc = 0;
    int inputFuncs = 0;
    int wovenSloc = 0;
    int wovenFuncs = 0;
    int deltaSloc = 0;
    int deltaFuncs = 0;

    static std::string csvHeader();
    std::string csvRow(const std::string& file) const;
};

StaticMetricsRow staticMetrics(const SourceUnit& input, const SourceUnit& woven, int aspectSloc,
                               int aspectCount);

/// A unit being woven plus the counters of everything done to it.
class Session {
public:
    explicit Session(std::unique_ptr<SourceUnit> unit);

    SourceUnit& unit() { return *unit_; }
    const SourceUnit& unit() const { return *unit_; }
    WeaveReport& report() { return report_; }
    const WeaveReport& report() const { return report_; }

    JoinPoint file() const { return {JpKind::File, unit_->root->id}; }

    /// Evaluates `chain` from the file (or from `from` when given, whose kind
    /// must be able to precede the first step). Tuples come in depth-first
    /// source order and exclude `from`.
    std::vector<JpTuple> select(const SelectChain& chain);
    std::vector<JpTuple> select(const SelectChain& chain, const JoinPoint& from);

    /// Counted attribute read; values are strings ("true"/"false" for flags).
    std::string attribute(const JoinPoint& jp, std::string_view name);
    /// Same value without touching the counters.
    std::string peekAttribute(const JoinPoint& jp, std::string_view name) const;

    Node& resolve(const JoinPoint& jp) const;
    bool alive(const JoinPoint& jp) const;

    /// Inserts parsed code next to the statement (or top-level item) that
    /// holds `jp`. Returns the inserted items as stmt join points.
    std::vector<JoinPoint> insert(const JoinPoint& jp, InsertPosition where, std::string_view code);

    void setType(const JoinPoint& decl, const CType& type);

    JoinPoint cloneFunction(const JoinPoint& fn, const std::string& newName);

    /// The function's return-type pseudo-declaration.
    JoinPoint returnDecl(const JoinPoint& fn) const;

    JoinPoint functionJp(const std::string& name) const; // FunctionNotFound
    JoinPoint jpFor(JpKind kind, Node& node) const { return {kind, node.id}; }

    /// For strategies that edit the tree directly.
    void recordAction() { ++report_.actions; }
    void recordInsert(int sloc) {
        ++report_.actions;
        ++report_.inserts;
        report_.nativeSloc += sloc;
    }

private:
    void collect(JpKind parentKind, Node& parent, JpKind kind, std::vector<Node*>& out) const;
    void selectFrom(const SelectChain& chain, std::size_t step, const JoinPoint& parent,
                    JpTuple& prefix, std::vector<JpTuple>& out);

    std::unique_ptr<SourceUnit> unit_;
    WeaveReport report_;
};

/// Loop helpers shared with the strategies.
std::string loopIndexVar(const Node& loop);
bool isInnermostLoop(const Node& loop);

} // namespace aw
