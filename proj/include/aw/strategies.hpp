#pragma once

#include "aw/weave.hpp"

#include <map>
#include <string>
#include <vector>

namespace aw {

// --- precision -----------------------------------------------------------------

struct PrecisionMap {
    std::string oldBase = "double";
    std::string newBase = "float";
    std::map<std::string, std::string> libm; // sqrt -> sqrtf, ...
    std::string literalSuffix = "f";         // appended to unsuffixed floating literals

    /// double -> float with sqrt, fabs, pow, exp, log (and the other <math.h>
    /// functions that have an f variant).
    static PrecisionMap doubleToFloat();
    static PrecisionMap floatToDouble();
    /// One of the two maps above, chosen by base names.
    static PrecisionMap between(const std::string& oldBase, const std::string& newBase);
};

/// Rewrites, inside function `name`: parameters, locals, return type, cast and
/// sizeof type names, floating literal suffixes and library calls; also the
/// function's top-level prototypes. Counts one action per rewritten declarator.
void changePrecision(Session& s, const std::string& name, const PrecisionMap& map);

/// The part of changePrecision that is not a declaration: prototypes, type
/// names, literals and library calls. Not counted as actions.
void adaptPrecisionUses(Session& s, const std::string& name, const PrecisionMap& map);

/// Clones `root` and every function it transitively calls that is defined in
/// the unit, renaming each with `suffix` and redirecting calls between clones.
/// Returns the clone names, root first.
std::vector<std::string> cloneCallTree(Session& s, const std::string& root, const std::string& suffix);

/// cloneCallTree followed by changePrecision on each clone.
std::vector<std::string> createTypedVersion(Session& s, const std::string& root,
                                            const std::string& suffix, const PrecisionMap& map);

/// One mixed-precision assignment over the call tree of a root function.
struct PrecisionMix {
    std::vector<std::string> functions; // call-tree order, root first
    std::vector<std::string> bases;     // "double" or "float" per function
};

/// Assignments over {double, float} in lexicographic order (double < float),
/// excluding the all-double original and any mix where a double function
/// calls a float one. At most `limit` entries.
std::vector<PrecisionMix> enumerateMixes(const SourceUnit& unit, const std::string& root, int limit);

/// Generates one cloned call tree per mix (suffix `_mix<k>`, k from 1) with
/// the float-assigned clones converted. Returns the root name of each version.
std::vector<std::string> generateMixedVersions(Session& s, const std::string& root, int limit);

// --- multiversion --------------------------------------------------------------

/// Replaces the statement holding `call` by a switch on knob `knob` that runs
/// versions[k] for knob value k, each arm timed and reported on the metric
/// feed. Out-of-range values run versions[0] and flag `knob_oob`.
void multiversion(Session& s, const JoinPoint& call, const std::vector<std::string>& versions,
                  const std::string& knob);

/// The `aw_runtime.h` / `aw_runtime.c` support pair used by woven programs
/// (monotonic clock, knob reader, metric feed).
std::string runtimeHeader();
std::string runtimeSource();

// --- memoization ---------------------------------------------------------------

enum class MemoPolicy { Keep = 0, Replace = 1 };

struct MemoConfig {
    std::string function;
    int tableSize = 1024;
    MemoPolicy policy = MemoPolicy::Replace;
    bool enabledByDefault = true;
    bool force = false; // skip the purity check
};

struct SupportFile {
    std::string name;
    std::string text;
};

/// Adds `<fn>_wrapper` after the function, routes every call through it and
/// returns the generated `aw_memo_<fn>.h/.c` table sources.
std::vector<SupportFile> memoize(Session& s, const MemoConfig& cfg);

/// Functions without observable side effects whose result depends only on
/// their scalar arguments, in definition order.
std::vector<std::string> detectMemoizable(const SourceUnit& unit);

// --- parallelization -----------------------------------------------------------

struct LoopVerdict {
    std::string id;       // <function>:<ordinal>
    std::string function;
    int line = 0;
    bool parallelizable = false;
    std::string reason;   // "ok" or the first blocking issue
    std::vector<std::string> reductionVars; // "op:var"
    std::vector<std::string> privateVars;
};

struct ParallelizationReport {
    std::vector<LoopVerdict> loops;
    std::string toJson() const;
};

/// Inserts `#pragma omp parallel for` above every for-loop found safe.
ParallelizationReport autoParallelize(Session& s);

/// Comments out `parallel for` pragmas whose loop lies inside another loop
/// that carries one. Returns the number of pragmas disabled.
int disableNestedParallelPragmas(Session& s);

} // namespace aw
