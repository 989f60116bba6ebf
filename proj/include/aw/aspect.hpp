#pragma once

#include "aw/strategies.hpp"
#include "aw/weave.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aw {

/// A value written in a script: a string (may hold `%{...}` references), a
/// number, a bare word or an aspect input (`$name`).
struct AspectValue {
    enum class Kind { String, Number, Word, Input };
    Kind kind = Kind::String;
    std::string text;
};

struct AspectFilter {
    std::string attribute;
    std::string op; // "==", "!=", "contains"
    AspectValue value;
};

struct AspectStep {
    JpKind kind;
    std::vector<AspectFilter> filters;
};

struct AspectSelect {
    std::string name;
    std::vector<AspectStep> chain;
    int line = 0;
};

struct ConditionExpr {
    enum class Op { Or, And, Not, Compare, Operand };
    struct Operand {
        enum class Kind { Attribute, Input, Literal };
        Kind kind = Kind::Literal;
        std::string scope; // join point kind for attributes
        std::string name;  // attribute, input name, or the literal text
    };
    Op op = Op::Operand;
    std::string compare; // "==", "!=", "contains"
    std::vector<std::shared_ptr<const ConditionExpr>> children;
    Operand lhs, rhs;
};
using ConditionPtr = std::shared_ptr<const ConditionExpr>;

struct AspectArg {
    std::string name; // empty for positional
    AspectValue value;
};

struct AspectCall {
    std::string aspect;
    std::vector<AspectArg> args;
    int line = 0;
};

struct AspectAction {
    enum class Type { Insert, SetType, Clone, Call, Builtin };
    Type type = Type::Insert;
    std::optional<JpKind> target; // `$loop.insert ...`; last join point otherwise
    InsertPosition where = InsertPosition::Before;
    std::string text;             // insert/setType/clone argument, builtin action name
    std::vector<AspectValue> args; // builtin action arguments
    AspectCall call;
    int line = 0;
};

struct AspectApply {
    std::string select;
    ConditionPtr condition; // null when absent
    std::vector<AspectAction> actions;
    int line = 0;
};

struct AspectDef {
    struct Input {
        std::string name;
        std::optional<std::string> defaultValue;
    };
    struct Member {
        enum class Kind { Select, Apply, Call };
        Kind kind;
        std::size_t index;
    };

    std::string name;
    std::vector<Input> inputs;
    std::vector<AspectSelect> selects;
    std::vector<AspectApply> applies;
    std::vector<AspectCall> calls;
    std::vector<Member> members; // textual order
    int line = 0;

    const AspectSelect* select(const std::string& name) const;
};

struct AspectProgram {
    std::vector<AspectDef> aspects;
    std::string entry; // first aspect

    const AspectDef* find(const std::string& name) const;
    /// Logical lines: one per input, select, apply, condition, action and call.
    int sloc() const;
};

/// Parses and validates a script. Throws AspectSyntaxError, UnknownSelectRef,
/// UnknownAspectRef, RecursionCycle, UnknownAttribute or IllegalChain, each
/// message starting with the line.
AspectProgram parseAspect(std::string_view text);

/// Names and inputs of the predefined aspects backed by native strategies.
struct BuiltinAspect {
    std::string name;
    std::vector<AspectDef::Input> inputs;
    std::string summary;
};
const std::vector<BuiltinAspect>& builtinAspects();

struct WeaveOutput {
    std::vector<SupportFile> supportFiles; // e.g. memo tables, runtime sources
};

/// Runs the entry aspect on the session. `args` binds entry inputs. Errors
/// from actions are rethrown as AspectRuntimeError naming aspect and line.
WeaveOutput runAspects(const AspectProgram& program, Session& session,
                       const std::map<std::string, std::string>& args);

} // namespace aw
