#pragma once

#include "aw/ast.hpp"

#include <set>
#include <string>
#include <vector>

namespace aw {

/// One use of a variable inside an expression or declaration, found by a
/// name-based token scan (no alias analysis).
struct Access {
    std::string name;           // root variable; empty for an lvalue we cannot name
    bool read = false;          // value is read (compound assignment and ++ read too)
    bool write = false;         // assigned, incremented or declared with an initializer
    bool declaration = false;   // introduced by a declarator
    std::string op;             // "=", "+=", ..., "++", "--" for writes
    bool deref = false;         // write through unary * or ->
    bool addressTaken = false;  // &name
    std::vector<std::string> subscripts; // text of each [...] after the name
    std::string rhs;            // right-hand side text of an assignment
    std::set<std::string> rhsNames;
    const Node* stmt = nullptr; // enclosing statement (or for loop for header parts)
};

/// All accesses below `root` in source order.
std::vector<Access> collectAccesses(const Node& root);

/// Call nodes below `root` in source order.
std::vector<const Node*> callsIn(const Node& root);

/// Names declared as parameters or anywhere in the body of `fn`.
std::set<std::string> localNames(const Node& fn);

/// Declared type of a local or parameter `name` in `fn` (first declaration).
bool localType(const Node& fn, const std::string& name, CType& out);

/// Side-effect-free C library math functions.
bool isPureLibraryFunction(std::string_view name);

/// Names of functions defined in `unit` that `fn` calls directly, in call order.
std::vector<std::string> definedCallees(const SourceUnit& unit, const Node& fn);

} // namespace aw
