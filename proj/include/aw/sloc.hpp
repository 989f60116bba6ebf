#pragma once

#include "aw/ast.hpp"

#include <string_view>

namespace aw {

/// Logical source lines: one per declaration, statement, function signature,
/// control-flow header and preprocessor line. Braces, blank lines and
/// comments count zero, so the value is independent of formatting.
int countSlocL(const Node& node);
int countSlocL(const SourceUnit& unit);

/// Number of function definitions in the unit.
int countFunctions(const SourceUnit& unit);

} // namespace aw
