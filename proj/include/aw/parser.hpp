#pragma once

#include "aw/ast.hpp"

#include <memory>
#include <string_view>

namespace aw {

/// Parses one translation unit of the supported C subset (see
/// docs/c-subset.md). The result emits back to `source` byte for byte.
std::unique_ptr<SourceUnit> parse(std::string_view source, std::string fileName);

/// What a code fragment is expected to contain.
enum class FragmentKind { Statements, TopLevel, Expression };

/// Parses `text` into nodes owned by `unit` (registered, not yet attached).
/// The returned container holds the items plus the trivia between them.
/// Throws ParseErrorInFragment on any syntax problem.
std::unique_ptr<Node> parseFragment(SourceUnit& unit, std::string_view text, FragmentKind kind);

} // namespace aw
