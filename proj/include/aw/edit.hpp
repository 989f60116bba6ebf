#pragma once

#include "aw/ast.hpp"
#include "aw/parser.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace aw {

enum class InsertPosition { Before, After, Replace };

/// Fixed layout for synthesized code: 4-space indentation, one statement per
/// line, `{` on the header line. The first line carries no indentation; each
/// following line is prefixed by `indent` plus its nesting.
std::string prettyPrint(const Node& node, const std::string& indent);

/// Parses `text`, lays it out with prettyPrint at `indent` and returns the
/// container of generated nodes (items separated by newline+indent tokens).
std::unique_ptr<Node> generate(SourceUnit& unit, std::string_view text, FragmentKind kind,
                               const std::string& indent);

/// Leading whitespace of the line on which `node` starts.
std::string lineIndent(const Node& node);

/// Generates `text` and splices it next to (or in place of) `anchor`, which
/// must be a statement or a top-level item. Code placed next to a lone
/// sub-statement (e.g. an unbraced loop body) is wrapped in a new block;
/// code inserted before a statement goes above its attached pragmas.
/// Returns the inserted item nodes and their logical line count.
struct InsertResult {
    std::vector<Node*> items;
    int sloc = 0;
};
InsertResult insertCode(SourceUnit& unit, Node& anchor, InsertPosition where, std::string_view text);

/// Replaces `target` (any node) by the pieces of `replacement`, unregistering
/// the removed subtree.
void replaceWithPieces(SourceUnit& unit, Node& target, Node& replacement);

/// Removes `node` from its parent and unregisters it.
void removeNode(SourceUnit& unit, Node& node);

/// Replaces the significant tokens of `node`'s own pieces in [first, last]
/// (indices into node.pieces) with the tokens of `text`.
void replacePieceRange(SourceUnit& unit, Node& node, std::size_t first, std::size_t last,
                       std::string_view text);

/// Rewrites a Specifiers node to `type`'s qualifiers and base, keeping its
/// storage-class words. Tagged definitions (`struct s { ... }`) are rejected.
void rewriteSpecifiers(SourceUnit& unit, Node& specs, const CType& type);

void markGenerated(Node& node);

Token makeToken(TokenKind kind, std::string text);

} // namespace aw
