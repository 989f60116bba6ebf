#pragma once

#include "aw/ctype.hpp"
#include "aw/lexer.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace aw {

enum class NodeKind {
    Unit,
    // top level and block items
    FunctionDef,
    Decl,
    Directive,
    Pragma,
    // statements
    Compound,
    For,
    While,
    Do,
    If,
    Switch,
    Return,
    ExprStmt,
    Label,
    // parts
    Specifiers,
    Declarator,
    FuncDeclarator,
    ParamList,
    Param,
    Expr,
    Call,
    VarRef,
    TypeName,
};

/// Position of a child inside its parent, used to find e.g. a loop's body.
enum class Role { None, Specs, Declarator, Params, Body, Init, Cond, Step, Then, Else, Arg, Extent, Value };

const char* toString(NodeKind kind);

using NodeId = std::uint32_t;

class Node;
using Piece = std::variant<Token, std::unique_ptr<Node>>;

/// A syntax-tree node. Its text is the in-order concatenation of its pieces,
/// which are either tokens (including whitespace and comments) or child nodes.
class Node {
public:
    Node(NodeKind kind, NodeId id) : kind(kind), id(id) {}
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    NodeKind kind;
    NodeId id;
    Role role = Role::None;
    Node* parent = nullptr;
    bool generated = false;
    std::vector<Piece> pieces;

    Node* child(Role r) const;
    std::vector<Node*> children() const;
    std::size_t indexInParent() const; // position inside parent->pieces

    const Token* firstToken() const; // first significant token
    Token* firstToken();
    const Token* lastToken() const;
    int line() const; // line of the first significant token, 0 if generated

    bool isStatement() const;
    bool isLoop() const { return kind == NodeKind::For || kind == NodeKind::While || kind == NodeKind::Do; }

    /// Depth-first, source-order walk over this node and all descendants.
    void walk(const std::function<void(Node&)>& fn);
    void walk(const std::function<void(const Node&)>& fn) const;

    void append(Token t) { pieces.emplace_back(std::move(t)); }
    void append(std::unique_ptr<Node> n);
};

/// Exact source text of a node.
std::string emit(const Node& node);

/// Significant tokens joined by single spaces wherever the source had
/// whitespace or comments; comments themselves are dropped.
std::string compactText(const Node& node);

/// All significant tokens of a subtree, in order.
std::vector<const Token*> significantTokens(const Node& node);

/// One parsed C translation unit. Owns the node tree and the id registry
/// that makes join-point handles detect removed nodes.
class SourceUnit {
public:
    SourceUnit(std::string fileName);
    SourceUnit(const SourceUnit&) = delete;
    SourceUnit& operator=(const SourceUnit&) = delete;

    std::string fileName;
    std::unique_ptr<Node> root;
    std::set<std::string> typedefNames;

    std::unique_ptr<Node> make(NodeKind kind);
    Node* find(NodeId id) const;

    void registerTree(Node& node);
    void unregisterTree(Node& node);

    /// Deep copy of `node` registered under fresh ids. Copied tokens lose
    /// their source positions when `markGenerated` is set.
    std::unique_ptr<Node> cloneTree(const Node& node, bool markGenerated);

    std::string emit() const { return aw::emit(*root); }

    std::vector<Node*> functions() const; // top-level function definitions
    Node* function(std::string_view name) const;
    bool definesOrDeclares(std::string_view name) const;

private:
    NodeId nextId_ = 1;
    std::unordered_map<NodeId, Node*> live_;
};

// --- structural accessors -------------------------------------------------

std::string functionName(const Node& fn);      // FunctionDef or FuncDeclarator
Node* functionDeclarator(const Node& fnOrDecl); // FuncDeclarator of a FunctionDef/prototype
Node* functionBody(const Node& fn);
std::vector<Node*> functionParams(const Node& fn); // Param nodes

/// Declarator helpers. `declarator` is a Declarator node inside a Decl or Param.
Token* declaratorNameToken(Node& declarator);
std::string declaratorName(const Node& declarator);
Node* declaratorSpecifiers(const Node& declarator);
CType declaratorType(const Node& declarator);
CType returnType(const Node& fn);
bool declaratorHasInit(const Node& declarator);

/// Base part of a Specifiers node ("static const double" -> const + double).
CType specifierType(const Node& specifiers);
bool hasStorageClass(const Node& specifiers, std::string_view word);

std::string callName(const Node& call);
Token* callNameToken(Node& call);
std::vector<Node*> callArgs(const Node& call);

/// Nearest ancestor (or self) that is a statement or top-level item.
Node* enclosingStatement(Node& node);
Node* enclosingFunction(Node& node);

/// Pragma nodes immediately preceding `stmt` among its siblings.
std::vector<Node*> attachedPragmas(const Node& stmt);
std::string pragmaText(const Node& pragma); // text after "#pragma", trimmed

/// Replace the text of a token in place, marking it as synthesized.
void rewriteToken(Token& token, std::string text);

} // namespace aw
