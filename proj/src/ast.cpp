#include "aw/ast.hpp"

#include "aw/error.hpp"

#include <algorithm>

namespace aw {

const char* toString(NodeKind kind) {
    switch (kind) {
    case NodeKind::Unit: return "unit";
    case NodeKind::FunctionDef: return "function";
    case NodeKind::Decl: return "decl";
    case NodeKind::Directive: return "directive";
    case NodeKind::Pragma: return "pragma";
    case NodeKind::Compound: return "compound";
    case NodeKind::For: return "for";
    case NodeKind::While: return "while";
    case NodeKind::Do: return "do";
    case NodeKind::If: return "if";
    case NodeKind::Switch: return "switch";
    case NodeKind::Return: return "return";
    case NodeKind::ExprStmt: return "expr-stmt";
    case NodeKind::Label: return "label";
    case NodeKind::Specifiers: return "specifiers";
    case NodeKind::Declarator: return "declarator";
    case NodeKind::FuncDeclarator: return "func-declarator";
    case NodeKind::ParamList: return "param-list";
    case NodeKind::Param: return "param";
    case NodeKind::Expr: return "expr";
    case NodeKind::Call: return "call";
    case NodeKind::VarRef: return "varref";
    case NodeKind::TypeName: return "type-name";
    }
    return "?";
}

// --- Node ------------------------------------------------------------------

Node* Node::child(Role r) const {
    for (const auto& p : pieces)
        if (const auto* n = std::get_if<std::unique_ptr<Node>>(&p); n && (*n)->role == r)
            return n->get();
    return nullptr;
}

std::vector<Node*> Node::children() const {
    std::vector<Node*> out;
    for (const auto& p : pieces)
        if (const auto* n = std::get_if<std::unique_ptr<Node>>(&p))
            out.push_back(n->get());
    return out;
}

std::size_t Node::indexInParent() const {
    if (!parent)
        return 0;
    for (std::size_t i = 0; i < parent->pieces.size(); ++i)
        if (const auto* n = std::get_if<std::unique_ptr<Node>>(&parent->pieces[i]);
            n && n->get() == this)
            return i;
    return parent->pieces.size();
}

const Token* Node::firstToken() const {
    for (const auto& p : pieces) {
        if (const auto* t = std::get_if<Token>(&p)) {
            if (!t->isTrivia())
                return t;
        } else if (const Token* inner = std::get<std::unique_ptr<Node>>(p)->firstToken()) {
            return inner;
        }
    }
    return nullptr;
}

Token* Node::firstToken() {
    return const_cast<Token*>(static_cast<const Node*>(this)->firstToken());
}

const Token* Node::lastToken() const {
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
        if (const auto* t = std::get_if<Token>(&*it)) {
            if (!t->isTrivia())
                return t;
        } else if (const Token* inner = std::get<std::unique_ptr<Node>>(*it)->lastToken()) {
            return inner;
        }
    }
    return nullptr;
}

int Node::line() const {
    const Token* t = firstToken();
    return t ? t->line : 0;
}

bool Node::isStatement() const {
    switch (kind) {
    case NodeKind::Compound:
    case NodeKind::For:
    case NodeKind::While:
    case NodeKind::Do:
    case NodeKind::If:
    case NodeKind::Switch:
    case NodeKind::Return:
    case NodeKind::ExprStmt:
    case NodeKind::Label:
    case NodeKind::Pragma:
    case NodeKind::Directive:
        return true;
    case NodeKind::Decl:
        return parent && parent->kind != NodeKind::Unit && role != Role::Init;
    default:
        return false;
    }
}

void Node::walk(const std::function<void(Node&)>& fn) {
    fn(*this);
    for (auto& p : pieces)
        if (auto* n = std::get_if<std::unique_ptr<Node>>(&p))
            (*n)->walk(fn);
}

void Node::walk(const std::function<void(const Node&)>& fn) const {
    fn(*this);
    for (const auto& p : pieces)
        if (const auto* n = std::get_if<std::unique_ptr<Node>>(&p))
            static_cast<const Node&>(**n).walk(fn);
}

void Node::append(std::unique_ptr<Node> n) {
    n->parent = this;
    pieces.emplace_back(std::move(n));
}

// --- text ------------------------------------------------------------------

namespace {

void emitInto(const Node& node, std::string& out) {
    for (const auto& p : node.pieces) {
        if (const auto* t = std::get_if<Token>(&p))
            out += t->text;
        else
            emitInto(*std::get<std::unique_ptr<Node>>(p), out);
    }
}

void collectTokens(const Node& node, std::vector<const Token*>& out, bool withTrivia) {
    for (const auto& p : node.pieces) {
        if (const auto* t = std::get_if<Token>(&p)) {
            if (withTrivia || !t->isTrivia())
                out.push_back(t);
        } else {
            collectTokens(*std::get<std::unique_ptr<Node>>(p), out, withTrivia);
        }
    }
}

} // namespace

std::string emit(const Node& node) {
    std::string out;
    emitInto(node, out);
    return out;
}

std::vector<const Token*> significantTokens(const Node& node) {
    std::vector<const Token*> out;
    collectTokens(node, out, false);
    return out;
}

std::string compactText(const Node& node) {
    std::vector<const Token*> toks;
    collectTokens(node, toks, true);
    std::string out;
    bool pendingSpace = false;
    for (const Token* t : toks) {
        if (t->isTrivia()) {
            pendingSpace = true;
            continue;
        }
        if (pendingSpace && !out.empty())
            out += ' ';
        pendingSpace = false;
        out += t->text;
    }
    return out;
}

// --- SourceUnit ------------------------------------------------------------

SourceUnit::SourceUnit(std::string name) : fileName(std::move(name)) {
    root = make(NodeKind::Unit);
}

std::unique_ptr<Node> SourceUnit::make(NodeKind kind) {
    auto node = std::make_unique<Node>(kind, nextId_++);
    live_[node->id] = node.get();
    return node;
}

Node* SourceUnit::find(NodeId id) const {
    const auto it = live_.find(id);
    return it == live_.end() ? nullptr : it->second;
}

void SourceUnit::registerTree(Node& node) {
    node.walk([this](Node& n) { live_[n.id] = &n; });
}

void SourceUnit::unregisterTree(Node& node) {
    node.walk([this](Node& n) { live_.erase(n.id); });
}

std::unique_ptr<Node> SourceUnit::cloneTree(const Node& node, bool markGenerated) {
    auto copy = make(node.kind);
    copy->role = node.role;
    copy->generated = node.generated || markGenerated;
    for (const auto& p : node.pieces) {
        if (const auto* t = std::get_if<Token>(&p)) {
            Token tok = *t;
            if (markGenerated)
                tok.line = tok.col = 0;
            copy->append(std::move(tok));
        } else {
            copy->append(cloneTree(*std::get<std::unique_ptr<Node>>(p), markGenerated));
        }
    }
    return copy;
}

std::vector<Node*> SourceUnit::functions() const {
    std::vector<Node*> out;
    for (Node* n : root->children())
        if (n->kind == NodeKind::FunctionDef)
            out.push_back(n);
    return out;
}

Node* SourceUnit::function(std::string_view name) const {
    for (Node* fn : functions())
        if (functionName(*fn) == name)
            return fn;
    return nullptr;
}

bool SourceUnit::definesOrDeclares(std::string_view name) const {
    for (Node* n : root->children()) {
        if (n->kind == NodeKind::FunctionDef && functionName(*n) == name)
            return true;
        if (n->kind == NodeKind::Decl) {
            for (Node* d : n->children()) {
                if ((d->kind == NodeKind::Declarator || d->kind == NodeKind::FuncDeclarator) &&
                    declaratorName(*d) == name)
                    return true;
            }
        }
    }
    return false;
}

// --- accessors -------------------------------------------------------------

Node* functionDeclarator(const Node& fn) {
    for (Node* c : fn.children())
        if (c->kind == NodeKind::FuncDeclarator)
            return c;
    return nullptr;
}

std::string functionName(const Node& fn) {
    const Node* decl = fn.kind == NodeKind::FuncDeclarator ? &fn : functionDeclarator(fn);
    return decl ? declaratorName(*decl) : std::string();
}

Node* functionBody(const Node& fn) { return fn.child(Role::Body); }

std::vector<Node*> functionParams(const Node& fn) {
    std::vector<Node*> out;
    const Node* decl = fn.kind == NodeKind::FuncDeclarator ? &fn : functionDeclarator(fn);
    if (!decl)
        return out;
    if (Node* list = decl->child(Role::Params))
        for (Node* p : list->children())
            if (p->kind == NodeKind::Param)
                out.push_back(p);
    return out;
}

Token* declaratorNameToken(Node& declarator) {
    for (auto& p : declarator.pieces)
        if (auto* t = std::get_if<Token>(&p); t && t->kind == TokenKind::Identifier)
            return t;
    return nullptr;
}

std::string declaratorName(const Node& declarator) {
    const Token* t = declaratorNameToken(const_cast<Node&>(declarator));
    return t ? t->text : std::string();
}

Node* declaratorSpecifiers(const Node& declarator) {
    const Node* owner = declarator.parent;
    return owner ? owner->child(Role::Specs) : nullptr;
}

CType specifierType(const Node& specifiers) {
    CType type;
    std::string words;
    for (const Token* t : significantTokens(specifiers)) {
        if (t->text == "const") {
            type.isConst = true;
        } else if (t->text == "volatile") {
            type.isVolatile = true;
        } else if (isStorageClass(t->text) || t->text == "restrict") {
            continue;
        } else if (t->text == "{") {
            break; // tagged definition body; the tag is enough
        } else {
            if (!words.empty())
                words += ' ';
            words += t->text;
        }
    }
    type.base = canonicalBase(words);
    return type;
}

bool hasStorageClass(const Node& specifiers, std::string_view word) {
    for (const Token* t : significantTokens(specifiers))
        if (t->text == word)
            return true;
    return false;
}

namespace {

// Pointer levels and array extents written in a declarator's own tokens.
void applyDeclaratorSuffixes(const Node& declarator, CType& type) {
    bool seenName = false;
    for (std::size_t i = 0; i < declarator.pieces.size(); ++i) {
        const auto& p = declarator.pieces[i];
        if (const auto* t = std::get_if<Token>(&p)) {
            if (t->isTrivia())
                continue;
            if (t->kind == TokenKind::Identifier) {
                seenName = true;
            } else if (!seenName && t->text == "*") {
                type.pointers.emplace_back();
            } else if (!seenName && !type.pointers.empty() && isQualifier(t->text)) {
                auto& level = type.pointers.back();
                if (t->text == "const")
                    level.isConst = true;
                else if (t->text == "volatile")
                    level.isVolatile = true;
                else
                    level.isRestrict = true;
            } else if (t->text == "[") {
                seenName = true; // abstract declarators have no name
                std::string extent;
                for (++i; i < declarator.pieces.size(); ++i) {
                    const auto& q = declarator.pieces[i];
                    if (const auto* qt = std::get_if<Token>(&q)) {
                        if (qt->text == "]")
                            break;
                        if (!qt->isTrivia())
                            extent += qt->text;
                    } else {
                        for (const Token* et : significantTokens(*std::get<std::unique_ptr<Node>>(q)))
                            extent += et->text;
                    }
                }
                type.arrays.push_back(extent);
            } else if (t->text == "=" || t->text == "(") {
                break;
            }
        } else if (std::get<std::unique_ptr<Node>>(p)->role == Role::Value) {
            break;
        }
    }
}

} // namespace

CType declaratorType(const Node& declarator) {
    const Node* specs = declaratorSpecifiers(declarator);
    CType type = specs ? specifierType(*specs) : CType{};
    applyDeclaratorSuffixes(declarator, type);
    return type;
}

CType returnType(const Node& fn) {
    const Node* specs = fn.child(Role::Specs);
    CType type = specs ? specifierType(*specs) : CType{};
    if (const Node* decl = functionDeclarator(fn))
        applyDeclaratorSuffixes(*decl, type);
    return type;
}

bool declaratorHasInit(const Node& declarator) { return declarator.child(Role::Value) != nullptr; }

Token* callNameToken(Node& call) {
    for (auto& p : call.pieces)
        if (auto* t = std::get_if<Token>(&p); t && !t->isTrivia())
            return t;
    return nullptr;
}

std::string callName(const Node& call) {
    const Token* t = callNameToken(const_cast<Node&>(call));
    return t ? t->text : std::string();
}

std::vector<Node*> callArgs(const Node& call) {
    std::vector<Node*> out;
    for (Node* c : call.children())
        if (c->role == Role::Arg)
            out.push_back(c);
    return out;
}

Node* enclosingStatement(Node& node) {
    Node* cur = &node;
    while (cur && !(cur->isStatement() || (cur->parent && cur->parent->kind == NodeKind::Unit)))
        cur = cur->parent;
    return cur;
}

Node* enclosingFunction(Node& node) {
    Node* cur = &node;
    while (cur && cur->kind != NodeKind::FunctionDef)
        cur = cur->parent;
    return cur;
}

std::vector<Node*> attachedPragmas(const Node& stmt) {
    std::vector<Node*> out;
    if (!stmt.parent)
        return out;
    const auto& sib = stmt.parent->pieces;
    std::size_t i = stmt.indexInParent();
    while (i > 0) {
        --i;
        if (const auto* t = std::get_if<Token>(&sib[i])) {
            if (t->kind == TokenKind::Whitespace || t->kind == TokenKind::Comment)
                continue;
            break;
        }
        Node* n = std::get<std::unique_ptr<Node>>(sib[i]).get();
        if (n->kind != NodeKind::Pragma)
            break;
        out.insert(out.begin(), n);
    }
    return out;
}

std::string pragmaText(const Node& pragma) {
    const Token* t = pragma.firstToken();
    if (!t)
        return {};
    std::string s = t->text;
    const auto at = s.find("pragma");
    s = at == std::string::npos ? s : s.substr(at + 6);
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

void rewriteToken(Token& token, std::string text) {
    token.text = std::move(text);
}

} // namespace aw
