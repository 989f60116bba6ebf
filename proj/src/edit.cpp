#include "aw/edit.hpp"

#include "aw/error.hpp"
#include "aw/sloc.hpp"

#include <algorithm>

namespace aw {

namespace {

const std::string kStep = "    ";

std::string stripSemicolon(std::string s) {
    while (!s.empty() && (s.back() == ';' || s.back() == ' '))
        s.pop_back();
    return s;
}

std::string condText(const Node& n) {
    const Node* c = n.child(Role::Cond);
    return c ? compactText(*c) : std::string();
}

std::string subStatement(const Node& stmt, const std::string& ind) {
    if (stmt.kind == NodeKind::Compound)
        return " " + prettyPrint(stmt, ind);
    return "\n" + ind + kStep + prettyPrint(stmt, ind + kStep);
}

std::vector<Node*> items(const Node& container) { return container.children(); }

} // namespace

std::string prettyPrint(const Node& n, const std::string& ind) {
    switch (n.kind) {
    case NodeKind::Compound: {
        std::string out = "{\n";
        bool afterLabel = false;
        for (const Node* item : items(n)) {
            if (item->kind == NodeKind::Label) {
                out += ind + kStep + prettyPrint(*item, ind + kStep) + "\n";
                afterLabel = true;
                continue;
            }
            const std::string inner = ind + kStep + (afterLabel ? kStep : "");
            out += inner + prettyPrint(*item, inner) + "\n";
        }
        return out + ind + "}";
    }
    case NodeKind::If: {
        const Node* thenStmt = n.child(Role::Then);
        std::string out = "if (" + condText(n) + ")" + subStatement(*thenStmt, ind);
        if (const Node* elseStmt = n.child(Role::Else)) {
            out += thenStmt->kind == NodeKind::Compound ? " else" : "\n" + ind + "else";
            if (elseStmt->kind == NodeKind::If)
                out += " " + prettyPrint(*elseStmt, ind);
            else
                out += subStatement(*elseStmt, ind);
        }
        return out;
    }
    case NodeKind::For: {
        std::string init;
        if (const Node* i = n.child(Role::Init))
            init = stripSemicolon(compactText(*i));
        const Node* cond = n.child(Role::Cond);
        const Node* step = n.child(Role::Step);
        std::string header = "for (" + init + ";";
        header += cond ? " " + compactText(*cond) + ";" : ";";
        header += step ? " " + compactText(*step) : "";
        return header + ")" + subStatement(*n.child(Role::Body), ind);
    }
    case NodeKind::While:
        return "while (" + condText(n) + ")" + subStatement(*n.child(Role::Body), ind);
    case NodeKind::Switch:
        return "switch (" + condText(n) + ")" + subStatement(*n.child(Role::Body), ind);
    case NodeKind::Do: {
        const Node* body = n.child(Role::Body);
        std::string out = "do" + subStatement(*body, ind);
        out += body->kind == NodeKind::Compound ? " " : "\n" + ind;
        return out + "while (" + condText(n) + ");";
    }
    case NodeKind::FunctionDef: {
        std::string head = compactText(*n.child(Role::Specs)) + " " +
                           compactText(*functionDeclarator(n));
        return head + "\n" + ind + prettyPrint(*functionBody(n), ind);
    }
    case NodeKind::Pragma:
    case NodeKind::Directive:
        return n.firstToken() ? n.firstToken()->text : std::string();
    default:
        return compactText(n);
    }
}

void markGenerated(Node& node) {
    node.walk([](Node& n) {
        n.generated = true;
        for (auto& p : n.pieces)
            if (auto* t = std::get_if<Token>(&p))
                t->line = t->col = 0;
    });
}

Token makeToken(TokenKind kind, std::string text) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    return t;
}

std::unique_ptr<Node> generate(SourceUnit& unit, std::string_view text, FragmentKind kind,
                               const std::string& indent) {
    auto parsed = parseFragment(unit, text, kind);
    if (kind == FragmentKind::Expression) {
        markGenerated(*parsed);
        return parsed;
    }
    std::string printed;
    const Node* prev = nullptr;
    for (const Node* item : items(*parsed)) {
        if (prev) {
            const bool blank = kind == FragmentKind::TopLevel &&
                               (prev->kind == NodeKind::FunctionDef || item->kind == NodeKind::FunctionDef);
            printed += blank ? "\n\n" + indent : "\n" + indent;
        }
        printed += prettyPrint(*item, indent);
        prev = item;
    }
    unit.unregisterTree(*parsed);
    if (printed.empty())
        throw ParseErrorInFragment("empty fragment");
    auto result = parseFragment(unit, printed, kind);
    markGenerated(*result);
    return result;
}

std::string lineIndent(const Node& node) {
    std::string before;
    const Node* cur = &node;
    bool found = false;
    while (cur->parent && !found) {
        const std::size_t idx = cur->indexInParent();
        for (std::size_t i = idx; i-- > 0;) {
            const auto& p = cur->parent->pieces[i];
            std::string text = std::holds_alternative<Token>(p)
                                   ? std::get<Token>(p).text
                                   : emit(*std::get<std::unique_ptr<Node>>(p));
            const auto nl = text.rfind('\n');
            if (nl != std::string::npos) {
                before = text.substr(nl + 1) + before;
                found = true;
                break;
            }
            before = text + before;
        }
        cur = cur->parent;
    }
    const auto end = before.find_first_not_of(" \t");
    return end == std::string::npos ? before : before.substr(0, end);
}

namespace {

std::unique_ptr<Node> detach(Node& parent, std::size_t index) {
    auto owned = std::move(std::get<std::unique_ptr<Node>>(parent.pieces[index]));
    parent.pieces.erase(parent.pieces.begin() + static_cast<std::ptrdiff_t>(index));
    return owned;
}

void insertPieces(Node& parent, std::size_t at, std::vector<Piece> pieces) {
    for (auto& p : pieces)
        if (auto* n = std::get_if<std::unique_ptr<Node>>(&p))
            (*n)->parent = &parent;
    parent.pieces.insert(parent.pieces.begin() + static_cast<std::ptrdiff_t>(at),
                         std::make_move_iterator(pieces.begin()),
                         std::make_move_iterator(pieces.end()));
}

std::vector<Piece> takePieces(Node& container) {
    std::vector<Piece> out = std::move(container.pieces);
    container.pieces.clear();
    return out;
}

Token ws(const std::string& text) { return makeToken(TokenKind::Whitespace, text); }

bool inList(const Node& anchor) {
    return anchor.parent &&
           (anchor.parent->kind == NodeKind::Compound || anchor.parent->kind == NodeKind::Unit);
}

} // namespace

InsertResult insertCode(SourceUnit& unit, Node& target, InsertPosition where, std::string_view text) {
    Node* anchor = &target;
    if (where == InsertPosition::Before) {
        const auto pragmas = attachedPragmas(*anchor);
        if (!pragmas.empty())
            anchor = pragmas.front();
    }
    if (!anchor->parent)
        throw InvalidAnchor("anchor has no parent");

    const bool topLevel = anchor->parent->kind == NodeKind::Unit;
    const FragmentKind kind = topLevel ? FragmentKind::TopLevel : FragmentKind::Statements;
    const std::string indent = lineIndent(*anchor);

    InsertResult result;
    if (inList(*anchor)) {
        auto container = generate(unit, text, kind, indent);
        result.sloc = countSlocL(*container);
        result.items = container->children();
        const bool fn = topLevel && (anchor->kind == NodeKind::FunctionDef ||
                                     std::any_of(result.items.begin(), result.items.end(), [](Node* n) {
                                         return n->kind == NodeKind::FunctionDef;
                                     }));
        const std::string sep = (fn ? "\n\n" : "\n") + indent;
        Node& parent = *anchor->parent;
        const std::size_t idx = anchor->indexInParent();
        std::vector<Piece> pieces = takePieces(*container);
        unit.unregisterTree(*container);
        switch (where) {
        case InsertPosition::Before:
            pieces.emplace_back(ws(sep));
            insertPieces(parent, idx, std::move(pieces));
            break;
        case InsertPosition::After:
            pieces.insert(pieces.begin(), Piece(ws(sep)));
            insertPieces(parent, idx + 1, std::move(pieces));
            break;
        case InsertPosition::Replace: {
            auto removed = detach(parent, idx);
            unit.unregisterTree(*removed);
            insertPieces(parent, idx, std::move(pieces));
            break;
        }
        }
        return result;
    }

    // Lone sub-statement: wrap the anchor and the new code in a block.
    const std::string inner = indent + kStep;
    const std::string& outer = indent;
    auto container = generate(unit, text, FragmentKind::Statements, inner);
    result.sloc = countSlocL(*container);
    result.items = container->children();
    if (where == InsertPosition::Replace && result.items.size() == 1) {
        Node& parent = *anchor->parent;
        const std::size_t idx = anchor->indexInParent();
        const Role role = anchor->role;
        auto removed = detach(parent, idx);
        unit.unregisterTree(*removed);
        result.items.front()->role = role;
        std::vector<Piece> pieces = takePieces(*container);
        unit.unregisterTree(*container);
        insertPieces(parent, idx, std::move(pieces));
        return result;
    }

    // The statement moves into the block together with its pragmas.
    Node& parent = *anchor->parent;
    const std::size_t idx = anchor->indexInParent();
    const std::size_t last = target.indexInParent();
    const Role role = target.role;
    auto block = unit.make(NodeKind::Compound);
    block->generated = true;
    block->role = role;
    block->append(makeToken(TokenKind::Punctuator, "{"));
    block->append(ws("\n" + inner));
    std::vector<Piece> original(std::make_move_iterator(parent.pieces.begin() + static_cast<std::ptrdiff_t>(idx)),
                                std::make_move_iterator(parent.pieces.begin() + static_cast<std::ptrdiff_t>(last + 1)));
    parent.pieces.erase(parent.pieces.begin() + static_cast<std::ptrdiff_t>(idx),
                        parent.pieces.begin() + static_cast<std::ptrdiff_t>(last + 1));
    target.role = Role::None;
    for (auto& p : original)
        if (auto* t = std::get_if<Token>(&p); t && t->kind == TokenKind::Whitespace &&
                                              t->text.find('\n') != std::string::npos)
            t->text = "\n" + inner;
    std::vector<Piece> code = takePieces(*container);
    unit.unregisterTree(*container);
    if (where == InsertPosition::After) {
        insertPieces(*block, block->pieces.size(), std::move(original));
        block->append(ws("\n" + inner));
        insertPieces(*block, block->pieces.size(), std::move(code));
    } else if (where == InsertPosition::Before) {
        insertPieces(*block, block->pieces.size(), std::move(code));
        block->append(ws("\n" + inner));
        insertPieces(*block, block->pieces.size(), std::move(original));
    } else {
        for (auto& p : original)
            if (auto* n = std::get_if<std::unique_ptr<Node>>(&p))
                unit.unregisterTree(**n);
        insertPieces(*block, block->pieces.size(), std::move(code));
    }
    block->append(ws("\n" + outer));
    block->append(makeToken(TokenKind::Punctuator, "}"));
    block->parent = &parent;
    parent.pieces.insert(parent.pieces.begin() + static_cast<std::ptrdiff_t>(idx), Piece(std::move(block)));
    return result;
}

void replaceWithPieces(SourceUnit& unit, Node& target, Node& replacement) {
    Node& parent = *target.parent;
    const std::size_t idx = target.indexInParent();
    auto removed = detach(parent, idx);
    unit.unregisterTree(*removed);
    insertPieces(parent, idx, takePieces(replacement));
}

void removeNode(SourceUnit& unit, Node& node) {
    Node& parent = *node.parent;
    auto removed = detach(parent, node.indexInParent());
    unit.unregisterTree(*removed);
}

void replacePieceRange(SourceUnit& unit, Node& node, std::size_t first, std::size_t last,
                       std::string_view text) {
    for (std::size_t i = first; i <= last; ++i)
        if (auto* n = std::get_if<std::unique_ptr<Node>>(&node.pieces[i]))
            unit.unregisterTree(**n);
    node.pieces.erase(node.pieces.begin() + static_cast<std::ptrdiff_t>(first),
                      node.pieces.begin() + static_cast<std::ptrdiff_t>(last + 1));
    std::vector<Piece> fresh;
    for (Token t : lex(text)) {
        t.line = t.col = 0;
        fresh.emplace_back(std::move(t));
    }
    insertPieces(node, first, std::move(fresh));
}

void rewriteSpecifiers(SourceUnit& unit, Node& specs, const CType& type) {
    std::string text;
    std::size_t first = specs.pieces.size(), last = 0;
    for (std::size_t i = 0; i < specs.pieces.size(); ++i) {
        const Token* t = std::get_if<Token>(&specs.pieces[i]);
        if (!t || t->isTrivia())
            continue;
        if (t->text == "{")
            throw UnsupportedConstruct(t->line, "type change of a tagged definition");
        first = std::min(first, i);
        last = i;
        if (isStorageClass(t->text))
            text += t->text + " ";
    }
    if (type.isConst)
        text += "const ";
    if (type.isVolatile)
        text += "volatile ";
    text += type.base;
    replacePieceRange(unit, specs, first, last, text);
}

} // namespace aw
