#include "aw/parser.hpp"

#include "aw/error.hpp"

#include <algorithm>
#include <initializer_list>

namespace aw {

namespace {

// Typedef names that come from standard headers we never expand.
const std::set<std::string> kStdTypedefs = {
    "size_t",   "ssize_t",  "ptrdiff_t", "FILE",      "bool",     "time_t",   "clock_t",
    "va_list",  "off_t",    "wchar_t",   "intptr_t",  "uintptr_t", "int8_t",  "int16_t",
    "int32_t",  "int64_t",  "uint8_t",   "uint16_t",  "uint32_t", "uint64_t", "intmax_t",
    "uintmax_t", "clockid_t", "pid_t"};

class Parser {
public:
    Parser(SourceUnit& unit, std::vector<Token> tokens)
        : unit_(unit), toks_(std::move(tokens)) {}
    Parser(const Parser&) = delete;
    Parser& operator=(const Parser&) = delete;
    ~Parser() {
        if (scratch_)
            unit_.unregisterTree(*scratch_);
    }

    void parseUnit(Node& root) {
        while (true) {
            flushTrivia(root);
            if (atEnd())
                break;
            root.append(parseExternal());
        }
    }

    void parseStatementList(Node& container) {
        while (true) {
            flushTrivia(container);
            if (atEnd())
                break;
            container.append(parseStatement());
        }
    }

    std::unique_ptr<Node> parseWholeExpression() {
        auto e = parseExpr(Role::Value, {});
        skipTrivia();
        if (!atEnd())
            fail("end of expression");
        return e;
    }

    void flushTrivia(Node& into) {
        while (pos_ < toks_.size() && toks_[pos_].isTrivia())
            into.append(std::move(toks_[pos_++]));
    }

    bool atEnd() {
        return sigIndex(0) >= toks_.size();
    }

private:
    // --- token helpers ------------------------------------------------------

    std::size_t sigIndex(std::size_t k) const {
        std::size_t i = pos_;
        while (true) {
            while (i < toks_.size() && toks_[i].isTrivia())
                ++i;
            if (k == 0 || i >= toks_.size())
                return i;
            --k;
            ++i;
        }
    }

    const Token* peek(std::size_t k = 0) const {
        const std::size_t i = sigIndex(k);
        return i < toks_.size() ? &toks_[i] : nullptr;
    }

    bool peekIs(std::string_view text, std::size_t k = 0) const {
        const Token* t = peek(k);
        return t && t->text == text && t->kind != TokenKind::Literal;
    }

    void skipTrivia() {
        while (pos_ < toks_.size() && toks_[pos_].isTrivia())
            ++pos_;
    }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token* t = peek();
        if (!t) {
            int line = 1, col = 1;
            if (!toks_.empty()) {
                line = toks_.back().line;
                col = toks_.back().col;
            }
            throw SyntaxError(line, col, expected + " before end of input");
        }
        throw SyntaxError(t->line, t->col, expected + ", got '" + t->text + "'");
    }

    // Moves pending trivia and the next significant token into `into`.
    const Token& take(Node& into) {
        flushTrivia(into);
        if (pos_ >= toks_.size())
            fail("more input");
        into.append(std::move(toks_[pos_++]));
        return std::get<Token>(into.pieces.back());
    }

    void expect(Node& into, std::string_view text) {
        if (!peekIs(text))
            fail("'" + std::string(text) + "'");
        take(into);
    }

    std::unique_ptr<Node> start(Node& parent, NodeKind kind, Role role = Role::None) {
        flushTrivia(parent);
        auto n = unit_.make(kind);
        n->role = role;
        return n;
    }

    bool isTypedefName(const std::string& name) const {
        return unit_.typedefNames.count(name) || kStdTypedefs.count(name);
    }

    bool startsSpecifier(const Token& t) const {
        if (t.kind == TokenKind::Keyword)
            return isTypeKeyword(t.text) || isStorageClass(t.text);
        return t.kind == TokenKind::Identifier && isTypedefName(t.text);
    }

    bool looksLikeDeclaration() const {
        const Token* t = peek();
        if (!t)
            return false;
        if (t->kind == TokenKind::Keyword)
            return isTypeKeyword(t->text) || isStorageClass(t->text);
        if (t->kind != TokenKind::Identifier)
            return false;
        const Token* n = peek(1);
        if (!n)
            return false;
        if (isTypedefName(t->text)) {
            static const std::set<std::string> notDecl = {
                "=", "(", "[", ".", "->", "++", "--", ";", ",", ")", "+=", "-=", "*=", "/="};
            return !notDecl.count(n->text) || n->kind == TokenKind::Identifier;
        }
        if (n->kind == TokenKind::Identifier)
            return true; // unknown typedef: `mytype x;`
        if (n->text == "*") {
            // `FILE *fp;` — an expression statement `a * b;` is pointless.
            const Token* id = peek(2);
            const Token* after = peek(3);
            return id && id->kind == TokenKind::Identifier && after &&
                   (after->text == ";" || after->text == "=" || after->text == "," ||
                    after->text == "[");
        }
        return false;
    }

    // --- declarations -------------------------------------------------------

    std::unique_ptr<Node> parseSpecifiers(Node& parent) {
        auto spec = start(parent, NodeKind::Specifiers, Role::Specs);
        bool sawType = false;
        while (const Token* t = peek()) {
            if (t->kind == TokenKind::Keyword &&
                (t->text == "struct" || t->text == "union" || t->text == "enum")) {
                take(*spec);
                if (peek() && peek()->kind == TokenKind::Identifier)
                    take(*spec);
                if (peekIs("{"))
                    takeBalanced(*spec, "{", "}");
                sawType = true;
            } else if (t->kind == TokenKind::Keyword &&
                       (isTypeKeyword(t->text) || isStorageClass(t->text))) {
                if (!isQualifier(t->text) && !isStorageClass(t->text))
                    sawType = true;
                take(*spec);
            } else if (t->kind == TokenKind::Identifier && !sawType &&
                       (isTypedefName(t->text) || isUnknownTypeName())) {
                take(*spec);
                sawType = true;
            } else {
                break;
            }
        }
        if (spec->pieces.empty())
            fail("declaration specifiers");
        return spec;
    }

    // An identifier used as a type name we have not seen declared (from a
    // header): it is followed by another identifier or by `*`.
    bool isUnknownTypeName() const {
        const Token* n = peek(1);
        if (!n)
            return false;
        return n->kind == TokenKind::Identifier || n->text == "*";
    }

    void takeBalanced(Node& into, std::string_view open, std::string_view close) {
        int depth = 0;
        do {
            if (atEnd())
                fail("'" + std::string(close) + "'");
            const Token& t = take(into);
            if (t.kind == TokenKind::Punctuator) {
                if (t.text == open)
                    ++depth;
                else if (t.text == close)
                    --depth;
            }
        } while (depth > 0);
    }

    std::unique_ptr<Node> parseDeclarator(Node& parent, bool allowAbstract, bool allowInit) {
        auto decl = start(parent, NodeKind::Declarator, Role::Declarator);
        while (peekIs("*")) {
            take(*decl);
            while (peek() && peek()->kind == TokenKind::Keyword && isQualifier(peek()->text))
                take(*decl);
        }
        if (peekIs("("))
            throw UnsupportedConstruct(peek()->line, "function-pointer or parenthesized declarator");
        if (peek() && peek()->kind == TokenKind::Identifier) {
            take(*decl);
        } else if (!allowAbstract) {
            fail("declarator name");
        }
        if (peekIs("(")) {
            decl->kind = NodeKind::FuncDeclarator;
            take(*decl);
            decl->append(parseParamList(*decl));
            expect(*decl, ")");
            return decl;
        }
        while (peekIs("[")) {
            take(*decl);
            if (!peekIs("]"))
                decl->append(parseExpr(Role::Extent, {"]"}, *decl));
            expect(*decl, "]");
        }
        if (allowInit && peekIs("=")) {
            take(*decl);
            decl->append(parseExpr(Role::Value, {",", ";"}, *decl));
        }
        return decl;
    }

    std::unique_ptr<Node> parseParamList(Node& parent) {
        auto list = start(parent, NodeKind::ParamList, Role::Params);
        if (peekIs(")"))
            return list;
        if (peekIs("void") && peekIs(")", 1)) {
            take(*list);
            return list;
        }
        while (true) {
            if (peekIs("...")) {
                take(*list);
            } else if (const Token* t = peek(); t && t->kind == TokenKind::Identifier &&
                                                  !isTypedefName(t->text) &&
                                                  (peekIs(",", 1) || peekIs(")", 1))) {
                throw UnsupportedConstruct(t->line, "K&R-style parameter list");
            } else {
                auto param = start(*list, NodeKind::Param);
                param->append(parseSpecifiers(*param));
                param->append(parseDeclarator(*param, true, false));
                list->append(std::move(param));
            }
            if (peekIs(",")) {
                take(*list);
                continue;
            }
            break;
        }
        return list;
    }

    // Declaration or (at top level) function definition.
    std::unique_ptr<Node> parseDeclaration(Node& parent, bool topLevel, Role role = Role::None) {
        auto decl = start(parent, NodeKind::Decl, role);
        decl->append(parseSpecifiers(*decl));
        const bool isTypedef = hasStorageClass(*decl->child(Role::Specs), "typedef");
        if (peekIs(";")) {
            take(*decl);
            return decl;
        }
        while (true) {
            auto d = parseDeclarator(*decl, false, true);
            const bool isFunc = d->kind == NodeKind::FuncDeclarator;
            if (isTypedef)
                unit_.typedefNames.insert(declaratorName(*d));
            decl->append(std::move(d));
            if (isFunc && topLevel && decl->children().size() == 2) {
                if (peekIs("{")) {
                    decl->kind = NodeKind::FunctionDef;
                    decl->append(parseCompound(*decl, Role::Body));
                    return decl;
                }
                if (const Token* t = peek(); t && startsSpecifier(*t))
                    throw UnsupportedConstruct(t->line, "K&R-style function definition");
            }
            if (peekIs(",")) {
                take(*decl);
                continue;
            }
            break;
        }
        expect(*decl, ";");
        return decl;
    }

    std::unique_ptr<Node> parseExternal() {
        const Token* t = peek();
        if (t->kind == TokenKind::Directive || t->kind == TokenKind::PragmaText)
            return parseDirective(*unit_.root);
        return parseDeclaration(*unit_.root, true);
    }

    std::unique_ptr<Node> parseDirective(Node& parent) {
        const bool pragma = peek()->kind == TokenKind::PragmaText;
        auto n = start(parent, pragma ? NodeKind::Pragma : NodeKind::Directive);
        take(*n);
        return n;
    }

    // --- statements ---------------------------------------------------------

    std::unique_ptr<Node> parseCompound(Node& parent, Role role) {
        auto block = start(parent, NodeKind::Compound, role);
        expect(*block, "{");
        while (true) {
            flushTrivia(*block);
            if (atEnd())
                fail("'}'");
            if (peekIs("}"))
                break;
            block->append(parseStatement(*block));
        }
        expect(*block, "}");
        return block;
    }

    std::unique_ptr<Node> parseStatement() { return parseStatement(scratch()); }

    // Parent used only to receive leading trivia (already flushed by callers).
    Node& scratch() {
        if (!scratch_)
            scratch_ = unit_.make(NodeKind::Unit);
        return *scratch_;
    }

    std::unique_ptr<Node> parseStatement(Node& parent, Role role = Role::None) {
        const Token* t = peek();
        if (!t)
            fail("statement");
        if (t->kind == TokenKind::PragmaText && role != Role::None) {
            // A pragma in front of a sub-statement stays with the statement.
            while (peek() && peek()->kind == TokenKind::PragmaText) {
                parent.append(parseDirective(parent));
                flushTrivia(parent);
            }
            return parseStatement(parent, role);
        }
        if (t->kind == TokenKind::Directive || t->kind == TokenKind::PragmaText) {
            auto n = parseDirective(parent);
            n->role = role;
            return n;
        }
        const std::string w = t->text;
        if (t->kind == TokenKind::Punctuator && w == "{")
            return parseCompound(parent, role);
        if (t->kind == TokenKind::Keyword) {
            if (w == "for")
                return parseFor(parent, role);
            if (w == "while") {
                auto n = start(parent, NodeKind::While, role);
                take(*n);
                parseParenCond(*n);
                n->append(parseStatement(*n, Role::Body));
                return n;
            }
            if (w == "do") {
                auto n = start(parent, NodeKind::Do, role);
                take(*n);
                n->append(parseStatement(*n, Role::Body));
                expect(*n, "while");
                parseParenCond(*n);
                expect(*n, ";");
                return n;
            }
            if (w == "if") {
                auto n = start(parent, NodeKind::If, role);
                take(*n);
                parseParenCond(*n);
                n->append(parseStatement(*n, Role::Then));
                if (peekIs("else")) {
                    take(*n);
                    n->append(parseStatement(*n, Role::Else));
                }
                return n;
            }
            if (w == "switch") {
                auto n = start(parent, NodeKind::Switch, role);
                take(*n);
                parseParenCond(*n);
                n->append(parseStatement(*n, Role::Body));
                return n;
            }
            if (w == "return") {
                auto n = start(parent, NodeKind::Return, role);
                take(*n);
                if (!peekIs(";"))
                    n->append(parseExpr(Role::Value, {";"}, *n));
                expect(*n, ";");
                return n;
            }
            if (w == "case" || (w == "default" && peekIs(":", 1))) {
                auto n = start(parent, NodeKind::Label, role);
                take(*n);
                if (w == "case")
                    n->append(parseExpr(Role::Value, {":"}, *n));
                expect(*n, ":");
                return n;
            }
            if (w == "break" || w == "continue" || w == "goto") {
                auto n = start(parent, NodeKind::ExprStmt, role);
                while (!peekIs(";")) {
                    if (atEnd())
                        fail("';'");
                    take(*n);
                }
                take(*n);
                return n;
            }
        }
        if (t->kind == TokenKind::Identifier && peekIs(":", 1)) {
            auto n = start(parent, NodeKind::Label, role);
            take(*n);
            take(*n);
            return n;
        }
        if (looksLikeDeclaration()) {
            if (role != Role::None)
                throw UnsupportedConstruct(t->line, "declaration as a sub-statement");
            return parseDeclaration(parent, false);
        }
        auto n = start(parent, NodeKind::ExprStmt, role);
        if (!peekIs(";"))
            n->append(parseExpr(Role::Value, {";"}, *n));
        expect(*n, ";");
        return n;
    }

    void parseParenCond(Node& n) {
        expect(n, "(");
        n.append(parseExpr(Role::Cond, {")"}, n));
        expect(n, ")");
    }

    std::unique_ptr<Node> parseFor(Node& parent, Role role) {
        auto n = start(parent, NodeKind::For, role);
        take(*n);
        expect(*n, "(");
        if (peekIs(";")) {
            take(*n);
        } else if (looksLikeDeclaration()) {
            n->append(parseDeclaration(*n, false, Role::Init));
        } else {
            n->append(parseExpr(Role::Init, {";"}, *n));
            expect(*n, ";");
        }
        if (!peekIs(";"))
            n->append(parseExpr(Role::Cond, {";"}, *n));
        expect(*n, ";");
        if (!peekIs(")"))
            n->append(parseExpr(Role::Step, {")"}, *n));
        expect(*n, ")");
        n->append(parseStatement(*n, Role::Body));
        return n;
    }

    // --- expressions --------------------------------------------------------

    // Looks at `( type-name )` starting at the next significant token.
    bool typeNameAhead() const {
        if (!peekIs("("))
            return false;
        std::size_t k = 1;
        bool sawType = false;
        while (const Token* t = peek(k)) {
            if (t->text == ")")
                return sawType;
            if (t->kind == TokenKind::Keyword && isTypeKeyword(t->text)) {
                if (t->text == "struct" || t->text == "union" || t->text == "enum")
                    ++k; // tag
                sawType = true;
            } else if (t->kind == TokenKind::Identifier && isTypedefName(t->text) && !sawType) {
                sawType = true;
            } else if (t->text == "*" && sawType) {
            } else {
                return false;
            }
            ++k;
        }
        return false;
    }

    std::unique_ptr<Node> parseExpr(Role role, std::initializer_list<std::string_view> terms) {
        return parseExpr(role, terms, scratch());
    }

    std::unique_ptr<Node> parseExpr(Role role, std::initializer_list<std::string_view> terms,
                                    Node& parent) {
        auto e = start(parent, NodeKind::Expr, role);
        int depth = 0;
        int pendingTernary = 0;
        std::string prev;
        while (true) {
            const Token* t = peek();
            if (!t) {
                if (terms.size() == 0 && depth == 0)
                    break;
                fail(terms.size() ? "'" + std::string(*terms.begin()) + "'" : "expression");
            }
            const bool punct = t->kind == TokenKind::Punctuator;
            if (depth == 0 && punct &&
                std::find(terms.begin(), terms.end(), t->text) != terms.end()) {
                if (t->text == ":" && pendingTernary > 0) {
                    --pendingTernary;
                    prev = take(*e).text;
                    continue;
                }
                break;
            }
            if (t->kind == TokenKind::Directive || t->kind == TokenKind::PragmaText)
                throw UnsupportedConstruct(t->line, "preprocessor line inside an expression");
            if (t->kind == TokenKind::Identifier) {
                if (prev == "." || prev == "->") {
                    prev = take(*e).text;
                } else if (peekIs("(", 1)) {
                    e->append(parseCall(*e));
                    prev = ")";
                } else if (isTypedefName(t->text)) {
                    prev = take(*e).text;
                } else {
                    auto ref = start(*e, NodeKind::VarRef);
                    prev = take(*ref).text;
                    e->append(std::move(ref));
                }
                continue;
            }
            if (punct && t->text == "(" && typeNameAhead()) {
                take(*e);
                auto type = start(*e, NodeKind::TypeName);
                while (!peekIs(")"))
                    take(*type);
                e->append(std::move(type));
                prev = take(*e).text;
                continue;
            }
            if (punct) {
                if (t->text == "(" || t->text == "[" || t->text == "{")
                    ++depth;
                else if (t->text == ")" || t->text == "]" || t->text == "}") {
                    if (depth == 0)
                        fail(terms.size() ? "'" + std::string(*terms.begin()) + "'" : "expression");
                    --depth;
                } else if (t->text == "?")
                    ++pendingTernary;
            }
            prev = take(*e).text;
        }
        if (e->pieces.empty())
            fail("expression");
        return e;
    }

    std::unique_ptr<Node> parseCall(Node& parent) {
        auto call = start(parent, NodeKind::Call);
        take(*call); // callee
        expect(*call, "(");
        if (!peekIs(")")) {
            while (true) {
                call->append(parseExpr(Role::Arg, {",", ")"}, *call));
                if (peekIs(",")) {
                    take(*call);
                    continue;
                }
                break;
            }
        }
        expect(*call, ")");
        return call;
    }

    SourceUnit& unit_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::unique_ptr<Node> scratch_;
};

void linkParents(Node& node) {
    for (auto& p : node.pieces)
        if (auto* n = std::get_if<std::unique_ptr<Node>>(&p)) {
            (*n)->parent = &node;
            linkParents(**n);
        }
}

} // namespace

std::unique_ptr<SourceUnit> parse(std::string_view source, std::string fileName) {
    auto unit = std::make_unique<SourceUnit>(std::move(fileName));
    Parser parser(*unit, lex(source));
    parser.parseUnit(*unit->root);
    linkParents(*unit->root);
    return unit;
}

std::unique_ptr<Node> parseFragment(SourceUnit& unit, std::string_view text, FragmentKind kind) {
    auto container = unit.make(NodeKind::Compound);
    try {
        Parser parser(unit, lex(text));
        switch (kind) {
        case FragmentKind::Statements:
            parser.parseStatementList(*container);
            break;
        case FragmentKind::TopLevel: {
            // Top-level parsing appends to unit.root; parse into a private unit
            // and move the items across so the registry stays consistent.
            SourceUnit scratch(unit.fileName);
            scratch.typedefNames = unit.typedefNames;
            Parser inner(scratch, lex(text));
            inner.parseUnit(*scratch.root);
            for (auto& p : scratch.root->pieces) {
                if (auto* n = std::get_if<std::unique_ptr<Node>>(&p)) {
                    auto copy = unit.cloneTree(**n, false);
                    container->append(std::move(copy));
                } else {
                    container->append(std::get<Token>(std::move(p)));
                }
            }
            unit.typedefNames.insert(scratch.typedefNames.begin(), scratch.typedefNames.end());
            break;
        }
        case FragmentKind::Expression:
            container->append(parser.parseWholeExpression());
            break;
        }
    } catch (const ParseErrorInFragment&) {
        throw;
    } catch (const Error& e) {
        throw ParseErrorInFragment(std::string(e.what()) + " in fragment: " + std::string(text));
    }
    linkParents(*container);
    return container;
}

} // namespace aw
