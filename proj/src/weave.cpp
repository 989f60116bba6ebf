#include "aw/weave.hpp"

#include "aw/error.hpp"
#include "aw/sloc.hpp"

#include <algorithm>
#include <map>

namespace aw {

const char* toString(JpKind kind) {
    switch (kind) {
    case JpKind::File: return "file";
    case JpKind::Function: return "function";
    case JpKind::Decl: return "decl";
    case JpKind::Stmt: return "stmt";
    case JpKind::Loop: return "loop";
    case JpKind::Call: return "call";
    case JpKind::Pragma: return "pragma";
    case JpKind::VarRef: return "varref";
    }
    return "?";
}

std::optional<JpKind> jpKindFromString(std::string_view name) {
    static const std::map<std::string, JpKind, std::less<>> kinds = {
        {"file", JpKind::File},     {"function", JpKind::Function}, {"decl", JpKind::Decl},
        {"stmt", JpKind::Stmt},     {"loop", JpKind::Loop},         {"call", JpKind::Call},
        {"pragma", JpKind::Pragma}, {"varref", JpKind::VarRef}};
    const auto it = kinds.find(name);
    if (it == kinds.end())
        return std::nullopt;
    return it->second;
}

const std::vector<std::string>& attributeNames(JpKind kind) {
    static const std::map<JpKind, std::vector<std::string>> names = {
        {JpKind::File, {"name", "line"}},
        {JpKind::Function, {"name", "returnType", "paramTypes", "line"}},
        {JpKind::Decl, {"name", "type", "hasInit", "scope", "line"}},
        {JpKind::Stmt, {"code", "line"}},
        {JpKind::Loop, {"kind", "indexVar", "isInnermost", "hasPragma", "line"}},
        {JpKind::Call, {"name", "argCount", "line"}},
        {JpKind::Pragma, {"text", "line"}},
        {JpKind::VarRef, {"name", "line"}},
    };
    return names.at(kind);
}

bool legalStep(JpKind parent, JpKind child) {
    switch (parent) {
    case JpKind::File:
        return child == JpKind::Function;
    case JpKind::Function:
        return child == JpKind::Decl || child == JpKind::Stmt || child == JpKind::Loop ||
               child == JpKind::Call || child == JpKind::Pragma;
    case JpKind::Loop:
        return child == JpKind::Stmt || child == JpKind::Call || child == JpKind::Loop ||
               child == JpKind::Pragma;
    case JpKind::Stmt:
        return child == JpKind::Call || child == JpKind::VarRef;
    default:
        return false;
    }
}

void validateChain(const SelectChain& chain) {
    if (chain.empty())
        throw IllegalChain("empty chain");
    JpKind prev = JpKind::File;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const JpKind k = chain[i].kind;
        if (i == 0 && k == JpKind::File) {
            prev = k;
            continue;
        }
        if (!legalStep(prev, k))
            throw IllegalChain(std::string(toString(prev)) + " -> " + toString(k));
        prev = k;
    }
}

namespace {

std::string csvField(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string WeaveReport::csvHeader() { return "File,Selects,Attributes,Actions,Inserts,NativeSLoC"; }

std::string WeaveReport::csvRow(const std::string& file) const {
    return csvField(file) + "," + std::to_string(selects) + "," + std::to_string(attributes) + "," +
           std::to_string(actions) + "," + std::to_string(inserts) + "," + std::to_string(nativeSloc);
}

std::string StaticMetricsRow::csvHeader() {
    return "File,AspectSLoC,Aspects,InputSLoC,InputFunc,WovenSLoC,WovenFunc,DeltaSLoC,DeltaFunc";
}

std::string StaticMetricsRow::csvRow(const std::string& file) const {
    std::string row = csvField(file);
    for (int v : {aspectSloc, aspectCount, inputSloc, inputFuncs, wovenSloc, wovenFuncs, deltaSloc,
                  deltaFuncs})
        row += "," + std::to_string(v);
    return row;
}

StaticMetricsRow staticMetrics(const SourceUnit& input, const SourceUnit& woven, int aspectSloc,
                               int aspectCount) {
    StaticMetricsRow row;
    row.aspectSloc = aspectSloc;
    row.aspectCount = aspectCount;
    row.inputSloc = countSlocL(input);
    row.inputFuncs = countFunctions(input);
    row.wovenSloc = countSlocL(woven);
    row.wovenFuncs = countFunctions(woven);
    row.deltaSloc = row.wovenSloc - row.inputSloc;
    row.deltaFuncs = row.wovenFuncs - row.inputFuncs;
    return row;
}

// --- loop helpers ----------------------------------------------------------

std::string loopIndexVar(const Node& loop) {
    if (loop.kind != NodeKind::For)
        return {};
    const Node* init = loop.child(Role::Init);
    if (!init)
        return {};
    if (init->kind == NodeKind::Decl) {
        for (const Node* d : init->children())
            if (d->kind == NodeKind::Declarator)
                return declaratorName(*d);
        return {};
    }
    const auto toks = significantTokens(*init);
    if (toks.size() >= 2 && toks[0]->kind == TokenKind::Identifier && toks[1]->text == "=")
        return toks[0]->text;
    return {};
}

bool isInnermostLoop(const Node& loop) {
    bool nested = false;
    loop.walk([&](const Node& n) {
        if (&n != &loop && n.isLoop())
            nested = true;
    });
    return !nested;
}

// --- Session ---------------------------------------------------------------

namespace {

bool isSelectableStmt(const Node& n) {
    if (!n.isStatement())
        return false;
    switch (n.kind) {
    case NodeKind::Compound:
    case NodeKind::Pragma:
    case NodeKind::Directive:
    case NodeKind::Label:
        return false;
    default:
        return true;
    }
}

void descendants(Node& root, bool includeRoot, const std::function<bool(const Node&)>& pred,
                 std::vector<Node*>& out) {
    root.walk([&](Node& n) {
        if ((includeRoot || &n != &root) && pred(n))
            out.push_back(&n);
    });
}

Token ws(const std::string& text) { return makeToken(TokenKind::Whitespace, text); }

std::string boolText(bool b) { return b ? "true" : "false"; }

// Removes pieces [first, first+count) of `node` and puts the tokens of `text` there.
void spliceTokens(SourceUnit& unit, Node& node, std::size_t first, std::size_t count,
                  std::string_view text) {
    if (count > 0) {
        replacePieceRange(unit, node, first, first + count - 1, text);
        return;
    }
    std::vector<Piece> fresh;
    for (Token t : lex(text)) {
        t.line = t.col = 0;
        fresh.emplace_back(std::move(t));
    }
    node.pieces.insert(node.pieces.begin() + static_cast<std::ptrdiff_t>(first),
                       std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
}

const Token* tokenAt(const Node& node, std::size_t i) {
    return std::get_if<Token>(&node.pieces[i]);
}

std::size_t nameIndex(const Node& declarator) {
    for (std::size_t i = 0; i < declarator.pieces.size(); ++i)
        if (const Token* t = tokenAt(declarator, i); t && t->kind == TokenKind::Identifier)
            return i;
    return declarator.pieces.size();
}

std::string renderPointers(const std::vector<PointerLevel>& levels) {
    std::string s;
    for (const auto& lvl : levels) {
        s += "*";
        std::string quals;
        if (lvl.isConst)
            quals += " const";
        if (lvl.isVolatile)
            quals += " volatile";
        if (lvl.isRestrict)
            quals += " restrict";
        if (!quals.empty())
            s += quals + " ";
    }
    return s;
}

void rewritePointers(SourceUnit& unit, Node& declarator, const std::vector<PointerLevel>& levels) {
    std::size_t end = nameIndex(declarator);
    if (end == declarator.pieces.size()) {
        // abstract declarator: pointers run up to the first '[' or '('
        for (end = 0; end < declarator.pieces.size(); ++end) {
            const Token* t = tokenAt(declarator, end);
            if (!t || t->text == "[" || t->text == "(")
                break;
        }
    }
    std::size_t first = end;
    for (std::size_t i = 0; i < end; ++i) {
        const Token* t = tokenAt(declarator, i);
        if (t && !t->isTrivia()) {
            first = i;
            break;
        }
    }
    // Keep any whitespace between the last pointer token and the name.
    std::size_t last = end;
    while (last > first && tokenAt(declarator, last - 1) && tokenAt(declarator, last - 1)->isTrivia())
        --last;
    spliceTokens(unit, declarator, first, last - first, renderPointers(levels));
}

void rewriteArrays(SourceUnit& unit, Node& declarator, const std::vector<std::string>& arrays) {
    std::size_t name = nameIndex(declarator);
    std::size_t from = name == declarator.pieces.size() ? 0 : name + 1;
    std::size_t first = declarator.pieces.size(), last = first;
    for (std::size_t i = from; i < declarator.pieces.size(); ++i) {
        const Token* t = tokenAt(declarator, i);
        if (!t)
            continue;
        if (t->text == "=" || t->text == "(")
            break;
        if (t->text == "[" && first == declarator.pieces.size())
            first = i;
        if (t->text == "]")
            last = i;
    }
    std::string text;
    for (const auto& e : arrays)
        text += "[" + e + "]";
    if (first == declarator.pieces.size())
        spliceTokens(unit, declarator, from, 0, text);
    else
        spliceTokens(unit, declarator, first, last - first + 1, text);
}

std::vector<Node*> declaratorsOf(const Node& decl) {
    std::vector<Node*> out;
    for (Node* c : decl.children())
        if (c->kind == NodeKind::Declarator || c->kind == NodeKind::FuncDeclarator)
            out.push_back(c);
    return out;
}

// Turns `T a, b, c;` into `T a;`, `T b;`, `T c;` keeping the declarator nodes.
void splitDeclaration(SourceUnit& unit, Node& decl) {
    const auto decls = declaratorsOf(decl);
    if (decls.size() < 2)
        return;
    if (decl.role == Role::Init)
        throw UnsupportedConstruct(decl.line(), "type change inside a multi-variable for-init");
    const Node& specs = *decl.child(Role::Specs);
    const std::string indent = lineIndent(decl);

    std::vector<std::unique_ptr<Node>> created;
    for (std::size_t k = 1; k < decls.size(); ++k) {
        const std::size_t idx = decls[k]->indexInParent();
        auto owned = std::move(std::get<std::unique_ptr<Node>>(decl.pieces[idx]));
        decl.pieces.erase(decl.pieces.begin() + static_cast<std::ptrdiff_t>(idx));
        auto fresh = unit.make(NodeKind::Decl);
        fresh->append(unit.cloneTree(specs, false));
        fresh->append(ws(" "));
        fresh->append(std::move(owned));
        fresh->append(makeToken(TokenKind::Punctuator, ";"));
        created.push_back(std::move(fresh));
    }
    // Drop the separators left between the first declarator and the ';'.
    const std::size_t keep = decls[0]->indexInParent();
    std::size_t semi = decl.pieces.size() - 1;
    decl.pieces.erase(decl.pieces.begin() + static_cast<std::ptrdiff_t>(keep + 1),
                      decl.pieces.begin() + static_cast<std::ptrdiff_t>(semi));

    Node& parent = *decl.parent;
    std::size_t at = decl.indexInParent() + 1;
    for (auto& d : created) {
        d->parent = &parent;
        parent.pieces.insert(parent.pieces.begin() + static_cast<std::ptrdiff_t>(at++),
                             Piece(ws("\n" + indent)));
        parent.pieces.insert(parent.pieces.begin() + static_cast<std::ptrdiff_t>(at++),
                             Piece(std::move(d)));
    }
}

} // namespace

Session::Session(std::unique_ptr<SourceUnit> unit) : unit_(std::move(unit)) {}

bool Session::alive(const JoinPoint& jp) const { return unit_->find(jp.node) != nullptr; }

Node& Session::resolve(const JoinPoint& jp) const {
    Node* n = unit_->find(jp.node);
    if (!n)
        throw InvalidAnchor(std::string(toString(jp.kind)) + " join point no longer exists");
    return *n;
}

JoinPoint Session::functionJp(const std::string& name) const {
    Node* fn = unit_->function(name);
    if (!fn)
        throw FunctionNotFound(name);
    return {JpKind::Function, fn->id};
}

JoinPoint Session::returnDecl(const JoinPoint& fn) const {
    Node& n = resolve(fn);
    if (n.kind != NodeKind::FunctionDef)
        throw NotADecl("not a function");
    return {JpKind::Decl, n.id};
}

void Session::collect(JpKind parentKind, Node& parent, JpKind kind, std::vector<Node*>& out) const {
    if (parentKind == JpKind::File) {
        for (Node* fn : unit_->functions())
            out.push_back(fn);
        return;
    }
    if (parentKind == JpKind::Function) {
        Node* body = functionBody(parent);
        switch (kind) {
        case JpKind::Decl:
            out.push_back(&parent);
            for (Node* p : functionParams(parent)) {
                Node* d = p->child(Role::Declarator);
                if (d && !declaratorName(*d).empty())
                    out.push_back(d);
            }
            descendants(*body, false, [](const Node& n) {
                return n.kind == NodeKind::Declarator && n.parent && n.parent->kind == NodeKind::Decl;
            }, out);
            return;
        case JpKind::Stmt:
            descendants(*body, false, isSelectableStmt, out);
            return;
        case JpKind::Loop:
            descendants(*body, false, [](const Node& n) { return n.isLoop(); }, out);
            return;
        case JpKind::Call:
            descendants(*body, false, [](const Node& n) { return n.kind == NodeKind::Call; }, out);
            return;
        case JpKind::Pragma:
            descendants(*body, false, [](const Node& n) { return n.kind == NodeKind::Pragma; }, out);
            return;
        default:
            break;
        }
    }
    if (parentKind == JpKind::Loop) {
        switch (kind) {
        case JpKind::Stmt:
            descendants(*parent.child(Role::Body), true, isSelectableStmt, out);
            return;
        case JpKind::Call:
            descendants(parent, false, [](const Node& n) { return n.kind == NodeKind::Call; }, out);
            return;
        case JpKind::Loop:
            descendants(parent, false, [](const Node& n) { return n.isLoop(); }, out);
            return;
        case JpKind::Pragma:
            for (Node* p : attachedPragmas(parent))
                out.push_back(p);
            return;
        default:
            break;
        }
    }
    if (parentKind == JpKind::Stmt) {
        const NodeKind want = kind == JpKind::Call ? NodeKind::Call : NodeKind::VarRef;
        descendants(parent, false, [want](const Node& n) { return n.kind == want; }, out);
        return;
    }
    throw IllegalChain(std::string(toString(parentKind)) + " -> " + toString(kind));
}

std::vector<JpTuple> Session::select(const SelectChain& chain) { return select(chain, file()); }

std::vector<JpTuple> Session::select(const SelectChain& chain, const JoinPoint& from) {
    if (chain.empty())
        throw IllegalChain("empty chain");
    SelectChain steps = chain;
    if (from.kind == JpKind::File) {
        validateChain(chain);
        if (steps.front().kind == JpKind::File) {
            if (!steps.front().filters.empty())
                throw IllegalChain("file step cannot be filtered");
            steps.erase(steps.begin());
        }
    } else {
        JpKind prev = from.kind;
        for (const auto& s : steps) {
            if (!legalStep(prev, s.kind))
                throw IllegalChain(std::string(toString(prev)) + " -> " + toString(s.kind));
            prev = s.kind;
        }
    }
    resolve(from);
    ++report_.selects;
    std::vector<JpTuple> out;
    if (steps.empty()) {
        out.push_back({from});
        return out;
    }
    JpTuple prefix;
    selectFrom(steps, 0, from, prefix, out);
    return out;
}

void Session::selectFrom(const SelectChain& chain, std::size_t step, const JoinPoint& parent,
                         JpTuple& prefix, std::vector<JpTuple>& out) {
    const ChainStep& s = chain[step];
    std::vector<Node*> nodes;
    collect(parent.kind, resolve(parent), s.kind, nodes);
    for (Node* n : nodes) {
        const JoinPoint jp{s.kind, n->id};
        bool ok = true;
        for (const Filter& f : s.filters) {
            const std::string v = attribute(jp, f.attribute);
            if (f.op == "==")
                ok = v == f.value;
            else if (f.op == "!=")
                ok = v != f.value;
            else if (f.op == "contains")
                ok = v.find(f.value) != std::string::npos;
            else
                throw IllegalChain("unknown filter operator " + f.op);
            if (!ok)
                break;
        }
        if (!ok)
            continue;
        prefix.push_back(jp);
        if (step + 1 == chain.size())
            out.push_back(prefix);
        else
            selectFrom(chain, step + 1, jp, prefix, out);
        prefix.pop_back();
    }
}

std::string Session::attribute(const JoinPoint& jp, std::string_view name) {
    std::string v = peekAttribute(jp, name);
    ++report_.attributes;
    return v;
}

std::string Session::peekAttribute(const JoinPoint& jp, std::string_view name) const {
    const auto& names = attributeNames(jp.kind);
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw UnknownAttribute(std::string(toString(jp.kind)) + "." + std::string(name));
    const Node& n = resolve(jp);
    if (name == "line")
        return std::to_string(n.line());
    switch (jp.kind) {
    case JpKind::File:
        return unit_->fileName;
    case JpKind::Function:
        if (name == "name")
            return functionName(n);
        if (name == "returnType")
            return render(returnType(n));
        {
            std::string types;
            for (const Node* p : functionParams(n)) {
                if (!types.empty())
                    types += ",";
                types += render(declaratorType(*p->child(Role::Declarator)));
            }
            return types;
        }
    case JpKind::Decl: {
        const bool isReturn = n.kind == NodeKind::FunctionDef;
        if (name == "name")
            return isReturn ? functionName(n) : declaratorName(n);
        if (name == "type")
            return render(isReturn ? returnType(n) : declaratorType(n));
        if (name == "hasInit")
            return boolText(!isReturn && declaratorHasInit(n));
        if (isReturn)
            return "return";
        if (n.parent && n.parent->kind == NodeKind::Param)
            return "param";
        return n.parent && n.parent->parent && n.parent->parent->kind == NodeKind::Unit ? "global"
                                                                                       : "local";
    }
    case JpKind::Stmt:
        return compactText(n);
    case JpKind::Loop:
        if (name == "kind")
            return toString(n.kind);
        if (name == "indexVar")
            return loopIndexVar(n);
        if (name == "isInnermost")
            return boolText(isInnermostLoop(n));
        return boolText(!attachedPragmas(n).empty());
    case JpKind::Call:
        if (name == "name")
            return callName(n);
        return std::to_string(callArgs(n).size());
    case JpKind::Pragma:
        return pragmaText(n);
    case JpKind::VarRef:
        return n.firstToken() ? n.firstToken()->text : std::string();
    }
    return {};
}

std::vector<JoinPoint> Session::insert(const JoinPoint& jp, InsertPosition where, std::string_view code) {
    Node& n = resolve(jp);
    Node* anchor = &n;
    switch (jp.kind) {
    case JpKind::File: {
        const auto items = unit_->root->children();
        if (items.empty() || where == InsertPosition::Replace)
            throw InvalidAnchor("file join point needs a non-empty unit and before/after");
        anchor = where == InsertPosition::Before ? items.front() : items.back();
        break;
    }
    case JpKind::Decl:
        if (n.kind != NodeKind::FunctionDef) {
            if (!n.parent || n.parent->kind != NodeKind::Decl)
                throw InvalidAnchor("cannot insert next to a parameter");
            anchor = n.parent->role == Role::Init ? n.parent->parent : n.parent;
        }
        break;
    case JpKind::Call:
    case JpKind::VarRef:
        anchor = enclosingStatement(n);
        if (!anchor)
            throw InvalidAnchor("no enclosing statement");
        break;
    default:
        break;
    }
    const InsertResult r = insertCode(*unit_, *anchor, where, code);
    ++report_.actions;
    ++report_.inserts;
    report_.nativeSloc += r.sloc;
    std::vector<JoinPoint> out;
    for (Node* item : r.items)
        out.push_back({item->kind == NodeKind::FunctionDef ? JpKind::Function : JpKind::Stmt, item->id});
    return out;
}

void Session::setType(const JoinPoint& jp, const CType& type) {
    if (jp.kind != JpKind::Decl)
        throw NotADecl(std::string(toString(jp.kind)) + " join point");
    Node& n = resolve(jp);
    ++report_.actions;

    const bool isReturn = n.kind == NodeKind::FunctionDef;
    Node* declarator = isReturn ? functionDeclarator(n) : &n;
    if (!declarator || (!isReturn && n.kind != NodeKind::Declarator))
        throw NotADecl("node is not a declarator");
    const CType current = isReturn ? returnType(n) : declaratorType(n);
    if (current == type)
        return;
    if (isReturn && !type.arrays.empty())
        throw UnsupportedConstruct(n.line(), "array return type");

    if (current.base != type.base || current.isConst != type.isConst ||
        current.isVolatile != type.isVolatile) {
        if (!isReturn && n.parent->kind == NodeKind::Decl)
            splitDeclaration(*unit_, *n.parent);
        Node* specs = isReturn ? n.child(Role::Specs) : declaratorSpecifiers(n);
        if (!specs)
            throw NotADecl("declaration has no specifiers");
        rewriteSpecifiers(*unit_, *specs, type);
    }
    if (current.pointers != type.pointers)
        rewritePointers(*unit_, *declarator, type.pointers);
    if (current.arrays != type.arrays)
        rewriteArrays(*unit_, *declarator, type.arrays);
}

JoinPoint Session::cloneFunction(const JoinPoint& fn, const std::string& newName) {
    Node& original = resolve(fn);
    if (original.kind != NodeKind::FunctionDef)
        throw FunctionNotFound("join point is not a function definition");
    if (unit_->definesOrDeclares(newName))
        throw DuplicateName(newName);
    auto copy = unit_->cloneTree(original, true);
    Token* name = declaratorNameToken(*functionDeclarator(*copy));
    rewriteToken(*name, newName);
    const JoinPoint result{JpKind::Function, copy->id};

    Node& root = *unit_->root;
    const std::size_t idx = original.indexInParent();
    copy->parent = &root;
    root.pieces.insert(root.pieces.begin() + static_cast<std::ptrdiff_t>(idx + 1), Piece(std::move(copy)));
    root.pieces.insert(root.pieces.begin() + static_cast<std::ptrdiff_t>(idx + 1), Piece(ws("\n\n")));
    ++report_.actions;
    return result;
}

} // namespace aw
