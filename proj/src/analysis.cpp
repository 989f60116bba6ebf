#include "aw/analysis.hpp"

#include <algorithm>

namespace aw {

namespace {

struct Tok {
    const Token* t;
    bool var = false;
};

void flatten(const Node& n, std::vector<Tok>& out) {
    for (const auto& p : n.pieces) {
        if (const auto* t = std::get_if<Token>(&p)) {
            if (!t->isTrivia())
                out.push_back({t, n.kind == NodeKind::VarRef});
        } else {
            flatten(*std::get<std::unique_ptr<Node>>(p), out);
        }
    }
}

bool isAssignOp(const std::string& s) {
    static const std::set<std::string> ops = {"=",  "+=", "-=", "*=", "/=", "%=",
                                              "<<=", ">>=", "&=", "|=", "^="};
    return ops.count(s) > 0;
}

// True when a token at this position makes a following `*`/`&` unary.
bool unaryContext(const std::vector<Tok>& toks, std::ptrdiff_t i) {
    if (i < 0)
        return true;
    const Token& t = *toks[static_cast<std::size_t>(i)].t;
    if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Literal)
        return false;
    if (t.kind == TokenKind::Keyword)
        return true;
    return t.text != ")" && t.text != "]" && t.text != "++" && t.text != "--";
}

std::size_t matching(const std::vector<Tok>& toks, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        const std::string& s = toks[i].t->text;
        if (s == "[" || s == "(")
            ++depth;
        else if (s == "]" || s == ")")
            if (--depth == 0)
                return i;
    }
    return toks.size();
}

// End (exclusive) of the assignment right-hand side starting at `from`.
std::size_t rhsEnd(const std::vector<Tok>& toks, std::size_t from) {
    int depth = 0;
    for (std::size_t i = from; i < toks.size(); ++i) {
        const std::string& s = toks[i].t->text;
        if (s == "(" || s == "[" || s == "{")
            ++depth;
        else if (s == ")" || s == "]" || s == "}") {
            if (depth == 0)
                return i;
            --depth;
        } else if (depth == 0 && (s == "," || s == ";")) {
            return i;
        }
    }
    return toks.size();
}

std::string join(const std::vector<Tok>& toks, std::size_t from, std::size_t to, bool spaced) {
    std::string s;
    for (std::size_t i = from; i < to && i < toks.size(); ++i) {
        if (spaced && !s.empty())
            s += ' ';
        s += toks[i].t->text;
    }
    return s;
}

void scanExpr(const Node& expr, const Node* stmt, std::vector<Access>& out) {
    std::vector<Tok> toks;
    flatten(expr, toks);
    const std::size_t n = toks.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::string& text = toks[k].t->text;
        // Lvalues we cannot attribute to a variable, e.g. `(*p) = 1` or `++(*p)`.
        if ((isAssignOp(text) && k > 0 && toks[k - 1].t->text == ")") ||
            ((text == "++" || text == "--") && k + 1 < n && toks[k + 1].t->text == "(")) {
            Access a;
            a.write = a.read = a.deref = true;
            a.op = text;
            a.stmt = stmt;
            out.push_back(a);
            continue;
        }
        if (!toks[k].var)
            continue;
        Access a;
        a.name = text;
        a.stmt = stmt;
        std::size_t e = k + 1;
        bool arrow = false;
        while (e < n) {
            const std::string& s = toks[e].t->text;
            if (s == "[") {
                const std::size_t close = matching(toks, e);
                a.subscripts.push_back(join(toks, e + 1, close, false));
                e = close + 1;
            } else if ((s == "." || s == "->") && e + 1 < n) {
                arrow = arrow || s == "->";
                e += 2;
            } else {
                break;
            }
        }
        const auto km1 = static_cast<std::ptrdiff_t>(k) - 1;
        const std::string prev = k > 0 ? toks[k - 1].t->text : std::string();
        const bool starBefore = prev == "*" && unaryContext(toks, km1 - 1);
        a.addressTaken = prev == "&" && unaryContext(toks, km1 - 1);
        if (e < n && isAssignOp(toks[e].t->text)) {
            a.write = true;
            a.op = toks[e].t->text;
            a.read = a.op != "=" || !a.subscripts.empty() || arrow || starBefore;
            const std::size_t end = rhsEnd(toks, e + 1);
            a.rhs = join(toks, e + 1, end, true);
            for (std::size_t i = e + 1; i < end; ++i)
                if (toks[i].var)
                    a.rhsNames.insert(toks[i].t->text);
        } else if (e < n && (toks[e].t->text == "++" || toks[e].t->text == "--")) {
            a.write = a.read = true;
            a.op = toks[e].t->text;
        } else if ((prev == "++" || prev == "--") && unaryContext(toks, km1 - 1)) {
            a.write = a.read = true;
            a.op = prev;
        } else {
            a.read = true;
        }
        a.deref = a.write && (arrow || starBefore);
        out.push_back(std::move(a));
    }
}

bool isTopExpr(const Node& n) {
    for (const Node* p = n.parent; p; p = p->parent) {
        if (p->kind == NodeKind::Expr)
            return false;
        if (p->kind != NodeKind::Call && p->kind != NodeKind::VarRef && p->kind != NodeKind::TypeName)
            return true;
    }
    return true;
}

} // namespace

std::vector<Access> collectAccesses(const Node& root) {
    std::vector<Access> out;
    root.walk([&](const Node& n) {
        if (n.kind == NodeKind::Expr && isTopExpr(n)) {
            scanExpr(n, enclosingStatement(const_cast<Node&>(n)), out);
        } else if (n.kind == NodeKind::Declarator && n.parent && n.parent->kind == NodeKind::Decl) {
            Access a;
            a.name = declaratorName(n);
            a.declaration = true;
            a.stmt = enclosingStatement(const_cast<Node&>(n));
            if (const Node* init = n.child(Role::Value)) {
                a.write = true;
                a.op = "=";
                a.rhs = compactText(*init);
                init->walk([&](const Node& c) {
                    if (c.kind == NodeKind::VarRef && c.firstToken())
                        a.rhsNames.insert(c.firstToken()->text);
                });
            }
            out.push_back(std::move(a));
        }
    });
    return out;
}

std::vector<const Node*> callsIn(const Node& root) {
    std::vector<const Node*> out;
    root.walk([&](const Node& n) {
        if (n.kind == NodeKind::Call)
            out.push_back(&n);
    });
    return out;
}

std::set<std::string> localNames(const Node& fn) {
    std::set<std::string> names;
    for (const Node* p : functionParams(fn))
        if (const Node* d = p->child(Role::Declarator))
            names.insert(declaratorName(*d));
    if (const Node* body = functionBody(fn))
        body->walk([&](const Node& n) {
            if (n.kind == NodeKind::Declarator && n.parent && n.parent->kind == NodeKind::Decl)
                names.insert(declaratorName(n));
        });
    names.erase("");
    return names;
}

bool localType(const Node& fn, const std::string& name, CType& out) {
    for (const Node* p : functionParams(fn))
        if (const Node* d = p->child(Role::Declarator); d && declaratorName(*d) == name) {
            out = declaratorType(*d);
            return true;
        }
    bool found = false;
    if (const Node* body = functionBody(fn))
        body->walk([&](const Node& n) {
            if (!found && n.kind == NodeKind::Declarator && n.parent &&
                n.parent->kind == NodeKind::Decl && declaratorName(n) == name) {
                out = declaratorType(n);
                found = true;
            }
        });
    return found;
}

bool isPureLibraryFunction(std::string_view name) {
    static const std::set<std::string, std::less<>> base = {
        "sqrt", "sin",  "cos",   "tan",   "asin",  "acos", "atan", "atan2", "sinh", "cosh",
        "tanh", "exp",  "exp2",  "expm1", "log",   "log2", "log10", "log1p", "pow",  "fabs",
        "floor", "ceil", "round", "trunc", "fmod", "fmin", "fmax", "hypot", "cbrt", "erf",
        "erfc"};
    static const std::set<std::string, std::less<>> ints = {"abs", "labs", "llabs"};
    if (base.count(name) || ints.count(name))
        return true;
    if (!name.empty() && (name.back() == 'f' || name.back() == 'l'))
        return base.count(name.substr(0, name.size() - 1)) > 0;
    return false;
}

std::vector<std::string> definedCallees(const SourceUnit& unit, const Node& fn) {
    std::vector<std::string> out;
    const Node* body = functionBody(fn);
    if (!body)
        return out;
    for (const Node* c : callsIn(*body)) {
        const std::string name = callName(*c);
        if (unit.function(name) && std::find(out.begin(), out.end(), name) == out.end())
            out.push_back(name);
    }
    return out;
}

} // namespace aw
