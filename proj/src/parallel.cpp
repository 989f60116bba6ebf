#include "aw/strategies.hpp"

#include "aw/analysis.hpp"
#include "aw/edit.hpp"
#include "aw/error.hpp"

#include <algorithm>
#include <map>
#include "json.hpp"

namespace aw {

namespace {

using Toks = std::vector<const Token*>;

std::string joined(const Toks& toks, std::size_t from, std::size_t to) {
    std::string s;
    for (std::size_t i = from; i < to && i < toks.size(); ++i) {
        if (!s.empty())
            s += ' ';
        s += toks[i]->text;
    }
    return s;
}

Toks significant(const std::vector<Token>& all) {
    Toks out;
    for (const Token& t : all)
        if (!t.isTrivia())
            out.push_back(&t);
    return out;
}

bool isDescendant(const Node* n, const Node* ancestor) {
    for (const Node* p = n; p; p = p->parent)
        if (p == ancestor)
            return true;
    return false;
}

// True when the statement `w` runs before `r` on every path that reaches
// `r` from `w`'s block: `r` is inside `w`, or `w` sits directly in the block
// that also (transitively) holds `r`.
bool dominates(const Node* w, const Node* r) {
    if (isDescendant(r, w))
        return true;
    const Node* p = w->parent;
    while (p && !isDescendant(r, p))
        p = p->parent;
    return p && w->parent == p && (p->kind == NodeKind::Compound || p->kind == NodeKind::Unit);
}

bool isKill(const Access& a, const std::string& x) {
    if (a.declaration)
        return true;
    return a.write && a.op == "=" && !a.read && a.subscripts.empty() && !a.deref && !a.rhsNames.count(x);
}

// Every access of `x` in `seq` that reads it is preceded by a dominating kill.
bool readsCovered(const std::vector<const Access*>& seq, const std::string& x) {
    std::vector<const Node*> kills;
    for (const Access* a : seq) {
        if (a->name != x)
            continue;
        if (isKill(*a, x)) {
            kills.push_back(a->stmt);
            continue;
        }
        const bool covered = std::any_of(kills.begin(), kills.end(),
                                         [&](const Node* k) { return dominates(k, a->stmt); });
        if (!covered)
            return false;
    }
    return true;
}

int precedence(const std::string& op) {
    static const std::map<std::string, int> p = {
        {"*", 10}, {"/", 10}, {"%", 10}, {"+", 9},  {"-", 9},  {"<<", 8}, {">>", 8},
        {"<", 7},  {">", 7},  {"<=", 7}, {">=", 7}, {"==", 6}, {"!=", 6}, {"&", 5},
        {"^", 4},  {"|", 3},  {"&&", 2}, {"||", 1}, {"?", 0},  {":", 0},  {",", -1}};
    const auto it = p.find(op);
    return it == p.end() ? 99 : it->second;
}

bool unaryPosition(const Toks& toks, std::size_t i) {
    if (i == 0)
        return true;
    const Token& t = *toks[i - 1];
    if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Literal)
        return false;
    return t.text != ")" && t.text != "]";
}

// Lowest precedence of a binary operator at nesting depth 0 in toks[from, to).
int lowestOperator(const Toks& toks, std::size_t from, std::size_t to, std::set<std::string>* seen = nullptr) {
    int depth = 0, low = 99;
    for (std::size_t i = from; i < to; ++i) {
        const std::string& s = toks[i]->text;
        if (s == "(" || s == "[")
            ++depth;
        else if (s == ")" || s == "]")
            --depth;
        else if (depth == 0 && toks[i]->kind == TokenKind::Punctuator && !unaryPosition(toks, i)) {
            low = std::min(low, precedence(s));
            if (seen)
                seen->insert(s);
        }
    }
    return low;
}

bool mentions(const Toks& toks, std::size_t from, std::size_t to, const std::string& x) {
    for (std::size_t i = from; i < to; ++i)
        if (toks[i]->kind == TokenKind::Identifier && toks[i]->text == x)
            return true;
    return false;
}

// Reduction operator of a write access to scalar `x`, or "" when it is not one.
std::string reductionOp(const Access& a, const std::string& x) {
    if (!a.write || a.declaration || a.deref || !a.subscripts.empty())
        return {};
    if (a.op == "++" || a.op == "--")
        return "+";
    static const std::map<std::string, std::string> compound = {
        {"+=", "+"}, {"-=", "+"}, {"*=", "*"}, {"|=", "|"}, {"&=", "&"}, {"^=", "^"}};
    if (const auto it = compound.find(a.op); it != compound.end())
        return a.rhsNames.count(x) ? std::string() : it->second;
    if (a.op != "=")
        return {};
    const std::vector<Token> rhsTokens = lex(a.rhs);
    const Toks t = significant(rhsTokens);
    const std::size_t n = t.size();
    if (n >= 6 && (t[0]->text == "fmax" || t[0]->text == "fmin") && t[1]->text == "(" && t[n - 1]->text == ")") {
        // fmax(x, E) or fmax(E, x)
        std::size_t comma = 0;
        int depth = 0;
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const std::string& s = t[i]->text;
            if (s == "(" || s == "[")
                ++depth;
            else if (s == ")" || s == "]")
                --depth;
            else if (s == "," && depth == 0)
                comma = comma ? n : i;
        }
        if (comma == 0 || comma == n)
            return {};
        const bool first = comma == 3 && t[2]->text == x && !mentions(t, 4, n - 1, x);
        const bool second = comma == n - 3 && t[n - 2]->text == x && !mentions(t, 2, comma, x);
        if (!first && !second)
            return {};
        return t[0]->text == "fmax" ? "max" : "min";
    }
    if (n < 3)
        return {};
    if (t[0]->text == x && !mentions(t, 1, n, x)) {
        const std::string& op = t[1]->text;
        if (op != "+" && op != "-" && op != "*")
            return {};
        std::set<std::string> ops;
        if (lowestOperator(t, 2, n, &ops) < precedence(op))
            return {};
        if (op == "*" && (ops.count("/") || ops.count("%")))
            return {};
        return op == "*" ? "*" : "+";
    }
    if (t[n - 1]->text == x && !mentions(t, 0, n - 1, x)) {
        const std::string& op = t[n - 2]->text;
        if (op != "+" && op != "*")
            return {};
        if (lowestOperator(t, 0, n - 2) < precedence(op))
            return {};
        return op;
    }
    return {};
}

// `if (E > x) x = E;` style updates: the If node and its assignment.
struct MinMaxUpdate {
    const Node* ifNode;
    const Node* assign;
    std::string op;
};

std::vector<MinMaxUpdate> minMaxUpdates(const Node& body, const std::string& x) {
    std::vector<MinMaxUpdate> out;
    body.walk([&](const Node& n) {
        if (n.kind != NodeKind::If || n.child(Role::Else))
            return;
        const Node* cond = n.child(Role::Cond);
        const Node* then = n.child(Role::Then);
        if (then && then->kind == NodeKind::Compound) {
            const auto items = then->children();
            then = items.size() == 1 ? items.front() : nullptr;
        }
        if (!cond || !then || then->kind != NodeKind::ExprStmt)
            return;
        const Toks c = significantTokens(*cond);
        std::size_t at = c.size();
        int depth = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string& s = c[i]->text;
            if (s == "(" || s == "[")
                ++depth;
            else if (s == ")" || s == "]")
                --depth;
            else if (depth == 0 && (s == "<" || s == ">" || s == "<=" || s == ">=")) {
                if (at != c.size())
                    return;
                at = i;
            }
        }
        if (at == c.size() || at == 0 || at + 1 == c.size())
            return;
        const std::string lhs = joined(c, 0, at), rhs = joined(c, at + 1, c.size());
        const bool less = c[at]->text[0] == '<';
        std::string e, op;
        if (lhs == x) {
            e = rhs;
            op = less ? "max" : "min";
        } else if (rhs == x) {
            e = lhs;
            op = less ? "min" : "max";
        } else {
            return;
        }
        const Toks a = significantTokens(*then);
        if (a.size() < 4 || a[0]->text != x || a[1]->text != "=" || a.back()->text != ";")
            return;
        if (joined(a, 2, a.size() - 1) != e || mentions(a, 2, a.size() - 1, x))
            return;
        out.push_back({&n, then, op});
    });
    return out;
}

struct Canonical {
    std::string index;
    std::set<std::string> fixed; // bound and stride names
};

bool canonicalFor(const Node& loop, Canonical& out) {
    out.index = loopIndexVar(loop);
    const Node* cond = loop.child(Role::Cond);
    const Node* step = loop.child(Role::Step);
    if (out.index.empty() || !cond || !step)
        return false;
    const Node* init = loop.child(Role::Init);
    if (init->kind == NodeKind::Decl && init->children().size() > 2)
        return false;
    const std::string& i = out.index;
    const Toks c = significantTokens(*cond);
    if (c.size() < 3 || c[0]->text != i)
        return false;
    const std::string& rel = c[1]->text;
    if (rel != "<" && rel != "<=" && rel != ">" && rel != ">=" && rel != "!=")
        return false;
    if (lowestOperator(c, 2, c.size()) <= precedence("<") || mentions(c, 2, c.size(), i))
        return false;
    for (std::size_t k = 2; k < c.size(); ++k)
        if (c[k]->kind == TokenKind::Identifier)
            out.fixed.insert(c[k]->text);

    const Toks s = significantTokens(*step);
    const std::size_t n = s.size();
    const bool unit = n == 2 && ((s[0]->text == i && (s[1]->text == "++" || s[1]->text == "--")) ||
                                 (s[1]->text == i && (s[0]->text == "++" || s[0]->text == "--")));
    bool stride = false;
    if (n >= 3 && s[0]->text == i && (s[1]->text == "+=" || s[1]->text == "-=")) {
        stride = !mentions(s, 2, n, i) && lowestOperator(s, 2, n) > precedence(",");
        for (std::size_t k = 2; k < n; ++k)
            if (s[k]->kind == TokenKind::Identifier)
                out.fixed.insert(s[k]->text);
    }
    if (n >= 5 && s[0]->text == i && s[1]->text == "=" && s[2]->text == i &&
        (s[3]->text == "+" || s[3]->text == "-")) {
        stride = !mentions(s, 4, n, i) && lowestOperator(s, 4, n) > precedence("+");
        for (std::size_t k = 4; k < n; ++k)
            if (s[k]->kind == TokenKind::Identifier)
                out.fixed.insert(s[k]->text);
    }
    return unit || stride;
}

bool firstTokenIs(const Node& n, std::string_view word) {
    const Token* t = n.firstToken();
    return t && t->text == word;
}

// break/return/goto leaving `loop` from its body.
bool hasEarlyExit(const Node& loop) {
    bool exit = false;
    loop.child(Role::Body)->walk([&](const Node& n) {
        if (n.kind == NodeKind::Return || (n.kind == NodeKind::ExprStmt && firstTokenIs(n, "goto"))) {
            exit = true;
        } else if (n.kind == NodeKind::ExprStmt && firstTokenIs(n, "break")) {
            const Node* p = n.parent;
            while (p != &loop && !p->isLoop() && p->kind != NodeKind::Switch)
                p = p->parent;
            exit = exit || p == &loop;
        }
    });
    return exit;
}

struct Region {
    std::map<const Node*, std::size_t> pre;
    std::map<const Node*, std::size_t> last; // highest preorder index inside
};

Region number(const Node& root) {
    Region r;
    std::size_t k = 0;
    root.walk([&](const Node& n) {
        r.pre[&n] = k;
        for (const Node* p = &n; p; p = p->parent) {
            r.last[p] = k;
            if (p == &root)
                break;
        }
        ++k;
    });
    return r;
}

class LoopAnalyzer {
public:
    LoopAnalyzer(const Node& fn, const std::set<std::string>& pureFns)
        : fn_(fn), body_(*functionBody(fn)), pure_(pureFns), locals_(localNames(fn)),
          fnAccesses_(collectAccesses(body_)), region_(number(body_)) {}

    LoopVerdict analyze(const Node& loop);

private:
    std::string check(const Node& loop, LoopVerdict& v);
    bool liveAfter(const Node& loop, const std::string& x) const;

    const Node& fn_;
    const Node& body_;
    const std::set<std::string>& pure_;
    std::set<std::string> locals_;
    std::vector<Access> fnAccesses_;
    Region region_;
};

LoopVerdict LoopAnalyzer::analyze(const Node& loop) {
    LoopVerdict v;
    v.function = functionName(fn_);
    v.line = loop.line();
    v.reason = check(loop, v);
    v.parallelizable = v.reason == "ok";
    if (!v.parallelizable) {
        v.reductionVars.clear();
        v.privateVars.clear();
    }
    return v;
}

std::string LoopAnalyzer::check(const Node& loop, LoopVerdict& v) {
    if (!attachedPragmas(loop).empty())
        return "has-pragma";
    Canonical canon;
    if (!canonicalFor(loop, canon))
        return "non-canonical";
    const Node& body = *loop.child(Role::Body);
    if (hasEarlyExit(loop))
        return "early-exit";
    for (const Node* c : callsIn(loop)) {
        const std::string name = callName(*c);
        if (!pure_.count(name) && !isPureLibraryFunction(name))
            return "impure-call:" + name;
    }

    const std::vector<Access> acc = collectAccesses(body);
    std::set<std::string> declared;
    std::set<std::string> innerIndices;
    body.walk([&](const Node& n) {
        if (n.kind == NodeKind::Declarator && n.parent && n.parent->kind == NodeKind::Decl)
            declared.insert(declaratorName(n));
        if (n.kind == NodeKind::For) {
            const std::string j = loopIndexVar(n);
            if (!j.empty() && n.child(Role::Init)->kind != NodeKind::Decl)
                innerIndices.insert(j);
        }
    });

    std::vector<std::string> names;
    for (const Access& a : acc) {
        if (a.write && (a.name.empty() || a.deref))
            return "pointer-write";
        if (a.write && a.name == canon.index)
            return "index-modified";
        if (a.write && canon.fixed.count(a.name))
            return "bound-modified";
        if (!a.name.empty() && std::find(names.begin(), names.end(), a.name) == names.end())
            names.push_back(a.name);
    }

    std::vector<const Access*> seq;
    for (const Access& a : acc)
        seq.push_back(&a);
    std::vector<std::string> privates;
    std::map<std::string, std::vector<std::string>> reductions; // op -> vars
    std::vector<std::string> reductionOrder;

    for (const std::string& x : names) {
        if (declared.count(x) || x == canon.index)
            continue;
        std::vector<const Access*> mine;
        for (const Access& a : acc)
            if (a.name == x)
                mine.push_back(&a);
        const bool written = std::any_of(mine.begin(), mine.end(), [](const Access* a) { return a->write; });
        if (!written)
            continue;
        const bool element = std::any_of(mine.begin(), mine.end(),
                                         [](const Access* a) { return a->write && !a->subscripts.empty(); });
        if (element) {
            // Some dimension must be indexed by the loop variable itself in
            // every access, so iterations touch disjoint elements.
            std::size_t dims = 0;
            for (const Access* a : mine) {
                if (a->write && a->subscripts.empty())
                    return "scalar-dependence:" + x;
                dims = std::max(dims, a->subscripts.size());
            }
            bool disjoint = false;
            for (std::size_t d = 0; d < dims && !disjoint; ++d)
                disjoint = std::all_of(mine.begin(), mine.end(), [&](const Access* a) {
                    return a->subscripts.size() > d && a->subscripts[d] == canon.index;
                });
            if (!disjoint)
                return "loop-carried-dependence";
            continue;
        }
        if (innerIndices.count(x)) {
            privates.push_back(x);
            continue;
        }
        // Reduction: every write is a reduction update with one operator and
        // every read belongs to one of those updates.
        std::string op;
        bool reduction = true;
        const auto minmax = minMaxUpdates(body, x);
        std::map<const Node*, std::string> updates;
        auto minmaxOp = [&](const Node* stmt) {
            for (const auto& u : minmax)
                if (stmt == u.ifNode || stmt == u.assign)
                    return u.op;
            return std::string();
        };
        for (const Access* a : mine) {
            if (!a->write)
                continue;
            std::string this_op = minmaxOp(a->stmt);
            if (this_op.empty())
                this_op = reductionOp(*a, x);
            if (this_op.empty() || (!op.empty() && op != this_op)) {
                reduction = false;
                break;
            }
            op = this_op;
            updates[a->stmt] = op;
        }
        for (const Access* a : mine)
            if (reduction && !a->write && !updates.count(a->stmt) && minmaxOp(a->stmt).empty())
                reduction = false;
        if (reduction) {
            if (!reductions.count(op))
                reductionOrder.push_back(op);
            reductions[op].push_back(x);
            continue;
        }
        if (readsCovered(seq, x)) {
            privates.push_back(x);
            continue;
        }
        return "scalar-dependence:" + x;
    }

    for (const std::string& x : privates) {
        if (!locals_.count(x) || liveAfter(loop, x))
            return "live-out:" + x;
    }
    if (!locals_.count(canon.index) || liveAfter(loop, canon.index))
        if (loop.child(Role::Init)->kind != NodeKind::Decl)
            return "live-out:" + canon.index;

    for (const auto& op : reductionOrder)
        for (const auto& x : reductions[op])
            v.reductionVars.push_back(op + ":" + x);
    v.privateVars = privates;
    return "ok";
}

bool LoopAnalyzer::liveAfter(const Node& loop, const std::string& x) const {
    const Node* outer = nullptr;
    for (const Node* p = loop.parent; p && p != &body_; p = p->parent)
        if (p->isLoop())
            outer = p;
    auto pos = [&](const Access& a) { return region_.pre.at(a.stmt); };
    const std::size_t l0 = region_.pre.at(&loop), l1 = region_.last.at(&loop);
    std::vector<const Access*> seq;
    auto take = [&](auto pred) {
        for (const Access& a : fnAccesses_)
            if (a.name == x && pred(pos(a)))
                seq.push_back(&a);
    };
    if (outer) {
        const std::size_t r0 = region_.pre.at(outer), r1 = region_.last.at(outer);
        take([&](std::size_t p) { return p > l1 && p <= r1; });
        take([&](std::size_t p) { return p >= r0 && p < l0; });
        take([&](std::size_t p) { return p > r1; });
    } else {
        take([&](std::size_t p) { return p > l1; });
    }
    return !readsCovered(seq, x);
}

std::string pragmaFor(const LoopVerdict& v) {
    std::string text = "#pragma omp parallel for";
    std::map<std::string, std::vector<std::string>> byOp;
    std::vector<std::string> ops;
    for (const auto& r : v.reductionVars) {
        const auto colon = r.find(':');
        const std::string op = r.substr(0, colon);
        if (!byOp.count(op))
            ops.push_back(op);
        byOp[op].push_back(r.substr(colon + 1));
    }
    for (const auto& op : ops) {
        text += " reduction(" + op + ":";
        for (std::size_t i = 0; i < byOp[op].size(); ++i)
            text += (i ? "," : "") + byOp[op][i];
        text += ")";
    }
    if (!v.privateVars.empty()) {
        text += " private(";
        for (std::size_t i = 0; i < v.privateVars.size(); ++i)
            text += (i ? "," : "") + v.privateVars[i];
        text += ")";
    }
    return text;
}

bool isParallelFor(const Node& pragma) {
    const Token* first = pragma.firstToken();
    if (!first || first->text.empty() || first->text[0] != '#')
        return false; // already disabled
    const std::string t = pragmaText(pragma);
    return t.rfind("omp parallel for", 0) == 0;
}

// The statement a pragma applies to: the next non-pragma sibling.
Node* pragmaTarget(Node& pragma) {
    Node* parent = pragma.parent;
    if (!parent)
        return nullptr;
    for (std::size_t i = pragma.indexInParent() + 1; i < parent->pieces.size(); ++i) {
        if (std::holds_alternative<Token>(parent->pieces[i]))
            continue;
        Node* n = std::get<std::unique_ptr<Node>>(parent->pieces[i]).get();
        if (n->kind != NodeKind::Pragma)
            return n;
    }
    return nullptr;
}

} // namespace

std::string ParallelizationReport::toJson() const {
    nlohmann::ordered_json loopsJson = nlohmann::ordered_json::array();
    for (const auto& v : loops)
        loopsJson.push_back({{"id", v.id},
                             {"function", v.function},
                             {"line", v.line},
                             {"parallelizable", v.parallelizable},
                             {"reason", v.reason},
                             {"reductionVars", v.reductionVars},
                             {"privateVars", v.privateVars}});
    nlohmann::ordered_json doc;
    doc["loops"] = loopsJson;
    return doc.dump(2) + "\n";
}

ParallelizationReport autoParallelize(Session& s) {
    SourceUnit& unit = s.unit();
    const auto pureList = detectMemoizable(unit);
    const std::set<std::string> pure(pureList.begin(), pureList.end());

    ParallelizationReport report;
    std::vector<std::pair<NodeId, std::string>> accepted;
    for (Node* fn : unit.functions()) {
        if (!functionBody(*fn))
            continue;
        LoopAnalyzer analyzer(*fn, pure);
        int ordinal = 0;
        std::vector<Node*> loops;
        functionBody(*fn)->walk([&](Node& n) {
            if (n.kind == NodeKind::For)
                loops.push_back(&n);
        });
        for (Node* loop : loops) {
            LoopVerdict v = analyzer.analyze(*loop);
            v.id = v.function + ":" + std::to_string(++ordinal);
            if (v.parallelizable)
                accepted.emplace_back(loop->id, pragmaFor(v));
            report.loops.push_back(std::move(v));
        }
    }
    for (const auto& [id, text] : accepted)
        s.insert({JpKind::Loop, id}, InsertPosition::Before, text);
    return report;
}

int disableNestedParallelPragmas(Session& s) {
    SourceUnit& unit = s.unit();
    std::vector<std::pair<Node*, Node*>> active; // pragma, loop
    unit.root->walk([&](Node& n) {
        if (n.kind == NodeKind::Pragma && isParallelFor(n))
            if (Node* target = pragmaTarget(n); target && target->isLoop())
                active.emplace_back(&n, target);
    });
    int disabled = 0;
    for (const auto& [pragma, loop] : active) {
        const bool nested = std::any_of(active.begin(), active.end(), [&](const auto& other) {
            return other.second != loop && isDescendant(loop, other.second);
        });
        if (!nested)
            continue;
        Token* t = pragma->firstToken();
        rewriteToken(*t, "// " + t->text);
        s.recordAction();
        ++disabled;
    }
    return disabled;
}

} // namespace aw
