#include "aw/strategies.hpp"

#include "aw/analysis.hpp"
#include "aw/edit.hpp"
#include "aw/error.hpp"

#include <algorithm>
#include <functional>

namespace aw {

namespace {

const std::vector<std::string>& libmNames() {
    static const std::vector<std::string> names = {
        "sqrt", "sin",  "cos",  "tan",   "asin",  "acos", "atan",  "atan2", "sinh", "cosh", "tanh",
        "exp",  "exp2", "expm1", "log",  "log2",  "log10", "log1p", "pow",  "fabs", "floor",
        "ceil", "round", "trunc", "fmod", "fmin", "fmax", "hypot", "cbrt", "erf",  "erfc"};
    return names;
}

// Rewrites the base of a specifier list if it is `oldBase`. Returns whether it did.
bool rebase(SourceUnit& unit, Node* specs, const std::string& oldBase, const std::string& newBase) {
    if (!specs)
        return false;
    CType t = specifierType(*specs);
    if (t.base != oldBase)
        return false;
    t.base = newBase;
    rewriteSpecifiers(unit, *specs, t);
    return true;
}

bool isFloatSuffix(char c) { return c == 'f' || c == 'F' || c == 'l' || c == 'L'; }

void rewriteLiterals(Node& body, const PrecisionMap& map) {
    body.walk([&](Node& n) {
        for (auto& p : n.pieces) {
            Token* t = std::get_if<Token>(&p);
            if (!t || t->kind != TokenKind::Literal || !isFloatingLiteral(t->text))
                continue;
            const char last = t->text.back();
            if (map.newBase == "float" && !isFloatSuffix(last))
                rewriteToken(*t, t->text + map.literalSuffix);
            else if (map.newBase == "double" && (last == 'f' || last == 'F'))
                rewriteToken(*t, t->text.substr(0, t->text.size() - 1));
        }
    });
}

void rewriteTypeNames(SourceUnit& unit, Node& body, const PrecisionMap& map) {
    std::vector<Node*> names;
    body.walk([&](Node& n) {
        if (n.kind == NodeKind::TypeName)
            names.push_back(&n);
    });
    for (Node* tn : names) {
        CType t;
        try {
            t = parseType(compactText(*tn));
        } catch (const Error&) {
            continue;
        }
        const CType changed = changeType(t, map.oldBase, map.newBase);
        if (changed == t || tn->pieces.empty())
            continue;
        replacePieceRange(unit, *tn, 0, tn->pieces.size() - 1, render(changed));
    }
}

// Prototypes of function `name` at file scope.
std::vector<Node*> prototypesOf(const SourceUnit& unit, const std::string& name) {
    std::vector<Node*> out;
    for (Node* item : unit.root->children()) {
        if (item->kind != NodeKind::Decl)
            continue;
        for (Node* d : item->children())
            if (d->kind == NodeKind::FuncDeclarator && functionName(*d) == name)
                out.push_back(d);
    }
    return out;
}

void rewritePrototypes(Session& s, const std::string& name, const PrecisionMap& map, bool count) {
    for (Node* proto : prototypesOf(s.unit(), name)) {
        if (rebase(s.unit(), proto->parent->child(Role::Specs), map.oldBase, map.newBase) && count)
            s.recordAction();
        for (Node* p : functionParams(*proto))
            if (rebase(s.unit(), p->child(Role::Specs), map.oldBase, map.newBase) && count)
                s.recordAction();
    }
}

std::string prototypeText(const Node& fn) {
    return compactText(*fn.child(Role::Specs)) + " " + compactText(*functionDeclarator(fn)) + ";";
}

void callTree(const SourceUnit& unit, const std::string& root, std::vector<std::string>& order) {
    if (std::find(order.begin(), order.end(), root) != order.end())
        return;
    order.push_back(root);
    for (const std::string& callee : definedCallees(unit, *unit.function(root)))
        callTree(unit, callee, order);
}

std::vector<std::string> callTreeOf(const SourceUnit& unit, const std::string& root) {
    if (!unit.function(root))
        throw FunctionNotFound(root);
    std::vector<std::string> order;
    callTree(unit, root, order);
    return order;
}

} // namespace

PrecisionMap PrecisionMap::doubleToFloat() {
    PrecisionMap m;
    for (const auto& n : libmNames())
        m.libm[n] = n + "f";
    return m;
}

PrecisionMap PrecisionMap::floatToDouble() {
    PrecisionMap m;
    m.oldBase = "float";
    m.newBase = "double";
    m.literalSuffix.clear();
    for (const auto& n : libmNames())
        m.libm[n + "f"] = n;
    return m;
}

PrecisionMap PrecisionMap::between(const std::string& oldBase, const std::string& newBase) {
    if (oldBase == "double" && newBase == "float")
        return doubleToFloat();
    if (oldBase == "float" && newBase == "double")
        return floatToDouble();
    PrecisionMap m;
    m.oldBase = canonicalBase(oldBase);
    m.newBase = canonicalBase(newBase);
    m.libm.clear();
    m.literalSuffix.clear();
    return m;
}

void changePrecision(Session& s, const std::string& name, const PrecisionMap& map) {
    SourceUnit& unit = s.unit();
    const JoinPoint fnJp = s.functionJp(name);

    // Declarators, return type first. A shared specifier list is rewritten
    // once but counts for each of its declarators.
    for (const JpTuple& t : s.select({{JpKind::Decl, {}}}, fnJp)) {
        Node& d = s.resolve(t.back());
        if (d.kind == NodeKind::FunctionDef) {
            if (rebase(unit, d.child(Role::Specs), map.oldBase, map.newBase))
                s.recordAction();
            continue;
        }
        if (!rebase(unit, declaratorSpecifiers(d), map.oldBase, map.newBase))
            continue;
        int count = 1;
        if (d.parent && d.parent->kind == NodeKind::Decl) {
            count = 0;
            for (const Node* c : d.parent->children())
                if (c->kind == NodeKind::Declarator || c->kind == NodeKind::FuncDeclarator)
                    ++count;
        }
        for (int i = 0; i < count; ++i)
            s.recordAction();
    }

    rewritePrototypes(s, name, map, true);
    adaptPrecisionUses(s, name, map);
}

void adaptPrecisionUses(Session& s, const std::string& name, const PrecisionMap& map) {
    SourceUnit& unit = s.unit();
    Node& fn = s.resolve(s.functionJp(name));
    rewritePrototypes(s, name, map, false);
    Node* body = functionBody(fn);
    if (!body)
        return;
    rewriteTypeNames(unit, *body, map);
    if (map.oldBase == "double" || map.oldBase == "float")
        rewriteLiterals(*body, map);
    body->walk([&](Node& n) {
        if (n.kind != NodeKind::Call)
            return;
        const auto it = map.libm.find(callName(n));
        if (it != map.libm.end())
            rewriteToken(*callNameToken(n), it->second);
    });
}

std::vector<std::string> cloneCallTree(Session& s, const std::string& root, const std::string& suffix) {
    SourceUnit& unit = s.unit();
    const std::vector<std::string> originals = callTreeOf(unit, root);
    for (const std::string& n : originals)
        if (suffix.empty() || unit.definesOrDeclares(n + suffix))
            throw DuplicateName(n + suffix);

    std::vector<std::string> names;
    std::vector<JoinPoint> clones;
    for (const std::string& n : originals) {
        clones.push_back(s.cloneFunction(s.functionJp(n), n + suffix));
        names.push_back(n + suffix);
    }
    for (const JoinPoint& jp : clones)
        functionBody(s.resolve(jp))->walk([&](Node& n) {
            if (n.kind != NodeKind::Call)
                return;
            const std::string callee = callName(n);
            if (std::find(originals.begin(), originals.end(), callee) != originals.end())
                rewriteToken(*callNameToken(n), callee + suffix);
        });

    // Clones sit next to their originals, so a clone may call one defined
    // further down. Declare them all ahead of the first original.
    if (clones.size() > 1) {
        Node* first = nullptr;
        for (Node* fn : unit.functions())
            if (std::find(originals.begin(), originals.end(), functionName(*fn)) != originals.end()) {
                first = fn;
                break;
            }
        std::string protos;
        for (const JoinPoint& jp : clones)
            protos += prototypeText(s.resolve(jp)) + "\n";
        s.insert(s.jpFor(JpKind::Function, *first), InsertPosition::Before, protos);
    }
    return names;
}

std::vector<std::string> createTypedVersion(Session& s, const std::string& root,
                                            const std::string& suffix, const PrecisionMap& map) {
    const auto names = cloneCallTree(s, root, suffix);
    for (const auto& n : names)
        changePrecision(s, n, map);
    return names;
}

std::vector<PrecisionMix> enumerateMixes(const SourceUnit& unit, const std::string& root, int limit) {
    const std::vector<std::string> fns = callTreeOf(unit, root);
    const std::size_t n = fns.size();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (const std::string& callee : definedCallees(unit, *unit.function(fns[i]))) {
            const auto j = static_cast<std::size_t>(
                std::find(fns.begin(), fns.end(), callee) - fns.begin());
            if (j != i)
                edges.emplace_back(i, j);
        }

    std::vector<PrecisionMix> out;
    if (n >= 63)
        throw UnsupportedConstruct(0, "call tree too large to enumerate");
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 1; mask < total && static_cast<int>(out.size()) < limit; ++mask) {
        auto isFloat = [&](std::size_t i) { return ((mask >> (n - 1 - i)) & 1) != 0; };
        bool ok = true;
        for (const auto& [a, b] : edges)
            if (!isFloat(a) && isFloat(b))
                ok = false;
        if (!ok)
            continue;
        PrecisionMix mix;
        mix.functions = fns;
        for (std::size_t i = 0; i < n; ++i)
            mix.bases.push_back(isFloat(i) ? "float" : "double");
        out.push_back(std::move(mix));
    }
    return out;
}

std::vector<std::string> generateMixedVersions(Session& s, const std::string& root, int limit) {
    const auto mixes = enumerateMixes(s.unit(), root, limit);
    std::vector<std::string> roots;
    for (std::size_t k = 0; k < mixes.size(); ++k) {
        const auto names = cloneCallTree(s, root, "_mix" + std::to_string(k + 1));
        for (std::size_t i = 0; i < names.size(); ++i)
            if (mixes[k].bases[i] == "float")
                changePrecision(s, names[i], PrecisionMap::doubleToFloat());
        roots.push_back(names.front());
    }
    return roots;
}

} // namespace aw
