#include "aw/strategies.hpp"

#include "aw/analysis.hpp"
#include "aw/edit.hpp"
#include "aw/error.hpp"

#include <algorithm>
#include <map>

namespace aw {

namespace {

struct Globals {
    std::set<std::string> constNames;
    std::set<std::string> mutableNames;
};

Globals fileScopeObjects(const SourceUnit& unit) {
    Globals g;
    for (const Node* item : unit.root->children()) {
        if (item->kind != NodeKind::Decl)
            continue;
        if (const Node* specs = item->child(Role::Specs); specs && hasStorageClass(*specs, "typedef"))
            continue;
        for (const Node* d : item->children()) {
            if (d->kind != NodeKind::Declarator)
                continue;
            const CType t = declaratorType(*d);
            const bool readOnly = t.pointers.empty() ? t.isConst : t.pointers.back().isConst && t.isConst;
            (readOnly ? g.constNames : g.mutableNames).insert(declaratorName(*d));
        }
    }
    return g;
}

// Local reasons a function is not a memoization candidate; empty when none.
// Calls to other defined functions are returned in `deps`.
std::string localVerdict(const SourceUnit& unit, const Node& fn, const Globals& g,
                         std::set<std::string>& deps) {
    const CType ret = returnType(fn);
    if (!ret.isScalar() || ret.base == "void")
        return "return type";
    for (const Node* p : functionParams(fn)) {
        const Node* d = p->child(Role::Declarator);
        const CType t = d ? declaratorType(*d) : specifierType(*p->child(Role::Specs));
        if (!t.isScalar())
            return "pointer parameter";
    }
    const Node* body = functionBody(fn);
    if (!body)
        return "no body";
    std::string reason;
    body->walk([&](const Node& n) {
        if (reason.empty() && n.kind == NodeKind::Decl)
            if (const Node* specs = n.child(Role::Specs); specs && hasStorageClass(*specs, "static"))
                reason = "static local";
    });
    if (!reason.empty())
        return reason;

    const std::set<std::string> locals = localNames(fn);
    for (const Access& a : collectAccesses(*body)) {
        if (a.write && (a.name.empty() || a.deref))
            return "write through pointer";
        if (a.write && !locals.count(a.name))
            return "writes global " + a.name;
        if (a.write && !a.subscripts.empty()) {
            CType t;
            if (localType(fn, a.name, t) && !t.pointers.empty())
                return "write through pointer";
        }
        if (!locals.count(a.name) && g.mutableNames.count(a.name))
            return "reads global " + a.name;
    }
    for (const Node* c : callsIn(*body)) {
        const std::string callee = callName(*c);
        if (unit.function(callee))
            deps.insert(callee);
        else if (!isPureLibraryFunction(callee))
            return "calls " + callee;
    }
    return {};
}

bool isPowerOfTwo(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::string joinParams(const std::string& type, std::size_t n, bool withTypes) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i)
            s += ", ";
        if (withTypes)
            s += type + " ";
        s += "a" + std::to_string(i);
    }
    return s;
}

std::string replaceAll(std::string text, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = text.find(from, pos)) != std::string::npos; pos += to.size())
        text.replace(pos, from.size(), to);
    return text;
}

const char* kMemoHeader = R"(#ifndef AW_MEMO_@F@_H
#define AW_MEMO_@F@_H

#define AW_MEMO_KEEP 0
#define AW_MEMO_REPLACE 1

/* Set to 0 to bypass the table; the environment variable of the same name
 * overrides the initial value. */
extern int @f@_memo_enabled;
/* AW_MEMO_KEEP or AW_MEMO_REPLACE: what a miss does to an occupied slot. */
extern int @f@_memo_policy;

@R@ @f@_wrapper(@P@);
int @f@_memo_active(void);
int @f@_memo_lookup(@P@, @R@ *result);
void @f@_memo_update(@P@, @R@ result);
void @f@_memo_stats(long *hits, long *misses, long *evictions);
void @f@_memo_reset(void);

#endif
)";

const char* kMemoSource = R"(#include "aw_memo_@f@.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define @F@_MEMO_SIZE @N@u
#define @F@_MEMO_ARGS @K@

int @f@_memo_enabled = @E@;
int @f@_memo_policy = @Y@;

struct @f@_memo_entry {
    int valid;
    @T@ args[@F@_MEMO_ARGS];
    @R@ result;
};

static struct @f@_memo_entry @f@_memo_table[@F@_MEMO_SIZE];
static long @f@_memo_hits;
static long @f@_memo_misses;
static long @f@_memo_evictions;
static int @f@_memo_ready;

static void @f@_memo_report(void)
{
    const char *path = getenv("AW_FEED");
    FILE *out;
    if (!path || !*path)
        return;
    out = fopen(path, "a");
    if (!out)
        return;
    fprintf(out, "memo=@f@ hits=%ld misses=%ld evictions=%ld\n",
            @f@_memo_hits, @f@_memo_misses, @f@_memo_evictions);
    fclose(out);
}

int @f@_memo_active(void)
{
    if (!@f@_memo_ready) {
        const char *env;
        @f@_memo_ready = 1;
        env = getenv("@f@_memo_enabled");
        if (env && *env)
            @f@_memo_enabled = atoi(env);
        env = getenv("@f@_memo_policy");
        if (env && *env)
            @f@_memo_policy = atoi(env);
        atexit(@f@_memo_report);
    }
    return @f@_memo_enabled;
}

/* FNV-1a over the argument bytes, masked to the table size. */
static unsigned long @f@_memo_slot(const @T@ *args)
{
    const unsigned char *p = (const unsigned char *)args;
    unsigned long long h = 14695981039346656037ULL;
    size_t i;
    for (i = 0; i < sizeof(@T@) * @F@_MEMO_ARGS; i++) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return (unsigned long)(h & (@F@_MEMO_SIZE - 1u));
}

int @f@_memo_lookup(@P@, @R@ *result)
{
    @T@ args[@F@_MEMO_ARGS];
    struct @f@_memo_entry *e;
@S@    e = &@f@_memo_table[@f@_memo_slot(args)];
    if (e->valid && memcmp(e->args, args, sizeof args) == 0) {
        *result = e->result;
        @f@_memo_hits++;
        return 1;
    }
    @f@_memo_misses++;
    return 0;
}

void @f@_memo_update(@P@, @R@ result)
{
    @T@ args[@F@_MEMO_ARGS];
    struct @f@_memo_entry *e;
@S@    e = &@f@_memo_table[@f@_memo_slot(args)];
    if (e->valid) {
        if (@f@_memo_policy == AW_MEMO_KEEP)
            return;
        if (memcmp(e->args, args, sizeof args) != 0)
            @f@_memo_evictions++;
    }
    e->valid = 1;
    memcpy(e->args, args, sizeof args);
    e->result = result;
}

void @f@_memo_stats(long *hits, long *misses, long *evictions)
{
    if (hits)
        *hits = @f@_memo_hits;
    if (misses)
        *misses = @f@_memo_misses;
    if (evictions)
        *evictions = @f@_memo_evictions;
}

void @f@_memo_reset(void)
{
    memset(@f@_memo_table, 0, sizeof @f@_memo_table);
    @f@_memo_hits = @f@_memo_misses = @f@_memo_evictions = 0;
}
)";

} // namespace

std::vector<std::string> detectMemoizable(const SourceUnit& unit) {
    const Globals g = fileScopeObjects(unit);
    std::map<std::string, std::set<std::string>> candidates;
    std::vector<std::string> order;
    for (const Node* fn : unit.functions()) {
        std::set<std::string> deps;
        const std::string name = functionName(*fn);
        order.push_back(name);
        if (localVerdict(unit, *fn, g, deps).empty())
            candidates[name] = std::move(deps);
    }
    // Drop candidates calling a non-candidate until nothing changes.
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = candidates.begin(); it != candidates.end();) {
            const bool bad = std::any_of(it->second.begin(), it->second.end(),
                                         [&](const std::string& d) { return !candidates.count(d); });
            if (bad) {
                it = candidates.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    std::vector<std::string> out;
    for (const auto& n : order)
        if (candidates.count(n))
            out.push_back(n);
    return out;
}

std::vector<SupportFile> memoize(Session& s, const MemoConfig& cfg) {
    SourceUnit& unit = s.unit();
    const std::string& f = cfg.function;
    Node* fn = unit.function(f);
    if (!fn)
        throw FunctionNotFound(f);
    if (!isPowerOfTwo(cfg.tableSize))
        throw ConfigError("table size must be a power of two: " + std::to_string(cfg.tableSize));

    CType ret = returnType(*fn);
    ret.isConst = ret.isVolatile = false;
    if (!ret.isArithmetic() || ret.base == "long double")
        throw UnsupportedSignature(f + ": return type " + render(ret));
    const auto params = functionParams(*fn);
    if (params.empty())
        throw UnsupportedSignature(f + ": no arguments");
    std::string argType;
    for (const Node* p : params) {
        const Node* d = p->child(Role::Declarator);
        CType t = d ? declaratorType(*d) : specifierType(*p->child(Role::Specs));
        t.isConst = t.isVolatile = false;
        if (!t.isArithmetic() || t.base == "long double")
            throw UnsupportedSignature(f + ": parameter type " + render(t));
        if (!argType.empty() && render(t) != argType)
            throw UnsupportedSignature(f + ": parameters of different types");
        argType = render(t);
    }
    if (!cfg.force) {
        const auto pure = detectMemoizable(unit);
        if (std::find(pure.begin(), pure.end(), f) == pure.end())
            throw UnsupportedSignature(f + " has side effects or reads mutable state");
    }
    const std::string wrapper = f + "_wrapper";
    if (unit.definesOrDeclares(wrapper))
        throw DuplicateName(wrapper);

    const std::string retType = render(ret);
    const std::size_t n = params.size();
    const std::string typedParams = joinParams(argType, n, true);
    const std::string args = joinParams(argType, n, false);

    std::vector<Node*> calls;
    unit.root->walk([&](Node& c) {
        if (c.kind == NodeKind::Call && callName(c) == f)
            calls.push_back(&c);
    });
    for (Node* c : calls) {
        rewriteToken(*callNameToken(*c), wrapper);
        s.recordAction();
    }

    Node* firstUser = nullptr;
    for (Node* item : unit.functions()) {
        const auto inside = callsIn(*item);
        const bool calls = std::any_of(inside.begin(), inside.end(),
                                       [&](const Node* c) { return callName(*c) == wrapper; });
        if (item == fn || calls) {
            firstUser = item;
            break;
        }
    }
    s.insert(s.jpFor(JpKind::Function, *firstUser), InsertPosition::Before,
             "int " + f + "_memo_active(void);\n"
             "int " + f + "_memo_lookup(" + typedParams + ", " + retType + " *result);\n"
             "void " + f + "_memo_update(" + typedParams + ", " + retType + " result);\n" +
             retType + " " + wrapper + "(" + typedParams + ");\n");
    s.insert(s.jpFor(JpKind::Function, *fn), InsertPosition::After,
             retType + " " + wrapper + "(" + typedParams + ")\n{\n" +
             "    " + retType + " r;\n" +
             "    if (!" + f + "_memo_active())\n        return " + f + "(" + args + ");\n" +
             "    if (" + f + "_memo_lookup(" + args + ", &r))\n        return r;\n" +
             "    r = " + f + "(" + args + ");\n" +
             "    " + f + "_memo_update(" + args + ", r);\n" +
             "    return r;\n}\n");

    std::string store;
    for (std::size_t i = 0; i < n; ++i)
        store += "    args[" + std::to_string(i) + "] = a" + std::to_string(i) + ";\n";
    std::string upper = f;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    auto fill = [&](std::string text) {
        text = replaceAll(text, "@S@", store);
        text = replaceAll(text, "@F@", upper);
        text = replaceAll(text, "@f@", f);
        text = replaceAll(text, "@R@", retType);
        text = replaceAll(text, "@T@", argType);
        text = replaceAll(text, "@P@", typedParams);
        text = replaceAll(text, "@K@", std::to_string(n));
        text = replaceAll(text, "@N@", std::to_string(cfg.tableSize));
        text = replaceAll(text, "@E@", cfg.enabledByDefault ? "1" : "0");
        text = replaceAll(text, "@Y@", cfg.policy == MemoPolicy::Keep ? "AW_MEMO_KEEP" : "AW_MEMO_REPLACE");
        return text;
    };
    return {{"aw_memo_" + f + ".h", fill(kMemoHeader)}, {"aw_memo_" + f + ".c", fill(kMemoSource)}};
}

} // namespace aw
