#include "aw/strategies.hpp"

#include "aw/edit.hpp"
#include "aw/error.hpp"

#include <algorithm>
#include <cctype>

namespace aw {

namespace {

bool isIdentifier(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || isKeyword(s))
        return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

CType paramType(const Node& p) {
    const Node* d = p.child(Role::Declarator);
    CType t = d ? declaratorType(*d) : specifierType(*p.child(Role::Specs));
    t.isConst = t.isVolatile = false;
    return t;
}

// Arithmetic scalars convert into each other; anything else must point to
// the same base through the same number of levels.
bool compatible(const CType& a, const CType& b) {
    if (a.isArithmetic() && b.isArithmetic())
        return true;
    return a.base == b.base && a.pointers.size() + a.arrays.size() == b.pointers.size() + b.arrays.size();
}

void checkSignatures(const SourceUnit& unit, const std::vector<std::string>& versions, std::size_t argCount) {
    const Node* first = unit.function(versions.front());
    const auto ref = functionParams(*first);
    CType refRet = returnType(*first);
    for (const auto& v : versions) {
        const Node* fn = unit.function(v);
        const auto ps = functionParams(*fn);
        if (ps.size() != ref.size() || ps.size() != argCount)
            throw SignatureMismatch(v + ": parameter count differs");
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (!compatible(paramType(*ps[i]), paramType(*ref[i])))
                throw SignatureMismatch(v + ": parameter " + std::to_string(i + 1) + " type differs");
        CType r = returnType(*fn);
        const bool bothVoid = r.base == "void" && r.isScalar() && refRet.base == "void" && refRet.isScalar();
        if (!bothVoid && !compatible(r, refRet))
            throw SignatureMismatch(v + ": return type differs");
    }
}

std::string withCallee(Node& stmt, Node& call, const std::string& name) {
    Token* tok = callNameToken(call);
    const std::string saved = tok->text;
    tok->text = name;
    std::string text = compactText(stmt);
    tok->text = saved;
    return text;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

} // namespace

void multiversion(Session& s, const JoinPoint& callJp, const std::vector<std::string>& versions,
                  const std::string& knob) {
    SourceUnit& unit = s.unit();
    if (callJp.kind != JpKind::Call)
        throw NotAStatementCall(std::string(toString(callJp.kind)) + " join point");
    Node& call = s.resolve(callJp);
    Node* stmt = enclosingStatement(call);
    if (!stmt || stmt->kind != NodeKind::ExprStmt)
        throw NotAStatementCall(callName(call) + " is not called from an expression statement");
    Node* fn = enclosingFunction(*stmt);
    if (!fn)
        throw NotAStatementCall(callName(call) + " is not inside a function");
    if (!isIdentifier(knob))
        throw ConfigError("knob name is not an identifier: " + knob);
    if (versions.empty())
        throw SignatureMismatch("no versions given");
    for (const auto& v : versions)
        if (!unit.function(v))
            throw FunctionNotFound(v);
    checkSignatures(unit, versions, callArgs(call).size());

    const std::string k = quoted(knob);
    auto arm = [&](std::size_t i, bool flag) {
        std::string body = "{ double aw_t0 = aw_now_us(); ";
        if (flag)
            body += "aw_feed_flag(" + k + ", " + knob + ", \"knob_oob\"); ";
        body += withCallee(*stmt, call, versions[i]) + " ";
        body += "aw_feed_emit(" + k + ", " + std::to_string(i) + ", " + quoted(versions[i]) +
                ", aw_now_us() - aw_t0); } break;";
        return body;
    };
    std::string code = "switch (" + knob + " = aw_knob_read(" + k + ")) {";
    for (std::size_t i = 0; i < versions.size(); ++i)
        code += " case " + std::to_string(i) + ": " + arm(i, false);
    code += " default: " + arm(0, true) + " }";

    // Declarations the switch needs, ahead of the enclosing function.
    const std::size_t fnIndex = fn->indexInParent();
    std::string decls;
    if (!unit.definesOrDeclares(knob))
        decls += "int " + knob + " = 0;\n";
    for (const auto& v : versions) {
        const Node* def = unit.function(v);
        if (def->indexInParent() > fnIndex)
            decls += compactText(*def->child(Role::Specs)) + " " + compactText(*functionDeclarator(*def)) + ";\n";
    }

    s.insert(callJp, InsertPosition::Replace, code);
    if (!decls.empty())
        s.insert(s.jpFor(JpKind::Function, *fn), InsertPosition::Before, decls);
    bool included = false;
    for (const Node* item : unit.root->children())
        if (item->kind == NodeKind::Directive && compactText(*item).find("aw_runtime.h") != std::string::npos)
            included = true;
    if (!included)
        s.insert(s.file(), InsertPosition::Before, "#include \"aw_runtime.h\"\n");
}

std::string runtimeHeader() {
    return R"(#ifndef AW_RUNTIME_H
#define AW_RUNTIME_H

/* Monotonic wall clock in microseconds. */
double aw_now_us(void);

/* Value of knob `name`: the environment variable of that name when set,
 * else the `name=value` line of the knob file (AW_KNOB_FILE, default
 * aw_knobs.txt), else 0. The file is read once; aw_knob_refresh rereads it. */
int aw_knob_read(const char *name);
void aw_knob_refresh(void);

/* Append one record to the file named by AW_FEED; nothing happens when it
 * is unset. Program output is never touched. */
void aw_feed_emit(const char *knob, int value, const char *version, double elapsed_us);
void aw_feed_flag(const char *knob, int value, const char *flag);

#endif
)";
}

std::string runtimeSource() {
    return R"(#define _POSIX_C_SOURCE 199309L
#include "aw_runtime.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#define AW_MAX_KNOBS 64
#define AW_NAME_LEN 64

struct aw_knob {
    char name[AW_NAME_LEN];
    int value;
};

static struct aw_knob aw_knobs[AW_MAX_KNOBS];
static int aw_knob_count;
static int aw_knobs_loaded;

double aw_now_us(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (double)ts.tv_sec * 1e6 + (double)ts.tv_nsec / 1e3;
}

void aw_knob_refresh(void)
{
    const char *path = getenv("AW_KNOB_FILE");
    char line[256];
    FILE *f;
    aw_knob_count = 0;
    aw_knobs_loaded = 1;
    f = fopen(path && *path ? path : "aw_knobs.txt", "r");
    if (!f)
        return;
    while (aw_knob_count < AW_MAX_KNOBS && fgets(line, sizeof line, f)) {
        char *eq = strchr(line, '=');
        size_t len;
        if (!eq)
            continue;
        len = (size_t)(eq - line);
        if (len == 0 || len >= AW_NAME_LEN)
            continue;
        memcpy(aw_knobs[aw_knob_count].name, line, len);
        aw_knobs[aw_knob_count].name[len] = '\0';
        aw_knobs[aw_knob_count].value = atoi(eq + 1);
        aw_knob_count++;
    }
    fclose(f);
}

int aw_knob_read(const char *name)
{
    const char *env = getenv(name);
    int i;
    if (env && *env)
        return atoi(env);
    if (!aw_knobs_loaded)
        aw_knob_refresh();
    for (i = 0; i < aw_knob_count; i++)
        if (strcmp(aw_knobs[i].name, name) == 0)
            return aw_knobs[i].value;
    return 0;
}

static void aw_feed_write(const char *record)
{
    const char *path = getenv("AW_FEED");
    FILE *f;
    if (!path || !*path)
        return;
    f = fopen(path, "a");
    if (!f)
        return;
    fputs(record, f);
    fclose(f);
}

void aw_feed_emit(const char *knob, int value, const char *version, double elapsed_us)
{
    char buf[512];
    snprintf(buf, sizeof buf, "knob=%s value=%d version=%s time_us=%.3f\n", knob, value, version,
             elapsed_us);
    aw_feed_write(buf);
}

void aw_feed_flag(const char *knob, int value, const char *flag)
{
    char buf[512];
    snprintf(buf, sizeof buf, "knob=%s value=%d flag=%s\n", knob, value, flag);
    aw_feed_write(buf);
}
)";
}

} // namespace aw
