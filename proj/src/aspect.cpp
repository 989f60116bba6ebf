#include "aw/aspect.hpp"

#include "aw/analysis.hpp"
#include "aw/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <set>

namespace aw {

namespace {

// --- lexing ------------------------------------------------------------------

struct ATok {
    enum class Kind { Word, String, Number, Dollar, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 0;
};

[[noreturn]] void syntaxError(int line, const std::string& what) {
    throw AspectSyntaxError("line " + std::to_string(line) + ": " + what);
}

std::vector<ATok> lexAspect(std::string_view src) {
    std::vector<ATok> out;
    int line = 1;
    std::size_t i = 0;
    auto isWord = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (src.substr(i, 2) == "//") {
            while (i < src.size() && src[i] != '\n')
                ++i;
        } else if (src.substr(i, 2) == "/*") {
            const auto end = src.find("*/", i + 2);
            if (end == std::string_view::npos)
                syntaxError(line, "unterminated comment");
            line += static_cast<int>(std::count(src.begin() + static_cast<std::ptrdiff_t>(i),
                                                src.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
            i = end + 2;
        } else if (c == '"') {
            ATok t{ATok::Kind::String, "", line};
            ++i;
            while (true) {
                if (i >= src.size() || src[i] == '\n')
                    syntaxError(line, "unterminated string");
                if (src[i] == '"')
                    break;
                if (src[i] == '\\' && i + 1 < src.size()) {
                    const char e = src[i + 1];
                    t.text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                    i += 2;
                } else {
                    t.text += src[i++];
                }
            }
            ++i;
            out.push_back(std::move(t));
        } else if (c == '$') {
            std::size_t j = i + 1;
            while (j < src.size() && isWord(src[j]))
                ++j;
            if (j == i + 1)
                syntaxError(line, "expected a name after '$'");
            out.push_back({ATok::Kind::Dollar, std::string(src.substr(i + 1, j - i - 1)), line});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i + 1;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '.'))
                ++j;
            out.push_back({ATok::Kind::Number, std::string(src.substr(i, j - i)), line});
            i = j;
        } else if (isWord(c)) {
            std::size_t j = i;
            while (j < src.size() && isWord(src[j]))
                ++j;
            out.push_back({ATok::Kind::Word, std::string(src.substr(i, j - i)), line});
            i = j;
        } else {
            static const char* two[] = {"==", "!=", "&&", "||"};
            std::string p(1, c);
            for (const char* t : two)
                if (src.substr(i, 2) == t)
                    p = t;
            if (p.size() == 1 && std::string_view(":.{}(),=!").find(c) == std::string_view::npos)
                syntaxError(line, std::string("unexpected character '") + c + "'");
            out.push_back({ATok::Kind::Punct, p, line});
            i += p.size();
        }
    }
    out.push_back({ATok::Kind::End, "", line});
    return out;
}

// --- interpolation -----------------------------------------------------------

struct Ref {
    enum class Kind { Input, Attribute };
    Kind kind;
    std::string scope; // kind name, empty for the last join point
    std::string name;
};

// Splits "a %{x} b" into literal text and references, in order.
std::vector<std::variant<std::string, Ref>> splitInterpolation(const std::string& text, int line) {
    std::vector<std::variant<std::string, Ref>> parts;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto open = text.find("%{", i);
        if (open == std::string::npos) {
            parts.emplace_back(text.substr(i));
            break;
        }
        if (open > i)
            parts.emplace_back(text.substr(i, open - i));
        const auto close = text.find('}', open);
        if (close == std::string::npos)
            syntaxError(line, "unterminated %{ in string");
        std::string body = text.substr(open + 2, close - open - 2);
        body.erase(0, body.find_first_not_of(' '));
        body.erase(body.find_last_not_of(' ') + 1);
        if (body.empty())
            syntaxError(line, "empty %{} in string");
        if (body[0] == '$') {
            parts.emplace_back(Ref{Ref::Kind::Input, "", body.substr(1)});
        } else if (const auto dot = body.find('.'); dot != std::string::npos) {
            parts.emplace_back(Ref{Ref::Kind::Attribute, body.substr(0, dot), body.substr(dot + 1)});
        } else {
            parts.emplace_back(Ref{Ref::Kind::Attribute, "", body});
        }
        i = close + 1;
    }
    return parts;
}

// --- parsing -----------------------------------------------------------------

class AspectParser {
public:
    explicit AspectParser(std::string_view text) : toks_(lexAspect(text)) {}

    AspectProgram parse() {
        AspectProgram p;
        if (peek().kind == ATok::Kind::End)
            return p;
        while (peek().kind != ATok::Kind::End)
            p.aspects.push_back(parseAspectDef());
        p.entry = p.aspects.front().name;
        return p;
    }

private:
    const ATok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    ATok next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool isWord(const char* w, std::size_t k = 0) const {
        return peek(k).kind == ATok::Kind::Word && peek(k).text == w;
    }
    bool isPunct(const char* p, std::size_t k = 0) const {
        return peek(k).kind == ATok::Kind::Punct && peek(k).text == p;
    }
    [[noreturn]] void expected(const std::string& what) const {
        const ATok& t = peek();
        syntaxError(t.line, "expected " + what + (t.kind == ATok::Kind::End ? " before end of script"
                                                                            : " near '" + t.text + "'"));
    }
    void expectWord(const char* w) {
        if (!isWord(w))
            expected(std::string("'") + w + "'");
        next();
    }
    void expectPunct(const char* p) {
        if (!isPunct(p))
            expected(std::string("'") + p + "'");
        next();
    }
    std::string name(const char* what) {
        if (peek().kind != ATok::Kind::Word)
            expected(what);
        return next().text;
    }

    AspectDef parseAspectDef() {
        AspectDef a;
        a.line = peek().line;
        expectWord("aspectdef");
        a.name = name("aspect name");
        if (isWord("input")) {
            next();
            while (!isWord("end")) {
                AspectDef::Input in{name("input name"), std::nullopt};
                if (isPunct("=")) {
                    next();
                    in.defaultValue = parseValue().text;
                }
                a.inputs.push_back(std::move(in));
                if (isPunct(","))
                    next();
                else if (!isWord("end"))
                    expected("',' or 'end'");
            }
            next();
        }
        while (!isWord("end")) {
            if (isWord("select")) {
                a.members.push_back({AspectDef::Member::Kind::Select, a.selects.size()});
                a.selects.push_back(parseSelect());
            } else if (isWord("apply")) {
                a.members.push_back({AspectDef::Member::Kind::Apply, a.applies.size()});
                a.applies.push_back(parseApply());
            } else if (isWord("call")) {
                a.members.push_back({AspectDef::Member::Kind::Call, a.calls.size()});
                a.calls.push_back(parseCall());
            } else {
                expected("'select', 'apply', 'call' or 'end'");
            }
        }
        next();
        return a;
    }

    AspectValue parseValue() {
        const ATok t = peek();
        switch (t.kind) {
        case ATok::Kind::String: next(); return {AspectValue::Kind::String, t.text};
        case ATok::Kind::Number: next(); return {AspectValue::Kind::Number, t.text};
        case ATok::Kind::Word: next(); return {AspectValue::Kind::Word, t.text};
        case ATok::Kind::Dollar: next(); return {AspectValue::Kind::Input, t.text};
        default: expected("a value");
        }
    }

    AspectSelect parseSelect() {
        AspectSelect s;
        s.line = peek().line;
        expectWord("select");
        s.name = name("select name");
        expectPunct(":");
        while (true) {
            const int line = peek().line;
            const std::string kindName = name("join point kind");
            const auto kind = jpKindFromString(kindName);
            if (!kind)
                syntaxError(line, "unknown join point kind '" + kindName + "'");
            AspectStep step{*kind, {}};
            if (isPunct("{")) {
                next();
                while (true) {
                    AspectFilter f;
                    const int fline = peek().line;
                    f.attribute = name("attribute");
                    const auto& names = attributeNames(*kind);
                    if (std::find(names.begin(), names.end(), f.attribute) == names.end())
                        throw UnknownAttribute("line " + std::to_string(fline) + ": " + kindName + "." + f.attribute);
                    if (isPunct("==") || isPunct("!=") || isWord("contains"))
                        f.op = next().text;
                    else
                        expected("'==', '!=' or 'contains'");
                    f.value = parseValue();
                    step.filters.push_back(std::move(f));
                    if (isPunct(",")) {
                        next();
                        continue;
                    }
                    expectPunct("}");
                    break;
                }
            }
            s.chain.push_back(std::move(step));
            if (!isPunct("."))
                break;
            next();
        }
        expectWord("end");
        SelectChain chain;
        for (const auto& st : s.chain)
            chain.push_back({st.kind, {}});
        try {
            validateChain(chain);
        } catch (const IllegalChain& e) {
            throw IllegalChain("line " + std::to_string(s.line) + ": " + e.what());
        }
        return s;
    }

    AspectCall parseCall() {
        AspectCall c;
        c.line = peek().line;
        expectWord("call");
        c.aspect = name("aspect name");
        c.args = parseArgs();
        return c;
    }

    std::vector<AspectArg> parseArgs() {
        std::vector<AspectArg> args;
        expectPunct("(");
        while (!isPunct(")")) {
            AspectArg a;
            if (peek().kind == ATok::Kind::Word && isPunct("=", 1)) {
                a.name = next().text;
                next();
            }
            a.value = parseValue();
            args.push_back(std::move(a));
            if (isPunct(","))
                next();
            else if (!isPunct(")"))
                expected("',' or ')'");
        }
        next();
        return args;
    }

    AspectApply parseApply() {
        AspectApply a;
        a.line = peek().line;
        expectWord("apply");
        expectWord("to");
        a.select = name("select name");
        if (isWord("if")) {
            next();
            a.condition = parseOr();
        }
        while (!isWord("end"))
            a.actions.push_back(parseAction());
        if (a.actions.empty())
            expected("an action");
        next();
        return a;
    }

    AspectAction parseAction() {
        AspectAction act;
        act.line = peek().line;
        if (peek().kind == ATok::Kind::Dollar) {
            const ATok t = next();
            const auto kind = jpKindFromString(t.text);
            if (!kind)
                syntaxError(t.line, "unknown join point kind '$" + t.text + "'");
            act.target = kind;
            expectPunct(".");
        }
        if (isWord("insert")) {
            next();
            if (isWord("before"))
                act.where = InsertPosition::Before;
            else if (isWord("after"))
                act.where = InsertPosition::After;
            else if (isWord("replace"))
                act.where = InsertPosition::Replace;
            else
                expected("'before', 'after' or 'replace'");
            next();
            act.type = AspectAction::Type::Insert;
            act.text = stringLiteral();
        } else if (isWord("setType")) {
            next();
            act.type = AspectAction::Type::SetType;
            act.text = stringLiteral();
        } else if (isWord("clone")) {
            next();
            act.type = AspectAction::Type::Clone;
            act.text = stringLiteral();
        } else if (isWord("call")) {
            act.type = AspectAction::Type::Call;
            act.call = parseCall();
        } else if (peek().kind == ATok::Kind::Word && isPunct("(", 1)) {
            act.type = AspectAction::Type::Builtin;
            act.text = next().text;
            if (act.text != "changeType" && act.text != "multiversion")
                syntaxError(act.line, "unknown action '" + act.text + "'");
            for (auto& arg : parseArgs()) {
                if (!arg.name.empty())
                    syntaxError(act.line, "action arguments are positional");
                act.args.push_back(std::move(arg.value));
            }
            if (act.args.size() != 2)
                syntaxError(act.line, act.text + " takes two arguments");
        } else {
            expected("an action");
        }
        return act;
    }

    std::string stringLiteral() {
        if (peek().kind != ATok::Kind::String)
            expected("a string");
        return next().text;
    }

    ConditionPtr parseOr() {
        auto lhs = parseAnd();
        while (isPunct("||")) {
            next();
            auto e = std::make_shared<ConditionExpr>();
            e->op = ConditionExpr::Op::Or;
            e->children = {lhs, parseAnd()};
            lhs = e;
        }
        return lhs;
    }

    ConditionPtr parseAnd() {
        auto lhs = parseUnary();
        while (isPunct("&&")) {
            next();
            auto e = std::make_shared<ConditionExpr>();
            e->op = ConditionExpr::Op::And;
            e->children = {lhs, parseUnary()};
            lhs = e;
        }
        return lhs;
    }

    ConditionPtr parseUnary() {
        if (isPunct("!")) {
            next();
            auto e = std::make_shared<ConditionExpr>();
            e->op = ConditionExpr::Op::Not;
            e->children = {parseUnary()};
            return e;
        }
        if (isPunct("(")) {
            next();
            auto e = parseOr();
            expectPunct(")");
            return e;
        }
        auto e = std::make_shared<ConditionExpr>();
        e->lhs = parseOperand();
        if (isPunct("==") || isPunct("!=") || isWord("contains")) {
            e->op = ConditionExpr::Op::Compare;
            e->compare = next().text;
            e->rhs = parseOperand();
        }
        return e;
    }

    ConditionExpr::Operand parseOperand() {
        using K = ConditionExpr::Operand::Kind;
        const ATok t = peek();
        if (t.kind == ATok::Kind::Dollar) {
            next();
            if (isPunct(".") && jpKindFromString(t.text)) {
                next();
                return {K::Attribute, t.text, name("attribute")};
            }
            return {K::Input, "", t.text};
        }
        if (t.kind == ATok::Kind::String || t.kind == ATok::Kind::Number ||
            (t.kind == ATok::Kind::Word && (t.text == "true" || t.text == "false"))) {
            next();
            return {K::Literal, "", t.text};
        }
        expected("a condition operand");
    }

    std::vector<ATok> toks_;
    std::size_t pos_ = 0;
};

// --- builtins ----------------------------------------------------------------

using Args = std::map<std::string, std::string>;

struct BuiltinImpl {
    BuiltinAspect info;
    std::function<void(Session&, const Args&, WeaveOutput&)> run;
};

void addSupport(WeaveOutput& out, SupportFile f) {
    for (auto& existing : out.supportFiles)
        if (existing.name == f.name) {
            existing = std::move(f);
            return;
        }
    out.supportFiles.push_back(std::move(f));
}

void addRuntime(WeaveOutput& out) {
    addSupport(out, {"aw_runtime.h", runtimeHeader()});
    addSupport(out, {"aw_runtime.c", runtimeSource()});
}

int toInt(const std::string& v, const std::string& what) {
    int n = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), n);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(what + " is not an integer: " + v);
    return n;
}

bool toBool(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

std::vector<std::string> splitList(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v + ",") {
        if (c == ',') {
            cur.erase(0, cur.find_first_not_of(' '));
            cur.erase(cur.find_last_not_of(' ') + 1);
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

void callTree(const SourceUnit& unit, const std::string& fn, std::vector<std::string>& order) {
    if (std::find(order.begin(), order.end(), fn) != order.end())
        return;
    const Node* def = unit.function(fn);
    if (!def)
        throw FunctionNotFound(fn);
    order.push_back(fn);
    for (const auto& callee : definedCallees(unit, *def))
        callTree(unit, callee, order);
}

const std::vector<BuiltinImpl>& builtins() {
    using In = AspectDef::Input;
    static const std::vector<BuiltinImpl> table = {
        {{"CloneFunction", {In{"func", {}}, In{"suffix", "_f"}},
          "clone a function and its defined callees, redirecting calls between clones"},
         [](Session& s, const Args& a, WeaveOutput&) { cloneCallTree(s, a.at("func"), a.at("suffix")); }},
        {{"ChangeTypes", {In{"func", {}}, In{"old", "double"}, In{"new", "float"}},
          "full precision change of one function"},
         [](Session& s, const Args& a, WeaveOutput&) {
             changePrecision(s, a.at("func"), PrecisionMap::between(a.at("old"), a.at("new")));
         }},
        {{"AdaptExpressions", {In{"func", {}}, In{"old", "double"}, In{"new", "float"}},
          "prototypes, casts, literals and math calls of one function"},
         [](Session& s, const Args& a, WeaveOutput&) {
             adaptPrecisionUses(s, a.at("func"), PrecisionMap::between(a.at("old"), a.at("new")));
         }},
        {{"ChangeCallTree", {In{"func", {}}, In{"old", "double"}, In{"new", "float"}},
          "precision change of a function and every defined function it reaches"},
         [](Session& s, const Args& a, WeaveOutput&) {
             std::vector<std::string> order;
             callTree(s.unit(), a.at("func"), order);
             const auto map = PrecisionMap::between(a.at("old"), a.at("new"));
             for (const auto& f : order)
                 changePrecision(s, f, map);
         }},
        {{"CreateTypedVersion", {In{"func", {}}, In{"suffix", "_f"}, In{"old", "double"}, In{"new", "float"}},
          "clone a call tree and change the precision of the clones"},
         [](Session& s, const Args& a, WeaveOutput&) {
             createTypedVersion(s, a.at("func"), a.at("suffix"), PrecisionMap::between(a.at("old"), a.at("new")));
         }},
        {{"MixedVersions", {In{"func", {}}, In{"limit", "8"}},
          "mixed double/float versions of a call tree, suffix _mix<k>"},
         [](Session& s, const Args& a, WeaveOutput&) {
             generateMixedVersions(s, a.at("func"), toInt(a.at("limit"), "limit"));
         }},
        {{"SwitchVersions", {In{"caller", {}}, In{"callee", {}}, In{"versions", {}}, In{"knob", "Knob1"}},
          "knob-driven switch between versions at each call site"},
         [](Session& s, const Args& a, WeaveOutput& out) {
             const auto sites = s.select({{JpKind::Function, {{"name", "==", a.at("caller")}}},
                                          {JpKind::Call, {{"name", "==", a.at("callee")}}}});
             for (const auto& t : sites)
                 if (s.alive(t.back()))
                     multiversion(s, t.back(), splitList(a.at("versions")), a.at("knob"));
             addRuntime(out);
         }},
        {{"MemoizeFunction",
          {In{"func", {}}, In{"size", "1024"}, In{"policy", "replace"}, In{"enabled", "1"}, In{"force", "0"}},
          "memoization wrapper and table for one pure function"},
         [](Session& s, const Args& a, WeaveOutput& out) {
             MemoConfig cfg;
             cfg.function = a.at("func");
             cfg.tableSize = toInt(a.at("size"), "size");
             const std::string& policy = a.at("policy");
             if (policy != "keep" && policy != "replace")
                 throw ConfigError("policy must be keep or replace: " + policy);
             cfg.policy = policy == "keep" ? MemoPolicy::Keep : MemoPolicy::Replace;
             cfg.enabledByDefault = toBool(a.at("enabled"));
             cfg.force = toBool(a.at("force"));
             for (auto& f : memoize(s, cfg))
                 addSupport(out, std::move(f));
         }},
        {{"ParallelizeLoops", {In{"disableNested", "1"}}, "OpenMP pragmas on every for-loop found safe"},
         [](Session& s, const Args& a, WeaveOutput& out) {
             addSupport(out, {"parallel_report.json", autoParallelize(s).toJson()});
             if (toBool(a.at("disableNested")))
                 disableNestedParallelPragmas(s);
         }},
        {{"DisableNestedParallel", {}, "comment out parallel pragmas nested in parallel loops"},
         [](Session& s, const Args&, WeaveOutput&) { disableNestedParallelPragmas(s); }},
        {{"UseRuntime", {}, "include aw_runtime.h and ship the runtime sources"},
         [](Session& s, const Args&, WeaveOutput& out) {
             bool included = false;
             for (const Node* item : s.unit().root->children())
                 if (item->kind == NodeKind::Directive && compactText(*item).find("aw_runtime.h") != std::string::npos)
                     included = true;
             if (!included)
                 s.insert(s.file(), InsertPosition::Before, "#include \"aw_runtime.h\"\n");
             addRuntime(out);
         }},
    };
    return table;
}

const BuiltinImpl* findBuiltin(const std::string& name) {
    for (const auto& b : builtins())
        if (b.info.name == name)
            return &b;
    return nullptr;
}

// --- validation --------------------------------------------------------------

void checkRef(const Ref& r, const AspectDef& a, const AspectSelect* sel, int line) {
    if (r.kind == Ref::Kind::Input) {
        const bool known = std::any_of(a.inputs.begin(), a.inputs.end(),
                                       [&](const auto& in) { return in.name == r.name; });
        if (!known)
            syntaxError(line, "unknown input $" + r.name);
        return;
    }
    if (!sel)
        syntaxError(line, "join point attribute %{" + r.name + "} outside an apply");
    JpKind kind = sel->chain.back().kind;
    if (!r.scope.empty()) {
        const auto k = jpKindFromString(r.scope);
        const bool inChain = k && std::any_of(sel->chain.begin(), sel->chain.end(),
                                              [&](const AspectStep& st) { return st.kind == *k; });
        if (!inChain)
            syntaxError(line, "'" + r.scope + "' is not part of select " + sel->name);
        kind = *k;
    }
    const auto& names = attributeNames(kind);
    if (std::find(names.begin(), names.end(), r.name) == names.end())
        throw UnknownAttribute("line " + std::to_string(line) + ": " + toString(kind) + "." + r.name);
}

void checkValue(const AspectValue& v, const AspectDef& a, const AspectSelect* sel, int line) {
    if (v.kind == AspectValue::Kind::Input)
        checkRef({Ref::Kind::Input, "", v.text}, a, sel, line);
    if (v.kind == AspectValue::Kind::String)
        for (const auto& part : splitInterpolation(v.text, line))
            if (const Ref* r = std::get_if<Ref>(&part))
                checkRef(*r, a, sel, line);
}

void checkCondition(const ConditionExpr& c, const AspectDef& a, const AspectSelect& sel, int line) {
    for (const auto& child : c.children)
        checkCondition(*child, a, sel, line);
    for (const auto* o : {&c.lhs, &c.rhs}) {
        if (o->kind == ConditionExpr::Operand::Kind::Attribute)
            checkRef({Ref::Kind::Attribute, o->scope, o->name}, a, &sel, line);
        else if (o->kind == ConditionExpr::Operand::Kind::Input)
            checkRef({Ref::Kind::Input, "", o->name}, a, &sel, line);
        if (c.op != ConditionExpr::Op::Compare)
            break;
    }
}

void checkCall(const AspectCall& c, const AspectProgram& p, const AspectDef& a, const AspectSelect* sel) {
    std::vector<AspectDef::Input> inputs;
    if (const AspectDef* target = p.find(c.aspect))
        inputs = target->inputs;
    else if (const BuiltinImpl* b = findBuiltin(c.aspect))
        inputs = b->info.inputs;
    else
        throw UnknownAspectRef("line " + std::to_string(c.line) + ": " + c.aspect);
    std::size_t positional = 0;
    for (const auto& arg : c.args) {
        checkValue(arg.value, a, sel, c.line);
        if (arg.name.empty()) {
            if (positional++ >= inputs.size())
                syntaxError(c.line, "too many arguments for " + c.aspect);
        } else if (std::none_of(inputs.begin(), inputs.end(), [&](const auto& in) { return in.name == arg.name; })) {
            syntaxError(c.line, c.aspect + " has no input '" + arg.name + "'");
        }
    }
}

void validate(const AspectProgram& p) {
    std::set<std::string> names;
    for (const auto& a : p.aspects)
        if (!names.insert(a.name).second)
            syntaxError(a.line, "aspect " + a.name + " defined twice");

    for (const auto& a : p.aspects) {
        for (const auto& s : a.selects)
            for (const auto& st : s.chain)
                for (const auto& f : st.filters)
                    checkValue(f.value, a, nullptr, s.line);
        for (const auto& c : a.calls)
            checkCall(c, p, a, nullptr);
        for (const auto& ap : a.applies) {
            const AspectSelect* sel = a.select(ap.select);
            if (!sel)
                throw UnknownSelectRef("line " + std::to_string(ap.line) + ": " + ap.select);
            if (ap.condition)
                checkCondition(*ap.condition, a, *sel, ap.line);
            for (const auto& act : ap.actions) {
                if (act.target && std::none_of(sel->chain.begin(), sel->chain.end(),
                                               [&](const AspectStep& st) { return st.kind == *act.target; }))
                    syntaxError(act.line, std::string("'") + toString(*act.target) + "' is not part of select " +
                                              sel->name);
                if (act.type == AspectAction::Type::Call)
                    checkCall(act.call, p, a, sel);
                else
                    checkValue({AspectValue::Kind::String, act.text}, a, sel, act.line);
                for (const auto& v : act.args)
                    checkValue(v, a, sel, act.line);
            }
        }
    }

    // Aspect-to-aspect calls must not loop.
    std::map<std::string, std::vector<std::string>> edges;
    for (const auto& a : p.aspects) {
        auto& out = edges[a.name];
        for (const auto& c : a.calls)
            if (p.find(c.aspect))
                out.push_back(c.aspect);
        for (const auto& ap : a.applies)
            for (const auto& act : ap.actions)
                if (act.type == AspectAction::Type::Call && p.find(act.call.aspect))
                    out.push_back(act.call.aspect);
    }
    std::map<std::string, int> state; // 1 on stack, 2 done
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& n) {
        state[n] = 1;
        stack.push_back(n);
        for (const auto& m : edges[n]) {
            if (state[m] == 1) {
                std::string cycle;
                for (auto it = std::find(stack.begin(), stack.end(), m); it != stack.end(); ++it)
                    cycle += *it + " -> ";
                throw RecursionCycle(cycle + m);
            }
            if (state[m] == 0)
                visit(m);
        }
        stack.pop_back();
        state[n] = 2;
    };
    for (const auto& a : p.aspects)
        if (state[a.name] == 0)
            visit(a.name);
}

// --- interpreter -------------------------------------------------------------

class Interpreter {
public:
    Interpreter(const AspectProgram& p, Session& s) : program_(p), s_(s) {}

    void run(const std::string& aspect, const Args& given) {
        if (const AspectDef* a = program_.find(aspect)) {
            runDef(*a, bind(aspect, a->inputs, given));
            return;
        }
        const BuiltinImpl* b = findBuiltin(aspect);
        b->run(s_, bind(aspect, b->info.inputs, given), out_);
    }

    WeaveOutput output() { return std::move(out_); }

private:
    static Args bind(const std::string& aspect, const std::vector<AspectDef::Input>& inputs, const Args& given) {
        Args env;
        for (const auto& [k, v] : given)
            if (std::none_of(inputs.begin(), inputs.end(), [&](const auto& in) { return in.name == k; }))
                throw AspectRuntimeError(aspect + " has no input '" + k + "'");
        for (const auto& in : inputs) {
            if (const auto it = given.find(in.name); it != given.end())
                env[in.name] = it->second;
            else if (in.defaultValue)
                env[in.name] = *in.defaultValue;
            else
                throw AspectRuntimeError(aspect + ": missing input '" + in.name + "'");
        }
        return env;
    }

    // Lookup of the join point a reference or action applies to.
    const JoinPoint& pick(const JpTuple& t, const std::string& scope) const {
        if (scope.empty())
            return t.back();
        const JpKind k = *jpKindFromString(scope);
        for (auto it = t.rbegin(); it != t.rend(); ++it)
            if (it->kind == k)
                return *it;
        return t.back();
    }

    std::string interpolate(const std::string& text, const Args& env, const JpTuple* t) {
        std::string out;
        for (const auto& part : splitInterpolation(text, 0)) {
            if (const auto* lit = std::get_if<std::string>(&part))
                out += *lit;
            else if (const Ref& r = std::get<Ref>(part); r.kind == Ref::Kind::Input)
                out += env.at(r.name);
            else
                out += s_.attribute(pick(*t, r.scope), r.name);
        }
        return out;
    }

    std::string value(const AspectValue& v, const Args& env, const JpTuple* t) {
        switch (v.kind) {
        case AspectValue::Kind::Input: return env.at(v.text);
        case AspectValue::Kind::String: return interpolate(v.text, env, t);
        default: return v.text;
        }
    }

    std::string operand(const ConditionExpr::Operand& o, const Args& env, const JpTuple& t) {
        switch (o.kind) {
        case ConditionExpr::Operand::Kind::Attribute: return s_.attribute(pick(t, o.scope), o.name);
        case ConditionExpr::Operand::Kind::Input: return env.at(o.name);
        default: return o.name;
        }
    }

    static bool number(const std::string& s, double& out) {
        if (s.empty())
            return false;
        char* end = nullptr;
        out = std::strtod(s.c_str(), &end);
        return end == s.c_str() + s.size();
    }

    bool test(const ConditionExpr& c, const Args& env, const JpTuple& t) {
        switch (c.op) {
        case ConditionExpr::Op::Or: return test(*c.children[0], env, t) || test(*c.children[1], env, t);
        case ConditionExpr::Op::And: return test(*c.children[0], env, t) && test(*c.children[1], env, t);
        case ConditionExpr::Op::Not: return !test(*c.children[0], env, t);
        case ConditionExpr::Op::Operand: return operand(c.lhs, env, t) == "true";
        case ConditionExpr::Op::Compare: break;
        }
        const std::string a = operand(c.lhs, env, t), b = operand(c.rhs, env, t);
        if (c.compare == "contains")
            return a.find(b) != std::string::npos;
        double x, y;
        const bool eq = number(a, x) && number(b, y) ? x == y : a == b;
        return c.compare == "==" ? eq : !eq;
    }

    Args callArgs(const AspectCall& c, const Args& env, const JpTuple* t) {
        std::vector<AspectDef::Input> inputs;
        if (const AspectDef* d = program_.find(c.aspect))
            inputs = d->inputs;
        else
            inputs = findBuiltin(c.aspect)->info.inputs;
        Args args;
        std::size_t positional = 0;
        for (const auto& a : c.args)
            args[a.name.empty() ? inputs[positional++].name : a.name] = value(a.value, env, t);
        return args;
    }

    SelectChain chain(const AspectSelect& sel, const Args& env) {
        SelectChain out;
        for (const auto& st : sel.chain) {
            ChainStep step{st.kind, {}};
            for (const auto& f : st.filters)
                step.filters.push_back({f.attribute, f.op, value(f.value, env, nullptr)});
            out.push_back(std::move(step));
        }
        return out;
    }

    template <typename F>
    void annotated(const AspectDef& a, int line, F&& f) {
        try {
            f();
        } catch (const AspectRuntimeError&) {
            throw;
        } catch (const Error& e) {
            throw AspectRuntimeError(a.name + " line " + std::to_string(line) + ": " + e.what());
        }
    }

    void action(const AspectAction& act, const Args& env, const JpTuple& t) {
        const JoinPoint jp = act.target ? pick(t, toString(*act.target)) : t.back();
        switch (act.type) {
        case AspectAction::Type::Insert:
            s_.insert(jp, act.where, interpolate(act.text, env, &t));
            break;
        case AspectAction::Type::SetType:
            s_.setType(jp, parseType(interpolate(act.text, env, &t)));
            break;
        case AspectAction::Type::Clone:
            s_.cloneFunction(jp, interpolate(act.text, env, &t));
            break;
        case AspectAction::Type::Call:
            run(act.call.aspect, callArgs(act.call, env, &t));
            break;
        case AspectAction::Type::Builtin: {
            const std::string a0 = value(act.args[0], env, &t), a1 = value(act.args[1], env, &t);
            if (act.text == "changeType") {
                const CType current = parseType(s_.peekAttribute(jp, "type"));
                const CType changed = changeType(current, canonicalBase(a0), canonicalBase(a1));
                if (changed != current)
                    s_.setType(jp, changed);
            } else {
                multiversion(s_, jp, splitList(a0), a1);
                addRuntime(out_);
            }
            break;
        }
        }
    }

    void runDef(const AspectDef& a, const Args& env) {
        for (const auto& m : a.members) {
            if (m.kind == AspectDef::Member::Kind::Call) {
                const AspectCall& c = a.calls[m.index];
                annotated(a, c.line, [&] { run(c.aspect, callArgs(c, env, nullptr)); });
            } else if (m.kind == AspectDef::Member::Kind::Apply) {
                const AspectApply& ap = a.applies[m.index];
                const AspectSelect& sel = *a.select(ap.select);
                std::vector<JpTuple> tuples;
                annotated(a, sel.line, [&] { tuples = s_.select(chain(sel, env)); });
                for (const JpTuple& t : tuples) {
                    if (!std::all_of(t.begin(), t.end(), [&](const JoinPoint& jp) { return s_.alive(jp); }))
                        continue;
                    bool go = true;
                    annotated(a, ap.line, [&] { go = !ap.condition || test(*ap.condition, env, t); });
                    if (!go)
                        continue;
                    for (const auto& act : ap.actions)
                        annotated(a, act.line, [&] { action(act, env, t); });
                }
            }
        }
    }

    const AspectProgram& program_;
    Session& s_;
    WeaveOutput out_;
};

} // namespace

const AspectSelect* AspectDef::select(const std::string& n) const {
    for (const auto& s : selects)
        if (s.name == n)
            return &s;
    return nullptr;
}

const AspectDef* AspectProgram::find(const std::string& n) const {
    for (const auto& a : aspects)
        if (a.name == n)
            return &a;
    return nullptr;
}

int AspectProgram::sloc() const {
    int n = 0;
    for (const auto& a : aspects) {
        n += static_cast<int>(a.inputs.size() + a.selects.size() + a.calls.size());
        for (const auto& ap : a.applies)
            n += 1 + (ap.condition ? 1 : 0) + static_cast<int>(ap.actions.size());
    }
    return n;
}

AspectProgram parseAspect(std::string_view text) {
    AspectProgram p = AspectParser(text).parse();
    validate(p);
    return p;
}

const std::vector<BuiltinAspect>& builtinAspects() {
    static const std::vector<BuiltinAspect> list = [] {
        std::vector<BuiltinAspect> out;
        for (const auto& b : builtins())
            out.push_back(b.info);
        return out;
    }();
    return list;
}

WeaveOutput runAspects(const AspectProgram& program, Session& session, const Args& args) {
    if (program.aspects.empty()) {
        if (!args.empty())
            throw AspectRuntimeError("arguments given to an empty program");
        return {};
    }
    Interpreter in(program, session);
    in.run(program.entry, args);
    return in.output();
}

} // namespace aw
