#include "aw/error.hpp"
#include "aw/parser.hpp"
#include "aw/sloc.hpp"
#include "aw/weave.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace aw;

namespace {

Session session(const std::string& src) { return Session(parse(src, "t.c")); }

ChainStep step(JpKind k, std::vector<Filter> f = {}) { return {k, std::move(f)}; }

// Lines of `after` not present at the same place in `before`: a tiny diff
// that reports the added and removed line counts of a single-hunk change.
struct Hunk {
    std::vector<std::string> removed;
    std::vector<std::string> added;
};

std::vector<Hunk> diffHunks(const std::string& before, const std::string& after) {
    auto a = awtest::lines(before);
    auto b = awtest::lines(after);
    // LCS table
    std::vector<std::vector<int>> l(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = a.size(); i-- > 0;)
        for (std::size_t j = b.size(); j-- > 0;)
            l[i][j] = a[i] == b[j] ? l[i + 1][j + 1] + 1 : std::max(l[i + 1][j], l[i][j + 1]);
    std::vector<Hunk> hunks;
    std::size_t i = 0, j = 0;
    bool open = false;
    while (i < a.size() || j < b.size()) {
        if (i < a.size() && j < b.size() && a[i] == b[j]) {
            open = false;
            ++i;
            ++j;
            continue;
        }
        if (!open) {
            hunks.emplace_back();
            open = true;
        }
        if (j < b.size() && (i == a.size() || l[i][j + 1] >= l[i + 1][j]))
            hunks.back().added.push_back(b[j++]);
        else
            hunks.back().removed.push_back(a[i++]);
    }
    return hunks;
}

const char* kNested = "int grid(int n)\n"
                      "{\n"
                      "    int i, j, s = 0;\n"
                      "    for (i = 0; i < n; i++)\n"
                      "        for (j = 0; j < n; j++)\n"
                      "            s += i * j;\n"
                      "    return s;\n"
                      "}\n"
                      "\n"
                      "int other(void)\n"
                      "{\n"
                      "    return grid(3);\n"
                      "}\n";

} // namespace

TEST(Select, FunctionByName) {
    auto s = session("int foo(void) { return 1; }\nint bar(void) { return foo(); }\n");
    auto tuples = s.select({step(JpKind::Function, {{"name", "==", "foo"}})});
    ASSERT_EQ(tuples.size(), 1u);
    EXPECT_EQ(s.attribute(tuples[0][0], "name"), "foo");
    EXPECT_EQ(s.report().selects, 1);
    EXPECT_EQ(s.report().attributes, 3); // two filter reads + one explicit read
}

TEST(Select, NestedLoopsOuterThenInner) {
    auto s = session(kNested);
    auto tuples = s.select({step(JpKind::Function, {{"name", "==", "grid"}}), step(JpKind::Loop)});
    ASSERT_EQ(tuples.size(), 2u);
    EXPECT_EQ(s.peekAttribute(tuples[0][1], "indexVar"), "i");
    EXPECT_EQ(s.peekAttribute(tuples[1][1], "indexVar"), "j");
    EXPECT_EQ(s.peekAttribute(tuples[0][1], "isInnermost"), "false");
    EXPECT_EQ(s.peekAttribute(tuples[1][1], "isInnermost"), "true");
    EXPECT_EQ(s.peekAttribute(tuples[0][1], "line"), "4");

    auto inner = s.select({step(JpKind::Function), step(JpKind::Loop), step(JpKind::Loop)});
    ASSERT_EQ(inner.size(), 1u);
    EXPECT_EQ(inner[0][2], tuples[1][1]);
}

TEST(Select, DoubleDeclarations) {
    const std::string src = awtest::readFile(awtest::corpus("precision.c"));
    auto s = Session(parse(src, "precision.c"));
    auto tuples = s.select({step(JpKind::Function, {{"name", "==", "norm"}}),
                            step(JpKind::Decl, {{"type", "contains", "double"}})});
    std::vector<std::string> names;
    for (auto& t : tuples)
        names.push_back(s.peekAttribute(t[1], "name") + ":" + s.peekAttribute(t[1], "type"));
    const std::vector<std::string> expected = {"norm:double", "v:double*", "acc:double", "p:double*",
                                               "tmp:double[8]"};
    EXPECT_EQ(names, expected);
}

TEST(Select, DeterministicAndLegality) {
    auto s = session(kNested);
    SelectChain chain = {step(JpKind::Function), step(JpKind::Stmt), step(JpKind::Call)};
    auto a = s.select(chain);
    auto b = s.select(chain);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(s.peekAttribute(a[0][2], "name"), "grid");
    EXPECT_THROW(s.select({step(JpKind::Loop)}), IllegalChain);
    EXPECT_THROW(s.select({step(JpKind::Function), step(JpKind::VarRef)}), IllegalChain);
    EXPECT_THROW(s.select({step(JpKind::Function), step(JpKind::Call), step(JpKind::Loop)}),
                 IllegalChain);
}

TEST(Attribute, PerKind) {
    auto s = session("#include <math.h>\ndouble f(double *p, int n)\n{\n    double x = sqrt(p[0]);\n"
                     "    int k;\n    return x + n;\n}\n");
    auto fn = s.select({step(JpKind::Function)})[0][0];
    EXPECT_EQ(s.attribute(fn, "returnType"), "double");
    EXPECT_EQ(s.attribute(fn, "paramTypes"), "double*,int");
    auto decls = s.select({step(JpKind::Function), step(JpKind::Decl)});
    ASSERT_EQ(decls.size(), 5u);
    EXPECT_EQ(s.attribute(decls[0][1], "scope"), "return");
    EXPECT_EQ(s.attribute(decls[1][1], "type"), "double*");
    EXPECT_EQ(s.attribute(decls[3][1], "hasInit"), "true");
    EXPECT_EQ(s.attribute(decls[4][1], "hasInit"), "false");
    auto calls = s.select({step(JpKind::Function), step(JpKind::Call)});
    ASSERT_EQ(calls.size(), 1u);
    EXPECT_EQ(s.attribute(calls[0][1], "argCount"), "1");
    auto stmts = s.select({step(JpKind::Function), step(JpKind::Stmt)});
    EXPECT_EQ(s.attribute(stmts.back()[1], "code"), "return x + n;");
    EXPECT_THROW(s.attribute(fn, "indexVar"), UnknownAttribute);
    EXPECT_EQ(s.attribute(s.file(), "name"), "t.c");
}

TEST(Insert, BeforeReturnAddsOneLine) {
    auto s = session(kNested);
    const std::string before = s.unit().emit();
    auto stmts = s.select({step(JpKind::Function, {{"name", "==", "grid"}}),
                           step(JpKind::Stmt, {{"code", "contains", "return"}})});
    ASSERT_EQ(stmts.size(), 1u);
    s.insert(stmts[0][1], InsertPosition::Before, "double t0=now();");
    const std::string after = s.unit().emit();
    auto hunks = diffHunks(before, after);
    ASSERT_EQ(hunks.size(), 1u);
    EXPECT_TRUE(hunks[0].removed.empty());
    ASSERT_EQ(hunks[0].added.size(), 1u);
    EXPECT_EQ(hunks[0].added[0], "    double t0=now();");
    EXPECT_EQ(s.report().inserts, 1);
    EXPECT_EQ(s.report().actions, 1);
    EXPECT_EQ(s.report().nativeSloc, 1);
    EXPECT_EQ(parse(after, "re.c")->emit(), after);
}

TEST(Insert, ReplaceRemovesOriginalStatement) {
    auto s = session("void run(int k)\n{\n    work(k);\n    done();\n}\n");
    auto calls = s.select({step(JpKind::Function), step(JpKind::Call, {{"name", "==", "work"}})});
    ASSERT_EQ(calls.size(), 1u);
    s.insert(calls[0][1], InsertPosition::Replace,
             "switch (v) { case 0: work(k); break; default: work_f(k); break; }");
    const std::string out = s.unit().emit();
    EXPECT_EQ(out, "void run(int k)\n{\n    switch (v) {\n        case 0:\n            work(k);\n"
                   "            break;\n        default:\n            work_f(k);\n            break;\n"
                   "    }\n    done();\n}\n");
    EXPECT_FALSE(s.alive(calls[0][1]));
    EXPECT_THROW(s.insert(calls[0][1], InsertPosition::Before, "x();"), InvalidAnchor);
    EXPECT_EQ(s.report().nativeSloc, 7);
}

TEST(Insert, TwoInsertsBeforeKeepOrder) {
    auto s = session("int f(void)\n{\n    return 0;\n}\n");
    auto ret = s.select({step(JpKind::Function), step(JpKind::Stmt)})[0][1];
    s.insert(ret, InsertPosition::Before, "a();");
    s.insert(ret, InsertPosition::Before, "b();");
    EXPECT_EQ(s.unit().emit(), "int f(void)\n{\n    a();\n    b();\n    return 0;\n}\n");
}

TEST(Insert, LoneBodyGetsWrapped) {
    auto s = session("void f(int n)\n{\n    int i;\n    for (i = 0; i < n; i++)\n        g(i);\n}\n");
    auto call = s.select({step(JpKind::Function), step(JpKind::Call)})[0][1];
    s.insert(call, InsertPosition::After, "h(i);");
    EXPECT_EQ(s.unit().emit(), "void f(int n)\n{\n    int i;\n    for (i = 0; i < n; i++)\n"
                               "        {\n            g(i);\n            h(i);\n        }\n}\n");
    EXPECT_TRUE(s.alive(call));
}

TEST(Insert, BadFragment) {
    auto s = session("int f(void)\n{\n    return 0;\n}\n");
    auto ret = s.select({step(JpKind::Function), step(JpKind::Stmt)})[0][1];
    EXPECT_THROW(s.insert(ret, InsertPosition::Before, "int = ;"), ParseErrorInFragment);
    EXPECT_EQ(s.report().inserts, 0);
}

TEST(SetType, ScalarArrayAndNoOp) {
    const std::string src = "void f(void)\n{\n    double x;\n    double a[8];\n    int k;\n}\n";
    auto s = session(src);
    auto decls = s.select({step(JpKind::Function), step(JpKind::Decl)});
    ASSERT_EQ(decls.size(), 4u);
    s.setType(decls[3][1], parseType("int"));
    EXPECT_EQ(s.unit().emit(), src);
    s.setType(decls[1][1], changeType(parseType(s.peekAttribute(decls[1][1], "type")), "double", "float"));
    s.setType(decls[2][1], changeType(parseType(s.peekAttribute(decls[2][1], "type")), "double", "float"));
    const std::string out = s.unit().emit();
    EXPECT_EQ(out, "void f(void)\n{\n    float x;\n    float a[8];\n    int k;\n}\n");
    EXPECT_EQ(s.report().actions, 3);
    auto re = Session(parse(out, "re.c"));
    auto d2 = re.select({step(JpKind::Function), step(JpKind::Decl, {{"name", "==", "a"}})});
    EXPECT_EQ(re.peekAttribute(d2[0][1], "type"), "float[8]");
    auto hunks = diffHunks(src, out);
    ASSERT_EQ(hunks.size(), 1u);
    EXPECT_EQ(hunks[0].removed.size(), 2u);
}

TEST(SetType, ParamsReturnAndPointers) {
    auto s = session("static double g(double *p, const double q)\n{\n    return *p + q;\n}\n");
    auto fn = s.select({step(JpKind::Function)})[0][0];
    s.setType(s.returnDecl(fn), parseType("float"));
    for (auto& t : s.select({step(JpKind::Function), step(JpKind::Decl, {{"scope", "==", "param"}})}))
        s.setType(t[1], changeType(parseType(s.peekAttribute(t[1], "type")), "double", "float"));
    EXPECT_EQ(s.unit().emit(), "static float g(float *p, const float q)\n{\n    return *p + q;\n}\n");
    auto p = s.select({step(JpKind::Function), step(JpKind::Decl, {{"name", "==", "p"}})})[0][1];
    s.setType(p, parseType("float* const*"));
    EXPECT_EQ(s.peekAttribute(p, "type"), "float* const*");
    s.setType(p, parseType("float"));
    EXPECT_EQ(s.peekAttribute(p, "type"), "float");
    EXPECT_EQ(parse(s.unit().emit(), "re.c")->emit(), s.unit().emit());
    EXPECT_THROW(s.setType(fn, parseType("float")), NotADecl);
}

TEST(SetType, SplitsMultiDeclarator) {
    auto s = session("void f(void)\n{\n    double a = 1.0, *b, c[2];\n    use(a, b, c);\n}\n");
    auto b = s.select({step(JpKind::Function), step(JpKind::Decl, {{"name", "==", "b"}})})[0][1];
    s.setType(b, parseType("float*"));
    EXPECT_EQ(s.unit().emit(),
              "void f(void)\n{\n    double a = 1.0;\n    float *b;\n    double c[2];\n    use(a, b, c);\n}\n");
    EXPECT_TRUE(s.alive(b));
    EXPECT_EQ(s.peekAttribute(b, "type"), "float*");
}

TEST(Clone, CopyRenameAndIndependence) {
    const std::string src = awtest::readFile(awtest::corpus("callchain.c"));
    auto s = Session(parse(src, "callchain.c"));
    auto foo = s.functionJp("foo");
    auto clone = s.cloneFunction(foo, "foo_f");
    EXPECT_EQ(s.peekAttribute(clone, "name"), "foo_f");
    EXPECT_THROW(s.cloneFunction(foo, "bar"), DuplicateName);
    EXPECT_EQ(s.report().actions, 1);

    // call-name multisets of original and clone agree
    std::map<std::string, int> orig, copy;
    for (auto& t : s.select({step(JpKind::Function, {{"name", "==", "foo"}}), step(JpKind::Call)}))
        ++orig[s.peekAttribute(t[1], "name")];
    for (auto& t : s.select({step(JpKind::Function, {{"name", "==", "foo_f"}}), step(JpKind::Call)}))
        ++copy[s.peekAttribute(t[1], "name")];
    EXPECT_EQ(orig, copy);
    EXPECT_EQ(orig["bar"], 2);

    for (auto& t : s.select({step(JpKind::Function, {{"name", "==", "foo_f"}}), step(JpKind::Decl)}))
        s.setType(t[1], changeType(parseType(s.peekAttribute(t[1], "type")), "double", "float"));
    // Removing the clone region gives back the input bytes.
    std::string out = s.unit().emit();
    const auto at = out.find("\n\nfloat foo_f");
    ASSERT_NE(at, std::string::npos);
    const auto end = out.find("\n}\n", at) + 2;
    out.erase(at, end - at);
    EXPECT_EQ(out, src);
}

TEST(Metrics, NoOpAndDelta) {
    const std::string src = awtest::readFile(awtest::corpus("callchain.c"));
    auto input = parse(src, "c.c");
    auto s = Session(parse(src, "c.c"));
    auto row = staticMetrics(*input, s.unit(), 0, 0);
    EXPECT_EQ(row.deltaSloc, 0);
    EXPECT_EQ(row.deltaFuncs, 0);
    s.cloneFunction(s.functionJp("bar"), "bar_f");
    row = staticMetrics(*input, s.unit(), 4, 1);
    EXPECT_EQ(row.deltaFuncs, 1);
    EXPECT_EQ(row.deltaSloc, row.wovenSloc - row.inputSloc);
    EXPECT_EQ(row.deltaSloc, 2);
    EXPECT_EQ(StaticMetricsRow::csvHeader(),
              "File,AspectSLoC,Aspects,InputSLoC,InputFunc,WovenSLoC,WovenFunc,DeltaSLoC,DeltaFunc");
    EXPECT_EQ(WeaveReport::csvHeader(), "File,Selects,Attributes,Actions,Inserts,NativeSLoC");
    EXPECT_EQ(s.report().csvRow("c.c"), "c.c,0,0,1,0,0");
}
