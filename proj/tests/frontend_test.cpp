#include "aw/error.hpp"
#include "aw/parser.hpp"
#include "aw/sloc.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace aw;

namespace {

std::vector<Node*> ofKind(Node& root, NodeKind kind) {
    std::vector<Node*> out;
    root.walk([&](Node& n) {
        if (n.kind == kind)
            out.push_back(&n);
    });
    return out;
}

} // namespace

TEST(Parse, MinimalFunction) {
    auto u = parse("int f(void){return 0;}", "t.c");
    ASSERT_EQ(u->functions().size(), 1u);
    EXPECT_EQ(functionName(*u->functions()[0]), "f");
    EXPECT_EQ(ofKind(*u->root, NodeKind::Return).size(), 1u);
    EXPECT_EQ(countSlocL(*u), 2);
}

TEST(Parse, CorpusRoundTrip) {
    for (const auto& name : awtest::corpusFiles()) {
        const std::string src = awtest::readFile(awtest::corpus(name));
        auto u = parse(src, name);
        EXPECT_EQ(u->emit(), src) << name;
    }
}

TEST(Parse, PragmaAttachesToNextLoop) {
    const std::string src = "void f(int n, double *a)\n{\n    int i;\n"
                            "#pragma omp parallel for\n"
                            "    for (i = 0; i < n; i++)\n        a[i] = 0.0;\n}\n";
    auto u = parse(src, "p.c");
    auto loops = ofKind(*u->root, NodeKind::For);
    ASSERT_EQ(loops.size(), 1u);
    auto pragmas = attachedPragmas(*loops[0]);
    ASSERT_EQ(pragmas.size(), 1u);
    EXPECT_EQ(pragmaText(*pragmas[0]), "omp parallel for");
    EXPECT_EQ(pragmas[0]->line() + 1, loops[0]->line());
    EXPECT_EQ(u->emit(), src);
}

TEST(Parse, KeepsCommentsAndOddSpacing) {
    const std::string src = "/* head */\nstatic   int  g = 3 ; // tail\n"
                            "int\nf ( int x )\n{\n\treturn x*g ; /* x */\n}\n";
    EXPECT_EQ(parse(src, "s.c")->emit(), src);
}

TEST(Parse, SyntaxErrorCarriesPosition) {
    try {
        parse("int f(void) { return 0 }\n", "bad.c");
        FAIL() << "expected SyntaxError";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line, 1);
        EXPECT_EQ(e.col, 24);
    }
}

TEST(Parse, KAndRIsUnsupported) {
    EXPECT_THROW(parse("int f(a, b)\nint a; int b;\n{ return a; }\n", "kr.c"), UnsupportedConstruct);
}

TEST(Parse, StructureOfStatements) {
    const std::string src = "int g(int n)\n{\n    int s = 0, i;\n    for (i = 0; i < n; i++) {\n"
                            "        if (i % 2) s += i; else s -= 1;\n    }\n"
                            "    while (n > 0) n--;\n    do { s++; } while (s < 0);\n"
                            "    switch (s) { case 1: s = 2; break; default: break; }\n"
                            "    return s;\n}\n";
    auto u = parse(src, "g.c");
    EXPECT_EQ(ofKind(*u->root, NodeKind::For).size(), 1u);
    EXPECT_EQ(ofKind(*u->root, NodeKind::While).size(), 1u);
    EXPECT_EQ(ofKind(*u->root, NodeKind::Do).size(), 1u);
    EXPECT_EQ(ofKind(*u->root, NodeKind::If).size(), 1u);
    EXPECT_EQ(ofKind(*u->root, NodeKind::Switch).size(), 1u);
    EXPECT_EQ(ofKind(*u->root, NodeKind::Label).size(), 2u);
    // signature, decl, for, if, 2 branches, while, n--, do, s++, switch,
    // 2 labels, s = 2, 2 breaks, return
    EXPECT_EQ(countSlocL(*u), 17);
    EXPECT_EQ(u->emit(), src);
}

TEST(Parse, ExpressionNodes) {
    auto u = parse("double h(double x)\n{\n    return sqrt(x) + (double)(int)x * sizeof(float);\n}\n", "h.c");
    auto calls = ofKind(*u->root, NodeKind::Call);
    ASSERT_EQ(calls.size(), 1u);
    EXPECT_EQ(callName(*calls[0]), "sqrt");
    EXPECT_EQ(callArgs(*calls[0]).size(), 1u);
    auto types = ofKind(*u->root, NodeKind::TypeName);
    ASSERT_EQ(types.size(), 3u);
    EXPECT_EQ(compactText(*types[0]), "double");
    EXPECT_EQ(compactText(*types[2]), "float");
    EXPECT_EQ(ofKind(*u->root, NodeKind::VarRef).size(), 2u);
}

// Hand count of tests/corpus/betweenness.c: 2 includes, 1 struct
// declaration, read_graph 39, single_source 36, main 31.
TEST(Sloc, BetweennessHandCount) {
    auto u = parse(awtest::readFile(awtest::corpus("betweenness.c")), "betweenness.c");
    EXPECT_EQ(countSlocL(*u), 109);
    EXPECT_EQ(countFunctions(*u), 3);
}

TEST(Sloc, InvariantUnderCommentsAndBlankLines) {
    const std::string src = awtest::readFile(awtest::corpus("betweenness.c"));
    auto ls = awtest::lines(src);
    std::string noisy;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        noisy += ls[i] + "\n";
        if (i >= 10)
            noisy += "\n  // filler\n\n";
    }
    EXPECT_EQ(countSlocL(*parse(noisy, "n.c")), countSlocL(*parse(src, "b.c")));
}

// --- CType ------------------------------------------------------------------

TEST(CType, ChangeTypeTable) {
    EXPECT_EQ(render(changeType(parseType("double*"), "double", "float")), "float*");
    EXPECT_EQ(render(changeType(parseType("int"), "double", "float")), "int");
    EXPECT_EQ(render(changeType(parseType("double[16]"), "double", "float")), "float[16]");
    EXPECT_EQ(render(changeType(parseType("const double* const*"), "double", "float")),
              "const float* const*");
    EXPECT_EQ(render(changeType(parseType("long double"), "double", "float")), "long double");
}

TEST(CType, CanonicalSpelling) {
    EXPECT_EQ(render(parseType("double *")), "double*");
    EXPECT_EQ(render(parseType("long unsigned int")), "unsigned long int");
    EXPECT_EQ(render(parseType("double const * const")), "const double* const");
    EXPECT_EQ(render(parseType("float [4][2]")), "float[4][2]");
    EXPECT_THROW(parseType("double )"), SyntaxError);
}

// Random types are written as C declarations in a scrambled but legal word
// order, parsed by the frontend, and compared to the components they were
// generated from. The expected canonical text is assembled independently.
TEST(CType, PropertySweepAgainstDeclarations) {
    for (const auto& [decl, expected, expectedText] : awtest::typeCases(200, 1234)) {
        std::unique_ptr<SourceUnit> u;
        try {
            u = parse("enum { N = 3 };\n" + decl, "t.c");
        } catch (const Error& e) {
            ADD_FAILURE() << decl << e.what();
            continue;
        }
        Node* declarator = nullptr;
        u->root->walk([&](Node& n) {
            if (n.kind == NodeKind::Declarator && declaratorName(n) == "x")
                declarator = &n;
        });
        ASSERT_NE(declarator, nullptr) << decl;
        const CType got = declaratorType(*declarator);
        EXPECT_EQ(got, expected) << decl;
        EXPECT_EQ(render(got), expectedText) << decl;
        EXPECT_EQ(parseType(render(got)), got) << decl;
        const CType changed = changeType(got, "double", "float");
        if (expected.base == "double") {
            EXPECT_EQ(changed.base, "float");
            EXPECT_EQ(changed.pointers, expected.pointers);
            EXPECT_EQ(changed.arrays, expected.arrays);
        } else {
            EXPECT_EQ(changed, got);
        }
    }
}
