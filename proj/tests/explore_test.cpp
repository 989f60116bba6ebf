#include "aw/autotuner.hpp"
#include "aw/error.hpp"
#include "aw/explore.hpp"
#include "aw/parser.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <dlfcn.h>
#include <numeric>

using namespace aw;
namespace fs = std::filesystem;

namespace {

void makeExecutable(const fs::path& p, const std::string& text) {
    awtest::writeFile(p, text);
    fs::permissions(p, fs::perms::owner_all);
}

const char* kProgram = R"(#include <stdio.h>
#include <stdlib.h>
int main(void)
{
    const char *env = getenv("AW_N");
    long n = env ? atol(env) : -1;
    if (n != AW_N)
        return 3;
    printf("%ld\n", n);
    return 0;
}
)";

} // namespace

TEST(Ranges, Expansion) {
    EXPECT_EQ(Range::geometric(1, 2, 7).values, (std::vector<long>{1, 2, 4, 8, 16, 32, 64}));
    EXPECT_EQ(Range::parse("geometric(1, 2, 7)").values, Range::geometric(1, 2, 7).values);
    EXPECT_EQ(Range::parse("3, 5,8").values, (std::vector<long>{3, 5, 8}));

    const auto configs = expandRanges({{"b", Range::list({1, 2, 3, 4})}, {"a", Range::list({10, 20, 30})}});
    ASSERT_EQ(configs.size(), 12u);
    EXPECT_EQ(configs.front(), (Configuration{{"a", 10}, {"b", 1}}));
    EXPECT_EQ(configs[1], (Configuration{{"a", 10}, {"b", 2}}));
    EXPECT_EQ(configs.back(), (Configuration{{"a", 30}, {"b", 4}}));

    const auto base = expandRanges({});
    ASSERT_EQ(base.size(), 1u);
    EXPECT_TRUE(base[0].empty());

    for (const char* bad : {"", "1,x", "geometric(1,2)", "geometric(1,2,0)"})
        EXPECT_THROW(Range::parse(bad), ConfigError) << bad;
    EXPECT_THROW(expandRanges({{"a", Range::list({1})}, {"a", Range::list({2})}}), ConfigError);
}

TEST(Explore, FakeRunnerStatisticsMatchOracle) {
    ExploreConfig cfg;
    cfg.knobs = {{"threads", Range::geometric(1, 2, 7)}, {"block", Range::list({16, 32})}};
    cfg.repetitions = 5;
    // Irregular but deterministic timings.
    auto timing = [](const Configuration& c, int rep) {
        return 0.1 * static_cast<double>(c[0].second) / static_cast<double>(c[1].second) +
               0.013 * ((rep * 7 + static_cast<int>(c[1].second)) % 5);
    };
    cfg.fakeRunner = [&](const Configuration& c, int rep) { return RunMeasurement{timing(c, rep), std::nullopt}; };
    const std::string csv = runExploration(cfg);

    const KnowledgeBase kb = parseKnowledge(csv);
    ASSERT_EQ(kb.points.size(), 14u);
    EXPECT_EQ(kb.knobNames, (std::vector<std::string>{"block", "threads"}));
    EXPECT_EQ(awtest::lines(csv).front(), "knob:block,knob:threads,time:mean,time:min,time:max,time:stddev");
    const auto configs = expandRanges(cfg.knobs);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::vector<double> samples;
        for (int r = 0; r < 5; ++r)
            samples.push_back(timing(configs[i], r));
        const Stats want = awtest::oracleStats(samples);
        const MetricStats& got = kb.points[i].metrics.at("time");
        EXPECT_EQ(got.mean, want.mean) << i;
        EXPECT_EQ(got.min, want.min) << i;
        EXPECT_EQ(got.max, want.max) << i;
        EXPECT_EQ(got.stddev, want.stddev) << i;
        EXPECT_EQ(*kb.points[i].knob("block"), std::to_string(configs[i][0].second));
        EXPECT_EQ(*kb.points[i].knob("threads"), std::to_string(configs[i][1].second));
    }
}

TEST(Explore, ConfigFileWithSyntheticCost) {
    const auto dir = awtest::scratchDir("explore_cfg");
    const ExploreConfig cfg = parseExploreConfig("# synthetic sweep\n"
                                                 "fake_runner = 1\n"
                                                 "knob.threads = geometric(1,2,7)\n"
                                                 "knob.unroll = 1, 4, 8\n"
                                                 "repetitions = 3\n"
                                                 "output = " + (dir / "out.csv").string() + "\n");
    const std::string csv = runExploration(cfg);
    EXPECT_EQ(awtest::readFile(dir / "out.csv"), csv);
    const KnowledgeBase kb = parseKnowledge(csv);
    ASSERT_EQ(kb.points.size(), 21u);
    const auto configs = expandRanges(cfg.knobs);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::vector<double> samples;
        for (int r = 0; r < 3; ++r)
            samples.push_back(syntheticCost(configs[i], r).seconds);
        EXPECT_EQ(kb.points[i].metrics.at("time").mean, awtest::oracleStats(samples).mean);
        EXPECT_GE(samples[0], 1.0);
    }
    EXPECT_EQ(runExploration(cfg), csv); // deterministic

    EXPECT_THROW(parseExploreConfig("fake_runner = 1\ncolour = red\n"), ConfigError);
    EXPECT_THROW(parseExploreConfig("knob.a = 1\n"), ConfigError); // no sources
    EXPECT_THROW(parseExploreConfig("fake_runner = 1\nrepetitions = 0\n"), ConfigError);
    EXPECT_THROW(loadExploreConfig(dir / "missing.cfg"), IoError);
}

TEST(Explore, RealCompileAndRun) {
    const auto dir = awtest::scratchDir("explore_real");
    awtest::writeFile(dir / "prog.c", kProgram);
    ExploreConfig cfg;
    cfg.sources = {dir / "prog.c"};
    cfg.knobs = {{"n", Range::list({3, 7})}};
    cfg.repetitions = 3;
    cfg.workDir = dir / "work";
    const KnowledgeBase kb = parseKnowledge(runExploration(cfg));
    ASSERT_EQ(kb.points.size(), 2u);
    for (const auto& p : kb.points) {
        const MetricStats& t = p.metrics.at("time");
        EXPECT_GT(t.min, 0);
        EXPECT_LE(t.min, t.mean);
        EXPECT_LE(t.mean, t.max);
    }
    EXPECT_EQ(awtest::readFile(dir / "work" / "aw_explore_run.out"), "7\n");

    // A meter that runs the program and reports a fixed energy.
    makeExecutable(dir / "meter.sh", "#!/bin/sh\n\"$@\" > /dev/null || exit 1\necho 2.5\n");
    cfg.energyMeterCommand = (dir / "meter.sh").string();
    const std::string metered = runExploration(cfg);
    EXPECT_NE(awtest::lines(metered).front().find(",energy:mean,energy:min,energy:max,energy:stddev"),
              std::string::npos);
    EXPECT_DOUBLE_EQ(parseKnowledge(metered).points[1].metrics.at("energy").mean, 2.5);
}

TEST(Explore, Failures) {
    const auto dir = awtest::scratchDir("explore_fail");
    ExploreConfig cfg;
    cfg.workDir = dir;
    cfg.knobs = {{"n", Range::list({1})}};

    awtest::writeFile(dir / "broken.c", "int main(void) { return nope; }\n");
    cfg.sources = {dir / "broken.c"};
    try {
        runExploration(cfg);
        FAIL() << "expected CompileFailed";
    } catch (const CompileFailed& e) {
        EXPECT_NE(e.log.find("nope"), std::string::npos) << e.log;
    }

    awtest::writeFile(dir / "exit3.c", "int main(void) { return 3; }\n");
    cfg.sources = {dir / "exit3.c"};
    EXPECT_THROW(runExploration(cfg), NonzeroExit);

    awtest::writeFile(dir / "spin.c", "int main(void) { volatile int x = 1; while (x) { } return 0; }\n");
    cfg.sources = {dir / "spin.c"};
    cfg.timeoutSeconds = 0.3;
    EXPECT_THROW(runExploration(cfg), RunTimeout);

    cfg.compilerCommand = "no-such-compiler-xyz {src} -o {out}";
    EXPECT_THROW(runExploration(cfg), CompilerNotFound);
}

TEST(VersionCache, ClosureExtraction) {
    const auto unit = parse(awtest::readFile(awtest::corpus("overlap.c")), "overlap.c");
    const std::string c = extractClosure(*unit, "overlap_score");
    EXPECT_NE(c.find("#include <math.h>"), std::string::npos);
    EXPECT_NE(c.find("static double gauss_overlap(double d2, double alpha)"), std::string::npos);
    EXPECT_NE(c.find("static void make_points("), std::string::npos);
    EXPECT_NE(c.find("static double measure_overlap("), std::string::npos);
    EXPECT_NE(c.find("\ndouble overlap_score("), std::string::npos);
    EXPECT_EQ(c.find("main("), std::string::npos);
    EXPECT_EQ(c.find("fscanf"), std::string::npos);

    // A static entry point is exported; an unrelated global is left out.
    const auto unit2 = parse("typedef double real;\nstatic real scale = 2.0;\nint unused = 1;\n"
                             "static real twice(real x) { return x * scale; }\n",
                             "t.c");
    const std::string c2 = extractClosure(*unit2, "twice");
    EXPECT_EQ(c2, "typedef double real;\n\nstatic real scale = 2.0;\n\nreal twice(real x) { return x * scale; }\n");
    EXPECT_THROW(extractClosure(*unit2, "missing"), ClosureExtractionFailed);
}

TEST(VersionCache, CachesByKey) {
    const auto dir = awtest::scratchDir("version_cache");
    // Wrapper compiler counting its invocations.
    makeExecutable(dir / "cc.sh", "#!/bin/sh\necho x >> '" + (dir / "calls.log").string() + "'\nexec cc \"$@\"\n");
    const auto unit = parse(awtest::readFile(awtest::corpus("overlap.c")), "overlap.c");

    VersionOptions o;
    o.compiler = (dir / "cc.sh").string();
    o.cacheDir = dir / "cache";
    o.flags = "-O2 -g";
    const CompiledVersion a = compileVersion("overlap_score", *unit, o);
    EXPECT_FALSE(a.cacheHit);
    EXPECT_EQ(a.library, o.cacheDir / a.key / "lib.so");
    EXPECT_TRUE(fs::exists(a.library));
    EXPECT_NE(awtest::readFile(o.cacheDir / a.key / "meta").find("function=overlap_score"), std::string::npos);
    EXPECT_EQ(a.key.size(), 64u);

    o.flags = "-g  -O2"; // same flag set
    const CompiledVersion b = compileVersion("overlap_score", *unit, o);
    EXPECT_TRUE(b.cacheHit);
    EXPECT_EQ(b.key, a.key);
    EXPECT_EQ(awtest::lines(awtest::readFile(dir / "calls.log")).size(), 1u);

    o.flags = "-O0";
    const CompiledVersion c = compileVersion("overlap_score", *unit, o);
    EXPECT_NE(c.key, a.key);
    o.defines = {"NUM_POCKET_ATOMS=5000"};
    const CompiledVersion d = compileVersion("overlap_score", *unit, o);
    o.defines = {"NUM_POCKET_ATOMS=15000"};
    const CompiledVersion e = compileVersion("overlap_score", *unit, o);
    EXPECT_NE(d.key, e.key);
    EXPECT_NE(d.key, c.key);
    EXPECT_EQ(awtest::lines(awtest::readFile(dir / "calls.log")).size(), 4u);

    // The library computes what the program prints for the same input.
    void* h = dlopen(a.library.c_str(), RTLD_NOW | RTLD_LOCAL);
    ASSERT_NE(h, nullptr) << dlerror();
    using Fn = double (*)(int, int, unsigned, double);
    auto fn = reinterpret_cast<Fn>(dlsym(h, "overlap_score"));
    ASSERT_NE(fn, nullptr);
    char want[64];
    std::snprintf(want, sizeof want, "10 %.17g", fn(10, 20, 1u, 0.25));
    dlclose(h);
    awtest::writeFile(dir / "main.c", awtest::readFile(awtest::corpus("overlap.c")));
    ASSERT_EQ(std::system(("cd '" + dir.string() + "' && cc -std=c99 -O2 -g main.c -o prog -lm && printf '20\\n10\\n' | ./prog > out.txt").c_str()), 0);
    EXPECT_EQ(awtest::lines(awtest::readFile(dir / "out.txt")).front(), want);

    awtest::writeFile(dir / "bad.c", "double f(double x) { return x + ; }\n");
    const auto bad = parse("double f(double x) { return x; }\n", "bad.c");
    o.flags = "-Werror -DBROKEN -include '" + (dir / "bad.c").string() + "'";
    EXPECT_THROW(compileVersion("f", *bad, o), CompileFailed);
}
