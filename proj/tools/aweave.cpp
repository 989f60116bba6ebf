// aweave: command-line front end of the weaving toolkit.

#include "aw/aspect.hpp"
#include "aw/autotuner.hpp"
#include "aw/error.hpp"
#include "aw/explore.hpp"
#include "aw/parser.hpp"
#include "aw/strategies.hpp"
#include "aw/weave.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "aweave 1.0.0";

// Domain errors tagged with the file they came from.
struct FileError {
    std::string file;
    std::string message;
};

std::string readInput(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw aw::IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename F>
auto inFile(const std::string& file, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const aw::CompileFailed&) {
        throw;
    } catch (const aw::Error& e) {
        throw FileError{file, e.what()};
    }
}

std::unique_ptr<aw::SourceUnit> parseInput(const std::string& path) {
    const std::string text = readInput(path);
    return inFile(path, [&] { return aw::parse(text, fs::path(path).filename().string()); });
}

fs::path besides(const std::string& out, const std::string& name) {
    const fs::path dir = fs::path(out).parent_path();
    return dir.empty() ? fs::path(name) : dir / name;
}

void writeSupport(const std::string& out, const std::vector<aw::SupportFile>& files) {
    for (const auto& f : files) {
        const fs::path p = besides(out, f.name);
        aw::writeFileAtomic(p, f.text);
        std::cerr << "wrote " << p.string() << "\n";
    }
}

std::map<std::string, std::string> keyValues(const std::vector<std::string>& items, const char* what) {
    std::map<std::string, std::string> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CLI::ValidationError(what, "expected name=value, got '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

std::vector<std::string> commaList(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty())
            out.push_back(item);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Source-to-source weaving of C99 programs: precision, versions, memoization, "
                 "parallel loops, exploration and tuning."};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // weave
    std::string aspectPath, inPath, outPath, reportPath, metricsPath;
    std::vector<std::string> aspectArgs;
    auto* weave = app.add_subcommand("weave", "run a strategy script on a C file");
    std::string builtins = "Built-in strategies callable from scripts:\n";
    for (const auto& b : aw::builtinAspects()) {
        std::string params;
        for (const auto& in : b.inputs)
            params += (params.empty() ? "" : ", ") + in.name + (in.defaultValue ? "=\"" + *in.defaultValue + "\"" : "");
        builtins += "  " + b.name + "(" + params + ")  " + b.summary + "\n";
    }
    weave->footer(builtins);
    weave->add_option("--aspect", aspectPath, "strategy script (.aw)")->required();
    weave->add_option("--arg", aspectArgs, "entry aspect input, name=value");
    weave->add_option("--in", inPath, "input C file")->required();
    weave->add_option("--out", outPath, "woven C file")->required();
    weave->add_option("--report", reportPath, "weave counters CSV");
    weave->add_option("--metrics", metricsPath, "static metrics CSV (default: next to --report)");

    // detect-memo
    auto* detect = app.add_subcommand("detect-memo", "list functions safe to memoize");
    detect->add_option("--in", inPath, "input C file")->required();

    // parallelize
    bool keepNested = false;
    auto* par = app.add_subcommand("parallelize", "insert OpenMP pragmas on safe for-loops");
    par->add_option("--in", inPath, "input C file")->required();
    par->add_option("--out", outPath, "output C file")->required();
    par->add_option("--report", reportPath, "per-loop verdicts as JSON");
    par->add_flag("--keep-nested", keepNested, "keep pragmas nested inside parallel loops");

    // memoize
    aw::MemoConfig memo;
    std::string policy = "replace";
    bool disabled = false;
    auto* mem = app.add_subcommand("memoize", "wrap a pure function with a lookup table");
    mem->add_option("--in", inPath, "input C file")->required();
    mem->add_option("--out", outPath, "output C file")->required();
    mem->add_option("--fn", memo.function, "function to memoize")->required();
    mem->add_option("--table-size", memo.tableSize, "table entries, a power of two")->capture_default_str();
    mem->add_option("--policy", policy, "on conflict: keep or replace")
        ->check(CLI::IsMember({"keep", "replace"}))
        ->capture_default_str();
    mem->add_flag("--disabled", disabled, "start with the table off (env <fn>_memo_enabled=1 turns it on)");
    mem->add_flag("--force", memo.force, "memoize even if the function does not look pure");

    // multiversion
    std::string callSpec, versions, knob = "Knob1";
    auto* mv = app.add_subcommand("multiversion", "switch between function versions with a knob");
    mv->add_option("--in", inPath, "input C file")->required();
    mv->add_option("--out", outPath, "output C file")->required();
    mv->add_option("--call", callSpec, "call sites: CALLEE or CALLER:CALLEE")->required();
    mv->add_option("--versions", versions, "comma separated versions, first is the default")->required();
    mv->add_option("--knob", knob, "knob name")->capture_default_str();

    // explore
    std::string configPath, csvOut;
    auto* exp = app.add_subcommand("explore", "compile and time every knob configuration");
    exp->add_option("--config", configPath, "key = value exploration config")->required();
    exp->add_option("--out", csvOut, "CSV path (overrides `output` in the config)");

    // tune
    std::string knowledgePath, rank, knobFile;
    std::vector<std::string> constraints;
    auto* tune = app.add_subcommand("tune", "pick the best operating point of a knowledge CSV");
    tune->add_option("--knowledge", knowledgePath, "knowledge CSV")->required();
    tune->add_option("--constraint", constraints, "metric<=value:priority or metric>=value:priority");
    tune->add_option("--rank", rank, "max|min:metric[*weight][+...]")->required();
    tune->add_option("--knob-file", knobFile, "write the chosen knobs here");

    // version-compile
    aw::VersionOptions vopt;
    std::string fnName;
    auto* vc = app.add_subcommand("version-compile", "build a function and its callees as a cached shared library");
    vc->add_option("--in", inPath, "input C file")->required();
    vc->add_option("--fn", fnName, "function")->required();
    vc->add_option("--flags", vopt.flags, "compiler flags");
    vc->add_option("--define", vopt.defines, "NAME or NAME=VALUE");
    vc->add_option("--cache", vopt.cacheDir, "cache directory")->capture_default_str();
    vc->add_option("--compiler", vopt.compiler, "C compiler")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*weave) {
            const auto args = keyValues(aspectArgs, "--arg");
            const std::string script = readInput(aspectPath);
            const aw::AspectProgram program = inFile(aspectPath, [&] { return aw::parseAspect(script); });
            auto input = parseInput(inPath);
            aw::Session s(parseInput(inPath));
            const aw::WeaveOutput out = inFile(aspectPath, [&] { return aw::runAspects(program, s, args); });
            const std::string woven = s.unit().emit();
            aw::writeFileAtomic(outPath, woven);
            writeSupport(outPath, out.supportFiles);

            const std::string label = fs::path(inPath).filename().string();
            const auto wovenUnit = inFile(outPath, [&] { return aw::parse(woven, label); });
            const aw::StaticMetricsRow metrics = aw::staticMetrics(
                *input, *wovenUnit, program.sloc(), static_cast<int>(program.aspects.size()));
            if (!reportPath.empty()) {
                aw::writeFileAtomic(reportPath, aw::WeaveReport::csvHeader() + "\n" + s.report().csvRow(label) + "\n");
                if (metricsPath.empty())
                    metricsPath = (fs::path(reportPath).parent_path() /
                                   (fs::path(reportPath).stem().string() + ".metrics.csv")).string();
            }
            if (!metricsPath.empty())
                aw::writeFileAtomic(metricsPath, aw::StaticMetricsRow::csvHeader() + "\n" + metrics.csvRow(label) + "\n");
            std::cerr << aw::WeaveReport::csvHeader() << "\n" << s.report().csvRow(label) << "\n";
        } else if (*detect) {
            const auto unit = parseInput(inPath);
            for (const auto& f : aw::detectMemoizable(*unit))
                std::cout << f << "\n";
        } else if (*par) {
            aw::Session s(parseInput(inPath));
            const aw::ParallelizationReport report = inFile(inPath, [&] { return aw::autoParallelize(s); });
            int disabledPragmas = 0;
            if (!keepNested)
                disabledPragmas = aw::disableNestedParallelPragmas(s);
            aw::writeFileAtomic(outPath, s.unit().emit());
            if (!reportPath.empty())
                aw::writeFileAtomic(reportPath, report.toJson());
            int accepted = 0;
            for (const auto& l : report.loops)
                accepted += l.parallelizable;
            std::cerr << report.loops.size() << " loops, " << accepted << " parallelized, " << disabledPragmas
                      << " nested pragmas disabled\n";
        } else if (*mem) {
            memo.policy = policy == "keep" ? aw::MemoPolicy::Keep : aw::MemoPolicy::Replace;
            memo.enabledByDefault = !disabled;
            aw::Session s(parseInput(inPath));
            const auto support = inFile(inPath, [&] { return aw::memoize(s, memo); });
            aw::writeFileAtomic(outPath, s.unit().emit());
            writeSupport(outPath, support);
        } else if (*mv) {
            const auto colon = callSpec.find(':');
            const std::string caller = colon == std::string::npos ? "" : callSpec.substr(0, colon);
            const std::string callee = colon == std::string::npos ? callSpec : callSpec.substr(colon + 1);
            aw::Session s(parseInput(inPath));
            aw::SelectChain chain = {{aw::JpKind::Function, {}}, {aw::JpKind::Call, {{"name", "==", callee}}}};
            if (!caller.empty())
                chain[0].filters.push_back({"name", "==", caller});
            int sites = 0;
            inFile(inPath, [&] {
                for (const auto& t : s.select(chain))
                    if (s.alive(t.back())) {
                        aw::multiversion(s, t.back(), commaList(versions), knob);
                        ++sites;
                    }
                return 0;
            });
            if (sites == 0)
                throw FileError{inPath, "NotAStatementCall: no call to " + callSpec};
            aw::writeFileAtomic(outPath, s.unit().emit());
            writeSupport(outPath, {{"aw_runtime.h", aw::runtimeHeader()}, {"aw_runtime.c", aw::runtimeSource()}});
            std::cerr << sites << " call sites switched by " << knob << "\n";
        } else if (*exp) {
            aw::ExploreConfig cfg = inFile(configPath, [&] { return aw::loadExploreConfig(configPath); });
            if (!csvOut.empty())
                cfg.outputCsv = csvOut;
            const std::string csv = aw::runExploration(cfg);
            if (cfg.outputCsv.empty())
                std::cout << csv;
            else
                std::cerr << "wrote " << cfg.outputCsv.string() << "\n";
        } else if (*tune) {
            const aw::KnowledgeBase kb = inFile(knowledgePath, [&] { return aw::loadKnowledge(knowledgePath); });
            aw::Problem problem;
            for (const auto& c : constraints)
                problem.constraints.push_back(aw::parseConstraint(c));
            problem.rank = aw::parseRank(rank);
            const aw::OperatingPoint& best = aw::selectBest(kb, problem);
            std::cout << aw::knobFileText(best);
            if (!knobFile.empty())
                aw::writeKnobFile(best, knobFile);
        } else if (*vc) {
            const auto unit = parseInput(inPath);
            const aw::CompiledVersion v = inFile(inPath, [&] { return aw::compileVersion(fnName, *unit, vopt); });
            std::cerr << (v.cacheHit ? "cache hit " : "compiled ") << v.key << "\n";
            std::cout << v.library.string() << "\n";
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "aweave: " << e.what() << "\n";
        return 2;
    } catch (const FileError& e) {
        std::cerr << "aweave: " << e.file << ": " << e.message << "\n";
        return 1;
    } catch (const aw::CompileFailed& e) {
        std::cerr << "aweave: " << e.what() << "\n" << e.log;
        return 1;
    } catch (const aw::Error& e) {
        std::cerr << "aweave: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "aweave: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
