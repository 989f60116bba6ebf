#pragma once

#include "aw/ast.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aw {

/// Explicit integer list, or start*factor^i for i in [0, count).
struct Range {
    std::vector<long> values;

    static Range list(std::vector<long> values);
    static Range geometric(long start, long factor, int count);
    /// "1,2,3" or "geometric(1,2,7)". ConfigError.
    static Range parse(std::string_view text);
};

struct KnobRange {
    std::string name;
    Range range;
};

using Configuration = std::vector<std::pair<std::string, long>>;

/// Cartesian product with knobs sorted by name; the last knob varies fastest.
std::vector<Configuration> expandRanges(std::vector<KnobRange> knobs);

struct RunMeasurement {
    double seconds = 0;
    std::optional<double> joules;
};

struct ExploreConfig {
    std::vector<std::filesystem::path> sources;
    std::string compilerCommand = "cc -std=c99 -O2 {flags} {defines} {src} -o {out} -lm";
    std::string baseFlags;
    std::vector<KnobRange> knobs;
    int repetitions = 1;
    double timeoutSeconds = 60;
    std::filesystem::path outputCsv;
    std::filesystem::path workDir = ".";
    std::vector<std::string> runArgs;
    std::filesystem::path stdinFile;
    /// Run through this command; its last stdout line is the energy in joules.
    std::string energyMeterCommand;
    /// Replaces compile and run with a synthetic cost (fake-runner mode).
    std::function<RunMeasurement(const Configuration&, int repetition)> fakeRunner;
};

/// Built-in deterministic cost used by `fake_runner = 1` configs:
/// 1 + sum_i (i+1) * v_i / 1000 + (hash(config, rep) % 100) / 10000 seconds.
RunMeasurement syntheticCost(const Configuration& config, int repetition);

/// Reads a `key = value` config: sources, compiler, flags, knob.<NAME>,
/// repetitions, timeout, output, workdir, args, stdin, energy_meter,
/// fake_runner. ConfigError, IoError.
ExploreConfig parseExploreConfig(std::string_view text);
ExploreConfig loadExploreConfig(const std::filesystem::path& path);

struct Stats {
    double mean = 0, min = 0, max = 0, stddev = 0; // sample stddev, 0 for one value
};
Stats summarize(const std::vector<double>& values);

/// Compiles and runs every configuration; knobs go in as `-DAW_<NAME>=v`
/// and as environment variables `AW_<NAME>`. Returns the CSV (also written
/// to outputCsv when set). CompilerNotFound, CompileFailed, RunTimeout,
/// NonzeroExit.
std::string runExploration(const ExploreConfig& config);

struct VersionOptions {
    std::string flags;                  // whitespace separated
    std::vector<std::string> defines;   // NAME or NAME=VALUE
    std::string compiler = "cc";
    std::filesystem::path cacheDir = "cache";
};

struct CompiledVersion {
    std::filesystem::path library;
    std::string key; // hex SHA-256
    bool cacheHit = false;
};

/// The function, the defined functions it reaches and the file-scope items
/// they need, as one translation unit. ClosureExtractionFailed.
std::string extractClosure(const SourceUnit& unit, const std::string& function);

/// Digest of closure text, sorted flags and sorted defines.
std::string versionKey(const std::string& closure, const VersionOptions& options);

/// Builds the closure into `<cacheDir>/<key>/lib.so` unless already there.
/// The cache directory is locked while checking and building.
/// ClosureExtractionFailed, CompileFailed, CompilerNotFound, IoError.
CompiledVersion compileVersion(const std::string& function, const SourceUnit& unit,
                               const VersionOptions& options);

/// Whether the first word of `command` names an executable.
bool commandExists(const std::string& command);

} // namespace aw
