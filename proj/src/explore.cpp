#include "aw/explore.hpp"

#include "aw/analysis.hpp"
#include "aw/autotuner.hpp"
#include "aw/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/file.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace aw {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

std::vector<std::string> splitWords(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

long toLong(const std::string& s, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno != 0)
        throw ConfigError(what + ": not an integer: '" + s + "'");
    return v;
}

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

std::string upper(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string replaceAll(std::string s, const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

std::string readAll(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Runs `cmd` through the shell with output captured; returns the exit status
// and fills `log`.
int shell(const std::string& cmd, const fs::path& logFile, std::string& log) {
    const int rc = std::system((cmd + " > " + quote(logFile.string()) + " 2>&1").c_str());
    log = readAll(logFile);
    return rc;
}

struct Child {
    int status = 0;
    double seconds = 0;
};

// Runs argv with extra environment, stdin and stdout redirected, killing it
// after `timeout` seconds.
Child spawn(const std::vector<std::string>& argv, const std::vector<std::pair<std::string, std::string>>& env,
            const fs::path& in, const fs::path& out, double timeout) {
    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0)
        throw IoError("fork failed");
    if (pid == 0) {
        for (const auto& [k, v] : env)
            ::setenv(k.c_str(), v.c_str(), 1);
        const int fdIn = ::open(in.empty() ? "/dev/null" : in.c_str(), O_RDONLY);
        const int fdOut = ::open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fdIn < 0 || fdOut < 0)
            ::_exit(126);
        ::dup2(fdIn, 0);
        ::dup2(fdOut, 1);
        std::vector<char*> args;
        for (const auto& a : argv)
            args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    Child c;
    while (true) {
        const pid_t r = ::waitpid(pid, &c.status, WNOHANG);
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (r == pid)
            return c;
        if (c.seconds > timeout) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &c.status, 0);
            throw RunTimeout(argv[0] + " exceeded " + fmt(timeout) + " s");
        }
        std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
}

std::string sha256Hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("SHA-256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

// Advisory lock held for the lifetime of the object.
class DirLock {
public:
    explicit DirLock(const fs::path& file) : fd_(::open(file.c_str(), O_RDWR | O_CREAT, 0644)) {
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
            throw IoError("cannot lock " + file.string());
    }
    ~DirLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    int fd_;
};

} // namespace

Range Range::list(std::vector<long> values) {
    if (values.empty())
        throw ConfigError("empty range");
    return Range{std::move(values)};
}

Range Range::geometric(long start, long factor, int count) {
    if (count < 1 || factor == 0)
        throw ConfigError("geometric range needs count >= 1 and a non-zero factor");
    Range r;
    long v = start;
    for (int i = 0; i < count; ++i, v *= factor)
        r.values.push_back(v);
    return r;
}

Range Range::parse(std::string_view text) {
    const std::string t = trim(text);
    if (t.rfind("geometric(", 0) == 0 && t.back() == ')') {
        std::vector<std::string> parts;
        std::stringstream ss(t.substr(10, t.size() - 11));
        for (std::string p; std::getline(ss, p, ',');)
            parts.push_back(trim(p));
        if (parts.size() != 3)
            throw ConfigError("geometric range is geometric(start,factor,count): " + t);
        return geometric(toLong(parts[0], "start"), toLong(parts[1], "factor"),
                         static_cast<int>(toLong(parts[2], "count")));
    }
    std::vector<long> values;
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ',');)
        values.push_back(toLong(trim(p), "range value"));
    return list(std::move(values));
}

std::vector<Configuration> expandRanges(std::vector<KnobRange> knobs) {
    std::sort(knobs.begin(), knobs.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < knobs.size(); ++i)
        if (knobs[i].name == knobs[i - 1].name)
            throw ConfigError("knob '" + knobs[i].name + "' given twice");
    std::vector<Configuration> out = {{}};
    for (const auto& k : knobs) {
        if (k.range.values.empty())
            throw ConfigError("knob '" + k.name + "' has an empty range");
        std::vector<Configuration> next;
        for (const auto& prefix : out)
            for (long v : k.range.values) {
                Configuration c = prefix;
                c.emplace_back(k.name, v);
                next.push_back(std::move(c));
            }
        out = std::move(next);
    }
    return out;
}

RunMeasurement syntheticCost(const Configuration& config, int repetition) {
    std::uint32_t h = 2166136261u;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 16777619u;
        }
    };
    double t = 1.0;
    for (std::size_t i = 0; i < config.size(); ++i) {
        t += static_cast<double>(i + 1) * static_cast<double>(config[i].second) / 1000.0;
        mix(config[i].first + "=" + std::to_string(config[i].second) + ";");
    }
    mix("rep=" + std::to_string(repetition));
    return {t + static_cast<double>(h % 100) / 10000.0, std::nullopt};
}

ExploreConfig parseExploreConfig(std::string_view text) {
    ExploreConfig cfg;
    std::istringstream in{std::string(text)};
    int lineNo = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineNo;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        const std::string where = "line " + std::to_string(lineNo) + ": " + key;
        if (key == "sources") {
            std::stringstream ss(value);
            for (std::string p; std::getline(ss, p, ',');)
                if (!trim(p).empty())
                    cfg.sources.emplace_back(trim(p));
        } else if (key == "compiler") {
            cfg.compilerCommand = value;
        } else if (key == "flags") {
            cfg.baseFlags = value;
        } else if (key.rfind("knob.", 0) == 0 && key.size() > 5) {
            cfg.knobs.push_back({key.substr(5), Range::parse(value)});
        } else if (key == "repetitions") {
            cfg.repetitions = static_cast<int>(toLong(value, where));
        } else if (key == "timeout") {
            char* end = nullptr;
            cfg.timeoutSeconds = std::strtod(value.c_str(), &end);
            if (value.empty() || *end != '\0' || cfg.timeoutSeconds <= 0)
                throw ConfigError(where + ": expected a positive number of seconds");
        } else if (key == "output") {
            cfg.outputCsv = value;
        } else if (key == "workdir") {
            cfg.workDir = value;
        } else if (key == "args") {
            cfg.runArgs = splitWords(value);
        } else if (key == "stdin") {
            cfg.stdinFile = value;
        } else if (key == "energy_meter") {
            cfg.energyMeterCommand = value;
        } else if (key == "fake_runner") {
            if (value == "1" || value == "true")
                cfg.fakeRunner = syntheticCost;
        } else {
            throw ConfigError(where + ": unknown key");
        }
    }
    if (cfg.repetitions < 1)
        throw ConfigError("repetitions must be at least 1");
    if (cfg.sources.empty() && !cfg.fakeRunner)
        throw ConfigError("no sources given");
    expandRanges(cfg.knobs); // validates names and ranges
    return cfg;
}

ExploreConfig loadExploreConfig(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read " + path.string());
    return parseExploreConfig(readAll(path));
}

Stats summarize(const std::vector<double>& values) {
    Stats s;
    if (values.empty())
        return s;
    double sum = 0;
    s.min = s.max = values.front();
    for (double v : values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0;
        for (double v : values)
            sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    // Rounding can push the mean of equal values past them.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

bool commandExists(const std::string& command) {
    const auto words = splitWords(command);
    if (words.empty())
        return false;
    const std::string& exe = words.front();
    if (exe.find('/') != std::string::npos)
        return ::access(exe.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    std::stringstream ss(path ? path : "/usr/bin:/bin");
    for (std::string dir; std::getline(ss, dir, ':');)
        if (!dir.empty() && ::access((fs::path(dir) / exe).c_str(), X_OK) == 0)
            return true;
    return false;
}

std::string runExploration(const ExploreConfig& cfg) {
    const auto configs = expandRanges(cfg.knobs);
    if (cfg.repetitions < 1)
        throw ConfigError("repetitions must be at least 1");
    const bool fake = static_cast<bool>(cfg.fakeRunner);
    const bool metered = !cfg.energyMeterCommand.empty();
    if (!fake && !commandExists(cfg.compilerCommand))
        throw CompilerNotFound(cfg.compilerCommand);
    if (!fake)
        fs::create_directories(cfg.workDir);

    std::vector<std::string> names;
    for (const auto& [name, v] : configs.front())
        names.push_back(name);
    std::string csv;
    for (const auto& n : names)
        csv += "knob:" + n + ",";
    csv += "time:mean,time:min,time:max,time:stddev";
    if (metered)
        csv += ",energy:mean,energy:min,energy:max,energy:stddev";
    csv += "\n";

    std::string sources;
    for (const auto& s : cfg.sources)
        sources += (sources.empty() ? "" : " ") + quote(fs::absolute(s).string());
    const fs::path work = fs::absolute(cfg.workDir);

    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Configuration& c = configs[i];
        std::vector<std::pair<std::string, std::string>> env;
        std::string defines;
        for (const auto& [name, v] : c) {
            env.emplace_back("AW_" + upper(name), std::to_string(v));
            defines += (defines.empty() ? "" : " ") + std::string("-DAW_") + upper(name) + "=" + std::to_string(v);
        }

        const fs::path exe = work / ("aw_explore_" + std::to_string(i));
        if (!fake) {
            std::string cmd = cfg.compilerCommand;
            cmd = replaceAll(cmd, "{src}", sources);
            cmd = replaceAll(cmd, "{out}", quote(exe.string()));
            cmd = replaceAll(cmd, "{flags}", cfg.baseFlags);
            cmd = replaceAll(cmd, "{defines}", defines);
            std::string log;
            if (shell(cmd, work / "aw_explore_build.log", log) != 0)
                throw CompileFailed("configuration " + std::to_string(i + 1) + ": " + cmd, log);
        }

        std::vector<double> times, joules;
        for (int r = 0; r < cfg.repetitions; ++r) {
            RunMeasurement m;
            if (fake) {
                m = cfg.fakeRunner(c, r);
            } else {
                std::vector<std::string> argv;
                if (metered) {
                    std::string line = cfg.energyMeterCommand + " " + quote(exe.string());
                    for (const auto& a : cfg.runArgs)
                        line += " " + quote(a);
                    argv = {"/bin/sh", "-c", line};
                } else {
                    argv = {exe.string()};
                    argv.insert(argv.end(), cfg.runArgs.begin(), cfg.runArgs.end());
                }
                const fs::path out = work / "aw_explore_run.out";
                const Child ch = spawn(argv, env, cfg.stdinFile.empty() ? fs::path() : fs::absolute(cfg.stdinFile),
                                       out, cfg.timeoutSeconds);
                if (!WIFEXITED(ch.status) || WEXITSTATUS(ch.status) != 0)
                    throw NonzeroExit("configuration " + std::to_string(i + 1) + " run " + std::to_string(r + 1) +
                                      ": status " +
                                      std::to_string(WIFEXITED(ch.status) ? WEXITSTATUS(ch.status)
                                                                          : 128 + WTERMSIG(ch.status)));
                m.seconds = ch.seconds;
                if (metered) {
                    std::string last;
                    std::istringstream lines(readAll(out));
                    for (std::string l; std::getline(lines, l);)
                        if (!trim(l).empty())
                            last = trim(l);
                    char* end = nullptr;
                    const double j = std::strtod(last.c_str(), &end);
                    if (last.empty() || *end != '\0')
                        throw NonzeroExit("energy meter printed no joules value");
                    m.joules = j;
                }
            }
            times.push_back(m.seconds);
            if (m.joules)
                joules.push_back(*m.joules);
        }

        for (const auto& [name, v] : c)
            csv += std::to_string(v) + ",";
        const Stats t = summarize(times);
        csv += fmt(t.mean) + "," + fmt(t.min) + "," + fmt(t.max) + "," + fmt(t.stddev);
        if (metered) {
            const Stats e = summarize(joules);
            csv += "," + fmt(e.mean) + "," + fmt(e.min) + "," + fmt(e.max) + "," + fmt(e.stddev);
        }
        csv += "\n";
        if (!fake)
            fs::remove(exe);
    }
    if (!cfg.outputCsv.empty())
        writeFileAtomic(cfg.outputCsv, csv);
    return csv;
}

std::string extractClosure(const SourceUnit& unit, const std::string& function) {
    const Node* root = unit.function(function);
    if (!root)
        throw ClosureExtractionFailed("function '" + function + "' is not defined in " + unit.fileName);

    std::vector<std::string> order;
    std::vector<std::string> todo = {function};
    while (!todo.empty()) {
        const std::string f = todo.back();
        todo.pop_back();
        if (std::find(order.begin(), order.end(), f) != order.end())
            continue;
        order.push_back(f);
        for (const auto& callee : definedCallees(unit, *unit.function(f)))
            todo.push_back(callee);
    }

    std::set<std::string> used;
    auto addIdentifiers = [&](const Node& n) {
        for (const Token* t : significantTokens(n))
            if (t->kind == TokenKind::Identifier)
                used.insert(t->text);
    };
    for (const auto& f : order)
        addIdentifiers(*unit.function(f));

    // File-scope declarations reached through identifiers, to a fixpoint so
    // typedefs used by kept globals come along.
    const std::vector<Node*> items = unit.root->children();
    std::vector<bool> keep(items.size(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const Node* item = items[i];
            if (keep[i] || item->kind != NodeKind::Decl)
                continue;
            bool needed = true;
            for (const Node* d : item->children()) {
                if (d->kind == NodeKind::Declarator)
                    needed = used.count(declaratorName(*d)) > 0;
                else if (d->kind == NodeKind::FuncDeclarator)
                    needed = used.count(functionName(*d)) > 0;
                else
                    continue;
                if (needed)
                    break;
            }
            if (needed) {
                keep[i] = true;
                addIdentifiers(*item);
                changed = true;
            }
        }
    }

    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Node* item = items[i];
        std::string text;
        if (item->kind == NodeKind::Directive) {
            text = emit(*item);
        } else if (item->kind == NodeKind::Decl && keep[i]) {
            text = emit(*item);
        } else if (item->kind == NodeKind::FunctionDef &&
                   std::find(order.begin(), order.end(), functionName(*item)) != order.end()) {
            text = emit(*item);
            // The entry point must be visible from the shared library.
            if (functionName(*item) == function && hasStorageClass(*item->child(Role::Specs), "static"))
                text.erase(text.find("static"), 6 + (text[text.find("static") + 6] == ' ' ? 1 : 0));
        }
        if (text.empty())
            continue;
        while (!text.empty() && (text.back() == '\n' || text.back() == ' '))
            text.pop_back();
        out += (out.empty() || item->kind == NodeKind::Directive ? "" : "\n") + text + "\n";
    }
    return out;
}

std::string versionKey(const std::string& closure, const VersionOptions& options) {
    std::vector<std::string> flags = splitWords(options.flags);
    std::vector<std::string> defines = options.defines;
    std::sort(flags.begin(), flags.end());
    std::sort(defines.begin(), defines.end());
    std::string data = closure;
    data += '\0';
    for (const auto& f : flags)
        data += f + '\n';
    data += '\0';
    for (const auto& d : defines)
        data += d + '\n';
    return sha256Hex(data);
}

CompiledVersion compileVersion(const std::string& function, const SourceUnit& unit, const VersionOptions& options) {
    const std::string closure = extractClosure(unit, function);
    CompiledVersion v;
    v.key = versionKey(closure, options);
    fs::create_directories(options.cacheDir);
    const fs::path dir = options.cacheDir / v.key;
    v.library = dir / "lib.so";

    DirLock lock(options.cacheDir / ".lock");
    if (fs::exists(v.library)) {
        v.cacheHit = true;
        return v;
    }
    if (!commandExists(options.compiler))
        throw CompilerNotFound(options.compiler);
    fs::create_directories(dir);
    writeFileAtomic(dir / "src.c", closure);
    std::string cmd = options.compiler + " -shared -fPIC " + options.flags;
    for (const auto& d : options.defines)
        cmd += " " + quote("-D" + d);
    const fs::path tmp = dir / ("lib.so.tmp" + std::to_string(::getpid()));
    cmd += " " + quote((dir / "src.c").string()) + " -o " + quote(tmp.string()) + " -lm";
    std::string log;
    if (shell(cmd, dir / "build.log", log) != 0) {
        fs::remove(tmp);
        throw CompileFailed(function + ": " + cmd, log);
    }
    fs::rename(tmp, v.library);

    std::string meta = "function=" + function + "\nsource=" + unit.fileName + "\nflags=" + options.flags + "\n";
    for (const auto& d : options.defines)
        meta += "define=" + d + "\n";
    meta += "key=" + v.key + "\n";
    writeFileAtomic(dir / "meta", meta);
    return v;
}

} // namespace aw
