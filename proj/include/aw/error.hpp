#pragma once

#include <stdexcept>
#include <string>

namespace aw {

/// Base of every domain error raised by the toolkit. The CLI maps these to
/// exit code 1; anything else is treated as a usage error or a bug.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int col, const std::string& expected)
        : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(col) +
                                   ": expected " + expected),
          line(line), col(col) {}
    int line;
    int col;
};

class UnsupportedConstruct : public Error {
public:
    UnsupportedConstruct(int line, const std::string& construct)
        : Error("UnsupportedConstruct",
                "line " + std::to_string(line) + ": " + construct),
          line(line) {}
    int line;
};

// Small helper for errors that carry only a message.
#define AW_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    };

AW_DEFINE_ERROR(IllegalChain)
AW_DEFINE_ERROR(UnknownAttribute)
AW_DEFINE_ERROR(ParseErrorInFragment)
AW_DEFINE_ERROR(InvalidAnchor)
AW_DEFINE_ERROR(NotADecl)
AW_DEFINE_ERROR(DuplicateName)
AW_DEFINE_ERROR(FunctionNotFound)
AW_DEFINE_ERROR(SignatureMismatch)
AW_DEFINE_ERROR(NotAStatementCall)
AW_DEFINE_ERROR(UnsupportedSignature)
AW_DEFINE_ERROR(AspectSyntaxError)
AW_DEFINE_ERROR(UnknownSelectRef)
AW_DEFINE_ERROR(UnknownAspectRef)
AW_DEFINE_ERROR(RecursionCycle)
AW_DEFINE_ERROR(AspectRuntimeError)
AW_DEFINE_ERROR(SchemaError)
AW_DEFINE_ERROR(DuplicatePoint)
AW_DEFINE_ERROR(EmptyKnowledge)
AW_DEFINE_ERROR(UnknownMetric)
AW_DEFINE_ERROR(IoError)
AW_DEFINE_ERROR(CompilerNotFound)
AW_DEFINE_ERROR(RunTimeout)
AW_DEFINE_ERROR(NonzeroExit)
AW_DEFINE_ERROR(ClosureExtractionFailed)
AW_DEFINE_ERROR(ConfigError)

#undef AW_DEFINE_ERROR

class CompileFailed : public Error {
public:
    CompileFailed(const std::string& message, std::string log)
        : Error("CompileFailed", message), log(std::move(log)) {}
    std::string log;
};

} // namespace aw
