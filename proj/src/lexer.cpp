#include "aw/lexer.hpp"

#include "aw/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace aw {

namespace {

constexpr std::array kKeywords = {
    "auto",     "break",    "case",     "char",   "const",    "continue", "default",
    "do",       "double",   "else",     "enum",   "extern",   "float",    "for",
    "goto",     "if",       "inline",   "int",    "long",     "register", "restrict",
    "return",   "short",    "signed",   "sizeof", "static",   "struct",   "switch",
    "typedef",  "union",    "unsigned", "void",   "volatile", "while",    "_Bool",
    "_Complex", "_Imaginary"};

constexpr std::array kTypeKeywords = {
    "void",  "char",   "short",  "int",      "long",     "float",    "double", "signed",
    "unsigned", "_Bool", "_Complex", "struct", "union", "enum", "const", "volatile",
    "restrict"};

constexpr std::array kStorage = {"static", "extern", "register", "auto", "inline", "typedef"};

constexpr std::array kQualifiers = {"const", "volatile", "restrict"};

// Longest first so that greedy matching works.
constexpr std::array kPunctuators = {
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||",  "*=",  "/=",  "%=", "+=", "-=", "&=", "^=", "|=", "##", "[",  "]",  "(",
    ")",   "{",   "}",   ".",  "&",  "*",  "+",  "-",  "~",  "!",  "/",  "%",  "<",
    ">",   "^",   "|",   "?",  ":",  ";",  "=",  ",",  "#"};

template <std::size_t N>
bool contains(const std::array<const char*, N>& table, std::string_view word) {
    return std::any_of(table.begin(), table.end(),
                       [&](const char* k) { return word == k; });
}

bool identStart(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool identChar(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        while (pos_ < src_.size()) {
            const std::size_t start = pos_;
            const int line = line_, col = col_;
            const TokenKind kind = scanOne();
            Token t;
            t.kind = kind;
            t.text = std::string(src_.substr(start, pos_ - start));
            t.line = line;
            t.col = col;
            if (kind == TokenKind::Identifier && isKeyword(t.text))
                t.kind = TokenKind::Keyword;
            out_.push_back(std::move(t));
        }
        return std::move(out_);
    }

private:
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    // A '#' is a directive only when it is the first non-blank on its line.
    bool atLineStart() const {
        if (out_.empty())
            return true;
        for (auto it = out_.rbegin(); it != out_.rend(); ++it) {
            if (it->kind != TokenKind::Whitespace)
                return false;
            if (it->text.find('\n') != std::string::npos)
                return true;
        }
        return true;
    }

    TokenKind scanOne() {
        const char c = peek();
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
            (c == '\\' && peek(1) == '\n')) {
            while (true) {
                const char d = peek();
                if (d == ' ' || d == '\t' || d == '\n' || d == '\r' || d == '\f' || d == '\v')
                    advance();
                else if (d == '\\' && peek(1) == '\n')
                    advance(2);
                else
                    break;
            }
            return TokenKind::Whitespace;
        }
        if (c == '/' && peek(1) == '/') {
            while (pos_ < src_.size() && peek() != '\n')
                advance();
            return TokenKind::Comment;
        }
        if (c == '/' && peek(1) == '*') {
            const int line = line_, col = col_;
            advance(2);
            while (!(peek() == '*' && peek(1) == '/')) {
                if (pos_ >= src_.size())
                    throw SyntaxError(line, col, "end of comment '*/'");
                advance();
            }
            advance(2);
            return TokenKind::Comment;
        }
        if (c == '#' && atLineStart())
            return scanDirective();
        if (identStart(c)) {
            // String/char prefixes: L"..", u8"..", u'..', U".."
            std::size_t n = 0;
            while (identChar(peek(n)))
                ++n;
            const std::string_view word = src_.substr(pos_, n);
            if ((word == "L" || word == "u" || word == "U" || word == "u8") &&
                (peek(n) == '"' || peek(n) == '\'')) {
                advance(n);
                scanQuoted(peek());
                return TokenKind::Literal;
            }
            advance(n);
            return TokenKind::Identifier;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            scanNumber();
            return TokenKind::Literal;
        }
        if (c == '"' || c == '\'') {
            scanQuoted(c);
            return TokenKind::Literal;
        }
        for (const char* p : kPunctuators) {
            const std::string_view punct(p);
            if (src_.substr(pos_, punct.size()) == punct) {
                advance(punct.size());
                return TokenKind::Punctuator;
            }
        }
        throw SyntaxError(line_, col_, "a C token");
    }

    TokenKind scanDirective() {
        const std::size_t start = pos_;
        while (pos_ < src_.size()) {
            const char d = peek();
            if (d == '\\' && peek(1) == '\n') {
                advance(2);
                continue;
            }
            if (d == '\n')
                break;
            // A block comment may legally span lines inside a directive.
            if (d == '/' && peek(1) == '*') {
                advance(2);
                while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/'))
                    advance();
                advance(2);
                continue;
            }
            advance();
        }
        std::string_view body = src_.substr(start + 1, pos_ - start - 1);
        const auto first = body.find_first_not_of(" \t");
        if (first != std::string_view::npos && body.substr(first, 6) == "pragma" &&
            (body.size() == first + 6 || !identChar(body[first + 6])))
            return TokenKind::PragmaText;
        return TokenKind::Directive;
    }

    void scanQuoted(char quote) {
        const int line = line_, col = col_;
        advance(); // opening quote
        while (true) {
            const char d = peek();
            if (pos_ >= src_.size() || d == '\n')
                throw SyntaxError(line, col, std::string("closing ") + quote);
            if (d == '\\') {
                advance(2);
                continue;
            }
            advance();
            if (d == quote)
                break;
        }
    }

    // pp-number: digits, letters, '.', and sign after an exponent letter.
    void scanNumber() {
        while (true) {
            const char d = peek();
            if (identChar(d) || d == '.') {
                const char e = d;
                advance();
                if ((e == 'e' || e == 'E' || e == 'p' || e == 'P') &&
                    (peek() == '+' || peek() == '-'))
                    advance();
                continue;
            }
            break;
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::vector<Token> out_;
};

} // namespace

bool isKeyword(std::string_view word) { return contains(kKeywords, word); }
bool isTypeKeyword(std::string_view word) { return contains(kTypeKeywords, word); }
bool isStorageClass(std::string_view word) { return contains(kStorage, word); }
bool isQualifier(std::string_view word) { return contains(kQualifiers, word); }

std::vector<Token> lex(std::string_view source) { return Lexer(source).run(); }

bool isFloatingLiteral(std::string_view text) {
    if (text.empty() || !(std::isdigit(static_cast<unsigned char>(text[0])) || text[0] == '.'))
        return false;
    const bool hex = text.size() > 1 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X');
    if (hex)
        return text.find_first_of("pP") != std::string_view::npos;
    return text.find_first_of(".eE") != std::string_view::npos;
}

} // namespace aw
