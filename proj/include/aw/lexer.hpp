#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aw {

enum class TokenKind {
    Identifier,
    Keyword,
    Literal,
    Punctuator,
    PragmaText, // a whole `#pragma ...` line
    Directive,  // any other preprocessor line, kept opaque
    Comment,
    Whitespace,
};

/// One lexeme with its exact source bytes. Tokens synthesized by the
/// weaver carry line 0 / col 0.
struct Token {
    TokenKind kind = TokenKind::Whitespace;
    std::string text;
    int line = 0;
    int col = 0;

    bool isTrivia() const noexcept {
        return kind == TokenKind::Whitespace || kind == TokenKind::Comment;
    }
    bool is(std::string_view s) const noexcept {
        return !isTrivia() && text == s;
    }
};

bool isKeyword(std::string_view word);
bool isTypeKeyword(std::string_view word); // int, double, struct, const, ...
bool isStorageClass(std::string_view word);
bool isQualifier(std::string_view word);

/// Splits `source` into tokens. Concatenating the texts of the result
/// reproduces `source` exactly. Throws SyntaxError on unterminated comments
/// and literals.
std::vector<Token> lex(std::string_view source);

/// True for a floating constant (has a '.', or a decimal exponent).
bool isFloatingLiteral(std::string_view text);

} // namespace aw
