#include "aw/ctype.hpp"

#include "aw/error.hpp"
#include "aw/lexer.hpp"

#include <algorithm>

namespace aw {

namespace {

int wordRank(std::string_view w) {
    if (w == "signed" || w == "unsigned")
        return 0;
    if (w == "short" || w == "long")
        return 1;
    if (w == "_Complex")
        return 3;
    return 2;
}

std::vector<std::string> splitWords(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n') {
            if (!cur.empty())
                words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        words.push_back(std::move(cur));
    return words;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty())
            out += ' ';
        out += w;
    }
    return out;
}

} // namespace

std::string canonicalBase(std::string_view text) {
    auto words = splitWords(text);
    if (!words.empty() && (words[0] == "struct" || words[0] == "union" || words[0] == "enum"))
        return join(words);
    std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
        return wordRank(a) < wordRank(b);
    });
    return join(words);
}

bool CType::isArithmetic() const noexcept {
    if (!isScalar())
        return false;
    static constexpr std::string_view kArith[] = {"char", "short", "int", "long", "float",
                                                  "double", "signed", "unsigned", "_Bool"};
    const auto words = splitWords(base);
    if (words.empty())
        return false;
    return std::all_of(words.begin(), words.end(), [](const std::string& w) {
        return std::find(std::begin(kArith), std::end(kArith), w) != std::end(kArith);
    });
}

CType parseType(std::string_view text) {
    std::vector<Token> toks;
    for (auto& t : lex(text))
        if (!t.isTrivia())
            toks.push_back(std::move(t));

    CType type;
    std::vector<std::string> baseWords;
    std::size_t i = 0;
    bool tagged = false;
    for (; i < toks.size(); ++i) {
        const std::string& w = toks[i].text;
        if (w == "const") {
            type.isConst = true;
        } else if (w == "volatile") {
            type.isVolatile = true;
        } else if (w == "struct" || w == "union" || w == "enum") {
            if (i + 1 >= toks.size() || toks[i + 1].kind != TokenKind::Identifier)
                throw SyntaxError(1, 1, "tag name after " + w);
            baseWords = {w, toks[i + 1].text};
            tagged = true;
            ++i;
        } else if (toks[i].kind == TokenKind::Keyword || toks[i].kind == TokenKind::Identifier) {
            if (tagged)
                throw SyntaxError(1, 1, "end of type after tagged name");
            baseWords.push_back(w);
        } else {
            break;
        }
    }
    if (baseWords.empty())
        throw SyntaxError(1, 1, "a base type in '" + std::string(text) + "'");
    type.base = canonicalBase(join(baseWords));

    while (i < toks.size() && toks[i].text == "*") {
        PointerLevel level;
        ++i;
        for (; i < toks.size(); ++i) {
            if (toks[i].text == "const")
                level.isConst = true;
            else if (toks[i].text == "volatile")
                level.isVolatile = true;
            else if (toks[i].text == "restrict")
                level.isRestrict = true;
            else
                break;
        }
        type.pointers.push_back(level);
    }
    while (i < toks.size() && toks[i].text == "[") {
        ++i;
        std::string extent;
        while (i < toks.size() && toks[i].text != "]")
            extent += toks[i++].text;
        if (i >= toks.size())
            throw SyntaxError(1, 1, "']'");
        ++i;
        type.arrays.push_back(extent);
    }
    if (i != toks.size())
        throw SyntaxError(1, 1, "end of type, got '" + toks[i].text + "'");
    return type;
}

std::string render(const CType& type) {
    std::string out;
    if (type.isConst)
        out += "const ";
    if (type.isVolatile)
        out += "volatile ";
    out += type.base;
    for (const auto& level : type.pointers) {
        out += '*';
        if (level.isConst)
            out += " const";
        if (level.isVolatile)
            out += " volatile";
        if (level.isRestrict)
            out += " restrict";
    }
    for (const auto& extent : type.arrays)
        out += "[" + extent + "]";
    return out;
}

CType changeType(const CType& declared, std::string_view oldBase, std::string_view newBase) {
    if (declared.base != canonicalBase(oldBase))
        return declared;
    CType changed = declared;
    changed.base = canonicalBase(newBase);
    return changed;
}

} // namespace aw
