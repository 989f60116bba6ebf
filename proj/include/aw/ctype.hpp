#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aw {

struct PointerLevel {
    bool isConst = false;
    bool isVolatile = false;
    bool isRestrict = false;

    friend bool operator==(const PointerLevel&, const PointerLevel&) = default;
};

/// A C object type split into its base (specifier words) and declarator
/// suffixes. Function and function-pointer types are outside the subset.
///
/// Canonical rendering: qualifiers first (`const volatile`), then the base
/// words with signedness and size modifiers ordered first, then one `*` per
/// indirection level glued to the left (`double* const*`), then array
/// extents (`float[8]`).
struct CType {
    bool isConst = false;
    bool isVolatile = false;
    std::string base; // "double", "unsigned long", "struct node", "real"
    std::vector<PointerLevel> pointers;
    std::vector<std::string> arrays; // extent text, "" for []

    bool isScalar() const noexcept { return pointers.empty() && arrays.empty(); }
    bool isArithmetic() const noexcept; // integer or floating scalar

    friend bool operator==(const CType&, const CType&) = default;
};

/// Parses a canonical or source-form type name ("double *", "const double* const[4]").
/// Throws SyntaxError when the text is not a type name in the subset.
CType parseType(std::string_view text);

std::string render(const CType& type);

/// Normalizes the order of base words: "long unsigned int" -> "unsigned long int".
std::string canonicalBase(std::string_view words);

/// Replaces the base of `declared` by `newBase` when it equals `oldBase`,
/// keeping qualifiers, indirections and extents. Otherwise returns it as is.
CType changeType(const CType& declared, std::string_view oldBase, std::string_view newBase);

} // namespace aw
