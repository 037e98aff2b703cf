#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conseca/result.hpp"

namespace conseca {

struct PatternError {
    std::string reason;
    std::size_t position = 0;  // code-point index into the pattern source
};

namespace rex {
struct Program;  // compiled Thompson NFA, opaque
}

/// A compiled pattern in the restricted regular-expression dialect.
///
/// The dialect covers: literals, `.` (any character except newline),
/// character classes `[...]` / `[^...]` with ranges, anchors `^` `$`,
/// greedy quantifiers `* + ? {m} {m,} {m,n}`, alternation `|`, grouping
/// `(...)` (non-capturing), the escapes `\d \w \s \D \W \S`, and
/// backslash-escaped metacharacters. Backreferences, lookaround, and
/// lazy/possessive quantifiers are rejected at compile time, so the
/// dialect stays a true regular language and matching runs in
/// O(len(input) * size(pattern)) via NFA simulation — no backtracking.
///
/// Matching operates on Unicode scalar values; input is decoded as UTF-8
/// (invalid bytes are mapped to sentinel code points rather than
/// rejected, so matching is total over arbitrary byte strings).
///
/// Two strictness divergences from PCRE, both deliberate: `{` and `}`
/// must be escaped when not forming a quantifier, and `(?...)` group
/// flags are rejected outright.
class Pattern {
public:
    Pattern() = default;

    const std::string& source() const { return source_; }

    /// Unanchored search: true iff the pattern matches anywhere in text.
    bool search(std::string_view text) const;

    /// True iff the pattern matches the whole of text.
    bool fullmatch(std::string_view text) const;

    /// Byte offset one past the longest match that starts at byte_pos,
    /// or nullopt when no match starts there. Used by the simulated sed.
    std::optional<std::size_t> match_end_at(std::string_view text, std::size_t byte_pos) const;

    std::size_t state_count() const;

private:
    friend Result<Pattern, PatternError> compile_pattern(std::string_view src);

    std::string source_;
    std::shared_ptr<const rex::Program> program_;
};

Result<Pattern, PatternError> compile_pattern(std::string_view src);

namespace rex {
/// UTF-8 decode with a total fallback: bytes that do not form a valid
/// sequence come back as 0xDC00+byte, which valid UTF-8 can never
/// produce. byte_offsets, when given, receives the starting byte offset
/// of each code point plus one trailing entry equal to input.size().
std::vector<uint32_t> decode_utf8(std::string_view input, std::vector<std::size_t>* byte_offsets = nullptr);
}  // namespace rex

}  // namespace conseca
