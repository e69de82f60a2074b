#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dicttrans::unicode {

constexpr uint32_t kReplacementChar = 0xFFFD;

// Decodes one UTF-8 codepoint starting at `pos`. Advances `pos` past the
// sequence (at least one byte, also on malformed input, where the result is
// U+FFFD).
uint32_t decode_utf8(std::string_view s, size_t& pos);

// True if the whole string is well-formed UTF-8.
bool is_valid_utf8(std::string_view s);

bool is_whitespace(uint32_t cp);
bool is_digit(uint32_t cp);        // category Nd
bool is_punctuation(uint32_t cp);  // categories P*

// True if `bytes` decodes to a non-empty sequence of codepoints that are all
// digits or punctuation.
bool all_digit_or_punct(std::string_view bytes);

// Canonical composition (NFC).
std::string nfc(std::string_view s);

// Per-codepoint lowercasing.
std::string to_lower(std::string_view s);

}  // namespace dicttrans::unicode
