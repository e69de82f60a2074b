#pragma once

#include <string>
#include <string_view>

namespace dicttrans {

std::string hex_encode(std::string_view bytes);

// Throws on odd length or non-hex characters.
std::string hex_decode(std::string_view hex);

// Printable rendering of raw token bytes for reports: valid UTF-8 shown as-is
// with control characters escaped, other bytes as \xNN.
std::string printable_bytes(std::string_view bytes);

}  // namespace dicttrans
