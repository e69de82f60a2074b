#include "dicttrans/hex.hpp"

#include <stdexcept>

#include "dicttrans/unicode.hpp"

namespace dicttrans {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::string hex_encode(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xF]);
    }
    return out;
}

std::string hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::runtime_error("hex string has odd length");
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_val(hex[i]);
        int lo = hex_val(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::runtime_error("invalid hex digit in token");
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

std::string printable_bytes(std::string_view bytes) {
    if (unicode::is_valid_utf8(bytes)) {
        bool clean = true;
        for (unsigned char b : bytes) {
            if (b < 0x20 || b == 0x7F) {
                clean = false;
                break;
            }
        }
        if (clean) return std::string(bytes);
    }
    std::string out;
    for (unsigned char b : bytes) {
        if (b >= 0x20 && b < 0x7F && b != '\\') {
            out.push_back(static_cast<char>(b));
        } else {
            out += "\\x";
            out.push_back("0123456789abcdef"[b >> 4]);
            out.push_back("0123456789abcdef"[b & 0xF]);
        }
    }
    return out;
}

}  // namespace dicttrans
