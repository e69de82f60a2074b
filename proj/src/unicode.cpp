#include "dicttrans/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace dicttrans::unicode {

uint32_t decode_utf8(std::string_view s, size_t& pos) {
    int32_t i = static_cast<int32_t>(pos);
    int32_t len = static_cast<int32_t>(s.size());
    UChar32 cp;
    U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, len, cp);
    pos = static_cast<size_t>(i);
    return cp < 0 ? kReplacementChar : static_cast<uint32_t>(cp);
}

bool is_valid_utf8(std::string_view s) {
    int32_t i = 0;
    int32_t len = static_cast<int32_t>(s.size());
    while (i < len) {
        UChar32 cp;
        U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, len, cp);
        if (cp < 0) return false;
    }
    return true;
}

bool is_whitespace(uint32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

bool is_digit(uint32_t cp) {
    return u_charType(static_cast<UChar32>(cp)) == U_DECIMAL_DIGIT_NUMBER;
}

bool is_punctuation(uint32_t cp) {
    switch (u_charType(static_cast<UChar32>(cp))) {
        case U_DASH_PUNCTUATION:
        case U_START_PUNCTUATION:
        case U_END_PUNCTUATION:
        case U_CONNECTOR_PUNCTUATION:
        case U_OTHER_PUNCTUATION:
        case U_INITIAL_PUNCTUATION:
        case U_FINAL_PUNCTUATION:
            return true;
        default:
            return false;
    }
}

bool all_digit_or_punct(std::string_view bytes) {
    if (bytes.empty() || !is_valid_utf8(bytes)) return false;
    size_t pos = 0;
    while (pos < bytes.size()) {
        uint32_t cp = decode_utf8(bytes, pos);
        if (!is_digit(cp) && !is_punctuation(cp)) return false;
    }
    return true;
}

std::string nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = norm->normalize(in, status);
    if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
    std::string result;
    out.toUTF8String(result);
    return result;
}

std::string to_lower(std::string_view s) {
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    in.toLower();
    std::string result;
    in.toUTF8String(result);
    return result;
}

}  // namespace dicttrans::unicode
