#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dicttrans::testing {

inline void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Random UTF-8 string of up to max_codepoints scalar values, mixing ASCII,
// Latin/Greek/Cyrillic, CJK, and astral codepoints. Surrogates excluded.
inline std::string random_utf8(std::mt19937& rng, size_t max_codepoints) {
    std::uniform_int_distribution<size_t> len_dist(0, max_codepoints);
    std::uniform_int_distribution<int> bucket(0, 9);
    std::string out;
    size_t n = len_dist(rng);
    for (size_t i = 0; i < n; ++i) {
        uint32_t cp;
        switch (bucket(rng)) {
            case 0:
            case 1:
            case 2:
            case 3:
                cp = std::uniform_int_distribution<uint32_t>(0x20, 0x7E)(rng);
                break;
            case 4:
                cp = std::uniform_int_distribution<uint32_t>(0x01, 0x1F)(rng);
                break;
            case 5:
                cp = std::uniform_int_distribution<uint32_t>(0xA0, 0x4FF)(rng);
                break;
            case 6:
                cp = std::uniform_int_distribution<uint32_t>(0x4E00, 0x9FFF)(rng);
                break;
            case 7:
                cp = std::uniform_int_distribution<uint32_t>(0x2000, 0x206F)(rng);
                break;
            case 8:
                cp = std::uniform_int_distribution<uint32_t>(0x10000, 0x1FFFF)(rng);
                break;
            default:
                do {
                    cp = std::uniform_int_distribution<uint32_t>(0x800, 0xFFFD)(rng);
                } while (cp >= 0xD800 && cp <= 0xDFFF);
                break;
        }
        append_utf8(out, cp);
    }
    return out;
}

}  // namespace dicttrans::testing
