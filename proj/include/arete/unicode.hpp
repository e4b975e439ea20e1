#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace arete {

inline constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes the codepoint starting at byte offset `i` and advances `i` past it.
// Malformed sequences yield U+FFFD and advance by a single byte, so decoding
// is total over arbitrary byte strings.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else { ++i; return kReplacementChar; }
    if (i + static_cast<std::size_t>(len) > s.size()) { ++i; return kReplacementChar; }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xC0) != 0x80) { ++i; return kReplacementChar; }
        cp = (cp << 6) | (b & 0x3F);
    }
    // reject overlong encodings and surrogates
    static constexpr char32_t min_for_len[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return kReplacementChar;
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::u32string to_u32(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) out.push_back(decode_utf8(s, i));
    return out;
}

inline std::string to_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) append_utf8(out, cp);
    return out;
}

inline std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0;
    for (char c : s)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

inline bool is_whitespace_cp(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Letters from the Latin, Greek, and Cyrillic blocks. Scripts outside these
// ranges are not preserved by sanitisation (the pipeline targets English and
// other Latin-script source texts).
inline bool is_letter_cp(char32_t cp) {
    if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
    if (cp >= 0xC0 && cp <= 0xFF) return cp != 0xD7 && cp != 0xF7;
    if (cp >= 0x100 && cp <= 0x24F) return true;   // Latin Extended-A/B
    if (cp >= 0x250 && cp <= 0x2AF) return true;   // IPA extensions
    if (cp >= 0x370 && cp <= 0x3FF) return true;   // Greek
    if (cp >= 0x400 && cp <= 0x4FF) return true;   // Cyrillic
    return false;
}

inline bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

namespace detail {

// ASCII equivalents for U+0100..U+017F (Latin Extended-A), lowercased.
// Digraph codepoints expand to two letters.
inline const char* latin_ext_a_fold(char32_t cp) {
    static constexpr const char* table[] = {
        "a","a","a","a","a","a","c","c","c","c","c","c","c","c","d","d",   // 0100-010F
        "d","d","e","e","e","e","e","e","e","e","e","e","g","g","g","g",   // 0110-011F
        "g","g","g","g","h","h","h","h","i","i","i","i","i","i","i","i",   // 0120-012F
        "i","i","ij","ij","j","j","k","k","k","l","l","l","l","l","l","l", // 0130-013F
        "l","l","l","n","n","n","n","n","n","n","n","n","o","o","o","o",   // 0140-014F
        "o","o","oe","oe","r","r","r","r","r","r","s","s","s","s","s","s", // 0150-015F
        "s","s","t","t","t","t","t","t","u","u","u","u","u","u","u","u",   // 0160-016F
        "u","u","u","u","w","w","y","y","y","z","z","z","z","z","z","s",   // 0170-017F
    };
    return table[cp - 0x100];
}

inline void fold_latin1_cp(std::string& out, char32_t cp) {
    switch (cp) {
        case 0xC6: case 0xE6: out += "ae"; return;           // AE ligature
        case 0xD0: case 0xF0: out += "d"; return;            // eth
        case 0xDE: case 0xFE: out += "th"; return;           // thorn
        case 0xDF: out += "ss"; return;                      // sharp s
        case 0xD8: case 0xF8: out += "o"; return;            // slashed o
        default: break;
    }
    // C0..DF block layout; '?' slots are consumed by the special cases above
    static constexpr const char bases[] = "aaaaaa?ceeeeiiii?nooooo??uuuuy?y";
    if (cp >= 0xC0 && cp <= 0xDF) { out.push_back(bases[cp - 0xC0]); return; }
    if (cp >= 0xE0 && cp <= 0xFF) { out.push_back(bases[cp - 0xE0]); return; }
    out.push_back('?');
}

} // namespace detail

// Case/accent folding used for fuzzy locality comparison: ASCII is lowercased
// and accented Latin letters collapse to their base letters. Codepoints
// outside the handled ranges pass through unchanged.
inline std::string fold_for_match(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const char32_t cp = decode_utf8(s, i);
        if (cp >= 'A' && cp <= 'Z') {
            out.push_back(static_cast<char>(cp - 'A' + 'a'));
        } else if ((cp >= 0xC0 && cp <= 0xFF) && cp != 0xD7 && cp != 0xF7) {
            detail::fold_latin1_cp(out, cp);
        } else if (cp >= 0x100 && cp <= 0x17F) {
            out += detail::latin_ext_a_fold(cp);
        } else {
            append_utf8(out, cp);
        }
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (static_cast<unsigned char>(s[b]) <= 0x20)) ++b;
    while (e > b && (static_cast<unsigned char>(s[e - 1]) <= 0x20)) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    std::size_t i = 0;
    while (i < s.size()) {
        const char32_t cp = decode_utf8(s, i);
        if (is_whitespace_cp(cp)) {
            if (!in_space && !out.empty()) out.push_back(' ');
            in_space = true;
        } else {
            append_utf8(out, cp);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

} // namespace arete
