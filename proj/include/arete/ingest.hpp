#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arete/error.hpp"
#include "arete/unicode.hpp"

namespace arete {

struct Document {
    std::string id;
    std::filesystem::path source_path;
    std::string raw_text;
    std::string sanitized_text;
    int page_count = 0;  // 0 when unknown
};

struct ChunkRef {
    std::string document_id;
    int chunk_index = 0;

    bool operator==(const ChunkRef&) const = default;
};

struct Chunk {
    std::string document_id;
    int index = 0;
    std::string text;
    int token_estimate = 0;
};

struct IngestOptions {
    // External command producing plain text on stdout for .pdf input.
    // "{}" is replaced by the file path; if absent the path is appended.
    std::string pdf_extractor_cmd = "pdftotext {} -";
};

inline constexpr int kDefaultTokenBudget = 3000;

// Characters-per-token heuristic shared with the request builder.
inline int estimate_tokens(std::string_view text) {
    const std::size_t cp = codepoint_count(text);
    return static_cast<int>((cp + 3) / 4);
}

namespace detail {

// Punctuation kept verbatim by sanitisation; everything here is either needed
// for coordinate strings (degree/minute/second marks) or common in locality
// text.
inline bool is_whitelisted_punct(char32_t cp) {
    switch (cp) {
        case 0x00B0:  // degree sign
        case 0x2032:  // prime
        case 0x2033:  // double prime
        case '\'': case '"': case '.': case ',': case ';': case ':':
        case '-':
        case 0x2013:  // en dash
        case '(': case ')': case '/':
            return true;
        default:
            return false;
    }
}

} // namespace detail

// Replaces every codepoint outside {letters, digits, whitespace, whitelisted
// punctuation} with a space, and "|" with "/" so the LLM table delimiter can
// never collide with source text. Total and idempotent.
inline std::string sanitize_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        const char32_t cp = decode_utf8(raw, i);
        if (cp == '|') {
            out.push_back('/');
        } else if (is_letter_cp(cp) || is_ascii_digit(cp) || is_whitespace_cp(cp) ||
                   detail::is_whitelisted_punct(cp)) {
            append_utf8(out, cp);
        } else {
            out.push_back(' ');
        }
    }
    return out;
}

namespace detail {

// Byte offsets where a chunk may be cut, in preference order. Offsets always
// tile the input exactly; delimiters stay attached to the preceding piece.
inline std::vector<std::size_t> paragraph_boundaries(std::string_view text) {
    std::vector<std::size_t> cuts;
    std::size_t i = 0;
    std::size_t run_start = 0;
    int newlines = 0;
    bool in_ws = false;
    while (i < text.size()) {
        const std::size_t at = i;
        const char32_t cp = decode_utf8(text, i);
        if (is_whitespace_cp(cp)) {
            if (!in_ws) {
                in_ws = true;
                run_start = at;
                newlines = 0;
            }
            if (cp == '\n') ++newlines;
        } else {
            if (in_ws && newlines >= 2 && run_start > 0) cuts.push_back(at);
            in_ws = false;
        }
    }
    cuts.push_back(text.size());
    return cuts;
}

inline std::vector<std::size_t> sentence_boundaries(std::string_view text) {
    std::vector<std::size_t> cuts;
    std::size_t i = 0;
    bool after_terminator = false;
    bool in_ws = false;
    while (i < text.size()) {
        const std::size_t at = i;
        const char32_t cp = decode_utf8(text, i);
        if (is_whitespace_cp(cp)) {
            in_ws = true;
        } else {
            if (in_ws && after_terminator && at > 0) cuts.push_back(at);
            in_ws = false;
            after_terminator = (cp == '.' || cp == '!' || cp == '?');
        }
    }
    cuts.push_back(text.size());
    return cuts;
}

// Splits [begin, end) into pieces of at most max_cp codepoints each.
inline void hard_slices(std::string_view text, std::size_t begin, std::size_t end,
                        std::size_t max_cp, std::vector<std::size_t>& out_cuts) {
    std::size_t i = begin;
    std::size_t cp_count = 0;
    while (i < end) {
        decode_utf8(text, i);
        if (++cp_count == max_cp && i < end) {
            out_cuts.push_back(i);
            cp_count = 0;
        }
    }
    out_cuts.push_back(end);
}

} // namespace detail

// Greedy packing of paragraph pieces into budget-sized chunks; oversized
// paragraphs fall back to sentence pieces, oversized sentences to hard cuts.
// Chunks are exact contiguous slices of the input, so concatenating them in
// order reproduces it byte for byte.
inline std::vector<Chunk> chunk_text(std::string_view text, int token_budget,
                                     std::string_view document_id = "") {
    if (token_budget < 64)
        throw Error(ErrorCode::invalid_argument,
                    "token budget must be at least 64");
    if (trim(text).empty())
        throw Error(ErrorCode::empty_document, "document contains no text");

    const std::size_t max_cp = static_cast<std::size_t>(token_budget) * 4;

    // Final cut points (byte offsets), computed per preference tier.
    std::vector<std::size_t> piece_cuts;
    std::size_t prev = 0;
    for (std::size_t para_cut : detail::paragraph_boundaries(text)) {
        if (codepoint_count(text.substr(prev, para_cut - prev)) <= max_cp) {
            piece_cuts.push_back(para_cut);
        } else {
            const auto sentence_cuts =
                detail::sentence_boundaries(text.substr(prev, para_cut - prev));
            std::size_t sent_prev = prev;
            for (std::size_t rel_cut : sentence_cuts) {
                const std::size_t sent_cut = prev + rel_cut;
                if (codepoint_count(text.substr(sent_prev, sent_cut - sent_prev)) <= max_cp) {
                    piece_cuts.push_back(sent_cut);
                } else {
                    detail::hard_slices(text, sent_prev, sent_cut, max_cp, piece_cuts);
                }
                sent_prev = sent_cut;
            }
        }
        prev = para_cut;
    }

    std::vector<Chunk> chunks;
    std::size_t chunk_begin = 0;
    std::size_t chunk_cp = 0;
    auto flush = [&](std::size_t end) {
        if (end == chunk_begin) return;
        Chunk c;
        c.document_id = std::string(document_id);
        c.index = static_cast<int>(chunks.size());
        c.text = std::string(text.substr(chunk_begin, end - chunk_begin));
        c.token_estimate = estimate_tokens(c.text);
        chunks.push_back(std::move(c));
        chunk_begin = end;
        chunk_cp = 0;
    };
    std::size_t piece_begin = 0;
    for (std::size_t cut : piece_cuts) {
        const std::size_t piece_cp = codepoint_count(text.substr(piece_begin, cut - piece_begin));
        if (chunk_cp > 0 && chunk_cp + piece_cp > max_cp) flush(piece_begin);
        chunk_cp += piece_cp;
        piece_begin = cut;
    }
    flush(text.size());
    return chunks;
}

inline std::vector<Chunk> chunk_document(const Document& doc,
                                         int token_budget = kDefaultTokenBudget) {
    return chunk_text(doc.sanitized_text, token_budget, doc.id);
}

namespace detail {

inline std::string run_extractor(const std::string& cmd_template,
                                 const std::filesystem::path& path) {
    std::string cmd = cmd_template;
    const std::string quoted = "'" + path.string() + "'";
    const auto pos = cmd.find("{}");
    if (pos != std::string::npos)
        cmd.replace(pos, 2, quoted);
    else
        cmd += " " + quoted;
    cmd += " 2>/dev/null";

    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe)
        throw Error(ErrorCode::pdf_no_text_layer,
                    "failed to run PDF extractor: " + cmd_template);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe.get())) > 0)
        out.append(buf.data(), n);
    return out;
}

// Re-encode as valid UTF-8, mapping undecodable bytes to U+FFFD.
inline std::string lossy_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) append_utf8(out, decode_utf8(bytes, i));
    return out;
}

inline std::string document_id_for(const std::filesystem::path& path) {
    std::string stem = path.stem().string();
    std::string id;
    for (char c : stem) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '_' || c == '-';
        id.push_back(keep ? c : '_');
    }
    return id.empty() ? "doc" : id;
}

} // namespace detail

// Loads a .txt file directly or a .pdf via the configured extractor command.
// OCR is deliberately not performed; a text-free PDF is reported so the user
// can pre-process it.
inline Document load_document(const std::filesystem::path& path,
                              const IngestOptions& options = {}) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::file_not_found, "no such file: " + path.string());
    const std::string ext = ascii_lower(path.extension().string());
    if (ext != ".txt" && ext != ".pdf")
        throw Error(ErrorCode::unsupported_format,
                    "unsupported input format '" + ext + "' (expected .txt or .pdf): " +
                        path.string());

    Document doc;
    doc.id = detail::document_id_for(path);
    doc.source_path = path;
    if (ext == ".txt") {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw Error(ErrorCode::io_error, "cannot read file: " + path.string());
        std::ostringstream buf;
        buf << is.rdbuf();
        doc.raw_text = detail::lossy_utf8(buf.str());
    } else {
        const std::string out = detail::run_extractor(options.pdf_extractor_cmd, path);
        if (trim(out).empty())
            throw Error(ErrorCode::pdf_no_text_layer,
                        "no embedded text layer in " + path.string() +
                            "; run OCR first or set pdf-extractor-cmd");
        doc.raw_text = detail::lossy_utf8(out);
        const auto pages = std::count(doc.raw_text.begin(), doc.raw_text.end(), '\f');
        doc.page_count = pages > 0 ? static_cast<int>(pages) + 1 : 0;
    }
    doc.sanitized_text = sanitize_text(doc.raw_text);
    return doc;
}

} // namespace arete
