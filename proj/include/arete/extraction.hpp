#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "arete/csv.hpp"
#include "arete/error.hpp"
#include "arete/ingest.hpp"
#include "arete/occurrence.hpp"
#include "arete/unicode.hpp"

namespace arete {

// One row of the model's reply table, cells trimmed, before any
// interpretation.
struct RawRow {
    std::string species_cell;
    std::string location_cell;
    std::string coordinates_cell;
    ChunkRef source;
};

struct ParseStats {
    int skipped_rows = 0;           // wrong cell count
    int dropped_rows = 0;           // empty species or no location/coordinate
    int unparsed_coordinates = 0;   // cell kept as locality-only record
    int invalid_coordinates = 0;    // parsed but out of range
    int hemisphere_conflicts = 0;   // sign contradicted the hemisphere letter
    int duplicate_rows = 0;

    ParseStats& operator+=(const ParseStats& o) {
        skipped_rows += o.skipped_rows;
        dropped_rows += o.dropped_rows;
        unparsed_coordinates += o.unparsed_coordinates;
        invalid_coordinates += o.invalid_coordinates;
        hemisphere_conflicts += o.hemisphere_conflicts;
        duplicate_rows += o.duplicate_rows;
        return *this;
    }
};

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line(text.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

inline bool is_separator_cells(const std::vector<std::string>& cells) {
    for (const auto& c : cells) {
        if (c.empty()) return false;
        for (char ch : c)
            if (ch != '-' && ch != ':') return false;
    }
    return true;
}

inline bool is_header_cells(const std::vector<std::string>& cells) {
    for (const auto& c : cells) {
        const std::string low = ascii_lower(c);
        if (low == "species" || low == "location" || low == "coordinates")
            return true;
    }
    return false;
}

} // namespace detail

// Pulls the three-column table out of a model reply. Lines with at least two
// "|" count as candidate rows; outer delimiters are stripped, header and
// markdown separator rows dropped, and anything that does not trim down to
// exactly three cells is skipped (counted in stats).
inline std::vector<RawRow> parse_response_table(std::string_view text,
                                                const ChunkRef& source,
                                                ParseStats* stats = nullptr) {
    std::vector<RawRow> rows;
    int skipped = 0;
    for (const auto& raw_line : detail::split_lines(text)) {
        std::string line = trim(raw_line);
        if (std::count(line.begin(), line.end(), '|') < 2) continue;
        if (!line.empty() && line.front() == '|') line.erase(line.begin());
        if (!line.empty() && line.back() == '|') line.pop_back();
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            auto bar = line.find('|', start);
            if (bar == std::string::npos) {
                cells.push_back(trim(line.substr(start)));
                break;
            }
            cells.push_back(trim(line.substr(start, bar - start)));
            start = bar + 1;
        }
        if (detail::is_separator_cells(cells)) continue;
        if (detail::is_header_cells(cells)) continue;
        if (cells.size() != 3) {
            ++skipped;
            continue;
        }
        rows.push_back(RawRow{cells[0], cells[1], cells[2], source});
    }
    if (stats) stats->skipped_rows += skipped;
    if (rows.empty())
        throw Error(ErrorCode::no_table_found,
                    "reply contains no parseable table rows");
    return rows;
}

namespace detail {

inline void skip_spaces(std::u32string_view& s) {
    while (!s.empty() && is_whitespace_cp(s.front())) s.remove_prefix(1);
}

// Reads an unsigned decimal number (digits, optional fraction); false when the
// view does not start with one.
inline bool read_number(std::u32string_view& s, double& out) {
    skip_spaces(s);
    std::string ascii;
    std::size_t i = 0;
    while (i < s.size() && s[i] >= U'0' && s[i] <= U'9')
        ascii.push_back(static_cast<char>(s[i++]));
    if (i < s.size() && s[i] == U'.') {
        ascii.push_back('.');
        ++i;
        while (i < s.size() && s[i] >= U'0' && s[i] <= U'9')
            ascii.push_back(static_cast<char>(s[i++]));
    }
    if (ascii.empty() || ascii == ".") return false;
    const auto parsed = csv::parse_double(ascii);
    if (!parsed) return false;
    s.remove_prefix(i);
    out = *parsed;
    return true;
}

// hemisphere letter for the axis: +1 north/east, -1 south/west, 0 not one
inline int hemisphere_of(char32_t c, bool is_latitude) {
    switch (c) {
        case U'N': case U'n': return is_latitude ? 1 : 0;
        case U'S': case U's': return is_latitude ? -1 : 0;
        case U'E': case U'e': return is_latitude ? 0 : 1;
        case U'W': case U'w': return is_latitude ? 0 : -1;
        default: return 0;
    }
}

// Parses one coordinate component: plain signed decimal, or degrees with
// optional minutes and seconds, with an optional hemisphere letter at either
// end. Returns absent when the text does not fit the grammar.
inline std::optional<double> parse_component(std::u32string_view s,
                                             bool is_latitude,
                                             ParseStats* stats) {
    skip_spaces(s);
    while (!s.empty() && is_whitespace_cp(s.back())) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;

    int hemisphere = 0;
    if (int h = hemisphere_of(s.front(), is_latitude); h != 0) {
        hemisphere = h;
        s.remove_prefix(1);
    } else if (int t = hemisphere_of(s.back(), is_latitude); t != 0) {
        hemisphere = t;
        s.remove_suffix(1);
    }
    skip_spaces(s);
    while (!s.empty() && is_whitespace_cp(s.back())) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;

    bool negative = false;
    if (s.front() == U'-' || s.front() == U'+') {
        negative = s.front() == U'-';
        s.remove_prefix(1);
    }

    double degrees = 0;
    if (!read_number(s, degrees)) return std::nullopt;
    double value = degrees;
    skip_spaces(s);
    if (!s.empty()) {
        if (s.front() != U'°') return std::nullopt;  // degree sign
        s.remove_prefix(1);
        skip_spaces(s);
        if (!s.empty()) {
            double minutes = 0;
            if (!read_number(s, minutes)) return std::nullopt;
            if (s.empty() || (s.front() != U'′' && s.front() != U'\''))
                return std::nullopt;
            s.remove_prefix(1);
            if (minutes >= 60) return std::nullopt;
            value += minutes / 60.0;
            skip_spaces(s);
            if (!s.empty()) {
                double seconds = 0;
                if (!read_number(s, seconds)) return std::nullopt;
                if (s.empty() || (s.front() != U'″' && s.front() != U'"'))
                    return std::nullopt;
                s.remove_prefix(1);
                if (seconds >= 60) return std::nullopt;
                value += seconds / 3600.0;
                skip_spaces(s);
                if (!s.empty()) return std::nullopt;
            }
        }
    }

    if (hemisphere != 0) {
        if (negative && hemisphere > 0 && stats) ++stats->hemisphere_conflicts;
        return hemisphere * value;
    }
    return negative ? -value : value;
}

inline bool is_missing_marker(std::string_view trimmed) {
    const std::string low = ascii_lower(std::string(trimmed));
    return low.empty() || low == "na" || low == "n/a" || low == "none" ||
           low == "-" || low == "–";
}

} // namespace detail

// Interprets a Coordinates cell. Accepts "lat, lon" (comma or semicolon
// separated) where each side is a signed decimal, a decimal with hemisphere
// letter, or a ddd°mm'ss" sequence. Empty or unrecognized cells yield absent;
// values that parse but leave the valid range throw.
inline std::optional<Coordinate> parse_coordinates(std::string_view cell,
                                                   ParseStats* stats = nullptr) {
    const std::string trimmed = trim(cell);
    if (detail::is_missing_marker(trimmed)) return std::nullopt;

    const std::u32string wide = to_u32(trimmed);
    auto split = wide.find(U',');
    if (split == std::u32string::npos) split = wide.find(U';');
    if (split == std::u32string::npos) return std::nullopt;

    const auto lat = detail::parse_component(
        std::u32string_view(wide).substr(0, split), true, stats);
    const auto lon = detail::parse_component(
        std::u32string_view(wide).substr(split + 1), false, stats);
    if (!lat || !lon) return std::nullopt;
    if (!(std::abs(*lat) <= 90.0))
        throw Error(ErrorCode::out_of_range,
                    "latitude out of range in \"" + trimmed + "\"");
    if (!(std::abs(*lon) <= 180.0))
        throw Error(ErrorCode::out_of_range,
                    "longitude out of range in \"" + trimmed + "\"");
    return make_coordinate(*lat, *lon);
}

// Binomial cleanup: collapse whitespace, capitalize the genus, lowercase the
// rest. Non-ASCII letters pass through unchanged.
inline std::string normalize_species(std::string_view name) {
    const std::u32string wide = to_u32(collapse_whitespace(trim(name)));
    std::u32string out;
    out.reserve(wide.size());
    bool word_start = true;
    bool first_word = true;
    for (char32_t cp : wide) {
        if (cp == U' ') {
            out.push_back(cp);
            word_start = true;
            first_word = false;
            continue;
        }
        char32_t mapped = cp;
        if (cp < 128) {
            if (word_start && first_word)
                mapped = static_cast<char32_t>(
                    std::toupper(static_cast<unsigned char>(cp)));
            else
                mapped = static_cast<char32_t>(
                    std::tolower(static_cast<unsigned char>(cp)));
        }
        out.push_back(mapped);
        word_start = false;
    }
    return to_utf8(out);
}

// Turns raw table rows into records: normalizes species, parses coordinates,
// drops rows with no usable data, applies the optional taxon filter, and
// removes exact duplicates within each source document.
inline std::vector<OccurrenceRecord> assemble_records(
    const std::vector<RawRow>& rows, const std::optional<std::string>& tax_filter,
    ParseStats* stats = nullptr) {
    std::optional<std::string> filter_folded;
    if (tax_filter) filter_folded = ascii_lower(normalize_species(*tax_filter));

    ParseStats local;
    std::vector<OccurrenceRecord> records;
    // (document, species, locality, lat?, lon?) triples already emitted
    std::set<std::tuple<std::string, std::string, std::string, std::string>> seen;
    for (const auto& row : rows) {
        const std::string species = normalize_species(row.species_cell);
        if (species.empty()) {
            ++local.dropped_rows;
            continue;
        }
        std::optional<Coordinate> coord;
        bool coord_out_of_range = false;
        try {
            coord = parse_coordinates(row.coordinates_cell, &local);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::out_of_range) throw;
            coord_out_of_range = true;
            ++local.invalid_coordinates;
        }
        if (!coord && !coord_out_of_range &&
            !detail::is_missing_marker(trim(row.coordinates_cell)))
            ++local.unparsed_coordinates;
        const std::string locality = trim(row.location_cell);
        if (locality.empty() && !coord) {
            ++local.dropped_rows;
            continue;
        }
        if (filter_folded && ascii_lower(species) != *filter_folded) continue;

        std::string coord_key;
        if (coord)
            coord_key = csv::format_double(coord->latitude) + "/" +
                        csv::format_double(coord->longitude);
        if (!seen.emplace(row.source.document_id, species, locality, coord_key)
                 .second) {
            ++local.duplicate_rows;
            continue;
        }
        records.push_back(OccurrenceRecord{species, locality, coord,
                                           row.source.document_id,
                                           row.source.chunk_index});
    }
    if (stats) *stats += local;
    return records;
}

} // namespace arete
