#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "arete/csv.hpp"
#include "arete/error.hpp"
#include "arete/unicode.hpp"

namespace arete {

// Filesystem-safe name for per-species artifacts: folded to ascii, runs of
// other characters become single dashes.
inline std::string species_slug(std::string_view species) {
    const std::string folded = fold_for_match(species);
    std::string slug;
    for (char ch : folded) {
        if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9'))
            slug.push_back(ch);
        else if (!slug.empty() && slug.back() != '-')
            slug.push_back('-');
    }
    while (!slug.empty() && slug.back() == '-') slug.pop_back();
    return slug.empty() ? "species" : slug;
}

// Decimal-degree WGS84 pair. Constructed values are always finite and within
// range; out-of-range input is a hard error, never silently clamped.
struct Coordinate {
    double latitude = 0.0;
    double longitude = 0.0;

    bool operator==(const Coordinate&) const = default;
};

inline Coordinate make_coordinate(double latitude, double longitude) {
    if (!std::isfinite(latitude) || !std::isfinite(longitude) ||
        latitude < -90.0 || latitude > 90.0 ||
        longitude < -180.0 || longitude > 180.0) {
        std::ostringstream msg;
        msg << "coordinate out of range: " << latitude << ", " << longitude;
        throw Error(ErrorCode::out_of_range, msg.str());
    }
    return Coordinate{latitude, longitude};
}

// One extracted (species, locality, optional coordinate) tuple plus the
// document and chunk it came from.
struct OccurrenceRecord {
    std::string species;
    std::string locality;
    std::optional<Coordinate> coordinate;
    std::string source_document;
    int chunk_index = 0;

    bool operator==(const OccurrenceRecord&) const = default;
};

inline constexpr const char* kRecordCsvHeader =
    "species,locality,latitude,longitude,source_document,chunk_index";

inline void write_records_csv(std::ostream& os,
                              const std::vector<OccurrenceRecord>& records) {
    os << kRecordCsvHeader << '\n';
    for (const auto& r : records) {
        csv::write_row(os, {r.species,
                            r.locality,
                            r.coordinate ? csv::format_double(r.coordinate->latitude) : "",
                            r.coordinate ? csv::format_double(r.coordinate->longitude) : "",
                            r.source_document,
                            std::to_string(r.chunk_index)});
    }
}

inline std::string records_to_csv(const std::vector<OccurrenceRecord>& records) {
    std::ostringstream os;
    write_records_csv(os, records);
    return os.str();
}

inline std::vector<OccurrenceRecord> read_records_csv(std::istream& is) {
    auto rows = csv::read_all(is);
    if (rows.empty())
        throw Error(ErrorCode::schema_mismatch, "empty records CSV");
    {
        std::ostringstream header;
        for (std::size_t i = 0; i < rows[0].size(); ++i) {
            if (i) header << ',';
            header << rows[0][i];
        }
        if (header.str() != kRecordCsvHeader)
            throw Error(ErrorCode::schema_mismatch,
                        "unexpected records CSV header: " + header.str());
    }
    std::vector<OccurrenceRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;  // blank line
        if (row.size() != 6)
            throw Error(ErrorCode::schema_mismatch,
                        "records CSV row " + std::to_string(i + 1) +
                            " has " + std::to_string(row.size()) + " fields");
        OccurrenceRecord r;
        r.species = row[0];
        r.locality = row[1];
        const bool has_lat = !row[2].empty();
        const bool has_lon = !row[3].empty();
        if (has_lat != has_lon)
            throw Error(ErrorCode::schema_mismatch,
                        "records CSV row " + std::to_string(i + 1) +
                            " has only one coordinate component");
        if (has_lat) {
            const auto lat = csv::parse_double(row[2]);
            const auto lon = csv::parse_double(row[3]);
            if (!lat || !lon)
                throw Error(ErrorCode::schema_mismatch,
                            "records CSV row " + std::to_string(i + 1) +
                                " has non-numeric coordinates");
            r.coordinate = make_coordinate(*lat, *lon);
        }
        r.source_document = row[4];
        try {
            r.chunk_index = std::stoi(row[5]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::schema_mismatch,
                        "records CSV row " + std::to_string(i + 1) +
                            " has non-integer chunk_index");
        }
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<OccurrenceRecord> read_records_csv_file(
    const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::file_not_found,
                    "cannot open records CSV: " + path.string());
    return read_records_csv(is);
}

} // namespace arete
