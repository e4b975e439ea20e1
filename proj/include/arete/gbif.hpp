#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "arete/error.hpp"
#include "arete/extraction.hpp"
#include "arete/geo.hpp"
#include "arete/occurrence.hpp"

namespace arete {

enum class GbifBackend { live, fixture };

struct GbifConfig {
    std::string endpoint_url = "https://api.gbif.org/v1";
    int page_size = 300;  // GBIF's maximum per request
    double timeout_seconds = 30.0;
    GbifBackend backend = GbifBackend::live;
    std::filesystem::path fixture_dir;  // required for the fixture backend
};

namespace detail {

inline std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
            (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

// One page of an occurrence search reply: pulls results[] into records.
inline void append_page_records(const nlohmann::json& page,
                                const std::string& species, int page_number,
                                std::vector<OccurrenceRecord>& out) {
    if (!page.contains("results") || !page["results"].is_array())
        throw Error(ErrorCode::malformed_response,
                    "occurrence page has no results array");
    for (const auto& item : page["results"]) {
        OccurrenceRecord rec;
        rec.species = species;
        if (item.contains("locality") && item["locality"].is_string())
            rec.locality = item["locality"].get<std::string>();
        else if (item.contains("verbatimLocality") &&
                 item["verbatimLocality"].is_string())
            rec.locality = item["verbatimLocality"].get<std::string>();
        if (item.contains("decimalLatitude") && item["decimalLatitude"].is_number() &&
            item.contains("decimalLongitude") &&
            item["decimalLongitude"].is_number()) {
            try {
                rec.coordinate =
                    make_coordinate(item["decimalLatitude"].get<double>(),
                                    item["decimalLongitude"].get<double>());
            } catch (const Error&) {
                // out-of-range coordinates in upstream data: keep the record,
                // drop the coordinate
            }
        }
        rec.source_document = "gbif";
        rec.chunk_index = page_number;
        out.push_back(std::move(rec));
    }
}

inline bool page_end_of_records(const nlohmann::json& page) {
    return page.contains("endOfRecords") && page["endOfRecords"].is_boolean() &&
           page["endOfRecords"].get<bool>();
}

} // namespace detail

// Fetches up to `limit` occurrence records for one species, paging through
// the occurrence search endpoint (or recorded fixture pages named
// <species-slug>_page<N>.json).
inline std::vector<OccurrenceRecord> fetch_occurrences(const std::string& species,
                                                       int limit,
                                                       const GbifConfig& cfg = {}) {
    if (limit < 1 || limit > 10000)
        throw Error(ErrorCode::invalid_argument,
                    "limit must be between 1 and 10000");
    const std::string name = normalize_species(species);
    std::vector<OccurrenceRecord> records;

    if (cfg.backend == GbifBackend::fixture) {
        const std::string slug = species_slug(name);
        for (int page = 0;; ++page) {
            const auto path =
                cfg.fixture_dir / (slug + "_page" + std::to_string(page) + ".json");
            std::ifstream is(path, std::ios::binary);
            if (!is) {
                if (page == 0)
                    throw Error(ErrorCode::fixture_missing,
                                "no recorded pages for \"" + name + "\" in " +
                                    cfg.fixture_dir.string());
                break;
            }
            nlohmann::json j;
            try {
                is >> j;
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::malformed_response,
                            path.string() + ": " + e.what());
            }
            detail::append_page_records(j, name, page, records);
            if (static_cast<int>(records.size()) >= limit ||
                detail::page_end_of_records(j))
                break;
        }
        if (static_cast<int>(records.size()) > limit) records.resize(limit);
        return records;
    }

    const auto endpoint = [&] {
        const auto scheme_end = cfg.endpoint_url.find("://");
        if (scheme_end == std::string::npos)
            throw Error(ErrorCode::invalid_argument,
                        "endpoint URL needs a scheme: " + cfg.endpoint_url);
        const auto path_start = cfg.endpoint_url.find('/', scheme_end + 3);
        std::pair<std::string, std::string> parts;
        parts.first = cfg.endpoint_url.substr(0, path_start);
        if (path_start != std::string::npos)
            parts.second = cfg.endpoint_url.substr(path_start);
        while (!parts.second.empty() && parts.second.back() == '/')
            parts.second.pop_back();
        return parts;
    }();

    httplib::Client client(endpoint.first);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int64_t>(cfg.timeout_seconds * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<int64_t>(cfg.timeout_seconds * 1000)));
    client.set_follow_location(true);

    int page = 0;
    int offset = 0;
    while (static_cast<int>(records.size()) < limit) {
        const int want = std::min(cfg.page_size,
                                  limit - static_cast<int>(records.size()));
        const std::string path = endpoint.second + "/occurrence/search?scientificName=" +
                                 detail::url_encode(name) +
                                 "&limit=" + std::to_string(want) +
                                 "&offset=" + std::to_string(offset);
        auto res = client.Get(path);
        if (!res)
            throw Error(ErrorCode::network_error,
                        "occurrence search failed: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw Error(ErrorCode::api_error,
                        "occurrence search returned HTTP " +
                            std::to_string(res->status));
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::malformed_response,
                        "occurrence search reply is not valid JSON");
        }
        const std::size_t before = records.size();
        detail::append_page_records(j, name, page, records);
        if (detail::page_end_of_records(j) || records.size() == before) break;
        offset += static_cast<int>(records.size() - before);
        ++page;
    }
    if (static_cast<int>(records.size()) > limit) records.resize(limit);
    return records;
}

struct DatasetStats {
    std::size_t species_count = 0;
    std::size_t record_count = 0;
    std::size_t georeferenced_record_count = 0;
    std::map<std::string, std::size_t> country_species_counts;
};

struct EooPair {
    std::string species;
    double gbif_km2 = 0;
    double extracted_km2 = 0;
    double ratio = 0;  // extracted / gbif
};

// EOO thresholds (km²) under IUCN criterion B1; a species whose extracted EOO
// crosses into a different band than its GBIF EOO is worth a second look.
struct IucnBands {
    double critically_endangered = 100.0;
    double endangered = 5000.0;
    double vulnerable = 20000.0;

    std::string band(double eoo_km2) const {
        if (eoo_km2 < critically_endangered) return "CR";
        if (eoo_km2 < endangered) return "EN";
        if (eoo_km2 < vulnerable) return "VU";
        return "LC";
    }
};

struct SpeciesBandChange {
    std::string species;
    std::string gbif_band;
    std::string extracted_band;
};

struct ComparisonSummary {
    DatasetStats extracted;
    DatasetStats gbif;
    std::size_t overlap_species_count = 0;
    std::vector<EooPair> eoo_pairs;               // sorted by species
    std::vector<SpeciesBandChange> band_changes;  // pairs whose band differs
};

namespace detail {

inline DatasetStats dataset_stats(const std::vector<OccurrenceRecord>& records,
                                  const std::vector<NamedPolygon>* boundaries) {
    DatasetStats stats;
    stats.record_count = records.size();
    std::set<std::string> species;
    std::map<std::string, std::set<std::string>> country_species;
    for (const auto& r : records) {
        species.insert(r.species);
        if (!r.coordinate) continue;
        ++stats.georeferenced_record_count;
        if (boundaries)
            for (const auto& np : *boundaries)
                if (point_in_polygon(*r.coordinate, np.polygon))
                    country_species[np.name].insert(r.species);
    }
    stats.species_count = species.size();
    for (const auto& [name, sp] : country_species)
        stats.country_species_counts[name] = sp.size();
    return stats;
}

inline std::map<std::string, std::vector<Coordinate>> species_points(
    const std::vector<OccurrenceRecord>& records) {
    std::map<std::string, std::vector<Coordinate>> out;
    for (const auto& r : records)
        if (r.coordinate) out[r.species].push_back(*r.coordinate);
    return out;
}

} // namespace detail

// The GBIF-vs-extraction comparison: dataset stats, species overlap, optional
// per-country species tallies, and per-species EOO ratios where both sides
// have a non-degenerate hull.
inline ComparisonSummary compare_datasets(
    const std::vector<OccurrenceRecord>& extracted,
    const std::vector<OccurrenceRecord>& gbif,
    const std::vector<NamedPolygon>* boundaries = nullptr,
    const IucnBands& bands = {}) {
    ComparisonSummary summary;
    summary.extracted = detail::dataset_stats(extracted, boundaries);
    summary.gbif = detail::dataset_stats(gbif, boundaries);

    std::set<std::string> extracted_species, gbif_species;
    for (const auto& r : extracted) extracted_species.insert(r.species);
    for (const auto& r : gbif) gbif_species.insert(r.species);
    for (const auto& s : extracted_species)
        if (gbif_species.count(s)) ++summary.overlap_species_count;

    const auto ext_points = detail::species_points(extracted);
    const auto gbif_points = detail::species_points(gbif);
    for (const auto& [species, gpoints] : gbif_points) {
        auto it = ext_points.find(species);
        if (it == ext_points.end()) continue;
        if (gpoints.size() < 3 || it->second.size() < 3) continue;
        const double g = eoo_area_km2(gpoints);
        const double e = eoo_area_km2(it->second);
        if (g <= 0 || e <= 0) continue;  // collinear set on one side
        EooPair pair;
        pair.species = species;
        pair.gbif_km2 = g;
        pair.extracted_km2 = e;
        pair.ratio = e / g;
        summary.eoo_pairs.push_back(pair);
        if (bands.band(g) != bands.band(e))
            summary.band_changes.push_back(
                SpeciesBandChange{species, bands.band(g), bands.band(e)});
    }
    return summary;
}

inline nlohmann::json comparison_to_json(const ComparisonSummary& s) {
    auto stats = [](const DatasetStats& d) {
        nlohmann::json j = {
            {"species_count", d.species_count},
            {"record_count", d.record_count},
            {"georeferenced_record_count", d.georeferenced_record_count},
        };
        nlohmann::json countries = nlohmann::json::object();
        for (const auto& [name, count] : d.country_species_counts)
            countries[name] = count;
        j["country_species_counts"] = countries;
        return j;
    };
    nlohmann::json j = {
        {"extracted", stats(s.extracted)},
        {"gbif", stats(s.gbif)},
        {"overlap_species_count", s.overlap_species_count},
    };
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : s.eoo_pairs)
        pairs.push_back({{"species", p.species},
                         {"gbif_km2", p.gbif_km2},
                         {"extracted_km2", p.extracted_km2},
                         {"ratio", p.ratio}});
    j["eoo_pairs"] = pairs;
    nlohmann::json changes = nlohmann::json::array();
    for (const auto& c : s.band_changes)
        changes.push_back({{"species", c.species},
                           {"gbif_band", c.gbif_band},
                           {"extracted_band", c.extracted_band}});
    j["band_changes"] = changes;
    return j;
}

inline std::string comparison_to_markdown(const ComparisonSummary& s) {
    std::ostringstream os;
    os << "# Dataset comparison\n\n";
    os << "| dataset | species | records | georeferenced |\n";
    os << "|---|---|---|---|\n";
    os << "| extracted | " << s.extracted.species_count << " | "
       << s.extracted.record_count << " | "
       << s.extracted.georeferenced_record_count << " |\n";
    os << "| gbif | " << s.gbif.species_count << " | " << s.gbif.record_count
       << " | " << s.gbif.georeferenced_record_count << " |\n\n";
    os << "Species in both datasets: " << s.overlap_species_count << "\n";
    if (!s.eoo_pairs.empty()) {
        os << "\n## Extent of occurrence\n\n";
        os << "| species | gbif km2 | extracted km2 | ratio |\n";
        os << "|---|---|---|---|\n";
        for (const auto& p : s.eoo_pairs)
            os << "| " << p.species << " | " << csv::format_double(p.gbif_km2)
               << " | " << csv::format_double(p.extracted_km2) << " | "
               << csv::format_double(p.ratio) << " |\n";
    }
    if (!s.band_changes.empty()) {
        os << "\n## Criterion B band changes\n\n";
        os << "| species | gbif band | extracted band |\n";
        os << "|---|---|---|\n";
        for (const auto& c : s.band_changes)
            os << "| " << c.species << " | " << c.gbif_band << " | "
               << c.extracted_band << " |\n";
    }
    const auto& countries = s.extracted.country_species_counts;
    const auto& gbif_countries = s.gbif.country_species_counts;
    if (!countries.empty() || !gbif_countries.empty()) {
        os << "\n## Species per country\n\n";
        os << "| country | extracted | gbif |\n";
        os << "|---|---|---|\n";
        std::set<std::string> names;
        for (const auto& [n, c] : countries) names.insert(n);
        for (const auto& [n, c] : gbif_countries) names.insert(n);
        for (const auto& n : names) {
            auto lookup = [&](const std::map<std::string, std::size_t>& m) {
                auto it = m.find(n);
                return it == m.end() ? std::size_t{0} : it->second;
            };
            os << "| " << n << " | " << lookup(countries) << " | "
               << lookup(gbif_countries) << " |\n";
        }
    }
    return os.str();
}

} // namespace arete
