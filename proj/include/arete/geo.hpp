#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "arete/csv.hpp"
#include "arete/error.hpp"
#include "arete/occurrence.hpp"

namespace arete {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }

// Haversine great-circle distance in kilometers.
inline double great_circle_km(const Coordinate& a, const Coordinate& b) {
    const double lat1 = deg_to_rad(a.latitude);
    const double lat2 = deg_to_rad(b.latitude);
    const double dlat = lat2 - lat1;
    const double dlon = deg_to_rad(b.longitude - a.longitude);
    const double s1 = std::sin(dlat / 2);
    const double s2 = std::sin(dlon / 2);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

struct GeoPolygon {
    // counterclockwise in the lon/lat plane for hull output; fewer than 3
    // vertices for degenerate point sets
    std::vector<Coordinate> vertices;
};

namespace detail {

// cross product of (b-a) x (c-a) over (lon, lat)
inline double cross(const Coordinate& a, const Coordinate& b, const Coordinate& c) {
    return (b.longitude - a.longitude) * (c.latitude - a.latitude) -
           (b.latitude - a.latitude) * (c.longitude - a.longitude);
}

inline void check_longitude_span(const std::vector<Coordinate>& points) {
    double lo = points.front().longitude, hi = lo;
    for (const auto& p : points) {
        lo = std::min(lo, p.longitude);
        hi = std::max(hi, p.longitude);
    }
    if (hi - lo >= 180.0)
        throw Error(ErrorCode::longitude_span_too_wide,
                    "point set spans " + csv::format_double(hi - lo) +
                        " degrees of longitude; hulls across a hemisphere "
                        "are not supported");
}

} // namespace detail

// Monotone-chain convex hull over (lon, lat). Collinear boundary points are
// dropped; 1 or 2 distinct points (or a fully collinear set) come back as a
// degenerate polygon with zero area.
inline GeoPolygon convex_hull(std::vector<Coordinate> points) {
    if (points.empty())
        throw Error(ErrorCode::empty_input, "convex hull of an empty point set");
    detail::check_longitude_span(points);
    std::sort(points.begin(), points.end(),
              [](const Coordinate& a, const Coordinate& b) {
                  return a.longitude != b.longitude ? a.longitude < b.longitude
                                                   : a.latitude < b.latitude;
              });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    const std::size_t n = points.size();
    if (n <= 2) return GeoPolygon{std::move(points)};

    std::vector<Coordinate> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], points[i]) <= 0)
            --k;
        hull[k++] = points[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], points[i]) <= 0)
            --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    if (hull.size() == 2 && hull[0] == hull[1]) hull.resize(1);
    return GeoPolygon{std::move(hull)};
}

namespace detail {

// central angle between two coordinates, radians
inline double central_angle(const Coordinate& a, const Coordinate& b) {
    return great_circle_km(a, b) / kEarthRadiusKm;
}

// spherical excess of a triangle via L'Huilier's theorem
inline double spherical_excess(const Coordinate& a, const Coordinate& b,
                               const Coordinate& c) {
    const double ab = central_angle(a, b);
    const double bc = central_angle(b, c);
    const double ca = central_angle(c, a);
    const double s = (ab + bc + ca) / 2;
    const double t = std::tan(s / 2) * std::tan((s - ab) / 2) *
                     std::tan((s - bc) / 2) * std::tan((s - ca) / 2);
    return 4 * std::atan(std::sqrt(std::max(0.0, t)));
}

} // namespace detail

// Extent of occurrence: spherical area of the convex hull in km². Zero when
// the hull degenerates to a point or segment.
inline double eoo_area_km2(const std::vector<Coordinate>& points) {
    const GeoPolygon hull = convex_hull(points);
    if (hull.vertices.size() < 3) return 0.0;
    double excess = 0.0;
    for (std::size_t i = 1; i + 1 < hull.vertices.size(); ++i)
        excess += detail::spherical_excess(hull.vertices[0], hull.vertices[i],
                                           hull.vertices[i + 1]);
    return excess * kEarthRadiusKm * kEarthRadiusKm;
}

// Ray casting in the lon/lat plane; points on an edge or vertex count as
// inside. Works for arbitrary simple polygons, not just hulls.
inline bool point_in_polygon(const Coordinate& p, const GeoPolygon& poly) {
    const auto& v = poly.vertices;
    if (v.empty()) return false;
    if (v.size() == 1) return v[0] == p;

    const double px = p.longitude, py = p.latitude;
    constexpr double eps = 1e-12;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const double xi = v[i].longitude, yi = v[i].latitude;
        const double xj = v[j].longitude, yj = v[j].latitude;
        const double cross = (xj - xi) * (py - yi) - (yj - yi) * (px - xi);
        if (std::abs(cross) <= eps && px >= std::min(xi, xj) - eps &&
            px <= std::max(xi, xj) + eps && py >= std::min(yi, yj) - eps &&
            py <= std::max(yi, yj) + eps)
            return true;  // on the boundary
    }
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        const double xi = v[i].longitude, yi = v[i].latitude;
        const double xj = v[j].longitude, yj = v[j].latitude;
        if ((yi > py) != (yj > py) &&
            px < (xj - xi) * (py - yi) / (yj - yi) + xi)
            inside = !inside;
    }
    return inside;
}

struct NamedPolygon {
    std::string name;
    GeoPolygon polygon;
};

// Reads [{name, vertices: [[lon, lat], ...]}, ...].
inline std::vector<NamedPolygon> load_boundaries_json(
    const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::file_not_found,
                    "boundary file not found: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::schema_mismatch,
                    "boundary file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_array())
        throw Error(ErrorCode::schema_mismatch,
                    "boundary file must be a JSON array of polygons");
    std::vector<NamedPolygon> out;
    for (const auto& entry : j) {
        NamedPolygon np;
        np.name = entry.at("name").get<std::string>();
        for (const auto& v : entry.at("vertices"))
            np.polygon.vertices.push_back(
                make_coordinate(v.at(1).get<double>(), v.at(0).get<double>()));
        if (np.polygon.vertices.size() < 3)
            throw Error(ErrorCode::schema_mismatch,
                        "polygon \"" + np.name + "\" has fewer than 3 vertices");
        out.push_back(std::move(np));
    }
    return out;
}

// Regular lon/lat grid of environmental feature vectors, loaded from a CSV of
// populated cell centers. Cell size is inferred from the coordinates.
class EnvFeatureGrid {
public:
    using CellKey = std::pair<int, int>;  // (row, col)

    static EnvFeatureGrid from_csv(const std::filesystem::path& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw Error(ErrorCode::file_not_found,
                        "grid file not found: " + path.string());
        return from_stream(is);
    }

    static EnvFeatureGrid from_stream(std::istream& is) {
        const auto table = csv::read_all(is);
        if (table.empty())
            throw Error(ErrorCode::empty_grid, "grid CSV has no header row");
        const auto& header = table.front();
        if (header.size() < 3 || header[0] != "lon" || header[1] != "lat")
            throw Error(ErrorCode::invalid_grid,
                        "grid header must be lon,lat,<feature columns>");
        const std::size_t n_features = header.size() - 2;

        auto number = [](const std::string& s, std::size_t row_index) {
            const auto v = csv::parse_double(s);
            if (!v || !std::isfinite(*v))
                throw Error(ErrorCode::invalid_grid,
                            "bad numeric value \"" + s + "\" in grid row " +
                                std::to_string(row_index));
            return *v;
        };

        std::vector<double> lons, lats;
        std::vector<std::vector<double>> features;
        for (std::size_t r = 1; r < table.size(); ++r) {
            const auto& row = table[r];
            if (row.size() == 1 && row[0].empty()) continue;  // blank line
            if (row.size() != header.size())
                throw Error(ErrorCode::invalid_grid,
                            "grid row " + std::to_string(r) + " has " +
                                std::to_string(row.size()) + " fields, expected " +
                                std::to_string(header.size()));
            lons.push_back(number(row[0], r));
            lats.push_back(number(row[1], r));
            std::vector<double> f(n_features);
            for (std::size_t c = 0; c < n_features; ++c)
                f[c] = number(row[c + 2], r);
            features.push_back(std::move(f));
        }
        if (features.empty())
            throw Error(ErrorCode::empty_grid, "grid CSV has no data rows");

        EnvFeatureGrid grid;
        grid.n_features_ = n_features;
        grid.cell_size_ = infer_spacing(lons, lats);
        const double min_lon = *std::min_element(lons.begin(), lons.end());
        const double min_lat = *std::min_element(lats.begin(), lats.end());
        grid.origin_ = Coordinate{min_lat - grid.cell_size_ / 2,
                                  min_lon - grid.cell_size_ / 2};
        for (std::size_t i = 0; i < features.size(); ++i) {
            const CellKey key = grid.cell_of(Coordinate{lats[i], lons[i]});
            grid.cells_[key] = std::move(features[i]);
        }
        return grid;
    }

    std::size_t n_features() const { return n_features_; }
    double cell_size_degrees() const { return cell_size_; }
    const Coordinate& origin() const { return origin_; }
    bool normalized() const { return normalized_; }
    std::size_t cell_count() const { return cells_.size(); }

    // (row, col) of the cell containing p, by floor indexing from the origin
    CellKey cell_of(const Coordinate& p) const {
        return CellKey{
            static_cast<int>(std::floor((p.latitude - origin_.latitude) / cell_size_)),
            static_cast<int>(std::floor((p.longitude - origin_.longitude) / cell_size_))};
    }

    Coordinate cell_center(const CellKey& key) const {
        return Coordinate{origin_.latitude + (key.first + 0.5) * cell_size_,
                          origin_.longitude + (key.second + 0.5) * cell_size_};
    }

    // populated cells in deterministic (row, col) order
    const std::map<CellKey, std::vector<double>>& cells() const { return cells_; }

    const std::vector<double>* cell_features(const CellKey& key) const {
        auto it = cells_.find(key);
        return it == cells_.end() ? nullptr : &it->second;
    }

    // Per-feature min-max scaling to [0, 1]; constant features collapse to 0.
    // Calling it twice is a contract violation, not a no-op.
    EnvFeatureGrid normalize_features() const {
        if (normalized_)
            throw Error(ErrorCode::invalid_grid, "grid is already normalized");
        if (cells_.empty())
            throw Error(ErrorCode::empty_grid, "cannot normalize an empty grid");
        std::vector<double> lo(n_features_, std::numeric_limits<double>::infinity());
        std::vector<double> hi(n_features_, -std::numeric_limits<double>::infinity());
        for (const auto& [key, vec] : cells_)
            for (std::size_t c = 0; c < n_features_; ++c) {
                lo[c] = std::min(lo[c], vec[c]);
                hi[c] = std::max(hi[c], vec[c]);
            }
        EnvFeatureGrid out = *this;
        for (auto& [key, vec] : out.cells_)
            for (std::size_t c = 0; c < n_features_; ++c)
                vec[c] = hi[c] > lo[c] ? (vec[c] - lo[c]) / (hi[c] - lo[c]) : 0.0;
        out.normalized_ = true;
        return out;
    }

    // Feature vector of the cell containing p; when that cell is empty, the
    // nearest populated cell at most one cell away (by center distance).
    const std::vector<double>& env_vector_at(const Coordinate& p) const {
        if (!normalized_)
            throw Error(ErrorCode::invalid_grid,
                        "grid must be normalized before lookups");
        const CellKey key = cell_of(p);
        if (const auto* f = cell_features(key)) return *f;
        const std::vector<double>* best = nullptr;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                const CellKey nb{key.first + dr, key.second + dc};
                const auto* f = cell_features(nb);
                if (!f) continue;
                const Coordinate ctr = cell_center(nb);
                const double dx = ctr.longitude - p.longitude;
                const double dy = ctr.latitude - p.latitude;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_dist) {
                    best_dist = d2;
                    best = f;
                }
            }
        if (!best)
            throw Error(ErrorCode::outside_grid,
                        "no populated grid cell near (" +
                            csv::format_double(p.latitude) + ", " +
                            csv::format_double(p.longitude) + ")");
        return *best;
    }

private:
    // Smallest positive gap between distinct sorted coordinates on either
    // axis; every other gap must be a whole multiple of it.
    static double infer_spacing(std::vector<double> lons, std::vector<double> lats) {
        auto gaps = [](std::vector<double>& v, std::vector<double>& out) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            for (std::size_t i = 1; i < v.size(); ++i)
                out.push_back(v[i] - v[i - 1]);
        };
        std::vector<double> diffs;
        gaps(lons, diffs);
        gaps(lats, diffs);
        if (diffs.empty())
            throw Error(ErrorCode::invalid_grid,
                        "cannot infer cell size from a single grid cell");
        const double cell = *std::min_element(diffs.begin(), diffs.end());
        for (double d : diffs) {
            const double ratio = d / cell;
            if (std::abs(ratio - std::round(ratio)) > 1e-6)
                throw Error(ErrorCode::invalid_grid,
                            "grid spacing is not uniform (gap " +
                                csv::format_double(d) + " vs cell " +
                                csv::format_double(cell) + ")");
        }
        return cell;
    }

    double cell_size_ = 0;
    Coordinate origin_{};
    std::size_t n_features_ = 0;
    std::map<CellKey, std::vector<double>> cells_;
    bool normalized_ = false;
};

// euclidean distance between equal-length feature vectors
inline double env_distance(const std::vector<double>& a,
                           const std::vector<double>& b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::dimension_mismatch,
                    "feature vectors of length " + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()));
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

} // namespace arete
