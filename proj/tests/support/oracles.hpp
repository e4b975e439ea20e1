#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written the slow, obvious way and shares no
// code with the headers under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Plain-recursion edit distance, trying every character edit. Exponential;
// only usable for short strings.
inline std::size_t levenshtein_recursive(const std::string& a, const std::string& b,
                                         std::size_t i = 0, std::size_t j = 0) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const std::size_t keep_or_sub =
        levenshtein_recursive(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    const std::size_t del = levenshtein_recursive(a, b, i + 1, j) + 1;
    const std::size_t ins = levenshtein_recursive(a, b, i, j + 1) + 1;
    return std::min({keep_or_sub, del, ins});
}

// High-precision haversine, long double throughout, with its own constants.
inline long double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double r = 6371.0L;
    const long double p1 = static_cast<long double>(lat1) * pi / 180.0L;
    const long double p2 = static_cast<long double>(lat2) * pi / 180.0L;
    const long double dp = p2 - p1;
    const long double dl =
        (static_cast<long double>(lon2) - static_cast<long double>(lon1)) * pi / 180.0L;
    const long double s1 = std::sin(dp / 2.0L);
    const long double s2 = std::sin(dl / 2.0L);
    long double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
    if (h > 1.0L) h = 1.0L;
    return 2.0L * r * std::asin(std::sqrt(h));
}

// O(n^3) hull membership: (x1,y1)->(x2,y2) is a hull edge iff every other
// point lies strictly to its left. Returns the set of hull vertices. Assumes
// points in general position (no duplicates, no exact collinearity), which
// random double coordinates satisfy.
inline std::set<std::pair<double, double>> brute_force_hull_vertices(
    const std::vector<std::pair<double, double>>& pts) {
    std::set<std::pair<double, double>> vertices;
    const std::size_t n = pts.size();
    if (n == 1) {
        vertices.insert(pts[0]);
        return vertices;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            bool all_left = true;
            for (std::size_t k = 0; k < n && all_left; ++k) {
                if (k == i || k == j) continue;
                const double cross =
                    (pts[j].first - pts[i].first) * (pts[k].second - pts[i].second) -
                    (pts[j].second - pts[i].second) * (pts[k].first - pts[i].first);
                all_left = cross > 0;
            }
            if (all_left) {
                vertices.insert(pts[i]);
                vertices.insert(pts[j]);
            }
        }
    }
    return vertices;
}

// Spherical polygon area by Girard's angle sum: interior angles between
// great-circle tangent directions at each vertex, minus (n-2)pi. Expects a
// counterclockwise convex polygon in (lat, lon) degrees.
inline long double angle_sum_area_km2(
    const std::vector<std::pair<double, double>>& lat_lon) {
    const long double pi = 3.141592653589793238462643383279502884L;
    const long double r = 6371.0L;
    const std::size_t n = lat_lon.size();
    if (n < 3) return 0.0L;

    struct Vec {
        long double x, y, z;
    };
    auto to_vec = [&](const std::pair<double, double>& p) {
        const long double lat = static_cast<long double>(p.first) * pi / 180.0L;
        const long double lon = static_cast<long double>(p.second) * pi / 180.0L;
        return Vec{std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                   std::sin(lat)};
    };
    auto dot = [](const Vec& a, const Vec& b) {
        return a.x * b.x + a.y * b.y + a.z * b.z;
    };
    auto scale_sub = [](const Vec& a, long double s, const Vec& b) {
        return Vec{a.x - s * b.x, a.y - s * b.y, a.z - s * b.z};
    };
    auto normalize = [&](Vec v) {
        const long double len = std::sqrt(dot(v, v));
        return Vec{v.x / len, v.y / len, v.z / len};
    };

    long double angle_sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec b = to_vec(lat_lon[i]);
        const Vec a = to_vec(lat_lon[(i + n - 1) % n]);
        const Vec c = to_vec(lat_lon[(i + 1) % n]);
        // tangent components of a and c at b
        const Vec ta = normalize(scale_sub(a, dot(a, b), b));
        const Vec tc = normalize(scale_sub(c, dot(c, b), b));
        long double cosang = dot(ta, tc);
        if (cosang > 1.0L) cosang = 1.0L;
        if (cosang < -1.0L) cosang = -1.0L;
        angle_sum += std::acos(cosang);
    }
    const long double excess = angle_sum - static_cast<long double>(n - 2) * pi;
    return excess * r * r;
}

// Mean of each point's distances to all the others, via a caller-supplied
// pairwise metric.
template <typename T, typename Dist>
inline std::vector<double> mean_distances(const std::vector<T>& items, Dist dist) {
    std::vector<double> means(items.size(), 0.0);
    if (items.size() < 2) return means;
    for (std::size_t i = 0; i < items.size(); ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < items.size(); ++j)
            if (j != i) sum += dist(items[i], items[j]);
        means[i] = sum / static_cast<double>(items.size() - 1);
    }
    return means;
}

} // namespace oracle
