#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "arete/geo.hpp"
#include "support/oracles.hpp"

using namespace arete;

namespace {

Coordinate c(double lat, double lon) { return make_coordinate(lat, lon); }

GeoPolygon square_0_10() {
    // corners of a 10 by 10 degree box, counterclockwise in (lon, lat)
    return GeoPolygon{{c(0, 0), c(0, 10), c(10, 10), c(10, 0)}};
}

EnvFeatureGrid grid_from(const std::string& body) {
    std::istringstream is(body);
    return EnvFeatureGrid::from_stream(is);
}

std::filesystem::path temp_json(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream os(path, std::ios::binary);
    os << body;
    return path;
}

// True when every vertex stays strictly on the interior side of every edge's
// great circle. A hull that is convex in the lon/lat plane can still pick up
// a reflex spherical angle at a nearly collinear vertex; the angle-sum
// comparison is only meaningful without those.
bool spherically_convex(const std::vector<Coordinate>& v) {
    struct V3 { double x, y, z; };
    auto unit = [](const Coordinate& p) {
        const double la = deg_to_rad(p.latitude), lo = deg_to_rad(p.longitude);
        return V3{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo),
                  std::sin(la)};
    };
    std::vector<V3> u;
    for (const auto& p : v) u.push_back(unit(p));
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        const V3& a = u[i];
        const V3& b = u[(i + 1) % n];
        const V3 nrm{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
                     a.x * b.y - a.y * b.x};
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i || k == (i + 1) % n) continue;
            if (nrm.x * u[k].x + nrm.y * u[k].y + nrm.z * u[k].z <= 1e-9)
                return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("haversine distances match the independent computation") {
    CHECK(great_circle_km(c(48.85, 2.35), c(48.85, 2.35)) == 0.0);

    // a quarter of a great circle along the equator
    CHECK(great_circle_km(c(0, 0), c(0, 90)) ==
          doctest::Approx(kEarthRadiusKm * kPi / 2).epsilon(1e-12));
    // pole to pole
    CHECK(great_circle_km(c(90, 0), c(-90, 0)) ==
          doctest::Approx(kEarthRadiusKm * kPi).epsilon(1e-12));

    std::mt19937 rng(41);
    std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
    for (int i = 0; i < 300; ++i) {
        const Coordinate a = c(lat(rng), lon(rng)), b = c(lat(rng), lon(rng));
        const double mine = great_circle_km(a, b);
        const long double ref =
            oracle::haversine_km(a.latitude, a.longitude, b.latitude, b.longitude);
        CHECK(std::abs(mine - static_cast<double>(ref)) <
              1e-6 + 1e-9 * static_cast<double>(ref));
        CHECK(great_circle_km(a, b) == great_circle_km(b, a));
        CHECK(mine >= 0.0);
    }
}

TEST_CASE("haversine satisfies the triangle inequality") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> lat(-89, 89), lon(-179, 179);
    for (int i = 0; i < 200; ++i) {
        const Coordinate a = c(lat(rng), lon(rng));
        const Coordinate b = c(lat(rng), lon(rng));
        const Coordinate m = c(lat(rng), lon(rng));
        CHECK(great_circle_km(a, b) <=
              great_circle_km(a, m) + great_circle_km(m, b) + 1e-6);
    }
}

TEST_CASE("hull of a square with clutter is the four corners, counterclockwise") {
    std::vector<Coordinate> pts = {c(0, 0), c(0, 10), c(10, 10), c(10, 0),
                                   c(5, 5),  c(2, 7),  c(9, 1)};
    // edge midpoints are collinear with the corners and must not survive
    pts.push_back(c(0, 5));
    pts.push_back(c(5, 10));
    pts.push_back(c(10, 5));
    pts.push_back(c(5, 0));

    const GeoPolygon hull = convex_hull(pts);
    REQUIRE(hull.vertices.size() == 4);
    // starts at the lexicographic minimum of (lon, lat)
    CHECK(hull.vertices[0] == c(0, 0));
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = hull.vertices[i];
        const auto& b = hull.vertices[(i + 1) % 4];
        const auto& d = hull.vertices[(i + 2) % 4];
        const double cross = (b.longitude - a.longitude) * (d.latitude - a.latitude) -
                             (b.latitude - a.latitude) * (d.longitude - a.longitude);
        CHECK(cross > 0);  // counterclockwise, no collinear vertices
    }
}

TEST_CASE("degenerate point sets give degenerate hulls") {
    CHECK(convex_hull({c(3, 4)}).vertices.size() == 1);
    CHECK(convex_hull({c(3, 4), c(3, 4), c(3, 4)}).vertices.size() == 1);
    CHECK(convex_hull({c(3, 4), c(5, 6)}).vertices.size() == 2);
    // fully collinear input collapses to the two extremes
    const auto segment = convex_hull({c(0, 0), c(5, 5), c(10, 10), c(2, 2)});
    CHECK(segment.vertices.size() == 2);
    CHECK(eoo_area_km2({c(0, 0), c(5, 5), c(10, 10)}) == 0.0);
    CHECK_THROWS_AS(convex_hull({}), Error);
    try {
        convex_hull({});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_input);
    }
}

TEST_CASE("hull output is canonical under input permutation and idempotent") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> lat(-40, 40), lon(0, 50);
    std::vector<Coordinate> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(c(lat(rng), lon(rng)));

    const GeoPolygon first = convex_hull(pts);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(pts.begin(), pts.end(), rng);
        CHECK(convex_hull(pts).vertices == first.vertices);
    }
    CHECK(convex_hull(first.vertices).vertices == first.vertices);
}

TEST_CASE("hull vertex sets agree with the cubic brute force") {
    std::mt19937 rng(20240821);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-60, 60);
    std::uniform_int_distribution<int> count(3, 40);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = count(rng);
        std::vector<Coordinate> pts;
        std::vector<std::pair<double, double>> flat;
        for (int i = 0; i < n; ++i) {
            pts.push_back(c(lat(rng), lon(rng)));
            flat.emplace_back(pts.back().longitude, pts.back().latitude);
        }
        const auto expected = oracle::brute_force_hull_vertices(flat);
        const GeoPolygon hull = convex_hull(pts);
        std::set<std::pair<double, double>> got;
        for (const auto& v : hull.vertices) got.emplace(v.longitude, v.latitude);
        CHECK(got == expected);
        // every input point sits inside or on the hull
        for (const auto& p : pts) CHECK(point_in_polygon(p, hull));
    }
}

TEST_CASE("point sets spanning half the globe are rejected") {
    try {
        convex_hull({c(0, -90), c(0, 90), c(10, 0)});
        FAIL("expected longitude_span_too_wide");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::longitude_span_too_wide);
    }
    CHECK_THROWS_AS(eoo_area_km2({c(0, -100), c(0, 85), c(5, 0)}), Error);
    // just under the limit is fine
    CHECK(convex_hull({c(0, -89.9), c(0, 89.9), c(10, 0)}).vertices.size() == 3);
}

TEST_CASE("a one degree equatorial square covers the textbook area") {
    const double area = eoo_area_km2({c(0, 0), c(0, 1), c(1, 0), c(1, 1)});
    // band formula R^2 * dlon * (sin lat2 - sin lat1)
    const double band = kEarthRadiusKm * kEarthRadiusKm * (kPi / 180.0) *
                        std::sin(deg_to_rad(1.0));
    CHECK(area == doctest::Approx(band).epsilon(1e-3));
    CHECK(area == doctest::Approx(12364.0).epsilon(1e-3));

    const double big = eoo_area_km2({c(0, 0), c(0, 10), c(10, 0), c(10, 10)});
    CHECK(big / area > 99.0);
    CHECK(big / area < 100.0);
}

TEST_CASE("hull areas agree with the angle-sum computation") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> lat(-20, 20), lon(0, 40);
    std::uniform_int_distribution<int> count(5, 20);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Coordinate> pts;
        for (int i = 0, n = count(rng); i < n; ++i) pts.push_back(c(lat(rng), lon(rng)));
        const GeoPolygon hull = convex_hull(pts);
        if (hull.vertices.size() < 3 || !spherically_convex(hull.vertices)) continue;
        ++compared;
        std::vector<std::pair<double, double>> lat_lon;
        for (const auto& v : hull.vertices) lat_lon.emplace_back(v.latitude, v.longitude);
        const double mine = eoo_area_km2(pts);
        const double ref = static_cast<double>(oracle::angle_sum_area_km2(lat_lon));
        CHECK(mine == doctest::Approx(ref).epsilon(1e-6));
        CHECK(mine > 0.0);
        CHECK(mine < 2.6e8);  // well under half the planet
    }
    CHECK(compared >= 15);  // the filter must not hollow the test out
}

TEST_CASE("adding points never shrinks the extent of occurrence") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> lat(-30, 30), lon(0, 60);
    std::vector<Coordinate> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(c(lat(rng), lon(rng)));
    double prev = eoo_area_km2(pts);
    for (int i = 0; i < 30; ++i) {
        pts.push_back(c(lat(rng), lon(rng)));
        const double now = eoo_area_km2(pts);
        CHECK(now >= prev - 1e-9);
        prev = now;
    }
    // an interior point changes nothing
    const GeoPolygon hull = convex_hull(pts);
    double mean_lat = 0, mean_lon = 0;
    for (const auto& v : hull.vertices) {
        mean_lat += v.latitude;
        mean_lon += v.longitude;
    }
    mean_lat /= static_cast<double>(hull.vertices.size());
    mean_lon /= static_cast<double>(hull.vertices.size());
    pts.push_back(c(mean_lat, mean_lon));
    CHECK(eoo_area_km2(pts) == doctest::Approx(prev).epsilon(1e-12));
}

TEST_CASE("point in polygon handles interior, boundary, and concavities") {
    const GeoPolygon square = square_0_10();
    CHECK(point_in_polygon(c(5, 5), square));
    CHECK(point_in_polygon(c(0, 0), square));    // vertex
    CHECK(point_in_polygon(c(0, 5), square));    // edge
    CHECK(point_in_polygon(c(10, 10), square));
    CHECK(!point_in_polygon(c(5, 15), square));
    CHECK(!point_in_polygon(c(-0.001, 5), square));
    CHECK(!point_in_polygon(c(5, 10.001), square));

    // a C shape open to the right: notch is lon in [0,3], lat in (1,3)
    const GeoPolygon cshape{{c(0, 0), c(0, 4), c(4, 4), c(4, 0), c(3, 0),
                             c(3, 3), c(1, 3), c(1, 0)}};
    CHECK(point_in_polygon(c(0.5, 2), cshape));   // bottom bar
    CHECK(point_in_polygon(c(3.5, 2), cshape));   // top bar
    CHECK(point_in_polygon(c(2, 3.5), cshape));   // right bar
    CHECK(!point_in_polygon(c(2, 1), cshape));    // inside the notch
    CHECK(point_in_polygon(c(2, 3), cshape));     // notch wall is boundary
    CHECK(!point_in_polygon(c(2, -1), cshape));
    CHECK(!point_in_polygon(c(5, 5), cshape));

    CHECK(!point_in_polygon(c(1, 1), GeoPolygon{}));
    CHECK(point_in_polygon(c(1, 1), GeoPolygon{{c(1, 1)}}));
    CHECK(!point_in_polygon(c(1, 2), GeoPolygon{{c(1, 1)}}));
}

TEST_CASE("boundary files load named polygons in lon lat vertex order") {
    const auto path = temp_json("arete_bounds.json", R"([
        {"name": "Lowland", "vertices": [[20, 60], [26, 60], [26, 64], [20, 64]]},
        {"name": "Highland", "vertices": [[5, 45], [11, 45], [8, 48]]}
    ])");
    const auto polys = load_boundaries_json(path);
    REQUIRE(polys.size() == 2);
    CHECK(polys[0].name == "Lowland");
    REQUIRE(polys[0].polygon.vertices.size() == 4);
    CHECK(polys[0].polygon.vertices[0] == c(60, 20));  // file holds [lon, lat]
    CHECK(point_in_polygon(c(62, 23), polys[0].polygon));
    CHECK(!point_in_polygon(c(62, 23), polys[1].polygon));

    CHECK_THROWS_AS(load_boundaries_json(path.parent_path() / "missing.json"), Error);
    const auto bad = temp_json("arete_bounds_bad.json", "{ not json");
    CHECK_THROWS_AS(load_boundaries_json(bad), Error);
    const auto scalar = temp_json("arete_bounds_scalar.json", "42");
    CHECK_THROWS_AS(load_boundaries_json(scalar), Error);
    const auto thin = temp_json("arete_bounds_thin.json",
                                R"([{"name": "Line", "vertices": [[0,0],[1,1]]}])");
    try {
        load_boundaries_json(thin);
        FAIL("expected schema_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema_mismatch);
    }
}

TEST_CASE("grid spacing is inferred from populated cell centers") {
    const auto grid = grid_from(
        "lon,lat,temp,rain\n"
        "0.5,0.5,10,100\n"
        "1.5,0.5,12,110\n"
        "0.5,1.5,14,120\n"
        "3.5,1.5,16,130\n");  // a gap two cells wide is still on the lattice
    CHECK(grid.cell_size_degrees() == doctest::Approx(1.0));
    CHECK(grid.n_features() == 2);
    CHECK(grid.cell_count() == 4);
    CHECK(grid.origin().latitude == doctest::Approx(0.0));
    CHECK(grid.origin().longitude == doctest::Approx(0.0));

    // floor indexing puts every point in its cell
    CHECK(grid.cell_of(c(0.9, 0.2)) == EnvFeatureGrid::CellKey{0, 0});
    CHECK(grid.cell_of(c(1.1, 3.9)) == EnvFeatureGrid::CellKey{1, 3});
    const auto* f = grid.cell_features({1, 3});
    REQUIRE(f != nullptr);
    CHECK((*f)[0] == 16);
    CHECK(grid.cell_features({2, 2}) == nullptr);
    const Coordinate ctr = grid.cell_center({1, 3});
    CHECK(ctr.latitude == doctest::Approx(1.5));
    CHECK(ctr.longitude == doctest::Approx(3.5));
}

TEST_CASE("grids with negative coordinates index correctly") {
    const auto grid = grid_from(
        "lon,lat,f\n"
        "-1.5,-0.5,1\n"
        "-0.5,-0.5,2\n"
        "-1.5,0.5,3\n");
    CHECK(grid.cell_size_degrees() == doctest::Approx(1.0));
    CHECK(grid.origin().latitude == doctest::Approx(-1.0));
    CHECK(grid.origin().longitude == doctest::Approx(-2.0));
    const auto* f = grid.cell_features(grid.cell_of(c(-0.4, -1.2)));
    REQUIRE(f != nullptr);
    CHECK((*f)[0] == 1);
}

TEST_CASE("malformed grids are rejected with precise errors") {
    auto code_of = [](const std::string& body) {
        try {
            grid_from(body);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io_error;
    };
    CHECK(code_of("") == ErrorCode::empty_grid);
    CHECK(code_of("lon,lat,f\n") == ErrorCode::empty_grid);
    CHECK(code_of("x,y,f\n1,2,3\n") == ErrorCode::invalid_grid);
    CHECK(code_of("lon,lat\n1,2\n") == ErrorCode::invalid_grid);  // no features
    CHECK(code_of("lon,lat,f\n0.5,0.5,abc\n1.5,0.5,1\n") == ErrorCode::invalid_grid);
    CHECK(code_of("lon,lat,f\n0.5,0.5,inf\n1.5,0.5,1\n") == ErrorCode::invalid_grid);
    CHECK(code_of("lon,lat,f\n0.5,0.5\n") == ErrorCode::invalid_grid);  // short row
    CHECK(code_of("lon,lat,f\n0.5,0.5,1\n") == ErrorCode::invalid_grid);  // one cell
    CHECK(code_of("lon,lat,f\n0.5,0.5,1\n1.5,0.5,1\n2.3,0.5,1\n") ==
          ErrorCode::invalid_grid);  // off lattice
}

TEST_CASE("feature normalization is min-max per column, exactly once") {
    const auto raw = grid_from(
        "lon,lat,a,b\n"
        "0.5,0.5,2,9\n"
        "1.5,0.5,4,9\n"
        "2.5,0.5,6,9\n");
    CHECK(!raw.normalized());
    CHECK_THROWS_AS(raw.env_vector_at(c(0.5, 0.5)), Error);  // not normalized yet

    const auto grid = raw.normalize_features();
    CHECK(grid.normalized());
    CHECK(grid.env_vector_at(c(0.5, 0.5)) == std::vector<double>{0.0, 0.0});
    CHECK(grid.env_vector_at(c(0.5, 1.5)) == std::vector<double>{0.5, 0.0});
    CHECK(grid.env_vector_at(c(0.5, 2.5)) == std::vector<double>{1.0, 0.0});

    try {
        grid.normalize_features();
        FAIL("expected invalid_grid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_grid);
    }
}

TEST_CASE("empty cells borrow the nearest populated neighbor, once removed") {
    const auto grid = grid_from(
                          "lon,lat,a,b\n"
                          "0.5,0.5,0.5,0.5\n"
                          "0.5,1.5,0.5,1.5\n"
                          "2.5,0.5,2.5,0.5\n")
                          .normalize_features();
    // features normalize to: cell (0,0) -> [0,0], (1,0) -> [0,1], (0,2) -> [1,0]
    CHECK(grid.env_vector_at(c(0.45, 1.3)) == std::vector<double>{0.0, 0.0});
    CHECK(grid.env_vector_at(c(0.45, 1.8)) == std::vector<double>{1.0, 0.0});
    // two or more cells from anything populated
    try {
        grid.env_vector_at(c(0.5, 4.6));
        FAIL("expected outside_grid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::outside_grid);
    }
    CHECK_THROWS_AS(grid.env_vector_at(c(50, 50)), Error);
}

TEST_CASE("environmental distance is plain euclidean with a dimension guard") {
    CHECK(env_distance({0, 0}, {3, 4}) == doctest::Approx(5.0));
    CHECK(env_distance({1.5}, {1.5}) == 0.0);
    CHECK(env_distance({}, {}) == 0.0);
    try {
        env_distance({1, 2}, {1, 2, 3});
        FAIL("expected dimension_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
    }
}
