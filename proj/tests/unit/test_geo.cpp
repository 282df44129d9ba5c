#include <doctest.h>

#include <cmath>
#include <random>

#include <netoed/error.hpp>
#include <netoed/geo.hpp>
#include <netoed/sobol.hpp>

using namespace netoed;

namespace {

// Haversine written out independently of the library.
double haversine_deg(double lat1, double lon1, double lat2, double lon2) {
    const double r = M_PI / 180.0;
    const double dphi = (lat2 - lat1) * r, dl = (lon2 - lon1) * r;
    const double h = std::pow(std::sin(dphi / 2), 2) + std::cos(lat1 * r) * std::cos(lat2 * r) * std::pow(std::sin(dl / 2), 2);
    return 2.0 * std::asin(std::sqrt(h)) / r;
}

PolygonRegion unit_square() {
    return PolygonRegion({{{0, 0}, {0, 1}, {1, 1}, {1, 0}}});
}

}  // namespace

TEST_CASE("great-circle distance examples") {
    CHECK(great_circle_distance({41, -110}, {41, -110}) == 0.0);
    CHECK(great_circle_distance({0, 0}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    const double d = great_circle_distance({40, -112}, {40, -111});
    CHECK(d == doctest::Approx(haversine_deg(40, -112, 40, -111)).epsilon(1e-12));
    CHECK(d == doctest::Approx(0.766).epsilon(1e-3));
}

TEST_CASE("great-circle distance is a metric on random triples") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 179);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
        const double ab = great_circle_distance(a, b);
        CHECK(ab == doctest::Approx(great_circle_distance(b, a)).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= great_circle_distance(a, c) + great_circle_distance(c, b) + 1e-9);
    }
}

TEST_CASE("degrees to km") {
    CHECK(degrees_to_km(0) == 0.0);
    CHECK(degrees_to_km(1) == doctest::Approx(111.19));
    CHECK(degrees_to_km(0.766) == doctest::Approx(85.17).epsilon(1e-4));
}

TEST_CASE("domain validation") {
    Domain d;
    CHECK_NOTHROW(d.validate());
    d.lat_max = d.lat_min;
    CHECK_THROWS_AS(d.validate(), InputError);
    Domain e;
    e.depth_min = -1;
    CHECK_THROWS_AS(e.validate(), InputError);
}

TEST_CASE("unit-cube midpoint maps to the domain centre") {
    const std::array<double, 4> u{0.5, 0.5, 0.5, 0.5};
    const Event e = map_unit_to_event(std::span<const double, 4>(u), Domain{});
    CHECK(e.loc.lat == doctest::Approx(41.0));
    CHECK(e.loc.lon == doctest::Approx(-110.18));
    CHECK(e.depth == doctest::Approx(20.0));
}

TEST_CASE("unscrambled Sobol point 1 is the cube centre") {
    const SobolSequence s(4, 0, false);
    for (double x : s.point(1)) CHECK(x == 0.5);
}

TEST_CASE("sobol events are deterministic and inside the domain") {
    const Domain d;
    const auto a = sobol_events(300, d, 11);
    const auto b = sobol_events(300, d, 11);
    CHECK(a == b);
    CHECK(a != sobol_events(300, d, 12));
    for (const auto& e : a) CHECK(d.contains(e));
    CHECK_THROWS_AS(sobol_events(0, d, 1), InputError);
}

TEST_CASE("sobol events have lower box discrepancy than iid sampling") {
    const Domain unit{0, 1, 0, 1, 0, 1, 0, 1};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t n : {64u, 256u}) {
        const auto q = sobol_events(n, unit, 1);
        std::vector<std::array<double, 4>> iid(n);
        for (auto& p : iid)
            for (auto& x : p) x = u(rng);
        double worst_q = 0, worst_iid = 0;
        for (int b = 0; b < 100; ++b) {
            std::array<double, 4> lo, hi;
            double vol = 1;
            for (int k = 0; k < 4; ++k) {
                double x = u(rng), y = u(rng);
                lo[k] = std::min(x, y);
                hi[k] = std::max(x, y);
                vol *= hi[k] - lo[k];
            }
            auto inside = [&](const std::array<double, 4>& p) {
                for (int k = 0; k < 4; ++k)
                    if (p[k] < lo[k] || p[k] >= hi[k]) return false;
                return true;
            };
            double cq = 0, ci = 0;
            for (const auto& e : q) cq += inside({e.loc.lat, e.loc.lon, e.depth, e.mag});
            for (const auto& p : iid) ci += inside(p);
            worst_q = std::max(worst_q, std::abs(cq / n - vol));
            worst_iid = std::max(worst_iid, std::abs(ci / n - vol));
        }
        CHECK(worst_q < worst_iid);
    }
}

TEST_CASE("point in polygon") {
    const auto sq = unit_square();
    CHECK(point_in_polygon({0.5, 0.5}, sq));
    CHECK_FALSE(point_in_polygon({2, 2}, sq));
    CHECK(point_in_polygon({0.0, 0.5}, sq));
    CHECK(point_in_polygon({1.0, 1.0}, sq));
    CHECK(sq.rings().front().front() == sq.rings().front().back());
}

TEST_CASE("point in polygon with a hole") {
    const PolygonRegion r({{{0, 0}, {0, 4}, {4, 4}, {4, 0}}, {{1, 1}, {1, 3}, {3, 3}, {3, 1}}});
    CHECK(point_in_polygon({0.5, 0.5}, r));
    CHECK_FALSE(point_in_polygon({2, 2}, r));
}

TEST_CASE("degenerate polygons are rejected") {
    CHECK_THROWS_AS(PolygonRegion({{{0, 0}, {1, 1}, {2, 2}}}), InputError);
    CHECK_THROWS_AS(PolygonRegion({{{0, 0}, {1, 1}}}), InputError);
}

TEST_CASE("point in polygon matches a raster oracle on convex polygons") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(0, 2 * M_PI), rad(0.5, 1.0);
    for (int t = 0; t < 20; ++t) {
        // Random convex polygon: sorted angles on a circle.
        std::vector<double> th(7);
        for (auto& a : th) a = ang(rng);
        std::sort(th.begin(), th.end());
        const double r = rad(rng);
        std::vector<GeoPoint> ring;
        for (double a : th) ring.push_back({r * std::sin(a), r * std::cos(a)});
        const PolygonRegion poly({ring});
        for (int i = 0; i < 40; ++i) {
            for (int j = 0; j < 40; ++j) {
                const GeoPoint p{-1 + 2 * (i + 0.5) / 40, -1 + 2 * (j + 0.5) / 40};
                if (distance_to_boundary(p, poly) < 1e-9) continue;
                // Convex oracle: same side of every edge (counter-clockwise in lon/lat).
                bool inside = true;
                for (std::size_t k = 0; k < ring.size(); ++k) {
                    const auto& a = ring[k];
                    const auto& b = ring[(k + 1) % ring.size()];
                    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
                    if (cross < 0) inside = false;
                }
                CHECK(point_in_polygon(p, poly) == inside);
            }
        }
    }
}

TEST_CASE("edge points found by exhaustive grid are inside") {
    const PolygonRegion tri({{{0, 0}, {0, 4}, {4, 0}}});
    for (int i = 0; i <= 8; ++i) {
        for (int j = 0; j <= 8; ++j) {
            const GeoPoint p{i * 0.5, j * 0.5};
            const bool on_edge = p.lat == 0 || p.lon == 0 || p.lat + p.lon == 4;
            const bool interior = p.lat > 0 && p.lon > 0 && p.lat + p.lon < 4;
            if (on_edge && p.lat + p.lon <= 4) CHECK(point_in_polygon(p, tri));
            else CHECK(point_in_polygon(p, tri) == interior);
        }
    }
}

TEST_CASE("distance to boundary") {
    const auto sq = unit_square();
    CHECK(distance_to_boundary({0.5, 0.5}, sq) == doctest::Approx(0.5));
    CHECK(distance_to_boundary({0.5, 0.9}, sq) == doctest::Approx(0.1));
    CHECK(distance_to_boundary({0.5, 1.0}, sq) == doctest::Approx(0.0));
}
