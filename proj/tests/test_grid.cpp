#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oceanfc/error.hpp"
#include "oceanfc/grid.hpp"
#include "oracles.hpp"

using namespace oceanfc;

TEST_CASE("latitude weights are cos(lat) and even in latitude") {
    auto g = oracle::small_grid(4, 2, 8, 4);
    const auto w = latitude_weights(g);
    REQUIRE(w.w.size() == 8u);
    for (int i = 0; i < 8; ++i) {
        CHECK(w.w[i] == doctest::Approx(std::cos(g.lat(i) * std::numbers::pi / 180.0)).epsilon(1e-15));
        CHECK(w.w[i] == doctest::Approx(w.w[7 - i]).epsilon(1e-14));
    }
}

TEST_CASE("cell geometry uses midpoint layer faces") {
    auto g = oracle::small_grid(4, 3, 4, 4);
    g.depths = {0, 10, 30};
    const auto geom = cell_geometry(g);
    CHECK(geom.dz[0] == doctest::Approx(5.0));
    CHECK(geom.dz[1] == doctest::Approx(15.0));
    CHECK(geom.dz[2] == doctest::Approx(10.0));
    CHECK(geom.volume(1, 2, 3) == doctest::Approx(geom.dx[2] * geom.dy * 15.0));
}

TEST_CASE("band volume converges towards the spherical shell value") {
    auto band_error = [](int n_lat) {
        Grid3DSpec g;
        g.n_depth = 2;
        g.n_lat = n_lat;
        g.n_lon = 2 * n_lat;
        g.d_lat = 120.0 / n_lat;
        g.lat0 = -60.0 + 0.5 * g.d_lat;
        g.d_lon = 360.0 / g.n_lon;
        g.depths = {0.0, 100.0};
        const auto geom = cell_geometry(g);
        double v = 0.0;
        for (double x : geom.vol) v += x;
        const double exact = 4.0 * std::numbers::pi * kEarthRadius * kEarthRadius * std::sin(60.0 * std::numbers::pi / 180.0) / 2.0 * 100.0;
        return std::abs(v - exact) / exact;
    };
    CHECK(band_error(32) < band_error(8));
}

TEST_CASE("polar rows and degenerate grids are rejected") {
    Grid3DSpec g = oracle::small_grid(4, 2, 4, 4);
    g.lat0 = -90.0;
    try {
        latitude_weights(g);
        FAIL("expected PolarRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PolarRow);
    }
    Grid3DSpec z = oracle::small_grid(4, 2, 4, 4);
    z.n_lon = 0;
    CHECK_THROWS_AS(z.validate(), Error);
}

TEST_CASE("mask validation finds non-contiguous columns") {
    auto g = oracle::small_grid(4, 3, 2, 2);
    auto m = LandSeaMask::all_ocean(g);
    CHECK(validate_mask(m).empty());
    m.set(0, 1, 1, false);
    const auto v = validate_mask(m);
    REQUIRE(v.size() == 1u);
    CHECK(v[0].i == 1);
    CHECK(v[0].j == 1);
}

TEST_CASE("apply_mask writes NaN into land cells of every variable") {
    auto g = oracle::small_grid(3, 2, 2, 2);
    auto m = LandSeaMask::all_ocean(g);
    m.set(1, 0, 1, false);
    OceanState s = OceanState::zeros(g, 0);
    apply_mask(s, m);
    for (int v = 0; v < 3; ++v) {
        CHECK(std::isnan(s.at(v, 1, 0, 1)));
        CHECK(s.at(v, 0, 0, 1) == 0.0);
    }
}

TEST_CASE("sections wrap across the dateline") {
    Grid3DSpec g = oracle::small_grid(4, 2, 9, 36, true);
    const SectionSpec sec{"eq", 0.0, 140.0, 260.0};
    const auto cols = section_columns(g, sec);
    int expect = 0;
    for (int j = 0; j < g.n_lon; ++j) {
        const double lon = g.lon(j);
        if (lon >= 140.0 && lon <= 260.0) ++expect;
    }
    CHECK(static_cast<int>(cols.size()) == expect);
    CHECK(g.lon(cols.front()) == doctest::Approx(140.0));
    for (std::size_t c = 1; c < cols.size(); ++c) CHECK(cols[c] == (cols[c - 1] + 1) % g.n_lon);
}

TEST_CASE("a full-row section is the row itself") {
    Grid3DSpec g = oracle::small_grid(4, 3, 5, 12, true);
    std::mt19937_64 rng(1);
    const auto s = oracle::random_state(g, rng, 0);
    const SectionSpec sec{"row", g.lat(2), g.lon(0), g.lon(g.n_lon - 1)};
    const auto f = extract_section(s, sec, kSo);
    REQUIRE(f.columns.size() == 12u);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 12; ++j) CHECK(f.at(k, j) == s.at(kSo, k, 2, j));
}

TEST_CASE("section outside the latitude band is out of domain") {
    Grid3DSpec g = oracle::small_grid(4, 2, 8, 8);
    try {
        snap_row(g, 80.0);
        FAIL("expected OutOfDomain");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfDomain);
    }
}
