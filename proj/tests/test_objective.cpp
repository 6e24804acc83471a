#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oceanfc/calendar.hpp"
#include "oceanfc/error.hpp"
#include "oceanfc/objective.hpp"
#include "oracles.hpp"

using namespace oceanfc;

TEST_CASE("increment and apply_increment") {
    auto g = oracle::small_grid(4, 2, 3, 3);
    std::mt19937_64 rng(5);
    auto a = oracle::random_state(g, rng, 10);
    auto b = a;
    std::uniform_real_distribution<double> nudge(-0.4, 0.4);
    for (double& x : b.data) x += nudge(rng) * std::abs(x);
    b.time = 11;
    const auto d = increment(a, b);
    CHECK(d.lead == 1);
    CHECK(d.time == 10);
    const auto back = apply_increment(a, d);
    CHECK(back.time == 11);
    CHECK(back.data == b.data);
    CHECK_THROWS_AS(increment(b, a), Error);
}

TEST_CASE("loss matches the loop definition and its invariances") {
    std::mt19937_64 rng(6);
    for (int c = 0; c < 20; ++c) {
        auto g = oracle::small_grid(1 + c % 4, 1 + c % 3, 3 + c % 5, 2 + c % 7);
        const auto mask = oracle::random_mask(g, rng, 0.3);
        auto p = oracle::random_state(g, rng, 0), t = oracle::random_state(g, rng, 0);
        const auto w = latitude_weights(g);
        const double l = weighted_increment_mse(p, t, mask, w);
        CHECK(l == doctest::Approx(oracle::loss_loop(p.data, t.data, g, mask, w.w)).epsilon(1e-12));
        auto w2 = w;
        for (double& x : w2.w) x *= 5;
        CHECK(weighted_increment_mse(p, t, mask, w2) == doctest::Approx(l).epsilon(1e-14));
        apply_mask(p, mask);
        CHECK(weighted_increment_mse(p, t, mask, w) == l);
    }
}

TEST_CASE("perfect prediction has zero loss; an all-land mask is an error") {
    auto g = oracle::small_grid(2, 2, 3, 3);
    std::mt19937_64 rng(7);
    auto p = oracle::random_state(g, rng, 0);
    const auto w = latitude_weights(g);
    CHECK(weighted_increment_mse(p, p, LandSeaMask::all_ocean(g), w) == 0.0);
    LandSeaMask land = LandSeaMask::all_ocean(g);
    std::fill(land.valid.begin(), land.valid.end(), 0);
    try {
        weighted_increment_mse(p, p, land, w);
        FAIL("expected EmptyMask");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyMask);
    }
}

TEST_CASE("calendar slots put Feb 29 at 60 and Mar 1 at 61") {
    CHECK(climatology_slot(epoch_day(2020, 2, 29)) == 60);
    CHECK(climatology_slot(epoch_day(2021, 3, 1)) == 61);
    CHECK(climatology_slot(epoch_day(2020, 3, 1)) == 61);
    CHECK(climatology_slot(epoch_day(2019, 12, 31)) == 366);
    CHECK(climatology_slot(epoch_day(1993, 1, 1)) == 1);
}

TEST_CASE("climatology: slot means, gap filling, leap-day average") {
    auto g = oracle::small_grid(1, 1, 2, 2);
    const auto mask = LandSeaMask::all_ocean(g);
    std::vector<OceanState> xs;
    for (int y : {2019, 2021}) {
        for (unsigned m : {2u, 3u}) {
            OceanState s = OceanState::zeros(g, epoch_day(y, m, m == 2 ? 28 : 1));
            for (double& x : s.data) x = (m == 2 ? 1.0 : 5.0) + (y == 2021 ? 2.0 : 0.0);
            xs.push_back(s);
        }
    }
    const auto c = build_climatology(xs, mask);
    const double feb = 2.0, mar = 6.0;
    CHECK(c.sample_count[58] == 2);
    CHECK(c.slot(59).data[0] == doctest::Approx(feb));
    CHECK(c.slot(61).data[0] == doctest::Approx(mar));
    CHECK(c.slot(60).data[0] == doctest::Approx(0.5 * (feb + mar)));
    CHECK(c.source[59] == -1);
    CHECK(c.source[199] == 61);
    CHECK(c.source[0] == 59);
}

TEST_CASE("anomaly plus climatology reconstructs the state") {
    auto g = oracle::small_grid(4, 2, 3, 3);
    std::mt19937_64 rng(8);
    const auto mask = LandSeaMask::all_ocean(g);
    std::vector<OceanState> xs;
    for (int d = 0; d < 3; ++d) xs.push_back(oracle::random_state(g, rng, 7000 + d));
    const auto c = build_climatology(xs, mask, 3);
    const auto a = anomaly(xs[1], c);
    const auto& ref = c.for_day(xs[1].time);
    for (std::size_t n = 0; n < a.data.size(); ++n) CHECK(a.data[n] + ref.data[n] == doctest::Approx(xs[1].data[n]).epsilon(1e-15));
}

TEST_CASE("climatology directory round trip") {
    auto g = canonical_spec(oracle::small_grid(4, 2, 2, 3));
    std::mt19937_64 rng(9);
    std::vector<OceanState> xs{oracle::random_state(g, rng, 7000)};
    for (double& x : xs[0].data) x = static_cast<float>(x);
    const auto c = build_climatology(xs, LandSeaMask::all_ocean(g));
    const auto dir = std::filesystem::temp_directory_path() / "oceanfc_clim_rt";
    std::filesystem::remove_all(dir);
    write_climatology(dir, c);
    const auto back = read_climatology(dir);
    CHECK(back.spec == c.spec);
    CHECK(back.source == c.source);
    CHECK(back.sample_count == c.sample_count);
    for (int s = 1; s <= kClimatologySlots; ++s) CHECK(back.slot(s).data == c.slot(s).data);
    std::filesystem::remove_all(dir);
}
