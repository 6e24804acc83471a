#include <cmath>
#include <set>

#include "doctest.h"
#include "oceanfc/rollout.hpp"
#include "oceanfc/synth.hpp"
#include "oracles.hpp"
#include "util.hpp"

using namespace oceanfc;
using testutil::code_of;

namespace {

SynthParams tiny_params() {
    auto p = default_synth_params();
    p.grid.n_lat = 8;
    p.grid.n_lon = 16;
    p.grid.d_lat = 120.0 / 8;
    p.grid.lat0 = -60.0 + 0.5 * p.grid.d_lat;
    p.grid.d_lon = 360.0 / 16;
    return p;
}

ForcingByDay zero_forcing(const Grid3DSpec& g, std::int64_t from, std::int64_t to) {
    ForcingByDay f;
    for (auto d = from; d <= to; ++d) f.emplace(d, ForcingState::zeros(g, d));
    return f;
}

}  // namespace

TEST_CASE("planned schedules are valid and use FM5 only past five days") {
    for (int h = 1; h <= 20; ++h) {
        const auto s = plan_schedule(h);
        CHECK_NOTHROW(validate_schedule(s));
        std::set<int> produced;
        int fm5 = 0;
        for (const auto& st : s.steps) {
            CHECK(produced.insert(st.produced()).second);
            fm5 += st.propagator == "fm5";
        }
        CHECK(produced.size() == std::size_t(h));
        CHECK(fm5 == std::max(0, h - 5));
    }
    const auto s = plan_schedule(7);
    CHECK(s.steps.back().propagator == "fm5");
    CHECK(s.steps.back().base == 2);
}

TEST_CASE("invalid schedules raise BadHorizon") {
    CHECK(code_of([] { plan_schedule(0); }) == ErrorCode::BadHorizon);
    CHECK(code_of([] { plan_schedule(5, 2); }) == ErrorCode::BadHorizon);
    RolloutSchedule gap{3, {{"fm1", 0, 1}, {"fm1", 1, 1}}};
    CHECK(code_of([&] { validate_schedule(gap); }) == ErrorCode::BadHorizon);
    RolloutSchedule twice{2, {{"fm1", 0, 1}, {"fm1", 0, 1}, {"fm1", 1, 1}}};
    CHECK(code_of([&] { validate_schedule(twice); }) == ErrorCode::BadHorizon);
    RolloutSchedule future{3, {{"fm1", 2, 1}, {"fm1", 0, 1}, {"fm1", 1, 1}}};
    CHECK(code_of([&] { validate_schedule(future); }) == ErrorCode::BadHorizon);
}

TEST_CASE("rollout records provenance and needs forcing") {
    const auto g = oracle::small_grid(4, 2, 4, 6);
    std::mt19937_64 rng(3);
    const auto a = oracle::random_state(g, rng, 49), b = oracle::random_state(g, rng, 50);
    PropagatorSet props{{"fm1", make_persistence(1, "fm1")}, {"fm5", make_persistence(5, "fm5")}};
    const auto sched = plan_schedule(7);
    const auto tr = rollout(a, b, zero_forcing(g, 49, 60), props, sched);
    CHECK(tr.init_day == 50);
    CHECK(tr.provenance.at(0) == "truth");
    CHECK(tr.provenance.at(3) == "fm1@2+1");
    CHECK(tr.provenance.at(7) == "fm5@2+5");
    CHECK(tr.at(7).time == 57);
    CHECK(tr.at(7).data == b.data);
    CHECK(code_of([&] { tr.at(8); }) == ErrorCode::MissingInputDay);
    CHECK(code_of([&] { rollout(a, b, zero_forcing(g, 49, 53), props, sched); }) == ErrorCode::MissingForcing);
    PropagatorSet missing{{"fm1", make_persistence(1, "fm1")}};
    CHECK_THROWS_AS(rollout(a, b, zero_forcing(g, 49, 60), missing, sched), Error);
}

TEST_CASE("forecast suite, written forecasts and manifest round trip") {
    const auto p = tiny_params();
    const auto mask = default_synth_mask(p.grid);
    const auto dir = testutil::tmpdir("rollout_suite");
    const auto manifest = gen_dataset(p, 200, 12, mask, dir / "data");
    PropagatorSet props{{"fm1", make_persistence(1, "fm1")}, {"fm5", make_persistence(5, "fm5")}};
    const auto runs = forecast_suite(manifest, {201, 203}, props, plan_schedule(6), &mask);
    REQUIRE(runs.size() == 2u);
    CHECK(runs[1].truth.at(6).time == 209);
    CHECK(code_of([&] { forecast_suite(manifest, {200}, props, plan_schedule(6)); }) == ErrorCode::InsufficientData);

    write_forecasts(dir / "fc", runs);
    const auto stored = read_forecast_manifest(dir / "fc");
    REQUIRE(stored.size() == 12u);
    CHECK(stored[0].init_day == 201);
    CHECK(stored[0].lead == 1);
    CHECK(stored[0].valid_day == 202);
    CHECK(stored[0].source == "fm1@0+1");
    const auto back = read_ocean(stored.back().file);
    const auto& want = runs[1].forecast.at(6);
    for (std::size_t n = 0; n < want.data.size(); ++n) {
        if (std::isnan(want.data[n])) CHECK(std::isnan(back.data[n]));
        else CHECK(back.data[n] == doctest::Approx(want.data[n]).epsilon(1e-6));
    }
}
