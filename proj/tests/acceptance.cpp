// Acceptance gate: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oceanfc/calendar.hpp"
#include "oceanfc/cli.hpp"
#include "oceanfc/diagnostics.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/propagators.hpp"
#include "oceanfc/rollout.hpp"
#include "oceanfc/swin3d.hpp"
#include "oceanfc/synth.hpp"
#include "oceanfc/train.hpp"
#include "oracles.hpp"

using namespace oceanfc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_err(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("oceanfc_accept_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ---------------------------------------------------------------------------

Outcome loss_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> small(1, 4), wide(2, 8);
    std::uniform_real_distribution<double> wdist(0.05, 1.0);
    double worst = 0.0;
    bool invariant = true;
    for (int c = 0; c < 100; ++c) {
        const auto g = oracle::small_grid(small(rng), small(rng), wide(rng), wide(rng));
        const auto mask = oracle::random_mask(g, rng, 0.3);
        auto pred = oracle::random_state(g, rng, 0);
        auto truth = oracle::random_state(g, rng, 0);
        LatitudeWeights w;
        for (int i = 0; i < g.n_lat; ++i) w.w.push_back(wdist(rng));
        const double got = weighted_increment_mse(pred, truth, mask, w);
        worst = std::max(worst, rel_err(got, oracle::loss_loop(pred.data, truth.data, g, mask, w.w)));

        LatitudeWeights w5 = w;
        for (double& x : w5.w) x *= 5.0;
        if (rel_err(weighted_increment_mse(pred, truth, mask, w5), got) > 1e-14) invariant = false;

        for (double fill : {0.0, 1e9, std::nan("")}) {
            auto p2 = pred, t2 = truth;
            for (int v = 0; v < g.n_var; ++v)
                for (int k = 0; k < g.n_depth; ++k)
                    for (int i = 0; i < g.n_lat; ++i)
                        for (int j = 0; j < g.n_lon; ++j)
                            if (!mask.ocean(k, i, j)) p2.at(v, k, i, j) = t2.at(v, k, i, j) = fill;
            if (weighted_increment_mse(p2, t2, mask, w) != got) invariant = false;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && invariant && secs < 5.0,
            "max rel err " + fmt("%.2e", worst) + ", invariances " + (invariant ? "exact" : "BROKEN") + ", " +
                fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    const auto g = oracle::small_grid(4, 2, 8, 8);
    const auto cfg = oracle::gradcheck_config();
    const Swin3dModel model(cfg, g);
    ParamSet p = model.init_params();
    std::normal_distribution<double> n(0.0, 0.2);
    for (double& x : p.values) x += n(rng);

    const auto mask = oracle::random_mask(g, rng, 0.25);
    const auto w = latitude_weights(g);
    std::vector<OceanState> xs;
    std::vector<ForcingState> fs_;
    for (int t = 0; t < 4; ++t) {
        xs.push_back(oracle::random_state(g, rng, t));
        apply_mask(xs.back(), mask);
        fs_.push_back(oracle::random_forcing(g, rng, t));
    }
    const auto stats = compute_norm_stats(xs, fs_, mask);
    std::vector<StateIncrement> truths{increment(xs[1], xs[2]), increment(xs[2], xs[3])};
    std::vector<TrainingSample> batch{{&xs[0], &xs[1], &fs_[0], &fs_[1], &truths[0]},
                                      {&xs[1], &xs[2], &fs_[1], &fs_[2], &truths[1]}};

    std::vector<double> grad, scratch_grad;
    model.loss_and_grad(p, batch, mask, w, stats, grad);
    std::size_t failures = 0;
    double worst = 0.0;
    std::string worst_name;
    for (const auto& e : p.layout)
        for (std::size_t o = e.offset; o < e.offset + e.count(); ++o) {
            const double keep = p.values[o];
            const double eps = 1e-4 * std::max(1.0, std::abs(keep));
            p.values[o] = keep + eps;
            const double lp = model.loss_and_grad(p, batch, mask, w, stats, scratch_grad);
            p.values[o] = keep - eps;
            const double lm = model.loss_and_grad(p, batch, mask, w, stats, scratch_grad);
            p.values[o] = keep;
            const double fd = (lp - lm) / (2.0 * eps);
            const double err = std::abs(fd - grad[o]);
            const double tol = std::max(1e-7, 1e-4 * std::max(std::abs(fd), std::abs(grad[o])));
            if (err > tol) ++failures;
            const double ratio = err / tol;
            if (ratio > worst) {
                worst = ratio;
                worst_name = e.name;
            }
        }
    const double secs = seconds_since(t0);
    return {failures == 0 && p.count() <= 5000 && secs < 60.0,
            std::to_string(p.count()) + " params over " + std::to_string(p.layout.size()) + " tensors, " +
                std::to_string(failures) + " outside tolerance, worst err/tol " + fmt("%.3f", worst) + " (" +
                worst_name + "), " + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------

// V carries a one-hot token identity, so row q of the output is exactly the
// attention distribution of token q.
bool one_hot_leakage_free(const std::array<int, 3>& n, const std::array<int, 3>& win, const std::array<int, 3>& sh,
                          const std::array<bool, 3>& periodic, std::mt19937_64& rng, std::size_t& checked) {
    const int N = n[0] * n[1] * n[2];
    auto plan = std::make_shared<const ad::WindowPlan>(make_window_plan(n, win, sh, periodic));
    ad::Tensor qkv(N, 3 * N);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < N; ++t) {
        for (int c = 0; c < 2 * N; ++c) qkv(t, c) = nd(rng);
        qkv(t, 2 * N + t) = 1.0;
    }
    ad::Tape tape;
    const auto out = tape.window_attention(tape.constant(qkv), plan, 1);
    const ad::Tensor& a = tape.value(out);

    auto coords = [&](int t) { return std::array<int, 3>{t / (n[1] * n[2]), (t / n[2]) % n[1], t % n[2]}; };
    for (int q = 0; q < N; ++q) {
        const auto pq = coords(q);
        double total = 0.0;
        for (int k = 0; k < N; ++k) {
            const auto pk = coords(k);
            bool allowed = true;
            for (int ax = 0; ax < 3; ++ax) {
                const int sq = ((pq[ax] - sh[ax]) % n[ax] + n[ax]) % n[ax];
                const int sk = ((pk[ax] - sh[ax]) % n[ax] + n[ax]) % n[ax];
                if (sq / win[ax] != sk / win[ax]) allowed = false;
                if (!periodic[ax] && sh[ax] > 0 && ((pq[ax] < sh[ax]) != (pk[ax] < sh[ax]))) allowed = false;
            }
            const double wgt = a(q, k);
            if (allowed ? !(wgt > 0.0) : wgt != 0.0) return false;
            total += wgt;
            ++checked;
        }
        if (std::abs(total - 1.0) > 1e-12) return false;
    }
    return true;
}

OceanState roll_lon(const GriddedField& f, int s) {
    OceanState out;
    out.spec = f.spec;
    out.time = f.time;
    out.data.resize(f.data.size());
    const int W = f.spec.n_lon;
    for (std::size_t row = 0; row < f.data.size() / W; ++row)
        for (int j = 0; j < W; ++j) out.data[row * W + (j + s) % W] = f.data[row * W + j];
    return out;
}

Outcome window_isolation() {
    std::mt19937_64 rng(303);
    std::size_t checked = 0;
    bool leak_ok = true;
    leak_ok &= one_hot_leakage_free({4, 8, 8}, {2, 4, 4}, {1, 2, 2}, {false, false, false}, rng, checked);
    leak_ok &= one_hot_leakage_free({4, 8, 8}, {2, 4, 4}, {1, 2, 2}, {false, false, true}, rng, checked);
    leak_ok &= one_hot_leakage_free({2, 6, 9}, {2, 3, 3}, {1, 1, 1}, {false, false, false}, rng, checked);
    leak_ok &= one_hot_leakage_free({4, 8, 8}, {2, 4, 4}, {0, 0, 0}, {false, false, false}, rng, checked);

    // Translation: global grid, no positional embedding, shift by one bottleneck
    // window (16 cells), which is a whole number of windows at every stage.
    auto g = oracle::small_grid(4, 2, 8, 64, true);
    Swin3dConfig cfg;
    cfg.patch = {1, 2, 2};
    cfg.embed_dim = 8;
    cfg.window = {2, 2, 4};
    cfg.encoder_depths = {2};
    cfg.bottleneck_depth = 2;
    cfg.heads = 2;
    cfg.mlp_ratio = 2;
    cfg.pos_embed = false;
    cfg.seed = 5;
    const Swin3dModel model(cfg, g);
    ParamSet p = model.init_params();
    std::normal_distribution<double> nd(0.0, 0.1);
    for (double& x : p.values) x += nd(rng);
    const auto stats = oracle::random_stats(g, rng);
    auto mask = oracle::random_mask(g, rng, 0.2);
    auto xp = oracle::random_state(g, rng, 0), xt = oracle::random_state(g, rng, 1);
    apply_mask(xp, mask);
    apply_mask(xt, mask);
    const auto fp = oracle::random_forcing(g, rng, 0), ft = oracle::random_forcing(g, rng, 1);
    const int s = 16;
    auto fshift = [&](const ForcingState& f) {
        ForcingState r;
        static_cast<GriddedField&>(r) = roll_lon(f, s);
        return r;
    };
    const auto base = model.forward(p, xp, xt, fp, ft, stats, 1);
    const auto moved = model.forward(p, roll_lon(xp, s), roll_lon(xt, s), fshift(fp), fshift(ft), stats, 1);
    const bool translation_ok = same_bits(roll_lon(base, s).data, moved.data);

    return {leak_ok && translation_ok, std::to_string(checked) + " one-hot attention weights " +
                                           (leak_ok ? "exactly masked" : "LEAK") +
                                           ", lon translation by 16 cells " +
                                           (translation_ok ? "bitwise consistent" : "INCONSISTENT")};
}

// ---------------------------------------------------------------------------

Outcome rollout_identities() {
    std::mt19937_64 rng(404);
    auto g = oracle::small_grid(4, 3, 6, 8);
    const auto mask = oracle::random_mask(g, rng, 0.2);
    auto x0 = oracle::random_state(g, rng, 99), xm = oracle::random_state(g, rng, 98);
    apply_mask(x0, mask);
    apply_mask(xm, mask);
    ForcingByDay forcing;
    for (std::int64_t d = 90; d < 140; ++d) forcing[d] = oracle::random_forcing(g, rng, d);

    PropagatorSet persist{{"fm1", make_persistence(1, "fm1")}, {"fm5", make_persistence(5, "fm5")}};
    bool coverage = true, constant = true;
    for (int h = 1; h <= 30; ++h) {
        const auto sched = plan_schedule(h);
        std::multiset<int> produced;
        for (const auto& st : sched.steps) produced.insert(st.produced());
        std::multiset<int> want;
        for (int d = 1; d <= h; ++d) want.insert(d);
        coverage &= produced == want;
        const auto traj = rollout(xm, x0, forcing, persist, sched);
        for (int d = 1; d <= h; ++d) constant &= same_bits(traj.at(d).data, x0.data);
    }

    // Scheduler versus a hand-written loop with the advective surrogate.
    OceanState a0 = x0, am = xm;
    std::uniform_real_distribution<double> vel(-0.3, 0.3);
    for (int k = 0; k < g.n_depth; ++k)
        for (int i = 0; i < g.n_lat; ++i)
            for (int j = 0; j < g.n_lon; ++j)
                for (auto* st : {&a0, &am})
                    for (int v : {kUo, kVo})
                        if (mask.ocean(k, i, j)) st->at(v, k, i, j) = vel(rng);
    AdvectionParams prm;
    prm.kappa = 500.0;
    prm.gamma = 1e-7;
    PropagatorSet adv{{"fm1", make_advective(mask, prm, 1, "fm1")}, {"fm5", make_advective(mask, prm, 5, "fm5")}};
    const auto traj = rollout(am, a0, forcing, adv, plan_schedule(3));
    OceanState x = a0;
    bool direct = true;
    for (int d = 1; d <= 3; ++d) {
        x = apply_increment(x, advective_step(x, forcing.at(x.time), mask, prm, 1));
        direct &= same_bits(traj.at(d).data, x.data) && traj.at(d).time == x.time;
    }
    return {coverage && constant && direct, std::string("coverage ") + (coverage ? "exact" : "WRONG") +
                                                " for h=1..30, persistence " + (constant ? "bitwise constant" : "DRIFTS") +
                                                ", advective h=3 scheduler vs loop " +
                                                (direct ? "bitwise equal" : "DIFFERENT")};
}

// ---------------------------------------------------------------------------

double ref_rmse(const std::vector<OceanState>& f, const std::vector<OceanState>& t, const LandSeaMask& m, int v,
                int k0, int k1) {
    const auto& g = f[0].spec;
    long double num = 0, den = 0;
    for (std::size_t n = 0; n < f.size(); ++n)
        for (std::size_t c = 0; c < g.cells(); ++c) {
            const int k = static_cast<int>(c / (std::size_t(g.n_lat) * g.n_lon));
            const int i = static_cast<int>(c / g.n_lon % g.n_lat);
            if (k < k0 || k >= k1 || !m.valid[c]) continue;
            const double wi = std::cos(g.lat(i) * std::numbers::pi / 180.0);
            const long double e = f[n].data[v * g.cells() + c] - t[n].data[v * g.cells() + c];
            num += wi * e * e;
            den += wi;
        }
    return std::sqrt(static_cast<double>(num / den));
}

double ref_acc(const std::vector<OceanState>& f, const std::vector<OceanState>& t, const Climatology& clim,
               const LandSeaMask& m, int v) {
    const auto& g = f[0].spec;
    long double fo = 0, ff = 0, oo = 0;
    for (std::size_t n = 0; n < f.size(); ++n) {
        const auto& cf = clim.slots[climatology_slot(f[n].time) - 1];
        const auto& ct = clim.slots[climatology_slot(t[n].time) - 1];
        for (std::size_t c = 0; c < g.cells(); ++c) {
            if (!m.valid[c]) continue;
            const int i = static_cast<int>(c / g.n_lon % g.n_lat);
            const double wi = std::cos(g.lat(i) * std::numbers::pi / 180.0);
            const long double a = f[n].data[v * g.cells() + c] - cf.data[v * g.cells() + c];
            const long double b = t[n].data[v * g.cells() + c] - ct.data[v * g.cells() + c];
            fo += wi * a * b;
            ff += wi * a * a;
            oo += wi * b * b;
        }
    }
    return static_cast<double>(fo / std::sqrt(ff * oo));
}

double cell_volume(const Grid3DSpec& g, int k, int i) {
    const double r = std::numbers::pi / 180.0;
    const double top = k == 0 ? 0.0 : 0.5 * (g.depths[k - 1] + g.depths[k]);
    const double bot = k + 1 == g.n_depth ? g.depths[k] : 0.5 * (g.depths[k] + g.depths[k + 1]);
    return kEarthRadius * std::cos(g.lat(i) * r) * g.d_lon * r * kEarthRadius * g.d_lat * r * (bot - top);
}

double ref_eke(const std::vector<OceanState>& s, const LandSeaMask& m) {
    const auto& g = s[0].spec;
    long double total = 0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
        if (!m.valid[c]) continue;
        const int k = static_cast<int>(c / (std::size_t(g.n_lat) * g.n_lon));
        const int i = static_cast<int>(c / g.n_lon % g.n_lat);
        long double ub = 0, vb = 0;
        for (const auto& x : s) {
            ub += x.data[kUo * g.cells() + c];
            vb += x.data[kVo * g.cells() + c];
        }
        ub /= s.size();
        vb /= s.size();
        for (const auto& x : s) {
            const long double du = x.data[kUo * g.cells() + c] - ub, dv = x.data[kVo * g.cells() + c] - vb;
            total += cell_volume(g, k, i) * (du * du + dv * dv) / 2;
        }
    }
    return static_cast<double>(total / s.size());
}

double ref_variance(const std::vector<OceanState>& s, const LandSeaMask& m, int v) {
    const auto& g = s[0].spec;
    long double total = 0;
    for (const auto& x : s) {
        long double vol = 0, sum = 0;
        for (std::size_t c = 0; c < g.cells(); ++c)
            if (m.valid[c]) {
                const int k = static_cast<int>(c / (std::size_t(g.n_lat) * g.n_lon));
                const int i = static_cast<int>(c / g.n_lon % g.n_lat);
                vol += cell_volume(g, k, i);
                sum += cell_volume(g, k, i) * x.data[v * g.cells() + c];
            }
        const long double mean = sum / vol;
        for (std::size_t c = 0; c < g.cells(); ++c)
            if (m.valid[c]) {
                const int k = static_cast<int>(c / (std::size_t(g.n_lat) * g.n_lon));
                const int i = static_cast<int>(c / g.n_lon % g.n_lat);
                const long double d = x.data[v * g.cells() + c] - mean;
                total += cell_volume(g, k, i) * d * d;
            }
    }
    return static_cast<double>(total / s.size());
}

Outcome diagnostics_oracles() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    bool acc_bounded = true;
    int acc_cases = 0;
    for (int c = 0; c < 20; ++c) {
        auto g = oracle::small_grid(4, 3, 5 + c % 3, 6 + c % 4);
        const auto mask = oracle::random_mask(g, rng, 0.3);
        const auto geom = cell_geometry(g);
        const auto w = latitude_weights(g);
        std::vector<OceanState> fc, tr;
        for (int n = 0; n < 3; ++n) {
            fc.push_back(oracle::random_state(g, rng, 7300 + 2 * n));
            tr.push_back(oracle::random_state(g, rng, 7300 + 2 * n));
            apply_mask(fc.back(), mask);
            apply_mask(tr.back(), mask);
        }
        LeadPairs lp{1, {}, {}};
        for (int n = 0; n < 3; ++n) {
            lp.forecasts.push_back(&fc[n]);
            lp.truths.push_back(&tr[n]);
        }
        const std::vector<LeadPairs> leads{lp};
        const auto col = rmse(leads, mask, w, RmseScope::Column);
        for (int v = 0; v < 4; ++v) worst = std::max(worst, rel_err(col[v].y[0], ref_rmse(fc, tr, mask, v, 0, 3)));
        for (const auto& cv : rmse(leads, mask, w, RmseScope::PerDepth)) {
            const int v = ocean_var_index(cv.variable);
            const int k = static_cast<int>(std::find(g.depths.begin(), g.depths.end(), *cv.depth_m) - g.depths.begin());
            worst = std::max(worst, rel_err(cv.y[0], ref_rmse(fc, tr, mask, v, k, k + 1)));
        }

        std::vector<OceanState> climsrc;
        for (int d = 0; d < 5; ++d) climsrc.push_back(oracle::random_state(g, rng, 7300 + d));
        const auto clim = build_climatology(climsrc, mask);
        for (const auto& a : acc(leads, clim, mask, w))
            worst = std::max(worst, rel_err(a.y[0], ref_acc(fc, tr, clim, mask, ocean_var_index(a.variable))));

        worst = std::max(worst, rel_err(eke(tr, geom, mask), ref_eke(tr, mask)));
        for (int v = 0; v < 4; ++v) worst = std::max(worst, rel_err(field_variance(tr, v, geom, mask), ref_variance(tr, mask, v)));
    }

    // ACC bounds, including near-perfect and anti-correlated forecasts.
    {
        auto g = oracle::small_grid(4, 2, 4, 5);
        const auto mask = oracle::random_mask(g, rng, 0.2);
        const auto w = latitude_weights(g);
        std::vector<OceanState> cs{oracle::random_state(g, rng, 10)};
        const auto clim = build_climatology(cs, mask);
        std::uniform_real_distribution<double> mix(-1.0, 1.0);
        for (int c = 0; c < 1000; ++c) {
            auto t = oracle::random_state(g, rng, 10);
            auto f = oracle::random_state(g, rng, 10, c % 4 == 0 ? 1e-9 : 1.0);
            const double m = mix(rng);
            const auto& base = clim.for_day(10).data;
            for (std::size_t n = 0; n < f.data.size(); ++n) f.data[n] += base[n] + m * (t.data[n] - base[n]);
            apply_mask(t, mask);
            apply_mask(f, mask);
            const std::vector<LeadPairs> leads{{1, {&f}, {&t}}};
            for (const auto& a : acc(leads, clim, mask, w)) {
                ++acc_cases;
                acc_bounded &= a.y[0] >= -1.0 && a.y[0] <= 1.0;
            }
        }
    }

    // OHC analytic cases.
    double ohc_err = 0.0;
    {
        Grid3DSpec g = oracle::small_grid(4, 6, 3, 3);
        g.depths = {0, 10, 30, 60, 100, 200};
        const auto mask = LandSeaMask::all_ocean(g);
        OceanState s = OceanState::zeros(g, 0);
        for (int k = 0; k < 6; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s.at(kThetao, k, i, j) = 1.0;
        ohc_err = std::max(ohc_err, rel_err(ohc(s, mask, 100.0)[4], 408'462'500.0));
        const double a = 12.0, b = -0.05;
        for (int k = 0; k < 6; ++k)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) s.at(kThetao, k, i, j) = a + b * g.depths[k];
        for (double z : {100.0, 80.0, 150.0})
            ohc_err = std::max(ohc_err, rel_err(ohc(s, mask, z)[0],
                                                kSeawaterDensity * kSeawaterHeatCapacity * (a * z + 0.5 * b * z * z)));
    }

    // SST gradient of a field linear in latitude and longitude.
    double sst_err = 0.0;
    {
        auto g = oracle::small_grid(4, 2, 7, 9);
        const auto mask = LandSeaMask::all_ocean(g);
        const auto geom = cell_geometry(g);
        OceanState s = OceanState::zeros(g, 0);
        const double c_lat = 0.3, c_lon = -0.2;
        for (int i = 0; i < g.n_lat; ++i)
            for (int j = 0; j < g.n_lon; ++j) s.at(kThetao, 0, i, j) = c_lat * g.lat(i) + c_lon * g.lon(j);
        const auto grad = sst_gradient(s, geom, mask);
        const double r = std::numbers::pi / 180.0;
        for (int i = 1; i + 1 < g.n_lat; ++i)
            for (int j = 1; j + 1 < g.n_lon; ++j) {
                const double gx = c_lon / (kEarthRadius * std::cos(g.lat(i) * r) * r);
                const double gy = c_lat / (kEarthRadius * r);
                sst_err = std::max(sst_err, rel_err(grad[i * g.n_lon + j], std::hypot(gx, gy)));
            }
    }
    const bool ok = worst <= 1e-12 && acc_bounded && acc_cases >= 1000 && ohc_err <= 1e-9 && sst_err <= 1e-12;
    return {ok, "rmse/acc/eke/variance max rel err " + fmt("%.2e", worst) + ", ACC in [-1,1] on " +
                    std::to_string(acc_cases) + " cases" + (acc_bounded ? "" : " VIOLATED") + ", OHC rel err " +
                    fmt("%.2e", ohc_err) + ", SST gradient rel err " + fmt("%.2e", sst_err)};
}

// ---------------------------------------------------------------------------

Outcome advective_physics() {
    std::mt19937_64 rng(606);
    // Conservation on a periodic grid with land.
    auto g = oracle::small_grid(4, 3, 10, 24, true);
    const auto mask = oracle::random_mask(g, rng, 0.3);
    auto x = oracle::random_state(g, rng, 0);
    std::uniform_real_distribution<double> vel(-0.5, 0.5), tr(5.0, 25.0);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        x.data[kThetao * g.cells() + c] = tr(rng);
        x.data[kUo * g.cells() + c] = vel(rng);
        x.data[kVo * g.cells() + c] = vel(rng);
    }
    apply_mask(x, mask);
    const auto f = oracle::random_forcing(g, rng, 0);
    AdvectionParams prm;
    prm.kappa = 2000.0;
    const auto d = advective_step(x, f, mask, prm, 1);
    const auto x1 = apply_increment(x, d);
    double cons = 0.0;
    for (int v : {kThetao, kSo})
        for (int k = 0; k < g.n_depth; ++k) {
            long double s0 = 0, s1 = 0;
            for (int i = 0; i < g.n_lat; ++i)
                for (int j = 0; j < g.n_lon; ++j)
                    if (mask.ocean(k, i, j)) {
                        const double wi = std::cos(g.lat(i) * std::numbers::pi / 180.0);
                        s0 += wi * x.at(v, k, i, j);
                        s1 += wi * x1.at(v, k, i, j);
                    }
            if (s0 != 0) cons = std::max(cons, static_cast<double>(std::abs(s1 - s0) / std::abs(s0)));
        }

    // Uniform zonal flow over a zonally linear tracer.
    auto h = oracle::small_grid(4, 2, 6, 12);
    const auto open = LandSeaMask::all_ocean(h);
    OceanState y = OceanState::zeros(h, 0);
    const double a = 3e-6, u = 0.4;
    const double r = std::numbers::pi / 180.0;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < h.n_lat; ++i)
            for (int j = 0; j < h.n_lon; ++j) {
                const double xm = kEarthRadius * std::cos(h.lat(i) * r) * h.lon(j) * r;
                y.at(kThetao, k, i, j) = 10.0 + a * xm;
                y.at(kUo, k, i, j) = u;
            }
    const auto dy = advective_step(y, ForcingState::zeros(h, 0), open, AdvectionParams{}, 1);
    double lin = 0.0;
    const double want = -u * a * kSecondsPerDay;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < h.n_lat; ++i)
            for (int j = 1; j + 1 < h.n_lon; ++j) lin = std::max(lin, rel_err(dy.at(kThetao, k, i, j), want));
    return {cons <= 1e-10 && lin <= 1e-10,
            "tracer sum rel change " + fmt("%.2e", cons) + ", linear advection rel err " + fmt("%.2e", lin)};
}

// ---------------------------------------------------------------------------

struct E2EResult {
    Outcome outcome;
    std::vector<OceanState> truth_test;
    LandSeaMask mask;
};

E2EResult end_to_end() {
    const auto t0 = Clock::now();
    const fs::path dir = scratch("e2e");
    const SynthParams sp = default_synth_params();
    const LandSeaMask mask = default_synth_mask(sp.grid);
    const DatasetManifest man = gen_dataset(sp, 0, 240, mask, dir, 199, 209);
    const DatasetSplits splits = split_dataset(man, 199, 209);
    const NormStats stats = compute_norm_stats(splits.train, mask);
    const TrainingSeries series = load_series(splits.train);

    Swin3dConfig cfg;
    cfg.embed_dim = 16;
    cfg.mlp_ratio = 2;
    TrainConfig tc;
    tc.lr = 2e-3;
    tc.cosine_decay = true;
    tc.lr_min = 1e-5;
    tc.batch_size = 4;
    tc.stage1_epochs = 1;
    tc.stage2_epochs = 9;
    tc.stage1_days = 60;

    auto model = std::make_shared<const Swin3dModel>(cfg, sp.grid);
    auto shared_stats = std::make_shared<const NormStats>(stats);
    const TrainResult r1 = train(*model, tc, series, mask, stats, 1);
    const TrainResult r5 = train(*model, tc, series, mask, stats, 5);
    PropagatorSet props{
        {"fm1", make_swin3d(model, std::make_shared<const ParamSet>(r1.params), shared_stats, 1, "fm1")},
        {"fm5", make_swin3d(model, std::make_shared<const ParamSet>(r5.params), shared_stats, 5, "fm5")}};

    std::vector<std::int64_t> inits;
    for (const auto& e : splits.test.entries)
        if (man.find(e.day - 1) && man.find(e.day + 10)) inits.push_back(e.day);
    const auto runs = forecast_suite(man, inits, props, plan_schedule(10), &mask);

    bool finite = true;
    for (const auto& run : runs)
        for (int l = 1; l <= 10; ++l) {
            const auto& s = run.forecast.at(l);
            for (std::size_t n = 0; n < s.data.size(); ++n)
                if (mask.valid[n % s.spec.cells()] && !std::isfinite(s.data[n])) finite = false;
        }

    LeadPairs model_pairs{1, {}, {}}, persist_pairs{1, {}, {}};
    for (const auto& run : runs) {
        model_pairs.forecasts.push_back(&run.forecast.at(1));
        model_pairs.truths.push_back(&run.truth.at(1));
        persist_pairs.forecasts.push_back(&run.truth.at(0));
        persist_pairs.truths.push_back(&run.truth.at(1));
    }
    const auto w = latitude_weights(sp.grid);
    const double rm = rmse(std::vector<LeadPairs>{model_pairs}, mask, w, RmseScope::Column)[kThetao].y[0];
    const double rp = rmse(std::vector<LeadPairs>{persist_pairs}, mask, w, RmseScope::Column)[kThetao].y[0];
    const double gain = 1.0 - rm / rp;
    const double secs = seconds_since(t0);

    E2EResult out;
    for (std::int64_t d = 210; d < 240; ++d) out.truth_test.push_back(read_ocean(man.find(d)->ocean));
    out.mask = mask;
    // First verified run: 0.0693 degC. Regressions beyond 10% of it fail.
    const double pinned = 0.0693;
    out.outcome = {gain >= 0.20 && rm <= 1.10 * pinned && finite && secs < 600.0,
                   "thetao day-1 RMSE model " + fmt("%.4f", rm) + " (pinned " + fmt("%.4f", pinned) +
                       ") vs persistence " + fmt("%.4f", rp) + ", gain " +
                       fmt("%.1f", 100.0 * gain) + "% over " + std::to_string(runs.size()) +
                       " inits, 10-day rollout " + (finite ? "finite" : "NON-FINITE") + ", " + fmt("%.0f", secs) +
                       " s"};
    fs::remove_all(dir);
    return out;
}

// ---------------------------------------------------------------------------

Outcome smoothing_detection(const std::vector<OceanState>& truth, const LandSeaMask& mask) {
    const auto& g = truth.front().spec;
    const auto geom = cell_geometry(g);
    // Tail threshold: 90th percentile of the unsmoothed gradient magnitudes.
    std::vector<double> all;
    for (const auto& s : truth)
        for (double x : sst_gradient(s, geom, mask))
            if (!std::isnan(x)) all.push_back(x);
    std::sort(all.begin(), all.end());
    const double cut = all[all.size() * 9 / 10];

    struct Level {
        int radius;
        double alpha;
    };
    const std::vector<Level> levels{{1, 0.0}, {1, 0.25}, {1, 0.5}, {1, 0.75}, {1, 1.0}, {2, 1.0}, {3, 1.0}};
    std::vector<double> e, v, tail;
    for (const auto& lv : levels) {
        std::vector<OceanState> sm;
        for (const auto& s : truth) sm.push_back(smooth_blend(s, mask, lv.radius, lv.alpha));
        e.push_back(eke(sm, geom, mask));
        v.push_back(field_variance(sm, kThetao, geom, mask));
        std::size_t above = 0, total = 0;
        for (const auto& s : sm)
            for (double x : sst_gradient(s, geom, mask))
                if (!std::isnan(x)) {
                    ++total;
                    above += x > cut;
                }
        tail.push_back(double(above) / double(total));
    }
    auto decreasing = [](const std::vector<double>& s) {
        for (std::size_t n = 1; n < s.size(); ++n)
            if (!(s[n] < s[n - 1])) return false;
        return true;
    };
    // Once the tail is empty it cannot shrink further.
    auto decreasing_until_empty = [](const std::vector<double>& s) {
        for (std::size_t n = 1; n < s.size(); ++n)
            if (s[n - 1] > 0.0 ? !(s[n] < s[n - 1]) : s[n] != 0.0) return false;
        return s.front() > 0.0;
    };
    const bool ok = decreasing(e) && decreasing(v) && decreasing_until_empty(tail);
    return {ok, std::to_string(levels.size()) + " smoothing levels: EKE " + fmt("%.3e", e.front()) + " -> " +
                    fmt("%.3e", e.back()) + ", T variance " + fmt("%.3e", v.front()) + " -> " + fmt("%.3e", v.back()) +
                    ", SST gradient tail " + fmt("%.3f", tail.front()) + " -> " + fmt("%.3f", tail.back()) +
                    (ok ? ", all monotone decreasing" : ", NOT MONOTONE")};
}

// ---------------------------------------------------------------------------

Outcome io_roundtrip() {
    const fs::path dir = scratch("io");
    std::mt19937_64 rng(909);
    std::uniform_int_distribution<int> dim(1, 6), bits(0, 1 << 30);
    std::normal_distribution<double> nd(0.0, 100.0);
    int cases = 0;
    bool ok = true;
    for (int c = 0; c < 60; ++c) {
        Grid3DSpec g = oracle::small_grid(dim(rng), dim(rng), dim(rng), dim(rng));
        g.lat0 = nd(rng) * 0.1;
        g.d_lat = 0.37;
        g.lon0 = nd(rng);
        g.d_lon = 1.3;
        g = canonical_spec(g);
        OceanState s = OceanState::zeros(g, bits(rng) - (1 << 29));
        for (double& x : s.data) {
            switch (bits(rng) % 6) {
                case 0: x = std::nan(""); break;
                case 1: x = -0.0; break;
                case 2: x = 0.0; break;
                default: x = static_cast<float>(nd(rng));
            }
        }
        const fs::path p = dir / "s.ogf";
        write_ogf(p, s, c % 2 ? OgfKind::Climatology : OgfKind::Ocean);
        const OceanState back = read_ocean(p);
        ok &= back.spec == g && back.time == s.time && same_bits(back.data, s.data);

        ForcingState f = ForcingState::zeros(g, s.time);
        for (double& x : f.data) x = (bits(rng) % 5 == 0) ? -0.0 : static_cast<float>(nd(rng));
        write_ogf(p, f);
        const ForcingState fb = read_forcing(p);
        ok &= fb.time == f.time && same_bits(fb.data, f.data);

        LandSeaMask m = oracle::random_mask(g, rng, 0.5);
        write_ogf(p, m, g);
        ok &= read_mask(p) == m;
        ok &= fs::file_size(p) == ogf_header_size(g.n_depth) + g.cells();
        cases += 3;
    }
    fs::remove_all(dir);

    DatasetManifest cal;
    for (std::int64_t d = epoch_day(1993, 1, 1); d <= epoch_day(2020, 12, 31); ++d) cal.entries.push_back({d, {}, {}});
    const auto sp = split_dataset(cal, epoch_day(2018, 12, 31), epoch_day(2019, 12, 31));
    const bool split_ok = sp.train.size() == 9496 && sp.valid.size() == 365 && sp.test.size() == 366;
    return {ok && split_ok, std::to_string(cases) + " OGF round trips " + (ok ? "bit-exact" : "DIFFER") +
                                " (NaN and signed zeros included), 1993-2020 split " +
                                std::to_string(sp.train.size()) + "/" + std::to_string(sp.valid.size()) + "/" +
                                std::to_string(sp.test.size())};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        out[fs::relative(e.path(), dir).generic_string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return out;
}

Outcome cli_determinism() {
    const fs::path root = scratch("cli");
    const std::vector<std::string> grid{"--n-lat", "8", "--n-lon", "16", "--depths", "0,10,30,60", "--lat-max", "60"};
    const std::vector<std::string> arch{"--patch",      "1,2,2", "--window", "2,2,2", "--encoder-depths", "1",
                                        "--embed-dim",  "8",     "--heads",  "2",     "--mlp-ratio",      "2",
                                        "--stage1-days", "10",   "--stage2-epochs", "1", "--seed",        "7"};
    const std::string data = (root / "data" / "manifest.txt").string();
    auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    struct Cmd {
        std::string out;
        std::vector<std::string> args;
    };
    const std::vector<Cmd> cmds{
        {"data", with({"synth", "--days", "30", "--train-days", "18", "--valid-days", "2", "--first-day", "10950"},
                      grid)},
        {"stats", {"stats", "--data", data}},
        {"clim", {"climatology", "--data", data}},
        {"fm1", with({"train", "--data", data, "--lead", "1"}, arch)},
        {"fm5", with({"train", "--data", data, "--lead", "5"}, arch)},
        {"fc", {"forecast", "--data", data, "--fm1", (root / "fm1" / "fm1.ogpw").string(), "--fm5",
                (root / "fm5" / "fm5.ogpw").string(), "--horizon", "7"}},
        {"adv", {"forecast", "--data", data, "--propagator", "advective", "--kappa", "100", "--horizon", "7"}},
        {"eval", {"evaluate", "--data", data, "--forecasts", (root / "fc").string(), "--against", "persistence",
                  "--clim", (root / "clim").string()}},
    };
    std::string bad;
    std::size_t files = 0;
    for (const auto& c : cmds) {
        const fs::path out = root / c.out;
        const auto args = with(c.args, {"--out", out.string()});
        std::ostringstream sink;
        auto* old = std::cout.rdbuf(sink.rdbuf());
        const int rc1 = run_cli(args);
        const auto first = fs::exists(out) ? snapshot(out) : std::map<std::string, std::string>{};
        fs::remove_all(out);
        const int rc2 = run_cli(args);
        std::cout.rdbuf(old);
        const auto second = fs::exists(out) ? snapshot(out) : std::map<std::string, std::string>{};
        if (rc1 != 0 || rc2 != 0 || first.empty() || first != second) bad += (bad.empty() ? "" : ",") + args[0];
        files += second.size();
    }
    fs::remove_all(root);
    return {bad.empty(), std::to_string(cmds.size()) + " subcommand runs, " + std::to_string(files) +
                             " artifacts " + (bad.empty() ? "byte-identical on rerun" : "DIFFER in: " + bad)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d %-22s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    };

    report(1, "loss_oracle", loss_oracle);
    report(2, "gradient_check", gradient_check);
    report(3, "window_isolation", window_isolation);
    report(4, "rollout_identities", rollout_identities);
    report(5, "diagnostics_oracles", diagnostics_oracles);
    report(6, "advective_physics", advective_physics);
    E2EResult e2e;
    report(7, "end_to_end", [&] {
        e2e = end_to_end();
        return e2e.outcome;
    });
    report(8, "smoothing_detection", [&] {
        if (e2e.truth_test.empty()) {
            const SynthParams sp = default_synth_params();
            e2e.mask = default_synth_mask(sp.grid);
            for (std::int64_t d = 210; d < 240; ++d) {
                e2e.truth_test.push_back(analytic_state(sp, d));
                apply_mask(e2e.truth_test.back(), e2e.mask);
            }
        }
        return smoothing_detection(e2e.truth_test, e2e.mask);
    });
    report(9, "io_roundtrip", io_roundtrip);
    report(10, "cli_determinism", cli_determinism);
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
