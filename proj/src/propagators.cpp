#include "oceanfc/propagators.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "oceanfc/error.hpp"

namespace oceanfc {

namespace {

StateIncrement land_nan_zeros(const OceanState& x_t, int lead) {
    StateIncrement d = StateIncrement::zeros(x_t.spec, x_t.time, lead);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t n = 0; n < d.data.size(); ++n)
        if (std::isnan(x_t.data[n])) d.data[n] = nan;
    return d;
}

void check_lead(int lead) {
    if (lead < 1) throw Error(ErrorCode::NonPositiveLead, "lead must be at least one day");
}

}  // namespace

StateIncrement persistence_step(const OceanState&, const OceanState& x_t, const ForcingState&, const ForcingState&,
                                int lead) {
    check_lead(lead);
    return land_nan_zeros(x_t, lead);
}

StateIncrement climatology_nudge_step(const OceanState& x_t, const Climatology& clim, double alpha, int lead) {
    check_lead(lead);
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "nudge alpha must be in [0, 1]");
    if (x_t.spec != clim.spec) throw Error(ErrorCode::SpecMismatch, "climatology grid differs from the state");
    const OceanState& target = clim.for_day(x_t.time + lead);
    StateIncrement d = land_nan_zeros(x_t, lead);
    for (std::size_t n = 0; n < d.data.size(); ++n)
        if (!std::isnan(x_t.data[n])) d.data[n] = alpha * (target.data[n] - x_t.data[n]);
    return d;
}

StateIncrement advective_step(const OceanState& x_t, const ForcingState& f_t, const LandSeaMask& mask,
                              const AdvectionParams& prm, int lead) {
    check_lead(lead);
    const Grid3DSpec& g = x_t.spec;
    if (g.n_var != kOceanVars || !mask.matches(g))
        throw Error(ErrorCode::SpecMismatch, "advective step needs a 4-variable state matching the mask");
    if (f_t.spec.n_lat != g.n_lat || f_t.spec.n_lon != g.n_lon || f_t.spec.n_var != kForcingVars)
        throw Error(ErrorCode::SpecMismatch, "forcing grid differs from the ocean grid");
    if (!(prm.kappa >= 0.0) || !std::isfinite(prm.kappa) || !std::isfinite(prm.gamma) || !(prm.z_ref > 0.0) ||
        !(prm.earth_radius > 0.0))
        throw Error(ErrorCode::InvalidArgument, "advection needs kappa >= 0, finite gamma, z_ref > 0 and radius > 0");

    const int D = g.n_depth, H = g.n_lat, W = g.n_lon;
    const double dt = lead * kSecondsPerDay;
    const double rad = std::numbers::pi / 180.0;
    const double dy = prm.earth_radius * g.d_lat * rad;
    std::vector<double> cos_c(H), cos_f(H > 0 ? H - 1 : 0), dx(H);
    for (int i = 0; i < H; ++i) {
        cos_c[i] = std::cos(g.lat(i) * rad);
        dx[i] = prm.earth_radius * cos_c[i] * g.d_lon * rad;
    }
    for (int i = 0; i + 1 < H; ++i) cos_f[i] = std::cos((g.lat(i) + 0.5 * g.d_lat) * rad);
    const bool periodic = g.periodic_lon();

    for (int k = 0; k < D; ++k)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                if (!mask.ocean(k, i, j)) continue;
                const double cu = std::abs(x_t.at(kUo, k, i, j)) * dt / dx[i];
                const double cv = std::abs(x_t.at(kVo, k, i, j)) * dt / dy;
                if (!(cu < 1.0 && cv < 1.0))
                    throw Error(ErrorCode::CflViolation, "Courant number " + std::to_string(std::max(cu, cv)) +
                                                             " at level " + std::to_string(k) + ", row " +
                                                             std::to_string(i) + ", column " + std::to_string(j));
            }

    StateIncrement d = land_nan_zeros(x_t, lead);
    auto east = [&](int j) { return j + 1 < W ? j + 1 : (periodic ? 0 : -1); };

    for (int k = 0; k < D; ++k) {
        // Zonal faces: face (i, j) sits between columns j and east(j).
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const int je = east(j);
                if (je < 0 || !mask.ocean(k, i, j) || !mask.ocean(k, i, je)) continue;
                const double uf = 0.5 * (x_t.at(kUo, k, i, j) + x_t.at(kUo, k, i, je));
                for (int v = 0; v < kOceanVars; ++v) {
                    const double qw = x_t.at(v, k, i, j), qe = x_t.at(v, k, i, je);
                    double flux = prm.kappa * (qe - qw) / dx[i];
                    if (v == kThetao || v == kSo) flux -= uf * (uf > 0 ? qw : qe);
                    const double tend = dt * flux / dx[i];
                    d.at(v, k, i, j) += tend;
                    d.at(v, k, i, je) -= tend;
                }
            }
        // Meridional faces between rows i and i + 1, scaled by the face cosine.
        for (int i = 0; i + 1 < H; ++i)
            for (int j = 0; j < W; ++j) {
                if (!mask.ocean(k, i, j) || !mask.ocean(k, i + 1, j)) continue;
                const double vf = 0.5 * (x_t.at(kVo, k, i, j) + x_t.at(kVo, k, i + 1, j));
                for (int v = 0; v < kOceanVars; ++v) {
                    const double qs = x_t.at(v, k, i, j), qn = x_t.at(v, k, i + 1, j);
                    double flux = prm.kappa * (qn - qs) / dy;
                    if (v == kThetao || v == kSo) flux -= vf * (vf > 0 ? qs : qn);
                    flux *= cos_f[i];
                    d.at(v, k, i, j) += dt * flux / (dy * cos_c[i]);
                    d.at(v, k, i + 1, j) -= dt * flux / (dy * cos_c[i + 1]);
                }
            }
        if (prm.gamma != 0.0) {
            const double decay = std::exp(-g.depths[k] / prm.z_ref);
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    if (!mask.ocean(k, i, j)) continue;
                    d.at(kUo, k, i, j) += dt * prm.gamma * f_t.at(kU10, i, j) * decay;
                    d.at(kVo, k, i, j) += dt * prm.gamma * f_t.at(kV10, i, j) * decay;
                }
        }
    }
    return d;
}

Propagator make_persistence(int lead, std::string id) {
    check_lead(lead);
    return {std::move(id), lead,
            [lead](const OceanState& xp, const OceanState& xt, const ForcingState& fp, const ForcingState& ft) {
                return persistence_step(xp, xt, fp, ft, lead);
            }};
}

Propagator make_climatology_nudge(std::shared_ptr<const Climatology> clim, double alpha, int lead, std::string id) {
    check_lead(lead);
    return {std::move(id), lead,
            [clim, alpha, lead](const OceanState&, const OceanState& xt, const ForcingState&, const ForcingState&) {
                return climatology_nudge_step(xt, *clim, alpha, lead);
            }};
}

Propagator make_advective(LandSeaMask mask, AdvectionParams params, int lead, std::string id) {
    check_lead(lead);
    return {std::move(id), lead,
            [mask = std::move(mask), params, lead](const OceanState&, const OceanState& xt, const ForcingState&,
                                                  const ForcingState& ft) {
                return advective_step(xt, ft, mask, params, lead);
            }};
}

Propagator make_swin3d(std::shared_ptr<const Swin3dModel> model, std::shared_ptr<const ParamSet> params,
                       std::shared_ptr<const NormStats> stats, int lead, std::string id) {
    check_lead(lead);
    return {std::move(id), lead,
            [model, params, stats, lead](const OceanState& xp, const OceanState& xt, const ForcingState& fp,
                                         const ForcingState& ft) {
                return model->forward(*params, xp, xt, fp, ft, *stats, lead);
            }};
}

}  // namespace oceanfc
