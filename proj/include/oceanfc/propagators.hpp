#pragma once

#include <functional>
#include <memory>
#include <string>

#include "oceanfc/grid.hpp"
#include "oceanfc/io.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/swin3d.hpp"

namespace oceanfc {

/// M(x_prev, x_t, f_prev, f_t) -> increment over `lead` days.
using StepFn = std::function<StateIncrement(const OceanState& x_prev, const OceanState& x_t,
                                            const ForcingState& f_prev, const ForcingState& f_t)>;

struct Propagator {
    std::string id;
    int lead = 1;
    StepFn step;
};

/// Zero increment; NaN wherever x_t is land.
StateIncrement persistence_step(const OceanState& x_prev, const OceanState& x_t, const ForcingState& f_prev,
                                const ForcingState& f_t, int lead = 1);

/// alpha * (clim(day + lead) - x_t). alpha must lie in [0, 1].
StateIncrement climatology_nudge_step(const OceanState& x_t, const Climatology& clim, double alpha, int lead = 1);

struct AdvectionParams {
    double kappa = 0.0;     // m^2/s, horizontal diffusivity on every variable
    double gamma = 0.0;     // 1/s, wind-to-current coupling
    double z_ref = 50.0;    // m, e-folding depth of the wind tendency
    double earth_radius = kEarthRadius;
};

/// One forward-Euler step of length lead days:
///   - flux-form first-order upwind advection of thetao and so by (uo, vo),
///     face velocity = mean of the two adjacent cells;
///   - flux-form Laplacian diffusion (kappa) of all four variables;
///   - current tendency gamma * (u10, v10) * exp(-z / z_ref).
/// Faces touching land and the north/south edges carry no flux, so the
/// cos(lat)-weighted sum of each tracer is conserved level by level.
/// Longitude is periodic on global grids. Throws CflViolation when
/// |u| dt/dx or |v| dt/dy reaches 1 at any ocean cell.
StateIncrement advective_step(const OceanState& x_t, const ForcingState& f_t, const LandSeaMask& mask,
                              const AdvectionParams& params, int lead = 1);

Propagator make_persistence(int lead = 1, std::string id = "persistence");
Propagator make_climatology_nudge(std::shared_ptr<const Climatology> clim, double alpha, int lead = 1,
                                  std::string id = "climatology");
Propagator make_advective(LandSeaMask mask, AdvectionParams params, int lead = 1, std::string id = "advective");
Propagator make_swin3d(std::shared_ptr<const Swin3dModel> model, std::shared_ptr<const ParamSet> params,
                       std::shared_ptr<const NormStats> stats, int lead, std::string id);

}  // namespace oceanfc
