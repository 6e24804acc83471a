#pragma once

#include <span>
#include <string>
#include <vector>

#include "oceanfc/grid.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/report.hpp"
#include "oceanfc/rollout.hpp"

namespace oceanfc {

inline constexpr double kSeawaterDensity = 1025.0;      // kg/m^3
inline constexpr double kSeawaterHeatCapacity = 3985.0;  // J/(kg K)

/// Forecast/truth pairs for one lead, one pair per initial day.
struct LeadPairs {
    int lead = 0;
    std::vector<const OceanState*> forecasts;
    std::vector<const OceanState*> truths;
};

enum class RmseScope { Column, PerDepth };

/// Per variable: sqrt of the cos(lat)-weighted, ocean-masked MSE pooled over
/// cells and initial days. Column scope pools all depths (depth unset);
/// PerDepth emits one curve per level.
std::vector<CurveMetric> rmse(std::span<const LeadPairs> leads, const LandSeaMask& mask, const LatitudeWeights& w,
                              RmseScope scope);

/// Per variable: sum wM f'o' / sqrt(sum wM f'^2 * sum wM o'^2), anomalies taken
/// against the climatology of each state's own day, pooled over depth, cells
/// and initial days. Leads with zero anomaly variance are omitted.
std::vector<CurveMetric> acc(std::span<const LeadPairs> leads, const Climatology& clim, const LandSeaMask& mask,
                             const LatitudeWeights& w);

/// Mean over snapshots of sum M vol (u'^2 + v'^2) / 2 with anomalies about the
/// per-cell time mean of the series. m^5 s^-2.
double eke(std::span<const OceanState> series, const CellGeometry& geom, const LandSeaMask& mask);

/// Mean over snapshots of sum M vol (x - xbar)^2, xbar the volume-weighted
/// mean of that snapshot.
double field_variance(std::span<const OceanState> series, int variable, const CellGeometry& geom,
                      const LandSeaMask& mask);

/// Centred-difference |grad SST| (K/m) at surface cells whose 4-neighbour
/// stencil is all ocean; NaN elsewhere. Longitude wraps on global grids.
std::vector<double> sst_gradient(const OceanState& state, const CellGeometry& geom, const LandSeaMask& mask);

struct HistogramBins {
    int bins = 64;
    double max = 5e-4;  // K/m; values at or above go to the overflow bin
};

HistogramMetric sst_gradient_hist(std::span<const OceanState> states, const CellGeometry& geom,
                                  const LandSeaMask& mask, const HistogramBins& bins = {});

/// rho c_p * integral_0^z_max T dz per column (J/m^2), trapezoid over levels
/// with linear interpolation at z_max. T above the first level is held at its
/// first-level value. Land or too-shallow columns are NaN.
std::vector<double> ohc(const OceanState& state, const LandSeaMask& mask, double z_max = 100.0,
                        double rho = kSeawaterDensity, double cp = kSeawaterHeatCapacity);

/// The three regional sections: equatorial Pacific, Kuroshio Extension, Southern Ocean.
std::vector<SectionSpec> standard_sections();

/// Forecast minus truth temperature on a depth x longitude section.
SectionMetric section_error(const OceanState& forecast, const OceanState& truth, const SectionSpec& sec, int lead);

/// Box mean over the (2r+1)^2 ocean neighbours on each level (longitude wraps
/// on global grids), blended as (1 - alpha) x + alpha smooth(x).
OceanState smooth_blend(const OceanState& state, const LandSeaMask& mask, int radius, double alpha);

struct EvaluationOptions {
    int diag_lead = 0;  // lead used for scalars, histogram, OHC and sections; 0 = horizon
    HistogramBins bins;
    double ohc_depth = 100.0;
    double rho = kSeawaterDensity;
    double cp = kSeawaterHeatCapacity;
};

/// Full verification of a forecast suite. `clim` may be null, in which case ACC is skipped.
MetricReport evaluate_runs(const std::vector<ForecastRun>& runs, const LandSeaMask& mask, const Climatology* clim,
                           const EvaluationOptions& opt = {});

}  // namespace oceanfc
