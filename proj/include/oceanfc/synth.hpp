#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "oceanfc/grid.hpp"
#include "oceanfc/io.hpp"

namespace oceanfc {

/// Closed-form synthetic ocean and forcing.
///
/// Temperature is a logistic thermocline whose surface value follows
/// cos^2(latitude), plus a zonally propagating anomaly that decays with depth:
///
///   T = T_deep + (T_surf cos^2(phi) - T_deep) * sigma((z_th - z) / delta)
///       + A sin(2 pi (x - c t) / L) exp(-z / z_th)
///
/// where x = R * lon_rad is equatorial arc length. Salinity has the same form
/// with its own base, contrast and anomaly amplitude. Currents come from a
/// streamfunction evaluated on the cell centres and differenced with centred
/// stencils, so their centred spherical divergence vanishes identically. The
/// streamfunction amplitude follows the wind cycle, psi0 (1 + s sin(2 pi t / P)).
struct SynthParams {
    Grid3DSpec grid;
    double t_surf = 28.0;          // degC, scaled by cos^2(lat)
    double t_deep = 4.0;           // degC
    double thermocline_depth = 150.0;  // m
    double thermocline_width = 40.0;   // m
    double anomaly_amplitude = 2.0;    // degC
    double wavelength = 2.0 * 3.14159265358979323846 * kEarthRadius / 4.0;  // m
    double phase_speed = 2.0 * 3.14159265358979323846 * kEarthRadius / 4.0 / 25.0;  // m/day
    double psi0 = 1.5e6;           // m^2/s
    double current_seasonality = 0.25;  // fractional seasonal swing of psi, in phase with the winds
    double salt_base = 34.5;       // psu
    double salt_contrast = 0.8;    // psu
    double salt_per_degree = 0.05; // psu of salinity anomaly per degC of temperature anomaly
    double forcing_period = 30.0;  // days
    std::array<double, kForcingVars> forcing_amplitude{8.0, 6.0, 290.0, 285.0, 800.0, 2.0e7, 3.0e7, 0.004};
    double noise_std = 0.0;        // optional white noise on thetao/so
    std::uint64_t seed = 0;

    void validate() const;
};

/// The desk-scale default: 4 x 8 x 32 x 64, global longitude, +/-60 degree band.
Grid3DSpec default_desk_grid();
SynthParams default_synth_params();

/// Idealised land: one continent block spanning all levels, a shelf around it
/// and a shallow high-latitude bottom level. Columns are top-down monotone.
LandSeaMask default_synth_mask(const Grid3DSpec& spec);

double synth_thetao(const SynthParams& p, double depth, double lat_deg, double lon_deg, double t);
double synth_salinity(const SynthParams& p, double depth, double lat_deg, double lon_deg, double t);
double synth_streamfunction(const SynthParams& p, double lat_deg, double lon_deg);

OceanState analytic_state(const SynthParams& p, std::int64_t day);
ForcingState analytic_forcing(const SynthParams& p, std::int64_t day);

/// Writes `ocean_DDDDDD.ogf` / `forcing_DDDDDD.ogf` per day plus `mask.ogf`
/// and `manifest.txt`; land cells are NaN. Returns the manifest.
/// Optional split boundaries are recorded in the manifest header.
DatasetManifest gen_dataset(const SynthParams& p, std::int64_t first_day, int n_days, const LandSeaMask& mask,
                            const std::filesystem::path& out_dir,
                            std::optional<std::int64_t> train_end_day = std::nullopt,
                            std::optional<std::int64_t> valid_end_day = std::nullopt);

}  // namespace oceanfc
