#include "oceanfc/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "oceanfc/error.hpp"
#include "oceanfc/numeric.hpp"

namespace oceanfc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Phase of a travelling wave reduced modulo one period before scaling, so
// that days a whole period apart give bit-identical arguments when possible.
double wave_phase(double x, double c_t, double wavelength) {
    double s = std::fmod(x - c_t, wavelength);
    if (s < 0) s += wavelength;
    return 2.0 * std::numbers::pi * s / wavelength;
}

double cyclic_phase(double t, double period) {
    double s = std::fmod(t, period);
    if (s < 0) s += period;
    return 2.0 * std::numbers::pi * s / period;
}

std::string day_file(const char* prefix, std::int64_t day) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06lld.ogf", prefix, static_cast<long long>(day));
    return buf;
}

}  // namespace

void SynthParams::validate() const {
    grid.validate();
    if (grid.n_var != kOceanVars) throw Error(ErrorCode::InvalidArgument, "synthetic ocean grid needs 4 variables");
    if (!(thermocline_width > 0)) throw Error(ErrorCode::InvalidArgument, "thermocline width must be positive");
    if (!(thermocline_depth > 0)) throw Error(ErrorCode::InvalidArgument, "thermocline depth must be positive");
    const double dx_eq = kEarthRadius * grid.d_lon * kDegToRad;
    if (!(wavelength > 2.0 * dx_eq)) throw Error(ErrorCode::InvalidArgument, "anomaly wavelength spans < 2 cells");
    if (!(forcing_period > 0)) throw Error(ErrorCode::InvalidArgument, "forcing period must be positive");
    for (double a : {t_surf, t_deep, anomaly_amplitude, phase_speed, psi0, current_seasonality, salt_base,
                     salt_contrast, salt_per_degree, noise_std})
        if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "synthetic amplitudes must be finite");
    for (double a : forcing_amplitude)
        if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "forcing amplitudes must be finite");
    if (noise_std < 0) throw Error(ErrorCode::InvalidArgument, "noise std must be non-negative");
}

Grid3DSpec default_desk_grid() {
    Grid3DSpec g;
    g.n_var = kOceanVars;
    g.n_depth = 8;
    g.n_lat = 32;
    g.n_lon = 64;
    g.d_lat = 120.0 / 32;
    g.lat0 = -60.0 + 0.5 * g.d_lat;
    g.d_lon = 360.0 / 64;
    g.lon0 = 0.0;
    g.depths = {0.0, 10.0, 30.0, 60.0, 100.0, 200.0, 400.0, 643.0};
    return g;
}

SynthParams default_synth_params() {
    SynthParams p;
    p.grid = default_desk_grid();
    return p;
}

LandSeaMask default_synth_mask(const Grid3DSpec& spec) {
    LandSeaMask m = LandSeaMask::all_ocean(spec);
    const int shelf_top = spec.n_depth / 2;
    auto continent = [&](int i, int j) {
        const double lat = spec.lat(i);
        double lon = std::fmod(spec.lon(j), 360.0);
        if (lon < 0) lon += 360.0;
        return std::abs(lat) < 30.0 && lon >= 100.0 && lon < 140.0;
    };
    for (int i = 0; i < spec.n_lat; ++i) {
        for (int j = 0; j < spec.n_lon; ++j) {
            if (continent(i, j)) {
                for (int k = 0; k < spec.n_depth; ++k) m.set(k, i, j, false);
                continue;
            }
            bool shelf = false;
            for (int di = -1; di <= 1 && !shelf; ++di)
                for (int dj = -1; dj <= 1 && !shelf; ++dj) {
                    const int ii = i + di;
                    const int jj = (j + dj + spec.n_lon) % spec.n_lon;
                    if (ii >= 0 && ii < spec.n_lat && continent(ii, jj)) shelf = true;
                }
            if (shelf)
                for (int k = shelf_top; k < spec.n_depth; ++k) m.set(k, i, j, false);
            if (spec.lat(i) > 50.0 && spec.n_depth > 1) m.set(spec.n_depth - 1, i, j, false);
        }
    }
    return m;
}

double synth_thetao(const SynthParams& p, double z, double lat_deg, double lon_deg, double t) {
    const double c = std::cos(lat_deg * kDegToRad);
    const double surf = p.t_surf * c * c;
    const double x = kEarthRadius * lon_deg * kDegToRad;
    const double decay = std::exp(-z / p.thermocline_depth);
    return p.t_deep + (surf - p.t_deep) * logistic((p.thermocline_depth - z) / p.thermocline_width) +
           p.anomaly_amplitude * std::sin(wave_phase(x, p.phase_speed * t, p.wavelength)) * decay;
}

double synth_salinity(const SynthParams& p, double z, double lat_deg, double lon_deg, double t) {
    const double c = std::cos(lat_deg * kDegToRad);
    const double x = kEarthRadius * lon_deg * kDegToRad;
    const double decay = std::exp(-z / p.thermocline_depth);
    return p.salt_base + p.salt_contrast * c * c * logistic((p.thermocline_depth - z) / p.thermocline_width) +
           p.salt_per_degree * p.anomaly_amplitude * std::sin(wave_phase(x, p.phase_speed * t, p.wavelength)) * decay;
}

double synth_streamfunction(const SynthParams& p, double lat_deg, double lon_deg) {
    return p.psi0 * std::sin(2.0 * lon_deg * kDegToRad) * std::cos(2.0 * lat_deg * kDegToRad);
}

OceanState analytic_state(const SynthParams& p, std::int64_t day) {
    const Grid3DSpec& g = p.grid;
    OceanState s = OceanState::zeros(g, day);
    const double t = static_cast<double>(day);
    const double dy = kEarthRadius * g.d_lat * kDegToRad;

    // Horizontal current pattern at the surface; scaled by exp(-z/z_th) per level.
    const double season = 1.0 + p.current_seasonality * std::sin(cyclic_phase(t, p.forcing_period));
    std::vector<double> u(std::size_t(g.n_lat) * g.n_lon), v(u.size());
    for (int i = 0; i < g.n_lat; ++i) {
        const double dx = kEarthRadius * std::cos(g.lat(i) * kDegToRad) * g.d_lon * kDegToRad;
        for (int j = 0; j < g.n_lon; ++j) {
            const double north = synth_streamfunction(p, g.lat(i + 1), g.lon(j));
            const double south = synth_streamfunction(p, g.lat(i - 1), g.lon(j));
            const double east = synth_streamfunction(p, g.lat(i), g.lon(j + 1));
            const double west = synth_streamfunction(p, g.lat(i), g.lon(j - 1));
            u[std::size_t(i) * g.n_lon + j] = -season * (north - south) / (2.0 * dy);
            v[std::size_t(i) * g.n_lon + j] = season * (east - west) / (2.0 * dx);
        }
    }

    for (int k = 0; k < g.n_depth; ++k) {
        const double z = g.depths[k];
        const double decay = std::exp(-z / p.thermocline_depth);
        for (int i = 0; i < g.n_lat; ++i) {
            for (int j = 0; j < g.n_lon; ++j) {
                s.at(kThetao, k, i, j) = synth_thetao(p, z, g.lat(i), g.lon(j), t);
                s.at(kSo, k, i, j) = synth_salinity(p, z, g.lat(i), g.lon(j), t);
                s.at(kUo, k, i, j) = u[std::size_t(i) * g.n_lon + j] * decay;
                s.at(kVo, k, i, j) = v[std::size_t(i) * g.n_lon + j] * decay;
            }
        }
    }

    if (p.noise_std > 0) {
        SplitMix64 rng(p.seed ^ (static_cast<std::uint64_t>(day) * 0x9E3779B97F4A7C15ull));
        const double scale = p.noise_std * std::sqrt(12.0);
        for (int v2 : {kThetao, kSo})
            for (int k = 0; k < g.n_depth; ++k)
                for (int i = 0; i < g.n_lat; ++i)
                    for (int j = 0; j < g.n_lon; ++j) s.at(v2, k, i, j) += scale * (rng.uniform() - 0.5);
    }
    return s;
}

ForcingState analytic_forcing(const SynthParams& p, std::int64_t day) {
    const Grid3DSpec& g = p.grid;
    ForcingState f = ForcingState::zeros(g, day);
    const double wt = cyclic_phase(static_cast<double>(day), p.forcing_period);
    const auto& a = p.forcing_amplitude;
    for (int i = 0; i < g.n_lat; ++i) {
        const double phi = g.lat(i) * kDegToRad;
        const double c = std::cos(phi);
        for (int j = 0; j < g.n_lon; ++j) {
            const double lam = g.lon(j) * kDegToRad;
            const double season = 1.0 + 0.25 * std::sin(wt);
            // Winds follow the current streamfunction pattern.
            f.at(kU10, i, j) = a[kU10] * std::sin(2.0 * lam) * std::sin(2.0 * phi) * season;
            f.at(kV10, i, j) = a[kV10] * std::cos(2.0 * lam) * std::cos(2.0 * phi) * season;
            f.at(kT2m, i, j) = a[kT2m] * (0.9 + 0.1 * c * c) * (1.0 + 0.01 * std::sin(wt - lam));
            f.at(kD2m, i, j) = a[kD2m] * (0.9 + 0.1 * c * c) * (1.0 + 0.01 * std::sin(wt - lam + 0.5));
            f.at(kMsl, i, j) = 101325.0 + a[kMsl] * std::sin(lam) * c * std::cos(wt);
            f.at(kSsr, i, j) = a[kSsr] * c * c * (1.0 + 0.3 * std::sin(wt));
            f.at(kStrd, i, j) = a[kStrd] * c * (1.0 + 0.1 * std::cos(wt));
            f.at(kMtp, i, j) = a[kMtp] * 0.5 * (1.0 + std::sin(3.0 * lam + wt)) * c * c;
        }
    }
    return f;
}

DatasetManifest gen_dataset(const SynthParams& p, std::int64_t first_day, int n_days, const LandSeaMask& mask,
                            const std::filesystem::path& out_dir, std::optional<std::int64_t> train_end_day,
                            std::optional<std::int64_t> valid_end_day) {
    p.validate();
    if (n_days < 1) throw Error(ErrorCode::InvalidArgument, "dataset needs at least one day");
    if (!mask.matches(p.grid)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from the synthetic grid");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest m;
    m.mask = "mask.ogf";
    m.train_end_day = train_end_day;
    m.valid_end_day = valid_end_day;
    write_ogf(out_dir / m.mask, mask, p.grid);
    for (int n = 0; n < n_days; ++n) {
        const std::int64_t day = first_day + n;
        OceanState s = analytic_state(p, day);
        apply_mask(s, mask);
        ManifestEntry e{day, day_file("ocean", day), day_file("forcing", day)};
        write_ogf(out_dir / e.ocean, s);
        write_ogf(out_dir / e.forcing, analytic_forcing(p, day));
        m.entries.push_back(std::move(e));
    }
    write_manifest(out_dir / "manifest.txt", m);
    // Return paths resolved against the output directory, as read_manifest would.
    for (auto& e : m.entries) {
        e.ocean = out_dir / e.ocean;
        e.forcing = out_dir / e.forcing;
    }
    m.mask = out_dir / m.mask;
    return m;
}

}  // namespace oceanfc
