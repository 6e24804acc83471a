#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace oceanfc {

inline constexpr int kOceanVars = 4;
inline constexpr int kForcingVars = 8;
inline constexpr double kEarthRadius = 6'371'000.0;
inline constexpr double kSecondsPerDay = 86'400.0;

// Prognostic ocean variables, in storage order.
enum OceanVar : int { kThetao = 0, kSo = 1, kUo = 2, kVo = 3 };
// Surface forcing channels, in storage order.
enum ForcingVar : int { kU10 = 0, kV10, kT2m, kD2m, kMsl, kSsr, kStrd, kMtp };

inline constexpr std::array<std::string_view, kOceanVars> kOceanVarNames{"thetao", "so", "uo", "vo"};
inline constexpr std::array<std::string_view, kForcingVars> kForcingVarNames{
    "u10", "v10", "t2m", "d2m", "msl", "ssr", "strd", "mtp"};

int ocean_var_index(std::string_view name);

/// Regular latitude-longitude grid with explicit depth levels.
///
/// Row i sits at latitude lat0 + i*d_lat, column j at longitude lon0 + j*d_lon.
/// Depths are level centres in metres below the surface.
struct Grid3DSpec {
    int n_var = kOceanVars;
    int n_depth = 0;
    int n_lat = 0;
    int n_lon = 0;
    double lat0 = 0.0;
    double d_lat = 1.0;
    double lon0 = 0.0;
    double d_lon = 1.0;
    std::vector<double> depths;

    double lat(int i) const { return lat0 + i * d_lat; }
    double lon(int j) const { return lon0 + j * d_lon; }
    std::size_t cells() const { return std::size_t(n_depth) * n_lat * n_lon; }
    std::size_t size() const { return std::size_t(n_var) * cells(); }
    bool periodic_lon() const;

    // Throws InvalidArgument when an invariant is broken.
    void validate() const;

    bool operator==(const Grid3DSpec&) const = default;
};

/// The forcing grid that accompanies an ocean grid: 8 channels, single level.
Grid3DSpec forcing_spec_for(const Grid3DSpec& ocean);

/// Dense V x D x H x W field with a day stamp.
struct GriddedField {
    Grid3DSpec spec;
    std::int64_t time = 0;
    std::vector<double> data;

    std::size_t index(int v, int k, int i, int j) const {
        return ((std::size_t(v) * spec.n_depth + k) * spec.n_lat + i) * spec.n_lon + j;
    }
    double& at(int v, int k, int i, int j) { return data[index(v, k, i, j)]; }
    double at(int v, int k, int i, int j) const { return data[index(v, k, i, j)]; }
};

struct OceanState : GriddedField {
    static OceanState zeros(const Grid3DSpec& spec, std::int64_t time);
};

struct ForcingState : GriddedField {
    static ForcingState zeros(const Grid3DSpec& ocean_or_forcing_spec, std::int64_t time);
    double at(int c, int i, int j) const { return data[index(c, 0, i, j)]; }
    double& at(int c, int i, int j) { return data[index(c, 0, i, j)]; }
};

/// Per-cell validity (true = ocean). Authoritative for every reduction.
struct LandSeaMask {
    int n_depth = 0;
    int n_lat = 0;
    int n_lon = 0;
    std::vector<std::uint8_t> valid;

    static LandSeaMask all_ocean(const Grid3DSpec& spec);

    std::size_t index(int k, int i, int j) const { return (std::size_t(k) * n_lat + i) * n_lon + j; }
    bool ocean(int k, int i, int j) const { return valid[index(k, i, j)] != 0; }
    void set(int k, int i, int j, bool is_ocean) { valid[index(k, i, j)] = is_ocean ? 1 : 0; }
    std::size_t ocean_count() const;
    bool matches(const Grid3DSpec& spec) const {
        return n_depth == spec.n_depth && n_lat == spec.n_lat && n_lon == spec.n_lon;
    }

    bool operator==(const LandSeaMask&) const = default;
};

/// Writes the NaN sentinel into every land cell of every variable.
void apply_mask(GriddedField& field, const LandSeaMask& mask);

struct LatitudeWeights {
    std::vector<double> w;
};

LatitudeWeights latitude_weights(const Grid3DSpec& spec);

struct CellGeometry {
    std::vector<double> dx;   // per row, metres
    double dy = 0.0;          // metres
    std::vector<double> dz;   // per level, metres
    std::vector<double> vol;  // D x H x W, cubic metres
    int n_lat = 0;
    int n_lon = 0;

    double volume(int k, int i, int j) const { return vol[(std::size_t(k) * n_lat + i) * n_lon + j]; }
};

CellGeometry cell_geometry(const Grid3DSpec& spec, double earth_radius = kEarthRadius);

struct MaskViolation {
    int k = -1;
    int i = -1;
    int j = -1;
    std::string reason;
};

/// Reports one violation per column whose ocean cells are not a contiguous
/// top-down run, plus one if the mask holds no ocean at all.
std::vector<MaskViolation> validate_mask(const LandSeaMask& mask);

struct SectionSpec {
    std::string name;
    double lat = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;
};

struct SectionField {
    std::string name;
    int variable = kThetao;
    double requested_lat = 0.0;
    double snapped_lat = 0.0;
    int row = 0;
    std::vector<int> columns;
    std::vector<double> lons;
    std::vector<double> depths;
    std::vector<double> values;  // depth-major: values[k * columns.size() + c]

    double at(int k, int c) const { return values[std::size_t(k) * columns.size() + c]; }
};

/// Grid row closest to `lat`; OutOfDomain if it lies more than half a cell outside.
int snap_row(const Grid3DSpec& spec, double lat);

/// Columns inside [lon_min, lon_max] walking eastward from lon_min (modulo 360).
std::vector<int> section_columns(const Grid3DSpec& spec, const SectionSpec& sec);

SectionField extract_section(const GriddedField& state, const SectionSpec& sec, int variable = kThetao);

}  // namespace oceanfc
