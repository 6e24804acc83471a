#include "oceanfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "oceanfc/error.hpp"

namespace oceanfc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kLonTol = 1e-9;

double wrap360(double x) {
    double r = std::fmod(x, 360.0);
    if (r < 0) r += 360.0;
    return r;
}

}  // namespace

int ocean_var_index(std::string_view name) {
    for (int v = 0; v < kOceanVars; ++v)
        if (kOceanVarNames[v] == name) return v;
    throw Error(ErrorCode::InvalidArgument, "unknown ocean variable '" + std::string(name) + "'");
}

bool Grid3DSpec::periodic_lon() const {
    return std::abs(n_lon * d_lon - 360.0) < 1e-9;
}

void Grid3DSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (n_var <= 0 || n_depth <= 0 || n_lat <= 0 || n_lon <= 0) fail("grid dimensions must be positive");
    if (!(d_lat > 0) || !(d_lon > 0) || !std::isfinite(d_lat) || !std::isfinite(d_lon))
        fail("grid spacing must be positive and finite");
    if (!std::isfinite(lat0) || !std::isfinite(lon0)) fail("grid origin must be finite");
    const double lat_last = lat(n_lat - 1);
    if (lat0 < -90.0 - 1e-12 || lat_last > 90.0 + 1e-12) fail("grid latitudes leave [-90, 90]");
    if (static_cast<int>(depths.size()) != n_depth) fail("depth list length differs from n_depth");
    for (int k = 0; k < n_depth; ++k) {
        if (!std::isfinite(depths[k])) fail("non-finite depth");
        if (k == 0 && depths[k] < 0) fail("first depth is negative");
        if (k > 0 && !(depths[k] > depths[k - 1])) fail("depths must be strictly increasing");
    }
}

Grid3DSpec forcing_spec_for(const Grid3DSpec& ocean) {
    Grid3DSpec f = ocean;
    f.n_var = kForcingVars;
    f.n_depth = 1;
    f.depths = {0.0};
    return f;
}

OceanState OceanState::zeros(const Grid3DSpec& spec, std::int64_t time) {
    OceanState s;
    s.spec = spec;
    s.time = time;
    s.data.assign(spec.size(), 0.0);
    return s;
}

ForcingState ForcingState::zeros(const Grid3DSpec& spec, std::int64_t time) {
    ForcingState s;
    s.spec = spec.n_var == kForcingVars && spec.n_depth == 1 ? spec : forcing_spec_for(spec);
    s.time = time;
    s.data.assign(s.spec.size(), 0.0);
    return s;
}

LandSeaMask LandSeaMask::all_ocean(const Grid3DSpec& spec) {
    LandSeaMask m;
    m.n_depth = spec.n_depth;
    m.n_lat = spec.n_lat;
    m.n_lon = spec.n_lon;
    m.valid.assign(spec.cells(), 1);
    return m;
}

std::size_t LandSeaMask::ocean_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

void apply_mask(GriddedField& field, const LandSeaMask& mask) {
    const auto& s = field.spec;
    if (!mask.matches(s)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from field");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int v = 0; v < s.n_var; ++v)
        for (int k = 0; k < s.n_depth; ++k)
            for (int i = 0; i < s.n_lat; ++i)
                for (int j = 0; j < s.n_lon; ++j)
                    if (!mask.ocean(k, i, j)) field.at(v, k, i, j) = nan;
}

LatitudeWeights latitude_weights(const Grid3DSpec& spec) {
    LatitudeWeights lw;
    lw.w.resize(spec.n_lat);
    for (int i = 0; i < spec.n_lat; ++i) {
        const double phi = spec.lat(i);
        if (std::abs(std::abs(phi) - 90.0) < 1e-12)
            throw Error(ErrorCode::PolarRow, "row " + std::to_string(i) + " lies on a pole");
        lw.w[i] = std::cos(phi * kDegToRad);
    }
    return lw;
}

CellGeometry cell_geometry(const Grid3DSpec& spec, double earth_radius) {
    if (spec.n_depth < 2) throw Error(ErrorCode::DegenerateGrid, "cell geometry needs at least two depth levels");
    if (!(earth_radius > 0)) throw Error(ErrorCode::InvalidArgument, "earth radius must be positive");
    CellGeometry g;
    g.n_lat = spec.n_lat;
    g.n_lon = spec.n_lon;
    g.dy = earth_radius * spec.d_lat * kDegToRad;
    g.dx.resize(spec.n_lat);
    for (int i = 0; i < spec.n_lat; ++i)
        g.dx[i] = earth_radius * std::cos(spec.lat(i) * kDegToRad) * spec.d_lon * kDegToRad;

    // Layer faces sit halfway between levels; the top face is the surface and
    // the bottom face is the deepest level itself.
    const auto& z = spec.depths;
    const int nd = spec.n_depth;
    g.dz.resize(nd);
    for (int k = 0; k < nd; ++k) {
        const double top = k == 0 ? 0.0 : 0.5 * (z[k - 1] + z[k]);
        const double bottom = k == nd - 1 ? z[k] : 0.5 * (z[k] + z[k + 1]);
        g.dz[k] = bottom - top;
    }
    g.vol.resize(spec.cells());
    for (int k = 0; k < nd; ++k)
        for (int i = 0; i < spec.n_lat; ++i)
            for (int j = 0; j < spec.n_lon; ++j)
                g.vol[(std::size_t(k) * spec.n_lat + i) * spec.n_lon + j] = g.dx[i] * g.dy * g.dz[k];
    return g;
}

std::vector<MaskViolation> validate_mask(const LandSeaMask& mask) {
    std::vector<MaskViolation> out;
    for (int i = 0; i < mask.n_lat; ++i) {
        for (int j = 0; j < mask.n_lon; ++j) {
            bool seen_land = false;
            for (int k = 0; k < mask.n_depth; ++k) {
                if (!mask.ocean(k, i, j)) {
                    seen_land = true;
                } else if (seen_land) {
                    out.push_back({k, i, j, "ocean cell below land in the same column"});
                    break;
                }
            }
        }
    }
    if (mask.ocean_count() == 0) out.push_back({-1, -1, -1, "mask holds no ocean cell"});
    return out;
}

int snap_row(const Grid3DSpec& spec, double lat) {
    const double pos = (lat - spec.lat0) / spec.d_lat;
    if (pos < -0.5 - 1e-9 || pos > spec.n_lat - 0.5 + 1e-9)
        throw Error(ErrorCode::OutOfDomain, "latitude " + std::to_string(lat) + " lies outside the grid");
    return std::clamp(static_cast<int>(std::lround(pos)), 0, spec.n_lat - 1);
}

std::vector<int> section_columns(const Grid3DSpec& spec, const SectionSpec& sec) {
    const double extent = sec.lon_max - sec.lon_min;
    const double span = extent >= 360.0 - kLonTol ? 360.0 : wrap360(extent);
    std::vector<std::pair<double, int>> hits;
    for (int j = 0; j < spec.n_lon; ++j) {
        double off = wrap360(spec.lon(j) - sec.lon_min);
        if (off > 360.0 - kLonTol) off = 0.0;
        if (off <= span + kLonTol) hits.emplace_back(off, j);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<int> cols;
    cols.reserve(hits.size());
    for (const auto& h : hits) cols.push_back(h.second);
    return cols;
}

SectionField extract_section(const GriddedField& state, const SectionSpec& sec, int variable) {
    const auto& s = state.spec;
    if (variable < 0 || variable >= s.n_var) throw Error(ErrorCode::InvalidArgument, "section variable out of range");
    SectionField out;
    out.name = sec.name;
    out.variable = variable;
    out.requested_lat = sec.lat;
    out.row = snap_row(s, sec.lat);
    out.snapped_lat = s.lat(out.row);
    out.columns = section_columns(s, sec);
    if (out.columns.empty())
        throw Error(ErrorCode::OutOfDomain, "section '" + sec.name + "' misses every grid column");
    out.depths = s.depths;
    for (int j : out.columns) out.lons.push_back(wrap360(s.lon(j)));
    out.values.resize(std::size_t(s.n_depth) * out.columns.size());
    for (int k = 0; k < s.n_depth; ++k)
        for (std::size_t c = 0; c < out.columns.size(); ++c)
            out.values[k * out.columns.size() + c] = state.at(variable, k, out.row, out.columns[c]);
    return out;
}

}  // namespace oceanfc
