#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oceanfc/grid.hpp"
#include "oceanfc/io.hpp"

namespace oceanfc {

/// Difference between two ocean states `lead` days apart; `time` is the base day.
struct StateIncrement : GriddedField {
    int lead = 0;

    static StateIncrement zeros(const Grid3DSpec& spec, std::int64_t base_day, int lead);
};

StateIncrement increment(const OceanState& x_t, const OceanState& x_next);
OceanState apply_increment(const OceanState& x_t, const StateIncrement& d);

/// Latitude-weighted, ocean-masked mean squared increment error:
///
///   L = sum_{v,k,i,j} w_i M_kij (pred - truth)^2 / sum_{v,k,i,j} w_i M_kij
///
/// The denominator keeps the sum over variables. Masked cells are skipped, so
/// whatever they store never reaches the result.
double weighted_increment_mse(const GriddedField& pred, const GriddedField& truth, const LandSeaMask& mask,
                              const LatitudeWeights& w);

/// Mean ocean state per calendar slot (1..366, Feb 29 = slot 60).
struct Climatology {
    Grid3DSpec spec;
    std::vector<OceanState> slots;  // slots[s - 1]
    std::vector<int> source;        // s if populated, borrowed slot otherwise, -1 for leap-day average
    std::vector<int> sample_count;
    int window = 1;

    const OceanState& slot(int s) const { return slots[s - 1]; }
    const OceanState& for_day(std::int64_t day) const;
};

Climatology build_climatology(std::span<const OceanState> states, const LandSeaMask& mask, int window = 1);
Climatology build_climatology(const DatasetManifest& manifest, const LandSeaMask& mask, int window = 1);

OceanState anomaly(const OceanState& state, const Climatology& clim);

/// One kind-4 OGF file per slot (`clim_doy001.ogf` ...) plus `climatology_meta.txt`.
void write_climatology(const std::filesystem::path& dir, const Climatology& clim);
Climatology read_climatology(const std::filesystem::path& dir);

}  // namespace oceanfc
