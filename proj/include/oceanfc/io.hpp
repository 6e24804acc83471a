#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oceanfc/grid.hpp"
#include "oceanfc/report.hpp"

namespace oceanfc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// OGF: little-endian binary grid files.
//
//   "OGF1" | u32 version | u8 kind | u8 pad[3] | u32 V D H W
//   | f64 lat0 d_lat lon0 d_lon | f32 depths[D] | i64 time | payload
//
// Payload is row-major [V][D][H][W] f32, or u8 0/1 with V = 1 for masks.
// ---------------------------------------------------------------------------

enum class OgfKind : std::uint8_t { Ocean = 1, Forcing = 2, Mask = 3, Climatology = 4 };

inline constexpr std::uint32_t kOgfVersion = 1;

std::size_t ogf_header_size(int n_depth);

struct OgfFile {
    OgfKind kind = OgfKind::Ocean;
    Grid3DSpec spec;
    std::int64_t time = 0;
    std::vector<double> values;  // f32 payload widened, or 0/1 for masks
};

void write_ogf(const fs::path& path, const OceanState& state, OgfKind kind = OgfKind::Ocean);
void write_ogf(const fs::path& path, const ForcingState& forcing);
void write_ogf(const fs::path& path, const LandSeaMask& mask, const Grid3DSpec& spec);

OgfFile read_ogf(const fs::path& path);
OceanState read_ocean(const fs::path& path);  // accepts ocean and climatology kinds
ForcingState read_forcing(const fs::path& path);
LandSeaMask read_mask(const fs::path& path);

/// Rounds depths to what survives the f32 header field, so specs read back compare equal.
Grid3DSpec canonical_spec(Grid3DSpec spec);

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::int64_t day = 0;
    fs::path ocean;
    fs::path forcing;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::optional<std::int64_t> train_end_day;
    std::optional<std::int64_t> valid_end_day;
    fs::path mask;  // optional land-sea mask file

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
    const ManifestEntry* find(std::int64_t day) const;
    // Throws InvalidArgument unless day indices are contiguous and increasing.
    void validate() const;
};

/// Text form: `# key=value` header lines, then `day<TAB>ocean<TAB>forcing`.
/// Relative paths are resolved against the manifest's directory.
void write_manifest(const fs::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const fs::path& path);

struct DatasetSplits {
    DatasetManifest train;
    DatasetManifest valid;
    DatasetManifest test;
};

/// Chronological split: train = day <= train_end, valid = (train_end, valid_end], test = rest.
DatasetSplits split_dataset(const DatasetManifest& manifest, std::int64_t train_end_day, std::int64_t valid_end_day);

// ---------------------------------------------------------------------------
// Normalisation statistics
// ---------------------------------------------------------------------------

struct NormStats {
    int n_var = kOceanVars;
    int n_depth = 0;
    std::vector<double> mean;  // [v * n_depth + k]
    std::vector<double> std;
    std::vector<double> forcing_mean;  // per forcing channel
    std::vector<double> forcing_std;
    std::vector<std::string> degenerate;  // slices whose std was clamped to 1

    double mean_at(int v, int k) const { return mean[std::size_t(v) * n_depth + k]; }
    double std_at(int v, int k) const { return std[std::size_t(v) * n_depth + k]; }
};

/// Population mean/std per (variable, depth) over time and ocean cells, plus
/// per-channel forcing stats. Constant slices are flagged and get std = 1.
NormStats compute_norm_stats(std::span<const OceanState> states, std::span<const ForcingState> forcings,
                             const LandSeaMask& mask);
NormStats compute_norm_stats(const DatasetManifest& train, const LandSeaMask& mask);

void write_norm_stats(const fs::path& path, const NormStats& stats);
NormStats read_norm_stats(const fs::path& path);

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

/// Writes CSV files per metric family plus SVG charts, and a
/// `report_manifest.txt` listing everything written. Returns written paths.
std::vector<fs::path> write_report(const MetricReport& report, const fs::path& dir);

}  // namespace oceanfc
