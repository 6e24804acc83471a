#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oceanfc/grid.hpp"
#include "oceanfc/io.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/tape.hpp"

namespace oceanfc {

/// Hyperparameters of the U-shaped 3D shifted-window transformer.
///
/// Axes are ordered (depth, lat, lon). The encoder has one stage per entry of
/// `encoder_depths`, each followed by 2x2x2 patch merging that doubles the
/// channel width; the decoder mirrors it with patch expansion and additive
/// skips. Odd-numbered blocks inside a stage use half-window cyclic shifts.
struct Swin3dConfig {
    std::array<int, 3> patch{2, 4, 4};
    int embed_dim = 32;
    std::array<int, 3> window{2, 4, 4};
    std::vector<int> encoder_depths{2, 2};
    int bottleneck_depth = 2;
    int heads = 4;
    int mlp_ratio = 4;
    bool shift = true;
    bool pos_embed = true;
    bool periodic_lon = true;  // no wrap masking along longitude on global grids
    std::uint64_t seed = 0;
};

struct ParamEntry {
    std::string name;
    std::size_t offset = 0;
    std::vector<int> shape;

    std::size_t count() const;
};

/// Flat parameter vector plus a layout table naming each tensor.
struct ParamSet {
    std::vector<double> values;
    std::vector<ParamEntry> layout;

    std::size_t count() const { return values.size(); }
    const ParamEntry& entry(const std::string& name) const;
    std::span<const double> view(const std::string& name) const;
    std::span<double> view(const std::string& name);
};

/// Binary form: "OGPW" | u32 version | u64 count | u32 entries |
/// per entry (u32 name length, name, u64 offset, u32 rank, u32 dims...) | f64 payload.
void write_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet read_params(const std::filesystem::path& path);

/// Inputs and target of one supervised step.
struct TrainingSample {
    const OceanState* x_prev = nullptr;
    const OceanState* x_t = nullptr;
    const ForcingState* f_prev = nullptr;
    const ForcingState* f_t = nullptr;
    const StateIncrement* truth = nullptr;
};

/// Static geometry of one stage of the U-net.
struct StageGeometry {
    std::array<int, 3> tokens{};
    std::array<int, 3> window{};
    std::array<int, 3> shift{};
    int channels = 0;
    std::shared_ptr<const ad::WindowPlan> plain;
    std::shared_ptr<const ad::WindowPlan> shifted;
};

/// Window partition of a token grid after a cyclic shift by `shift`
/// (tokens move toward lower indices). Members of a window get region labels
/// that differ when they come from opposite sides of a wrap boundary on a
/// non-periodic axis.
ad::WindowPlan make_window_plan(const std::array<int, 3>& tokens, const std::array<int, 3>& window,
                                const std::array<int, 3>& shift, const std::array<bool, 3>& periodic);

class Swin3dModel {
public:
    /// Throws ConfigIncompatible when the grid cannot be tiled by patches and windows.
    Swin3dModel(const Swin3dConfig& cfg, const Grid3DSpec& ocean_grid);

    const Swin3dConfig& config() const { return cfg_; }
    const Grid3DSpec& grid() const { return grid_; }
    const std::vector<ParamEntry>& layout() const { return layout_; }
    std::size_t param_count() const { return param_count_; }
    const std::vector<StageGeometry>& stages() const { return stages_; }
    std::array<int, 3> padded_cells() const { return padded_; }

    ParamSet init_params() const;
    ParamSet zero_params() const;

    StateIncrement forward(const ParamSet& params, const OceanState& x_prev, const OceanState& x_t,
                           const ForcingState& f_prev, const ForcingState& f_t, const NormStats& stats,
                           int lead) const;

    /// Mean weighted increment MSE over the batch; `grad` is resized and overwritten.
    double loss_and_grad(const ParamSet& params, std::span<const TrainingSample> batch, const LandSeaMask& mask,
                         const LatitudeWeights& w, const NormStats& stats, std::vector<double>& grad,
                         int threads = 1) const;

private:
    ad::NodeId build(ad::Tape& tape, const ParamSet& params, const OceanState& x_prev, const OceanState& x_t,
                     const ForcingState& f_prev, const ForcingState& f_t, const NormStats& stats) const;
    double sample_loss_and_grad(const ParamSet& params, const TrainingSample& s, const LandSeaMask& mask,
                                const LatitudeWeights& w, const NormStats& stats, std::span<double> grad) const;

    Swin3dConfig cfg_;
    Grid3DSpec grid_;
    std::array<int, 3> padded_{};
    std::vector<StageGeometry> stages_;
    std::vector<ParamEntry> layout_;
    std::size_t param_count_ = 0;
    std::shared_ptr<const std::vector<int>> forcing_broadcast_;
    std::shared_ptr<const std::vector<int>> decode_index_;
    std::vector<std::shared_ptr<const std::vector<int>>> merge_index_;
    std::vector<std::shared_ptr<const std::vector<int>>> expand_index_;
};

StateIncrement swin3d_forward(const ParamSet& params, const Swin3dConfig& cfg, const OceanState& x_prev,
                              const OceanState& x_t, const ForcingState& f_prev, const ForcingState& f_t,
                              const NormStats& stats, int lead = 1);

double loss_and_grad(const ParamSet& params, const Swin3dConfig& cfg, std::span<const TrainingSample> batch,
                     const LandSeaMask& mask, const LatitudeWeights& w, const NormStats& stats,
                     std::vector<double>& grad);

}  // namespace oceanfc
