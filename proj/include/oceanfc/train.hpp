#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "oceanfc/io.hpp"
#include "oceanfc/swin3d.hpp"

namespace oceanfc {

/// Two-stage Adam schedule. Stage 1 sees only the first `stage1_days` days
/// of the training split; stage 2 sees all of it.
struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 4;
    int stage1_epochs = 1;
    int stage2_epochs = 2;
    int stage1_days = 60;
    double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
    bool cosine_decay = false;  // anneal lr to lr_min over all steps of both stages
    double lr_min = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

struct TrainLogEntry {
    int epoch = 0;  // 1-based, continuous across stages
    int stage = 0;
    double loss = 0.0;  // sample-weighted mean batch loss over the epoch
};

struct TrainResult {
    ParamSet params;
    std::vector<TrainLogEntry> log;
    double initial_loss = 0.0;  // loss of the first batch before any update
    std::size_t steps = 0;
};

/// In-memory training data: consecutive days starting at `first_day`.
struct TrainingSeries {
    std::int64_t first_day = 0;
    std::vector<OceanState> ocean;
    std::vector<ForcingState> forcing;

    std::size_t size() const { return ocean.size(); }
};

TrainingSeries load_series(const DatasetManifest& manifest);

/// Base days t with t-1, t and t+lead all inside the first `days` days of the series.
std::vector<std::int64_t> training_bases(const TrainingSeries& series, int lead, int days);

using EpochCallback = std::function<void(const TrainLogEntry&)>;

TrainResult train(const Swin3dModel& model, const TrainConfig& tcfg, const TrainingSeries& series,
                  const LandSeaMask& mask, const NormStats& stats, int lead, const EpochCallback& on_epoch = {});

TrainResult train(const Swin3dConfig& cfg, const TrainConfig& tcfg, const DatasetManifest& train_split,
                  const LandSeaMask& mask, const NormStats& stats, int lead);

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log);

}  // namespace oceanfc
