#include "oceanfc/train.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "oceanfc/error.hpp"
#include "oceanfc/numeric.hpp"
#include "oceanfc/objective.hpp"

namespace oceanfc {

void TrainConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
    if (!(lr > 0)) bad("learning rate must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) bad("Adam betas must lie in [0, 1)");
    if (!(eps > 0)) bad("Adam epsilon must be positive");
    if (batch_size < 1) bad("batch size must be positive");
    if (stage1_epochs < 0 || stage2_epochs < 0) bad("epoch counts must be non-negative");
    if (stage1_days < 1) bad("stage-1 window must hold at least one day");
    if (threads < 1) bad("thread count must be positive");
    if (cosine_decay && !(lr_min >= 0 && lr_min <= lr)) bad("lr_min must lie in [0, lr]");
}

TrainingSeries load_series(const DatasetManifest& manifest) {
    if (manifest.empty()) throw Error(ErrorCode::EmptyManifest, "training split is empty");
    manifest.validate();
    TrainingSeries s;
    s.first_day = manifest.entries.front().day;
    for (const auto& e : manifest.entries) {
        s.ocean.push_back(read_ocean(e.ocean));
        s.ocean.back().time = e.day;
        s.forcing.push_back(read_forcing(e.forcing));
        s.forcing.back().time = e.day;
    }
    return s;
}

std::vector<std::int64_t> training_bases(const TrainingSeries& series, int lead, int days) {
    const std::int64_t n = std::min<std::int64_t>(days, static_cast<std::int64_t>(series.size()));
    std::vector<std::int64_t> bases;
    for (std::int64_t t = 1; t + lead < n; ++t) bases.push_back(series.first_day + t);
    return bases;
}

namespace {

struct Adam {
    std::vector<double> m, v;
    std::size_t t = 0;

    void step(std::vector<double>& x, const std::vector<double>& g, const TrainConfig& c, double lr) {
        if (m.empty()) {
            m.assign(x.size(), 0.0);
            v.assign(x.size(), 0.0);
        }
        ++t;
        const double b1t = 1.0 - std::pow(c.beta1, static_cast<double>(t));
        const double b2t = 1.0 - std::pow(c.beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < x.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            x[k] -= lr * (m[k] / b1t) / (std::sqrt(v[k] / b2t) + c.eps);
        }
    }
};

}  // namespace

TrainResult train(const Swin3dModel& model, const TrainConfig& tcfg, const TrainingSeries& series,
                  const LandSeaMask& mask, const NormStats& stats, int lead, const EpochCallback& on_epoch) {
    tcfg.validate();
    if (lead < 1) throw Error(ErrorCode::NonPositiveLead, "training lead must be at least one day");
    const auto stage1 = training_bases(series, lead, tcfg.stage1_days);
    const auto stage2 = training_bases(series, lead, static_cast<int>(series.size()));
    if (stage2.empty())
        throw Error(ErrorCode::InsufficientData, "training split too short for lead " + std::to_string(lead));
    if (tcfg.stage1_epochs > 0 && stage1.empty())
        throw Error(ErrorCode::InsufficientData, "stage-1 window too short for lead " + std::to_string(lead));

    const LatitudeWeights w = latitude_weights(model.grid());
    TrainResult res;
    res.params = model.init_params();
    Adam adam;
    std::vector<double> grad;
    SplitMix64 rng(tcfg.seed ^ 0x5DEECE66Dull);
    int epoch = 0;
    bool first = true;
    auto steps_for = [&](std::size_t n, int epochs) {
        return static_cast<std::size_t>(epochs) * ((n + tcfg.batch_size - 1) / tcfg.batch_size);
    };
    const std::size_t total_steps = steps_for(stage1.size(), tcfg.stage1_epochs) + steps_for(stage2.size(), tcfg.stage2_epochs);
    auto lr_at = [&](std::size_t step) {
        if (!tcfg.cosine_decay || total_steps < 2) return tcfg.lr;
        const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
        return tcfg.lr_min + 0.5 * (tcfg.lr - tcfg.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
    };

    auto run_stage = [&](int stage, std::vector<std::int64_t> bases, int epochs) {
        for (int e = 0; e < epochs; ++e) {
            ++epoch;
            for (std::size_t n = bases.size(); n > 1; --n) std::swap(bases[n - 1], bases[rng.below(n)]);
            KahanSum total;
            for (std::size_t b0 = 0; b0 < bases.size(); b0 += tcfg.batch_size) {
                const std::size_t b1 = std::min(bases.size(), b0 + tcfg.batch_size);
                std::vector<StateIncrement> truths;
                truths.reserve(b1 - b0);
                std::vector<TrainingSample> batch;
                for (std::size_t b = b0; b < b1; ++b) {
                    const std::size_t t = static_cast<std::size_t>(bases[b] - series.first_day);
                    truths.push_back(increment(series.ocean[t], series.ocean[t + lead]));
                }
                for (std::size_t b = b0; b < b1; ++b) {
                    const std::size_t t = static_cast<std::size_t>(bases[b] - series.first_day);
                    batch.push_back({&series.ocean[t - 1], &series.ocean[t], &series.forcing[t - 1],
                                     &series.forcing[t], &truths[b - b0]});
                }
                const double loss = model.loss_and_grad(res.params, batch, mask, w, stats, grad, tcfg.threads);
                if (!std::isfinite(loss))
                    throw Error(ErrorCode::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
                if (first) {
                    res.initial_loss = loss;
                    first = false;
                }
                total.add(loss * static_cast<double>(b1 - b0));
                if (tcfg.clip_norm > 0) {
                    KahanSum sq;
                    for (double g : grad) sq.add(g * g);
                    const double norm = std::sqrt(sq.value());
                    if (norm > tcfg.clip_norm)
                        for (double& g : grad) g *= tcfg.clip_norm / norm;
                }
                adam.step(res.params.values, grad, tcfg, lr_at(res.steps));
                ++res.steps;
            }
            const double mean = total.value() / static_cast<double>(bases.size());
            if (!std::isfinite(mean))
                throw Error(ErrorCode::Divergence, "loss became non-finite in epoch " + std::to_string(epoch));
            res.log.push_back({epoch, stage, mean});
            if (on_epoch) on_epoch(res.log.back());
        }
    };
    run_stage(1, stage1, tcfg.stage1_epochs);
    run_stage(2, stage2, tcfg.stage2_epochs);
    return res;
}

TrainResult train(const Swin3dConfig& cfg, const TrainConfig& tcfg, const DatasetManifest& train_split,
                  const LandSeaMask& mask, const NormStats& stats, int lead) {
    const TrainingSeries series = load_series(train_split);
    const Swin3dModel model(cfg, series.ocean.front().spec);
    return train(model, tcfg, series, mask, stats, lead);
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << "epoch,stage,loss\n";
    for (const auto& e : log) out << e.epoch << ',' << e.stage << ',' << format_double(e.loss) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace oceanfc
