#include <fstream>

#include "doctest.h"
#include "oceanfc/synth.hpp"
#include "oceanfc/train.hpp"
#include "oracles.hpp"
#include "util.hpp"

using namespace oceanfc;
using testutil::code_of;

namespace {

struct Task {
    SynthParams p = default_synth_params();
    LandSeaMask mask;
    DatasetManifest manifest;
    TrainingSeries series;
    NormStats stats;

    Task() {
        p.grid.n_lat = 8;
        p.grid.n_lon = 16;
        p.grid.d_lat = 120.0 / 8;
        p.grid.lat0 = -60.0 + 0.5 * p.grid.d_lat;
        p.grid.d_lon = 360.0 / 16;
        p.grid.n_depth = 4;
        p.grid.depths = {0, 10, 30, 60};
        mask = default_synth_mask(p.grid);
        manifest = gen_dataset(p, 0, 24, mask, testutil::tmpdir("train_task"));
        series = load_series(manifest);
        stats = compute_norm_stats(manifest, mask);
    }
};

const Task& task() {
    static const Task t;
    return t;
}

TrainConfig quick() {
    TrainConfig c;
    c.lr = 1e-2;
    c.batch_size = 4;
    c.stage1_days = 10;
    c.stage1_epochs = 1;
    c.stage2_epochs = 6;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("training bases respect the window and lead") {
    const auto& t = task();
    const auto b = training_bases(t.series, 5, 10);
    REQUIRE(b.size() == 4u);
    CHECK(b.front() == 1);
    CHECK(b.back() == 4);
    CHECK(training_bases(t.series, 1, 1000).size() == 22u);
    CHECK(training_bases(t.series, 30, 1000).empty());
}

TEST_CASE("train config validation") {
    CHECK_NOTHROW(TrainConfig{}.validate());
    auto c = TrainConfig{};
    c.lr = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = TrainConfig{};
    c.beta2 = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = TrainConfig{};
    c.cosine_decay = true;
    c.lr_min = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("training reduces the loss and is deterministic") {
    const auto& t = task();
    const Swin3dModel model(oracle::gradcheck_config(), t.p.grid);
    std::vector<TrainLogEntry> seen;
    const auto a = train(model, quick(), t.series, t.mask, t.stats, 1, [&](const TrainLogEntry& e) { seen.push_back(e); });
    REQUIRE(a.log.size() == 7u);
    CHECK(seen.size() == a.log.size());
    CHECK(a.log.front().stage == 1);
    CHECK(a.log.back().stage == 2);
    CHECK(a.log.back().epoch == 7);
    CHECK(a.log.back().loss < 0.5 * a.initial_loss);

    auto threaded = quick();
    threaded.threads = 2;
    const auto b = train(model, threaded, t.series, t.mask, t.stats, 1);
    CHECK(b.params.values == a.params.values);
    CHECK(b.steps == a.steps);
}

TEST_CASE("training input errors") {
    const auto& t = task();
    const Swin3dModel model(oracle::gradcheck_config(), t.p.grid);
    CHECK(code_of([&] { train(model, quick(), t.series, t.mask, t.stats, 0); }) == ErrorCode::NonPositiveLead);
    CHECK(code_of([&] { train(model, quick(), t.series, t.mask, t.stats, 30); }) == ErrorCode::InsufficientData);
    CHECK(code_of([] { load_series(DatasetManifest{}); }) == ErrorCode::EmptyManifest);
}

TEST_CASE("train log csv") {
    const auto path = testutil::tmpdir("train_log") / "log.csv";
    write_train_log(path, {{1, 1, 0.5}, {2, 2, 0.25}});
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header.find("epoch") != std::string::npos);
    CHECK(row.rfind("1,1,", 0) == 0);
}
