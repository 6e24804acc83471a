#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oceanfc/io.hpp"
#include "oceanfc/propagators.hpp"

namespace oceanfc {

struct RolloutStep {
    std::string propagator;
    int base = 0;  // day relative to initialisation; inputs are (base - 1, base)
    int lead = 1;

    int produced() const { return base + lead; }
};

struct RolloutSchedule {
    int horizon = 0;
    std::vector<RolloutStep> steps;
};

/// FM1 at bases 0..min(horizon, fm5_lead)-1, then FM5 at bases
/// 1..horizon-fm5_lead, each reading the forecast pair (t-1, t).
RolloutSchedule plan_schedule(int horizon, int fm1_lead = 1, int fm5_lead = 5, const std::string& fm1_id = "fm1",
                              const std::string& fm5_id = "fm5");

/// Throws BadHorizon unless every day 1..horizon is produced exactly once
/// from inputs that exist when the step runs.
void validate_schedule(const RolloutSchedule& sched);

struct Trajectory {
    std::int64_t init_day = 0;  // absolute day of relative day 0
    std::map<int, OceanState> states;       // relative day -> state, includes -1 and 0
    std::map<int, std::string> provenance;  // relative day -> "truth" or "<id>@<base>+<lead>"

    const OceanState& at(int day) const;
};

using ForcingByDay = std::map<std::int64_t, ForcingState>;
using PropagatorSet = std::map<std::string, Propagator>;

Trajectory rollout(const OceanState& init_prev, const OceanState& init, const ForcingByDay& forcing,
                   const PropagatorSet& props, const RolloutSchedule& sched);

struct ForecastRun {
    std::int64_t init_day = 0;
    Trajectory forecast;
    std::map<int, OceanState> truth;  // relative day 0..horizon
};

/// One independent trajectory per initial day; truth and forcing come from `manifest`.
std::vector<ForecastRun> forecast_suite(const DatasetManifest& manifest, const std::vector<std::int64_t>& init_days,
                                        const PropagatorSet& props, const RolloutSchedule& sched,
                                        const LandSeaMask* mask = nullptr);

/// Writes `fc_init{D}_lead{L}.ogf` for every lead and appends to
/// `forecast_manifest.txt` (init_day, lead, valid_day, source, file).
std::vector<std::filesystem::path> write_forecasts(const std::filesystem::path& dir,
                                                   const std::vector<ForecastRun>& runs);

struct StoredForecast {
    std::int64_t init_day = 0;
    int lead = 0;
    std::int64_t valid_day = 0;
    std::string source;
    std::filesystem::path file;
};

std::vector<StoredForecast> read_forecast_manifest(const std::filesystem::path& dir);

}  // namespace oceanfc
