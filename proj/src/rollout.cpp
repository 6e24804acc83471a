#include "oceanfc/rollout.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "oceanfc/error.hpp"
#include "oceanfc/objective.hpp"

namespace oceanfc {

RolloutSchedule plan_schedule(int horizon, int fm1_lead, int fm5_lead, const std::string& fm1_id,
                              const std::string& fm5_id) {
    if (horizon < 1) throw Error(ErrorCode::BadHorizon, "horizon must be at least one day");
    if (fm1_lead != 1 || fm5_lead < 1)
        throw Error(ErrorCode::BadHorizon, "schedule needs a 1-day propagator and a positive long lead");
    RolloutSchedule s;
    s.horizon = horizon;
    for (int t = 0; t < std::min(horizon, fm5_lead); ++t) s.steps.push_back({fm1_id, t, fm1_lead});
    for (int t = 1; t <= horizon - fm5_lead; ++t) s.steps.push_back({fm5_id, t, fm5_lead});
    return s;
}

void validate_schedule(const RolloutSchedule& sched) {
    if (sched.horizon < 1) throw Error(ErrorCode::BadHorizon, "horizon must be at least one day");
    std::set<int> have{-1, 0};
    for (const auto& st : sched.steps) {
        if (st.lead < 1) throw Error(ErrorCode::BadHorizon, "step with non-positive lead");
        if (!have.count(st.base - 1) || !have.count(st.base))
            throw Error(ErrorCode::BadHorizon, "step at base " + std::to_string(st.base) + " reads a missing day");
        if (st.produced() > sched.horizon || !have.insert(st.produced()).second)
            throw Error(ErrorCode::BadHorizon, "day " + std::to_string(st.produced()) + " produced twice or late");
    }
    if (static_cast<int>(have.size()) != sched.horizon + 2)
        throw Error(ErrorCode::BadHorizon, "schedule leaves forecast days uncovered");
}

const OceanState& Trajectory::at(int day) const {
    auto it = states.find(day);
    if (it == states.end()) throw Error(ErrorCode::MissingInputDay, "trajectory has no day " + std::to_string(day));
    return it->second;
}

namespace {

std::string strip_code(const Error& e) {
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    return msg;
}

}  // namespace

Trajectory rollout(const OceanState& init_prev, const OceanState& init, const ForcingByDay& forcing,
                   const PropagatorSet& props, const RolloutSchedule& sched) {
    if (init_prev.spec != init.spec) throw Error(ErrorCode::SpecMismatch, "initial pair on different grids");
    if (init_prev.time + 1 != init.time)
        throw Error(ErrorCode::InvalidArgument, "initial pair must be consecutive days");
    Trajectory tr;
    tr.init_day = init.time;
    tr.states.emplace(-1, init_prev);
    tr.states.emplace(0, init);
    tr.provenance.emplace(-1, "truth");
    tr.provenance.emplace(0, "truth");

    for (std::size_t n = 0; n < sched.steps.size(); ++n) {
        const RolloutStep& st = sched.steps[n];
        const std::string where = "step " + std::to_string(n) + " (" + st.propagator + " at base " +
                                  std::to_string(st.base) + ")";
        auto p = props.find(st.propagator);
        if (p == props.end()) throw Error(ErrorCode::InvalidArgument, where + ": unknown propagator");
        if (p->second.lead != st.lead)
            throw Error(ErrorCode::InvalidArgument, where + ": propagator lead differs from the schedule");
        auto xp = tr.states.find(st.base - 1), xt = tr.states.find(st.base);
        if (xp == tr.states.end() || xt == tr.states.end())
            throw Error(ErrorCode::MissingInputDay, where + ": input day not yet available");
        if (tr.states.count(st.produced()))
            throw Error(ErrorCode::InvalidArgument, where + ": day " + std::to_string(st.produced()) + " already produced");
        const std::int64_t dp = tr.init_day + st.base - 1, dt = tr.init_day + st.base;
        auto fp = forcing.find(dp), ft = forcing.find(dt);
        if (fp == forcing.end() || ft == forcing.end())
            throw Error(ErrorCode::MissingForcing,
                        where + ": no forcing for day " + std::to_string(fp == forcing.end() ? dp : dt));
        StateIncrement d;
        try {
            d = p->second.step(xp->second, xt->second, fp->second, ft->second);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + strip_code(e));
        }
        d.lead = st.lead;
        tr.states.emplace(st.produced(), apply_increment(xt->second, d));
        tr.provenance.emplace(st.produced(),
                              st.propagator + "@" + std::to_string(st.base) + "+" + std::to_string(st.lead));
    }
    return tr;
}

std::vector<ForecastRun> forecast_suite(const DatasetManifest& manifest, const std::vector<std::int64_t>& init_days,
                                        const PropagatorSet& props, const RolloutSchedule& sched,
                                        const LandSeaMask* mask) {
    validate_schedule(sched);
    std::map<std::int64_t, OceanState> ocean;
    ForcingByDay forcing;
    auto load = [&](std::int64_t day) {
        const ManifestEntry* e = manifest.find(day);
        if (!e) return false;
        if (!ocean.count(day)) {
            OceanState s = read_ocean(e->ocean);
            s.time = day;
            if (mask) apply_mask(s, *mask);
            ocean.emplace(day, std::move(s));
            ForcingState f = read_forcing(e->forcing);
            f.time = day;
            forcing.emplace(day, std::move(f));
        }
        return true;
    };
    for (std::int64_t d0 : init_days)
        for (std::int64_t d = d0 - 1; d <= d0 + sched.horizon; ++d)
            if (!load(d))
                throw Error(ErrorCode::InsufficientData, "initial day " + std::to_string(d0) + " needs day " +
                                                             std::to_string(d) + " which the manifest lacks");
    std::vector<ForecastRun> runs;
    for (std::int64_t d0 : init_days) {
        ForecastRun r;
        r.init_day = d0;
        r.forecast = rollout(ocean.at(d0 - 1), ocean.at(d0), forcing, props, sched);
        for (int l = 0; l <= sched.horizon; ++l) r.truth.emplace(l, ocean.at(d0 + l));
        runs.push_back(std::move(r));
    }
    return runs;
}

std::vector<std::filesystem::path> write_forecasts(const std::filesystem::path& dir,
                                                   const std::vector<ForecastRun>& runs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    std::vector<std::filesystem::path> written;
    std::ostringstream man;
    man << "# init_day\tlead\tvalid_day\tsource\tfile\n";
    for (const auto& r : runs)
        for (const auto& [day, state] : r.forecast.states) {
            if (day < 1) continue;
            const std::string name =
                "fc_init" + std::to_string(r.init_day) + "_lead" + std::to_string(day) + ".ogf";
            write_ogf(dir / name, state);
            written.push_back(dir / name);
            man << r.init_day << '\t' << day << '\t' << r.init_day + day << '\t' << r.forecast.provenance.at(day)
                << '\t' << name << '\n';
        }
    const auto mpath = dir / "forecast_manifest.txt";
    std::ofstream out(mpath, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + mpath.string() + " for writing");
    out << man.str();
    written.push_back(mpath);
    return written;
}

std::vector<StoredForecast> read_forecast_manifest(const std::filesystem::path& dir) {
    const auto mpath = dir / "forecast_manifest.txt";
    std::ifstream in(mpath);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + mpath.string());
    std::vector<StoredForecast> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        StoredForecast f;
        std::string file;
        if (!(ls >> f.init_day >> f.lead >> f.valid_day >> f.source >> file))
            throw Error(ErrorCode::FormatViolation, mpath.string() + ": malformed line '" + line + "'");
        f.file = dir / file;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace oceanfc
