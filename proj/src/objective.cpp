#include "oceanfc/objective.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "oceanfc/calendar.hpp"
#include "oceanfc/error.hpp"

namespace oceanfc {

namespace {

void require_same_grid(const Grid3DSpec& a, const Grid3DSpec& b, const char* what) {
    if (a != b) throw Error(ErrorCode::SpecMismatch, what);
}

std::string slot_file(int s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "clim_doy%03d.ogf", s);
    return buf;
}

}  // namespace

StateIncrement StateIncrement::zeros(const Grid3DSpec& spec, std::int64_t base_day, int lead) {
    StateIncrement d;
    d.spec = spec;
    d.time = base_day;
    d.lead = lead;
    d.data.assign(spec.size(), 0.0);
    return d;
}

StateIncrement increment(const OceanState& x_t, const OceanState& x_next) {
    require_same_grid(x_t.spec, x_next.spec, "increment between states on different grids");
    if (x_next.time <= x_t.time)
        throw Error(ErrorCode::NonPositiveLead, "target day " + std::to_string(x_next.time) + " is not after day " +
                                                    std::to_string(x_t.time));
    StateIncrement d;
    d.spec = x_t.spec;
    d.time = x_t.time;
    d.lead = static_cast<int>(x_next.time - x_t.time);
    d.data.resize(x_t.data.size());
    for (std::size_t n = 0; n < d.data.size(); ++n) d.data[n] = x_next.data[n] - x_t.data[n];
    return d;
}

OceanState apply_increment(const OceanState& x_t, const StateIncrement& d) {
    require_same_grid(x_t.spec, d.spec, "increment grid differs from state grid");
    OceanState out;
    out.spec = x_t.spec;
    out.time = x_t.time + d.lead;
    out.data.resize(x_t.data.size());
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] = x_t.data[n] + d.data[n];
    return out;
}

double weighted_increment_mse(const GriddedField& pred, const GriddedField& truth, const LandSeaMask& mask,
                              const LatitudeWeights& w) {
    const auto& s = pred.spec;
    require_same_grid(s, truth.spec, "prediction and truth grids differ");
    if (!mask.matches(s)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from increments");
    if (static_cast<int>(w.w.size()) != s.n_lat) throw Error(ErrorCode::SpecMismatch, "weights length differs");
    double num = 0.0, den = 0.0;
    for (int v = 0; v < s.n_var; ++v)
        for (int k = 0; k < s.n_depth; ++k)
            for (int i = 0; i < s.n_lat; ++i)
                for (int j = 0; j < s.n_lon; ++j) {
                    if (!mask.ocean(k, i, j)) continue;
                    const double e = pred.at(v, k, i, j) - truth.at(v, k, i, j);
                    num += w.w[i] * e * e;
                    den += w.w[i];
                }
    if (!(den > 0)) throw Error(ErrorCode::EmptyMask, "loss denominator is zero");
    return num / den;
}

const OceanState& Climatology::for_day(std::int64_t day) const { return slot(climatology_slot(day)); }

Climatology build_climatology(std::span<const OceanState> states, const LandSeaMask& mask, int window) {
    if (states.empty()) throw Error(ErrorCode::EmptyManifest, "climatology needs at least one state");
    if (window < 1 || window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "smoothing window must be odd and >= 1");
    const Grid3DSpec& spec = states.front().spec;
    if (!mask.matches(spec)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from states");

    Climatology c;
    c.spec = spec;
    c.window = window;
    c.slots.assign(kClimatologySlots, OceanState::zeros(spec, 0));
    c.source.assign(kClimatologySlots, 0);
    c.sample_count.assign(kClimatologySlots, 0);
    for (int s = 1; s <= kClimatologySlots; ++s) c.slots[s - 1].time = s;

    for (const auto& st : states) {
        require_same_grid(st.spec, spec, "climatology inputs disagree on their grid");
        const int s = climatology_slot(st.time);
        auto& acc = c.slots[s - 1].data;
        for (std::size_t n = 0; n < acc.size(); ++n) acc[n] += st.data[n];
        ++c.sample_count[s - 1];
    }
    std::vector<int> populated;
    for (int s = 1; s <= kClimatologySlots; ++s) {
        const int n = c.sample_count[s - 1];
        if (n == 0) continue;
        for (double& x : c.slots[s - 1].data) x /= n;
        c.source[s - 1] = s;
        populated.push_back(s);
    }

    auto circular = [](int a, int b) {
        const int d = std::abs(a - b);
        return std::min(d, kClimatologySlots - d);
    };
    // Empty ordinary slots copy the nearest populated slot (earlier slot wins ties).
    for (int s = 1; s <= kClimatologySlots; ++s) {
        if (c.sample_count[s - 1] > 0 || s == kLeapDaySlot) continue;
        int best = populated.front();
        for (int q : populated)
            if (circular(q, s) < circular(best, s) || (circular(q, s) == circular(best, s) && q < best)) best = q;
        c.slots[s - 1].data = c.slots[best - 1].data;
        c.source[s - 1] = best;
    }
    if (c.sample_count[kLeapDaySlot - 1] == 0) {
        const auto& feb28 = c.slots[kLeapDaySlot - 2].data;
        const auto& mar1 = c.slots[kLeapDaySlot].data;
        auto& leap = c.slots[kLeapDaySlot - 1].data;
        for (std::size_t n = 0; n < leap.size(); ++n) leap[n] = 0.5 * (feb28[n] + mar1[n]);
        c.source[kLeapDaySlot - 1] = -1;
    }

    if (window > 1) {
        std::vector<OceanState> smoothed = c.slots;
        const int half = window / 2;
        for (int s = 0; s < kClimatologySlots; ++s) {
            auto& out = smoothed[s].data;
            std::fill(out.begin(), out.end(), 0.0);
            for (int o = -half; o <= half; ++o) {
                const auto& src = c.slots[(s + o + kClimatologySlots) % kClimatologySlots].data;
                for (std::size_t n = 0; n < out.size(); ++n) out[n] += src[n];
            }
            for (double& x : out) x /= window;
        }
        c.slots = std::move(smoothed);
    }

    for (auto& st : c.slots) apply_mask(st, mask);
    return c;
}

Climatology build_climatology(const DatasetManifest& manifest, const LandSeaMask& mask, int window) {
    if (manifest.empty()) throw Error(ErrorCode::EmptyManifest, "climatology manifest is empty");
    std::vector<OceanState> states;
    states.reserve(manifest.size());
    for (const auto& e : manifest.entries) {
        states.push_back(read_ocean(e.ocean));
        states.back().time = e.day;
    }
    return build_climatology(states, mask, window);
}

OceanState anomaly(const OceanState& state, const Climatology& clim) {
    require_same_grid(state.spec, clim.spec, "anomaly against a climatology on another grid");
    const OceanState& ref = clim.for_day(state.time);
    OceanState out;
    out.spec = state.spec;
    out.time = state.time;
    out.data.resize(state.data.size());
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] = state.data[n] - ref.data[n];
    return out;
}

void write_climatology(const std::filesystem::path& dir, const Climatology& clim) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    for (int s = 1; s <= kClimatologySlots; ++s) write_ogf(dir / slot_file(s), clim.slot(s), OgfKind::Climatology);
    std::ofstream meta(dir / "climatology_meta.txt", std::ios::trunc);
    if (!meta) throw Error(ErrorCode::IoFailure, "cannot write climatology metadata in " + dir.string());
    meta << "# window=" << clim.window << '\n';
    meta << "slot\tsource\tsamples\n";
    for (int s = 1; s <= kClimatologySlots; ++s)
        meta << s << '\t' << clim.source[s - 1] << '\t' << clim.sample_count[s - 1] << '\n';
}

Climatology read_climatology(const std::filesystem::path& dir) {
    Climatology c;
    c.slots.reserve(kClimatologySlots);
    for (int s = 1; s <= kClimatologySlots; ++s) {
        c.slots.push_back(read_ocean(dir / slot_file(s)));
        c.slots.back().time = s;
    }
    c.spec = c.slots.front().spec;
    c.source.assign(kClimatologySlots, 0);
    c.sample_count.assign(kClimatologySlots, 0);
    std::ifstream meta(dir / "climatology_meta.txt");
    std::string line;
    while (meta && std::getline(meta, line)) {
        if (line.rfind("# window=", 0) == 0) {
            c.window = std::stoi(line.substr(9));
            continue;
        }
        std::istringstream ls(line);
        int s = 0, src = 0, n = 0;
        if (ls >> s >> src >> n && s >= 1 && s <= kClimatologySlots) {
            c.source[s - 1] = src;
            c.sample_count[s - 1] = n;
        }
    }
    return c;
}

}  // namespace oceanfc
