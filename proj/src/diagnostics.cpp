#include "oceanfc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oceanfc/error.hpp"

namespace oceanfc {

namespace {

constexpr std::array<const char*, kOceanVars> kUnits{"degC", "psu", "m/s", "m/s"};

void check_pairs(const LeadPairs& lp, const LandSeaMask& mask, const LatitudeWeights& w) {
    if (lp.forecasts.size() != lp.truths.size() || lp.forecasts.empty())
        throw Error(ErrorCode::PairMismatch, "lead " + std::to_string(lp.lead) + " has unpaired or no states");
    for (std::size_t n = 0; n < lp.forecasts.size(); ++n) {
        const auto& f = *lp.forecasts[n];
        const auto& t = *lp.truths[n];
        if (f.spec != t.spec || !mask.matches(f.spec) || static_cast<int>(w.w.size()) != f.spec.n_lat)
            throw Error(ErrorCode::PairMismatch, "forecast, truth, mask and weights disagree on the grid");
    }
}

std::vector<int> sorted_leads(std::span<const LeadPairs> leads) {
    std::vector<int> out;
    for (const auto& l : leads) out.push_back(l.lead);
    if (!std::is_sorted(out.begin(), out.end()) || std::adjacent_find(out.begin(), out.end()) != out.end())
        throw Error(ErrorCode::PairMismatch, "leads must be strictly increasing");
    return out;
}

}  // namespace

std::vector<CurveMetric> rmse(std::span<const LeadPairs> leads, const LandSeaMask& mask, const LatitudeWeights& w,
                              RmseScope scope) {
    if (leads.empty()) return {};
    const auto lead_days = sorted_leads(leads);
    for (const auto& lp : leads) check_pairs(lp, mask, w);
    const Grid3DSpec& g = leads.front().forecasts.front()->spec;
    const int n_levels = scope == RmseScope::Column ? 1 : g.n_depth;

    std::vector<CurveMetric> out;
    for (int v = 0; v < g.n_var; ++v)
        for (int level = 0; level < n_levels; ++level) {
            CurveMetric c;
            c.family = "rmse";
            c.variable = v < kOceanVars ? std::string(kOceanVarNames[v]) : "var" + std::to_string(v);
            if (scope == RmseScope::PerDepth) c.depth_m = g.depths[level];
            c.x_label = "lead_days";
            c.units = v < kOceanVars ? kUnits[v] : "";
            const int k0 = scope == RmseScope::Column ? 0 : level;
            const int k1 = scope == RmseScope::Column ? g.n_depth : level + 1;
            for (const auto& lp : leads) {
                double num = 0.0, den = 0.0;
                for (std::size_t n = 0; n < lp.forecasts.size(); ++n) {
                    const auto& f = *lp.forecasts[n];
                    const auto& t = *lp.truths[n];
                    for (int k = k0; k < k1; ++k)
                        for (int i = 0; i < g.n_lat; ++i)
                            for (int j = 0; j < g.n_lon; ++j) {
                                if (!mask.ocean(k, i, j)) continue;
                                const double e = f.at(v, k, i, j) - t.at(v, k, i, j);
                                num += w.w[i] * e * e;
                                den += w.w[i];
                            }
                }
                if (!(den > 0)) {
                    if (scope == RmseScope::Column) throw Error(ErrorCode::EmptyMask, "no ocean cells to verify");
                    continue;  // a fully land level has no curve point
                }
                c.x.push_back(lp.lead);
                c.y.push_back(std::sqrt(num / den));
            }
            if (!c.x.empty()) out.push_back(std::move(c));
        }
    return out;
}

std::vector<CurveMetric> acc(std::span<const LeadPairs> leads, const Climatology& clim, const LandSeaMask& mask,
                             const LatitudeWeights& w) {
    if (leads.empty()) return {};
    sorted_leads(leads);
    for (const auto& lp : leads) check_pairs(lp, mask, w);
    const Grid3DSpec& g = leads.front().forecasts.front()->spec;
    if (clim.spec != g) throw Error(ErrorCode::SpecMismatch, "climatology grid differs from the forecasts");

    std::vector<CurveMetric> out;
    for (int v = 0; v < g.n_var; ++v) {
        CurveMetric c;
        c.family = "acc";
        c.variable = v < kOceanVars ? std::string(kOceanVarNames[v]) : "var" + std::to_string(v);
        c.x_label = "lead_days";
        c.units = "1";
        for (const auto& lp : leads) {
            double fo = 0.0, ff = 0.0, oo = 0.0;
            for (std::size_t n = 0; n < lp.forecasts.size(); ++n) {
                const auto& f = *lp.forecasts[n];
                const auto& t = *lp.truths[n];
                const OceanState& cf = clim.for_day(f.time);
                const OceanState& ct = clim.for_day(t.time);
                for (int k = 0; k < g.n_depth; ++k)
                    for (int i = 0; i < g.n_lat; ++i)
                        for (int j = 0; j < g.n_lon; ++j) {
                            if (!mask.ocean(k, i, j)) continue;
                            const double fa = f.at(v, k, i, j) - cf.at(v, k, i, j);
                            const double oa = t.at(v, k, i, j) - ct.at(v, k, i, j);
                            fo += w.w[i] * fa * oa;
                            ff += w.w[i] * fa * fa;
                            oo += w.w[i] * oa * oa;
                        }
            }
            if (!(ff > 0) || !(oo > 0)) continue;
            c.x.push_back(lp.lead);
            c.y.push_back(std::clamp(fo / std::sqrt(ff * oo), -1.0, 1.0));
        }
        if (!c.x.empty()) out.push_back(std::move(c));
    }
    return out;
}

double eke(std::span<const OceanState> series, const CellGeometry& geom, const LandSeaMask& mask) {
    if (series.size() < 2) throw Error(ErrorCode::TooFewSnapshots, "EKE needs at least two snapshots");
    const Grid3DSpec& g = series.front().spec;
    for (const auto& s : series)
        if (s.spec != g || !mask.matches(g)) throw Error(ErrorCode::SpecMismatch, "EKE series grid mismatch");
    const double n = static_cast<double>(series.size());
    double total = 0.0;
    for (int k = 0; k < g.n_depth; ++k)
        for (int i = 0; i < g.n_lat; ++i)
            for (int j = 0; j < g.n_lon; ++j) {
                if (!mask.ocean(k, i, j)) continue;
                double ub = 0.0, vb = 0.0;
                for (const auto& s : series) {
                    ub += s.at(kUo, k, i, j);
                    vb += s.at(kVo, k, i, j);
                }
                ub /= n;
                vb /= n;
                double e = 0.0;
                for (const auto& s : series) {
                    const double du = s.at(kUo, k, i, j) - ub, dv = s.at(kVo, k, i, j) - vb;
                    e += 0.5 * (du * du + dv * dv);
                }
                total += geom.volume(k, i, j) * e;
            }
    return total / n;
}

double field_variance(std::span<const OceanState> series, int variable, const CellGeometry& geom,
                      const LandSeaMask& mask) {
    if (series.empty()) throw Error(ErrorCode::TooFewSnapshots, "variance needs at least one snapshot");
    const Grid3DSpec& g = series.front().spec;
    if (variable < 0 || variable >= g.n_var) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
    double total = 0.0;
    for (const auto& s : series) {
        if (s.spec != g || !mask.matches(g)) throw Error(ErrorCode::SpecMismatch, "variance series grid mismatch");
        double vol = 0.0, sum = 0.0;
        for (int k = 0; k < g.n_depth; ++k)
            for (int i = 0; i < g.n_lat; ++i)
                for (int j = 0; j < g.n_lon; ++j)
                    if (mask.ocean(k, i, j)) {
                        vol += geom.volume(k, i, j);
                        sum += geom.volume(k, i, j) * s.at(variable, k, i, j);
                    }
        if (!(vol > 0)) throw Error(ErrorCode::EmptyMask, "no ocean cells for variance");
        const double mean = sum / vol;
        double acc_sq = 0.0;
        for (int k = 0; k < g.n_depth; ++k)
            for (int i = 0; i < g.n_lat; ++i)
                for (int j = 0; j < g.n_lon; ++j)
                    if (mask.ocean(k, i, j)) {
                        const double d = s.at(variable, k, i, j) - mean;
                        acc_sq += geom.volume(k, i, j) * d * d;
                    }
        total += acc_sq;
    }
    return total / static_cast<double>(series.size());
}

std::vector<double> sst_gradient(const OceanState& state, const CellGeometry& geom, const LandSeaMask& mask) {
    const Grid3DSpec& g = state.spec;
    if (!mask.matches(g) || g.n_depth < 1) throw Error(ErrorCode::SpecMismatch, "SST gradient grid mismatch");
    const int H = g.n_lat, W = g.n_lon;
    const bool periodic = g.periodic_lon();
    std::vector<double> out(std::size_t(H) * W, std::numeric_limits<double>::quiet_NaN());
    for (int i = 1; i + 1 < H; ++i)
        for (int j = 0; j < W; ++j) {
            int jw = j - 1, je = j + 1;
            if (periodic) {
                jw = (jw + W) % W;
                je = je % W;
            } else if (jw < 0 || je >= W) {
                continue;
            }
            if (!mask.ocean(0, i, j) || !mask.ocean(0, i, jw) || !mask.ocean(0, i, je) || !mask.ocean(0, i - 1, j) ||
                !mask.ocean(0, i + 1, j))
                continue;
            const double gx = (state.at(kThetao, 0, i, je) - state.at(kThetao, 0, i, jw)) / (2.0 * geom.dx[i]);
            const double gy = (state.at(kThetao, 0, i + 1, j) - state.at(kThetao, 0, i - 1, j)) / (2.0 * geom.dy);
            out[std::size_t(i) * W + j] = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

HistogramMetric sst_gradient_hist(std::span<const OceanState> states, const CellGeometry& geom,
                                  const LandSeaMask& mask, const HistogramBins& bins) {
    if (bins.bins < 1 || !(bins.max > 0)) throw Error(ErrorCode::InvalidArgument, "bad histogram bins");
    HistogramMetric h;
    h.name = "sst_gradient";
    h.units = "K/m";
    for (int b = 0; b <= bins.bins; ++b) h.edges.push_back(bins.max * b / bins.bins);
    h.counts.assign(bins.bins, 0);
    for (const auto& s : states)
        for (double gmag : sst_gradient(s, geom, mask)) {
            if (std::isnan(gmag)) continue;
            if (gmag >= bins.max) {
                ++h.overflow;
                continue;
            }
            const int b = std::min(bins.bins - 1, static_cast<int>(gmag / bins.max * bins.bins));
            ++h.counts[b];
        }
    if (h.total() == 0) throw Error(ErrorCode::NoValidStencil, "no surface cell has an all-ocean stencil");
    return h;
}

std::vector<double> ohc(const OceanState& state, const LandSeaMask& mask, double z_max, double rho, double cp) {
    const Grid3DSpec& g = state.spec;
    if (!mask.matches(g)) throw Error(ErrorCode::SpecMismatch, "OHC mask mismatch");
    if (!(z_max > 0)) throw Error(ErrorCode::InvalidArgument, "OHC depth must be positive");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> out(std::size_t(g.n_lat) * g.n_lon, nan);
    if (g.depths.empty() || g.depths.back() < z_max) return out;
    int last = 0;  // first level at or below z_max
    while (g.depths[last] < z_max) ++last;
    for (int i = 0; i < g.n_lat; ++i)
        for (int j = 0; j < g.n_lon; ++j) {
            bool ok = true;
            for (int k = 0; k <= last && ok; ++k) ok = mask.ocean(k, i, j);
            if (!ok) continue;
            auto T = [&](int k) { return state.at(kThetao, k, i, j); };
            double integral = T(0) * std::min(g.depths[0], z_max);
            for (int k = 0; k < last; ++k) {
                const double z0 = g.depths[k], z1 = g.depths[k + 1];
                if (z1 <= z_max) {
                    integral += 0.5 * (T(k) + T(k + 1)) * (z1 - z0);
                } else {
                    const double tz = T(k) + (T(k + 1) - T(k)) * (z_max - z0) / (z1 - z0);
                    integral += 0.5 * (T(k) + tz) * (z_max - z0);
                }
            }
            out[std::size_t(i) * g.n_lon + j] = rho * cp * integral;
        }
    return out;
}

std::vector<SectionSpec> standard_sections() {
    return {
        {"equatorial_pacific", 0.0, 140.0, 260.0},
        {"kuroshio_extension", 40.0, 140.0, 180.0},
        {"southern_ocean", -55.0, 60.0, 150.0},
    };
}

SectionMetric section_error(const OceanState& forecast, const OceanState& truth, const SectionSpec& sec, int lead) {
    if (forecast.spec != truth.spec) throw Error(ErrorCode::PairMismatch, "section pair on different grids");
    const SectionField f = extract_section(forecast, sec, kThetao);
    const SectionField t = extract_section(truth, sec, kThetao);
    SectionMetric m;
    m.name = sec.name;
    m.units = "degC";
    m.lat = f.snapped_lat;
    m.lead_days = lead;
    m.depths = f.depths;
    m.lons = f.lons;
    m.values.resize(f.values.size());
    for (std::size_t n = 0; n < m.values.size(); ++n) m.values[n] = f.values[n] - t.values[n];
    return m;
}

OceanState smooth_blend(const OceanState& state, const LandSeaMask& mask, int radius, double alpha) {
    const Grid3DSpec& g = state.spec;
    if (!mask.matches(g)) throw Error(ErrorCode::SpecMismatch, "smoothing mask mismatch");
    if (radius < 0) throw Error(ErrorCode::InvalidArgument, "smoothing radius must be non-negative");
    const bool periodic = g.periodic_lon();
    OceanState out = state;
    for (int v = 0; v < g.n_var; ++v)
        for (int k = 0; k < g.n_depth; ++k)
            for (int i = 0; i < g.n_lat; ++i)
                for (int j = 0; j < g.n_lon; ++j) {
                    if (!mask.ocean(k, i, j)) continue;
                    double sum = 0.0;
                    int count = 0;
                    for (int di = -radius; di <= radius; ++di)
                        for (int dj = -radius; dj <= radius; ++dj) {
                            const int ii = i + di;
                            int jj = j + dj;
                            if (ii < 0 || ii >= g.n_lat) continue;
                            if (periodic) jj = ((jj % g.n_lon) + g.n_lon) % g.n_lon;
                            else if (jj < 0 || jj >= g.n_lon) continue;
                            if (!mask.ocean(k, ii, jj)) continue;
                            sum += state.at(v, k, ii, jj);
                            ++count;
                        }
                    out.at(v, k, i, j) = (1.0 - alpha) * state.at(v, k, i, j) + alpha * sum / count;
                }
    return out;
}

MetricReport evaluate_runs(const std::vector<ForecastRun>& runs, const LandSeaMask& mask, const Climatology* clim,
                           const EvaluationOptions& opt) {
    MetricReport rep;
    if (runs.empty()) return rep;
    int horizon = 0;
    for (const auto& r : runs) {
        rep.init_days.push_back(r.init_day);
        int h = 0;
        while (r.forecast.states.count(h + 1) && r.truth.count(h + 1)) ++h;
        horizon = horizon == 0 ? h : std::min(horizon, h);
    }
    if (horizon < 1) throw Error(ErrorCode::PairMismatch, "runs contain no verifiable lead");
    rep.horizon = horizon;
    const int diag = opt.diag_lead > 0 ? std::min(opt.diag_lead, horizon) : horizon;
    const Grid3DSpec& g = runs.front().forecast.at(0).spec;
    const LatitudeWeights w = latitude_weights(g);

    std::vector<LeadPairs> leads;
    for (int l = 1; l <= horizon; ++l) {
        LeadPairs lp{l, {}, {}};
        for (const auto& r : runs) {
            lp.forecasts.push_back(&r.forecast.at(l));
            lp.truths.push_back(&r.truth.at(l));
        }
        leads.push_back(std::move(lp));
    }
    for (auto& c : rmse(leads, mask, w, RmseScope::Column)) rep.curves.push_back(std::move(c));
    for (auto& c : rmse(leads, mask, w, RmseScope::PerDepth)) rep.curves.push_back(std::move(c));
    if (clim)
        for (auto& c : acc(leads, *clim, mask, w)) rep.curves.push_back(std::move(c));

    const CellGeometry geom = cell_geometry(g);
    std::vector<OceanState> fc, tr;
    for (const auto& r : runs) {
        fc.push_back(r.forecast.at(diag));
        tr.push_back(r.truth.at(diag));
    }
    if (fc.size() >= 2) {
        rep.scalars.push_back({"eke", eke(fc, geom, mask), "m^5/s^2"});
        rep.scalars.push_back({"eke_truth", eke(tr, geom, mask), "m^5/s^2"});
    }
    rep.scalars.push_back({"t_variance", field_variance(fc, kThetao, geom, mask), "degC^2 m^3"});
    rep.scalars.push_back({"t_variance_truth", field_variance(tr, kThetao, geom, mask), "degC^2 m^3"});
    rep.scalars.push_back({"s_variance", field_variance(fc, kSo, geom, mask), "psu^2 m^3"});
    rep.scalars.push_back({"s_variance_truth", field_variance(tr, kSo, geom, mask), "psu^2 m^3"});
    rep.histograms.push_back(sst_gradient_hist(fc, geom, mask, opt.bins));

    FieldMetric err;
    err.name = "ohc_error";
    err.units = "J/m^2";
    for (int i = 0; i < g.n_lat; ++i) err.lats.push_back(g.lat(i));
    for (int j = 0; j < g.n_lon; ++j) err.lons.push_back(g.lon(j));
    err.values.assign(std::size_t(g.n_lat) * g.n_lon, 0.0);
    for (std::size_t n = 0; n < fc.size(); ++n) {
        const auto a = ohc(fc[n], mask, opt.ohc_depth, opt.rho, opt.cp);
        const auto b = ohc(tr[n], mask, opt.ohc_depth, opt.rho, opt.cp);
        for (std::size_t c = 0; c < a.size(); ++c) err.values[c] += (a[c] - b[c]) / static_cast<double>(fc.size());
    }
    rep.fields.push_back(std::move(err));

    for (const auto& sec : standard_sections()) {
        SectionMetric mean;
        try {
            mean = section_error(fc[0], tr[0], sec, diag);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::OutOfDomain) continue;  // section outside this grid
            throw;
        }
        for (std::size_t n = 1; n < fc.size(); ++n) {
            const SectionMetric m = section_error(fc[n], tr[n], sec, diag);
            for (std::size_t c = 0; c < mean.values.size(); ++c) mean.values[c] += m.values[c];
        }
        for (double& x : mean.values) x /= static_cast<double>(fc.size());
        rep.sections.push_back(std::move(mean));
    }
    return rep;
}

}  // namespace oceanfc
