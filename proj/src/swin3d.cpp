#include "oceanfc/swin3d.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <thread>

#include "oceanfc/error.hpp"
#include "oceanfc/numeric.hpp"

namespace oceanfc {

using ad::NodeId;
using ad::Tape;
using ad::Tensor;

std::size_t ParamEntry::count() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

const ParamEntry& ParamSet::entry(const std::string& name) const {
    auto it = std::find_if(layout.begin(), layout.end(), [&](const ParamEntry& e) { return e.name == name; });
    if (it == layout.end()) throw Error(ErrorCode::InvalidArgument, "no parameter tensor named '" + name + "'");
    return *it;
}

std::span<const double> ParamSet::view(const std::string& name) const {
    const auto& e = entry(name);
    return {values.data() + e.offset, e.count()};
}

std::span<double> ParamSet::view(const std::string& name) {
    const auto& e = entry(name);
    return {values.data() + e.offset, e.count()};
}

// ---------------------------------------------------------------------------
// Parameter files

namespace {

constexpr char kParamMagic[4] = {'O', 'G', 'P', 'W'};
constexpr std::uint32_t kParamVersion = 1;

void put(std::vector<char>& b, std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) b.push_back(static_cast<char>(v >> (8 * k)));
}

std::uint64_t take(const std::vector<char>& b, std::size_t& pos, int bytes, const std::filesystem::path& path) {
    if (pos + bytes > b.size()) throw Error(ErrorCode::TruncatedPayload, path.string() + ": parameter file truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= std::uint64_t(static_cast<unsigned char>(b[pos + k])) << (8 * k);
    pos += bytes;
    return v;
}

}  // namespace

void write_params(const std::filesystem::path& path, const ParamSet& params) {
    std::vector<char> b(kParamMagic, kParamMagic + 4);
    put(b, kParamVersion, 4);
    put(b, params.values.size(), 8);
    put(b, params.layout.size(), 4);
    for (const auto& e : params.layout) {
        put(b, e.name.size(), 4);
        b.insert(b.end(), e.name.begin(), e.name.end());
        put(b, e.offset, 8);
        put(b, e.shape.size(), 4);
        for (int d : e.shape) put(b, static_cast<std::uint32_t>(d), 4);
    }
    for (double v : params.values) put(b, std::bit_cast<std::uint64_t>(v), 8);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ParamSet read_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (b.size() < 4 || !std::equal(kParamMagic, kParamMagic + 4, b.begin()))
        throw Error(ErrorCode::FormatViolation, path.string() + ": bad parameter magic");
    std::size_t pos = 4;
    if (take(b, pos, 4, path) != kParamVersion)
        throw Error(ErrorCode::FormatViolation, path.string() + ": unsupported parameter version");
    const std::uint64_t count = take(b, pos, 8, path);
    const std::uint64_t entries = take(b, pos, 4, path);
    ParamSet p;
    for (std::uint64_t n = 0; n < entries; ++n) {
        ParamEntry e;
        const std::uint64_t len = take(b, pos, 4, path);
        if (pos + len > b.size()) throw Error(ErrorCode::TruncatedPayload, path.string() + ": truncated name");
        e.name.assign(b.begin() + pos, b.begin() + pos + len);
        pos += len;
        e.offset = take(b, pos, 8, path);
        const std::uint64_t rank = take(b, pos, 4, path);
        for (std::uint64_t r = 0; r < rank; ++r) e.shape.push_back(static_cast<int>(take(b, pos, 4, path)));
        p.layout.push_back(std::move(e));
    }
    if (b.size() - pos != count * 8)
        throw Error(b.size() - pos < count * 8 ? ErrorCode::TruncatedPayload : ErrorCode::FormatViolation,
                    path.string() + ": payload length differs from parameter count");
    p.values.resize(count);
    for (auto& v : p.values) v = std::bit_cast<double>(take(b, pos, 8, path));
    std::size_t expect = 0;
    for (const auto& e : p.layout) {
        if (e.offset != expect) throw Error(ErrorCode::FormatViolation, path.string() + ": layout has gaps");
        expect += e.count();
    }
    if (expect != count) throw Error(ErrorCode::FormatViolation, path.string() + ": layout does not cover payload");
    return p;
}

// ---------------------------------------------------------------------------
// Window partitioning

ad::WindowPlan make_window_plan(const std::array<int, 3>& tokens, const std::array<int, 3>& window,
                                const std::array<int, 3>& shift, const std::array<bool, 3>& periodic) {
    for (int a = 0; a < 3; ++a)
        if (window[a] <= 0 || tokens[a] % window[a] != 0 || shift[a] < 0 || shift[a] >= window[a])
            throw Error(ErrorCode::ConfigIncompatible, "token grid not divisible by the attention window");
    ad::WindowPlan plan;
    plan.tokens = tokens[0] * tokens[1] * tokens[2];
    auto region = [&](int a, int pos) {
        if (shift[a] == 0 || periodic[a]) return 0;
        if (pos < tokens[a] - window[a]) return 0;
        if (pos < tokens[a] - shift[a]) return 1;
        return 2;
    };
    const std::array<int, 3> nwin{tokens[0] / window[0], tokens[1] / window[1], tokens[2] / window[2]};
    for (int bd = 0; bd < nwin[0]; ++bd)
        for (int bh = 0; bh < nwin[1]; ++bh)
            for (int bw = 0; bw < nwin[2]; ++bw) {
                std::vector<int> members, labels;
                for (int a = 0; a < window[0]; ++a)
                    for (int b = 0; b < window[1]; ++b)
                        for (int c = 0; c < window[2]; ++c) {
                            const std::array<int, 3> sp{bd * window[0] + a, bh * window[1] + b, bw * window[2] + c};
                            std::array<int, 3> p{};
                            for (int ax = 0; ax < 3; ++ax) p[ax] = (sp[ax] + shift[ax]) % tokens[ax];
                            members.push_back((p[0] * tokens[1] + p[1]) * tokens[2] + p[2]);
                            labels.push_back((region(0, sp[0]) * 3 + region(1, sp[1])) * 3 + region(2, sp[2]));
                        }
                plan.windows.push_back(std::move(members));
                plan.labels.push_back(std::move(labels));
            }
    return plan;
}

// ---------------------------------------------------------------------------
// Model

namespace {

int token_id(const std::array<int, 3>& n, int d, int h, int w) { return (d * n[1] + h) * n[2] + w; }

struct LayoutBuilder {
    std::vector<ParamEntry> entries;
    std::size_t offset = 0;
    void add(std::string name, int rows, int cols) {
        entries.push_back({std::move(name), offset, {rows, cols}});
        offset += std::size_t(rows) * cols;
    }
    void block(const std::string& p, int c, int ratio) {
        add(p + "norm1.gamma", 1, c);
        add(p + "norm1.beta", 1, c);
        add(p + "attn.qkv.weight", c, 3 * c);
        add(p + "attn.qkv.bias", 1, 3 * c);
        add(p + "attn.proj.weight", c, c);
        add(p + "attn.proj.bias", 1, c);
        add(p + "norm2.gamma", 1, c);
        add(p + "norm2.beta", 1, c);
        add(p + "mlp.fc1.weight", c, ratio * c);
        add(p + "mlp.fc1.bias", 1, ratio * c);
        add(p + "mlp.fc2.weight", ratio * c, c);
        add(p + "mlp.fc2.bias", 1, c);
    }
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Swin3dModel::Swin3dModel(const Swin3dConfig& cfg, const Grid3DSpec& grid) : cfg_(cfg), grid_(grid) {
    grid_.validate();
    auto incompatible = [](const std::string& msg) { throw Error(ErrorCode::ConfigIncompatible, msg); };
    if (cfg.embed_dim <= 0 || cfg.heads <= 0 || cfg.embed_dim % cfg.heads != 0)
        incompatible("embed_dim must be a positive multiple of heads");
    if (cfg.mlp_ratio <= 0) incompatible("mlp_ratio must be positive");
    if (cfg.bottleneck_depth < 0) incompatible("bottleneck depth must be non-negative");
    for (int a = 0; a < 3; ++a)
        if (cfg.patch[a] <= 0 || cfg.window[a] <= 0) incompatible("patch and window sizes must be positive");
    for (int d : cfg.encoder_depths)
        if (d < 0) incompatible("encoder depths must be non-negative");

    const int levels = static_cast<int>(cfg.encoder_depths.size());
    const int factor = 1 << levels;
    const std::array<int, 3> cells{grid_.n_depth, grid_.n_lat, grid_.n_lon};
    std::array<int, 3> tokens0{};
    for (int a = 0; a < 3; ++a) {
        const int unit = cfg.patch[a] * factor;
        padded_[a] = (cells[a] + unit - 1) / unit * unit;
        tokens0[a] = padded_[a] / cfg.patch[a];
    }
    const bool lon_periodic = cfg.periodic_lon && grid_.periodic_lon() && padded_[2] == grid_.n_lon;
    const std::array<bool, 3> periodic{false, false, lon_periodic};

    for (int s = 0; s <= levels; ++s) {
        StageGeometry g;
        for (int a = 0; a < 3; ++a) {
            g.tokens[a] = tokens0[a] >> s;
            g.window[a] = std::min(cfg.window[a], g.tokens[a]);
            if (g.tokens[a] % g.window[a] != 0)
                incompatible("stage " + std::to_string(s) + " token grid is not divisible by the window");
            g.shift[a] = cfg.shift && g.window[a] < g.tokens[a] ? g.window[a] / 2 : 0;
        }
        g.channels = cfg.embed_dim << s;
        g.plain = std::make_shared<const ad::WindowPlan>(make_window_plan(g.tokens, g.window, {0, 0, 0}, periodic));
        g.shifted = std::make_shared<const ad::WindowPlan>(make_window_plan(g.tokens, g.window, g.shift, periodic));
        stages_.push_back(std::move(g));
    }

    const int V = grid_.n_var;
    const int P = cfg.patch[0] * cfg.patch[1] * cfg.patch[2];
    const int C = cfg.embed_dim;
    const int n0 = tokens0[0] * tokens0[1] * tokens0[2];
    LayoutBuilder lb;
    lb.add("patch_embed.weight", 2 * V * P, C);
    lb.add("patch_embed.bias", 1, C);
    lb.add("forcing_embed.weight", 2 * kForcingVars * cfg.patch[1] * cfg.patch[2], C);
    lb.add("forcing_embed.bias", 1, C);
    if (cfg.pos_embed) lb.add("pos_embed", n0, C);
    for (int s = 0; s < levels; ++s) {
        const int cs = stages_[s].channels;
        for (int b = 0; b < cfg.encoder_depths[s]; ++b)
            lb.block("enc" + std::to_string(s) + ".block" + std::to_string(b) + ".", cs, cfg.mlp_ratio);
        lb.add("enc" + std::to_string(s) + ".merge.norm.gamma", 1, 8 * cs);
        lb.add("enc" + std::to_string(s) + ".merge.norm.beta", 1, 8 * cs);
        lb.add("enc" + std::to_string(s) + ".merge.weight", 8 * cs, 2 * cs);
    }
    for (int b = 0; b < cfg.bottleneck_depth; ++b)
        lb.block("bottleneck.block" + std::to_string(b) + ".", stages_[levels].channels, cfg.mlp_ratio);
    for (int s = levels - 1; s >= 0; --s) {
        const int cs = stages_[s].channels;
        lb.add("dec" + std::to_string(s) + ".expand.weight", stages_[s + 1].channels, 8 * cs);
        for (int b = 0; b < cfg.encoder_depths[s]; ++b)
            lb.block("dec" + std::to_string(s) + ".block" + std::to_string(b) + ".", cs, cfg.mlp_ratio);
    }
    lb.add("head.norm.gamma", 1, C);
    lb.add("head.norm.beta", 1, C);
    lb.add("head.weight", C, V * P);
    lb.add("head.bias", 1, V * P);
    layout_ = std::move(lb.entries);
    param_count_ = lb.offset;

    // Forcing tokens (lat x lon) broadcast to every depth token.
    {
        const auto& n = tokens0;
        auto idx = std::make_shared<std::vector<int>>(std::size_t(n0) * C);
        for (int d = 0; d < n[0]; ++d)
            for (int h = 0; h < n[1]; ++h)
                for (int w = 0; w < n[2]; ++w)
                    for (int c = 0; c < C; ++c)
                        (*idx)[std::size_t(token_id(n, d, h, w)) * C + c] = (h * n[2] + w) * C + c;
        forcing_broadcast_ = idx;
    }
    for (int s = 0; s < levels; ++s) {
        const auto& fine = stages_[s].tokens;
        const auto& coarse = stages_[s + 1].tokens;
        const int cs = stages_[s].channels;
        const int nc = coarse[0] * coarse[1] * coarse[2];
        auto merge = std::make_shared<std::vector<int>>(std::size_t(nc) * 8 * cs);
        auto expand = std::make_shared<std::vector<int>>(std::size_t(nc) * 8 * cs);
        for (int d = 0; d < coarse[0]; ++d)
            for (int h = 0; h < coarse[1]; ++h)
                for (int w = 0; w < coarse[2]; ++w) {
                    const int ct = token_id(coarse, d, h, w);
                    for (int q = 0; q < 8; ++q) {
                        const int dd = q >> 2, hh = (q >> 1) & 1, ww = q & 1;
                        const int ft = token_id(fine, 2 * d + dd, 2 * h + hh, 2 * w + ww);
                        for (int c = 0; c < cs; ++c) {
                            (*merge)[(std::size_t(ct) * 8 + q) * cs + c] = ft * cs + c;
                            (*expand)[std::size_t(ft) * cs + c] = (ct * 8 + q) * cs + c;
                        }
                    }
                }
        merge_index_.push_back(merge);
        expand_index_.push_back(expand);
    }
    {
        const auto& p = cfg.patch;
        const auto& n = tokens0;
        const int width = V * P;
        auto idx = std::make_shared<std::vector<int>>(grid_.size());
        std::size_t out = 0;
        for (int v = 0; v < V; ++v)
            for (int k = 0; k < grid_.n_depth; ++k)
                for (int i = 0; i < grid_.n_lat; ++i)
                    for (int j = 0; j < grid_.n_lon; ++j) {
                        const int t = token_id(n, k / p[0], i / p[1], j / p[2]);
                        const int col = ((v * p[0] + k % p[0]) * p[1] + i % p[1]) * p[2] + j % p[2];
                        (*idx)[out++] = t * width + col;
                    }
        decode_index_ = idx;
    }
}

ParamSet Swin3dModel::zero_params() const {
    ParamSet p;
    p.layout = layout_;
    p.values.assign(param_count_, 0.0);
    return p;
}

ParamSet Swin3dModel::init_params() const {
    ParamSet p = zero_params();
    SplitMix64 rng(cfg_.seed);
    for (const auto& e : layout_) {
        double* v = p.values.data() + e.offset;
        const std::size_t n = e.count();
        if (ends_with(e.name, ".weight")) {
            const double limit = std::sqrt(6.0 / (e.shape[0] + e.shape[1]));
            for (std::size_t k = 0; k < n; ++k) v[k] = rng.uniform(-limit, limit);
        } else if (ends_with(e.name, ".gamma")) {
            std::fill(v, v + n, 1.0);
        } else if (e.name == "pos_embed") {
            for (std::size_t k = 0; k < n; ++k) v[k] = rng.uniform(-0.02, 0.02);
        }
    }
    return p;
}

NodeId Swin3dModel::build(Tape& tape, const ParamSet& params, const OceanState& x_prev, const OceanState& x_t,
                          const ForcingState& f_prev, const ForcingState& f_t, const NormStats& stats) const {
    if (params.values.size() != param_count_)
        throw Error(ErrorCode::ConfigIncompatible, "parameter count " + std::to_string(params.values.size()) +
                                                       " differs from the model's " + std::to_string(param_count_));
    if (x_prev.spec != grid_ || x_t.spec != grid_)
        throw Error(ErrorCode::SpecMismatch, "ocean inputs are not on the model grid");
    const Grid3DSpec fgrid = forcing_spec_for(grid_);
    if (f_prev.spec != fgrid || f_t.spec != fgrid)
        throw Error(ErrorCode::SpecMismatch, "forcing inputs are not on the model grid");
    if (stats.n_var != grid_.n_var || stats.n_depth != grid_.n_depth)
        throw Error(ErrorCode::SpecMismatch, "normalisation stats do not match the grid");

    const int V = grid_.n_var;
    const auto& p = cfg_.patch;
    const auto& n0 = stages_[0].tokens;
    const int ntok = n0[0] * n0[1] * n0[2];
    const int P = p[0] * p[1] * p[2];
    const int C = cfg_.embed_dim;
    const int levels = static_cast<int>(cfg_.encoder_depths.size());

    auto param = [&](const std::string& name) {
        const auto& e = params.entry(name);
        return tape.parameter(params.values, e.offset, e.shape[0], e.shape[1]);
    };
    auto clampi = [](int x, int hi) { return std::min(x, hi - 1); };

    // z-scored ocean pair, land -> 0, padded by edge replication.
    Tensor feat(ntok, 2 * V * P);
    const OceanState* pair[2] = {&x_prev, &x_t};
    for (int d = 0; d < n0[0]; ++d)
        for (int h = 0; h < n0[1]; ++h)
            for (int w = 0; w < n0[2]; ++w) {
                double* row = &feat.v[std::size_t(token_id(n0, d, h, w)) * feat.cols];
                int col = 0;
                for (int tl = 0; tl < 2; ++tl)
                    for (int v = 0; v < V; ++v)
                        for (int dd = 0; dd < p[0]; ++dd) {
                            const int k = clampi(d * p[0] + dd, grid_.n_depth);
                            const double mu = stats.mean_at(v, k), sd = stats.std_at(v, k);
                            for (int hh = 0; hh < p[1]; ++hh)
                                for (int ww = 0; ww < p[2]; ++ww) {
                                    const int i = clampi(h * p[1] + hh, grid_.n_lat);
                                    const int j = clampi(w * p[2] + ww, grid_.n_lon);
                                    const double x = pair[tl]->at(v, k, i, j);
                                    row[col++] = std::isnan(x) ? 0.0 : (x - mu) / sd;
                                }
                        }
            }
    Tensor ffeat(n0[1] * n0[2], 2 * kForcingVars * p[1] * p[2]);
    const ForcingState* fpair[2] = {&f_prev, &f_t};
    for (int h = 0; h < n0[1]; ++h)
        for (int w = 0; w < n0[2]; ++w) {
            double* row = &ffeat.v[std::size_t(h * n0[2] + w) * ffeat.cols];
            int col = 0;
            for (int tl = 0; tl < 2; ++tl)
                for (int c = 0; c < kForcingVars; ++c)
                    for (int hh = 0; hh < p[1]; ++hh)
                        for (int ww = 0; ww < p[2]; ++ww) {
                            const int i = clampi(h * p[1] + hh, grid_.n_lat);
                            const int j = clampi(w * p[2] + ww, grid_.n_lon);
                            row[col++] = (fpair[tl]->at(c, i, j) - stats.forcing_mean[c]) / stats.forcing_std[c];
                        }
        }

    NodeId x = tape.add_row(tape.matmul(tape.constant(std::move(feat)), param("patch_embed.weight")),
                            param("patch_embed.bias"));
    NodeId f = tape.add_row(tape.matmul(tape.constant(std::move(ffeat)), param("forcing_embed.weight")),
                            param("forcing_embed.bias"));
    x = tape.add(x, tape.gather(f, ntok, C, forcing_broadcast_));
    if (cfg_.pos_embed) x = tape.add(x, param("pos_embed"));

    auto block = [&](NodeId in, const std::string& pre, const StageGeometry& g, bool shifted) {
        NodeId h = tape.layer_norm(in, param(pre + "norm1.gamma"), param(pre + "norm1.beta"));
        NodeId qkv = tape.add_row(tape.matmul(h, param(pre + "attn.qkv.weight")), param(pre + "attn.qkv.bias"));
        NodeId att = tape.window_attention(qkv, shifted ? g.shifted : g.plain, cfg_.heads);
        NodeId proj = tape.add_row(tape.matmul(att, param(pre + "attn.proj.weight")), param(pre + "attn.proj.bias"));
        NodeId y = tape.add(in, proj);
        NodeId h2 = tape.layer_norm(y, param(pre + "norm2.gamma"), param(pre + "norm2.beta"));
        NodeId m = tape.gelu(tape.add_row(tape.matmul(h2, param(pre + "mlp.fc1.weight")), param(pre + "mlp.fc1.bias")));
        NodeId m2 = tape.add_row(tape.matmul(m, param(pre + "mlp.fc2.weight")), param(pre + "mlp.fc2.bias"));
        return tape.add(y, m2);
    };
    auto tokens_of = [](const StageGeometry& g) { return g.tokens[0] * g.tokens[1] * g.tokens[2]; };

    std::vector<NodeId> skips;
    for (int s = 0; s < levels; ++s) {
        const auto& g = stages_[s];
        const std::string pre = "enc" + std::to_string(s);
        for (int b = 0; b < cfg_.encoder_depths[s]; ++b)
            x = block(x, pre + ".block" + std::to_string(b) + ".", g, b % 2 == 1);
        skips.push_back(x);
        NodeId cat = tape.gather(x, tokens_of(stages_[s + 1]), 8 * g.channels, merge_index_[s]);
        cat = tape.layer_norm(cat, param(pre + ".merge.norm.gamma"), param(pre + ".merge.norm.beta"));
        x = tape.matmul(cat, param(pre + ".merge.weight"));
    }
    for (int b = 0; b < cfg_.bottleneck_depth; ++b)
        x = block(x, "bottleneck.block" + std::to_string(b) + ".", stages_[levels], b % 2 == 1);
    for (int s = levels - 1; s >= 0; --s) {
        const auto& g = stages_[s];
        const std::string pre = "dec" + std::to_string(s);
        NodeId up = tape.matmul(x, param(pre + ".expand.weight"));
        x = tape.add(tape.gather(up, tokens_of(g), g.channels, expand_index_[s]), skips[s]);
        for (int b = 0; b < cfg_.encoder_depths[s]; ++b)
            x = block(x, pre + ".block" + std::to_string(b) + ".", g, b % 2 == 1);
    }
    x = tape.layer_norm(x, param("head.norm.gamma"), param("head.norm.beta"));
    NodeId head = tape.add_row(tape.matmul(x, param("head.weight")), param("head.bias"));
    NodeId cells = tape.gather(head, 1, static_cast<int>(grid_.size()), decode_index_);

    // Increments are differences, so only the scale is undone.
    std::vector<double> scale(grid_.size());
    std::size_t n = 0;
    for (int v = 0; v < V; ++v)
        for (int k = 0; k < grid_.n_depth; ++k) {
            const double sd = stats.std_at(v, k);
            for (std::size_t c = 0; c < std::size_t(grid_.n_lat) * grid_.n_lon; ++c) scale[n++] = sd;
        }
    return tape.mul_const(cells, std::move(scale));
}

StateIncrement Swin3dModel::forward(const ParamSet& params, const OceanState& x_prev, const OceanState& x_t,
                                    const ForcingState& f_prev, const ForcingState& f_t, const NormStats& stats,
                                    int lead) const {
    Tape tape;
    const NodeId out = build(tape, params, x_prev, x_t, f_prev, f_t, stats);
    if (!tape.all_finite()) throw Error(ErrorCode::NonFiniteActivation, "non-finite activation in forward pass");
    StateIncrement d;
    d.spec = grid_;
    d.time = x_t.time;
    d.lead = lead;
    d.data = tape.value(out).v;
    const double nan = std::nan("");
    for (std::size_t c = 0; c < d.data.size(); ++c)
        if (std::isnan(x_t.data[c])) d.data[c] = nan;
    return d;
}

double Swin3dModel::sample_loss_and_grad(const ParamSet& params, const TrainingSample& s, const LandSeaMask& mask,
                                         const LatitudeWeights& w, const NormStats& stats,
                                         std::span<double> grad) const {
    if (!s.x_prev || !s.x_t || !s.f_prev || !s.f_t || !s.truth)
        throw Error(ErrorCode::InvalidArgument, "training sample is incomplete");
    if (s.truth->spec != grid_) throw Error(ErrorCode::SpecMismatch, "target increment is not on the model grid");
    if (!mask.matches(grid_)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from the model grid");
    if (static_cast<int>(w.w.size()) != grid_.n_lat) throw Error(ErrorCode::SpecMismatch, "weights length differs");

    auto weight = std::make_shared<std::vector<double>>(grid_.size(), 0.0);
    double den = 0.0;
    for (int v = 0; v < grid_.n_var; ++v)
        for (int k = 0; k < grid_.n_depth; ++k)
            for (int i = 0; i < grid_.n_lat; ++i)
                for (int j = 0; j < grid_.n_lon; ++j)
                    if (mask.ocean(k, i, j)) {
                        (*weight)[s.truth->index(v, k, i, j)] = w.w[i];
                        den += w.w[i];
                    }
    if (!(den > 0)) throw Error(ErrorCode::EmptyMask, "loss denominator is zero");
    for (double& x : *weight) x /= den;
    auto target = std::make_shared<const std::vector<double>>(s.truth->data);

    Tape tape;
    const NodeId out = build(tape, params, *s.x_prev, *s.x_t, *s.f_prev, *s.f_t, stats);
    const NodeId loss = tape.weighted_sse(out, target, weight);
    if (!tape.all_finite()) throw Error(ErrorCode::NonFiniteActivation, "non-finite activation in forward pass");
    tape.backward(loss, grad);
    return tape.value(loss).v[0];
}

double Swin3dModel::loss_and_grad(const ParamSet& params, std::span<const TrainingSample> batch,
                                  const LandSeaMask& mask, const LatitudeWeights& w, const NormStats& stats,
                                  std::vector<double>& grad, int threads) const {
    if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty training batch");
    const std::size_t B = batch.size();
    std::vector<std::vector<double>> per(B, std::vector<double>(param_count_, 0.0));
    std::vector<double> losses(B, 0.0);

    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, B);
    if (workers == 1) {
        for (std::size_t b = 0; b < B; ++b)
            losses[b] = sample_loss_and_grad(params, batch[b], mask, w, stats, per[b]);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t b = t; b < B; b += workers)
                        losses[b] = sample_loss_and_grad(params, batch[b], mask, w, stats, per[b]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Fixed sample-order reduction keeps the result independent of scheduling.
    grad.assign(param_count_, 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        loss += losses[b];
        for (std::size_t k = 0; k < param_count_; ++k) grad[k] += per[b][k];
    }
    const double inv = 1.0 / static_cast<double>(B);
    for (double& g : grad) {
        g *= inv;
        if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient component");
    }
    return loss * inv;
}

StateIncrement swin3d_forward(const ParamSet& params, const Swin3dConfig& cfg, const OceanState& x_prev,
                              const OceanState& x_t, const ForcingState& f_prev, const ForcingState& f_t,
                              const NormStats& stats, int lead) {
    return Swin3dModel(cfg, x_t.spec).forward(params, x_prev, x_t, f_prev, f_t, stats, lead);
}

double loss_and_grad(const ParamSet& params, const Swin3dConfig& cfg, std::span<const TrainingSample> batch,
                     const LandSeaMask& mask, const LatitudeWeights& w, const NormStats& stats,
                     std::vector<double>& grad) {
    if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty training batch");
    return Swin3dModel(cfg, batch.front().x_t->spec).loss_and_grad(params, batch, mask, w, stats, grad);
}

}  // namespace oceanfc
