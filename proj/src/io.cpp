#include "oceanfc/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oceanfc/error.hpp"
#include "oceanfc/numeric.hpp"

namespace oceanfc {

namespace {

constexpr char kMagic[4] = {'O', 'G', 'F', '1'};

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void u64(std::uint64_t v) {
        for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    ByteReader(const std::vector<char>& buf, const fs::path& path) : buf_(buf), path_(path) {}

    void need(std::size_t n, ErrorCode code) const {
        if (pos_ + n > buf_.size())
            throw Error(code, path_.string() + ": file ends at byte " + std::to_string(buf_.size()));
    }
    std::uint8_t u8(ErrorCode code = ErrorCode::FormatViolation) {
        need(1, code);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32(ErrorCode code = ErrorCode::FormatViolation) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= std::uint32_t(u8(code)) << (8 * b);
        return v;
    }
    std::uint64_t u64(ErrorCode code = ErrorCode::FormatViolation) {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= std::uint64_t(u8(code)) << (8 * b);
        return v;
    }
    float f32(ErrorCode code = ErrorCode::FormatViolation) { return std::bit_cast<float>(u32(code)); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    const std::vector<char>& buf_;
    const fs::path& path_;
    std::size_t pos_ = 0;
};

void write_header(ByteWriter& w, OgfKind kind, const Grid3DSpec& spec, std::uint32_t n_var, std::int64_t time) {
    w.raw(kMagic, 4);
    w.u32(kOgfVersion);
    w.u8(static_cast<std::uint8_t>(kind));
    w.u8(0);
    w.u8(0);
    w.u8(0);
    w.u32(n_var);
    w.u32(static_cast<std::uint32_t>(spec.n_depth));
    w.u32(static_cast<std::uint32_t>(spec.n_lat));
    w.u32(static_cast<std::uint32_t>(spec.n_lon));
    w.f64(spec.lat0);
    w.f64(spec.d_lat);
    w.f64(spec.lon0);
    w.f64(spec.d_lon);
    for (double z : spec.depths) w.f32(static_cast<float>(z));
    w.i64(time);
}

void flush(const fs::path& path, const ByteWriter& w) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    const auto& b = w.bytes();
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
    return buf;
}

void write_field(const fs::path& path, const GriddedField& f, OgfKind kind) {
    if (f.data.size() != f.spec.size())
        throw Error(ErrorCode::InvalidArgument, "field payload length differs from its grid");
    ByteWriter w;
    write_header(w, kind, f.spec, static_cast<std::uint32_t>(f.spec.n_var), f.time);
    for (double v : f.data) w.f32(static_cast<float>(v));
    flush(path, w);
}

}  // namespace

std::size_t ogf_header_size(int n_depth) {
    return 4 + 4 + 1 + 3 + 4 * 4 + 4 * 8 + 4 * std::size_t(n_depth) + 8;
}

Grid3DSpec canonical_spec(Grid3DSpec spec) {
    for (double& z : spec.depths) z = static_cast<double>(static_cast<float>(z));
    return spec;
}

void write_ogf(const fs::path& path, const OceanState& state, OgfKind kind) {
    if (kind != OgfKind::Ocean && kind != OgfKind::Climatology)
        throw Error(ErrorCode::InvalidArgument, "ocean states are stored as ocean or climatology files");
    write_field(path, state, kind);
}

void write_ogf(const fs::path& path, const ForcingState& forcing) {
    if (forcing.spec.n_depth != 1) throw Error(ErrorCode::InvalidArgument, "forcing must have a single level");
    write_field(path, forcing, OgfKind::Forcing);
}

void write_ogf(const fs::path& path, const LandSeaMask& mask, const Grid3DSpec& spec) {
    if (!mask.matches(spec)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from its grid");
    ByteWriter w;
    write_header(w, OgfKind::Mask, spec, 1, 0);
    for (auto v : mask.valid) w.u8(v ? 1 : 0);
    flush(path, w);
}

OgfFile read_ogf(const fs::path& path) {
    const std::vector<char> buf = slurp(path);
    ByteReader r(buf, path);
    r.need(4, ErrorCode::FormatViolation);
    if (!std::equal(kMagic, kMagic + 4, buf.begin()))
        throw Error(ErrorCode::FormatViolation, path.string() + ": bad magic");
    for (int b = 0; b < 4; ++b) r.u8();
    const std::uint32_t version = r.u32();
    if (version != kOgfVersion)
        throw Error(ErrorCode::FormatViolation, path.string() + ": unsupported version " + std::to_string(version));
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 4) throw Error(ErrorCode::FormatViolation, path.string() + ": unknown kind");
    for (int b = 0; b < 3; ++b) r.u8();

    OgfFile f;
    f.kind = static_cast<OgfKind>(kind);
    const std::uint32_t nv = r.u32(), nd = r.u32(), nh = r.u32(), nw = r.u32();
    constexpr std::uint32_t kMaxDim = 1u << 20;
    if (nv == 0 || nd == 0 || nh == 0 || nw == 0 || nv > kMaxDim || nd > kMaxDim || nh > kMaxDim || nw > kMaxDim)
        throw Error(ErrorCode::FormatViolation, path.string() + ": bad dimensions");
    if (f.kind == OgfKind::Mask && nv != 1)
        throw Error(ErrorCode::FormatViolation, path.string() + ": mask files carry one variable");
    if (f.kind == OgfKind::Forcing && nd != 1)
        throw Error(ErrorCode::FormatViolation, path.string() + ": forcing files carry one level");
    f.spec.n_var = static_cast<int>(nv);
    f.spec.n_depth = static_cast<int>(nd);
    f.spec.n_lat = static_cast<int>(nh);
    f.spec.n_lon = static_cast<int>(nw);
    f.spec.lat0 = r.f64();
    f.spec.d_lat = r.f64();
    f.spec.lon0 = r.f64();
    f.spec.d_lon = r.f64();
    f.spec.depths.resize(nd);
    for (auto& z : f.spec.depths) z = r.f32();
    f.time = static_cast<std::int64_t>(r.u64());

    const std::size_t count = f.spec.size();
    const std::size_t width = f.kind == OgfKind::Mask ? 1 : 4;
    if (r.remaining() < count * width)
        throw Error(ErrorCode::TruncatedPayload, path.string() + ": payload holds " + std::to_string(r.remaining()) +
                                                     " bytes, expected " + std::to_string(count * width));
    if (r.remaining() > count * width)
        throw Error(ErrorCode::FormatViolation, path.string() + ": trailing bytes after payload");
    f.values.resize(count);
    if (f.kind == OgfKind::Mask) {
        for (auto& v : f.values) {
            const std::uint8_t b = r.u8();
            if (b > 1) throw Error(ErrorCode::FormatViolation, path.string() + ": mask byte not 0/1");
            v = b;
        }
    } else {
        for (auto& v : f.values) v = r.f32();
    }
    return f;
}

OceanState read_ocean(const fs::path& path) {
    OgfFile f = read_ogf(path);
    if (f.kind != OgfKind::Ocean && f.kind != OgfKind::Climatology)
        throw Error(ErrorCode::FormatViolation, path.string() + ": not an ocean file");
    OceanState s;
    s.spec = std::move(f.spec);
    s.time = f.time;
    s.data = std::move(f.values);
    return s;
}

ForcingState read_forcing(const fs::path& path) {
    OgfFile f = read_ogf(path);
    if (f.kind != OgfKind::Forcing) throw Error(ErrorCode::FormatViolation, path.string() + ": not a forcing file");
    ForcingState s;
    s.spec = std::move(f.spec);
    s.time = f.time;
    s.data = std::move(f.values);
    return s;
}

LandSeaMask read_mask(const fs::path& path) {
    OgfFile f = read_ogf(path);
    if (f.kind != OgfKind::Mask) throw Error(ErrorCode::FormatViolation, path.string() + ": not a mask file");
    LandSeaMask m;
    m.n_depth = f.spec.n_depth;
    m.n_lat = f.spec.n_lat;
    m.n_lon = f.spec.n_lon;
    m.valid.resize(f.values.size());
    std::transform(f.values.begin(), f.values.end(), m.valid.begin(),
                   [](double v) { return static_cast<std::uint8_t>(v != 0.0); });
    return m;
}

// ---------------------------------------------------------------------------

const ManifestEntry* DatasetManifest::find(std::int64_t day) const {
    if (entries.empty()) return nullptr;
    const std::int64_t off = day - entries.front().day;
    if (off >= 0 && off < static_cast<std::int64_t>(entries.size()) && entries[off].day == day) return &entries[off];
    auto it = std::find_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.day == day; });
    return it == entries.end() ? nullptr : &*it;
}

void DatasetManifest::validate() const {
    for (std::size_t n = 1; n < entries.size(); ++n)
        if (entries[n].day != entries[n - 1].day + 1)
            throw Error(ErrorCode::InvalidArgument,
                        "manifest days must be contiguous; day " + std::to_string(entries[n].day) + " follows " +
                            std::to_string(entries[n - 1].day));
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    if (manifest.train_end_day) out << "# train_end_day=" << *manifest.train_end_day << '\n';
    if (manifest.valid_end_day) out << "# valid_end_day=" << *manifest.valid_end_day << '\n';
    if (!manifest.mask.empty()) out << "# mask=" << manifest.mask.generic_string() << '\n';
    for (const auto& e : manifest.entries)
        out << e.day << '\t' << e.ocean.generic_string() << '\t' << e.forcing.generic_string() << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path q(p);
        return q.is_absolute() || base.empty() ? q : base / q;
    };
    DatasetManifest m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(' '));
            const std::string value = line.substr(eq + 1);
            if (key == "train_end_day") m.train_end_day = std::stoll(value);
            else if (key == "valid_end_day") m.valid_end_day = std::stoll(value);
            else if (key == "mask") m.mask = resolve(value);
            continue;
        }
        std::istringstream ls(line);
        std::string day, ocean, forcing;
        if (!std::getline(ls, day, '\t') || !std::getline(ls, ocean, '\t') || !std::getline(ls, forcing))
            throw Error(ErrorCode::FormatViolation,
                        path.string() + ":" + std::to_string(line_no) + ": expected day<TAB>ocean<TAB>forcing");
        ManifestEntry e;
        auto [ptr, ec] = std::from_chars(day.data(), day.data() + day.size(), e.day);
        if (ec != std::errc{} || ptr != day.data() + day.size())
            throw Error(ErrorCode::FormatViolation, path.string() + ":" + std::to_string(line_no) + ": bad day index");
        e.ocean = resolve(ocean);
        e.forcing = resolve(forcing);
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

DatasetSplits split_dataset(const DatasetManifest& manifest, std::int64_t train_end_day, std::int64_t valid_end_day) {
    if (manifest.empty()) throw Error(ErrorCode::EmptyManifest, "cannot split an empty manifest");
    const std::int64_t first = manifest.entries.front().day;
    const std::int64_t last = manifest.entries.back().day;
    if (!(train_end_day < valid_end_day) || train_end_day < first || valid_end_day > last)
        throw Error(ErrorCode::BadBoundary, "split bounds (" + std::to_string(train_end_day) + ", " +
                                                std::to_string(valid_end_day) + ") invalid for days " +
                                                std::to_string(first) + ".." + std::to_string(last));
    DatasetSplits s;
    for (DatasetManifest* part : {&s.train, &s.valid, &s.test}) {
        part->train_end_day = train_end_day;
        part->valid_end_day = valid_end_day;
        part->mask = manifest.mask;
    }
    for (const auto& e : manifest.entries) {
        if (e.day <= train_end_day) s.train.entries.push_back(e);
        else if (e.day <= valid_end_day) s.valid.entries.push_back(e);
        else s.test.entries.push_back(e);
    }
    return s;
}

// ---------------------------------------------------------------------------

NormStats compute_norm_stats(std::span<const OceanState> states, std::span<const ForcingState> forcings,
                             const LandSeaMask& mask) {
    if (states.empty()) throw Error(ErrorCode::EmptyManifest, "normalisation needs at least one training state");
    const Grid3DSpec& spec = states.front().spec;
    if (!mask.matches(spec)) throw Error(ErrorCode::SpecMismatch, "mask shape differs from training states");
    for (const auto& s : states)
        if (s.spec != spec) throw Error(ErrorCode::SpecMismatch, "training states disagree on their grid");

    NormStats st;
    st.n_var = spec.n_var;
    st.n_depth = spec.n_depth;
    st.mean.assign(std::size_t(spec.n_var) * spec.n_depth, 0.0);
    st.std.assign(st.mean.size(), 1.0);

    auto finish = [&](const std::string& label, double mean, double var, std::size_t n, double& out_mean,
                      double& out_std) {
        out_mean = mean;
        if (n < 2 || !(var > 0.0)) {
            out_std = 1.0;
            st.degenerate.push_back(label);
        } else {
            out_std = std::sqrt(var);
        }
    };

    for (int v = 0; v < spec.n_var; ++v) {
        for (int k = 0; k < spec.n_depth; ++k) {
            KahanSum sum;
            std::size_t n = 0;
            for (const auto& s : states)
                for (int i = 0; i < spec.n_lat; ++i)
                    for (int j = 0; j < spec.n_lon; ++j)
                        if (mask.ocean(k, i, j)) {
                            sum.add(s.at(v, k, i, j));
                            ++n;
                        }
            const double mean = n ? sum.value() / double(n) : 0.0;
            KahanSum sq;
            for (const auto& s : states)
                for (int i = 0; i < spec.n_lat; ++i)
                    for (int j = 0; j < spec.n_lon; ++j)
                        if (mask.ocean(k, i, j)) {
                            const double d = s.at(v, k, i, j) - mean;
                            sq.add(d * d);
                        }
            const double var = n ? sq.value() / double(n) : 0.0;
            std::string label = (v < kOceanVars ? std::string(kOceanVarNames[v]) : "var" + std::to_string(v)) +
                                "@" + std::to_string(k);
            finish(label, mean, var, n, st.mean[std::size_t(v) * spec.n_depth + k],
                   st.std[std::size_t(v) * spec.n_depth + k]);
        }
    }

    st.forcing_mean.assign(kForcingVars, 0.0);
    st.forcing_std.assign(kForcingVars, 1.0);
    if (!forcings.empty()) {
        const auto& fs0 = forcings.front().spec;
        for (int c = 0; c < kForcingVars; ++c) {
            KahanSum sum;
            std::size_t n = 0;
            for (const auto& f : forcings)
                for (int i = 0; i < fs0.n_lat; ++i)
                    for (int j = 0; j < fs0.n_lon; ++j) {
                        sum.add(f.at(c, i, j));
                        ++n;
                    }
            const double mean = sum.value() / double(n);
            KahanSum sq;
            for (const auto& f : forcings)
                for (int i = 0; i < fs0.n_lat; ++i)
                    for (int j = 0; j < fs0.n_lon; ++j) {
                        const double d = f.at(c, i, j) - mean;
                        sq.add(d * d);
                    }
            finish(std::string(kForcingVarNames[c]), mean, sq.value() / double(n), n, st.forcing_mean[c],
                   st.forcing_std[c]);
        }
    }
    return st;
}

NormStats compute_norm_stats(const DatasetManifest& train, const LandSeaMask& mask) {
    if (train.empty()) throw Error(ErrorCode::EmptyManifest, "training split is empty");
    std::vector<OceanState> states;
    std::vector<ForcingState> forcings;
    states.reserve(train.size());
    forcings.reserve(train.size());
    for (const auto& e : train.entries) {
        states.push_back(read_ocean(e.ocean));
        forcings.push_back(read_forcing(e.forcing));
    }
    return compute_norm_stats(states, forcings, mask);
}

void write_norm_stats(const fs::path& path, const NormStats& stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << "kind,variable,depth_index,mean,std\n";
    for (int v = 0; v < stats.n_var; ++v)
        for (int k = 0; k < stats.n_depth; ++k)
            out << "ocean," << v << ',' << k << ',' << format_double(stats.mean_at(v, k)) << ','
                << format_double(stats.std_at(v, k)) << '\n';
    for (std::size_t c = 0; c < stats.forcing_mean.size(); ++c)
        out << "forcing," << c << ",0," << format_double(stats.forcing_mean[c]) << ','
            << format_double(stats.forcing_std[c]) << '\n';
    for (const auto& d : stats.degenerate) out << "# degenerate " << d << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

NormStats read_norm_stats(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    struct Row {
        bool ocean;
        int v, k;
        double mean, std;
    };
    std::vector<Row> rows;
    NormStats st;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# degenerate ", 0) == 0) {
            st.degenerate.push_back(line.substr(13));
            continue;
        }
        std::istringstream ls(line);
        std::string kind, v, k, mean, sd;
        if (!std::getline(ls, kind, ',') || !std::getline(ls, v, ',') || !std::getline(ls, k, ',') ||
            !std::getline(ls, mean, ',') || !std::getline(ls, sd))
            throw Error(ErrorCode::FormatViolation, path.string() + ": malformed stats row");
        rows.push_back({kind == "ocean", std::stoi(v), std::stoi(k), parse_double(mean), parse_double(sd)});
    }
    int nv = 0, nd = 0;
    for (const auto& r : rows)
        if (r.ocean) {
            nv = std::max(nv, r.v + 1);
            nd = std::max(nd, r.k + 1);
        }
    st.n_var = nv;
    st.n_depth = nd;
    st.mean.assign(std::size_t(nv) * nd, 0.0);
    st.std.assign(st.mean.size(), 1.0);
    st.forcing_mean.assign(kForcingVars, 0.0);
    st.forcing_std.assign(kForcingVars, 1.0);
    for (const auto& r : rows) {
        if (r.ocean) {
            st.mean[std::size_t(r.v) * nd + r.k] = r.mean;
            st.std[std::size_t(r.v) * nd + r.k] = r.std;
        } else if (r.v >= 0 && r.v < kForcingVars) {
            st.forcing_mean[r.v] = r.mean;
            st.forcing_std[r.v] = r.std;
        }
    }
    return st;
}

}  // namespace oceanfc
