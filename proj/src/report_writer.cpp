#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "oceanfc/error.hpp"
#include "oceanfc/io.hpp"
#include "oceanfc/numeric.hpp"

namespace oceanfc {

std::uint64_t HistogramMetric::total() const {
    std::uint64_t t = overflow;
    for (auto c : counts) t += c;
    return t;
}

namespace {

class TextFile {
public:
    explicit TextFile(const fs::path& path) : path_(path), out_(path, std::ios::trunc) {
        if (!out_) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    ~TextFile() noexcept(false) {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0)
            throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
    }
    std::ofstream& operator*() { return out_; }

private:
    fs::path path_;
    std::ofstream out_;
};

std::string depth_label(const std::optional<double>& d) { return d ? format_double(*d) : "all"; }

struct Series {
    std::string label;
    std::vector<double> x, y;
};

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

// Minimal fixed-size chart: axes, min/max tick labels, one polyline or bar set per series.
void write_svg_chart(const fs::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool bars) {
    constexpr double kW = 640, kH = 400, kL = 70, kR = 20, kT = 40, kB = 50;
    double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = bars ? 0.0 : HUGE_VAL, y1 = -HUGE_VAL;
    for (const auto& s : series)
        for (std::size_t n = 0; n < s.x.size(); ++n) {
            if (!std::isfinite(s.x[n]) || !std::isfinite(s.y[n])) continue;
            x0 = std::min(x0, s.x[n]);
            x1 = std::max(x1, s.x[n]);
            y0 = std::min(y0, s.y[n]);
            y1 = std::max(y1, s.y[n]);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    TextFile f(path);
    auto& o = *f;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << svg_escape(title)
      << "</text>\n";
    o << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << svg_escape(x_label) << "</text>\n";
    o << "<text x=\"14\" y=\"" << kH / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
      << ")\" text-anchor=\"middle\">" << svg_escape(y_label) << "</text>\n";
    o << "<text x=\"" << kL << "\" y=\"" << kH - kB + 16 << "\" font-size=\"10\">" << format_double(x0)
      << "</text>\n";
    o << "<text x=\"" << kW - kR << "\" y=\"" << kH - kB + 16 << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_double(x1) << "</text>\n";
    o << "<text x=\"" << kL - 4 << "\" y=\"" << kH - kB << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_double(y0) << "</text>\n";
    o << "<text x=\"" << kL - 4 << "\" y=\"" << kT + 8 << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_double(y1) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % std::size(kColors)];
        const auto& ser = series[s];
        if (bars) {
            const double bw = ser.x.size() ? (kW - kL - kR) / double(ser.x.size()) : 0;
            for (std::size_t n = 0; n < ser.x.size(); ++n) {
                const double top = py(ser.y[n]);
                o << "<rect x=\"" << kL + n * bw << "\" y=\"" << top << "\" width=\"" << bw
                  << "\" height=\"" << (kH - kB) - top << "\" fill=\"" << color << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t n = 0; n < ser.x.size(); ++n)
                if (std::isfinite(ser.y[n])) o << px(ser.x[n]) << ',' << py(ser.y[n]) << ' ';
            o << "\"/>\n";
        }
        o << "<text x=\"" << kW - kR - 4 << "\" y=\"" << kT + 14 * (s + 1) << "\" font-size=\"11\" fill=\"" << color
          << "\" text-anchor=\"end\">" << svg_escape(ser.label) << "</text>\n";
    }
    o << "</svg>\n";
}

}  // namespace

std::vector<fs::path> write_report(const MetricReport& report, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    std::vector<fs::path> written;

    // Curves, grouped by family in first-seen order.
    std::vector<std::string> families;
    for (const auto& c : report.curves)
        if (std::find(families.begin(), families.end(), c.family) == families.end()) families.push_back(c.family);

    for (const auto& fam : families) {
        const fs::path csv = dir / (fam + ".csv");
        {
            TextFile f(csv);
            if (fam == "acc") {
                *f << "lead_days,variable,value\n";
            } else {
                *f << "lead_days,variable,depth_m,value\n";
            }
            for (const auto& c : report.curves) {
                if (c.family != fam) continue;
                for (std::size_t n = 0; n < c.x.size(); ++n) {
                    *f << format_double(c.x[n]) << ',' << c.variable << ',';
                    if (fam != "acc") *f << depth_label(c.depth_m) << ',';
                    *f << format_double(c.y[n]) << '\n';
                }
            }
        }
        written.push_back(csv);

        // One chart per variable, showing the depth-pooled curve(s).
        std::map<std::string, std::vector<Series>> by_var;
        std::vector<std::string> var_order;
        for (const auto& c : report.curves) {
            if (c.family != fam || c.depth_m) continue;
            if (!by_var.count(c.variable)) var_order.push_back(c.variable);
            by_var[c.variable].push_back({c.variable, c.x, c.y});
        }
        for (const auto& var : var_order) {
            const auto& first = *std::find_if(report.curves.begin(), report.curves.end(), [&](const CurveMetric& c) {
                return c.family == fam && c.variable == var && !c.depth_m;
            });
            const fs::path svg = dir / (fam + "_" + var + ".svg");
            write_svg_chart(svg, fam + " " + var, first.x_label, first.units, by_var[var], false);
            written.push_back(svg);
        }
    }

    if (!report.scalars.empty()) {
        const fs::path csv = dir / "scalars.csv";
        {
            TextFile f(csv);
            *f << "metric,value\n";
            for (const auto& s : report.scalars) *f << s.name << ',' << format_double(s.value) << '\n';
        }
        written.push_back(csv);
    }

    for (const auto& h : report.histograms) {
        const fs::path csv = dir / (h.name + "_hist.csv");
        {
            TextFile f(csv);
            *f << "bin_lo,bin_hi,count\n";
            for (std::size_t b = 0; b < h.counts.size(); ++b)
                *f << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
            if (h.overflow > 0) *f << format_double(h.edges.back()) << ",inf," << h.overflow << '\n';
        }
        written.push_back(csv);
        Series s{h.name, {}, {}};
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            s.x.push_back(0.5 * (h.edges[b] + h.edges[b + 1]));
            s.y.push_back(double(h.counts[b]));
        }
        const fs::path svg = dir / (h.name + "_hist.svg");
        write_svg_chart(svg, h.name, h.units, "count", {s}, true);
        written.push_back(svg);
    }

    for (const auto& fld : report.fields) {
        const fs::path csv = dir / (fld.name + ".csv");
        {
            TextFile f(csv);
            *f << "lat,lon,value\n";
            for (std::size_t i = 0; i < fld.lats.size(); ++i)
                for (std::size_t j = 0; j < fld.lons.size(); ++j)
                    *f << format_double(fld.lats[i]) << ',' << format_double(fld.lons[j]) << ','
                       << format_double(fld.values[i * fld.lons.size() + j]) << '\n';
        }
        written.push_back(csv);
    }

    for (const auto& sec : report.sections) {
        const fs::path csv = dir / ("section_" + sec.name + ".csv");
        {
            TextFile f(csv);
            *f << "depth_m,lon,value\n";
            for (std::size_t k = 0; k < sec.depths.size(); ++k)
                for (std::size_t c = 0; c < sec.lons.size(); ++c)
                    *f << format_double(sec.depths[k]) << ',' << format_double(sec.lons[c]) << ','
                       << format_double(sec.values[k * sec.lons.size() + c]) << '\n';
        }
        written.push_back(csv);
    }

    const fs::path manifest = dir / "report_manifest.txt";
    {
        TextFile f(manifest);
        *f << "# horizon=" << report.horizon << '\n';
        *f << "# init_days=";
        for (std::size_t n = 0; n < report.init_days.size(); ++n) *f << (n ? "," : "") << report.init_days[n];
        *f << '\n';
        for (const auto& p : written) *f << p.filename().generic_string() << '\n';
    }
    written.push_back(manifest);
    return written;
}

}  // namespace oceanfc
