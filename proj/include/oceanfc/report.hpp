#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace oceanfc {

struct ScalarMetric {
    std::string name;
    double value = 0.0;
    std::string units;
};

/// A metric sampled along one axis (lead days or depth).
struct CurveMetric {
    std::string family;    // "rmse", "acc", ...
    std::string variable;  // ocean variable name
    std::optional<double> depth_m;  // unset for column/pooled curves
    std::string x_label;
    std::string units;
    std::vector<double> x;  // ascending
    std::vector<double> y;
};

struct HistogramMetric {
    std::string name;
    std::string units;
    std::vector<double> edges;          // bins + 1 edges
    std::vector<std::uint64_t> counts;  // one per bin
    std::uint64_t overflow = 0;         // values at or above edges.back()

    std::uint64_t total() const;
};

struct FieldMetric {
    std::string name;
    std::string units;
    std::vector<double> lats;
    std::vector<double> lons;
    std::vector<double> values;  // lat-major
};

struct SectionMetric {
    std::string name;
    std::string units;
    double lat = 0.0;
    int lead_days = 0;
    std::vector<double> depths;
    std::vector<double> lons;
    std::vector<double> values;  // depth-major
};

/// Carrier for every verification quantity a run produces.
struct MetricReport {
    std::vector<std::int64_t> init_days;
    int horizon = 0;
    std::vector<ScalarMetric> scalars;
    std::vector<CurveMetric> curves;
    std::vector<HistogramMetric> histograms;
    std::vector<FieldMetric> fields;
    std::vector<SectionMetric> sections;

    bool empty() const {
        return scalars.empty() && curves.empty() && histograms.empty() && fields.empty() && sections.empty();
    }
};

}  // namespace oceanfc
