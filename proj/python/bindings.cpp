#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "oceanfc/cli.hpp"
#include "oceanfc/diagnostics.hpp"
#include "oceanfc/error.hpp"
#include "oceanfc/io.hpp"
#include "oceanfc/objective.hpp"
#include "oceanfc/propagators.hpp"
#include "oceanfc/rollout.hpp"
#include "oceanfc/swin3d.hpp"
#include "oceanfc/synth.hpp"

namespace py = pybind11;
using namespace oceanfc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Writable numpy view over a field's storage; `owner` keeps it alive.
py::array field_view(py::object owner, GriddedField& f) {
    const auto& s = f.spec;
    return py::array_t<double>({s.n_var, s.n_depth, s.n_lat, s.n_lon}, f.data.data(), owner);
}

void fill_field(GriddedField& f, const Array& a) {
    if (static_cast<std::size_t>(a.size()) != f.spec.size())
        throw Error(ErrorCode::SpecMismatch, "array has " + std::to_string(a.size()) + " values, grid needs " +
                                                 std::to_string(f.spec.size()));
    std::memcpy(f.data.data(), a.data(), f.spec.size() * sizeof(double));
}

template <class Field>
Field make_field(const Grid3DSpec& spec, std::int64_t time, const Array& a) {
    Field f = Field::zeros(spec, time);
    fill_field(f, a);
    return f;
}

template <class Field, class Cls>
void bind_field_members(Cls& cls) {
    cls.def_readwrite("spec", &Field::spec)
        .def_readwrite("time", &Field::time)
        .def_property(
            "data", [](py::object self) { return field_view(self, self.cast<Field&>()); },
            [](Field& f, const Array& a) { fill_field(f, a); }, "V x D x H x W view; land is NaN");
}

py::array vector_view(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
    return py::array_t<double>(shape, v.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ocean-state increment forecasting: grids, synthetic data, propagators and diagnostics";

    static py::exception<Error> err(m, "OceanfcError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(err, e.what());
        }
    });

    m.attr("OCEAN_VARS") = py::make_tuple("thetao", "so", "uo", "vo");
    m.attr("EARTH_RADIUS") = kEarthRadius;

    py::class_<Grid3DSpec>(m, "Grid3DSpec")
        .def(py::init<>())
        .def_readwrite("n_var", &Grid3DSpec::n_var)
        .def_readwrite("n_depth", &Grid3DSpec::n_depth)
        .def_readwrite("n_lat", &Grid3DSpec::n_lat)
        .def_readwrite("n_lon", &Grid3DSpec::n_lon)
        .def_readwrite("lat0", &Grid3DSpec::lat0)
        .def_readwrite("d_lat", &Grid3DSpec::d_lat)
        .def_readwrite("lon0", &Grid3DSpec::lon0)
        .def_readwrite("d_lon", &Grid3DSpec::d_lon)
        .def_readwrite("depths", &Grid3DSpec::depths)
        .def("lat", &Grid3DSpec::lat)
        .def("lon", &Grid3DSpec::lon)
        .def("cells", &Grid3DSpec::cells)
        .def("periodic_lon", &Grid3DSpec::periodic_lon)
        .def("validate", &Grid3DSpec::validate)
        .def(py::self == py::self)
        .def("__repr__", [](const Grid3DSpec& g) {
            return "<Grid3DSpec " + std::to_string(g.n_var) + "x" + std::to_string(g.n_depth) + "x" +
                   std::to_string(g.n_lat) + "x" + std::to_string(g.n_lon) + ">";
        });

    py::class_<LandSeaMask>(m, "LandSeaMask")
        .def_static("all_ocean", &LandSeaMask::all_ocean)
        .def_property(
            "valid",
            [](const LandSeaMask& mk) {
                py::array_t<bool> out({mk.n_depth, mk.n_lat, mk.n_lon});
                auto* p = out.mutable_data();
                for (std::size_t n = 0; n < mk.valid.size(); ++n) p[n] = mk.valid[n] != 0;
                return out;
            },
            [](LandSeaMask& mk, py::array_t<bool, py::array::c_style | py::array::forcecast> a) {
                if (static_cast<std::size_t>(a.size()) != mk.valid.size())
                    throw Error(ErrorCode::SpecMismatch, "mask array has the wrong size");
                for (std::size_t n = 0; n < mk.valid.size(); ++n) mk.valid[n] = a.data()[n] ? 1 : 0;
            })
        .def("ocean_count", &LandSeaMask::ocean_count)
        .def("matches", &LandSeaMask::matches);

    auto ocean = py::class_<OceanState>(m, "OceanState")
                     .def(py::init(&make_field<OceanState>), py::arg("spec"), py::arg("time"), py::arg("data"))
                     .def_static("zeros", &OceanState::zeros);
    bind_field_members<OceanState>(ocean);
    auto forcing = py::class_<ForcingState>(m, "ForcingState")
                       .def(py::init([](const Grid3DSpec& s, std::int64_t t, const Array& a) {
                                return make_field<ForcingState>(forcing_spec_for(s), t, a);
                            }),
                            py::arg("ocean_spec"), py::arg("time"), py::arg("data"))
                       .def_static("zeros", &ForcingState::zeros);
    bind_field_members<ForcingState>(forcing);
    auto inc = py::class_<StateIncrement>(m, "StateIncrement").def_readwrite("lead", &StateIncrement::lead);
    bind_field_members<StateIncrement>(inc);

    m.def("apply_mask", [](OceanState& s, const LandSeaMask& mk) { apply_mask(s, mk); });
    m.def("latitude_weights", [](const Grid3DSpec& g) { return latitude_weights(g).w; });

    // io
    m.def("read_ocean", &read_ocean);
    m.def("read_forcing", &read_forcing);
    m.def("read_mask", &read_mask);
    m.def("write_ocean", [](const fs::path& p, const OceanState& s) { write_ogf(p, s); });
    m.def("write_forcing", [](const fs::path& p, const ForcingState& f) { write_ogf(p, f); });
    m.def("write_mask", [](const fs::path& p, const LandSeaMask& mk, const Grid3DSpec& g) { write_ogf(p, mk, g); });

    py::class_<ManifestEntry>(m, "ManifestEntry")
        .def_readonly("day", &ManifestEntry::day)
        .def_readonly("ocean", &ManifestEntry::ocean)
        .def_readonly("forcing", &ManifestEntry::forcing);
    py::class_<DatasetManifest>(m, "DatasetManifest")
        .def_readonly("entries", &DatasetManifest::entries)
        .def_readonly("train_end_day", &DatasetManifest::train_end_day)
        .def_readonly("valid_end_day", &DatasetManifest::valid_end_day)
        .def_readonly("mask", &DatasetManifest::mask)
        .def("__len__", &DatasetManifest::size);
    m.def("read_manifest", &read_manifest);

    py::class_<NormStats>(m, "NormStats")
        .def_readonly("n_depth", &NormStats::n_depth)
        .def_property_readonly("mean", [](const NormStats& s) { return vector_view(s.mean, {s.n_var, s.n_depth}); })
        .def_property_readonly("std", [](const NormStats& s) { return vector_view(s.std, {s.n_var, s.n_depth}); })
        .def_readonly("forcing_mean", &NormStats::forcing_mean)
        .def_readonly("forcing_std", &NormStats::forcing_std);
    m.def("compute_norm_stats", [](const std::vector<OceanState>& xs, const std::vector<ForcingState>& fs,
                                   const LandSeaMask& mk) { return compute_norm_stats(xs, fs, mk); });
    m.def("compute_norm_stats_manifest",
          [](const DatasetManifest& man, const LandSeaMask& mk) { return compute_norm_stats(man, mk); });
    m.def("read_norm_stats", &read_norm_stats);
    m.def("write_norm_stats", &write_norm_stats);

    // synth
    py::class_<SynthParams>(m, "SynthParams")
        .def(py::init(&default_synth_params))
        .def_readwrite("grid", &SynthParams::grid)
        .def_readwrite("anomaly_amplitude", &SynthParams::anomaly_amplitude)
        .def_readwrite("wavelength", &SynthParams::wavelength)
        .def_readwrite("phase_speed", &SynthParams::phase_speed)
        .def_readwrite("psi0", &SynthParams::psi0)
        .def_readwrite("current_seasonality", &SynthParams::current_seasonality)
        .def_readwrite("forcing_period", &SynthParams::forcing_period)
        .def_readwrite("noise_std", &SynthParams::noise_std)
        .def_readwrite("seed", &SynthParams::seed)
        .def("validate", &SynthParams::validate);
    m.def("default_desk_grid", &default_desk_grid);
    m.def("default_synth_mask", &default_synth_mask);
    m.def("analytic_state", &analytic_state);
    m.def("analytic_forcing", &analytic_forcing);
    m.def("gen_dataset", &gen_dataset, py::arg("params"), py::arg("first_day"), py::arg("n_days"), py::arg("mask"),
          py::arg("out_dir"), py::arg("train_end_day") = py::none(), py::arg("valid_end_day") = py::none(),
          py::call_guard<py::gil_scoped_release>());

    // objective
    m.def("increment", &increment);
    m.def("apply_increment", &apply_increment);
    m.def(
        "weighted_increment_mse",
        [](const StateIncrement& pred, const StateIncrement& truth, const LandSeaMask& mk) {
            return weighted_increment_mse(pred, truth, mk, latitude_weights(pred.spec));
        },
        "cos(lat)-weighted, ocean-masked MSE between two increments");

    // propagators
    py::class_<AdvectionParams>(m, "AdvectionParams")
        .def(py::init([](double kappa, double gamma, double z_ref) {
                 AdvectionParams p;
                 p.kappa = kappa;
                 p.gamma = gamma;
                 p.z_ref = z_ref;
                 return p;
             }),
             py::arg("kappa") = 0.0, py::arg("gamma") = 0.0, py::arg("z_ref") = 50.0)
        .def_readwrite("kappa", &AdvectionParams::kappa)
        .def_readwrite("gamma", &AdvectionParams::gamma)
        .def_readwrite("z_ref", &AdvectionParams::z_ref);
    m.def("persistence_step", &persistence_step, py::arg("x_prev"), py::arg("x_t"), py::arg("f_prev"),
          py::arg("f_t"), py::arg("lead") = 1);
    m.def("advective_step", &advective_step, py::arg("x_t"), py::arg("f_t"), py::arg("mask"), py::arg("params"),
          py::arg("lead") = 1);
    m.def(
        "plan_schedule",
        [](int horizon, int fm5_lead) {
            std::vector<std::tuple<std::string, int, int>> out;
            for (const auto& s : plan_schedule(horizon, 1, fm5_lead).steps) out.emplace_back(s.propagator, s.base, s.lead);
            return out;
        },
        py::arg("horizon"), py::arg("fm5_lead") = 5, "list of (propagator, base day, lead)");

    // swin3d
    py::class_<Swin3dConfig>(m, "Swin3dConfig")
        .def(py::init<>())
        .def_readwrite("patch", &Swin3dConfig::patch)
        .def_readwrite("embed_dim", &Swin3dConfig::embed_dim)
        .def_readwrite("window", &Swin3dConfig::window)
        .def_readwrite("encoder_depths", &Swin3dConfig::encoder_depths)
        .def_readwrite("bottleneck_depth", &Swin3dConfig::bottleneck_depth)
        .def_readwrite("heads", &Swin3dConfig::heads)
        .def_readwrite("mlp_ratio", &Swin3dConfig::mlp_ratio)
        .def_readwrite("shift", &Swin3dConfig::shift)
        .def_readwrite("pos_embed", &Swin3dConfig::pos_embed)
        .def_readwrite("periodic_lon", &Swin3dConfig::periodic_lon)
        .def_readwrite("seed", &Swin3dConfig::seed);
    py::class_<ParamSet>(m, "ParamSet")
        .def_property(
            "values",
            [](py::object self) {
                auto& p = self.cast<ParamSet&>();
                return py::array_t<double>({static_cast<py::ssize_t>(p.values.size())}, p.values.data(), self);
            },
            [](ParamSet& p, const Array& a) {
                if (static_cast<std::size_t>(a.size()) != p.values.size())
                    throw Error(ErrorCode::SpecMismatch, "parameter vector has the wrong length");
                std::memcpy(p.values.data(), a.data(), p.values.size() * sizeof(double));
            })
        .def("names", [](const ParamSet& p) {
            std::vector<std::string> out;
            for (const auto& e : p.layout) out.push_back(e.name);
            return out;
        })
        .def("__len__", &ParamSet::count);
    m.def("read_params", &read_params);
    m.def("write_params", &write_params);
    py::class_<Swin3dModel>(m, "Swin3dModel")
        .def(py::init<const Swin3dConfig&, const Grid3DSpec&>())
        .def("param_count", &Swin3dModel::param_count)
        .def("init_params", &Swin3dModel::init_params)
        .def("zero_params", &Swin3dModel::zero_params)
        .def("forward", &Swin3dModel::forward, py::arg("params"), py::arg("x_prev"), py::arg("x_t"),
             py::arg("f_prev"), py::arg("f_t"), py::arg("stats"), py::arg("lead") = 1,
             py::call_guard<py::gil_scoped_release>());

    // diagnostics
    m.def("eke", [](const std::vector<OceanState>& series, const LandSeaMask& mk) {
        return eke(series, cell_geometry(series.at(0).spec), mk);
    });
    m.def("field_variance", [](const std::vector<OceanState>& series, int variable, const LandSeaMask& mk) {
        return field_variance(series, variable, cell_geometry(series.at(0).spec), mk);
    });
    m.def("sst_gradient", [](const OceanState& s, const LandSeaMask& mk) {
        const auto g = sst_gradient(s, cell_geometry(s.spec), mk);
        return py::array_t<double>({s.spec.n_lat, s.spec.n_lon}, g.data());
    });
    m.def(
        "ohc",
        [](const OceanState& s, const LandSeaMask& mk, double z_max) {
            const auto h = ohc(s, mk, z_max);
            return py::array_t<double>({s.spec.n_lat, s.spec.n_lon}, h.data());
        },
        py::arg("state"), py::arg("mask"), py::arg("z_max") = 100.0);
    m.def("smooth_blend", &smooth_blend, py::arg("state"), py::arg("mask"), py::arg("radius"), py::arg("alpha"));
    m.def(
        "rmse",
        [](const std::vector<OceanState>& forecasts, const std::vector<OceanState>& truths, const LandSeaMask& mk) {
            LeadPairs lp{1, {}, {}};
            for (const auto& f : forecasts) lp.forecasts.push_back(&f);
            for (const auto& t : truths) lp.truths.push_back(&t);
            std::vector<LeadPairs> leads{lp};
            py::dict out;
            for (const auto& c : rmse(leads, mk, latitude_weights(forecasts.at(0).spec), RmseScope::Column))
                out[py::str(c.variable)] = c.y.at(0);
            return out;
        },
        "column RMSE per variable, pooled over the given forecast/truth pairs");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            py::gil_scoped_release nogil;
            return run_cli(args);
        },
        "run one oceanfc subcommand; returns the exit code");
}
