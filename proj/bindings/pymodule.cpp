// Python bindings for the core pipeline: synthesis, placement,
// linear/neural reconstruction, metrics. Arrays cross the boundary as
// copies; the C++ side stays owner-free.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sparsefield/data_io.hpp"
#include "sparsefield/error.hpp"
#include "sparsefield/experiment.hpp"
#include "sparsefield/linear_recon.hpp"
#include "sparsefield/metrics.hpp"
#include "sparsefield/neural_recon.hpp"
#include "sparsefield/placement.hpp"
#include "sparsefield/render.hpp"
#include "sparsefield/tensor_linalg.hpp"

namespace py = pybind11;
using namespace sparsefield;

namespace {

py::array_t<double> matrix_to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

Matrix array_to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ArgumentError("expected a 2-d array");
    const std::size_t rows = static_cast<std::size_t>(a.shape(0));
    const std::size_t cols = static_cast<std::size_t>(a.shape(1));
    std::vector<double> data(a.data(), a.data() + rows * cols);
    return Matrix(rows, cols, std::move(data));
}

py::array_t<double> series_to_array(const SnapshotSeries& s) {
    py::array_t<double> out({s.snapshot_count(), s.height(), s.width()});
    double* ptr = out.mutable_data();
    for (const FieldSnapshot& f : s.snapshots())
        ptr = std::copy(f.values.begin(), f.values.end(), ptr);
    return out;
}

SnapshotSeries series_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
    const std::vector<std::uint8_t>& mask) {
    if (a.ndim() != 3) throw ArgumentError("expected an (M, H, W) array");
    const std::size_t m = static_cast<std::size_t>(a.shape(0));
    const std::size_t h = static_cast<std::size_t>(a.shape(1));
    const std::size_t w = static_cast<std::size_t>(a.shape(2));
    std::vector<FieldSnapshot> frames(m);
    const double* ptr = a.data();
    for (std::size_t t = 0; t < m; ++t) {
        frames[t].height = h;
        frames[t].width = w;
        frames[t].timestamp = static_cast<std::int64_t>(t);
        frames[t].values.assign(ptr + t * h * w, ptr + (t + 1) * h * w);
    }
    return SnapshotSeries(h, w, std::move(frames), mask);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "sparse sensing and field reconstruction core";

    py::register_exception<ArgumentError>(mod, "ArgumentError", PyExc_ValueError);
    py::register_exception<ParseError>(mod, "ParseError", PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

    py::class_<SnapshotSeries>(mod, "Series")
        .def(py::init([](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                         const std::vector<std::uint8_t>& mask) {
                 return series_from_array(a, mask);
             }),
             py::arg("values"), py::arg("mask") = std::vector<std::uint8_t>{})
        .def_property_readonly("height", &SnapshotSeries::height)
        .def_property_readonly("width", &SnapshotSeries::width)
        .def_property_readonly("snapshot_count", &SnapshotSeries::snapshot_count)
        .def_property_readonly("mask", [](const SnapshotSeries& s) { return s.mask(); })
        .def("to_numpy", &series_to_array)
        .def("to_matrix", [](const SnapshotSeries& s) { return matrix_to_array(s.to_matrix()); })
        .def("__repr__", [](const SnapshotSeries& s) {
            return "<Series " + std::to_string(s.height()) + "x" + std::to_string(s.width()) +
                   ", " + std::to_string(s.snapshot_count()) + " snapshots>";
        });

    py::class_<Placement>(mod, "Placement")
        .def(py::init<std::size_t, std::size_t, std::vector<std::size_t>>(), py::arg("height"),
             py::arg("width"), py::arg("gamma"))
        .def_readonly("grid_height", &Placement::grid_height)
        .def_readonly("grid_width", &Placement::grid_width)
        .def_readonly("gamma", &Placement::gamma)
        .def("__len__", &Placement::size)
        .def("__repr__", [](const Placement& p) {
            return "<Placement " + std::to_string(p.size()) + " nodes on " +
                   std::to_string(p.grid_height) + "x" + std::to_string(p.grid_width) + ">";
        });

    py::class_<ConnectivityReport>(mod, "ConnectivityReport")
        .def_readonly("omega_defined", &ConnectivityReport::omega_defined)
        .def_readonly("omega", &ConnectivityReport::omega)
        .def_readonly("per_node_nearest", &ConnectivityReport::per_node_nearest)
        .def_readonly("connected", &ConnectivityReport::connected)
        .def_readonly("single_component", &ConnectivityReport::single_component)
        .def_readonly("bridges_added", &ConnectivityReport::bridges_added);

    py::class_<PrincipalBasis>(mod, "PrincipalBasis")
        .def_readonly("rank", &PrincipalBasis::rank)
        .def_readonly("singular_values", &PrincipalBasis::singular_values)
        .def_property_readonly("t_r", [](const PrincipalBasis& b) { return matrix_to_array(b.t_r); });

    py::class_<NeuralReconstructor>(mod, "Model")
        .def_property_readonly("placement",
                               [](const NeuralReconstructor& m) { return m.placement; })
        .def("predict",
             [](const NeuralReconstructor& m, const SnapshotSeries& s) {
                 return matrix_to_array(predict_series(m, s));
             })
        .def("save", &save_model, py::arg("path"));

    mod.def(
        "synth_series",
        [](const std::string& kind, std::size_t h, std::size_t w, std::size_t m,
           std::uint64_t seed, double noise, std::size_t components) {
            return synth_series(synth_kind_from_string(kind), h, w, m, seed, noise, components);
        },
        py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("snapshots"),
        py::arg("seed") = 0, py::arg("noise") = 0.0, py::arg("components") = 0);
    mod.def("load_series", py::overload_cast<const std::string&>(&load_series), py::arg("path"));
    mod.def(
        "save_series",
        [](const SnapshotSeries& s, const std::string& path, const std::string& format) {
            if (format != "binary" && format != "csv") throw ArgumentError("format must be binary or csv");
            save_series(s, path, format == "csv" ? SeriesFormat::csv : SeriesFormat::binary);
        },
        py::arg("series"), py::arg("path"), py::arg("format") = "binary");
    mod.def(
        "split_series",
        [](const SnapshotSeries& s, double train_fraction) {
            return split_series(s, {train_fraction});
        },
        py::arg("series"), py::arg("train_fraction") = 0.7);

    mod.def("select_sampling_locations", &select_sampling_locations, py::arg("series"),
            py::arg("r"));
    mod.def("random_placement", &random_placement, py::arg("height"), py::arg("width"),
            py::arg("r"), py::arg("seed"), py::arg("mask") = std::vector<std::uint8_t>{});
    mod.def("measure_series", [](const Placement& p, const SnapshotSeries& s) {
        return matrix_to_array(measure_series(p, s));
    });
    mod.def("analyze_connectivity", &analyze_connectivity, py::arg("placement"),
            py::arg("tau_com"));
    mod.def("insert_bridges", &insert_bridges, py::arg("placement"), py::arg("tau_com"));
    mod.def("save_placement", &save_placement, py::arg("placement"), py::arg("path"));
    mod.def("load_placement", &load_placement, py::arg("path"));

    mod.def("fit_principal_basis", &fit_principal_basis, py::arg("series"), py::arg("r"));
    mod.def(
        "reconstruct_linear",
        [](const PrincipalBasis& basis, const Placement& p,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
            return matrix_to_array(reconstruct_linear(basis, p, array_to_matrix(y)));
        },
        py::arg("basis"), py::arg("placement"), py::arg("y"));

    mod.def(
        "train_model",
        [](const SnapshotSeries& series, const Placement& placement, std::size_t hidden,
           std::size_t epochs, std::size_t batch, double lr, bool cosine, std::uint64_t seed) {
            TrainConfig config;
            config.epochs = epochs;
            config.batch_size = batch;
            config.learning_rate = lr;
            config.cosine_decay = cosine;
            config.seed = seed;
            NeuralReconstructor model = make_model(series, placement, hidden, seed);
            std::vector<double> history = train(model, series, config);
            return py::make_tuple(std::move(model), std::move(history));
        },
        py::arg("series"), py::arg("placement"), py::arg("hidden") = 2,
        py::arg("epochs") = 2000, py::arg("batch") = 20, py::arg("lr") = 1e-3,
        py::arg("cosine") = true, py::arg("seed") = 0);
    mod.def("load_model", &load_model, py::arg("path"));

    mod.def(
        "mse_at_n",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& truth,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& recon,
           const std::vector<std::uint8_t>& mask) {
            return mse_at_n(array_to_matrix(truth), array_to_matrix(recon), mask);
        },
        py::arg("truth"), py::arg("recon"), py::arg("mask") = std::vector<std::uint8_t>{});
    mod.def(
        "var_at_n",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& truth,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& recon,
           const std::vector<std::uint8_t>& mask) {
            return var_at_n(array_to_matrix(truth), array_to_matrix(recon), mask);
        },
        py::arg("truth"), py::arg("recon"), py::arg("mask") = std::vector<std::uint8_t>{});
    mod.def("improvement_pct", &improvement_pct, py::arg("benchmark"), py::arg("proposed"));

    mod.def(
        "evaluate_strategies",
        [](const SnapshotSeries& series, std::size_t r, double train_fraction, std::size_t hidden,
           std::size_t epochs, std::size_t batch, double lr, std::uint64_t seed,
           std::uint64_t placement_seed) {
            ExperimentConfig config;
            config.r = r;
            config.train_fraction = train_fraction;
            config.hidden_layers = hidden;
            config.train.epochs = epochs;
            config.train.batch_size = batch;
            config.train.learning_rate = lr;
            config.train.seed = seed;
            config.placement_seed = placement_seed;
            py::list rows;
            for (const MetricsRow& row : evaluate_strategies(series, config)) {
                py::dict d;
                d["strategy"] = row.strategy;
                d["n_sensors"] = row.n_sensors;
                d["mse"] = row.mse;
                d["var"] = row.var;
                rows.append(std::move(d));
            }
            return rows;
        },
        py::arg("series"), py::arg("r"), py::arg("train_fraction") = 0.7, py::arg("hidden") = 2,
        py::arg("epochs") = 2000, py::arg("batch") = 20, py::arg("lr") = 1e-3,
        py::arg("seed") = 0, py::arg("placement_seed") = 0);

    mod.def(
        "render_pgm",
        [](const SnapshotSeries& series, std::size_t index, const std::string& path) {
            render_to_pgm(series, index, path, nullptr);
        },
        py::arg("series"), py::arg("index"), py::arg("path"));
}
