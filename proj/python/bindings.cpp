#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "aia/analysis.hpp"
#include "aia/bptt.hpp"
#include "aia/checkpoint.hpp"
#include "aia/cli.hpp"
#include "aia/data.hpp"
#include "aia/errors.hpp"
#include "aia/gradcheck.hpp"
#include "aia/network.hpp"
#include "aia/neuron.hpp"
#include "aia/training.hpp"

namespace py = pybind11;

namespace {

// Arrays cross the boundary as (shape, flat list) pairs or nested lists;
// numpy is not required on the Python side.
py::object to_nested(const aia::DenseArray& a) {
  if (a.rank() == 0) return py::float_(a[0]);
  std::function<py::object(std::size_t, std::size_t)> build = [&](std::size_t axis, std::size_t offset) -> py::object {
    py::list out;
    std::size_t stride = 1;
    for (std::size_t k = axis + 1; k < a.rank(); ++k) stride *= a.extent(k);
    for (std::size_t i = 0; i < a.extent(axis); ++i) {
      if (axis + 1 == a.rank()) out.append(a[offset + i]);
      else out.append(build(axis + 1, offset + i * stride));
    }
    return out;
  };
  return build(0, 0);
}

aia::DenseArray from_nested(const py::handle& obj) {
  aia::Shape shape;
  py::handle cur = obj;
  while (py::isinstance<py::sequence>(cur) && !py::isinstance<py::str>(cur)) {
    py::sequence seq = py::reinterpret_borrow<py::sequence>(cur);
    shape.push_back(seq.size());
    if (seq.size() == 0) break;
    cur = seq[0];
  }
  std::vector<double> flat;
  std::function<void(const py::handle&, std::size_t)> walk = [&](const py::handle& h, std::size_t axis) {
    if (axis == shape.size()) {
      flat.push_back(h.cast<double>());
      return;
    }
    py::sequence seq = py::reinterpret_borrow<py::sequence>(h);
    if (seq.size() != shape[axis]) throw aia::DimensionError("ragged nested list");
    for (const auto& item : seq) walk(item, axis + 1);
  };
  walk(obj, 0);
  return aia::DenseArray(shape, std::move(flat));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spiking network engine with LIF, IF, PLIF, AIA and cached-AIA neurons";

  py::register_exception<aia::Error>(m, "AiaError");

  py::enum_<aia::NeuronModel>(m, "NeuronModel")
      .value("LIF", aia::NeuronModel::LIF)
      .value("IF", aia::NeuronModel::IF)
      .value("PLIF", aia::NeuronModel::PLIF)
      .value("AIA", aia::NeuronModel::AIA)
      .value("CachedAIA", aia::NeuronModel::CachedAIA);
  m.def("parse_neuron_model", [](const std::string& s) { return aia::parse_neuron_model(s); });

  py::class_<aia::NeuronParams>(m, "NeuronParams")
      .def(py::init([](aia::NeuronModel model) { return aia::NeuronParams::for_model(model); }),
           py::arg("model") = aia::NeuronModel::LIF)
      .def_readwrite("model", &aia::NeuronParams::model)
      .def_readwrite("v_th", &aia::NeuronParams::v_th)
      .def_readwrite("lambda_", &aia::NeuronParams::lambda)
      .def_readwrite("plif_raw", &aia::NeuronParams::plif_raw)
      .def_readwrite("surrogate_width", &aia::NeuronParams::surrogate_width)
      .def("validate", &aia::NeuronParams::validate);

  py::class_<aia::NeuronState>(m, "NeuronState")
      .def(py::init([](std::vector<double> u, std::vector<double> o) { return aia::NeuronState{u, o}; }),
           py::arg("u"), py::arg("o"))
      .def_readwrite("u", &aia::NeuronState::u)
      .def_readwrite("o", &aia::NeuronState::o);

  m.def("lif_step", [](const aia::NeuronState& s, std::vector<double> x, const aia::NeuronParams& p) {
    return aia::lif_step(s, x, p);
  });
  m.def("if_step", [](const aia::NeuronState& s, std::vector<double> x, const aia::NeuronParams& p) {
    return aia::if_step(s, x, p);
  });
  m.def("plif_step", [](const aia::NeuronState& s, std::vector<double> x, const aia::NeuronParams& p) {
    return aia::plif_step(s, x, p);
  });
  m.def("aia_step", [](const aia::NeuronState& s, std::vector<double> x, const aia::NeuronParams& p) {
    return aia::aia_step(s, x, p);
  });
  m.def("cached_aia_step", [](const aia::NeuronState& s, std::vector<double> x, const aia::NeuronParams& p,
                              std::vector<double> beta) {
    return aia::cached_aia_step(s, x, p, aia::CacheBeta{std::move(beta)});
  });
  m.def("surrogate_spike_derivative", [](std::vector<double> u, const aia::NeuronParams& p) {
    return aia::surrogate_spike_derivative(u, p);
  });

  py::class_<aia::Network>(m, "Network")
      .def_readonly("input_width", &aia::Network::input_width)
      .def_readonly("timesteps", &aia::Network::timesteps)
      .def_readonly("seed", &aia::Network::seed)
      .def_property_readonly("class_count", &aia::Network::class_count)
      .def_property_readonly("layer_count", [](const aia::Network& n) { return n.layers.size(); })
      .def("weights", [](const aia::Network& n, std::size_t layer) { return to_nested(n.layers.at(layer).w); })
      .def("set_weights",
           [](aia::Network& n, std::size_t layer, const py::object& w) {
             aia::DenseArray a = from_nested(w);
             if (a.shape() != n.layers.at(layer).w.shape()) throw aia::DimensionError("weight shape mismatch");
             n.layers.at(layer).w = std::move(a);
           })
      .def("beta",
           [](const aia::Network& n, std::size_t layer) -> py::object {
             const auto& b = n.layers.at(layer).beta;
             if (!b) return py::none();
             return py::cast(b->beta);
           })
      .def("set_beta",
           [](aia::Network& n, std::size_t layer, std::vector<double> beta) {
             auto& l = n.layers.at(layer);
             if (!l.beta || beta.size() != l.beta->beta.size()) throw aia::DimensionError("beta shape mismatch");
             l.beta->beta = std::move(beta);
           })
      .def("model", [](const aia::Network& n, std::size_t layer) { return n.layers.at(layer).neuron.model; })
      .def("to_json", [](const aia::Network& n) { return aia::checkpoint_to_string(n); })
      .def_static("from_json", [](const std::string& s) { return aia::checkpoint_from_string(s); });

  m.def(
      "init_network",
      [](std::size_t input_width, std::vector<std::size_t> widths, std::size_t timesteps,
         const aia::NeuronParams& neuron, std::uint64_t seed) {
        return aia::init_network(aia::NetworkSpec::uniform(input_width, std::move(widths), timesteps, neuron), seed);
      },
      py::arg("input_width"), py::arg("widths"), py::arg("timesteps"), py::arg("neuron"), py::arg("seed"));
  m.def("merge_beta", &aia::merge_beta);
  m.def("parameter_count", &aia::parameter_count);
  m.def("save_checkpoint", &aia::save_checkpoint);
  m.def("load_checkpoint", &aia::load_checkpoint);

  m.def(
      "forward",
      [](const aia::Network& net, const py::object& input, bool smoothed) {
        auto r = aia::forward_record(net, from_nested(input),
                                     smoothed ? aia::SpikeMode::Smoothed : aia::SpikeMode::Hard);
        py::list spikes;
        for (const auto& l : r.tape.layers) spikes.append(to_nested(l.o));
        return py::make_tuple(to_nested(r.readout), spikes);
      },
      py::arg("net"), py::arg("input"), py::arg("smoothed") = false,
      "Returns (readout, per-layer spikes) for a (batch, inputs, T) nested list.");

  m.def(
      "gradients",
      [](const aia::Network& net, const py::object& input, std::vector<std::size_t> labels) {
        auto fwd = aia::forward_record(net, from_nested(input));
        auto loss = aia::readout_and_loss(fwd.tape, labels);
        auto g = aia::backward(fwd.tape, loss.d_readout, net);
        py::list dw;
        for (const auto& w : g.dW) dw.append(to_nested(w));
        py::dict out;
        out["loss"] = loss.loss;
        out["dW"] = dw;
        out["dBeta"] = g.dBeta;
        out["dPlifRaw"] = g.dPlifRaw;
        return out;
      },
      py::arg("net"), py::arg("input"), py::arg("labels"));

  py::class_<aia::GradcheckReport>(m, "GradcheckReport")
      .def_readonly("model", &aia::GradcheckReport::model)
      .def_readonly("passed", &aia::GradcheckReport::pass)
      .def("to_text", &aia::GradcheckReport::to_text)
      .def_property_readonly("entries", [](const aia::GradcheckReport& r) {
        py::list out;
        for (const auto& e : r.entries) out.append(py::make_tuple(e.parameter, e.max_rel_error, e.pass));
        return out;
      });
  m.def(
      "gradcheck_suite",
      [](std::uint64_t seed) {
        aia::GradcheckSuiteConfig cfg;
        cfg.seed = seed;
        return aia::gradcheck_suite(cfg);
      },
      py::arg("seed") = 1);

  py::class_<aia::Dataset>(m, "Dataset")
      .def_property_readonly("size", &aia::Dataset::size)
      .def_property_readonly("neurons", &aia::Dataset::neurons)
      .def_property_readonly("timesteps", &aia::Dataset::timesteps)
      .def_readonly("labels", &aia::Dataset::labels)
      .def_readonly("class_count", &aia::Dataset::class_count)
      .def("sample", [](const aia::Dataset& d, std::size_t i) {
        std::vector<std::size_t> idx{i};
        return to_nested(d.gather(idx));
      });
  m.def(
      "gen_poisson_patterns",
      [](std::size_t class_count, std::size_t neurons, std::size_t timesteps, double rate_lo, double rate_hi,
         std::size_t n_per_class, std::uint64_t seed) {
        return aia::gen_poisson_patterns({class_count, neurons, timesteps, rate_lo, rate_hi, n_per_class, seed});
      },
      py::arg("class_count"), py::arg("neurons"), py::arg("timesteps"), py::arg("rate_lo"), py::arg("rate_hi"),
      py::arg("n_per_class"), py::arg("seed"));
  m.def("split_dataset", &aia::split_dataset, py::arg("dataset"), py::arg("test_fraction"), py::arg("seed"));
  m.def(
      "bin_events",
      [](std::vector<std::tuple<std::uint64_t, std::uint32_t, std::uint32_t, int>> events, std::size_t grid_w,
         std::size_t grid_h, std::size_t timesteps, std::size_t sensor_w, std::size_t sensor_h) {
        std::vector<aia::EventRecord> recs;
        for (auto [t, x, y, p] : events) recs.push_back({t, x, y, static_cast<std::uint8_t>(p)});
        return to_nested(aia::bin_events(recs, {grid_w, grid_h, timesteps, sensor_w, sensor_h}));
      },
      py::arg("events"), py::arg("grid_w"), py::arg("grid_h"), py::arg("timesteps"), py::arg("sensor_w") = 0,
      py::arg("sensor_h") = 0);

  m.def(
      "train",
      [](const aia::Network& net, const aia::Dataset& train_set, const aia::Dataset& test_set, std::size_t epochs,
         std::size_t batch_size, double learning_rate, std::uint64_t seed) {
        aia::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.adam.learning_rate = learning_rate;
        cfg.seed = seed;
        auto r = aia::train(net, train_set, test_set, cfg);
        return py::make_tuple(r.network, r.metrics.to_csv());
      },
      py::arg("net"), py::arg("train_set"), py::arg("test_set"), py::arg("epochs"), py::arg("batch_size") = 5,
      py::arg("learning_rate") = 1e-3, py::arg("seed") = 0);
  m.def(
      "evaluate",
      [](const aia::Network& net, const aia::Dataset& ds) {
        auto r = aia::evaluate(net, ds);
        py::dict out;
        out["loss"] = r.loss;
        out["accuracy"] = r.accuracy;
        out["spike_counts"] = r.spike_counts;
        return out;
      });
  m.def("weight_shift_csv", [](const aia::Network& a, const aia::Network& b, std::size_t bins) {
    return aia::weight_shift_report(a, b, aia::default_weight_edges(a, b, bins)).to_csv();
  });

  m.def("cli", [](std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = aia::cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, "Runs an aia subcommand in-process; returns (exit_code, stdout, stderr).");
}
