#include <doctest.h>

#include <cmath>

#include "aia/bptt.hpp"
#include "aia/errors.hpp"
#include "aia/gradcheck.hpp"
#include "test_helpers.hpp"

using namespace aia;
using testutil::make_net;

namespace {

struct Run {
  ForwardResult fwd;
  LossResult loss;
};

Run run_forward(const Network& net, const DenseArray& input, const std::vector<std::size_t>& labels,
                std::size_t threads = 1) {
  Run r{forward_record(net, input, SpikeMode::Hard, threads), {}};
  r.loss = readout_and_loss(r.fwd.tape, labels);
  return r;
}

}  // namespace

TEST_CASE("forward tape shapes and spike values") {
  Network net = init_network(NetworkSpec::uniform(5, {7, 3}, 4, NeuronParams{}), 9);
  const DenseArray input = testutil::random_spikes(2, 5, 4, 0.5, 1);
  const ForwardResult f = forward_record(net, input);
  REQUIRE(f.tape.complete);
  REQUIRE(f.tape.layers.size() == 2);
  CHECK(f.tape.layers[0].u.shape() == Shape{2, 7, 4});
  CHECK(f.tape.layers[1].o.shape() == Shape{2, 3, 4});
  CHECK(f.readout.shape() == Shape{2, 3});
  for (double v : f.tape.layers[0].o.values()) CHECK((v == 0.0 || v == 1.0));
  CHECK_THROWS_AS(forward_record(net, DenseArray(Shape{2, 4, 4})), DimensionError);
}

TEST_CASE("T=1 single-layer LIF weight gradient equals dL/du") {
  Network net = make_net(NeuronModel::LIF, {DenseArray::matrix({{1.0}, {0.3}})}, 1);
  const DenseArray input(Shape{1, 1, 1}, 1.0);
  const std::vector<std::size_t> labels{1};
  Run r = run_forward(net, input, labels);
  const GradientSet g = backward_lif(r.fwd.tape, r.loss.d_readout, net);
  // Neuron 0 sits at threshold (surrogate 1), neuron 1 is outside the window.
  CHECK(g.dW[0].at(0, 0) == doctest::Approx(r.loss.d_readout.at(0, 0)).epsilon(1e-12));
  CHECK(g.dW[0].at(1, 0) == 0.0);
  CHECK(r.loss.d_readout.at(0, 0) != 0.0);
}

TEST_CASE("silent presynaptic neuron gets exactly zero weight gradient") {
  for (NeuronModel m : {NeuronModel::LIF, NeuronModel::AIA, NeuronModel::CachedAIA, NeuronModel::PLIF}) {
    Network net = init_network(NetworkSpec::uniform(3, {4, 2}, 5, NeuronParams::for_model(m)), 4);
    DenseArray input = testutil::random_spikes(3, 3, 5, 0.7, 2);
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t t = 0; t < 5; ++t) input.at(b, 1, t) = 0.0;
    Run r = run_forward(net, input, {0, 1, 0});
    const GradientSet g = backward(r.fwd.tape, r.loss.d_readout, net);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g.dW[0].at(i, 1) == 0.0);
  }
}

TEST_CASE("zero input gives zero gradients everywhere") {
  Network net = init_network(NetworkSpec::uniform(3, {4, 2}, 3, NeuronParams{}), 4);
  const DenseArray input(Shape{2, 3, 3}, 0.0);
  Run r = run_forward(net, input, {0, 1});
  const GradientSet g = backward(r.fwd.tape, r.loss.d_readout, net);
  for (const auto& dw : g.dW)
    for (double v : dw.values()) CHECK(v == 0.0);
}

TEST_CASE("AIA scales the LIF weight gradient by the weighted input") {
  const DenseArray w = DenseArray::matrix({{0.7}, {0.9}});
  Network lif = make_net(NeuronModel::LIF, {w}, 1);
  Network aia = make_net(NeuronModel::AIA, {w}, 1);
  const DenseArray input(Shape{1, 1, 1}, 1.0);
  Run rl = run_forward(lif, input, {0});
  Run ra = run_forward(aia, input, {0});
  const GradientSet gl = backward_lif(rl.fwd.tape, rl.loss.d_readout, lif);
  const GradientSet ga = backward_aia(ra.fwd.tape, ra.loss.d_readout, aia);
  REQUIRE(gl.dW[0].at(0, 0) != 0.0);
  CHECK(ga.dW[0].at(0, 0) == doctest::Approx(0.7 * gl.dW[0].at(0, 0)).epsilon(1e-12));
  CHECK(ga.dW[0].at(1, 0) == doctest::Approx(0.9 * gl.dW[0].at(1, 0)).epsilon(1e-12));
}

TEST_CASE("per-step AIA update equals x times the LIF update") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    Network lif = init_network(NetworkSpec::uniform(6, {5, 3}, 6, NeuronParams{}), 100 + trial);
    Network aia = testutil::retag(lif, NeuronModel::AIA);
    const DenseArray input = testutil::random_spikes(1, 6, 6, 0.6, 200 + trial);
    const std::vector<std::size_t> labels{static_cast<std::size_t>(trial % 3)};
    Run rl = run_forward(lif, input, labels);
    Run ra = run_forward(aia, input, labels);
    CHECK(rl.fwd.tape.layers[1].o == ra.fwd.tape.layers[1].o);
    BackwardOptions opt;
    opt.record_steps = true;
    const GradientSet gl = backward_lif(rl.fwd.tape, rl.loss.d_readout, lif, opt);
    const GradientSet ga = backward_aia(ra.fwd.tape, ra.loss.d_readout, aia, opt);
    for (std::size_t l = 0; l < 2; ++l) {
      const DenseArray& x = ra.fwd.tape.layers[l].x;
      for (std::size_t t = 0; t < 6; ++t) {
        const DenseArray& a = ga.dW_steps[l][t];
        const DenseArray& b = gl.dW_steps[l][t];
        for (std::size_t i = 0; i < a.extent(0); ++i)
          for (std::size_t j = 0; j < a.extent(1); ++j)
            CHECK(std::abs(a.at(i, j) - x.at(0, i, t) * b.at(i, j)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("the two AIA update forms agree") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t out = 1 + rng.index(5), in = 1 + rng.index(6);
    DenseArray w(Shape{out, in});
    for (double& v : w.values()) v = rng.normal(0, 1);
    std::vector<double> o(in), delta(out);
    for (double& v : o) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (double& v : delta) v = rng.uniform(-2, 2);
    const DenseArray a = aia_update_weighted_input(w, o, delta);
    const DenseArray b = aia_update_gated(w, o, delta);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12);
  }
  // Same through the full backward.
  Network aia = init_network(NetworkSpec::uniform(4, {6, 3}, 5, NeuronParams::for_model(NeuronModel::AIA)), 8);
  const DenseArray input = testutil::random_spikes(3, 4, 5, 0.6, 9);
  Run r = run_forward(aia, input, {0, 1, 2});
  BackwardOptions wi, gated;
  gated.aia_form = AiaForm::Gated;
  const GradientSet g1 = backward_aia(r.fwd.tape, r.loss.d_readout, aia, wi);
  const GradientSet g2 = backward_aia(r.fwd.tape, r.loss.d_readout, aia, gated);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t k = 0; k < g1.dW[l].size(); ++k) CHECK(std::abs(g1.dW[l][k] - g2.dW[l][k]) <= 1e-12);
}

TEST_CASE("cached-AIA beta gradient matches the hand-derived sum") {
  const DenseArray w = DenseArray::matrix({{0.4, -0.3, 0.6}, {0.2, 0.5, 0.9}});
  Network net = make_net(NeuronModel::CachedAIA, {w}, 1);
  net.layers[0].beta = CacheBeta{{1.3, 0.8}};
  DenseArray input(Shape{1, 3, 1});
  input.at(0, 0, 0) = 1;
  input.at(0, 2, 0) = 1;
  Run r = run_forward(net, input, {1});
  const GradientSet g = backward_cached_aia(r.fwd.tape, r.loss.d_readout, net);
  const std::vector<double> o{1, 0, 1};
  const NeuronParams& p = net.layers[0].neuron;
  for (std::size_t i = 0; i < 2; ++i) {
    double x = 0.0;
    for (std::size_t k = 0; k < 3; ++k) x += w.at(i, k) * o[k];
    const double u = net.layers[0].beta->beta[i] * x;
    const double delta = r.loss.d_readout.at(0, i) * spike_derivative(u, p, SpikeMode::Hard);
    double expected = 0.0;
    for (std::size_t k = 0; k < 3; ++k) expected += o[k] * w.at(i, k) * (delta * o[k]);
    CHECK(g.dBeta[0][i] == doctest::Approx(expected).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(g.dW[0].at(i, j) == doctest::Approx(net.layers[0].beta->beta[i] * delta * o[j]).epsilon(1e-12));
  }
  CHECK(g.dBeta[0][1] != 0.0);
}

TEST_CASE("PLIF leak gradient vanishes for T=1") {
  Network net = init_network(NetworkSpec::uniform(3, {4, 2}, 1, NeuronParams::for_model(NeuronModel::PLIF)), 3);
  const DenseArray input = testutil::random_spikes(2, 3, 1, 0.8, 3);
  Run r = run_forward(net, input, {0, 1});
  const GradientSet g = backward_plif(r.fwd.tape, r.loss.d_readout, net);
  for (double d : g.dPlifRaw) CHECK(d == 0.0);
}

TEST_CASE("rule-specific backward rejects other models") {
  Network net = init_network(NetworkSpec::uniform(3, {2}, 2, NeuronParams{}), 3);
  Run r = run_forward(net, DenseArray(Shape{1, 3, 2}, 1.0), {0});
  CHECK_THROWS_AS(backward_aia(r.fwd.tape, r.loss.d_readout, net), ConfigError);
  CHECK_THROWS_AS(backward_cached_aia(r.fwd.tape, r.loss.d_readout, net), ConfigError);
  CHECK_THROWS_AS(backward_plif(r.fwd.tape, r.loss.d_readout, net), ConfigError);
  CHECK_NOTHROW(backward_lif(r.fwd.tape, r.loss.d_readout, net));
}

TEST_CASE("backward requires a complete tape") {
  Network net = init_network(NetworkSpec::uniform(3, {4, 2}, 2, NeuronParams{}), 3);
  Run r = run_forward(net, DenseArray(Shape{1, 3, 2}, 1.0), {0});
  BpttTape tape = r.fwd.tape;
  tape.complete = false;
  CHECK_THROWS_AS(backward(tape, r.loss.d_readout, net), StateError);
  CHECK_THROWS_AS(readout_and_loss(tape, std::vector<std::size_t>{0}), StateError);
}

TEST_CASE("forward and backward are deterministic across thread counts") {
  Network net = init_network(
      NetworkSpec::uniform(8, {16, 4}, 6, NeuronParams::for_model(NeuronModel::CachedAIA)), 21);
  const DenseArray input = testutil::random_spikes(9, 8, 6, 0.4, 22);
  const std::vector<std::size_t> labels{0, 1, 2, 3, 0, 1, 2, 3, 0};
  Run a = run_forward(net, input, labels, 1);
  Run b = run_forward(net, input, labels, 4);
  CHECK(a.fwd.readout == b.fwd.readout);
  BackwardOptions o1, o4;
  o4.threads = 4;
  const GradientSet g1 = backward(a.fwd.tape, a.loss.d_readout, net, o1);
  const GradientSet g4 = backward(b.fwd.tape, b.loss.d_readout, net, o4);
  CHECK(g1.dW == g4.dW);
  CHECK(g1.dBeta == g4.dBeta);
  const GradientSet g1b = backward(a.fwd.tape, a.loss.d_readout, net, o1);
  CHECK(g1.dW == g1b.dW);
}

TEST_CASE("gradcheck passes for every model and catches corruption") {
  const auto reports = gradcheck_suite(GradcheckSuiteConfig{});
  REQUIRE(reports.size() == 5);
  for (const auto& rep : reports) {
    INFO(rep.to_text());
    CHECK(rep.pass);
    for (const auto& e : rep.entries) CHECK(e.max_rel_error < 1e-3);
  }
  GradcheckOptions tampered;
  tampered.tamper = [](GradientSet& g) { g.dW[0][0] += 0.05; };
  for (const auto& rep : gradcheck_suite(GradcheckSuiteConfig{}, tampered)) CHECK_FALSE(rep.pass);
}

TEST_CASE("gradcheck on an all-zero-weight network") {
  for (NeuronModel m : {NeuronModel::LIF, NeuronModel::AIA, NeuronModel::CachedAIA}) {
    Network net = make_net(m, {DenseArray(Shape{3, 4}), DenseArray(Shape{2, 3})}, 3);
    const DenseArray input = testutil::random_spikes(2, 4, 3, 0.5, 5);
    const std::vector<std::size_t> labels{0, 1};
    const GradcheckReport rep = gradcheck(net, input, labels);
    INFO(rep.to_text());
    CHECK(rep.pass);
  }
}
