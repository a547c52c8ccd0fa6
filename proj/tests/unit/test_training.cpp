#include <doctest.h>

#include <cmath>
#include <limits>

#include "aia/analysis.hpp"
#include "aia/data.hpp"
#include "aia/errors.hpp"
#include "aia/random.hpp"
#include "aia/training.hpp"
#include "test_helpers.hpp"

using namespace aia;

namespace {

std::pair<Dataset, Dataset> small_task(std::uint64_t seed = 2) {
  PoissonConfig pc;
  pc.class_count = 3;
  pc.neurons = 12;
  pc.timesteps = 5;
  pc.rate_lo = 0.0;
  pc.rate_hi = 0.8;
  pc.n_per_class = 8;
  pc.seed = seed;
  return split_dataset(gen_poisson_patterns(pc), 0.25, seed);
}

Network small_net(NeuronModel m, std::uint64_t seed = 1) {
  return init_network(NetworkSpec::uniform(12, {10, 3}, 5, NeuronParams::for_model(m)), seed);
}

}  // namespace

TEST_CASE("adam first step moves each parameter by about lr") {
  AdamConfig cfg;
  Adam adam(cfg, 3);
  std::vector<double> p{0.0, 1.0, -2.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  adam.step(p, g);
  CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-9));
  // Bias-corrected first step: lr * g / (|g| + eps).
  CHECK(p[2] == doctest::Approx(-2.0 - 1e-3 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));
  CHECK(adam.steps_taken() == 1);
  std::vector<double> zero{0.0};
  Adam idle(cfg, 1);
  idle.step(zero, std::vector<double>{0.0});
  CHECK(zero[0] == 0.0);
  CHECK_THROWS_AS(adam.step(p, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("zero learning rate leaves the network unchanged") {
  auto [tr, te] = small_task();
  const Network net = small_net(NeuronModel::CachedAIA);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.adam.learning_rate = 0.0;
  const TrainResult r = train(net, tr, te, cfg);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(r.network.layers[l].w == net.layers[l].w);
    CHECK(r.network.layers[l].beta->beta == net.layers[l].beta->beta);
  }
  CHECK(r.metrics.epochs.size() == 2);
}

TEST_CASE("training is deterministic for fixed seeds and any thread count") {
  auto [tr, te] = small_task();
  for (NeuronModel m : {NeuronModel::LIF, NeuronModel::AIA, NeuronModel::PLIF}) {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.adam.learning_rate = 1e-2;
    cfg.seed = 9;
    const TrainResult a = train(small_net(m), tr, te, cfg);
    cfg.threads = 3;
    const TrainResult b = train(small_net(m), tr, te, cfg);
    CHECK(a.metrics.to_csv() == b.metrics.to_csv());
    for (std::size_t l = 0; l < 2; ++l) CHECK(a.network.layers[l].w == b.network.layers[l].w);
    CHECK(a.network.layers[0].neuron.plif_raw == b.network.layers[0].neuron.plif_raw);
    CHECK(a.metrics.epochs[1].shuffle_seed == mix_seed(9, a.metrics.epochs[1].epoch));
  }
}

TEST_CASE("training changes parameters and reports metrics") {
  auto [tr, te] = small_task();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.adam.learning_rate = 1e-2;
  const Network net = small_net(NeuronModel::PLIF);
  const TrainResult r = train(net, tr, te, cfg);
  CHECK_FALSE(r.network.layers[0].w == net.layers[0].w);
  CHECK(r.network.layers[0].neuron.plif_raw != 0.0);
  const std::string csv = r.metrics.to_csv();
  CHECK(csv.rfind("epoch,split,loss,accuracy\n", 0) == 0);
  for (const auto& e : r.metrics.epochs) {
    CHECK(e.test_accuracy >= 0.0);
    CHECK(e.test_accuracy <= 1.0);
    CHECK(std::isfinite(e.train_loss));
  }
  CHECK(r.metrics.test_spike_counts.size() == 2);
}

TEST_CASE("divergence names the broken parameter") {
  auto [tr, te] = small_task();
  Network net = small_net(NeuronModel::LIF);
  net.layers[1].w.at(2, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK(first_nonfinite_parameter(net) == "layer1.w[2,3]");
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train(net, tr, te, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("layer1.w[2,3]") != std::string::npos);
  }
  // Finite but huge steps overflow the potentials.
  cfg.epochs = 3;
  cfg.adam.learning_rate = 1e308;
  CHECK_THROWS_AS(train(small_net(NeuronModel::LIF), tr, te, cfg), DivergenceError);
  CHECK(first_nonfinite_parameter(small_net(NeuronModel::LIF)).empty());
}

TEST_CASE("evaluate matches a manual forward") {
  auto [tr, te] = small_task();
  const Network net = small_net(NeuronModel::LIF);
  const EvalResult a = evaluate(net, te, 2);
  const EvalResult b = evaluate(net, te, 50, 4);
  CHECK(a.readout == b.readout);
  CHECK(a.predictions == b.predictions);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
}

TEST_CASE("spike counts are bounded and zero for silent input") {
  auto [tr, te] = small_task();
  const Network net = small_net(NeuronModel::AIA);
  const SpikeCountReport r = spike_count_report(net, te);
  REQUIRE(r.counts.size() == 2);
  for (std::size_t n = 0; n < 2; ++n) CHECK(r.counts[n] <= r.bound(n));
  CHECK(r.bound(0) == te.size() * 10 * 5);

  Dataset silent = te;
  for (double& v : silent.spikes.values()) v = 0.0;
  const SpikeCountReport z = spike_count_report(net, silent);
  for (auto c : z.counts) CHECK(c == 0);
  CHECK(r.to_csv().rfind("layer,width,spikes,bound\n", 0) == 0);
  CHECK(paired_spike_csv(r, z).rfind("layer,width,spikes_a,spikes_b,delta,bound\n", 0) == 0);
}

TEST_CASE("weight shift histogram") {
  const Network a = small_net(NeuronModel::LIF, 1);
  const Network b = small_net(NeuronModel::LIF, 2);
  const auto edges = default_weight_edges(a, b, 21);
  CHECK(edges.size() == 22);
  const WeightShiftReport same = weight_shift_report(a, a, edges);
  for (double d : same.delta) CHECK(d == 0.0);
  const WeightShiftReport diff = weight_shift_report(a, b, edges);
  double total = 0.0;
  std::size_t ca = 0, cb = 0;
  for (std::size_t k = 0; k < diff.delta.size(); ++k) {
    total += diff.delta[k];
    ca += diff.count_a[k];
    cb += diff.count_b[k];
  }
  CHECK(std::abs(total) < 1e-12);
  CHECK(ca == diff.total_weights);
  CHECK(cb == diff.total_weights);
  const Network other = init_network(NetworkSpec::uniform(12, {9, 3}, 5, NeuronParams{}), 1);
  CHECK_THROWS_AS(weight_shift_report(a, other, edges), DimensionError);
}
