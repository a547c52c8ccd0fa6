#include <doctest.h>

#include <cmath>

#include "aia/errors.hpp"
#include "aia/neuron.hpp"
#include "aia/random.hpp"

using namespace aia;

namespace {

NeuronState one(double u, double o) { return {{u}, {o}}; }
std::vector<double> vec(double x) { return {x}; }

}  // namespace

TEST_CASE("lif_step examples") {
  const NeuronParams p;  // lambda 0.5, v_th 1
  NeuronState s = lif_step(one(0.8, 0), vec(0.4), p);
  CHECK(s.u[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(s.o[0] == 0.0);
  s = lif_step(one(0.8, 0), vec(0.7), p);
  CHECK(s.u[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(s.o[0] == 1.0);
  s = lif_step(one(1.1, 1), vec(0.0), p);
  CHECK(s.u[0] == 0.0);
  CHECK(s.o[0] == 0.0);
}

TEST_CASE("if_step examples") {
  const NeuronParams p = NeuronParams::for_model(NeuronModel::IF);
  NeuronState s = if_step(one(0.5, 0), vec(0.3), p);
  CHECK(s.u[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(s.o[0] == 0.0);
  s = if_step(one(0.5, 0), vec(0.5), p);
  CHECK(s.u[0] == 1.0);
  CHECK(s.o[0] == 1.0);  // u == v_th fires
  CHECK(if_step(one(0, 0), vec(0), p) == one(0, 0));
}

TEST_CASE("plif_step examples") {
  NeuronParams p = NeuronParams::for_model(NeuronModel::PLIF);
  NeuronState s = plif_step(one(0.8, 0), vec(0.4), p);
  CHECK(s.u[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(s.o[0] == 0.0);
  p.plif_raw = 60.0;  // leak rounds to 1
  CHECK(plif_step(one(0.3, 0), vec(0.2), p) == if_step(one(0.3, 0), vec(0.2), p));
  p.plif_raw = -60.0;
  CHECK(plif_step(one(0.9, 0), vec(0.2), p).u[0] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("aia and cached steps") {
  const NeuronParams p = NeuronParams::for_model(NeuronModel::AIA);
  NeuronState s = aia_step(one(0.8, 0), vec(0.7), p);
  CHECK(s.u[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(s.o[0] == 1.0);
  CHECK(aia_step(one(0, 0), vec(0), p) == one(0, 0));

  const NeuronParams c = NeuronParams::for_model(NeuronModel::CachedAIA);
  s = cached_aia_step(one(0, 0), vec(0.6), c, CacheBeta{{2.0}});
  CHECK(s.u[0] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(s.o[0] == 1.0);
  s = cached_aia_step(one(0.6, 0), vec(5.0), c, CacheBeta{{0.0}});
  CHECK(s.u[0] == 0.5 * 0.6);
  CHECK_THROWS_AS(cached_aia_step(one(0, 0), vec(1), c, CacheBeta{{1, 1}}), DimensionError);
}

TEST_CASE("forward equivalences hold bit-exactly") {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    NeuronState s = NeuronState::zeros(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.u[i] = rng.uniform(-2, 2);
      s.o[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
      x[i] = rng.uniform(-2, 2);
    }
    NeuronParams lif;
    lif.lambda = rng.uniform(0, 1);
    NeuronParams aia = lif;
    aia.model = NeuronModel::AIA;
    CHECK(aia_step(s, x, aia) == lif_step(s, x, lif));
    CHECK(cached_aia_step(s, x, lif, CacheBeta::ones(n)) == lif_step(s, x, lif));
    NeuronParams lif1 = lif;
    lif1.lambda = 1.0;
    CHECK(if_step(s, x, lif) == lif_step(s, x, lif1));
    const NeuronState next = lif_step(s, x, lif);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK((next.o[i] == 0.0 || next.o[i] == 1.0));
      if (s.o[i] == 1.0) CHECK(next.u[i] == x[i]);  // hard reset
    }
  }
}

TEST_CASE("surrogate derivative window") {
  NeuronParams p;
  const std::vector<double> u{1.0, 0.4, 1.5, 0.5, 1.51};
  const std::vector<double> d = surrogate_spike_derivative(u, p);
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == 1.0);
  CHECK(d[3] == 1.0);
  CHECK(d[4] == 0.0);

  // Integrates to one over u for any width (midpoint rule).
  for (double a : {0.25, 1.0, 3.0}) {
    p.surrogate_width = a;
    const double lo = p.v_th - 2 * a, hi = p.v_th + 2 * a;
    const int steps = 400000;
    const double du = (hi - lo) / steps;
    double integral = 0.0;
    for (int k = 0; k < steps; ++k) integral += spike_derivative(lo + (k + 0.5) * du, p, SpikeMode::Hard) * du;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("non-finite input and parameter validation") {
  const double nan = std::nan("");
  CHECK_THROWS_AS(lif_step(one(0, 0), vec(nan), NeuronParams{}), NumericError);
  NeuronParams p;
  p.lambda = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = NeuronParams::for_model(NeuronModel::IF);
  CHECK(p.lambda == 1.0);
  p.lambda = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = NeuronParams{};
  p.surrogate_width = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK(parse_neuron_model("Cached-AIA") == NeuronModel::CachedAIA);
  CHECK_THROWS_AS(parse_neuron_model("lstm"), ConfigError);
}
