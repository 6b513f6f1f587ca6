#include <cmath>
#include <random>

#include "doctest.h"
#include "nlab/model.hpp"

using namespace nlab;

namespace {
const ModelParams unit = ModelParams::qwz(1.0, 0.0, 1.0);
}

TEST_CASE("beta") {
  CHECK(beta({0, 0}, unit) == doctest::Approx(1.0));
  CHECK(beta({pi / 2, 0}, unit) == doctest::Approx(0.0));
  CHECK(beta({pi, pi}, ModelParams::qwz(2.0, 0.0, 1.0)) == doctest::Approx(-6.0));
}

TEST_CASE("gamma") {
  CHECK(std::abs(gamma({0, 0}, unit)) == 0.0);
  const cplx g = gamma({pi / 2, 0}, unit);
  CHECK(g.real() == doctest::Approx(1.0));
  CHECK(g.imag() == doctest::Approx(0.0));
  const double r = 1e-3;
  const cplx s = gamma({0, -r}, unit);
  CHECK(s.real() == 0.0);
  CHECK(s.imag() == doctest::Approx(std::sin(r)).epsilon(1e-15));
  CHECK(s.imag() == doctest::Approx(r).epsilon(1e-6));

  SUBCASE("anisotropic hoppings") {
    const auto gen = ModelParams::general(1.0, 2.0, 0.5, 0.0, 1.0);
    const cplx c = gamma({pi / 2, pi / 2}, gen);
    CHECK(c.real() == doctest::Approx(2.0));
    CHECK(c.imag() == doctest::Approx(-0.5));
  }
}

TEST_CASE("gamma vanishes only where both sines vanish") {
  for (double k1 : {0.0, pi})
    for (double k2 : {0.0, pi}) CHECK(std::abs(gamma({k1, k2}, unit)) < 1e-15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int i = 0; i < 1000; ++i) {
    const Momentum k{u(rng), u(rng)};
    CHECK(std::abs(gamma(k, unit)) == doctest::Approx(std::hypot(std::sin(k.k1), std::sin(k.k2))));
  }
}

TEST_CASE("hamiltonian") {
  SUBCASE("linear limit") {
    const Momentum k{0.3, -0.7};
    const auto H = hamiltonian(k, state_from_xphi(0.2, 1.0), unit);
    CHECK(H(0, 0).real() == doctest::Approx(beta(k, unit)));
    CHECK(H(1, 1).real() == doctest::Approx(-beta(k, unit)));
    CHECK(H(0, 1).real() == doctest::Approx(std::sin(0.3)));
    CHECK(H(0, 1).imag() == doctest::Approx(-std::sin(-0.7)));
  }
  SUBCASE("pole state") {
    const auto H = hamiltonian({0, 0}, {1.0, 0.0}, ModelParams::qwz(1.0, 2.0, 1.0));
    CHECK(H(0, 0).real() == doctest::Approx(3.0));
    CHECK(H(1, 1).real() == doctest::Approx(-1.0));
    CHECK(std::abs(H(0, 1)) == 0.0);
    CHECK(std::abs(H(1, 0)) == 0.0);
  }
  SUBCASE("hermitian for random input") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
      const auto params = ModelParams::qwz(0.5 + u(rng) * 0.4, 5 * u(rng), 1.5 + 1.4 * u(rng));
      const auto H = hamiltonian({pi * u(rng), pi * u(rng)}, state_from_xphi(u(rng), pi * u(rng)), params);
      CHECK(H(0, 1) == std::conj(H(1, 0)));
      CHECK(H(0, 0).imag() == 0.0);
      CHECK(H(1, 1).imag() == 0.0);
    }
  }
}

TEST_CASE("state_from_xphi") {
  const auto north = state_from_xphi(1.0, 2.3);
  CHECK(north.psi1 == cplx(1.0, 0.0));
  CHECK(std::abs(north.psi2) == 0.0);

  const auto eq = state_from_xphi(0.0, pi / 2);
  CHECK(eq.psi1.real() == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(eq.psi1.imag() == 0.0);
  CHECK(eq.psi2.real() == doctest::Approx(0.0));
  CHECK(eq.psi2.imag() == doctest::Approx(1 / std::sqrt(2.0)));

  CHECK_THROWS_AS(state_from_xphi(1.0 + 1e-9, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(state_from_xphi(-1.5, 0.0), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const auto s = state_from_xphi(u(rng), 10 * u(rng));
    CHECK(std::abs(s.norm_sq() - 1.0) < 1e-12);
    CHECK(s.psi1.imag() == 0.0);
    CHECK(s.psi1.real() >= 0.0);
  }
}

TEST_CASE("xphi_from_state") {
  const double h = 1 / std::sqrt(2.0);
  const auto a = xphi_from_state({h, cplx(0, h)});
  CHECK(a.x == doctest::Approx(0.0));
  CHECK(a.phi == doctest::Approx(pi / 2));
  CHECK_FALSE(a.degenerate);

  const auto south = xphi_from_state({0.0, 1.0});
  CHECK(south.x == -1.0);
  CHECK(south.phi == 0.0);
  CHECK(south.degenerate);

  CHECK_THROWS_AS(xphi_from_state({1.0, 1.0}), std::invalid_argument);

  SUBCASE("round trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 1000; ++i) {
      const double x = 0.999 * u(rng);
      const double phi = pi * u(rng);
      const auto back = xphi_from_state(state_from_xphi(x, phi));
      CHECK(back.x == doctest::Approx(x).epsilon(1e-12));
      CHECK(std::abs(reduce_mod_2pi(back.phi - phi)) < 1e-12);
    }
  }
  SUBCASE("global phase drops out") {
    const auto s = state_from_xphi(0.4, -1.1);
    const cplx w = std::polar(1.0, 0.77);
    const auto back = xphi_from_state({w * s.psi1, w * s.psi2});
    CHECK(back.x == doctest::Approx(0.4));
    CHECK(back.phi == doctest::Approx(-1.1));
  }
}

TEST_CASE("reduce_mod_2pi") {
  CHECK(reduce_mod_2pi(-pi) == pi);
  CHECK(reduce_mod_2pi(pi) == pi);
  CHECK(reduce_mod_2pi(2 * pi) == doctest::Approx(0.0));
  CHECK(reduce_mod_2pi(0.5 * pi) == doctest::Approx(0.5 * pi));
  CHECK(reduce_mod_2pi(-3 * pi) == doctest::Approx(pi));
  CHECK(reduce_mod_2pi(7.0) == doctest::Approx(7.0 - 2 * pi));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ModelParams::qwz(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams::qwz(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams::qwz(1.0, 1.0, -2.0), std::invalid_argument);
  const auto p = ModelParams::qwz(2.0, 3.0, 1.5);
  CHECK(p.J1() == 2.0);
  CHECK(p.J2() == 2.0);
  CHECK(p.with_g(-1.0).g() == -1.0);
  CHECK(p.with_g(-1.0).p() == 1.5);
}
