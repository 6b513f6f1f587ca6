#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "nlab/band.hpp"

using namespace nlab;

namespace {

// Roots of the squared scalar equation at p = 2, g = 2.5B, from a 10^6-point
// mpmath scan (tests/oracles/band_oracle.py).
struct OracleRoot {
  double x, E;
};
const OracleRoot scan_k2_001pi[] = {{-0.99153808923464143, 1.481430888935961},
                                    {-0.83823178928180208, 1.1217465558711852},
                                    {-0.76934313349806312, 0.9457617813761521},
                                    {0.99990251542933615, 3.4994821565593189}};
const OracleRoot scan_k2_0005pi[] = {{-0.99799410413052698, 1.4956088328277811},
                                     {-0.8177546320850982, 1.0702418124503489},
                                     {-0.7840295059242669, 0.98388406503192107},
                                     {0.99997563016923512, 3.4998705379825341}};

Momentum random_k(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-pi, pi);
  return {u(rng), u(rng)};
}

const EigenSolution& closest(const std::vector<EigenSolution>& roots, double x) {
  return *std::min_element(roots.begin(), roots.end(),
                           [x](const auto& a, const auto& b) { return std::abs(a.x - x) < std::abs(b.x - x); });
}

}  // namespace

TEST_CASE("residual_f") {
  SUBCASE("linear roots") {
    const auto params = ModelParams::qwz(1.0, 0.0, 1.0);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const Momentum k = random_k(rng);
      const double b = beta(k, params);
      const double x = b / std::hypot(b, std::abs(gamma(k, params)));
      CHECK(std::abs(residual_f(x, k, params)) < 1e-12);
    }
  }
  SUBCASE("vertex") {
    const auto params = ModelParams::qwz(1.0, 4.0, 1.0);
    CHECK(residual_f(-0.5, {0, 0}, params) == doctest::Approx(0.0).epsilon(1e-14));
    const auto p2 = ModelParams::qwz(1.0, 3.0, 2.0);
    const double x0 = solve_x0(p2).x0;
    CHECK(delta_prime(x0, {0, 0}, p2) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(std::abs(residual_f(x0, {0, 0}, p2)) < 1e-24);
  }
  SUBCASE("pole at x = 0") {
    const auto params = ModelParams::qwz(1.0, 2.5, 2.0);
    CHECK(std::isinf(residual_f(0.0, {0.1, 0.2}, params)));
    CHECK(std::isfinite(residual_f(1e-7, {0.1, 0.2}, params)));
  }
}

TEST_CASE("solve_all_x: linear limit") {
  const auto params = ModelParams::qwz(1.0, 0.0, 1.0);
  const auto roots = solve_all_x({pi / 2, 0}, params);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0].energy == doctest::Approx(-1.0));
  CHECK(roots[1].energy == doctest::Approx(1.0));

  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Momentum k = random_k(rng);
    const double b = beta(k, params);
    const double r = std::hypot(b, std::abs(gamma(k, params)));
    const auto rs = solve_all_x(k, params);
    REQUIRE(rs.size() == 2);
    // lower band sits at -beta/r, upper at +beta/r
    const auto& lo = rs[0].energy < rs[1].energy ? rs[0] : rs[1];
    const auto& hi = rs[0].energy < rs[1].energy ? rs[1] : rs[0];
    CHECK(std::abs(lo.x + b / r) < 1e-12);
    CHECK(std::abs(hi.x - b / r) < 1e-12);
    CHECK(std::abs(lo.energy + r) < 1e-12);
    CHECK(std::abs(hi.energy - r) < 1e-12);
  }
}

TEST_CASE("solve_all_x: dense-scan oracle") {
  const auto params = ModelParams::qwz(1.0, 2.5, 2.0);
  auto compare = [&](Momentum k, const OracleRoot* expect, std::size_t n) {
    const auto roots = solve_all_x(k, params);
    REQUIRE(roots.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(roots[i].x == doctest::Approx(expect[i].x).epsilon(1e-10));
      CHECK(roots[i].energy == doctest::Approx(expect[i].E).epsilon(1e-9));
      CHECK(roots[i].residual <= 1e-10);
    }
  };
  compare({0, 0.01 * pi}, scan_k2_001pi, 4);
  compare({0, 0.005 * pi}, scan_k2_0005pi, 4);
}

TEST_CASE("solve_all_x: vertex present for |g| > 2B") {
  for (double g : {2.5, 3.0, 4.0, -2.5, -4.0}) {
    for (double p : {0.5, 1.0, 2.0}) {
      const auto params = ModelParams::qwz(1.0, g, p);
      const auto cone = solve_x0(params);
      const auto roots = solve_all_x({0, 0}, params);
      CHECK(std::abs(closest(roots, cone.x0).x - cone.x0) < 1e-10);
      CHECK(closest(roots, cone.x0).energy == doctest::Approx(cone.E0));
    }
  }
}

TEST_CASE("solve_all_x: every root is an eigenstate on its sheet") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto params = ModelParams::qwz(1.0, -6 + 12 * u(rng), 0.3 + 2.7 * u(rng));
    const Momentum k = random_k(rng);
    const double ag = std::arg(gamma(k, params));
    for (const auto& s : solve_all_x(k, params)) {
      CHECK(s.residual <= 1e-10);
      CHECK(eigen_residual(s.x, s.phi, s.energy, k, params) <= 1e-10);
      CHECK(s.x >= -1.0);
      CHECK(s.x <= 1.0);
      if (s.sheet != 0) {
        const double expect = s.sheet > 0 ? -ag : -ag + pi;
        CHECK(std::abs(reduce_mod_2pi(s.phi - expect)) < 1e-10);
      }
      ++checked;
    }
  }
  CHECK(checked > 600);
}

TEST_CASE("energy_from_x") {
  CHECK(energy_from_x(-0.5, {0, 0}, ModelParams::qwz(1.0, 4.0, 1.0)) == doctest::Approx(2.0));

  const auto lin = ModelParams::qwz(1.0, 0.0, 2.0);
  const Momentum k{0.4, 1.1};
  const double b = beta(k, lin);
  const double r = std::hypot(b, std::abs(gamma(k, lin)));
  CHECK(energy_from_x(b / r, k, lin) == doctest::Approx(r));
  CHECK(energy_from_x(-b / r, k, lin) == doctest::Approx(-r));

  SUBCASE("series near x = 0") {
    // beta is ~1e-16 on k1 = pi/2, k2 = 0, so beta / x is negligible at |x| >= 1e-7
    for (double p : {0.5, 1.0, 1.7, 3.0}) {
      const auto params = ModelParams::qwz(1.0, 2.2, p);
      const Momentum kb{pi / 2, 0};
      CHECK(energy_from_x(9e-7, kb, params) == doctest::Approx(energy_from_x(1.1e-6, kb, params)).epsilon(1e-10));
      CHECK(energy_from_x(1e-7, kb, params) == doctest::Approx(energy_from_x(1e-5, kb, params)).epsilon(1e-8));
      CHECK(energy_from_x(-1e-7, kb, params) == doctest::Approx(energy_from_x(-1e-5, kb, params)).epsilon(1e-8));
      CHECK(energy_from_x(1e-7, kb, params) == doctest::Approx(2.2 * std::pow(2.0, -p) * (p + 1)).epsilon(1e-8));
    }
  }
}

TEST_CASE("solve_x0") {
  const auto k1 = solve_x0(ModelParams::qwz(1.0, 4.0, 1.0));
  CHECK(k1.exists);
  CHECK(k1.x0 == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(k1.E0 == doctest::Approx(2.0));

  for (double p : {0.5, 1.0, 2.0, 3.0}) {
    const auto c = solve_x0(ModelParams::qwz(1.0, 1.5, p));
    CHECK_FALSE(c.exists);
    CHECK(c.x0 == -1.0);
    CHECK(solve_x0(ModelParams::qwz(1.0, -1.5, p)).x0 == 1.0);
  }

  const auto edge = solve_x0(ModelParams::qwz(1.0, 2.0, 2.0));
  CHECK(edge.exists);
  CHECK(edge.x0 == doctest::Approx(-1.0).epsilon(1e-12));

  const auto lin = solve_x0(ModelParams::qwz(1.0, 0.0, 2.0));
  CHECK_FALSE(lin.exists);
  CHECK(lin.linear_limit);
  CHECK(lin.x0 == 1.0);

  SUBCASE("oracle cones") {
    CHECK(solve_x0(ModelParams::qwz(1.0, 2.5, 0.5)).x0 == doctest::Approx(-0.9329523031752481).epsilon(1e-12));
    CHECK(solve_x0(ModelParams::qwz(1.0, 4.0, 1.5)).x0 == doctest::Approx(-0.47611090819858083).epsilon(1e-12));
    CHECK(solve_x0(ModelParams::qwz(1.0, 3.0, 2.0)).x0 == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("residual and oddness") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
      const double p = 0.25 + 2.75 * u(rng);
      const double g = 2.0 + 8.0 * u(rng);
      const auto params = ModelParams::qwz(1.0, g, p);
      const auto c = solve_x0(params);
      REQUIRE(c.exists);
      const double lhs = std::pow((1 + c.x0) / 2, p) - std::pow((1 - c.x0) / 2, p);
      CHECK(std::abs(lhs + 2.0 / g) <= 1e-12);
      CHECK(std::abs(c.x0 + solve_x0(ModelParams::qwz(1.0, -g, p)).x0) <= 1e-12);
    }
  }
  SUBCASE("closed form at p = 1") {
    for (int i = 0; i < 100; ++i) {
      const double g = 2.0 + 8.0 * i / 99.0;
      CHECK(std::abs(solve_x0(ModelParams::qwz(1.0, g, 1.0)).x0 + 2.0 / g) <= 1e-12);
    }
  }
}

TEST_CASE("perturbative_expansion") {
  const auto params = ModelParams::qwz(1.0, 2.5, 2.0);
  const auto cone = solve_x0(params);

  const auto at0 = perturbative_expansion({0, 0}, params);
  CHECK(at0.chi == 0.0);
  CHECK(at0.energy_plus == doctest::Approx(cone.E0));
  CHECK(at0.energy_minus == doctest::Approx(cone.E0));

  SUBCASE("matches exact cone roots") {
    const auto pert = perturbative_expansion({0, 0.005 * pi}, params);
    // the two cone roots straddle x0; the perturbed x values are x0 -+ chi
    const double e_lo = scan_k2_0005pi[2].E;
    const double e_hi = scan_k2_0005pi[1].E;
    CHECK(std::abs(pert.energy_plus - e_lo) / e_lo < 1e-2);
    CHECK(std::abs(pert.energy_minus - e_hi) / e_hi < 1e-2);
  }
  SUBCASE("linear in |k|") {
    double prev = 0.0;
    for (double r : {4e-3, 2e-3, 1e-3, 5e-4}) {
      const double chi = perturbative_expansion({0, r}, params).chi;
      if (prev > 0) CHECK(prev / chi == doctest::Approx(2.0).epsilon(1e-3));
      prev = chi;
    }
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(perturbative_expansion({0, 0.01}, ModelParams::qwz(1.0, 1.5, 2.0)), SolverError);
    CHECK_THROWS_AS(perturbative_expansion({0, 0.01}, ModelParams::qwz(1.0, 2.0, 2.0)), SolverError);
    CHECK_THROWS_AS(perturbative_expansion({0, 0.2 * pi}, params), SolverError);
  }
  SUBCASE("error shrinks at least quadratically with the grid radius") {
    auto max_err = [&](double R) {
      double worst = 0.0;
      for (int i = -4; i <= 4; ++i) {
        for (int j = -4; j <= 4; ++j) {
          const Momentum k{R * i / 4, R * j / 4};
          if (i == 0 && j == 0) continue;
          const auto pert = perturbative_expansion(k, params);
          const auto roots = solve_all_x(k, params);
          // exact cone roots are the two closest in x to the perturbed ones
          for (double e : {pert.energy_plus, pert.energy_minus}) {
            const double xp = e == pert.energy_plus ? cone.x0 + pert.chi : cone.x0 - pert.chi;
            worst = std::max(worst, std::abs(closest(roots, xp).energy - e));
          }
        }
      }
      return worst;
    };
    const double e1 = max_err(0.02 * pi);
    const double e2 = max_err(0.01 * pi);
    const double e3 = max_err(0.005 * pi);
    CHECK(e1 / e2 >= 3.6);
    CHECK(e2 / e3 >= 3.6);
  }
}

TEST_CASE("continue_branch follows a root") {
  const auto params = ModelParams::qwz(1.0, 2.5, 2.0);
  const auto roots = solve_all_x({0, 0.01 * pi}, params);
  for (const auto& r : roots) {
    if (r.sheet == 0) continue;
    const auto next = continue_branch({0, 0.0101 * pi}, params, r.sheet, r.x);
    REQUIRE(next.has_value());
    CHECK(std::abs(next->x - r.x) < 1e-2);
    CHECK(next->residual <= 1e-10);
  }
}

TEST_CASE("spectrum_slice topology on the k1 = 0 section") {
  std::vector<Momentum> path;
  for (int i = 0; i <= 200; ++i) path.push_back({0.0, -0.1 * pi + 0.2 * pi * i / 200});
  auto energies_at = [](const std::vector<SpectrumRow>& rows, double k2) {
    std::vector<double> es;
    for (const auto& r : rows)
      if (std::abs(r.k.k2 - k2) < 1e-12) es.push_back(r.energy);
    std::sort(es.begin(), es.end());
    return es;
  };

  SUBCASE("g = B: two smooth bands") {
    const auto rows = spectrum_slice(path, ModelParams::qwz(1.0, 1.0, 2.0));
    std::set<int> ids;
    for (const auto& r : rows) ids.insert(r.branch_id);
    CHECK(ids.size() == 2);
    CHECK(rows.size() == 2 * path.size());
    double gap = 1e9;
    for (const auto& k : path) {
      const auto es = energies_at(rows, k.k2);
      REQUIRE(es.size() == 2);
      gap = std::min(gap, es[1] - es[0]);
    }
    CHECK(gap > 1.0);
    // quadratic at the bottom: E(2h) - E(0) is four times E(h) - E(0)
    const auto e0 = energies_at(rows, path[100].k2)[0];
    const auto e1 = energies_at(rows, path[101].k2)[0];
    const auto e2 = energies_at(rows, path[102].k2)[0];
    CHECK((e2 - e0) / (e1 - e0) == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("g = 2B: kink on the lower band") {
    const auto rows = spectrum_slice(path, ModelParams::qwz(1.0, 2.0, 2.0));
    const auto e0 = energies_at(rows, path[100].k2)[0];
    const auto e1 = energies_at(rows, path[101].k2)[0];
    const auto e2 = energies_at(rows, path[102].k2)[0];
    const auto em = energies_at(rows, path[99].k2)[0];
    CHECK(e1 < e0);
    CHECK(em == doctest::Approx(e1));
    // sub-linear cusp: doubling |k| less than doubles the drop
    CHECK((e2 - e0) / (e1 - e0) > 1.2);
    CHECK((e2 - e0) / (e1 - e0) < 2.0);
  }
  SUBCASE("g = 2.5B: cone in the lower band") {
    const auto params = ModelParams::qwz(1.0, 2.5, 2.0);
    const auto cone = solve_x0(params);
    const auto rows = spectrum_slice(path, params);
    // cone roots on either side of the vertex, with perturbative columns filled
    int with_pert = 0;
    for (const auto& r : rows) with_pert += r.energy_pert_plus.has_value();
    CHECK(with_pert == static_cast<int>(rows.size()));
    CHECK(energies_at(rows, path[100].k2).front() == doctest::Approx(cone.E0));
  }
  SUBCASE("g = -2.5B: cone in the upper band") {
    const auto params = ModelParams::qwz(1.0, -2.5, 2.0);
    const auto cone = solve_x0(params);
    CHECK(cone.x0 > 0);
    const auto at0 = energies_at(spectrum_slice({{0, 0}}, params), 0.0);
    CHECK(at0.back() == doctest::Approx(cone.E0));
    // two sheets split linearly away from the vertex
    const auto r1 = solve_all_x({0, 0.002 * pi}, params);
    const auto r2 = solve_all_x({0, 0.004 * pi}, params);
    auto split = [&](const std::vector<EigenSolution>& rs) {
      std::vector<double> es;
      for (const auto& r : rs)
        if (std::abs(r.x - cone.x0) < 0.05) es.push_back(r.energy);
      REQUIRE(es.size() == 2);
      return std::abs(es[1] - es[0]);
    };
    CHECK(split(r2) / split(r1) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("spectrum_csv header") {
  const auto csv = spectrum_csv(spectrum_slice({{0, 0.05}}, ModelParams::qwz(1.0, 1.0, 2.0)));
  CHECK(csv.rfind("k1,k2,branch_id,x,E,E_pert_plus,E_pert_minus\n", 0) == 0);
  // outside the cone regime the perturbative columns stay empty
  CHECK(csv.find(",,\n") != std::string::npos);
}
