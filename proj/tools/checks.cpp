#include "checks.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "nlab/band.hpp"
#include "nlab/dynamics.hpp"
#include "nlab/phases.hpp"

namespace nlab::cli {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct Draws {
  std::mt19937_64 rng;
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  Momentum k(double span = pi) { return {uniform(-span, span), uniform(-span, span)}; }
  ModelParams params() { return ModelParams::qwz(1.0, uniform(-6.0, 6.0), uniform(0.3, 3.0)); }
};

CheckResult model_hermiticity(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto params = d.params();
    const auto H = hamiltonian(d.k(), state_from_xphi(d.uniform(-1, 1), d.uniform(-pi, pi)), params);
    worst = std::max({worst, std::abs(H(0, 1) - std::conj(H(1, 0))), std::abs(H(0, 0).imag()),
                      std::abs(H(1, 1).imag())});
  }
  return {"model", "hermiticity", worst == 0.0, fmt("max |H - H^+| = %.3g over 1000 draws", worst)};
}

CheckResult model_normalization(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    worst = std::max(worst, std::abs(state_from_xphi(d.uniform(-1, 1), d.uniform(-10, 10)).norm_sq() - 1.0));
  }
  return {"model", "normalization", worst < 1e-14, fmt("max | |psi|^2 - 1 | = %.3g", worst)};
}

CheckResult band_eigen_residual(Draws& d) {
  double worst = 0.0;
  int roots = 0;
  for (int i = 0; i < 100; ++i) {
    const auto params = d.params();
    const Momentum k = d.k();
    for (const auto& s : solve_all_x(k, params)) {
      worst = std::max(worst, eigen_residual(s.x, s.phi, s.energy, k, params));
      ++roots;
    }
  }
  return {"band", "eigen-residual", worst <= 1e-10, fmt("max residual %.3g over %.0f roots", worst, roots)};
}

CheckResult band_gauge(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto params = d.params();
    const Momentum k = d.k();
    const double ag = std::arg(gamma(k, params));
    for (const auto& s : solve_all_x(k, params)) {
      if (s.sheet == 0) continue;
      const double expect = s.sheet > 0 ? -ag : -ag + pi;
      worst = std::max(worst, std::abs(reduce_mod_2pi(s.phi - expect)));
    }
  }
  return {"band", "gauge phi = -arg(gamma) mod pi", worst < 1e-12, fmt("max deviation %.3g", worst)};
}

CheckResult band_oddness(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double p = d.uniform(0.3, 3.0);
    const double g = d.uniform(2.0, 10.0);
    const auto a = solve_x0(ModelParams::qwz(1.0, g, p));
    const auto b = solve_x0(ModelParams::qwz(1.0, -g, p));
    worst = std::max(worst, std::abs(a.x0 + b.x0));
  }
  return {"band", "x0(-g) = -x0(g)", worst < 1e-12, fmt("max |x0(g) + x0(-g)| = %.3g", worst)};
}

CheckResult band_linear_limit(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto params = ModelParams::qwz(1.0, 0.0, d.uniform(0.3, 3.0));
    const Momentum k = d.k();
    const double b = beta(k, params);
    const double r = std::hypot(b, std::abs(gamma(k, params)));
    if (r < 1e-6) continue;
    const auto roots = solve_all_x(k, params);
    if (roots.size() != 2) return {"band", "linear limit", false, "expected two roots"};
    // lower band has x = -beta/r, upper x = +beta/r
    for (const auto& s : roots) {
      const double expect = s.energy < 0 ? -b / r : b / r;
      worst = std::max({worst, std::abs(s.x - expect), std::abs(std::abs(s.energy) - r)});
    }
  }
  return {"band", "linear limit", worst < 1e-12, fmt("max deviation %.3g", worst)};
}

CheckResult phases_regime(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double p = d.uniform(0.3, 3.0);
    const double sign = d.uniform(0, 1) < 0.5 ? -1.0 : 1.0;
    const auto params = ModelParams::qwz(1.0, sign * d.uniform(2.0, 8.0), p);
    const auto cone = solve_x0(params);
    worst = std::max(worst, std::abs(dyn_phase_diff_leading(cone, params) - dyn_phase_diff_regime(cone, params)));
  }
  return {"phases", "regime consistency", worst < 1e-9, fmt("max difference %.3g over 500 draws", worst)};
}

CheckResult phases_plateau(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double g = d.uniform(2.05, 6.0);
    for (double s : {1.0, -1.0}) {
      const auto params = ModelParams::qwz(1.0, s * g, 1.0);
      worst = std::max(worst, std::abs(ab_phase_leading(solve_x0(params), params).theta_AB_mod() - pi));
    }
  }
  return {"phases", "p = 1 plateau at pi", worst < 1e-9, fmt("max |theta_AB - pi| = %.3g", worst)};
}

CheckResult phases_antisymmetry(Draws& d) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double p = d.uniform(0.3, 3.0);
    const double g = d.uniform(2.0, 8.0);
    const auto pp = ModelParams::qwz(1.0, g, p);
    const auto pm = ModelParams::qwz(1.0, -g, p);
    const double a = dyn_phase_diff_leading(solve_x0(pp), pp);
    const double b = dyn_phase_diff_leading(solve_x0(pm), pm);
    worst = std::max(worst, std::abs(a + b));
  }
  return {"phases", "delta_theta_D(-g) = -delta_theta_D(g)", worst < 1e-9, fmt("max |sum| = %.3g", worst)};
}

CheckResult phases_continuity(Draws&) {
  bool ok = true;
  double widest = 0.0;
  for (double p : {0.5, 1.5, 2.0, 2.5, 3.0}) {
    auto jump = [&](double d) {
      const auto above = ModelParams::qwz(1.0, 2.0 + d, p);
      const auto below = ModelParams::qwz(1.0, 2.0 - d, p);
      return std::abs(reduce_mod_2pi(ab_phase_leading(solve_x0(above), above).theta_AB() -
                                     ab_phase_leading(solve_x0(below), below).theta_AB()));
    };
    const double j1 = jump(0.1), j2 = jump(0.05), j3 = jump(0.025);
    ok = ok && j1 > j2 && j2 > j3 && jump(1e-8) < 1e-2;
    widest = std::max(widest, j2);
  }
  return {"phases", "continuity across 2B for p != 1", ok,
          fmt("jumps shrink with delta; largest at delta = 0.05B is %.3g rad", widest)};
}

CheckResult dynamics_norm(Draws&) {
  const auto params = ModelParams::qwz(1.0, 4.0, 1.0);
  PathSpec spec;
  spec.epsilon = 1e-2;
  const auto r = evolve(spec, params, default_seed(spec, params));
  return {"dynamics", "norm conservation", r.max_norm_drift < 1e-10, fmt("max drift %.3g", r.max_norm_drift)};
}

CheckResult dynamics_order(Draws&) {
  const auto params = ModelParams::qwz(1.0, 4.0, 1.0);
  PathSpec spec;
  spec.epsilon = 0.1;
  const auto seed = default_seed(spec, params);
  auto run = [&](double dt) {
    PathSpec s = spec;
    s.dt = dt;
    return evolve(s, params, seed).theta_total;
  };
  const double ref = run(2.5e-4);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double dts[] = {1e-2, 5e-3, 2.5e-3};
  for (double dt : dts) {
    const double x = std::log(dt);
    const double y = std::log(std::abs(run(dt) - ref));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  return {"dynamics", "integrator order", std::abs(slope - 2.0) <= 0.2, fmt("log-log slope %.3f", slope)};
}

CheckResult dynamics_deviation(Draws&) {
  const auto params = ModelParams::qwz(1.0, 4.0, 1.0);
  PathSpec spec;
  spec.epsilon = 2e-3;
  spec.schedule = Schedule::smooth;
  const auto r = deviation_check(spec, params, 0.5 * spec.duration());
  return {"dynamics", "first-order deviation", r.relative_error < 0.1,
          fmt("relative error %.3g at eps = 2e-3", r.relative_error)};
}

using Check = std::function<CheckResult(Draws&)>;

const std::vector<std::pair<std::string, std::vector<Check>>>& suites() {
  static const std::vector<std::pair<std::string, std::vector<Check>>> all = {
      {"model", {model_hermiticity, model_normalization}},
      {"band", {band_eigen_residual, band_gauge, band_oddness, band_linear_limit}},
      {"phases", {phases_regime, phases_plateau, phases_antisymmetry, phases_continuity}},
      {"dynamics", {dynamics_norm, dynamics_order, dynamics_deviation}},
  };
  return all;
}

}  // namespace

bool known_suite(const std::string& suite) {
  if (suite == "all") return true;
  for (const auto& [name, checks] : suites())
    if (name == suite) return true;
  return false;
}

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (const auto& [name, checks] : suites()) {
    if (suite != "all" && suite != name) continue;
    Draws d{std::mt19937_64(seed)};
    for (const auto& check : checks) {
      try {
        out.push_back(check(d));
      } catch (const std::exception& e) {
        out.push_back({name, "(exception)", false, e.what()});
      }
    }
  }
  return out;
}

}  // namespace nlab::cli
