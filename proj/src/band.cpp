#include "nlab/band.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nlab/csv.hpp"

namespace nlab {

namespace {

constexpr double kSeriesThreshold = 1e-6;

// (((1+x)/2)^q - ((1-x)/2)^q) / x, with the odd Taylor series near x = 0.
double half_power_ratio(double x, double q) {
  if (std::abs(x) < kSeriesThreshold) {
    const double c1 = q;
    const double c3 = q * (q - 1.0) * (q - 2.0) / 6.0;
    const double c5 = c3 * (q - 3.0) * (q - 4.0) / 20.0;
    const double x2 = x * x;
    return std::pow(2.0, 1.0 - q) * (c1 + x2 * (c3 + x2 * c5));
  }
  return (std::pow(0.5 * (1.0 + x), q) - std::pow(0.5 * (1.0 - x), q)) / x;
}

// delta_prime / x; infinite at x = 0 unless beta vanishes.
double delta_prime_over_x(double x, Momentum k, const ModelParams& params) {
  const double b = beta(k, params);
  const double nl = 0.5 * params.g() * half_power_ratio(x, params.p());
  if (x == 0.0) return b == 0.0 ? nl : std::copysign(std::numeric_limits<double>::infinity(), b);
  return b / x + nl;
}

// Bisection on [lo, hi] with f(lo), f(hi) of opposite sign. The width
// target shrinks near x = +-1, where psi depends on sqrt(1 -+ x), and near
// x = 0, where E carries beta / x.
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double x_tol) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= x_tol * std::min({1.0, 1.0 - std::abs(mid), std::abs(mid)})) break;
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<EigenSolution> make_solution(double x, Momentum k, const ModelParams& params, int sheet,
                                           const SolverOptions& opts) {
  const bool gamma_zero = std::abs(gamma(k, params)) == 0.0;
  EigenSolution s;
  s.x = std::clamp(x, -1.0, 1.0);
  s.sheet = gamma_zero ? 0 : sheet;
  s.phi = gamma_zero ? 0.0 : sheet_phase(k, params, sheet);
  s.energy = energy_from_x(s.x, k, params);
  if (!std::isfinite(s.energy)) return std::nullopt;
  s.residual = eigen_residual(s.x, s.phi, s.energy, k, params);
  if (!(s.residual <= opts.accept_residual)) return std::nullopt;
  return s;
}

void sheet_roots(Momentum k, const ModelParams& params, int sheet, const SolverOptions& opts,
                 std::vector<EigenSolution>& out) {
  const int n = std::max(opts.intervals, 2);
  auto f = [&](double x) { return sheet_residual(x, k, params, sheet); };
  auto node = [n](int i) { return -1.0 + 2.0 * static_cast<double>(i) / n; };

  std::vector<double> fv(n + 1);
  for (int i = 0; i <= n; ++i) fv[i] = f(node(i));

  auto accept = [&](double x) {
    if (auto s = make_solution(x, k, params, sheet, opts)) out.push_back(*s);
  };

  for (int i = 0; i <= n; ++i) {
    if (fv[i] == 0.0) accept(node(i));
  }
  // one-sided limits at the x = 0 pole of beta / x
  auto side = [&](int i, bool from_right) {
    if (std::isfinite(fv[i]) || node(i) != 0.0) return fv[i];
    return from_right ? fv[i] : -fv[i];
  };
  for (int i = 0; i < n; ++i) {
    const double a = side(i, true), b = side(i + 1, false);
    if (std::isnan(a) || std::isnan(b) || a == 0.0 || b == 0.0) continue;
    if (std::isinf(a) && std::isinf(b)) continue;
    if ((a < 0.0) != (b < 0.0)) accept(bisect(f, node(i), node(i + 1), a, opts.x_tol));
  }
}

}  // namespace

double delta_prime(double x, Momentum k, const ModelParams& params) {
  const double p = params.p();
  return beta(k, params) + 0.5 * params.g() * (std::pow(0.5 * (1.0 + x), p) - std::pow(0.5 * (1.0 - x), p));
}

double residual_f(double x, Momentum k, const ModelParams& params) {
  const double r = delta_prime_over_x(x, k, params);
  if (std::isinf(r)) return std::numeric_limits<double>::infinity();
  return (1.0 - x * x) * r * r - std::norm(gamma(k, params));
}

double sheet_residual(double x, Momentum k, const ModelParams& params, int sheet) {
  const double r = delta_prime_over_x(x, k, params);
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  const double g_abs = std::abs(gamma(k, params));
  if (std::isinf(r)) return s == 0.0 ? -sheet * g_abs : r;
  return r * s - sheet * g_abs;
}

double energy_from_x(double x, Momentum k, const ModelParams& params) {
  const double b = beta(k, params);
  const double nl = params.g() * half_power_ratio(x, params.p() + 1.0);
  if (x == 0.0) return b == 0.0 ? nl : std::copysign(std::numeric_limits<double>::infinity(), b);
  return b / x + nl;
}

double sheet_phase(Momentum k, const ModelParams& params, int sheet) {
  const cplx gam = gamma(k, params);
  if (gam == cplx(0.0, 0.0)) return 0.0;
  return reduce_mod_2pi(-std::arg(gam) + (sheet < 0 ? pi : 0.0));
}

double eigen_residual(double x, double phi, double energy, Momentum k, const ModelParams& params) {
  const BlochState psi = state_from_xphi(x, phi);
  const BlochState hpsi = hamiltonian(k, psi, params) * psi;
  return std::sqrt(std::norm(hpsi.psi1 - energy * psi.psi1) + std::norm(hpsi.psi2 - energy * psi.psi2));
}

std::vector<EigenSolution> solve_all_x(Momentum k, const ModelParams& params, const SolverOptions& opts) {
  std::vector<EigenSolution> out;
  sheet_roots(k, params, +1, opts, out);
  sheet_roots(k, params, -1, opts, out);

  std::sort(out.begin(), out.end(), [](const EigenSolution& a, const EigenSolution& b) { return a.x < b.x; });
  // The two sheets coincide where gamma vanishes.
  if (std::abs(gamma(k, params)) < 1e-12) {
    auto same = [](const EigenSolution& a, const EigenSolution& b) {
      return std::abs(a.x - b.x) < 1e-8 && std::abs(a.energy - b.energy) < 1e-8;
    };
    out.erase(std::unique(out.begin(), out.end(), same), out.end());
  }
  if (out.empty()) {
    std::ostringstream msg;
    msg << "solve_all_x: no eigen-solution found at k = (" << k.k1 << ", " << k.k2 << ")";
    throw SolverError(msg.str());
  }
  return out;
}

std::optional<EigenSolution> continue_branch(Momentum k, const ModelParams& params, int sheet, double x_guess,
                                             const SolverOptions& opts) {
  auto f = [&](double x) { return sheet_residual(x, k, params, sheet); };
  const double x0 = std::clamp(x_guess, -1.0, 1.0);
  const double f0 = f(x0);
  if (f0 == 0.0) return make_solution(x0, k, params, sheet, opts);

  // Walk outward on both sides with doubling steps; the first valid bracket
  // is the root closest to the guess.
  double lo_prev = x0, hi_prev = x0;
  double flo_prev = f0, fhi_prev = f0;
  for (double h = 1e-9; h < 4.0; h *= 2.0) {
    std::optional<EigenSolution> best;
    if (lo_prev > -1.0) {
      const double lo = std::max(-1.0, x0 - h);
      const double flo = f(lo);
      if (flo == 0.0) {
        best = make_solution(lo, k, params, sheet, opts);
      } else if (std::isfinite(flo) && std::isfinite(flo_prev) && (flo < 0.0) != (flo_prev < 0.0)) {
        best = make_solution(bisect(f, lo, lo_prev, flo, opts.x_tol), k, params, sheet, opts);
      }
      lo_prev = lo;
      flo_prev = flo;
    }
    if (hi_prev < 1.0) {
      const double hi = std::min(1.0, x0 + h);
      const double fhi = f(hi);
      std::optional<EigenSolution> up;
      if (fhi == 0.0) {
        up = make_solution(hi, k, params, sheet, opts);
      } else if (std::isfinite(fhi) && std::isfinite(fhi_prev) && (fhi < 0.0) != (fhi_prev < 0.0)) {
        up = make_solution(bisect(f, hi_prev, hi, fhi_prev, opts.x_tol), k, params, sheet, opts);
      }
      if (up && (!best || std::abs(up->x - x0) < std::abs(best->x - x0))) best = up;
      hi_prev = hi;
      fhi_prev = fhi;
    }
    if (best) return best;
    if (lo_prev <= -1.0 && hi_prev >= 1.0) break;
  }
  return std::nullopt;
}

ConeSolution solve_x0(const ModelParams& params) {
  const double g = params.g();
  const double B = params.B();
  const double p = params.p();
  ConeSolution cone;
  if (g == 0.0) {
    cone.linear_limit = true;
    cone.x0 = 1.0;
  } else if (std::abs(g) < 2.0 * B) {
    cone.x0 = g > 0.0 ? -1.0 : 1.0;
  } else {
    cone.exists = true;
    const double target = -2.0 * B / g;
    auto lhs = [p, target](double x) { return std::pow(0.5 * (1.0 + x), p) - std::pow(0.5 * (1.0 - x), p) - target; };
    if (target <= -1.0) {
      cone.x0 = -1.0;
    } else if (target >= 1.0) {
      cone.x0 = 1.0;
    } else {
      cone.x0 = bisect(lhs, -1.0, 1.0, lhs(-1.0), 0.0);
    }
  }
  if (cone.exists) {
    const double a = 0.5 * (1.0 + cone.x0), b = 0.5 * (1.0 - cone.x0);
    cone.E0 = 0.5 * g * (std::pow(a, p) + std::pow(b, p));
  } else {
    // Band energy of the polarized state at the origin.
    cone.E0 = energy_from_x(cone.x0, Momentum{}, params);
  }
  return cone;
}

PerturbationResult perturbative_expansion(Momentum k, const ModelParams& params) {
  if (std::abs(k.k1) > perturbative_window || std::abs(k.k2) > perturbative_window)
    throw SolverError("perturbative_expansion: momentum outside |k| <= 0.1 pi");
  const ConeSolution cone = solve_x0(params);
  if (!cone.exists) throw SolverError("perturbative_expansion: no cone for |g| < 2B");
  const double x0 = cone.x0;
  if (std::abs(x0) >= 1.0) throw SolverError("perturbative_expansion: |x0| = 1, expansion singular");

  const double p = params.p();
  const double g = params.g();
  const double kmag = std::hypot(params.J1() * k.k1, params.J2() * k.k2);
  const double denom = std::pow(1.0 + x0, p - 1.0) + std::pow(1.0 - x0, p - 1.0);
  const double chi = std::abs(std::pow(2.0, p + 1.0) / (g * p) * x0 / denom * kmag / std::sqrt(1.0 - x0 * x0));

  PerturbationResult r;
  r.chi = chi;
  r.energy_plus = cone.E0 * (1.0 + p * chi / x0);
  r.energy_minus = cone.E0 * (1.0 - p * chi / x0);
  return r;
}

std::vector<SpectrumRow> spectrum_slice(const std::vector<Momentum>& kpath, const ModelParams& params,
                                        const SolverOptions& opts) {
  const ConeSolution cone = solve_x0(params);
  const bool pert_ok = cone.exists && std::abs(cone.x0) < 1.0;
  const double escale = std::abs(params.B()) + std::abs(params.g());

  std::vector<SpectrumRow> rows;
  std::vector<SpectrumRow> prev;
  int next_id = 0;
  for (const Momentum& k : kpath) {
    std::vector<EigenSolution> roots;
    try {
      roots = solve_all_x(k, params, opts);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "spectrum_slice at k = (" << k.k1 << ", " << k.k2 << "): " << e.what();
      throw SolverError(msg.str());
    }

    std::optional<double> ep, em;
    if (pert_ok && std::abs(k.k1) <= perturbative_window && std::abs(k.k2) <= perturbative_window) {
      const PerturbationResult pr = perturbative_expansion(k, params);
      ep = pr.energy_plus;
      em = pr.energy_minus;
    }

    // Greedy nearest-neighbour matching against the previous k.
    struct Pair {
      double d;
      std::size_t cur, old;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < roots.size(); ++i)
      for (std::size_t j = 0; j < prev.size(); ++j)
        pairs.push_back({std::abs(roots[i].x - prev[j].x) + std::abs(roots[i].energy - prev[j].energy) / escale, i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    std::vector<int> id(roots.size(), -1);
    std::vector<bool> used(prev.size(), false);
    for (const Pair& pr : pairs) {
      if (id[pr.cur] >= 0 || used[pr.old]) continue;
      id[pr.cur] = prev[pr.old].branch_id;
      used[pr.old] = true;
    }

    std::vector<SpectrumRow> cur;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      SpectrumRow row{k, id[i] >= 0 ? id[i] : next_id++, roots[i].x, roots[i].energy, ep, em};
      cur.push_back(row);
      rows.push_back(row);
    }
    prev = std::move(cur);
  }
  return rows;
}

std::string spectrum_csv(const std::vector<SpectrumRow>& rows) {
  std::string out = "k1,k2,branch_id,x,E,E_pert_plus,E_pert_minus\n";
  for (const SpectrumRow& r : rows) {
    out += csv::join({csv::number(r.k.k1), csv::number(r.k.k2), std::to_string(r.branch_id), csv::number(r.x),
                      csv::number(r.energy), csv::number(r.energy_pert_plus), csv::number(r.energy_pert_minus)});
    out += '\n';
  }
  return out;
}

}  // namespace nlab
