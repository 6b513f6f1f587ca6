#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlab/model.hpp"

namespace nlab {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One nonlinear Bloch eigenstate, parameterized by (x, phi).
///
/// `sheet` records which of the two phase branches the state lives on:
/// +1 for phi = -arg(gamma), -1 for phi = -arg(gamma) + pi. At gamma = 0 the
/// two coincide and `sheet` is 0.
struct EigenSolution {
  double x = 0.0;
  double phi = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  int sheet = 0;

  BlochState state() const { return state_from_xphi(x, phi); }
};

struct ConeSolution {
  bool exists = false;
  double x0 = 0.0;
  double E0 = 0.0;
  bool linear_limit = false;  // g == 0
};

struct PerturbationResult {
  double chi = 0.0;  // correction on the chi > 0 sheet; the other sheet is -chi
  double energy_plus = 0.0;
  double energy_minus = 0.0;
};

struct SolverOptions {
  int intervals = 2000;
  double x_tol = 1e-13;
  double accept_residual = 1e-10;
};

/// Offset of the diagonal nonlinear term, beta + (g/2)[((1+x)/2)^p - ((1-x)/2)^p].
double delta_prime(double x, Momentum k, const ModelParams& params);

/// (1-x^2)/x^2 * delta_prime^2 - |gamma|^2. Vanishes on every eigen-solution.
/// At x = 0 the removable part of delta_prime/x is taken from its series.
double residual_f(double x, Momentum k, const ModelParams& params);

/// Unsquared form restricted to one phase sheet:
/// delta_prime * sqrt(1-x^2) / x - sheet * |gamma|.
double sheet_residual(double x, Momentum k, const ModelParams& params, int sheet);

/// Eigenenergy at imbalance x:
/// beta/x + (g/x)[((1+x)/2)^{p+1} - ((1-x)/2)^{p+1}].
double energy_from_x(double x, Momentum k, const ModelParams& params);

/// Phase of the eigenstate on the given sheet, reduced to (-pi, pi].
double sheet_phase(Momentum k, const ModelParams& params, int sheet);

/// || H(psi) psi - E psi || for psi = state_from_xphi(x, phi).
double eigen_residual(double x, double phi, double energy, Momentum k, const ModelParams& params);

/// All real eigen-solutions with x in [-1, 1].
std::vector<EigenSolution> solve_all_x(Momentum k, const ModelParams& params, const SolverOptions& opts = {});

/// Follows one solution from `x_guess` to momentum `k` on a fixed sheet by
/// expanding a bracket outward until the sheet residual changes sign.
std::optional<EigenSolution> continue_branch(Momentum k, const ModelParams& params, int sheet, double x_guess,
                                             const SolverOptions& opts = {});

/// Degeneracy-point imbalance x0 and energy E0. For |g| < 2B no cone exists
/// and x0 is pinned to -sign(g) (+1 at g = 0).
ConeSolution solve_x0(const ModelParams& params);

/// First-order expansion around the cone vertex. Throws SolverError outside
/// |k1|, |k2| <= 0.1 pi, without a cone, or at |x0| = 1.
PerturbationResult perturbative_expansion(Momentum k, const ModelParams& params);

inline constexpr double perturbative_window = 0.1 * pi;

struct SpectrumRow {
  Momentum k;
  int branch_id = 0;
  double x = 0.0;
  double energy = 0.0;
  std::optional<double> energy_pert_plus;
  std::optional<double> energy_pert_minus;
};

/// Roots at every k of the path, labeled by continuity with the previous k.
std::vector<SpectrumRow> spectrum_slice(const std::vector<Momentum>& kpath, const ModelParams& params,
                                        const SolverOptions& opts = {});

/// Columns: k1,k2,branch_id,x,E,E_pert_plus,E_pert_minus.
std::string spectrum_csv(const std::vector<SpectrumRow>& rows);

}  // namespace nlab
