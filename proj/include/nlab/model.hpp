#pragma once

#include <array>
#include <complex>
#include <numbers>

namespace nlab {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Couplings of the two-band lattice model with power-law on-site nonlinearity.
///
/// The default factory `qwz` ties both hoppings to B; `general` keeps J1, J2
/// independent. Construction validates B > 0 and p > 0.
class ModelParams {
public:
  static ModelParams qwz(double B, double g, double p);
  static ModelParams general(double B, double J1, double J2, double g, double p);

  double B() const { return B_; }
  double J1() const { return J1_; }
  double J2() const { return J2_; }
  double g() const { return g_; }
  double p() const { return p_; }

  ModelParams with_g(double g) const;

private:
  ModelParams(double B, double J1, double J2, double g, double p);

  double B_;
  double J1_;
  double J2_;
  double g_;
  double p_;
};

struct Momentum {
  double k1 = 0.0;
  double k2 = 0.0;
};

struct BlochState {
  cplx psi1;
  cplx psi2;

  double norm_sq() const { return std::norm(psi1) + std::norm(psi2); }
};

/// Population imbalance and relative phase. `degenerate` marks the poles
/// |x| = 1, where phi carries no information and is stored as 0.
struct XPhi {
  double x = 0.0;
  double phi = 0.0;
  bool degenerate = false;
};

/// Dense 2x2 complex matrix, row-major.
struct Matrix2 {
  std::array<cplx, 4> a{};

  cplx& operator()(int i, int j) { return a[2 * i + j]; }
  const cplx& operator()(int i, int j) const { return a[2 * i + j]; }
};

BlochState operator*(const Matrix2& m, const BlochState& s);

/// Reduce an angle to (-pi, pi]; pi itself is kept, -pi maps to pi.
double reduce_mod_2pi(double angle);

double beta(Momentum k, const ModelParams& params);
cplx gamma(Momentum k, const ModelParams& params);

/// State-dependent Hamiltonian: off-diagonals gamma, gamma*; diagonals
/// +-beta + g |psi_a|^{2p}.
Matrix2 hamiltonian(Momentum k, const BlochState& state, const ModelParams& params);

/// psi1 = sqrt((1+x)/2), psi2 = sqrt((1-x)/2) e^{i phi}. Throws
/// std::invalid_argument for |x| > 1.
BlochState state_from_xphi(double x, double phi);
inline BlochState state_from_xphi(const XPhi& xp) { return state_from_xphi(xp.x, xp.phi); }

/// Inverse of state_from_xphi up to a global phase. Throws
/// std::invalid_argument if the state is not normalized to 1e-10.
XPhi xphi_from_state(const BlochState& state);

cplx inner(const BlochState& a, const BlochState& b);  // <a|b>

}  // namespace nlab
