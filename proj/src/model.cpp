#include "nlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nlab {

ModelParams::ModelParams(double B, double J1, double J2, double g, double p)
    : B_(B), J1_(J1), J2_(J2), g_(g), p_(p) {
  if (!(B > 0.0) || !std::isfinite(B)) throw std::invalid_argument("ModelParams: B must be positive and finite");
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("ModelParams: p must be positive and finite");
  if (!std::isfinite(g) || !std::isfinite(J1) || !std::isfinite(J2))
    throw std::invalid_argument("ModelParams: couplings must be finite");
}

ModelParams ModelParams::qwz(double B, double g, double p) { return ModelParams(B, B, B, g, p); }

ModelParams ModelParams::general(double B, double J1, double J2, double g, double p) {
  return ModelParams(B, J1, J2, g, p);
}

ModelParams ModelParams::with_g(double g) const { return ModelParams(B_, J1_, J2_, g, p_); }

BlochState operator*(const Matrix2& m, const BlochState& s) {
  return {m(0, 0) * s.psi1 + m(0, 1) * s.psi2, m(1, 0) * s.psi1 + m(1, 1) * s.psi2};
}

double reduce_mod_2pi(double angle) {
  double r = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
  // values within rounding of the cut land on +pi
  const double cut = 16.0 * std::numeric_limits<double>::epsilon() * std::max(pi, std::abs(angle));
  if (r <= -pi + cut) return pi;
  return r;
}

double beta(Momentum k, const ModelParams& params) {
  return params.B() * (-1.0 + std::cos(k.k1) + std::cos(k.k2));
}

cplx gamma(Momentum k, const ModelParams& params) {
  return {params.J1() * std::sin(k.k1), -params.J2() * std::sin(k.k2)};
}

Matrix2 hamiltonian(Momentum k, const BlochState& state, const ModelParams& params) {
  const double b = beta(k, params);
  const cplx gam = gamma(k, params);
  const double p = params.p();
  Matrix2 h;
  h(0, 0) = b + params.g() * std::pow(std::norm(state.psi1), p);
  h(0, 1) = gam;
  h(1, 0) = std::conj(gam);
  h(1, 1) = -b + params.g() * std::pow(std::norm(state.psi2), p);
  return h;
}

BlochState state_from_xphi(double x, double phi) {
  if (!(std::abs(x) <= 1.0)) throw std::invalid_argument("state_from_xphi: |x| > 1 (x = " + std::to_string(x) + ")");
  const double a = std::sqrt(0.5 * (1.0 + x));
  const double b = std::sqrt(0.5 * (1.0 - x));
  return {cplx(a, 0.0), std::polar(b, phi)};
}

XPhi xphi_from_state(const BlochState& state) {
  const double n1 = std::norm(state.psi1);
  const double n2 = std::norm(state.psi2);
  if (std::abs(n1 + n2 - 1.0) > 1e-10) throw std::invalid_argument("xphi_from_state: state not normalized");
  XPhi out;
  out.x = std::clamp(n1 - n2, -1.0, 1.0);
  if (n1 == 0.0 || n2 == 0.0) {
    out.phi = 0.0;
    out.degenerate = true;
    return out;
  }
  out.phi = reduce_mod_2pi(std::arg(state.psi2) - std::arg(state.psi1));
  return out;
}

cplx inner(const BlochState& a, const BlochState& b) {
  return std::conj(a.psi1) * b.psi1 + std::conj(a.psi2) * b.psi2;
}

}  // namespace nlab
