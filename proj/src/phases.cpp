#include "nlab/phases.hpp"

#include <cmath>
#include <stdexcept>

#include "nlab/csv.hpp"

namespace nlab {

double big_delta(double x, Momentum k, const ModelParams& params) {
  const double p = params.p();
  if (p < 1.0 && std::abs(x) >= 1.0) throw std::domain_error("big_delta: |x| = 1 is outside the domain for p < 1");
  const double a = std::pow(0.5 * (1.0 + x), p);
  const double b = std::pow(0.5 * (1.0 - x), p);
  const double px = p * x, px2 = p * x * x;
  return beta(k, params) + 0.5 * params.g() * ((1.0 - px + px2) * a - (1.0 + px + px2) * b);
}

double big_delta_prime(double x, Momentum k, const ModelParams& params) { return delta_prime(x, k, params); }

double big_delta_vertex(double x0, const ModelParams& params) {
  const double p = params.p();
  const double a = std::pow(0.5 * (1.0 + x0), p);
  const double b = std::pow(0.5 * (1.0 - x0), p);
  return -0.5 * params.g() * p * x0 * ((1.0 - x0) * a + (1.0 + x0) * b);
}

double berry_phase_loop(std::span<const LoopSample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("berry_phase_loop: need at least two samples");
  double acc = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dphi = samples[i].phi - samples[i - 1].phi;
    if (!(dphi > 0.0)) throw std::invalid_argument("berry_phase_loop: phi must be strictly increasing");
    acc += 0.25 * ((1.0 - samples[i].x) + (1.0 - samples[i - 1].x)) * dphi;
  }
  const double span = samples.back().phi - samples.front().phi;
  if (std::abs(span - 2.0 * pi) > 1e-9) throw std::invalid_argument("berry_phase_loop: samples do not close a loop");
  return -acc;
}

double berry_phase_leading(const ConeSolution& cone) { return -pi * (1.0 - cone.x0); }

double dyn_phase_diff_regime(const ConeSolution& cone, const ModelParams& params) {
  if (!cone.exists) return 0.0;
  const double p = params.p();
  const double x0 = cone.x0;
  const double up = 1.0 + x0, dn = 1.0 - x0;
  const double num = std::pow(up, p) - std::pow(dn, p);
  if (p > 1.0) return -pi * num / (std::pow(up, p - 1.0) + std::pow(dn, p - 1.0));
  if (p == 1.0) return -x0 * pi;
  return -pi * std::pow(up * dn, 1.0 - p) * num / (std::pow(up, 1.0 - p) + std::pow(dn, 1.0 - p));
}

double dyn_phase_diff_leading(const ConeSolution& cone, const ModelParams& params) {
  if (!cone.exists) return 0.0;
  const double x0 = cone.x0;
  if (std::abs(x0) >= 1.0) return dyn_phase_diff_regime(cone, params);
  const double p = params.p();
  const double g = params.g();
  const double bracket = std::pow(0.5 * (1.0 + x0), p) - std::pow(0.5 * (1.0 - x0), p);
  return pi * g * p * x0 * (1.0 - x0 * x0) / (2.0 * big_delta_vertex(x0, params)) * bracket;
}

PhaseBreakdown ab_phase_leading(const ConeSolution& cone, const ModelParams& params) {
  return PhaseBreakdown(berry_phase_leading(cone), dyn_phase_diff_leading(cone, params));
}

std::string phase_csv_header() { return "p,g_over_B,x0,theta_B,delta_theta_D,theta_AB,theta_AB_mod"; }

std::string phase_csv_row(const PhaseRow& row) {
  return csv::join({csv::number(row.p), csv::number(row.g_over_B), csv::number(row.x0),
                    csv::number(row.phases.theta_B()), csv::number(row.phases.delta_theta_D()),
                    csv::number(row.phases.theta_AB()), csv::number(row.phases.theta_AB_mod())});
}

}  // namespace nlab
