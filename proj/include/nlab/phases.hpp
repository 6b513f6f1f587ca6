#pragma once

#include <span>
#include <string>
#include <vector>

#include "nlab/band.hpp"
#include "nlab/model.hpp"

namespace nlab {

/// Berry phase, path-asymmetric dynamical phase and their sum, unreduced.
class PhaseBreakdown {
public:
  PhaseBreakdown() = default;
  PhaseBreakdown(double theta_B, double delta_theta_D)
      : theta_B_(theta_B), delta_theta_D_(delta_theta_D), theta_AB_(theta_B + delta_theta_D) {}

  double theta_B() const { return theta_B_; }
  double delta_theta_D() const { return delta_theta_D_; }
  double theta_AB() const { return theta_AB_; }
  double theta_AB_mod() const { return reduce_mod_2pi(theta_AB_); }

private:
  double theta_B_ = 0.0;
  double delta_theta_D_ = 0.0;
  double theta_AB_ = 0.0;
};

/// beta + (g/2)[(1 - p x + p x^2) ((1+x)/2)^p - (1 + p x + p x^2) ((1-x)/2)^p].
/// Throws std::domain_error for p < 1 at |x| = 1.
double big_delta(double x, Momentum k, const ModelParams& params);

/// beta + (g/2)[((1+x)/2)^p - ((1-x)/2)^p]; same quantity as delta_prime.
double big_delta_prime(double x, Momentum k, const ModelParams& params);

/// Delta at the vertex written without beta:
/// -(g p x0 / 2)[(1 - x0)((1+x0)/2)^p + (1 + x0)((1-x0)/2)^p].
double big_delta_vertex(double x0, const ModelParams& params);

struct LoopSample {
  double phi;
  double x;
};

/// -oint (1 - x)/2 dphi by the trapezoidal rule. Samples must be strictly
/// increasing in phi and span exactly 2 pi (to 1e-9); throws
/// std::invalid_argument otherwise.
double berry_phase_loop(std::span<const LoopSample> samples);

double berry_phase_leading(const ConeSolution& cone);

/// Leading dynamical-phase difference. Zero without a cone; at |x0| = 1 the
/// raw expression is 0/0 and the regime closed form is returned instead.
double dyn_phase_diff_leading(const ConeSolution& cone, const ModelParams& params);

/// Closed forms for p > 1, p = 1 and 0 < p < 1. Zero without a cone.
double dyn_phase_diff_regime(const ConeSolution& cone, const ModelParams& params);

PhaseBreakdown ab_phase_leading(const ConeSolution& cone, const ModelParams& params);

struct PhaseRow {
  double p;
  double g_over_B;
  double x0;
  PhaseBreakdown phases;
};

/// Columns: p,g_over_B,x0,theta_B,delta_theta_D,theta_AB,theta_AB_mod.
std::string phase_csv_header();
std::string phase_csv_row(const PhaseRow& row);

}  // namespace nlab
