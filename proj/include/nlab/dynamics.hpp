#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nlab/band.hpp"
#include "nlab/model.hpp"
#include "nlab/phases.hpp"

namespace nlab {

enum class Orientation { east, west };

/// Time parameterization of the polar angle. `linear` runs at constant
/// angular speed epsilon; `smooth` uses s - sin(2 pi s)/(2 pi), which has
/// the same mean speed but starts and stops at rest.
enum class Schedule { linear, smooth };

/// Half-circle path from S = (0, -r) to N = (0, +r). East passes through
/// (r, 0), west through (-r, 0). Duration is pi / epsilon.
struct PathSpec {
  double radius = 0.02 * pi;
  Orientation orientation = Orientation::east;
  double phi_start = -0.5 * pi;
  double phi_end = 0.5 * pi;
  double epsilon = 1e-3;
  double dt = 1e-3;
  Schedule schedule = Schedule::linear;
  double sample_interval = 0.1;  // time between overlap samples
  double min_overlap = 0.99;

  double duration() const { return std::abs(phi_end - phi_start) / epsilon; }
  PathSpec with_orientation(Orientation o) const;
  void validate(const ModelParams& params) const;  // throws std::invalid_argument
};

/// Unreduced polar angle at time t in [0, duration()].
double path_angle(const PathSpec& spec, double t);
double path_angle_rate(const PathSpec& spec, double t);
Momentum path_momentum(const PathSpec& spec, double t);

/// One Strang step: half nonlinear phase, exact linear 2x2 propagator at
/// k_mid, half nonlinear phase.
BlochState split_step(const BlochState& state, Momentum k_mid, double dt, const ModelParams& params);

struct TraceRecord {
  double t;
  Momentum k;
  double x;
  double phi;
  double theta;
  double norm;
  double overlap;
};

struct EvolutionResult {
  BlochState final_state;
  double theta_total = 0.0;
  std::vector<TraceRecord> trace;
  double final_overlap = 0.0;
  double energy_integral = 0.0;  // int E dt along the instantaneous branch
  double max_norm_drift = 0.0;
  EigenSolution final_instantaneous;
};

class EvolutionError : public std::runtime_error {
public:
  EvolutionError(const std::string& what, std::vector<TraceRecord> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }

private:
  std::vector<TraceRecord> trace_;
};

/// Branch the evolution starts on: the vertex-carrying sheet (lower band for
/// g >= 0, upper for g < 0), root closest to the cone x0.
EigenSolution default_seed(const PathSpec& spec, const ModelParams& params);

/// Integrates i dPsi/dt = H(Psi) Psi over the path. theta is the unwrapped
/// phase of <psi_inst(t)|Psi(t)>, psi_inst being the continuation of `seed`.
EvolutionResult evolve(const PathSpec& spec, const ModelParams& params, const EigenSolution& seed);
EvolutionResult evolve(const PathSpec& spec, const ModelParams& params, const EigenSolution& seed,
                       const BlochState& initial);

struct NumericAB {
  PhaseBreakdown phases;
  EvolutionResult east;
  EvolutionResult west;
};

/// theta_AB = theta(SEN) - theta(SWN); theta_B from the loop quadrature of
/// the instantaneous x along both paths; delta_theta_D is the remainder.
NumericAB ab_phase_numeric(const ModelParams& params, const PathSpec& base, cplx initial_phase = {1.0, 0.0});

/// Adiabatic (epsilon -> 0) limit at the finite radius of `base`: geometric
/// part of the phase rate integrated along each path with the local x.
PhaseBreakdown ab_phase_adiabatic(const ModelParams& params, const PathSpec& base, int samples = 4000);

/// -E - ((1-x)/2) phi_dot + g p x (1-x^2)/(4 Delta) [((1+x)/2)^p - ((1-x)/2)^p] phi_dot.
/// Throws std::domain_error where Delta vanishes.
double dyn_phase_rate_analytic(double x, Momentum k, double phi_dot, const ModelParams& params);

struct DeviationCheck {
  double t = 0.0;
  cplx phi1_num, phi2_num;
  cplx phi1_ana, phi2_ana;
  double relative_error = 0.0;
};

/// Compares the numerically observed deviation from the instantaneous state
/// at t_probe with the first-order adiabatic correction.
DeviationCheck deviation_check(const PathSpec& spec, const ModelParams& params, double t_probe);

/// Columns: t,k1,k2,x,phi,theta,norm,overlap.
std::string trace_csv(const std::vector<TraceRecord>& trace);

/// Columns: t,re_phi1_num,im_phi1_num,re_phi1_ana,im_phi1_ana,re_phi2_num,
/// im_phi2_num,re_phi2_ana,im_phi2_ana,rel_err.
std::string deviation_csv(const std::vector<DeviationCheck>& rows);

}  // namespace nlab
