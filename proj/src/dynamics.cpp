#include "nlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "nlab/csv.hpp"

namespace nlab {

PathSpec PathSpec::with_orientation(Orientation o) const {
  PathSpec s = *this;
  s.orientation = o;
  return s;
}

void PathSpec::validate(const ModelParams& params) const {
  if (!(radius > 0.0) || radius > 0.1 * pi + 1e-12) throw std::invalid_argument("PathSpec: radius must lie in (0, 0.1 pi]");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("PathSpec: epsilon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("PathSpec: dt must be positive");
  if (std::abs(std::abs(phi_end - phi_start) - pi) > 1e-12)
    throw std::invalid_argument("PathSpec: each path must span half the circle");
  if (!(sample_interval > 0.0)) throw std::invalid_argument("PathSpec: sample_interval must be positive");
  // Bound on the instantaneous energy scale: |h| plus the nonlinear shift.
  const double scale = std::hypot(3.0 * params.B(), std::hypot(params.J1(), params.J2())) + std::abs(params.g());
  if (dt * scale >= 0.1) throw std::invalid_argument("PathSpec: dt too large for the model energy scale");
}

namespace {

double schedule_fraction(Schedule sched, double s) {
  if (sched == Schedule::smooth) return s - std::sin(2.0 * pi * s) / (2.0 * pi);
  return s;
}

double schedule_rate(Schedule sched, double s) {
  if (sched == Schedule::smooth) return 1.0 - std::cos(2.0 * pi * s);
  return 1.0;
}

double direction(const PathSpec& spec) { return spec.orientation == Orientation::east ? 1.0 : -1.0; }

double time_fraction(const PathSpec& spec, double t) {
  const double T = spec.duration();
  if (t < -1e-9 * T || t > T * (1.0 + 1e-9)) {
    std::ostringstream msg;
    msg << "path time " << t << " outside [0, " << T << "]";
    throw std::out_of_range(msg.str());
  }
  return std::clamp(t / T, 0.0, 1.0);
}

inline void nonlinear_phase(BlochState& s, double h, const ModelParams& params) {
  const double g = params.g();
  if (g == 0.0) return;
  const double p = params.p();
  // densities of the normalized state; H is only defined on the unit sphere
  const double inv = 1.0 / (std::norm(s.psi1) + std::norm(s.psi2));
  const double n1 = std::norm(s.psi1) * inv, n2 = std::norm(s.psi2) * inv;
  const double w1 = p == 1.0 ? n1 : std::pow(n1, p);
  const double w2 = p == 1.0 ? n2 : std::pow(n2, p);
  s.psi1 *= std::polar(1.0, -g * w1 * h);
  s.psi2 *= std::polar(1.0, -g * w2 * h);
}

struct ProbeHit {
  double t;
  BlochState state;
  EigenSolution inst;
  double theta;
};

// Shared driver for evolve and deviation_check. Runs from t = 0 up to step
// `stop_step` (or the end), sampling the overlap every `stride` steps and at
// each probe step.
EvolutionResult integrate(const PathSpec& spec, const ModelParams& params, const EigenSolution& seed,
                          const BlochState& initial, const std::vector<long>& probe_steps,
                          std::vector<ProbeHit>* hits, long stop_step = -1) {
  spec.validate(params);
  if (seed.sheet == 0) throw std::invalid_argument("evolve: seed must lie off the degeneracy point");
  const double T = spec.duration();
  const long n_total = std::max<long>(1, static_cast<long>(std::ceil(T / spec.dt - 1e-9)));
  const double dt = T / static_cast<double>(n_total);
  const long stride = std::max<long>(1, std::lround(spec.sample_interval / dt));
  const long n_end = stop_step >= 0 ? std::min(stop_step, n_total) : n_total;

  EvolutionResult res;
  BlochState psi = initial;
  double x_prev = seed.x;
  double e_prev = 0.0, t_prev = 0.0;
  double raw_prev = 0.0, unwrapped = 0.0;
  bool first = true;
  std::size_t next_probe = 0;

  auto sample = [&](long step) {
    const double t = static_cast<double>(step) * dt;
    const Momentum k = path_momentum(spec, t);
    const auto inst = continue_branch(k, params, seed.sheet, x_prev);
    if (!inst) {
      std::ostringstream msg;
      msg << "evolve: lost the instantaneous branch at t = " << t;
      throw EvolutionError(msg.str(), res.trace);
    }
    const cplx c = inner(inst->state(), psi);
    const double overlap = std::norm(c) / psi.norm_sq();
    if (!first) res.energy_integral += 0.5 * (e_prev + inst->energy) * (t - t_prev);
    const double raw = std::arg(c) + res.energy_integral;
    if (first) {
      unwrapped = raw;
    } else {
      const double d = reduce_mod_2pi(raw - raw_prev);
      if (std::abs(d) > 0.25 * pi) {
        std::ostringstream msg;
        msg << "evolve: phase increment " << d << " exceeds pi/4 at t = " << t << "; reduce sample_interval";
        throw EvolutionError(msg.str(), res.trace);
      }
      unwrapped += d;
    }
    raw_prev = raw;
    const double theta = unwrapped - res.energy_integral;
    const double norm = psi.norm_sq();
    res.max_norm_drift = std::max(res.max_norm_drift, std::abs(norm - 1.0));
    res.trace.push_back({t, k, inst->x, inst->phi, theta, norm, overlap});
    if (overlap < spec.min_overlap) {
      std::ostringstream msg;
      msg << "evolve: adiabaticity lost, overlap " << overlap << " < " << spec.min_overlap << " at t = " << t;
      throw EvolutionError(msg.str(), res.trace);
    }
    x_prev = inst->x;
    e_prev = inst->energy;
    t_prev = t;
    first = false;
    res.theta_total = theta;
    res.final_overlap = overlap;
    res.final_instantaneous = *inst;
    while (hits && next_probe < probe_steps.size() && probe_steps[next_probe] == step) {
      hits->push_back({t, psi, *inst, theta});
      ++next_probe;
    }
  };

  auto is_probe = [&](long step) { return next_probe < probe_steps.size() && probe_steps[next_probe] == step; };

  sample(0);
  for (long n = 0; n < n_end; ++n) {
    const Momentum k_mid = path_momentum(spec, (static_cast<double>(n) + 0.5) * dt);
    psi = split_step(psi, k_mid, dt, params);
    const long step = n + 1;
    if (step % stride == 0 || step == n_end || is_probe(step)) sample(step);
  }
  res.final_state = psi;
  return res;
}

}  // namespace

double path_angle(const PathSpec& spec, double t) {
  const double s = time_fraction(spec, t);
  return spec.phi_start + direction(spec) * std::abs(spec.phi_end - spec.phi_start) * schedule_fraction(spec.schedule, s);
}

double path_angle_rate(const PathSpec& spec, double t) {
  const double s = time_fraction(spec, t);
  return direction(spec) * spec.epsilon * schedule_rate(spec.schedule, s);
}

Momentum path_momentum(const PathSpec& spec, double t) {
  const double a = path_angle(spec, t);
  return {spec.radius * std::cos(a), spec.radius * std::sin(a)};
}

BlochState split_step(const BlochState& state, Momentum k_mid, double dt, const ModelParams& params) {
  BlochState s = state;
  nonlinear_phase(s, 0.5 * dt, params);

  const double h1 = params.J1() * std::sin(k_mid.k1);
  const double h2 = params.J2() * std::sin(k_mid.k2);
  const double h3 = beta(k_mid, params);
  const double w = std::sqrt(h1 * h1 + h2 * h2 + h3 * h3);
  if (w > 0.0) {
    // exp(-i h.sigma dt) = cos(w dt) - i sin(w dt) (h.sigma)/w
    const double c = std::cos(w * dt);
    const double sn = std::sin(w * dt) / w;
    const cplx mi_s(0.0, -sn);
    const cplx u11 = c + mi_s * h3;
    const cplx u22 = c - mi_s * h3;
    const cplx u12 = mi_s * cplx(h1, -h2);
    const cplx u21 = mi_s * cplx(h1, h2);
    const cplx a = s.psi1, b = s.psi2;
    s.psi1 = u11 * a + u12 * b;
    s.psi2 = u21 * a + u22 * b;
  }

  nonlinear_phase(s, 0.5 * dt, params);
  return s;
}

EigenSolution default_seed(const PathSpec& spec, const ModelParams& params) {
  const Momentum kS = path_momentum(spec, 0.0);
  const auto roots = solve_all_x(kS, params);
  const int sheet = params.g() >= 0.0 ? -1 : +1;
  const double target = solve_x0(params).x0;
  const EigenSolution* best = nullptr;
  for (const auto& r : roots) {
    if (r.sheet != sheet) continue;
    if (!best || std::abs(r.x - target) < std::abs(best->x - target)) best = &r;
  }
  if (!best) throw SolverError("default_seed: no eigen-solution on the cone sheet at S");
  return *best;
}

EvolutionResult evolve(const PathSpec& spec, const ModelParams& params, const EigenSolution& seed) {
  return evolve(spec, params, seed, seed.state());
}

EvolutionResult evolve(const PathSpec& spec, const ModelParams& params, const EigenSolution& seed,
                       const BlochState& initial) {
  return integrate(spec, params, seed, initial, {}, nullptr);
}

namespace {

// Unwrapped instantaneous phase of consecutive samples, rebased to start at `start`.
std::vector<double> unwrap_from(const std::vector<double>& phis, double start) {
  std::vector<double> out(phis.size());
  if (phis.empty()) return out;
  out[0] = start;
  for (std::size_t i = 1; i < phis.size(); ++i) out[i] = out[i - 1] + reduce_mod_2pi(phis[i] - phis[i - 1]);
  return out;
}

// Builds the counter-clockwise loop S -> E -> N -> W -> S from the east
// samples and the reversed west samples.
std::vector<LoopSample> loop_from_paths(const std::vector<double>& east_phi, const std::vector<double>& east_x,
                                        const std::vector<double>& west_phi, const std::vector<double>& west_x) {
  const std::vector<double> pe = unwrap_from(east_phi, 0.0);
  const std::vector<double> pw = unwrap_from(west_phi, 0.0);
  std::vector<LoopSample> loop;
  loop.reserve(pe.size() + pw.size());
  auto push = [&loop](double phi, double x) {
    if (loop.empty() || phi > loop.back().phi) loop.push_back({phi, x});
  };
  for (std::size_t i = 0; i < pe.size(); ++i) push(pe[i], east_x[i]);
  // West runs from 0 down to about -pi; reversed and shifted by 2 pi it
  // continues from N back to S.
  const double end = pe.back();
  const double shift = 2.0 * pi;
  for (std::size_t i = pw.size(); i-- > 0;) {
    const double phi = pw[i] + shift;
    if (i + 1 == pw.size()) {
      // N is shared by both paths.
      if (std::abs(phi - end) > 1e-6) throw std::runtime_error("loop_from_paths: paths do not meet at N");
      continue;
    }
    push(phi, west_x[i]);
  }
  // Snap the closing point onto exactly one turn to absorb rounding.
  loop.back().phi = loop.front().phi + 2.0 * pi;
  return loop;
}

}  // namespace

NumericAB ab_phase_numeric(const ModelParams& params, const PathSpec& base, cplx initial_phase) {
  const PathSpec east_spec = base.with_orientation(Orientation::east);
  const PathSpec west_spec = base.with_orientation(Orientation::west);
  const EigenSolution seed = default_seed(east_spec, params);
  BlochState init = seed.state();
  init.psi1 *= initial_phase;
  init.psi2 *= initial_phase;

  NumericAB out;
  out.east = evolve(east_spec, params, seed, init);
  out.west = evolve(west_spec, params, seed, init);

  auto split = [](const std::vector<TraceRecord>& tr, std::vector<double>& phi, std::vector<double>& x) {
    for (const auto& r : tr) {
      phi.push_back(r.phi);
      x.push_back(r.x);
    }
  };
  std::vector<double> ep, ex, wp, wx;
  split(out.east.trace, ep, ex);
  split(out.west.trace, wp, wx);
  const auto loop = loop_from_paths(ep, ex, wp, wx);
  const double theta_B = berry_phase_loop(loop);
  const double theta_AB = out.east.theta_total - out.west.theta_total;
  out.phases = PhaseBreakdown(theta_B, theta_AB - theta_B);
  return out;
}

double dyn_phase_rate_analytic(double x, Momentum k, double phi_dot, const ModelParams& params) {
  const double E = energy_from_x(x, k, params);
  double rate = -E - 0.5 * (1.0 - x) * phi_dot;
  if (params.g() != 0.0 && phi_dot != 0.0) {
    const double d = big_delta(x, k, params);
    if (d == 0.0) throw std::domain_error("dyn_phase_rate_analytic: Delta vanishes");
    const double p = params.p();
    const double bracket = std::pow(0.5 * (1.0 + x), p) - std::pow(0.5 * (1.0 - x), p);
    rate += params.g() * p * x * (1.0 - x * x) / (4.0 * d) * bracket * phi_dot;
  }
  return rate;
}

PhaseBreakdown ab_phase_adiabatic(const ModelParams& params, const PathSpec& base, int samples) {
  if (samples < 2) throw std::invalid_argument("ab_phase_adiabatic: need at least two samples");
  const EigenSolution seed = default_seed(base.with_orientation(Orientation::east), params);
  const double p = params.p();
  const double g = params.g();

  struct PathIntegrals {
    std::vector<double> phi, x;
    double nonlinear = 0.0;
  };
  auto run = [&](Orientation o) {
    PathSpec spec = base.with_orientation(o);
    const double dir = o == Orientation::east ? 1.0 : -1.0;
    const double span = std::abs(spec.phi_end - spec.phi_start);
    PathIntegrals out;
    double x = seed.x;
    std::vector<double> integrand;
    for (int j = 0; j <= samples; ++j) {
      const double a = spec.phi_start + dir * span * j / samples;
      const Momentum k{spec.radius * std::cos(a), spec.radius * std::sin(a)};
      const auto inst = continue_branch(k, params, seed.sheet, x);
      if (!inst) throw SolverError("ab_phase_adiabatic: lost the instantaneous branch");
      x = inst->x;
      out.phi.push_back(inst->phi);
      out.x.push_back(x);
      double f = 0.0;
      if (g != 0.0) {
        const double bracket = std::pow(0.5 * (1.0 + x), p) - std::pow(0.5 * (1.0 - x), p);
        f = g * p * x * (1.0 - x * x) / (4.0 * big_delta(x, k, params)) * bracket;
      }
      integrand.push_back(f);
    }
    const auto phi_u = unwrap_from(out.phi, 0.0);
    for (int j = 1; j <= samples; ++j) out.nonlinear += 0.5 * (integrand[j] + integrand[j - 1]) * (phi_u[j] - phi_u[j - 1]);
    return out;
  };
  const PathIntegrals e = run(Orientation::east);
  const PathIntegrals w = run(Orientation::west);
  const double theta_B = berry_phase_loop(loop_from_paths(e.phi, e.x, w.phi, w.x));
  return PhaseBreakdown(theta_B, e.nonlinear - w.nonlinear);
}

DeviationCheck deviation_check(const PathSpec& spec, const ModelParams& params, double t_probe) {
  spec.validate(params);
  const double T = spec.duration();
  if (!(t_probe > 0.0 && t_probe < T)) throw std::invalid_argument("deviation_check: probe must lie inside the path");
  const EigenSolution seed = default_seed(spec, params);

  const long n_total = std::max<long>(1, static_cast<long>(std::ceil(T / spec.dt - 1e-9)));
  const double dt = T / static_cast<double>(n_total);
  const long probe_step = std::clamp<long>(std::lround(t_probe / dt), 1, n_total - 1);
  std::vector<ProbeHit> hits;
  integrate(spec, params, seed, seed.state(), {probe_step}, &hits, probe_step);
  if (hits.empty()) throw std::logic_error("deviation_check: probe not reached");
  const ProbeHit& hit = hits.front();

  const double x = hit.inst.x;
  if (1.0 - std::abs(x) < 1e-6) throw std::domain_error("deviation_check: degenerate gauge at probe (|x| -> 1)");

  // Rates of the instantaneous solution by central differences.
  const double h = std::min({1e-3 * T, hit.t, T - hit.t});
  const auto minus = continue_branch(path_momentum(spec, hit.t - h), params, seed.sheet, x);
  const auto plus = continue_branch(path_momentum(spec, hit.t + h), params, seed.sheet, x);
  if (!minus || !plus) throw SolverError("deviation_check: lost the instantaneous branch near the probe");
  const double phi_dot = reduce_mod_2pi(plus->phi - minus->phi) / (2.0 * h);
  const double x_dot = (plus->x - minus->x) / (2.0 * h);

  const Momentum k = path_momentum(spec, hit.t);
  const double D = big_delta(x, k, params);
  const double Dp = big_delta_prime(x, k, params);
  const double s2 = std::sqrt(2.0);
  const cplx eiphi = std::polar(1.0, hit.inst.phi);
  const cplx xdot_term = Dp != 0.0 ? cplx(0.0, x * x_dot / (4.0 * Dp)) : cplx(0.0, 0.0);

  DeviationCheck out;
  out.t = hit.t;
  out.phi1_ana = -x * (1.0 - x) * std::sqrt(1.0 + x) / (4.0 * s2) * phi_dot / D - xdot_term / std::sqrt(2.0 * (1.0 + x));
  out.phi2_ana = (x * (1.0 + x) * std::sqrt(1.0 - x) / (4.0 * s2) * phi_dot / D + xdot_term / std::sqrt(2.0 * (1.0 - x))) * eiphi;

  // e^{-i theta} Psi - psi_inst with the component along psi_inst removed.
  const BlochState psi = hit.inst.state();
  const cplx c = inner(psi, hit.state);
  const cplx unphase = std::conj(c) / std::abs(c);
  const BlochState v{hit.state.psi1 * unphase, hit.state.psi2 * unphase};
  const cplx along = inner(psi, v);
  out.phi1_num = v.psi1 - along * psi.psi1;
  out.phi2_num = v.psi2 - along * psi.psi2;

  const double diff = std::sqrt(std::norm(out.phi1_num - out.phi1_ana) + std::norm(out.phi2_num - out.phi2_ana));
  const double ref = std::sqrt(std::norm(out.phi1_ana) + std::norm(out.phi2_ana));
  out.relative_error = diff / ref;
  return out;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "t,k1,k2,x,phi,theta,norm,overlap\n";
  for (const auto& r : trace) {
    out += csv::join({csv::number(r.t), csv::number(r.k.k1), csv::number(r.k.k2), csv::number(r.x), csv::number(r.phi),
                      csv::number(r.theta), csv::number(r.norm), csv::number(r.overlap)});
    out += '\n';
  }
  return out;
}

std::string deviation_csv(const std::vector<DeviationCheck>& rows) {
  std::string out =
      "t,re_phi1_num,im_phi1_num,re_phi1_ana,im_phi1_ana,re_phi2_num,im_phi2_num,re_phi2_ana,im_phi2_ana,rel_err\n";
  for (const auto& r : rows) {
    out += csv::join({csv::number(r.t), csv::number(r.phi1_num.real()), csv::number(r.phi1_num.imag()),
                      csv::number(r.phi1_ana.real()), csv::number(r.phi1_ana.imag()), csv::number(r.phi2_num.real()),
                      csv::number(r.phi2_num.imag()), csv::number(r.phi2_ana.real()), csv::number(r.phi2_ana.imag()),
                      csv::number(r.relative_error)});
    out += '\n';
  }
  return out;
}

}  // namespace nlab
