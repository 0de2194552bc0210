#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/mdp.hpp"
#include "tdac/policy.hpp"
#include "tdac/rng.hpp"
#include "tdac/schedule.hpp"

namespace tdac {

enum class AlgorithmKind { single_scale, two_scale };

inline const char* to_string(AlgorithmKind k) {
  return k == AlgorithmKind::single_scale ? "single" : "two_scale";
}

// Configuration shared by the single-time-scale algorithm and the
// two-time-scale baseline.
//
// Single scale: one schedule drives all three iterates; the critic gets the
// constant relative amplifiers gamma_eta_factor / gamma_w_factor on top of it,
// and lambda controls the eligibility trace.
//
// Two-scale baseline: the three schedules are absolute (critic_eta runs at
// 0.95x critic_w through its kind factor), the amplifiers do not apply, and
// the critic is forced to lambda = 0.
struct AlgoConfig {
  AlgorithmKind algorithm = AlgorithmKind::single_scale;
  double gamma_eta_factor = 1.0;  // Gamma_eta
  double gamma_w_factor = 1.0;    // Gamma_w
  double lambda = 0.5;
  double w_bound = 1e3;  // componentwise clamp radius of the critic weights
  bool freeze_actor = false;

  ScheduleSpec schedule = preset_small().single;
  ScheduleSpec critic_w_schedule = preset_small().critic_w;
  ScheduleSpec critic_eta_schedule = preset_small().critic_eta;
  ScheduleSpec actor_schedule = preset_small().actor;

  void validate() const {
    if (!(gamma_eta_factor > 0.0) || !(gamma_w_factor > 0.0))
      throw parameter_error("AlgoConfig: amplifiers must be > 0");
    if (!(lambda >= 0.0 && lambda < 1.0))
      throw parameter_error("AlgoConfig: lambda must be in [0, 1)");
    if (!(w_bound > 0.0)) throw parameter_error("AlgoConfig: w_bound must be > 0");
    schedule.validate();
    critic_w_schedule.validate();
    critic_eta_schedule.validate();
    actor_schedule.validate();
  }
};

// Learner iterates.  n counts completed updates; x is the state the next
// update will depart from.
struct AgentState {
  long long n = 0;
  int x = 0;
  double eta_tilde = 0.0;
  Vector w;
  Vector trace;
  Vector theta;
};

// Zero initialization, start state pinned to 0 for reproducibility.
inline AgentState init_agent(const FeatureSet& fs, int start_state = 0) {
  if (start_state < 0 || start_state >= fs.n_states())
    throw parameter_error("init_agent: start state out of range");
  AgentState s;
  s.x = start_state;
  s.eta_tilde = 0.0;
  s.w = Vector::Zero(fs.basis_size());
  s.trace = Vector::Zero(fs.basis_size());
  s.theta = Vector::Zero(fs.param_size());
  return s;
}

// Componentwise clamp of the critic weights to [-bound, bound].
inline Vector project_weights(const Vector& w, double bound) {
  if (!(bound > 0.0)) throw parameter_error("project_weights: bound must be > 0");
  return w.cwiseMax(-bound).cwiseMin(bound);
}

// The two random streams a run consumes.  Both steppers draw one action from
// `policy`, then one transition and two noise values from `env` per step, so
// paired arms with equal seeds read identical sequences from both streams.
struct RunRngs {
  Rng env;
  Rng policy;
};

inline RunRngs make_run_rngs(std::uint64_t seed) {
  Rng root(seed);
  return RunRngs{root.child(1), root.child(2)};
}

namespace detail {

inline void check_finite_iterates(const AgentState& s, double d_tilde) {
  if (std::isfinite(d_tilde) && std::isfinite(s.eta_tilde) &&
      s.w.allFinite() && s.theta.allFinite())
    return;
  std::ostringstream msg;
  msg << "actor-critic update produced a non-finite value at step " << s.n;
  throw numerical_error(msg.str());
}

}  // namespace detail

// One transition of the single-time-scale online actor-critic.  With
// gamma = schedule(n+1) and the pre-update average-reward estimate in the
// temporal difference:
//
//   u       ~  mu(. | x, theta)                       (1 policy draw)
//   (y, r)  =  environment step                       (3 env draws)
//   eta'    =  eta + gamma Gamma_eta (r - eta)
//   d       =  r - eta + w.(phi(y) - phi(x))
//   e'      =  lambda e + phi(x)
//   w'      =  clamp(w + gamma Gamma_w d e')
//   theta'  =  theta + gamma d psi(x, u, theta)       (skipped when frozen)
inline void algorithm1_step(AgentState& state, const Mdp& mdp,
                            const FeatureSet& fs, const AlgoConfig& config,
                            RunRngs& rngs) {
  const long long n = state.n + 1;
  const double gamma = step_size(config.schedule, n);

  const int u = sample_action(fs, state.theta, state.x, rngs.policy);
  const Step step = sample_step(mdp, state.x, u, rngs.env);

  const double eta_old = state.eta_tilde;
  state.eta_tilde += gamma * config.gamma_eta_factor * (step.reward - eta_old);

  const double d_tilde =
      step.reward - eta_old +
      state.w.dot(fs.phi.row(step.next_state) - fs.phi.row(state.x));

  state.trace = config.lambda * state.trace + fs.state_feature(state.x);
  state.w = project_weights(
      state.w + gamma * config.gamma_w_factor * d_tilde * state.trace,
      config.w_bound);

  if (!config.freeze_actor)
    state.theta +=
        gamma * d_tilde * likelihood_ratio(fs, state.theta, state.x, u);

  state.n = n;
  state.x = step.next_state;
  detail::check_finite_iterates(state, d_tilde);
}

// One transition of the two-time-scale baseline: identical update structure,
// TD(0) critic (trace = phi(x)), three absolute schedules.
inline void baseline_two_timescale_step(AgentState& state, const Mdp& mdp,
                                        const FeatureSet& fs,
                                        const AlgoConfig& config,
                                        RunRngs& rngs) {
  const long long n = state.n + 1;
  const double gamma_w = step_size(config.critic_w_schedule, n);
  const double gamma_eta = step_size(config.critic_eta_schedule, n);
  const double gamma_actor = step_size(config.actor_schedule, n);

  const int u = sample_action(fs, state.theta, state.x, rngs.policy);
  const Step step = sample_step(mdp, state.x, u, rngs.env);

  const double eta_old = state.eta_tilde;
  state.eta_tilde += gamma_eta * (step.reward - eta_old);

  const double d_tilde =
      step.reward - eta_old +
      state.w.dot(fs.phi.row(step.next_state) - fs.phi.row(state.x));

  state.trace = fs.state_feature(state.x);
  state.w = project_weights(state.w + gamma_w * d_tilde * state.trace,
                            config.w_bound);

  if (!config.freeze_actor)
    state.theta +=
        gamma_actor * d_tilde * likelihood_ratio(fs, state.theta, state.x, u);

  state.n = n;
  state.x = step.next_state;
  detail::check_finite_iterates(state, d_tilde);
}

// Dispatch on the configured algorithm.
inline void advance(AgentState& state, const Mdp& mdp, const FeatureSet& fs,
                    const AlgoConfig& config, RunRngs& rngs) {
  if (config.algorithm == AlgorithmKind::single_scale)
    algorithm1_step(state, mdp, fs, config, rngs);
  else
    baseline_two_timescale_step(state, mdp, fs, config, rngs);
}

}  // namespace tdac
