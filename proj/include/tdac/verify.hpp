#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "tdac/features.hpp"
#include "tdac/harness.hpp"
#include "tdac/mdp.hpp"
#include "tdac/oracle.hpp"

namespace tdac {

// Central-difference gradient of eta(theta), the closed-form average reward.
// An independent route to grad eta: each probe re-solves the stationary
// distribution of the perturbed policy chain.
inline Vector finite_difference_gradient(const Mdp& mdp, const FeatureSet& fs,
                                         const Vector& theta,
                                         double eps = 1e-5) {
  if (!(eps > 0.0))
    throw parameter_error("finite_difference_gradient: eps must be > 0");
  const auto eta_at = [&](const Vector& t) {
    const Matrix P = transition_under_policy(mdp, policy_matrix(fs, t));
    const Vector pi = stationary_distribution(P);
    return average_reward(pi, mdp.state_reward);
  };
  Vector grad(theta.size());
  Vector probe = theta;
  for (int k = 0; k < theta.size(); ++k) {
    probe(k) = theta(k) + eps;
    const double hi = eta_at(probe);
    probe(k) = theta(k) - eps;
    const double lo = eta_at(probe);
    probe(k) = theta(k);
    grad(k) = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

struct VerifyCheck {
  std::string name;
  double worst = 0.0;      // largest residual observed (or smallest margin)
  double threshold = 0.0;  // pass bound on `worst`
  bool larger_is_worse = true;
  bool passed() const {
    return larger_is_worse ? worst <= threshold : worst > threshold;
  }
};

struct VerifyOptions {
  GarnetSpec garnet{5, 3, 2, 0.0};
  FeatureParams features{4, 2};
  int trials = 20;
  int thetas_per_trial = 5;
  std::uint64_t seed = 1;
  std::vector<double> lambdas{0.0, 0.5, 0.9};
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const {
    for (const VerifyCheck& c : checks)
      if (!c.passed()) return false;
    return true;
  }
};

// Property suite over random instances and policies: every closed-form
// identity the oracle promises, each checked against an independent route.
//   stationarity      |P' pi - pi|_inf
//   poisson           |h - (r - eta 1) - P h|_inf
//   gradient-identity |grad_td - grad_h|_inf (the two gradient forms)
//   gradient-fd       relative error vs central finite differences
//   fixed-point       |A w* + b|_inf at the minimum-norm fixed point of the
//                     benchmark features (whose constant row sums make A
//                     singular along exactly one direction)
//   definiteness      margin gamma of -A's symmetric part on probe features
//                     with the constant vector outside span(phi); must stay
//                     strictly positive
inline VerifyReport verify_oracle_identities(const VerifyOptions& opt) {
  if (opt.trials < 1 || opt.thetas_per_trial < 1)
    throw parameter_error("verify_oracle_identities: counts must be >= 1");

  VerifyCheck stationarity{"stationarity", 0.0, 1e-10};
  VerifyCheck poisson{"poisson", 0.0, 1e-9};
  VerifyCheck grad_identity{"gradient-identity", 0.0, 1e-9};
  VerifyCheck grad_fd{"gradient-fd", 0.0, 1e-5};
  VerifyCheck fixed_point{"fixed-point", 0.0, 1e-10};
  VerifyCheck definiteness{"definiteness", 1e300, 0.0, false};

  for (int t = 0; t < opt.trials; ++t) {
    Rng root(opt.seed + t);
    const Mdp mdp =
        garnet_generate_ergodic(opt.garnet, root.child(3).seed()).mdp;
    const FeatureSet fs =
        build_feature_set(opt.garnet, opt.features, root.child(4).seed());
    const int probe_basis =
        std::min(opt.features.basis_size, opt.garnet.n_states - 1);
    const FeatureSet probe =
        build_probe_feature_set(opt.garnet.n_states, probe_basis,
                                opt.garnet.n_actions, root.child(6).seed());
    Rng theta_rng = root.child(5);

    for (int j = 0; j < opt.thetas_per_trial; ++j) {
      Vector theta(fs.param_size());
      for (int k = 0; k < theta.size(); ++k) theta(k) = theta_rng.normal();
      Vector theta_probe(probe.param_size());
      for (int k = 0; k < theta_probe.size(); ++k)
        theta_probe(k) = theta_rng.normal();

      const Matrix P = transition_under_policy(mdp, policy_matrix(fs, theta));
      const Vector pi = stationary_distribution(P);
      const double eta = average_reward(pi, mdp.state_reward);
      const Vector h =
          differential_value(P, mdp.state_reward, eta, reference_state(pi));

      stationarity.worst = std::max(
          stationarity.worst, (P.transpose() * pi - pi).cwiseAbs().maxCoeff());
      poisson.worst = std::max(
          poisson.worst,
          (h - (mdp.state_reward.array() - eta).matrix() - P * h)
              .cwiseAbs()
              .maxCoeff());

      const GradientPair g = gradient_exact(mdp, fs, theta);
      grad_identity.worst =
          std::max(grad_identity.worst,
                   (g.grad_td - g.grad_h).cwiseAbs().maxCoeff());
      const Vector fd = finite_difference_gradient(mdp, fs, theta);
      grad_fd.worst =
          std::max(grad_fd.worst, (g.grad_td - fd).cwiseAbs().maxCoeff() /
                                      fd.cwiseAbs().maxCoeff());

      const Matrix Pp =
          transition_under_policy(mdp, policy_matrix(probe, theta_probe));
      const Vector pip = stationary_distribution(Pp);
      const double etap = average_reward(pip, mdp.state_reward);

      for (double lambda : opt.lambdas) {
        const CriticOde ode = critic_ode_quantities(P, pi, mdp.state_reward,
                                                    eta, fs.phi, lambda);
        const Vector w = td_fixed_point_min_norm(ode.A, ode.b);
        fixed_point.worst = std::max(
            fixed_point.worst, (ode.A * w + ode.b).cwiseAbs().maxCoeff());
        const CriticOde probe_ode = critic_ode_quantities(
            Pp, pip, mdp.state_reward, etap, probe.phi, lambda);
        definiteness.worst = std::min(
            definiteness.worst, check_negative_definite(probe_ode.A).gamma);
      }
    }
  }

  VerifyReport report;
  report.checks = {stationarity, poisson,     grad_identity,
                   grad_fd,      fixed_point, definiteness};
  return report;
}

}  // namespace tdac
