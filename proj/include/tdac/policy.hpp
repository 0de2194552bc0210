#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/rng.hpp"

namespace tdac {

// Softmax policy over the action embedding:
//   mu(u | x, theta) proportional to exp(theta . xi(x, u)),
// where theta block u scores action u against the state feature phi(x).
// Logits are max-shifted before exponentiation, so any finite theta is safe.
inline Vector policy_distribution(const FeatureSet& fs, const Vector& theta,
                                  int x) {
  if (theta.size() != fs.param_size())
    throw parameter_error("policy_distribution: theta size mismatch");
  if (!theta.allFinite())
    throw parameter_error("policy_distribution: non-finite theta");
  if (x < 0 || x >= fs.n_states())
    throw parameter_error("policy_distribution: state out of range");

  const int L = fs.basis_size();
  Vector logits(fs.n_actions);
  for (int u = 0; u < fs.n_actions; ++u)
    logits(u) = theta.segment(static_cast<Eigen::Index>(u) * L, L)
                    .dot(fs.phi.row(x));
  const double shift = logits.maxCoeff();
  Vector mu = (logits.array() - shift).exp();
  mu /= mu.sum();
  return mu;
}

// All state rows at once: n_states x n_actions, row x = mu(. | x, theta).
inline Matrix policy_matrix(const FeatureSet& fs, const Vector& theta) {
  Matrix policy(fs.n_states(), fs.n_actions);
  for (int x = 0; x < fs.n_states(); ++x)
    policy.row(x) = policy_distribution(fs, theta, x).transpose();
  return policy;
}

// Likelihood ratio psi(x, u, theta) = grad_theta log mu(u | x, theta)
//                                   = xi(x, u) - sum_u' mu(u'|x) xi(x, u').
// Block v of the result is phi(x) * ([v == u] - mu(v | x, theta)), so
// sum_u mu(u|x) psi(x, u) = 0 and |psi|_2 <= 2 sqrt(l) for l-hot features.
inline Vector likelihood_ratio(const FeatureSet& fs, const Vector& theta, int x,
                               int u) {
  if (u < 0 || u >= fs.n_actions)
    throw parameter_error("likelihood_ratio: action out of range");
  const Vector mu = policy_distribution(fs, theta, x);
  const int L = fs.basis_size();
  Vector psi(fs.param_size());
  for (int v = 0; v < fs.n_actions; ++v)
    psi.segment(static_cast<Eigen::Index>(v) * L, L) =
        fs.phi.row(x).transpose() * ((v == u ? 1.0 : 0.0) - mu(v));
  return psi;
}

// Draw an action from mu(. | x, theta).  Consumes exactly one rng draw
// (inverse CDF over the action distribution, walked in action-index order).
inline int sample_action(const FeatureSet& fs, const Vector& theta, int x,
                         Rng& rng) {
  const Vector mu = policy_distribution(fs, theta, x);
  std::vector<double> probs(mu.data(), mu.data() + mu.size());
  return rng.categorical(probs);
}

}  // namespace tdac
