#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tdac/errors.hpp"
#include "tdac/rng.hpp"

namespace tdac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Parameters of the garnet(X, U, B, sigma) random-MDP family: X states, U
// actions, B successor states per (state, action), and reward noise with
// standard deviation sigma added to the state's mean reward on every visit.
struct GarnetSpec {
  int n_states = 0;
  int n_actions = 0;
  int branching = 0;
  double sigma = 0.0;

  void validate() const {
    if (n_states < 1) throw parameter_error("GarnetSpec: n_states must be >= 1");
    if (n_actions < 1)
      throw parameter_error("GarnetSpec: n_actions must be >= 1");
    if (branching < 1 || branching > n_states)
      throw parameter_error("GarnetSpec: branching must be in [1, n_states]");
    if (!(sigma >= 0.0)) throw parameter_error("GarnetSpec: sigma must be >= 0");
  }

  bool operator==(const GarnetSpec&) const = default;
};

// A finite MDP with state-attached mean rewards.  transitions[u](x, y) is the
// probability of moving to y when taking action u in x.  The observed reward
// on a visit to x is state_reward(x) + noise, noise ~ N(0, reward_noise_var).
struct Mdp {
  GarnetSpec spec;
  std::uint64_t seed = 0;
  std::vector<Matrix> transitions;
  Vector state_reward;
  double reward_noise_var = 0.0;

  int n_states() const { return spec.n_states; }
  int n_actions() const { return spec.n_actions; }

  void validate() const {
    spec.validate();
    if (static_cast<int>(transitions.size()) != spec.n_actions)
      throw parameter_error("Mdp: one transition matrix per action required");
    if (state_reward.size() != spec.n_states)
      throw parameter_error("Mdp: state_reward size mismatch");
    if (!state_reward.allFinite())
      throw numerical_error("Mdp: non-finite state reward");
    if (!(reward_noise_var >= 0.0))
      throw parameter_error("Mdp: reward_noise_var must be >= 0");
    for (const Matrix& P : transitions) {
      if (P.rows() != spec.n_states || P.cols() != spec.n_states)
        throw parameter_error("Mdp: transition matrix shape mismatch");
      if ((P.array() < 0.0).any())
        throw parameter_error("Mdp: negative transition probability");
      for (int x = 0; x < P.rows(); ++x)
        if (std::abs(P.row(x).sum() - 1.0) > 1e-12)
          throw parameter_error("Mdp: transition row does not sum to 1");
    }
  }
};

// Irreducibility / aperiodicity report for a single transition matrix.
// `period` is the gcd of cycle lengths and is meaningful only when the chain
// is irreducible; reducible chains report aperiodic = false, period = 0.
struct ChainReport {
  bool irreducible = false;
  bool aperiodic = false;
  int period = 0;

  bool ergodic() const { return irreducible && aperiodic; }
};

namespace detail {

inline std::vector<std::vector<int>> support_adjacency(const Matrix& P) {
  std::vector<std::vector<int>> adj(P.rows());
  for (int x = 0; x < P.rows(); ++x)
    for (int y = 0; y < P.cols(); ++y)
      if (P(x, y) > 0.0) adj[x].push_back(y);
  return adj;
}

inline std::vector<int> bfs_levels(const std::vector<std::vector<int>>& adj,
                                   int start) {
  std::vector<int> level(adj.size(), -1);
  std::vector<int> queue{start};
  level[start] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int x = queue[head];
    for (int y : adj[x])
      if (level[y] < 0) {
        level[y] = level[x] + 1;
        queue.push_back(y);
      }
  }
  return level;
}

}  // namespace detail

// Classify a row-stochastic matrix: strong connectivity of the support graph
// and, when irreducible, the chain period via gcd of (level[x] + 1 - level[y])
// over all support edges x -> y of a breadth-first tree.
inline ChainReport validate_chain(const Matrix& P) {
  if (P.rows() != P.cols() || P.rows() < 1)
    throw parameter_error("validate_chain: square matrix required");
  for (int x = 0; x < P.rows(); ++x) {
    if ((P.row(x).array() < 0.0).any())
      throw parameter_error("validate_chain: negative entry");
    if (std::abs(P.row(x).sum() - 1.0) > 1e-12)
      throw parameter_error("validate_chain: row does not sum to 1");
  }

  const auto adj = detail::support_adjacency(P);
  const auto fwd = detail::bfs_levels(adj, 0);

  std::vector<std::vector<int>> radj(P.rows());
  for (int x = 0; x < P.rows(); ++x)
    for (int y : adj[x]) radj[y].push_back(x);
  const auto bwd = detail::bfs_levels(radj, 0);

  ChainReport report;
  report.irreducible =
      std::all_of(fwd.begin(), fwd.end(), [](int l) { return l >= 0; }) &&
      std::all_of(bwd.begin(), bwd.end(), [](int l) { return l >= 0; });
  if (!report.irreducible) return report;

  int g = 0;
  for (int x = 0; x < P.rows(); ++x)
    for (int y : adj[x]) g = std::gcd(g, fwd[x] + 1 - fwd[y]);
  report.period = std::abs(g);
  report.aperiodic = report.period == 1;
  return report;
}

// State-transition matrix induced by a stochastic policy.  `policy` is
// n_states x n_actions, each row a distribution over actions.
inline Matrix transition_under_policy(const Mdp& mdp, const Matrix& policy) {
  if (policy.rows() != mdp.n_states() || policy.cols() != mdp.n_actions())
    throw parameter_error("transition_under_policy: policy shape mismatch");
  for (int x = 0; x < policy.rows(); ++x) {
    if ((policy.row(x).array() < 0.0).any())
      throw parameter_error("transition_under_policy: negative policy entry");
    if (std::abs(policy.row(x).sum() - 1.0) > 1e-9)
      throw parameter_error("transition_under_policy: policy row not stochastic");
  }
  Matrix P = Matrix::Zero(mdp.n_states(), mdp.n_states());
  for (int u = 0; u < mdp.n_actions(); ++u)
    P.noalias() += policy.col(u).asDiagonal() * mdp.transitions[u];
  return P;
}

inline Matrix uniform_policy(const Mdp& mdp) {
  return Matrix::Constant(mdp.n_states(), mdp.n_actions(),
                          1.0 / mdp.n_actions());
}

struct Step {
  int next_state = 0;
  double reward = 0.0;
};

// One environment transition.  Consumes exactly 3 draws from `rng`: one for
// the successor state (inverse CDF over the transition row) and two for the
// reward noise (normal), even when sigma = 0 so that draw counts never depend
// on the noise level.  The reward is attached to the *current* state x.
inline Step sample_step(const Mdp& mdp, int x, int u, Rng& rng) {
  if (x < 0 || x >= mdp.n_states())
    throw parameter_error("sample_step: state out of range");
  if (u < 0 || u >= mdp.n_actions())
    throw parameter_error("sample_step: action out of range");
  const Matrix& P = mdp.transitions[u];
  std::vector<double> row(P.cols());
  for (int y = 0; y < P.cols(); ++y) row[y] = P(x, y);
  Step step;
  step.next_state = rng.categorical(row);
  const double noise = rng.normal() * std::sqrt(mdp.reward_noise_var);
  step.reward = mdp.state_reward(x) + noise;
  return step;
}

// Draw a garnet(X, U, B, sigma) instance.  Deterministic in (spec, seed).
//
// Draw order, all from Rng(seed):
//   1. mean rewards: for x = 0..X-1, one normal() each (2 draws apiece);
//   2. for u = 0..U-1, then x = 0..X-1:
//      a. B distinct successors by partial Fisher-Yates (B uniform_int
//         draws), then sorted ascending;
//      b. B-1 uniform cut points, sorted; the k-th spacing of [0,1] becomes
//         the probability of the k-th smallest successor.
inline Mdp garnet_generate(const GarnetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  Mdp mdp;
  mdp.spec = spec;
  mdp.seed = seed;
  mdp.reward_noise_var = spec.sigma * spec.sigma;

  mdp.state_reward.resize(spec.n_states);
  for (int x = 0; x < spec.n_states; ++x) mdp.state_reward(x) = rng.normal();

  mdp.transitions.assign(spec.n_actions,
                         Matrix::Zero(spec.n_states, spec.n_states));
  std::vector<int> pool(spec.n_states);
  for (int u = 0; u < spec.n_actions; ++u) {
    for (int x = 0; x < spec.n_states; ++x) {
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < spec.branching; ++i) {
        int j = i + rng.uniform_int(spec.n_states - i);
        std::swap(pool[i], pool[j]);
      }
      std::vector<int> targets(pool.begin(), pool.begin() + spec.branching);
      std::sort(targets.begin(), targets.end());

      std::vector<double> cuts(spec.branching - 1);
      for (double& c : cuts) c = rng.uniform();
      std::sort(cuts.begin(), cuts.end());

      double prev = 0.0;
      for (int k = 0; k < spec.branching; ++k) {
        double next = k + 1 < spec.branching ? cuts[k] : 1.0;
        mdp.transitions[u](x, targets[k]) = next - prev;
        prev = next;
      }
    }
  }
  mdp.validate();
  return mdp;
}

struct GarnetResult {
  Mdp mdp;
  int retries = 0;  // instances discarded before an ergodic one appeared
};

// garnet_generate, re-drawn with seed+1, seed+2, ... until the chain induced
// by the uniform policy is irreducible and aperiodic.  The returned Mdp keeps
// the seed that actually produced it.
inline GarnetResult garnet_generate_ergodic(const GarnetSpec& spec,
                                            std::uint64_t seed,
                                            int max_retries = 1000) {
  for (int k = 0; k <= max_retries; ++k) {
    GarnetResult result{garnet_generate(spec, seed + k), k};
    if (validate_chain(transition_under_policy(result.mdp,
                                               uniform_policy(result.mdp)))
            .ergodic())
      return result;
  }
  throw ergodicity_error(
      "garnet_generate_ergodic: no ergodic instance found within retry budget");
}

}  // namespace tdac
