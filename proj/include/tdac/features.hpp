#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "tdac/errors.hpp"
#include "tdac/mdp.hpp"
#include "tdac/rng.hpp"

namespace tdac {

// Sparse binary state features for the critic plus their action embedding for
// the actor.  phi is n_states x L with 0/1 entries; the actor's feature for
// (x, u) is xi(x, u) in R^{L * n_actions}: phi(x) placed in block u, zeros
// elsewhere.  Policy parameter vectors theta live in the same R^{L * n_actions}.
struct FeatureSet {
  Matrix phi;      // n_states x L
  int n_actions = 0;

  int n_states() const { return static_cast<int>(phi.rows()); }
  int basis_size() const { return static_cast<int>(phi.cols()); }
  int param_size() const { return basis_size() * n_actions; }

  Vector state_feature(int x) const { return phi.row(x).transpose(); }

  void validate(bool require_distinct_rows = true) const {
    if (phi.rows() < 1 || phi.cols() < 1)
      throw parameter_error("FeatureSet: empty feature matrix");
    if (n_actions < 1) throw parameter_error("FeatureSet: n_actions must be >= 1");
    for (int x = 0; x < phi.rows(); ++x)
      for (int j = 0; j < phi.cols(); ++j)
        if (phi(x, j) != 0.0 && phi(x, j) != 1.0)
          throw parameter_error("FeatureSet: entries must be 0 or 1");
    if (require_distinct_rows) {
      std::set<std::vector<double>> seen;
      for (int x = 0; x < phi.rows(); ++x) {
        std::vector<double> row(phi.cols());
        for (int j = 0; j < phi.cols(); ++j) row[j] = phi(x, j);
        if (!seen.insert(row).second)
          throw parameter_error("FeatureSet: duplicate feature rows");
      }
    }
  }
};

// xi(x, u): the state feature copied into action block u.
inline Vector action_feature(const FeatureSet& fs, int x, int u) {
  if (x < 0 || x >= fs.n_states())
    throw parameter_error("action_feature: state out of range");
  if (u < 0 || u >= fs.n_actions)
    throw parameter_error("action_feature: action out of range");
  Vector xi = Vector::Zero(fs.param_size());
  xi.segment(static_cast<Eigen::Index>(u) * fs.basis_size(), fs.basis_size()) =
      fs.phi.row(x).transpose();
  return xi;
}

struct FeatureParams {
  int basis_size = 0;    // L
  int ones_per_row = 0;  // l

  void validate() const {
    if (basis_size < 1)
      throw parameter_error("FeatureParams: basis_size must be >= 1");
    if (ones_per_row < 1 || ones_per_row > basis_size)
      throw parameter_error(
          "FeatureParams: ones_per_row must be in [1, basis_size]");
  }
};

namespace detail {

inline double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v *= static_cast<double>(n - k + i) / i;
  return v;
}

}  // namespace detail

// Draw a feature matrix: each row gets `ones_per_row` ones in distinct
// positions, rows pairwise distinct, columns linearly independent
// (regenerated until the rank check passes).
//
// Note the constant vector always lies inside the column span here: every row
// sums to `ones_per_row`, so phi (1/l, ..., 1/l)' = 1 identically.  The
// critic's fixed-point matrix therefore carries exactly one null direction
// with this family; the oracle handles it through the minimum-norm solve.
// Use build_probe_feature_set when a strictly negative definite system is
// required.
//
// Deterministic in (spec, params, seed).  Attempt j uses the derived stream
// Rng(seed).child(j); within an attempt, each state consumes `ones_per_row`
// uniform_int draws per candidate row (partial Fisher-Yates over the L
// positions, re-drawn whenever the pattern duplicates an earlier row).
inline FeatureSet build_feature_set(const GarnetSpec& spec,
                                    const FeatureParams& params,
                                    std::uint64_t seed) {
  spec.validate();
  params.validate();
  const int X = spec.n_states;
  const int L = params.basis_size;
  const int l = params.ones_per_row;

  if (detail::binomial(L, l) < static_cast<double>(X))
    throw parameter_error(
        "build_feature_set: fewer distinct patterns than states");
  if (L > X)
    throw parameter_error(
        "build_feature_set: need basis_size <= n_states for independent "
        "columns");

  constexpr int max_attempts = 64;
  constexpr int max_row_redraws = 100000;
  Rng root(seed);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng = root.child(attempt);
    FeatureSet fs;
    fs.phi = Matrix::Zero(X, L);
    fs.n_actions = spec.n_actions;

    std::set<std::vector<int>> seen;
    std::vector<int> positions(L);
    bool ok = true;
    for (int x = 0; x < X && ok; ++x) {
      int redraws = 0;
      for (;;) {
        std::iota(positions.begin(), positions.end(), 0);
        for (int i = 0; i < l; ++i) {
          int j = i + rng.uniform_int(L - i);
          std::swap(positions[i], positions[j]);
        }
        std::vector<int> pattern(positions.begin(), positions.begin() + l);
        std::sort(pattern.begin(), pattern.end());
        if (seen.insert(pattern).second) {
          for (int p : pattern) fs.phi(x, p) = 1.0;
          break;
        }
        if (++redraws > max_row_redraws) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;

    if (fs.phi.colPivHouseholderQr().rank() == L) {
      fs.validate();
      return fs;
    }
  }
  throw parameter_error(
      "build_feature_set: could not reach independent columns within the "
      "attempt budget");
}

// Unstructured binary features for definiteness probes: entries drawn
// Bernoulli(1/2), rows pairwise distinct, and [phi | 1] of full column rank
// L + 1 -- columns independent with the constant vector outside their span,
// which is exactly the condition under which the critic's fixed-point matrix
// is strictly negative definite.  Deterministic in (arguments, seed).
inline FeatureSet build_probe_feature_set(int n_states, int basis_size,
                                          int n_actions, std::uint64_t seed) {
  if (n_states < 1 || basis_size < 1 || n_actions < 1)
    throw parameter_error("build_probe_feature_set: sizes must be >= 1");
  if (basis_size + 1 > n_states)
    throw parameter_error(
        "build_probe_feature_set: need basis_size + 1 <= n_states so the "
        "columns can be independent with the constant vector outside their "
        "span");

  constexpr int max_attempts = 1000;
  Rng root(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng = root.child(attempt);
    FeatureSet fs;
    fs.phi = Matrix::Zero(n_states, basis_size);
    fs.n_actions = n_actions;
    for (int x = 0; x < n_states; ++x)
      for (int j = 0; j < basis_size; ++j)
        fs.phi(x, j) = rng.uniform() < 0.5 ? 1.0 : 0.0;

    std::set<std::vector<double>> seen;
    bool distinct = true;
    for (int x = 0; x < n_states && distinct; ++x) {
      std::vector<double> row(basis_size);
      for (int j = 0; j < basis_size; ++j) row[j] = fs.phi(x, j);
      distinct = seen.insert(row).second;
    }
    if (!distinct) continue;

    Matrix augmented(n_states, basis_size + 1);
    augmented.leftCols(basis_size) = fs.phi;
    augmented.col(basis_size).setOnes();
    if (augmented.colPivHouseholderQr().rank() == basis_size + 1) {
      fs.validate();
      return fs;
    }
  }
  throw parameter_error(
      "build_probe_feature_set: no admissible draw within the attempt budget");
}

}  // namespace tdac
