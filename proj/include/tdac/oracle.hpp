#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/mdp.hpp"
#include "tdac/policy.hpp"

namespace tdac {

// Exact (dynamic-programming) counterparts of every quantity the learning
// algorithm estimates from samples.  Everything here reduces to dense linear
// solves on the closed policy chain P(theta); no simulation, no truncation.

namespace detail {

inline double condition_1norm(const Matrix& A,
                              const Eigen::PartialPivLU<Matrix>& lu) {
  const double na = A.cwiseAbs().colwise().sum().maxCoeff();
  const double ni = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
  return na * ni;
}

// Dense LU solve with a residual gate; surfaces the condition estimate when
// the system turns out singular or numerically hopeless (> ~1e12).
inline Matrix solve_checked(const Matrix& A, const Matrix& rhs,
                            const std::string& what) {
  if (!A.allFinite() || !rhs.allFinite())
    throw numerical_error(what + ": non-finite input");
  Eigen::PartialPivLU<Matrix> lu(A);
  Matrix x = lu.solve(rhs);
  const double scale =
      std::max({rhs.cwiseAbs().maxCoeff(),
                A.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff(), 1e-30});
  const double resid = (A * x - rhs).cwiseAbs().maxCoeff() / scale;
  if (!x.allFinite() || resid > 1e-8) {
    std::ostringstream msg;
    msg << what << ": linear solve failed (relative residual " << resid
        << ", condition estimate " << condition_1norm(A, lu) << ")";
    throw conditioning_error(msg.str());
  }
  return x;
}

}  // namespace detail

// Stationary distribution of an ergodic row-stochastic P: the balance
// equations for all states but the last, plus the normalization row.
// Post: |P' pi - pi|_inf <= 1e-10 and pi > 0 componentwise.
inline Vector stationary_distribution(const Matrix& P) {
  if (!validate_chain(P).ergodic())
    throw ergodicity_error(
        "stationary_distribution: chain is not irreducible + aperiodic");
  const int n = static_cast<int>(P.rows());
  Matrix A = P.transpose() - Matrix::Identity(n, n);
  A.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Vector pi = detail::solve_checked(A, rhs, "stationary_distribution");
  if ((P.transpose() * pi - pi).cwiseAbs().maxCoeff() > 1e-10)
    throw conditioning_error("stationary_distribution: balance residual too large");
  if (pi.minCoeff() <= 0.0)
    throw conditioning_error("stationary_distribution: nonpositive mass");
  return pi;
}

inline double average_reward(const Vector& pi, const Vector& reward) {
  if (pi.size() != reward.size())
    throw parameter_error("average_reward: size mismatch");
  return pi.dot(reward);
}

// Reference state: the most visited state, lowest index on ties.
inline int reference_state(const Vector& pi) {
  int x_star = 0;
  for (int x = 1; x < pi.size(); ++x)
    if (pi(x) > pi(x_star)) x_star = x;
  return x_star;
}

// Differential value h: the Poisson equation h = r - eta 1 + P h with the
// anchor h(x_star) = 0 replacing the x_star row.  When eta is the true
// average reward the anchored solution satisfies the full equation; the
// residual gate (1e-9 on every row) catches an inconsistent eta.
inline Vector differential_value(const Matrix& P, const Vector& reward,
                                 double eta, int x_star) {
  const int n = static_cast<int>(P.rows());
  if (reward.size() != n)
    throw parameter_error("differential_value: reward size mismatch");
  if (x_star < 0 || x_star >= n)
    throw parameter_error("differential_value: x_star out of range");
  if (!validate_chain(P).ergodic())
    throw ergodicity_error(
        "differential_value: chain is not irreducible + aperiodic");

  Matrix A = Matrix::Identity(n, n) - P;
  Vector rhs = reward.array() - eta;
  A.row(x_star).setZero();
  A(x_star, x_star) = 1.0;
  rhs(x_star) = 0.0;
  Vector h = detail::solve_checked(A, rhs, "differential_value");

  const double resid =
      (h - (reward.array() - eta).matrix() - P * h).cwiseAbs().maxCoeff();
  if (resid > 1e-9) {
    std::ostringstream msg;
    msg << "differential_value: Poisson residual " << resid
        << " (is eta the true average reward of (P, r)?)";
    throw numerical_error(msg.str());
  }
  return h;
}

// Exact temporal difference of the transition x -> y.
inline double td_exact(const Vector& reward, double eta, const Vector& h, int x,
                       int y) {
  if (x < 0 || x >= h.size() || y < 0 || y >= h.size())
    throw parameter_error("td_exact: state out of range");
  return reward(x) - eta + h(y) - h(x);
}

struct GradientPair {
  Vector grad_td;  // sum over (x,u,y) of pi mu P psi(x,u) d(x,y)
  Vector grad_h;   // same weights against h(y) alone
};

// Exact policy-gradient of the average reward, computed two equivalent ways:
// against the full temporal difference and against h(y) alone.  The two agree
// because sum_u mu(u|x) psi(x,u) = 0 kills the state-only terms of d.
inline GradientPair gradient_exact(const Mdp& mdp, const FeatureSet& fs,
                                   const Vector& theta) {
  const Matrix policy = policy_matrix(fs, theta);
  const Matrix P = transition_under_policy(mdp, policy);
  const Vector pi = stationary_distribution(P);
  const double eta = average_reward(pi, mdp.state_reward);
  const Vector h =
      differential_value(P, mdp.state_reward, eta, reference_state(pi));

  GradientPair g{Vector::Zero(fs.param_size()), Vector::Zero(fs.param_size())};
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int u = 0; u < mdp.n_actions(); ++u) {
      const double weight = pi(x) * policy(x, u);
      if (weight == 0.0) continue;
      const double expected_h_next = mdp.transitions[u].row(x).dot(h);
      const double expected_d =
          mdp.state_reward(x) - eta - h(x) + expected_h_next;
      const Vector psi = likelihood_ratio(fs, theta, x, u);
      g.grad_td.noalias() += weight * expected_d * psi;
      g.grad_h.noalias() += weight * expected_h_next * psi;
    }
  }
  return g;
}

struct CriticOde {
  Matrix G;  // L x X:  Phi' Pi sum_m lambda^m P^m
  Matrix M;  // X x X:  (1 - lambda) sum_m lambda^m P^{m+1}
  Matrix A;  // L x L:  Phi' Pi (M - I) Phi
  Vector b;  // L:      Phi' Pi sum_m lambda^m P^m (r - eta 1)
};

// Mean-ODE quantities of the TD(lambda) critic.  The geometric series
// S = sum_m (lambda P)^m is evaluated exactly as (I - lambda P)^{-1} via a
// dense solve; nothing is truncated.  M is row-stochastic and A is strictly
// negative definite whenever the feature columns are independent with the
// constant vector outside their span.
inline CriticOde critic_ode_quantities(const Matrix& P, const Vector& pi,
                                       const Vector& reward, double eta,
                                       const Matrix& phi, double lambda) {
  const int n = static_cast<int>(P.rows());
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw parameter_error("critic_ode_quantities: lambda must be in [0, 1)");
  if (pi.size() != n || reward.size() != n || phi.rows() != n)
    throw parameter_error("critic_ode_quantities: shape mismatch");

  const Matrix S = detail::solve_checked(
      Matrix::Identity(n, n) - lambda * P, Matrix::Identity(n, n),
      "critic_ode_quantities");
  const Matrix phi_pi = phi.transpose() * pi.asDiagonal();  // L x X

  CriticOde ode;
  ode.G = phi_pi * S;
  ode.M = (1.0 - lambda) * S * P;
  ode.A = phi_pi * (ode.M - Matrix::Identity(n, n)) * phi;
  ode.b = ode.G * (reward.array() - eta).matrix();
  return ode;
}

// TD(lambda) fixed point w* = -A^{-1} b.  Post: |A w* + b|_inf <= 1e-10.
// Singularity is detected by rank, not by the solve residual: a singular A
// with b in its range (the constant-direction case) still admits solutions
// with tiny residuals, so an LU residual gate would never fire.
inline Vector td_fixed_point(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw parameter_error("td_fixed_point: shape mismatch");
  if (!A.allFinite() || !b.allFinite())
    throw numerical_error("td_fixed_point: non-finite input");
  Eigen::ColPivHouseholderQR<Matrix> qr;
  qr.setThreshold(1e-8);
  qr.compute(A);
  if (qr.rank() < A.rows())
    throw conditioning_error(
        "td_fixed_point: A is rank deficient (is a constant direction inside "
        "span(Phi)?); use td_fixed_point_min_norm for the consistent case");
  const Vector w = qr.solve(Matrix(-b));
  if (!w.allFinite() || (A * w + b).cwiseAbs().maxCoeff() > 1e-10)
    throw conditioning_error("td_fixed_point: residual exceeds 1e-10");
  return w;
}

// Minimum-norm solution of A w = -b.  Binary features with a constant row sum
// put the constant vector inside span(Phi), which costs A exactly one null
// direction (along w with Phi w proportional to 1); the system stays
// consistent because b is orthogonal to that direction (pi' S = pi'/(1-lambda)
// annihilates r - eta 1 in the aggregate).  The minimum-norm point is the
// mean-ODE limit from w_0 = 0 -- the component along the null direction is
// conserved by the flow -- and coincides with -A^{-1} b whenever A is
// invertible.  Post: |A w + b|_inf <= 1e-10 relative to the data scale.
inline Vector td_fixed_point_min_norm(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw parameter_error("td_fixed_point_min_norm: shape mismatch");
  if (!A.allFinite() || !b.allFinite())
    throw numerical_error("td_fixed_point_min_norm: non-finite input");
  // the threshold must be in force before compute(): the decomposition's
  // second orthogonalization pass is built for the rank decided at that point
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-8);  // treat the analytically-null direction as null
  cod.compute(A);
  const Vector w = cod.solve(Matrix(-b));
  const double scale = std::max(
      {b.cwiseAbs().maxCoeff(), A.cwiseAbs().maxCoeff() * w.cwiseAbs().maxCoeff(),
       1.0});
  if (!w.allFinite() || (A * w + b).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw conditioning_error(
        "td_fixed_point_min_norm: system inconsistent beyond the expected "
        "null direction");
  return w;
}

struct Projection {
  Vector w;        // weights of the Pi-orthogonal projection of h onto span(Phi)
  double eps_app;  // |h - Phi w|_Pi, the approximation error of the basis
};

// Pi-weighted least squares: w = (Phi' Pi Phi)^{-1} Phi' Pi h.
inline Projection projected_weights_and_error(const Matrix& phi,
                                              const Vector& pi,
                                              const Vector& h) {
  if (phi.rows() != pi.size() || h.size() != pi.size())
    throw parameter_error("projected_weights_and_error: shape mismatch");
  const Matrix gram = phi.transpose() * pi.asDiagonal() * phi;
  const Vector rhs = phi.transpose() * pi.asDiagonal() * h;
  Projection proj;
  proj.w = detail::solve_checked(gram, Matrix(rhs), "projected_weights_and_error");
  const Vector residual = h - phi * proj.w;
  proj.eps_app = std::sqrt(residual.dot(pi.asDiagonal() * residual));
  return proj;
}

struct Definiteness {
  bool negative_definite = false;
  double gamma = 0.0;  // -max eigenvalue of the symmetric part
};

inline Definiteness check_negative_definite(const Matrix& A) {
  if (A.rows() != A.cols())
    throw parameter_error("check_negative_definite: square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success)
    throw numerical_error("check_negative_definite: eigensolver failed");
  Definiteness d;
  d.gamma = -es.eigenvalues().maxCoeff();
  d.negative_definite = d.gamma > 0.0;
  return d;
}

// Every closed-form quantity of a (policy, instance, lambda) triple at once.
struct OracleBundle {
  double lambda = 0.0;
  Matrix P;       // chain under mu(. | ., theta)
  Vector pi;      // stationary distribution
  double eta = 0.0;
  int x_star = 0;
  Vector h;       // differential value anchored at x_star
  Vector grad_eta;    // exact gradient (temporal-difference form)
  Vector grad_eta_h;  // exact gradient (h-form); equals grad_eta analytically
  Matrix G;
  Matrix M;
  Matrix A;
  Vector b;
  Vector w_star_td;    // minimum-norm solution of A w = -b (= -A^{-1} b
                       // whenever A is invertible)
  Vector w_star_proj;  // Pi-weighted projection of h
  double eps_app = 0.0;
};

inline OracleBundle compute_oracle(const Mdp& mdp, const FeatureSet& fs,
                                   const Vector& theta, double lambda) {
  if (fs.n_states() != mdp.n_states() || fs.n_actions != mdp.n_actions())
    throw parameter_error("compute_oracle: feature/instance shape mismatch");
  OracleBundle o;
  o.lambda = lambda;
  o.P = transition_under_policy(mdp, policy_matrix(fs, theta));
  o.pi = stationary_distribution(o.P);
  o.eta = average_reward(o.pi, mdp.state_reward);
  o.x_star = reference_state(o.pi);
  o.h = differential_value(o.P, mdp.state_reward, o.eta, o.x_star);

  const GradientPair g = gradient_exact(mdp, fs, theta);
  o.grad_eta = g.grad_td;
  o.grad_eta_h = g.grad_h;

  const CriticOde ode = critic_ode_quantities(o.P, o.pi, mdp.state_reward,
                                              o.eta, fs.phi, lambda);
  o.G = ode.G;
  o.M = ode.M;
  o.A = ode.A;
  o.b = ode.b;
  o.w_star_td = td_fixed_point_min_norm(o.A, o.b);

  const Projection proj = projected_weights_and_error(fs.phi, o.pi, o.h);
  o.w_star_proj = proj.w;
  o.eps_app = proj.eps_app;
  return o;
}

}  // namespace tdac
