// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
// Pass --full-scale to add the 100-run standard-error sanity checks (slow).
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tdac/cli.hpp"
#include "tdac/tdac.hpp"

namespace {

using tdac::Matrix;
using tdac::Vector;

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

Vector random_theta(tdac::Rng& rng, int size) {
  Vector theta(size);
  for (int i = 0; i < size; ++i) theta[i] = rng.normal();
  return theta;
}

double linf(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

// Shared 20-instance family used by criteria 1-3.
constexpr int kInstances = 20;
tdac::Mdp instance(int t) {
  return tdac::garnet_generate_ergodic(tdac::GarnetSpec{5, 3, 2, 0.0},
                                       100 + static_cast<std::uint64_t>(t))
      .mdp;
}

// ---------------------------------------------------------------- criterion 1
Outcome criterion_gradient_identity() {
  tdac::Rng theta_rng(9001);
  double worst_gap = 0.0;
  double worst_fd = 0.0;
  for (int t = 0; t < kInstances; ++t) {
    const tdac::Mdp mdp = instance(t);
    const tdac::FeatureSet fs = tdac::build_feature_set(
        mdp.spec, tdac::FeatureParams{4, 2}, 100 + static_cast<std::uint64_t>(t));
    for (int j = 0; j < 5; ++j) {
      const Vector theta = random_theta(theta_rng, fs.param_size());
      const tdac::GradientPair g = tdac::gradient_exact(mdp, fs, theta);
      worst_gap = std::max(worst_gap, linf(g.grad_td - g.grad_h));
      const Vector fd = tdac::finite_difference_gradient(mdp, fs, theta, 1e-5);
      worst_fd = std::max(worst_fd, linf(g.grad_td - fd) / linf(fd));
    }
  }
  Outcome o;
  o.pass = worst_gap <= 1e-9 && worst_fd <= 1e-5;
  o.details = fmt("identity gap %.2e <= 1e-9, fd rel err %.2e <= 1e-5",
                  worst_gap, worst_fd);
  return o;
}

// ---------------------------------------------------------------- criterion 2
Outcome criterion_solver_residuals() {
  tdac::Rng theta_rng(9002);
  double worst_pi = 0.0;
  double worst_poisson = 0.0;
  double worst_fp = 0.0;
  for (int t = 0; t < kInstances; ++t) {
    const tdac::Mdp mdp = instance(t);
    const tdac::FeatureSet fs = tdac::build_feature_set(
        mdp.spec, tdac::FeatureParams{4, 2}, 100 + static_cast<std::uint64_t>(t));
    for (int j = 0; j < 5; ++j) {
      const Vector theta = random_theta(theta_rng, fs.param_size());
      for (const double lambda : {0.0, 0.5, 0.9}) {
        const tdac::OracleBundle o = tdac::compute_oracle(mdp, fs, theta, lambda);
        worst_pi = std::max(
            worst_pi, linf(o.P.transpose() * o.pi - o.pi) +
                          std::abs(o.pi.sum() - 1.0));
        const Vector poisson =
            mdp.state_reward.array() - o.eta + (o.P * o.h).array() - o.h.array();
        worst_poisson = std::max(worst_poisson, linf(poisson));
        worst_fp = std::max(worst_fp, linf(o.A * o.w_star_td + o.b));
      }
    }
  }
  Outcome o;
  o.pass = worst_pi <= 1e-10 && worst_poisson <= 1e-9 && worst_fp <= 1e-10;
  o.details = fmt(
      "stationarity %.2e <= 1e-10, poisson %.2e <= 1e-9, |Aw*+b| %.2e <= 1e-10",
      worst_pi, worst_poisson, worst_fp);
  return o;
}

// ---------------------------------------------------------------- criterion 3
Outcome criterion_negative_definite() {
  tdac::Rng theta_rng(9003);
  double min_gamma = std::numeric_limits<double>::infinity();
  for (int t = 0; t < kInstances; ++t) {
    const tdac::Mdp mdp = instance(t);
    // basis built so the constant vector stays outside span(phi)
    const tdac::FeatureSet probe = tdac::build_probe_feature_set(
        5, 4, 3, 500 + static_cast<std::uint64_t>(t));
    for (int j = 0; j < 20; ++j) {
      const Vector theta = random_theta(theta_rng, probe.param_size());
      const Matrix P =
          tdac::transition_under_policy(mdp, tdac::policy_matrix(probe, theta));
      const Vector pi = tdac::stationary_distribution(P);
      const double eta = tdac::average_reward(pi, mdp.state_reward);
      for (const double lambda : {0.0, 0.5, 0.9}) {
        const tdac::CriticOde ode = tdac::critic_ode_quantities(
            P, pi, mdp.state_reward, eta, probe.phi, lambda);
        min_gamma =
            std::min(min_gamma, tdac::check_negative_definite(ode.A).gamma);
      }
    }
  }

  // counterexample: a constant feature column puts 1 in span(phi), and the
  // induced null direction caps the symmetric part's top eigenvalue at zero
  const tdac::Mdp mdp = instance(0);
  tdac::FeatureSet constant_col;
  constant_col.n_actions = 3;
  constant_col.phi = Matrix::Zero(5, 4);
  for (int i = 0; i < 3; ++i) constant_col.phi(i, i) = 1.0;
  constant_col.phi.col(3).setOnes();
  tdac::Rng counter_rng(9103);
  double counter_max_eig = -std::numeric_limits<double>::infinity();
  for (const double lambda : {0.0, 0.5, 0.9}) {
    const Vector theta = random_theta(counter_rng, constant_col.param_size());
    const Matrix P = tdac::transition_under_policy(
        mdp, tdac::policy_matrix(constant_col, theta));
    const Vector pi = tdac::stationary_distribution(P);
    const double eta = tdac::average_reward(pi, mdp.state_reward);
    const tdac::CriticOde ode = tdac::critic_ode_quantities(
        P, pi, mdp.state_reward, eta, constant_col.phi, lambda);
    counter_max_eig = std::max(counter_max_eig,
                               -tdac::check_negative_definite(ode.A).gamma);
  }

  Outcome o;
  o.pass = min_gamma > 0.0 && counter_max_eig >= -1e-10;
  o.details = fmt(
      "min gamma %.2e > 0 over 20x20x3; constant-column max eig %.2e >= -1e-10",
      min_gamma, counter_max_eig);
  return o;
}

// ---------------------------------------------------------------- criterion 4
// The final iterates are averaged across the 10 seeds before comparing with
// the oracle: at this horizon the per-seed error sits on the step-size noise
// floor (eta~ fluctuates with variance ~ gamma_N * S / 2 ~ 1e-3 around eta no
// matter how correct the update is), while the zero-mean fluctuation cancels
// in the seed average and leaves the fixed point itself exposed.
Outcome criterion_frozen_critic() {
  const tdac::Mdp mdp =
      tdac::garnet_generate_ergodic(tdac::GarnetSpec{5, 3, 2, 0.0}, 534).mdp;
  const Vector pi_uniform = tdac::stationary_distribution(
      tdac::transition_under_policy(mdp, tdac::uniform_policy(mdp)));
  int best_visited = 0;
  pi_uniform.maxCoeff(&best_visited);

  tdac::FeatureSet fs;  // indicator basis off the best-visited state keeps 1
  fs.n_actions = 3;     // outside span(phi), so A is invertible
  fs.phi = Matrix::Zero(5, 4);
  int col = 0;
  for (int i = 0; i < 5; ++i)
    if (i != best_visited) fs.phi(i, col++) = 1.0;

  tdac::AlgoConfig algo;
  algo.freeze_actor = true;
  algo.lambda = 0.0;
  const tdac::OracleBundle oracle =
      tdac::compute_oracle(mdp, fs, Vector::Zero(fs.param_size()), algo.lambda);
  const Vector w_star = tdac::td_fixed_point(oracle.A, oracle.b);

  const int n_seeds = 10;
  const long long n_steps = 200000;
  Vector w_mean = Vector::Zero(fs.basis_size());
  double eta_mean = 0.0;
  double w_err_mean = 0.0;
  double eta_err_mean = 0.0;
  for (int s = 1; s <= n_seeds; ++s) {
    tdac::AgentState state = tdac::init_agent(fs);
    tdac::RunRngs rngs = tdac::make_run_rngs(static_cast<std::uint64_t>(s));
    for (long long n = 0; n < n_steps; ++n)
      tdac::algorithm1_step(state, mdp, fs, algo, rngs);
    w_mean += state.w / n_seeds;
    eta_mean += state.eta_tilde / n_seeds;
    w_err_mean += (state.w - w_star).norm() / n_seeds;
    eta_err_mean += std::abs(state.eta_tilde - oracle.eta) / n_seeds;
  }
  const double w_err = (w_mean - w_star).norm();
  const double eta_err = std::abs(eta_mean - oracle.eta);

  Outcome o;
  o.pass = w_err <= 1e-2 && eta_err <= 1e-2;
  o.details = fmt(
      "seed-averaged |w_N - w*| %.2e <= 1e-2, |eta~_N - eta| %.2e <= 1e-2 "
      "(per-seed means %.2e / %.2e)",
      w_err, eta_err, w_err_mean, eta_err_mean);
  return o;
}

// ---------------------------------------------------------------- criterion 5
Outcome criterion_policy_improvement() {
  tdac::ExperimentConfig cfg;  // desk-scale defaults: garnet(30,4,2,0.1), L=8,l=3
  cfg.seed = 1;
  const tdac::BatchResult res = tdac::run_batch(cfg);
  const tdac::StrideStat& last = res.summary.strides.back();
  const double se = last.eta_exact_se.value();
  const bool improved = last.eta_exact_mean >= 5.0 * se;

  // 10 coarse windows over the stride grid; means must be non-decreasing up
  // to one standard error of slack
  const int n_strides = static_cast<int>(res.summary.strides.size());
  std::vector<double> wmean(10, 0.0), wse(10, 0.0);
  for (int k = 0; k < 10; ++k) {
    const int lo = k * n_strides / 10;
    const int hi = (k + 1) * n_strides / 10;
    for (int i = lo; i < hi; ++i) {
      wmean[k] += res.summary.strides[i].eta_exact_mean / (hi - lo);
      wse[k] += res.summary.strides[i].eta_exact_se.value() / (hi - lo);
    }
  }
  double worst_drop = 0.0;
  bool monotone = true;
  for (int k = 0; k + 1 < 10; ++k) {
    const double slack = std::max(wse[k], wse[k + 1]);
    worst_drop = std::max(worst_drop, wmean[k] - wmean[k + 1]);
    if (wmean[k + 1] < wmean[k] - slack) monotone = false;
  }

  Outcome o;
  o.pass = improved && monotone;
  o.details = fmt(
      "final mean eta %.4f >= 5 SE (SE %.4f); worst window drop %.4f within "
      "one SE",
      last.eta_exact_mean, se, worst_drop);
  return o;
}

// ---------------------------------------------------------------- criterion 6
Outcome criterion_gradient_neighborhood() {
  tdac::ExperimentConfig base;
  base.garnet = tdac::GarnetSpec{10, 4, 3, 0.1};
  base.features = tdac::FeatureParams{5, 2};
  base.n_runs = 10;
  base.seed = 101;
  base.shared_instance = true;  // one fixed instance, many run seeds

  tdac::ExperimentConfig amplified = base;
  amplified.algo.gamma_w_factor = 4.0;
  amplified.algo.gamma_eta_factor = 4.0;

  const tdac::ComparisonResult cmp = tdac::compare_algorithms(base, amplified);

  const long long tail_from = base.n_steps - base.n_steps / 10;
  auto tail_min = [&](const tdac::RunRecord& r) {
    double m = std::numeric_limits<double>::infinity();
    for (const tdac::Sample& s : r.samples)
      if (s.n >= tail_from) m = std::min(m, s.grad_norm);
    return m;
  };
  const int m = base.n_runs;
  std::vector<double> diff(m);
  double mean_diff = 0.0;
  for (int i = 0; i < m; ++i) {
    diff[i] = tail_min(cmp.records_b[i]) - tail_min(cmp.records_a[i]);
    mean_diff += diff[i] / m;
  }
  double ss = 0.0;
  for (const double d : diff) ss += (d - mean_diff) * (d - mean_diff);
  const double se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);

  Outcome o;
  o.pass = mean_diff <= se;
  o.details = fmt(
      "tail-min grad norm change (4,4)-(1,1) = %.4f <= one SE (%.4f) over 10 "
      "paired seeds",
      mean_diff, se);
  return o;
}

// ---------------------------------------------------------------- criterion 7
Outcome criterion_early_phase_comparison() {
  tdac::ExperimentConfig single;  // desk-scale defaults, 20 runs
  single.seed = 1;
  tdac::ExperimentConfig two = single;
  two.algo.algorithm = tdac::AlgorithmKind::two_scale;

  const tdac::ComparisonResult cmp = tdac::compare_algorithms(single, two);
  const long long early_n = single.n_steps / 10;
  const tdac::DiffStat* at = nullptr;
  for (const tdac::DiffStat& d : cmp.diffs)
    if (d.n == early_n) at = &d;
  if (at == nullptr) return {false, "10%-horizon stride missing from grid"};

  Outcome o;
  const double se = at->se_diff.value();
  o.pass = at->mean_diff >= -se;
  o.details = fmt(
      "mean eta(single) - eta(two_scale) at n=%lld is %.4f >= -SE (SE %.4f), "
      "20 paired seeds",
      at->n, at->mean_diff, se);
  return o;
}

// ---------------------------------------------------------------- criterion 8
Outcome criterion_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "tdac_acceptance";
  std::filesystem::create_directories(dir);
  const std::string out_a = (dir / "rerun_a.csv").string();
  const std::string out_b = (dir / "rerun_b.csv").string();
  auto args = [](const std::string& out) {
    return std::vector<std::string>{
        "tdac",    "run", "--states", "8",  "--actions", "3", "--branching",
        "2",       "--sigma", "0.1",  "--basis", "5", "--ones", "2",
        "--steps", "2000", "--stride", "200", "--runs", "3", "--seed", "17",
        "--out",   out};
  };
  if (tdac::cli_dispatch(args(out_a)) != 0 ||
      tdac::cli_dispatch(args(out_b)) != 0)
    return {false, "run invocation failed"};
  const std::string a = tdac::read_text_file(out_a);
  const std::string b = tdac::read_text_file(out_b);
  Outcome o;
  o.pass = !a.empty() && a == b &&
           a.rfind(tdac::csv_header, 0) == 0;
  o.details = fmt("repeated `run` produced %s CSV output (%zu bytes)",
                  o.pass ? "byte-identical" : "DIFFERING", a.size());
  return o;
}

// ------------------------------------------------------- full-scale (opt-in)
Outcome fullscale_standard_errors(const tdac::GarnetSpec& spec, double order) {
  tdac::ExperimentConfig cfg;
  cfg.garnet = spec;
  cfg.n_runs = 100;
  cfg.seed = 1;
  const tdac::BatchResult res = tdac::run_batch(cfg);
  const double se = res.summary.strides.back().eta_exact_se.value();
  Outcome o;
  o.pass = se >= order / 4.0 && se <= order * 4.0;
  o.details = fmt("garnet(%d,%d,%d,%.1f) 100-run final SE %.4f, expected order %.3f",
                  spec.n_states, spec.n_actions, spec.branching, spec.sigma,
                  se, order);
  return o;
}

struct Criterion {
  int number;
  const char* name;
  double budget_s;  // wall-clock budget where the contract states one
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  bool full_scale = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--full-scale") full_scale = true;

  const std::vector<Criterion> criteria = {
      {1, "exact gradient identities", 10.0, criterion_gradient_identity},
      {2, "exact solver residuals", 5.0, criterion_solver_residuals},
      {3, "critic ODE negative definiteness", 30.0, criterion_negative_definite},
      {4, "frozen-actor critic convergence", 60.0, criterion_frozen_critic},
      {5, "policy improvement over uniform", 300.0, criterion_policy_improvement},
      {6, "gradient neighborhood shrinks with amplifiers", 300.0,
       criterion_gradient_neighborhood},
      {7, "early-phase single- vs two-scale comparison", 300.0,
       criterion_early_phase_comparison},
      {8, "byte-identical reruns", 120.0, criterion_determinism},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget = elapsed < c.budget_s;
    const bool pass = o.pass && in_budget;
    all_pass = all_pass && pass;
    std::printf("[%s] criterion %d: %s (%s; %.1f s%s)\n",
                pass ? "PASS" : "FAIL", c.number, c.name, o.details.c_str(),
                elapsed, in_budget ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }

  if (full_scale) {
    const std::vector<std::pair<tdac::GarnetSpec, double>> checks = {
        {tdac::GarnetSpec{30, 4, 2, 0.1}, 0.04},
        {tdac::GarnetSpec{30, 15, 15, 0.1}, 0.018},
    };
    for (const auto& [spec, order] : checks) {
      const auto start = std::chrono::steady_clock::now();
      Outcome o;
      try {
        o = fullscale_standard_errors(spec, order);
      } catch (const std::exception& e) {
        o.pass = false;
        o.details = std::string("exception: ") + e.what();
      }
      const double elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
      all_pass = all_pass && o.pass;
      std::printf("[%s] full-scale: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL",
                  o.details.c_str(), elapsed);
      std::fflush(stdout);
    }
  }

  std::printf("acceptance: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}
