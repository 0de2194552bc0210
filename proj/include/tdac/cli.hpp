#pragma once

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdac/harness.hpp"
#include "tdac/verify.hpp"
#include "tdac/version.hpp"

namespace tdac {

// Command-line front end.
//
//   tdac generate   draw a benchmark instance and write it as JSON
//   tdac run        simulate a batch and export per-stride aggregates
//   tdac compare    paired single-scale vs two-scale comparison
//   tdac verify     oracle identity property suite on random instances
//   tdac plot-data  re-emit a records file as the per-stride CSV
//
// Exit codes: 0 success, 1 verification/runtime failure, 2 usage error.
// --seed is required on every stochastic subcommand.  Relative output paths
// respect $TDAC_OUT_DIR.

namespace cli_detail {

struct CommonInstanceFlags {
  int states = 30;
  int actions = 4;
  int branching = 2;
  double sigma = 0.1;
  int basis = 8;
  int ones = 3;

  void attach(CLI::App& cmd, bool with_features) {
    cmd.add_option("--states", states, "number of states");
    cmd.add_option("--actions", actions, "number of actions");
    cmd.add_option("--branching", branching, "successors per (state, action)");
    cmd.add_option("--sigma", sigma, "reward noise standard deviation");
    if (with_features) {
      cmd.add_option("--basis", basis, "critic basis size L");
      cmd.add_option("--ones", ones, "ones per feature row l");
    }
  }

  GarnetSpec garnet() const { return GarnetSpec{states, actions, branching, sigma}; }
  FeatureParams features() const { return FeatureParams{basis, ones}; }
};

struct RunFlags {
  CommonInstanceFlags instance;
  std::string algorithm = "single";
  std::string preset = "small";
  double gamma_eta = 1.0;
  double gamma_w = 1.0;
  double lambda = 0.5;
  double b_w = 1e3;
  bool freeze_actor = false;
  long long steps = 200000;
  long long stride = 0;
  int runs = 20;
  std::uint64_t seed = 0;
  bool shared_instance = false;
  std::string config_path;

  void attach(CLI::App& cmd) {
    instance.attach(cmd, true);
    cmd.add_option("--algorithm", algorithm, "single | two_scale")
        ->check(CLI::IsMember({"single", "two_scale"}));
    cmd.add_option("--preset", preset, "schedule preset: small | large")
        ->check(CLI::IsMember({"small", "large"}));
    cmd.add_option("--gamma-eta", gamma_eta, "critic eta amplifier (single scale)");
    cmd.add_option("--gamma-w", gamma_w, "critic w amplifier (single scale)");
    cmd.add_option("--lambda", lambda, "eligibility trace decay (single scale)");
    cmd.add_option("--b-w", b_w, "critic weight clamp radius");
    cmd.add_flag("--freeze-actor", freeze_actor, "suppress policy updates");
    cmd.add_option("--steps", steps, "simulation horizon");
    cmd.add_option("--stride", stride, "snapshot stride (0: steps/200)");
    cmd.add_option("--runs", runs, "independent runs in the batch");
    cmd.add_option("--seed", seed, "base seed")->required();
    cmd.add_flag("--shared-instance", shared_instance,
                 "reuse one instance + feature set across runs");
    cmd.add_option("--config", config_path,
                   "experiment config JSON (explicit flags still win)");
  }

  // Precedence: defaults < config file < flags the user actually passed.
  ExperimentConfig build(const CLI::App& cmd) const {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_experiment_config(config_path);

    const auto given = [&](const std::string& flag) {
      return cmd.count(flag) > 0;
    };
    if (config_path.empty() || given("--states"))
      config.garnet.n_states = instance.states;
    if (config_path.empty() || given("--actions"))
      config.garnet.n_actions = instance.actions;
    if (config_path.empty() || given("--branching"))
      config.garnet.branching = instance.branching;
    if (config_path.empty() || given("--sigma"))
      config.garnet.sigma = instance.sigma;
    if (config_path.empty() || given("--basis"))
      config.features.basis_size = instance.basis;
    if (config_path.empty() || given("--ones"))
      config.features.ones_per_row = instance.ones;

    if (config_path.empty() || given("--preset")) {
      const SchedulePreset p = preset == "large" ? preset_large() : preset_small();
      config.algo.schedule = p.single;
      config.algo.critic_w_schedule = p.critic_w;
      config.algo.critic_eta_schedule = p.critic_eta;
      config.algo.actor_schedule = p.actor;
    }
    if (config_path.empty() || given("--algorithm"))
      config.algo.algorithm = algorithm == "two_scale"
                                  ? AlgorithmKind::two_scale
                                  : AlgorithmKind::single_scale;
    if (config_path.empty() || given("--gamma-eta"))
      config.algo.gamma_eta_factor = gamma_eta;
    if (config_path.empty() || given("--gamma-w"))
      config.algo.gamma_w_factor = gamma_w;
    if (config_path.empty() || given("--lambda")) config.algo.lambda = lambda;
    if (config_path.empty() || given("--b-w")) config.algo.w_bound = b_w;
    if (config_path.empty() || given("--freeze-actor"))
      config.algo.freeze_actor = freeze_actor;

    if (config_path.empty() || given("--steps")) config.n_steps = steps;
    if (config_path.empty() || given("--stride")) config.record_stride = stride;
    if (config_path.empty() || given("--runs")) config.n_runs = runs;
    if (config_path.empty() || given("--shared-instance"))
      config.shared_instance = shared_instance;
    config.seed = seed;  // --seed is required, it always wins
    config.validate();
    return config;
  }
};

inline void print_verify_report(const VerifyReport& report) {
  for (const VerifyCheck& c : report.checks)
    std::printf("%-18s worst %-12.3e bound %-9.0e %s\n", c.name.c_str(),
                c.worst, c.threshold, c.passed() ? "[ok]" : "[FAIL]");
}

}  // namespace cli_detail

inline int cli_dispatch(std::vector<std::string> args) {
  CLI::App app{"tdac: average-reward actor-critic benchmarks with an exact "
               "evaluation oracle"};
  app.set_version_flag("--version", library_version);
  app.require_subcommand(1);

  // --- generate ---
  auto* generate = app.add_subcommand("generate", "draw a benchmark instance");
  cli_detail::CommonInstanceFlags gen_flags;
  gen_flags.attach(*generate, false);
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_raw = false;
  generate->add_option("--seed", gen_seed, "instance seed")->required();
  generate->add_option("--out", gen_out, "output path")->required();
  generate->add_flag("--raw", gen_raw,
                     "skip the ergodicity retry loop (write the draw as-is)");

  // --- run ---
  auto* run = app.add_subcommand("run", "simulate a batch of runs");
  cli_detail::RunFlags run_flags;
  run_flags.attach(*run);
  std::string run_out;
  std::string run_format = "csv";
  run->add_option("--out", run_out, "output path")->required();
  run->add_option("--format", run_format, "csv | records")
      ->check(CLI::IsMember({"csv", "records"}));

  // --- compare ---
  auto* compare = app.add_subcommand(
      "compare", "paired single-scale vs two-scale comparison");
  cli_detail::RunFlags cmp_flags;
  cmp_flags.attach(*compare);
  std::string cmp_out;
  bool cmp_records = false;
  compare->add_option("--out", cmp_out, "output path prefix")->required();
  compare->add_flag("--records", cmp_records,
                    "also write per-arm structured records");

  // --- verify ---
  auto* verify = app.add_subcommand("verify", "oracle identity property suite");
  cli_detail::CommonInstanceFlags verify_flags;
  verify_flags.sigma = 0.0;
  verify_flags.states = 5;
  verify_flags.actions = 3;
  verify_flags.basis = 4;
  verify_flags.ones = 2;
  verify_flags.attach(*verify, true);
  int verify_trials = 20;
  int verify_thetas = 5;
  std::uint64_t verify_seed = 0;
  verify->add_option("--trials", verify_trials, "instances to draw");
  verify->add_option("--thetas", verify_thetas, "policies per instance");
  verify->add_option("--seed", verify_seed, "base seed")->required();

  // --- plot-data ---
  auto* plot = app.add_subcommand(
      "plot-data", "re-emit a records file as per-stride CSV");
  std::string plot_records;
  std::string plot_out;
  plot->add_option("--records", plot_records, "records JSON path")->required();
  plot->add_option("--out", plot_out, "output path (default: stdout)");

  // CLI11 wants argv-style reversed input.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // drop program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      const GarnetSpec spec = gen_flags.garnet();
      Mdp mdp;
      int retries = 0;
      if (gen_raw) {
        mdp = garnet_generate(spec, gen_seed);
      } else {
        GarnetResult r = garnet_generate_ergodic(spec, gen_seed);
        mdp = std::move(r.mdp);
        retries = r.retries;
      }
      const auto path = resolve_output_path(gen_out);
      save_mdp(mdp, path);
      std::printf("wrote %s (instance seed %llu, retries %d)\n",
                  path.string().c_str(),
                  static_cast<unsigned long long>(mdp.seed), retries);
      return 0;
    }

    if (run->parsed()) {
      const ExperimentConfig config = run_flags.build(*run);
      const BatchResult result = run_batch(config);
      const auto path = resolve_output_path(run_out);
      export_records(result.records, config,
                     run_format == "csv" ? ExportFormat::csv
                                         : ExportFormat::structured_text,
                     path);
      std::printf("wrote %s (%d runs, final eta_exact_mean %s)\n",
                  path.string().c_str(), result.summary.run_count,
                  format_g17(result.summary.strides.back().eta_exact_mean)
                      .c_str());
      return 0;
    }

    if (compare->parsed()) {
      ExperimentConfig config_a = cmp_flags.build(*compare);
      config_a.algo.algorithm = AlgorithmKind::single_scale;
      ExperimentConfig config_b = config_a;
      config_b.algo.algorithm = AlgorithmKind::two_scale;
      const ComparisonResult result = compare_algorithms(config_a, config_b);

      const auto prefix = resolve_output_path(cmp_out);
      write_text_file(prefix.string() + ".single.csv", to_csv(result.summary_a));
      write_text_file(prefix.string() + ".two_scale.csv",
                      to_csv(result.summary_b));
      std::string diff = "n,eta_exact_mean_diff,eta_exact_se_diff\n";
      for (const DiffStat& d : result.diffs) {
        diff += std::to_string(d.n) + "," + format_g17(d.mean_diff) + ",";
        if (d.se_diff) diff += format_g17(*d.se_diff);
        diff += "\n";
      }
      write_text_file(prefix.string() + ".diff.csv", diff);
      if (cmp_records) {
        export_records(result.records_a, config_a,
                       ExportFormat::structured_text,
                       prefix.string() + ".single.records.json");
        export_records(result.records_b, config_b,
                       ExportFormat::structured_text,
                       prefix.string() + ".two_scale.records.json");
      }
      std::printf("wrote %s.{single,two_scale,diff}.csv\n",
                  prefix.string().c_str());
      return 0;
    }

    if (verify->parsed()) {
      VerifyOptions opt;
      opt.garnet = verify_flags.garnet();
      opt.features = verify_flags.features();
      opt.trials = verify_trials;
      opt.thetas_per_trial = verify_thetas;
      opt.seed = verify_seed;
      const VerifyReport report = verify_oracle_identities(opt);
      cli_detail::print_verify_report(report);
      std::printf("verify: %s\n", report.passed() ? "PASS" : "FAIL");
      return report.passed() ? 0 : 1;
    }

    if (plot->parsed()) {
      const LoadedRecords loaded = load_records(plot_records);
      const std::string csv = to_csv(
          aggregate(loaded.records, config_hash(loaded.config)));
      if (plot_out.empty()) {
        std::fputs(csv.c_str(), stdout);
      } else {
        const auto path = resolve_output_path(plot_out);
        write_text_file(path, csv);
        std::printf("wrote %s\n", path.string().c_str());
      }
      return 0;
    }
  } catch (const parameter_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 2;
}

inline int cli_dispatch(int argc, const char* const* argv) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace tdac
