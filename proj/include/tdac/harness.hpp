#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tdac/actor_critic.hpp"
#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/io.hpp"
#include "tdac/mdp.hpp"
#include "tdac/oracle.hpp"

namespace tdac {

// A full experiment: benchmark family, feature parameters, algorithm
// configuration, horizon and recording grid, batch size, base seed.
//
// Seed discipline for run i (seed_i = seed + i):
//   instance stream   Rng(seed_i).child(3)  -> garnet_generate_ergodic
//   feature stream    Rng(seed_i).child(4)  -> build_feature_set
//   env stream        Rng(seed_i).child(1)  -> transitions + reward noise
//   policy stream     Rng(seed_i).child(2)  -> action draws
// With shared_instance, every run reuses the base seed's instance and
// feature streams but keeps its own env/policy streams.  An explicit
// feature_set in the config overrides feature generation entirely.
struct ExperimentConfig {
  GarnetSpec garnet{30, 4, 2, 0.1};
  FeatureParams features{8, 3};
  AlgoConfig algo;
  long long n_steps = 200000;
  long long record_stride = 0;  // 0: n_steps / 200
  std::uint64_t seed = 1;
  int n_runs = 20;
  bool shared_instance = false;
  std::optional<FeatureSet> feature_set;

  long long effective_stride() const {
    if (record_stride > 0) return record_stride;
    return std::max<long long>(1, n_steps / 200);
  }

  void validate() const {
    garnet.validate();
    features.validate();
    algo.validate();
    if (n_steps < 1) throw parameter_error("ExperimentConfig: n_steps must be >= 1");
    if (record_stride < 0)
      throw parameter_error("ExperimentConfig: record_stride must be >= 0");
    if (n_runs < 1) throw parameter_error("ExperimentConfig: n_runs must be >= 1");
    if (feature_set) feature_set->validate(false);
  }
};

inline Json to_json(const ExperimentConfig& c) {
  Json j{{"format", config_format_name},
         {"version", config_format_version},
         {"garnet", to_json(c.garnet)},
         {"features",
          Json{{"basis_size", c.features.basis_size},
               {"ones_per_row", c.features.ones_per_row}}},
         {"algo", to_json(c.algo)},
         {"n_steps", c.n_steps},
         {"record_stride", c.record_stride},
         {"seed", c.seed},
         {"n_runs", c.n_runs},
         {"shared_instance", c.shared_instance}};
  if (c.feature_set) j["feature_set"] = to_json(*c.feature_set);
  return j;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  detail::require_format(j, config_format_name, config_format_version,
                         "config");
  ExperimentConfig c;
  c.garnet = garnet_spec_from_json(j.at("garnet"));
  c.features.basis_size = j.at("features").at("basis_size").get<int>();
  c.features.ones_per_row = j.at("features").at("ones_per_row").get<int>();
  c.algo = algo_config_from_json(j.at("algo"));
  c.n_steps = j.at("n_steps").get<long long>();
  c.record_stride = j.at("record_stride").get<long long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_runs = j.at("n_runs").get<int>();
  c.shared_instance = j.value("shared_instance", false);
  if (j.contains("feature_set"))
    c.feature_set = feature_set_from_json(j.at("feature_set"));
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(
    const std::filesystem::path& path) {
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded())
    throw io_error("config: invalid JSON in " + path.string());
  return detail::decode_document("config", path,
                                 [&] { return experiment_config_from_json(j); });
}

// nlohmann::json keeps object keys sorted, so dump() is canonical.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  return fnv1a64(to_json(c).dump());
}

// One oracle snapshot along a learning trajectory.
struct Sample {
  long long n = 0;
  double eta_tilde = 0.0;  // learner's running average-reward estimate
  double eta_exact = 0.0;  // eta(theta_n) from the oracle
  double grad_norm = 0.0;  // |grad eta(theta_n)|_2
  double w_dist = 0.0;     // |w_n - w*(theta_n)|_2, w* the TD fixed point
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t instance_seed = 0;
  int instance_retries = 0;
  std::vector<Sample> samples;
  double wall_ms = 0.0;  // provenance only: excluded from determinism contracts
};

// Serialization of everything reproducible in a record (wall time excluded).
inline std::string deterministic_serialization(const RunRecord& r) {
  std::string s = "seed=" + std::to_string(r.seed) +
                  " instance_seed=" + std::to_string(r.instance_seed) +
                  " retries=" + std::to_string(r.instance_retries) + "\n";
  for (const Sample& x : r.samples)
    s += std::to_string(x.n) + "," + format_g17(x.eta_tilde) + "," +
         format_g17(x.eta_exact) + "," + format_g17(x.grad_norm) + "," +
         format_g17(x.w_dist) + "\n";
  return s;
}

// Per-stride cross-run statistics.  The standard error is attached to the
// exact average reward only and is absent for single-run batches.
struct StrideStat {
  long long n = 0;
  double eta_tilde_mean = 0.0;
  double eta_exact_mean = 0.0;
  std::optional<double> eta_exact_se;
  double grad_norm_mean = 0.0;
  double w_dist_mean = 0.0;
};

struct BatchSummary {
  std::vector<StrideStat> strides;
  int run_count = 0;
  std::uint64_t config_hash = 0;
};

namespace detail {

inline double lambda_for_oracle(const AlgoConfig& algo) {
  return algo.algorithm == AlgorithmKind::single_scale ? algo.lambda : 0.0;
}

inline Sample snapshot(const AgentState& state, const Mdp& mdp,
                       const FeatureSet& fs, const AlgoConfig& algo) {
  const OracleBundle o =
      compute_oracle(mdp, fs, state.theta, lambda_for_oracle(algo));
  Sample s;
  s.n = state.n;
  s.eta_tilde = state.eta_tilde;
  s.eta_exact = o.eta;
  s.grad_norm = o.grad_eta.norm();
  s.w_dist = (state.w - o.w_star_td).norm();
  return s;
}

}  // namespace detail

// Simulate one trajectory, snapshotting the oracle at n = 0, every stride
// steps, and at the final step.  Deterministic in (mdp, fs, algo, seed).
inline RunRecord run_single(const Mdp& mdp, const FeatureSet& fs,
                            const AlgoConfig& algo, std::uint64_t seed,
                            long long n_steps, long long stride) {
  algo.validate();
  if (n_steps < 1) throw parameter_error("run_single: n_steps must be >= 1");
  if (stride < 1) throw parameter_error("run_single: stride must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  RunRecord record;
  record.seed = seed;
  record.instance_seed = mdp.seed;
  RunRngs rngs = make_run_rngs(seed);
  AgentState state = init_agent(fs);
  record.samples.push_back(detail::snapshot(state, mdp, fs, algo));
  while (state.n < n_steps) {
    advance(state, mdp, fs, algo, rngs);
    if (state.n % stride == 0 || state.n == n_steps)
      record.samples.push_back(detail::snapshot(state, mdp, fs, algo));
  }

  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return record;
}

struct RunInputs {
  Mdp mdp;
  FeatureSet fs;
  int retries = 0;
};

// Materialize the instance and feature set run i will use (seed discipline in
// the ExperimentConfig comment).
inline RunInputs make_run_inputs(const ExperimentConfig& config, int run_index) {
  const std::uint64_t seed_i =
      config.shared_instance ? config.seed : config.seed + run_index;
  Rng root(seed_i);
  RunInputs in;
  GarnetResult g = garnet_generate_ergodic(config.garnet, root.child(3).seed());
  in.mdp = std::move(g.mdp);
  in.retries = g.retries;
  in.fs = config.feature_set
              ? *config.feature_set
              : build_feature_set(config.garnet, config.features,
                                  root.child(4).seed());
  return in;
}

namespace detail {

template <typename Fn>
inline void parallel_runs(int n_runs, Fn&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(n_runs));
  if (workers <= 1) {
    for (int i = 0; i < n_runs; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (unsigned t = 0; t < workers; ++t)
    futures.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < n_runs; i = next.fetch_add(1))
        body(i);
    }));
  for (auto& f : futures) f.get();
}

inline StrideStat stride_stat(const std::vector<RunRecord>& records,
                              std::size_t k) {
  StrideStat st;
  st.n = records[0].samples[k].n;
  const double m = static_cast<double>(records.size());
  for (const RunRecord& r : records) {
    st.eta_tilde_mean += r.samples[k].eta_tilde / m;
    st.eta_exact_mean += r.samples[k].eta_exact / m;
    st.grad_norm_mean += r.samples[k].grad_norm / m;
    st.w_dist_mean += r.samples[k].w_dist / m;
  }
  if (records.size() > 1) {
    double ss = 0.0;
    for (const RunRecord& r : records) {
      const double d = r.samples[k].eta_exact - st.eta_exact_mean;
      ss += d * d;
    }
    st.eta_exact_se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  return st;
}

}  // namespace detail

// Cross-run aggregation; all records must share one snapshot grid.
inline BatchSummary aggregate(const std::vector<RunRecord>& records,
                              std::uint64_t hash = 0) {
  if (records.empty()) throw parameter_error("aggregate: no records");
  for (const RunRecord& r : records) {
    if (r.samples.size() != records[0].samples.size())
      throw parameter_error("aggregate: snapshot grids differ");
    for (std::size_t k = 0; k < r.samples.size(); ++k)
      if (r.samples[k].n != records[0].samples[k].n)
        throw parameter_error("aggregate: snapshot grids differ");
  }
  BatchSummary summary;
  summary.run_count = static_cast<int>(records.size());
  summary.config_hash = hash;
  for (std::size_t k = 0; k < records[0].samples.size(); ++k)
    summary.strides.push_back(detail::stride_stat(records, k));
  return summary;
}

struct BatchResult {
  BatchSummary summary;
  std::vector<RunRecord> records;
};

// n_runs independent trajectories (fresh instance + features per run unless
// shared or pinned), aggregated per stride.  Runs execute in parallel; each
// is a pure function of its seeds, so results are scheduling-independent.
inline BatchResult run_batch(const ExperimentConfig& config) {
  config.validate();
  BatchResult result;
  result.records.resize(config.n_runs);
  const long long stride = config.effective_stride();
  detail::parallel_runs(config.n_runs, [&](int i) {
    RunInputs in = make_run_inputs(config, i);
    RunRecord r = run_single(in.mdp, in.fs, config.algo, config.seed + i,
                             config.n_steps, stride);
    r.instance_retries = in.retries;
    result.records[i] = std::move(r);
  });
  result.summary = aggregate(result.records, config_hash(config));
  return result;
}

struct DiffStat {
  long long n = 0;
  double mean_diff = 0.0;  // mean over paired runs of eta_exact_a - eta_exact_b
  std::optional<double> se_diff;
};

struct ComparisonResult {
  BatchSummary summary_a;
  BatchSummary summary_b;
  std::vector<DiffStat> diffs;
  std::vector<RunRecord> records_a;
  std::vector<RunRecord> records_b;
};

// Paired comparison under common random numbers: run i of both arms receives
// the same instance, the same feature set, and identically seeded env and
// policy streams; only the algorithm configuration differs.
inline ComparisonResult compare_algorithms(const ExperimentConfig& config_a,
                                           const ExperimentConfig& config_b) {
  config_a.validate();
  config_b.validate();
  if (!(config_a.garnet == config_b.garnet) ||
      config_a.features.basis_size != config_b.features.basis_size ||
      config_a.features.ones_per_row != config_b.features.ones_per_row ||
      config_a.n_steps != config_b.n_steps ||
      config_a.effective_stride() != config_b.effective_stride() ||
      config_a.seed != config_b.seed || config_a.n_runs != config_b.n_runs ||
      config_a.shared_instance != config_b.shared_instance)
    throw parameter_error(
        "compare_algorithms: arms must share instance family, features, "
        "horizon, grid, seed and run count");

  ComparisonResult result;
  result.records_a.resize(config_a.n_runs);
  result.records_b.resize(config_a.n_runs);
  const long long stride = config_a.effective_stride();
  detail::parallel_runs(config_a.n_runs, [&](int i) {
    RunInputs in = make_run_inputs(config_a, i);
    RunRecord a = run_single(in.mdp, in.fs, config_a.algo, config_a.seed + i,
                             config_a.n_steps, stride);
    RunRecord b = run_single(in.mdp, in.fs, config_b.algo, config_b.seed + i,
                             config_b.n_steps, stride);
    a.instance_retries = in.retries;
    b.instance_retries = in.retries;
    result.records_a[i] = std::move(a);
    result.records_b[i] = std::move(b);
  });
  result.summary_a = aggregate(result.records_a, config_hash(config_a));
  result.summary_b = aggregate(result.records_b, config_hash(config_b));

  const int m = config_a.n_runs;
  for (std::size_t k = 0; k < result.records_a[0].samples.size(); ++k) {
    DiffStat d;
    d.n = result.records_a[0].samples[k].n;
    for (int i = 0; i < m; ++i)
      d.mean_diff += (result.records_a[i].samples[k].eta_exact -
                      result.records_b[i].samples[k].eta_exact) /
                     m;
    if (m > 1) {
      double ss = 0.0;
      for (int i = 0; i < m; ++i) {
        const double v = result.records_a[i].samples[k].eta_exact -
                         result.records_b[i].samples[k].eta_exact -
                         d.mean_diff;
        ss += v * v;
      }
      d.se_diff = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
    result.diffs.push_back(d);
  }
  return result;
}

inline constexpr const char* csv_header =
    "n,eta_tilde_mean,eta_exact_mean,eta_exact_se,grad_norm_mean,w_dist_mean";

inline std::string to_csv(const BatchSummary& summary) {
  std::string out = std::string(csv_header) + "\n";
  for (const StrideStat& st : summary.strides) {
    out += std::to_string(st.n) + "," + format_g17(st.eta_tilde_mean) + "," +
           format_g17(st.eta_exact_mean) + ",";
    if (st.eta_exact_se) out += format_g17(*st.eta_exact_se);
    out += "," + format_g17(st.grad_norm_mean) + "," +
           format_g17(st.w_dist_mean) + "\n";
  }
  return out;
}

inline BatchSummary csv_to_summary(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header)
    throw io_error("csv: unexpected header");
  BatchSummary summary;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 6) throw io_error("csv: expected 6 columns");
    try {
      StrideStat st;
      st.n = std::stoll(fields[0]);
      st.eta_tilde_mean = std::stod(fields[1]);
      st.eta_exact_mean = std::stod(fields[2]);
      if (!fields[3].empty()) st.eta_exact_se = std::stod(fields[3]);
      st.grad_norm_mean = std::stod(fields[4]);
      st.w_dist_mean = std::stod(fields[5]);
      summary.strides.push_back(st);
    } catch (const std::exception&) {
      throw io_error("csv: malformed numeric field in '" + line + "'");
    }
  }
  return summary;
}

enum class ExportFormat { csv, structured_text };

inline Json records_to_json(const std::vector<RunRecord>& records,
                            const ExperimentConfig& config) {
  Json runs = Json::array();
  for (const RunRecord& r : records) {
    Json samples = Json::array();
    for (const Sample& s : r.samples)
      samples.push_back(
          Json::array({s.n, s.eta_tilde, s.eta_exact, s.grad_norm, s.w_dist}));
    runs.push_back(Json{{"seed", r.seed},
                        {"instance_seed", r.instance_seed},
                        {"instance_retries", r.instance_retries},
                        {"wall_ms", r.wall_ms},
                        {"samples", std::move(samples)}});
  }
  return Json{{"format", records_format_name},
              {"version", records_format_version},
              {"config", to_json(config)},
              {"runs", std::move(runs)}};
}

// Write run records: `csv` emits the fixed six-column per-stride aggregate,
// `structured_text` a JSON document embedding the full config for provenance.
inline void export_records(const std::vector<RunRecord>& records,
                           const ExperimentConfig& config, ExportFormat format,
                           const std::filesystem::path& path) {
  if (records.empty()) throw parameter_error("export_records: no records");
  if (format == ExportFormat::csv)
    write_text_file(path, to_csv(aggregate(records, config_hash(config))));
  else
    write_text_file(path, records_to_json(records, config).dump(2) + "\n");
}

struct LoadedRecords {
  ExperimentConfig config;
  std::vector<RunRecord> records;
};

inline LoadedRecords load_records(const std::filesystem::path& path) {
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded())
    throw io_error("records: invalid JSON in " + path.string());
  detail::require_format(j, records_format_name, records_format_version,
                         "records");
  return detail::decode_document("records", path, [&] {
    LoadedRecords loaded;
    loaded.config = experiment_config_from_json(j.at("config"));
    for (const Json& run : j.at("runs")) {
      RunRecord r;
      r.seed = run.at("seed").get<std::uint64_t>();
      r.instance_seed = run.at("instance_seed").get<std::uint64_t>();
      r.instance_retries = run.at("instance_retries").get<int>();
      r.wall_ms = run.at("wall_ms").get<double>();
      for (const Json& s : run.at("samples")) {
        if (!s.is_array() || s.size() != 5)
          throw io_error("records: malformed sample");
        Sample sample;
        sample.n = s[0].get<long long>();
        sample.eta_tilde = s[1].get<double>();
        sample.eta_exact = s[2].get<double>();
        sample.grad_norm = s[3].get<double>();
        sample.w_dist = s[4].get<double>();
        r.samples.push_back(sample);
      }
      loaded.records.push_back(std::move(r));
    }
    if (loaded.records.empty()) throw io_error("records: no runs");
    return loaded;
  });
}

}  // namespace tdac
