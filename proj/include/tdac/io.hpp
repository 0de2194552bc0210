#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdac/actor_critic.hpp"
#include "tdac/errors.hpp"
#include "tdac/features.hpp"
#include "tdac/mdp.hpp"
#include "tdac/version.hpp"

namespace tdac {

using Json = nlohmann::json;

// All numeric text this library emits goes through one formatter: 17
// significant digits, enough for the decimal text to reparse to the exact
// same double.
inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Relative output paths are resolved against $TDAC_OUT_DIR when it is set;
// absolute paths and unset environments pass through untouched.
inline std::filesystem::path resolve_output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("TDAC_OUT_DIR"); dir && *dir)
    return std::filesystem::path(dir) / p;
  return p;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw io_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline void require_format(const Json& j, const char* name, int version,
                           const std::string& what) {
  if (!j.is_object() || j.value("format", "") != name)
    throw io_error(what + ": not a " + name + " document");
  if (j.value("version", -1) != version)
    throw io_error(what + ": unsupported format version");
}

// Decode a parsed document, translating nlohmann's exceptions (missing keys,
// wrong value types) into the library's io_error so file loaders never leak
// third-party exception types.
template <typename F>
auto decode_document(const std::string& what,
                     const std::filesystem::path& path, F&& decode) {
  try {
    return std::forward<F>(decode)();
  } catch (const Json::exception& e) {
    throw io_error(what + ": malformed document in " + path.string() + ": " +
                   e.what());
  }
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw io_error(what + ": expected a 2-d array");
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size())
      throw io_error(what + ": ragged rows");
    for (std::size_t k = 0; k < j[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          j[i][k].get<double>();
  }
  return m;
}

inline Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw io_error(what + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace detail

inline Json to_json(const GarnetSpec& spec) {
  return Json{{"n_states", spec.n_states},
              {"n_actions", spec.n_actions},
              {"branching", spec.branching},
              {"sigma", spec.sigma}};
}

inline GarnetSpec garnet_spec_from_json(const Json& j) {
  GarnetSpec spec;
  spec.n_states = j.at("n_states").get<int>();
  spec.n_actions = j.at("n_actions").get<int>();
  spec.branching = j.at("branching").get<int>();
  spec.sigma = j.at("sigma").get<double>();
  spec.validate();
  return spec;
}

inline Json to_json(const Mdp& mdp) {
  Json j{{"format", mdp_format_name},
         {"version", mdp_format_version},
         {"spec", to_json(mdp.spec)},
         {"seed", mdp.seed},
         {"reward_noise_var", mdp.reward_noise_var},
         {"state_reward", detail::vector_to_json(mdp.state_reward)}};
  Json transitions = Json::array();
  for (const Matrix& P : mdp.transitions)
    transitions.push_back(detail::matrix_to_json(P));
  j["transitions"] = std::move(transitions);
  return j;
}

inline Mdp mdp_from_json(const Json& j) {
  detail::require_format(j, mdp_format_name, mdp_format_version, "mdp");
  Mdp mdp;
  mdp.spec = garnet_spec_from_json(j.at("spec"));
  mdp.seed = j.at("seed").get<std::uint64_t>();
  mdp.reward_noise_var = j.at("reward_noise_var").get<double>();
  mdp.state_reward = detail::vector_from_json(j.at("state_reward"), "mdp");
  for (const Json& t : j.at("transitions"))
    mdp.transitions.push_back(detail::matrix_from_json(t, "mdp"));
  mdp.validate();
  return mdp;
}

inline void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
  write_text_file(path, to_json(mdp).dump(2) + "\n");
}

inline Mdp load_mdp(const std::filesystem::path& path) {
  Json j = Json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw io_error("mdp: invalid JSON in " + path.string());
  return detail::decode_document("mdp", path, [&] { return mdp_from_json(j); });
}

inline Json to_json(const FeatureSet& fs) {
  return Json{{"phi", detail::matrix_to_json(fs.phi)},
              {"n_actions", fs.n_actions}};
}

inline FeatureSet feature_set_from_json(const Json& j) {
  FeatureSet fs;
  fs.phi = detail::matrix_from_json(j.at("phi"), "feature_set");
  fs.n_actions = j.at("n_actions").get<int>();
  fs.validate(false);
  return fs;
}

inline Json to_json(const ScheduleSpec& s) {
  return Json{{"kind", to_string(s.kind)},
              {"c0", s.c0},
              {"c1", s.c1},
              {"p", s.p}};
}

inline ScheduleSpec schedule_from_json(const Json& j) {
  ScheduleSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "single") s.kind = ScheduleKind::single;
  else if (kind == "critic_w") s.kind = ScheduleKind::critic_w;
  else if (kind == "critic_eta") s.kind = ScheduleKind::critic_eta;
  else if (kind == "actor") s.kind = ScheduleKind::actor;
  else throw io_error("schedule: unknown kind '" + kind + "'");
  s.c0 = j.at("c0").get<double>();
  s.c1 = j.at("c1").get<double>();
  s.p = j.at("p").get<double>();
  s.validate();
  return s;
}

inline Json to_json(const AlgoConfig& c) {
  return Json{{"algorithm", to_string(c.algorithm)},
              {"gamma_eta", c.gamma_eta_factor},
              {"gamma_w", c.gamma_w_factor},
              {"lambda", c.lambda},
              {"b_w", c.w_bound},
              {"freeze_actor", c.freeze_actor},
              {"schedule", to_json(c.schedule)},
              {"critic_w_schedule", to_json(c.critic_w_schedule)},
              {"critic_eta_schedule", to_json(c.critic_eta_schedule)},
              {"actor_schedule", to_json(c.actor_schedule)}};
}

inline AlgoConfig algo_config_from_json(const Json& j) {
  AlgoConfig c;
  const std::string algo = j.at("algorithm").get<std::string>();
  if (algo == "single") c.algorithm = AlgorithmKind::single_scale;
  else if (algo == "two_scale") c.algorithm = AlgorithmKind::two_scale;
  else throw io_error("config: unknown algorithm '" + algo + "'");
  c.gamma_eta_factor = j.at("gamma_eta").get<double>();
  c.gamma_w_factor = j.at("gamma_w").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.w_bound = j.at("b_w").get<double>();
  c.freeze_actor = j.value("freeze_actor", false);
  c.schedule = schedule_from_json(j.at("schedule"));
  c.critic_w_schedule = schedule_from_json(j.at("critic_w_schedule"));
  c.critic_eta_schedule = schedule_from_json(j.at("critic_eta_schedule"));
  c.actor_schedule = schedule_from_json(j.at("actor_schedule"));
  c.validate();
  return c;
}

}  // namespace tdac
