#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "leosim/agent.hpp"
#include "leosim/env.hpp"
#include "leosim/errors.hpp"
#include "leosim/textio.hpp"
#include "leosim/txqueue.hpp"

namespace leosim {

struct ExperimentConfig {
  EnvConfig env;
  AgentConfig agent;
  std::string quality_table_path = "data/quality_table_default.csv";
  std::string output_dir = "runs";
  double processing_delay_ms = 1.0;
  std::uint64_t seed = 1;
  std::optional<int> qdi_given;  // kept for the snapshot round-trip
};

namespace cfgdetail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path,
                           const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + (path.empty() ? it.key() : path + "." + it.key()) +
                        "'");
}

inline const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

template <typename E>
void check_integer(const json& v, const std::string& where) {
  // nlohmann converts floats and negatives into integer targets silently
  if (!v.is_number_integer()) throw ConfigError("config: bad type for '" + where + "'");
  if (std::is_unsigned_v<E> && !v.is_number_unsigned())
    throw ConfigError("config: '" + where + "' must be non-negative");
}

template <typename T>
void read(const json& obj, const std::string& path, const std::string& key, T& out) {
  if (const json* v = find(obj, key)) {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      check_integer<T>(*v, path + key);
    } else if constexpr (std::is_same_v<T, std::vector<int>> ||
                         std::is_same_v<T, std::vector<std::uint32_t>>) {
      if (!v->is_array()) throw ConfigError("config: bad type for '" + path + key + "'");
      for (const auto& e : *v) check_integer<typename T::value_type>(e, path + key);
    }
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: bad type for '" + path + key + "'");
    }
  }
}

inline void read_enum(const json& obj, const std::string& path, const std::string& key,
                      const std::vector<std::pair<std::string, int>>& mapping, int& out) {
  if (const json* v = find(obj, key)) {
    if (!v->is_string()) throw ConfigError("config: bad type for '" + path + key + "'");
    const auto s = v->get<std::string>();
    for (const auto& [name, val] : mapping)
      if (name == s) {
        out = val;
        return;
      }
    throw ConfigError("config: bad value for '" + path + key + "': '" + s + "'");
  }
}

}  // namespace cfgdetail

// Strict loader: every key must be known, every value well-typed, and
// cross-field relations (queue sizing in particular) must agree.
inline ExperimentConfig load_config_json(const nlohmann::json& root) {
  using cfgdetail::read;
  using cfgdetail::read_enum;
  using cfgdetail::reject_unknown;
  using nlohmann::json;

  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(root, "",
                 {"seed", "output_dir", "quality_table", "link", "overpass", "frames", "queue",
                  "reward", "jitter", "control", "agent"});

  ExperimentConfig cfg;
  read(root, "", "seed", cfg.seed);
  read(root, "", "output_dir", cfg.output_dir);
  read(root, "", "quality_table", cfg.quality_table_path);

  if (const json* link = cfgdetail::find(root, "link")) {
    reject_unknown(*link, "link",
                   {"carrier_freq_ghz", "orbit_altitude_km", "earth_radius_km", "eirp_dbw",
                    "g_over_t_db", "noise_bandwidth_hz", "extra_loss_db", "signal_bandwidth_hz"});
    auto& l = cfg.env.link;
    read(*link, "link.", "carrier_freq_ghz", l.carrier_freq_ghz);
    read(*link, "link.", "orbit_altitude_km", l.orbit_altitude_km);
    read(*link, "link.", "earth_radius_km", l.earth_radius_km);
    read(*link, "link.", "eirp_dbw", l.eirp_dbw);
    read(*link, "link.", "g_over_t_db", l.g_over_t_db);
    read(*link, "link.", "noise_bandwidth_hz", l.noise_bandwidth_hz);
    read(*link, "link.", "extra_loss_db", l.extra_loss_db);
    read(*link, "link.", "signal_bandwidth_hz", l.signal_bandwidth_hz);
    if (l.carrier_freq_ghz <= 0 || l.orbit_altitude_km <= 0 || l.earth_radius_km <= 0 ||
        l.noise_bandwidth_hz <= 0)
      throw ConfigError("config: link parameters must be positive");
  }

  if (const json* op = cfgdetail::find(root, "overpass")) {
    reject_unknown(*op, "overpass", {"num_steps", "decision_interval_s", "min_elevation_deg"});
    read(*op, "overpass.", "num_steps", cfg.env.num_steps);
    read(*op, "overpass.", "decision_interval_s", cfg.env.decision_interval_s);
    read(*op, "overpass.", "min_elevation_deg", cfg.env.sweep.min_elevation_deg);
  }

  if (const json* fr = cfgdetail::find(root, "frames")) {
    reject_unknown(*fr, "frames",
                   {"batch_size", "image_height", "image_width", "encoder_stages", "channels",
                    "initial_rate_index"});
    read(*fr, "frames.", "batch_size", cfg.env.batch_size);
    read(*fr, "frames.", "image_height", cfg.env.image_height);
    read(*fr, "frames.", "image_width", cfg.env.image_width);
    read(*fr, "frames.", "encoder_stages", cfg.env.encoder_stages);
    read(*fr, "frames.", "channels", cfg.env.channels);
    read(*fr, "frames.", "initial_rate_index", cfg.env.initial_rate_index);
  }

  // queue sizing: accept drain_budget, qdi, or both (checked for agreement)
  std::optional<std::uint64_t> drain;
  std::optional<int> qdi;
  if (const json* q = cfgdetail::find(root, "queue")) {
    reject_unknown(*q, "queue", {"qci", "drain_budget", "qdi"});
    read(*q, "queue.", "qci", cfg.env.qci);
    std::uint64_t d = 0;
    int qd = 0;
    if (cfgdetail::find(*q, "drain_budget")) {
      read(*q, "queue.", "drain_budget", d);
      drain = d;
    }
    if (cfgdetail::find(*q, "qdi")) {
      read(*q, "queue.", "qdi", qd);
      qdi = qd;
    }
  }
  {
    if (cfg.env.qci <= 0) throw ConfigError("config: queue.qci must be positive");
    if (cfg.env.channels.empty()) throw ConfigError("config: frames.channels must be non-empty");
    const std::uint64_t max_sym = symbols_per_image(cfg.env.channels.back(), cfg.env.image_height,
                                                    cfg.env.image_width, cfg.env.encoder_stages);
    const std::uint64_t q_max =
        static_cast<std::uint64_t>(cfg.env.qci) * static_cast<std::uint64_t>(cfg.env.batch_size) *
        max_sym;
    if (drain && qdi) {
      const int implied = static_cast<int>((q_max + *drain - 1) / *drain);
      if (implied != *qdi)
        throw ConfigError("config: queue.qdi=" + std::to_string(*qdi) +
                          " disagrees with drain_budget (implies qdi=" + std::to_string(implied) +
                          ")");
      cfg.env.drain_budget = *drain;
    } else if (drain) {
      cfg.env.drain_budget = *drain;
    } else if (qdi) {
      if (*qdi <= 0) throw ConfigError("config: queue.qdi must be positive");
      cfg.env.drain_budget = (q_max + static_cast<std::uint64_t>(*qdi) - 1) /
                             static_cast<std::uint64_t>(*qdi);
    }
    if (cfg.env.drain_budget == 0) throw ConfigError("config: queue drain budget must be positive");
    cfg.qdi_given = qdi;
  }

  if (const json* rw = cfgdetail::find(root, "reward")) {
    reject_unknown(*rw, "reward",
                   {"psnr_threshold_db", "msssim_threshold", "lambda_over", "lambda_under",
                    "lambda_drop", "q_th_fraction", "q_low_fraction"});
    auto& r = cfg.env.reward;
    read(*rw, "reward.", "psnr_threshold_db", r.psnr_threshold_db);
    read(*rw, "reward.", "msssim_threshold", r.msssim_threshold);
    read(*rw, "reward.", "lambda_over", r.lambda_over);
    read(*rw, "reward.", "lambda_under", r.lambda_under);
    read(*rw, "reward.", "lambda_drop", r.lambda_drop);
    read(*rw, "reward.", "q_th_fraction", r.q_th_fraction);
    read(*rw, "reward.", "q_low_fraction", r.q_low_fraction);
  }

  if (const json* jt = cfgdetail::find(root, "jitter")) {
    reject_unknown(*jt, "jitter", {"enabled", "psnr_bound_db", "msssim_bound"});
    read(*jt, "jitter.", "enabled", cfg.env.jitter.enabled);
    read(*jt, "jitter.", "psnr_bound_db", cfg.env.jitter.psnr_bound_db);
    read(*jt, "jitter.", "msssim_bound", cfg.env.jitter.msssim_bound);
    if (cfg.env.jitter.psnr_bound_db < 0 || cfg.env.jitter.msssim_bound < 0)
      throw ConfigError("config: jitter bounds must be non-negative");
  }

  if (const json* ct = cfgdetail::find(root, "control")) {
    reject_unknown(*ct, "control",
                   {"predictor_enabled", "snr_to_encoder", "quality_at", "estimation_noise_db",
                    "processing_delay_ms"});
    read(*ct, "control.", "predictor_enabled", cfg.env.predictor_enabled);
    int enc = static_cast<int>(cfg.env.snr_to_encoder);
    read_enum(*ct, "control.", "snr_to_encoder",
              {{"instantaneous", 0}, {"predicted", 1}}, enc);
    cfg.env.snr_to_encoder = static_cast<SnrToEncoder>(enc);
    int qa = static_cast<int>(cfg.env.quality_at);
    read_enum(*ct, "control.", "quality_at", {{"forward", 0}, {"encode", 1}}, qa);
    cfg.env.quality_at = static_cast<QualityAt>(qa);
    read(*ct, "control.", "estimation_noise_db", cfg.env.estimation_noise_db);
    read(*ct, "control.", "processing_delay_ms", cfg.processing_delay_ms);
    if (cfg.processing_delay_ms < 0)
      throw ConfigError("config: control.processing_delay_ms must be non-negative");
  }

  if (const json* ag = cfgdetail::find(root, "agent")) {
    reject_unknown(*ag, "agent",
                   {"hidden", "learning_rate", "discount", "epsilon_start", "epsilon_end",
                    "epsilon_decay_steps", "replay_capacity", "batch_size", "target_sync_period",
                    "train_episodes"});
    auto& a = cfg.agent;
    read(*ag, "agent.", "hidden", a.hidden);
    read(*ag, "agent.", "learning_rate", a.learning_rate);
    read(*ag, "agent.", "discount", a.discount);
    read(*ag, "agent.", "epsilon_start", a.epsilon_start);
    read(*ag, "agent.", "epsilon_end", a.epsilon_end);
    read(*ag, "agent.", "epsilon_decay_steps", a.epsilon_decay_steps);
    read(*ag, "agent.", "replay_capacity", a.replay_capacity);
    read(*ag, "agent.", "batch_size", a.batch_size);
    read(*ag, "agent.", "target_sync_period", a.target_sync_period);
    read(*ag, "agent.", "train_episodes", a.train_episodes);
    if (a.hidden.empty()) throw ConfigError("config: agent.hidden must be non-empty");
    for (int hdim : a.hidden)
      if (hdim <= 0) throw ConfigError("config: agent.hidden dims must be positive");
    if (a.learning_rate <= 0 || a.batch_size <= 0 || a.replay_capacity <= 0 ||
        a.target_sync_period <= 0 || a.train_episodes <= 0 || a.epsilon_decay_steps <= 0)
      throw ConfigError("config: agent parameters must be positive");
    if (!(a.discount >= 0.0 && a.discount <= 1.0))
      throw ConfigError("config: agent.discount out of [0, 1]");
    if (!(a.epsilon_end >= 0.0 && a.epsilon_end <= a.epsilon_start && a.epsilon_start <= 1.0))
      throw ConfigError("config: need 0 <= epsilon_end <= epsilon_start <= 1");
  }

  // the same global seed feeds both sides; streams are named internally
  cfg.env.seed = cfg.seed;
  cfg.agent.seed = cfg.seed;
  return cfg;
}

inline ExperimentConfig load_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return load_config_json(root);
}

inline ExperimentConfig load_config(const std::string& path) {
  try {
    return load_config_text(read_file(path));
  } catch (const ConfigError& e) {
    std::string w = e.what();
    if (w.find(path) == std::string::npos) w = path + ": " + w;
    throw ConfigError(w);
  }
}

// Canonical snapshot of the effective configuration; loading it back
// yields the identical run.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["quality_table"] = cfg.quality_table_path;
  const auto& l = cfg.env.link;
  j["link"] = {{"carrier_freq_ghz", l.carrier_freq_ghz},
               {"orbit_altitude_km", l.orbit_altitude_km},
               {"earth_radius_km", l.earth_radius_km},
               {"eirp_dbw", l.eirp_dbw},
               {"g_over_t_db", l.g_over_t_db},
               {"noise_bandwidth_hz", l.noise_bandwidth_hz},
               {"extra_loss_db", l.extra_loss_db},
               {"signal_bandwidth_hz", l.signal_bandwidth_hz}};
  j["overpass"] = {{"num_steps", cfg.env.num_steps},
                   {"decision_interval_s", cfg.env.decision_interval_s},
                   {"min_elevation_deg", cfg.env.sweep.min_elevation_deg}};
  j["frames"] = {{"batch_size", cfg.env.batch_size},
                 {"image_height", cfg.env.image_height},
                 {"image_width", cfg.env.image_width},
                 {"encoder_stages", cfg.env.encoder_stages},
                 {"channels", cfg.env.channels},
                 {"initial_rate_index", cfg.env.initial_rate_index}};
  j["queue"] = {{"qci", cfg.env.qci}, {"drain_budget", cfg.env.drain_budget}};
  if (cfg.qdi_given) j["queue"]["qdi"] = *cfg.qdi_given;
  const auto& r = cfg.env.reward;
  j["reward"] = {{"psnr_threshold_db", r.psnr_threshold_db},
                 {"msssim_threshold", r.msssim_threshold},
                 {"lambda_over", r.lambda_over},
                 {"lambda_under", r.lambda_under},
                 {"lambda_drop", r.lambda_drop},
                 {"q_th_fraction", r.q_th_fraction},
                 {"q_low_fraction", r.q_low_fraction}};
  j["jitter"] = {{"enabled", cfg.env.jitter.enabled},
                 {"psnr_bound_db", cfg.env.jitter.psnr_bound_db},
                 {"msssim_bound", cfg.env.jitter.msssim_bound}};
  j["control"] = {
      {"predictor_enabled", cfg.env.predictor_enabled},
      {"snr_to_encoder",
       cfg.env.snr_to_encoder == SnrToEncoder::predicted ? "predicted" : "instantaneous"},
      {"quality_at", cfg.env.quality_at == QualityAt::forward ? "forward" : "encode"},
      {"estimation_noise_db", cfg.env.estimation_noise_db},
      {"processing_delay_ms", cfg.processing_delay_ms}};
  const auto& a = cfg.agent;
  j["agent"] = {{"hidden", a.hidden},
                {"learning_rate", a.learning_rate},
                {"discount", a.discount},
                {"epsilon_start", a.epsilon_start},
                {"epsilon_end", a.epsilon_end},
                {"epsilon_decay_steps", a.epsilon_decay_steps},
                {"replay_capacity", a.replay_capacity},
                {"batch_size", a.batch_size},
                {"target_sync_period", a.target_sync_period},
                {"train_episodes", a.train_episodes}};
  return j;
}

inline std::string config_snapshot(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

}  // namespace leosim
