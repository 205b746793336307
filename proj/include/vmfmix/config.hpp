// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key-value config files: `key = value` lines, `#` comments.  Every
// key must appear in the registry below; unknown keys are config errors.
// The registry doubles as the documented schema (see schemas/config_keys.txt).

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmfmix/head.hpp"
#include "vmfmix/trainer.hpp"

namespace vmfmix {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigKey {
  const char* name;
  const char* type;  // "string" | "bool" | "int" | "uint" | "real"
  const char* default_value;
  const char* description;
};

inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"mode", "string", "vmf", "assignment head: dino | vmf"},
      {"centering", "string", "probability", "center update/application space: logit | probability"},
      {"l2_normalize_prototypes", "bool", "false", "freeze prototype magnitudes at 1"},
      {"k_prototypes", "int", "32", "number of prototypes K"},
      {"rep_dim", "int", "8", "representation dimension p (even, >= 4)"},
      {"steps", "int", "1500", "training steps"},
      {"batch_size", "int", "64", "batch size B"},
      {"learning_rate", "real", "1.0", "SGD learning rate"},
      {"seed", "uint", "1", "master seed for init/batches/augmentation"},
      {"tau_s", "real", "0.1", "student temperature"},
      {"tau_t_start", "real", "0.04", "teacher temperature at step 0"},
      {"tau_t_end", "real", "0.07", "teacher temperature after warmup"},
      {"tau_t_warmup_steps", "int", "120", "linear warmup length for tau_t"},
      {"ema_lambda_start", "real", "0.996", "teacher EMA coefficient at step 0"},
      {"ema_lambda_end", "real", "0.996", "teacher EMA coefficient after warmup"},
      {"ema_lambda_warmup_steps", "int", "0", "linear ramp length for lambda"},
      {"center_momentum", "real", "0.9", "centering EMA momentum m"},
      {"augment_sigma", "real", "0.2", "additive Gaussian view noise"},
      {"data_k_true", "int", "4", "true cluster count of the synthetic data"},
      {"data_dim", "int", "16", "ambient data dimension"},
      {"data_n", "uint", "2000", "number of synthetic points"},
      {"data_kappa", "real", "25.0", "vMF concentration of the generator"},
      {"data_noise", "real", "0.1", "ambient noise scale"},
      {"data_seed", "uint", "7", "dataset seed"},
      {"eval_fraction", "real", "0.2", "held-out fraction for kNN evaluation"},
      {"knn_k", "uint", "10", "neighbors for kNN evaluation"},
      {"em_k", "int", "3", "mixture components for em-fit"},
      {"em_max_iters", "int", "200", "EM iteration cap"},
      {"em_tol", "real", "1e-7", "EM log-likelihood gain tolerance"},
      {"duplicate_threshold", "real", "0.9", "cosine threshold for the duplicate report"},
      {"analysis_thresholds", "string", "0.8,0.9,0.99", "sweep thresholds (comma separated)"},
      {"percentile_edges", "string", "0,25,50,75,100", "percentile bucket edges"},
  };
  return keys;
}

class FlatConfig {
 public:
  static FlatConfig from_string(const std::string& text) {
    FlatConfig cfg;
    cfg.text_ = text;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
      if (!known_key(key))
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      if (cfg.values_.count(key))
        throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static FlatConfig from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
  }

  const std::string& text() const { return text_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  void override_value(const std::string& key, const std::string& value) {
    if (!known_key(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = value;
  }

  std::string get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    for (const auto& k : config_registry())
      if (key == k.name) return k.default_value;
    throw ConfigError("unknown key '" + key + "'");
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_string(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + key + "': expected bool, got '" + v + "'");
  }

  long long get_int(const std::string& key) const {
    return parse_number<long long>(key, "integer");
  }

  std::uint64_t get_uint(const std::string& key) const {
    const long long v = get_int(key);
    if (v < 0) throw ConfigError("key '" + key + "': expected non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  double get_real(const std::string& key) const { return parse_number<double>(key, "number"); }

  std::vector<double> get_real_list(const std::string& key) const {
    const std::string v = get_string(key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': bad list element '" + tok + "'");
      }
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  TrainConfig to_train_config() const {
    TrainConfig cfg;
    const std::string mode = get_string("mode");
    if (mode == "dino")
      cfg.mode = HeadMode::dino;
    else if (mode == "vmf")
      cfg.mode = HeadMode::vmf;
    else
      throw ConfigError("key 'mode': expected dino or vmf, got '" + mode + "'");
    const std::string centering = get_string("centering");
    if (centering == "logit")
      cfg.centering = CenterVariant::logit;
    else if (centering == "probability")
      cfg.centering = CenterVariant::probability;
    else
      throw ConfigError("key 'centering': expected logit or probability, got '" + centering + "'");
    cfg.l2_normalize_prototypes = get_bool("l2_normalize_prototypes");
    cfg.k_prototypes = static_cast<int>(get_int("k_prototypes"));
    cfg.rep_dim = static_cast<int>(get_int("rep_dim"));
    cfg.steps = static_cast<int>(get_int("steps"));
    cfg.batch_size = static_cast<int>(get_int("batch_size"));
    cfg.learning_rate = get_real("learning_rate");
    cfg.seed = get_uint("seed");
    cfg.tau_s = get_real("tau_s");
    cfg.tau_t = {get_real("tau_t_start"), get_real("tau_t_end"),
                 static_cast<int>(get_int("tau_t_warmup_steps"))};
    cfg.ema_lambda = {get_real("ema_lambda_start"), get_real("ema_lambda_end"),
                      static_cast<int>(get_int("ema_lambda_warmup_steps"))};
    cfg.center_momentum = get_real("center_momentum");
    cfg.augment_sigma = get_real("augment_sigma");
    cfg.data_k_true = static_cast<int>(get_int("data_k_true"));
    cfg.data_dim = static_cast<int>(get_int("data_dim"));
    cfg.data_n = get_uint("data_n");
    cfg.data_kappa = get_real("data_kappa");
    cfg.data_noise = get_real("data_noise");
    cfg.data_seed = get_uint("data_seed");
    cfg.eval_fraction = get_real("eval_fraction");
    cfg.knn_k = get_uint("knn_k");
    cfg.validate();
    return cfg;
  }

 private:
  static bool known_key(const std::string& key) {
    const auto& reg = config_registry();
    return std::any_of(reg.begin(), reg.end(),
                       [&](const ConfigKey& k) { return key == k.name; });
  }

  static std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }

  template <typename T>
  T parse_number(const std::string& key, const char* what) const {
    const std::string v = get_string(key);
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
      } else {
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<T>(i);
      }
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': expected " + std::string(what) + ", got '" + v + "'");
    }
  }

  std::string text_;
  std::map<std::string, std::string> values_;
};

}  // namespace vmfmix
