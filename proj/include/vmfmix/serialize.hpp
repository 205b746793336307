// Copyright (c) 2026 vmfmix authors
// SPDX-License-Identifier: Apache-2.0
//
// Persistence: checkpoints (JSON header + base64-embedded little-endian
// f64 arrays in one file), deterministic CSV, a minimal JSON schema
// checker, and run manifests.

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmfmix/head.hpp"
#include "vmfmix/movmf.hpp"
#include "vmfmix/trainer.hpp"
#include "vmfmix/version.hpp"

namespace vmfmix {

using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Logging (stderr; verbosity from the VMFMIX_LOG env var: quiet|info|debug)

inline int log_level() {
  static const int level = [] {
    const char* env = std::getenv("VMFMIX_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[vmfmix] " << msg << "\n";
}

inline void log_warn(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[vmfmix] warning: " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[vmfmix] debug: " << msg << "\n";
}

// ---------------------------------------------------------------------------
// Deterministic number formatting (17 significant digits, locale-free)

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Base64 round-trip of f64 arrays (explicit little-endian byte order)

namespace detail {

inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace detail

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
    out.push_back(detail::kB64Alphabet[(chunk >> 18) & 63]);
    out.push_back(detail::kB64Alphabet[(chunk >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? detail::kB64Alphabet[(chunk >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? detail::kB64Alphabet[chunk & 63] : '=');
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<int> lut(256, -1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(detail::kB64Alphabet[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t chunk = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r') continue;
    const int v = lut[static_cast<unsigned char>(ch)];
    if (v < 0) throw IoError("base64: invalid character");
    chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((chunk >> bits) & 0xff));
    }
  }
  return out;
}

inline std::string encode_f64(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double d : values) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(d);
    for (int shift = 0; shift < 64; shift += 8)
      bytes.push_back(static_cast<std::uint8_t>((u >> shift) & 0xff));
  }
  return base64_encode(bytes);
}

inline std::vector<double> decode_f64(const std::string& b64, std::size_t expected_count) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() != expected_count * 8)
    throw IoError("f64 array: expected " + std::to_string(expected_count * 8) + " bytes, got " +
                  std::to_string(bytes.size()));
  std::vector<double> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    std::uint64_t u = 0;
    for (int b = 7; b >= 0; --b) u = (u << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
    out[i] = std::bit_cast<double>(u);
  }
  return out;
}

inline Json f64_field(const std::vector<double>& values, std::vector<std::size_t> shape) {
  std::size_t total = 1;
  for (std::size_t s : shape) total *= s;
  if (total != values.size()) throw IoError("f64_field: shape/size mismatch");
  Json j;
  j["dtype"] = "f64le";
  j["shape"] = shape;
  j["data"] = encode_f64(values);
  return j;
}

inline std::vector<double> f64_field_decode(const Json& j, std::vector<std::size_t> expected_shape) {
  if (j.at("dtype").get<std::string>() != "f64le") throw IoError("f64_field: unsupported dtype");
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape != expected_shape) throw IoError("f64_field: unexpected shape");
  std::size_t total = 1;
  for (std::size_t s : shape) total *= s;
  return decode_f64(j.at("data").get<std::string>(), total);
}

// ---------------------------------------------------------------------------
// CSV

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// FNV-1a config hash

inline std::string fnv1a64_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Minimal JSON schema check: type / required / properties / items / enum.

inline void collect_schema_violations(const Json& instance, const Json& schema,
                                      const std::string& where, std::vector<std::string>* out) {
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    const bool ok = (type == "object" && instance.is_object()) ||
                    (type == "array" && instance.is_array()) ||
                    (type == "string" && instance.is_string()) ||
                    (type == "number" && instance.is_number()) ||
                    (type == "integer" && instance.is_number_integer()) ||
                    (type == "boolean" && instance.is_boolean());
    if (!ok) {
      out->push_back(where + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& v : schema["enum"])
      if (v == instance) found = true;
    if (!found) out->push_back(where + ": value not in enum");
  }
  if (schema.contains("required"))
    for (const auto& key : schema["required"])
      if (!instance.contains(key.get<std::string>()))
        out->push_back(where + ": missing required key '" + key.get<std::string>() + "'");
  if (schema.contains("properties") && instance.is_object())
    for (const auto& [key, sub] : schema["properties"].items())
      if (instance.contains(key))
        collect_schema_violations(instance[key], sub, where + "." + key, out);
  if (schema.contains("items") && instance.is_array())
    for (std::size_t i = 0; i < instance.size(); ++i)
      collect_schema_violations(instance[static_cast<int>(i)], schema["items"],
                                where + "[" + std::to_string(i) + "]", out);
}

inline std::vector<std::string> schema_violations(const Json& instance, const Json& schema) {
  std::vector<std::string> out;
  collect_schema_violations(instance, schema, "$", &out);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointFormatVersion = 1;

struct EncoderCheckpoint {
  EncoderParams params;
  CenterState center;
  int step = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config_echo;
};

namespace detail {

inline Json center_to_json(const CenterState& center) {
  Json j;
  j["variant"] = to_string(center.variant);
  j["momentum"] = center.momentum;
  j["c"] = f64_field(center.c, {center.c.size()});
  return j;
}

inline CenterState center_from_json(const Json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  const auto c = f64_field_decode(j.at("c"), {j.at("c").at("shape")[0].get<std::size_t>()});
  return CenterState(c, j.at("momentum").get<double>(),
                     variant == "logit" ? CenterVariant::logit : CenterVariant::probability);
}

// Renormalizes unit rows loaded from disk; warns when drift exceeds 1e-9.
inline void restore_unit_rows(Matrix* m, const std::string& what) {
  for (std::size_t r = 0; r < m->rows; ++r) {
    const double n = norm2(m->row(r));
    if (!(n > 0.0)) throw IoError("checkpoint: zero-norm row in " + what);
    const double drift = std::abs(n - 1.0);
    if (drift > 1e-9)
      log_warn("checkpoint integrity: " + what + " row " + std::to_string(r) +
               " drifted by " + format_double(drift) + "; renormalized");
    if (drift > kUnitNormTol) {
      const UnitVector u = normalize(m->row(r));
      std::copy(u.coords().begin(), u.coords().end(), m->row(r).begin());
    }
  }
}

}  // namespace detail

inline Json encoder_checkpoint_to_json(const EncoderCheckpoint& ckpt) {
  const auto& p = ckpt.params;
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = "encoder";
  j["dims"] = Json{{"d_in", p.d_in()}, {"p", p.p()}, {"k", p.bank.k()}};
  j["l2_normalized"] = p.bank.l2_normalized();
  j["step"] = ckpt.step;
  j["seed"] = ckpt.seed;
  j["config"] = ckpt.config_echo;
  j["encoder"] = Json{
      {"weight", f64_field(p.weight.data, {p.weight.rows, p.weight.cols})},
      {"bias", f64_field(p.bias, {p.bias.size()})}};
  j["bank"] = Json{
      {"directions", f64_field(p.bank.directions().data,
                               {p.bank.k(), static_cast<std::size_t>(p.bank.dim())})},
      {"log_magnitudes", f64_field(p.bank.log_magnitudes(), {p.bank.k()})}};
  j["center"] = detail::center_to_json(ckpt.center);
  return j;
}

inline void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void save_encoder_checkpoint(const EncoderCheckpoint& ckpt,
                                    const std::filesystem::path& path) {
  save_json(encoder_checkpoint_to_json(ckpt), path);
}

inline EncoderCheckpoint load_encoder_checkpoint(const std::filesystem::path& path) {
  const Json j = load_json(path);
  if (!j.contains("kind") || j.at("kind").get<std::string>() != "encoder")
    throw IoError("checkpoint " + path.string() + " is not an encoder checkpoint");
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw IoError("checkpoint " + path.string() + ": unsupported format version");
  const auto d_in = j.at("dims").at("d_in").get<std::size_t>();
  const auto p = j.at("dims").at("p").get<std::size_t>();
  const auto kk = j.at("dims").at("k").get<std::size_t>();
  const bool l2 = j.at("l2_normalized").get<bool>();

  Matrix weight(p, d_in);
  weight.data = f64_field_decode(j.at("encoder").at("weight"), {p, d_in});
  std::vector<double> bias = f64_field_decode(j.at("encoder").at("bias"), {p});
  Matrix dirs(kk, p);
  dirs.data = f64_field_decode(j.at("bank").at("directions"), {kk, p});
  detail::restore_unit_rows(&dirs, "bank.directions");
  std::vector<double> logs = f64_field_decode(j.at("bank").at("log_magnitudes"), {kk});

  EncoderCheckpoint out{
      EncoderParams{std::move(weight), std::move(bias),
                    PrototypeBank(std::move(dirs), std::move(logs), l2)},
      detail::center_from_json(j.at("center")),
      j.at("step").get<int>(),
      j.at("seed").get<std::uint64_t>(),
      j.at("config").get<std::map<std::string, std::string>>()};
  return out;
}

struct MovmfCheckpoint {
  MixtureModel model;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config_echo;
};

inline Json movmf_checkpoint_to_json(const MovmfCheckpoint& ckpt) {
  const auto& m = ckpt.model;
  const std::size_t kk = m.k();
  const std::size_t p = static_cast<std::size_t>(m.dim());
  std::vector<double> mu(kk * p);
  std::vector<double> kappa(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    kappa[k] = m.components[k].kappa;
    for (std::size_t d = 0; d < p; ++d) mu[k * p + d] = m.components[k].mu[d];
  }
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = "movmf";
  j["dims"] = Json{{"p", p}, {"k", kk}};
  j["seed"] = ckpt.seed;
  j["config"] = ckpt.config_echo;
  j["mixture"] = Json{{"proportions", f64_field(m.proportions, {kk})},
                      {"mu", f64_field(mu, {kk, p})},
                      {"kappa", f64_field(kappa, {kk})}};
  return j;
}

inline void save_movmf_checkpoint(const MovmfCheckpoint& ckpt,
                                  const std::filesystem::path& path) {
  save_json(movmf_checkpoint_to_json(ckpt), path);
}

inline MovmfCheckpoint load_movmf_checkpoint(const std::filesystem::path& path) {
  const Json j = load_json(path);
  if (!j.contains("kind") || j.at("kind").get<std::string>() != "movmf")
    throw IoError("checkpoint " + path.string() + " is not a movmf checkpoint");
  const auto p = j.at("dims").at("p").get<std::size_t>();
  const auto kk = j.at("dims").at("k").get<std::size_t>();
  Matrix mu(kk, p);
  mu.data = f64_field_decode(j.at("mixture").at("mu"), {kk, p});
  detail::restore_unit_rows(&mu, "mixture.mu");
  const auto kappa = f64_field_decode(j.at("mixture").at("kappa"), {kk});
  const auto props = f64_field_decode(j.at("mixture").at("proportions"), {kk});
  std::vector<VmfComponent> comps;
  comps.reserve(kk);
  for (std::size_t k = 0; k < kk; ++k)
    comps.emplace_back(UnitVector(std::vector<double>(mu.row(k).begin(), mu.row(k).end())),
                       kappa[k]);
  return MovmfCheckpoint{MixtureModel(std::move(comps), props),
                         j.at("seed").get<std::uint64_t>(),
                         j.at("config").get<std::map<std::string, std::string>>()};
}

// ---------------------------------------------------------------------------
// Run manifest (the only artifact carrying a timestamp)

inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                           const std::string& config_text, std::uint64_t seed) {
  Json j;
  j["command"] = command;
  j["library_version"] = kVersion;
  j["config_hash"] = fnv1a64_hex(config_text);
  j["seed"] = seed;
  j["timestamp_utc"] = [] {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return std::string(buf);
  }();
  save_json(j, out_dir / "manifest.json");
}

}  // namespace vmfmix
