// Copyright 2026 The otadp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON config file format. Field names:
//   k_devices, feature_dim_d, reduced_dim_r, gamma, sigma_sq_m, delta,
//   delta_prime, devices[], encoder, decoder, classifier, master_seed
// plus an optional "channel" object. Each device takes p, w, C, sigma_sq and
// exactly one of power_dbm / power_watts.

#ifndef OTADP_CONFIG_IO_HPP
#define OTADP_CONFIG_IO_HPP

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "json.hpp"
#include "otadp/config.hpp"

namespace otadp {

class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kIdentity: return "identity";
    case EncoderKind::kSharedOrthonormal: return "shared_orthonormal";
    case EncoderKind::kPerDeviceOrthonormal: return "per_device_orthonormal";
  }
  return "?";
}

inline std::string to_string(DecoderKind k) {
  switch (k) {
    case DecoderKind::kTranspose: return "transpose";
    case DecoderKind::kPseudoinverse: return "pseudoinverse";
  }
  return "?";
}

inline std::string to_string(FadingKind k) {
  return k == FadingKind::kRician ? "rician" : "constant";
}

namespace detail {

inline EncoderKind parse_encoder(const std::string& s) {
  if (s == "identity") return EncoderKind::kIdentity;
  if (s == "shared_orthonormal") return EncoderKind::kSharedOrthonormal;
  if (s == "per_device_orthonormal") return EncoderKind::kPerDeviceOrthonormal;
  throw ConfigParseError("encoder: unknown kind '" + s + "'");
}

inline DecoderKind parse_decoder(const std::string& s) {
  if (s == "transpose") return DecoderKind::kTranspose;
  if (s == "pseudoinverse") return DecoderKind::kPseudoinverse;
  throw ConfigParseError("decoder: unknown kind '" + s + "'");
}

inline FadingKind parse_fading(const std::string& s) {
  if (s == "rician") return FadingKind::kRician;
  if (s == "constant") return FadingKind::kConstant;
  throw ConfigParseError("channel.kind: unknown kind '" + s + "'");
}

// JSON has no infinity; k_factor may be the string "inf".
inline double number_or_inf(const nlohmann::json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  if (!j.is_number()) throw ConfigParseError(path + ": expected a number");
  return j.get<double>();
}

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigParseError(path + key + ": missing required field");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigParseError(path + key + ": wrong type");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const SystemConfig& cfg) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : cfg.devices) {
    devices.push_back({{"index", d.index},
                       {"p", d.p},
                       {"w", d.w},
                       {"C", d.clip},
                       {"sigma_sq", d.sigma_sq},
                       {"power_watts", d.power_watts}});
  }
  nlohmann::json channel = {{"kind", to_string(cfg.channel.kind)},
                            {"mean_power", cfg.channel.mean_power},
                            {"h_floor", cfg.channel.h_floor},
                            {"max_redraws", cfg.channel.max_redraws}};
  if (std::isinf(cfg.channel.k_factor)) {
    channel["k_factor"] = "inf";
  } else {
    channel["k_factor"] = cfg.channel.k_factor;
  }
  return {{"k_devices", cfg.k_devices},
          {"feature_dim_d", cfg.feature_dim},
          {"reduced_dim_r", cfg.reduced_dim},
          {"gamma", cfg.gamma},
          {"sigma_sq_m", cfg.sigma_sq_m},
          {"delta", cfg.delta},
          {"delta_prime", cfg.delta_prime},
          {"devices", devices},
          {"encoder", to_string(cfg.encoder)},
          {"decoder", to_string(cfg.decoder)},
          {"classifier",
           {{"num_classes", cfg.classifier.num_classes},
            {"margin", cfg.classifier.margin},
            {"view_std", cfg.classifier.view_std}}},
          {"channel", channel},
          {"master_seed", cfg.master_seed}};
}

/// Structural parse only; range checks belong to validate_config.
inline SystemConfig config_from_json(const nlohmann::json& j) {
  using detail::required;
  if (!j.is_object()) throw ConfigParseError("config: expected a JSON object");
  SystemConfig cfg;
  cfg.k_devices = required<int>(j, "k_devices", "");
  cfg.feature_dim = required<int>(j, "feature_dim_d", "");
  cfg.reduced_dim = required<int>(j, "reduced_dim_r", "");
  cfg.gamma = required<double>(j, "gamma", "");
  cfg.sigma_sq_m = required<double>(j, "sigma_sq_m", "");
  cfg.delta = required<double>(j, "delta", "");
  cfg.delta_prime = required<double>(j, "delta_prime", "");
  cfg.encoder = detail::parse_encoder(required<std::string>(j, "encoder", ""));
  cfg.decoder = detail::parse_decoder(required<std::string>(j, "decoder", ""));
  cfg.master_seed = required<std::uint64_t>(j, "master_seed", "");

  if (!j.contains("devices") || !j["devices"].is_array()) {
    throw ConfigParseError("devices: missing required array");
  }
  int position = 0;
  for (const auto& dj : j["devices"]) {
    const std::string path = "devices[" + std::to_string(position) + "].";
    if (!dj.is_object()) throw ConfigParseError(path + ": expected an object");
    DeviceProfile d;
    d.index = dj.contains("index") ? required<int>(dj, "index", path) : position;
    d.p = required<double>(dj, "p", path);
    d.w = required<double>(dj, "w", path);
    d.clip = required<double>(dj, "C", path);
    d.sigma_sq = required<double>(dj, "sigma_sq", path);
    const bool has_dbm = dj.contains("power_dbm");
    const bool has_watts = dj.contains("power_watts");
    if (has_dbm == has_watts) {
      throw ConfigParseError(path + "power: give exactly one of power_dbm, power_watts");
    }
    d.power_watts = has_dbm ? dbm_to_watts(required<double>(dj, "power_dbm", path))
                            : required<double>(dj, "power_watts", path);
    cfg.devices.push_back(d);
    ++position;
  }

  if (!j.contains("classifier") || !j["classifier"].is_object()) {
    throw ConfigParseError("classifier: missing required object");
  }
  const auto& cj = j["classifier"];
  cfg.classifier.num_classes = required<int>(cj, "num_classes", "classifier.");
  cfg.classifier.margin = required<double>(cj, "margin", "classifier.");
  if (cj.contains("view_std")) cfg.classifier.view_std = required<double>(cj, "view_std", "classifier.");

  if (j.contains("channel")) {
    const auto& ch = j["channel"];
    if (!ch.is_object()) throw ConfigParseError("channel: expected an object");
    if (ch.contains("kind")) cfg.channel.kind = detail::parse_fading(required<std::string>(ch, "kind", "channel."));
    if (ch.contains("k_factor")) cfg.channel.k_factor = detail::number_or_inf(ch["k_factor"], "channel.k_factor");
    if (ch.contains("mean_power")) cfg.channel.mean_power = required<double>(ch, "mean_power", "channel.");
    if (ch.contains("h_floor")) cfg.channel.h_floor = required<double>(ch, "h_floor", "channel.");
    if (ch.contains("max_redraws")) cfg.channel.max_redraws = required<int>(ch, "max_redraws", "channel.");
  }
  return cfg;
}

inline SystemConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigParseError(std::string("config: malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const SystemConfig& cfg) {
  return to_json(cfg).dump(2) + "\n";
}

/// FNV-1a over the canonical serialization; stamped into every report.
inline std::string config_hash(const SystemConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace otadp

#endif  // OTADP_CONFIG_IO_HPP
