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

#ifndef OTADP_CONFIG_HPP
#define OTADP_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace otadp {

enum class EncoderKind { kIdentity, kSharedOrthonormal, kPerDeviceOrthonormal };
enum class DecoderKind { kTranspose, kPseudoinverse };
enum class FadingKind { kRician, kConstant };

/// Block flat-fading amplitude model for the device-to-server links.
struct FadingModel {
  FadingKind kind = FadingKind::kRician;
  double k_factor = 3.0;    // LOS-to-scatter power ratio; +inf allowed
  double mean_power = 1.0;  // E[h^2]
  double h_floor = 1e-3;    // draws below this are redrawn
  int max_redraws = 64;

  bool operator==(const FadingModel&) const = default;
};

struct DeviceProfile {
  int index = 0;
  double p = 1.0;            // participation probability
  double w = 1.0;            // importance weight
  double clip = 1.0;         // clipping norm bound C_k
  double sigma_sq = 0.0;     // local Gaussian perturbation variance
  double power_watts = 1.0;  // transmit power budget

  bool operator==(const DeviceProfile&) const = default;
};

/// Synthetic nearest-centroid task: `num_classes` prototypes scaled so the
/// classification margin equals `margin`; each device observes the prototype
/// plus an i.i.d. Gaussian view offset with per-coordinate std `view_std`.
struct ClassifierSpec {
  int num_classes = 40;
  double margin = 5.0;
  double view_std = 0.05;

  bool operator==(const ClassifierSpec&) const = default;
};

struct SystemConfig {
  int k_devices = 1;
  int feature_dim = 1;
  int reduced_dim = 1;
  double gamma = 1.0;
  double sigma_sq_m = 0.0;
  double delta = 1e-5;
  double delta_prime = 1e-5;
  std::vector<DeviceProfile> devices;
  EncoderKind encoder = EncoderKind::kIdentity;
  DecoderKind decoder = DecoderKind::kTranspose;
  ClassifierSpec classifier;
  FadingModel channel;
  std::uint64_t master_seed = 0;

  bool operator==(const SystemConfig&) const = default;
};

struct ConfigError {
  std::optional<int> device;  // set for per-device violations
  std::string field;
  std::string message;

  std::string to_string() const {
    std::string s = device ? "device " + std::to_string(*device) + ": " : "";
    return s + field + ": " + message;
  }
};

struct ValidationResult {
  std::optional<SystemConfig> config;
  std::vector<ConfigError> errors;

  bool ok() const { return config.has_value(); }
};

inline double dbm_to_watts(double dbm) {
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

inline double watts_to_dbm(double watts) {
  return 10.0 * std::log10(watts) + 30.0;
}

/// Collects every violated invariant rather than stopping at the first.
inline std::vector<ConfigError> check_config(const SystemConfig& cfg) {
  std::vector<ConfigError> errs;
  auto global = [&](std::string field, std::string msg) {
    errs.push_back({std::nullopt, std::move(field), std::move(msg)});
  };
  auto finite = [](double x) { return std::isfinite(x); };
  auto in_unit_open_closed = [](double x) { return x > 0.0 && x <= 1.0; };

  if (cfg.k_devices < 1) global("k_devices", "must be at least 1");
  if (cfg.feature_dim < 1) global("feature_dim_d", "must be at least 1");
  if (cfg.reduced_dim < 1) global("reduced_dim_r", "must be at least 1");
  if (cfg.reduced_dim > cfg.feature_dim) global("reduced_dim_r", "r exceeds d");
  if (!(cfg.gamma > 0.0) || !finite(cfg.gamma)) global("gamma", "must be positive and finite");
  if (!(cfg.sigma_sq_m >= 0.0) || !finite(cfg.sigma_sq_m)) global("sigma_sq_m", "must be nonnegative and finite");
  if (!in_unit_open_closed(cfg.delta)) global("delta", "must lie in (0,1]");
  if (!in_unit_open_closed(cfg.delta_prime)) global("delta_prime", "must lie in (0,1]");
  if (static_cast<int>(cfg.devices.size()) != cfg.k_devices) {
    global("devices", "expected " + std::to_string(cfg.k_devices) + " entries, got " +
                          std::to_string(cfg.devices.size()));
  }
  if (cfg.encoder == EncoderKind::kIdentity && cfg.reduced_dim != cfg.feature_dim) {
    global("encoder", "identity encoder requires r == d");
  }
  if (cfg.decoder == DecoderKind::kTranspose && cfg.encoder == EncoderKind::kPerDeviceOrthonormal) {
    global("decoder", "transpose decoder requires a shared encoder");
  }

  const ClassifierSpec& cls = cfg.classifier;
  if (cls.num_classes < 2) global("classifier.num_classes", "must be at least 2");
  if (!(cls.margin > 0.0) || !finite(cls.margin)) global("classifier.margin", "must be positive and finite");
  if (!(cls.view_std >= 0.0) || !finite(cls.view_std)) global("classifier.view_std", "must be nonnegative and finite");

  const FadingModel& ch = cfg.channel;
  if (!(ch.mean_power > 0.0) || !finite(ch.mean_power)) global("channel.mean_power", "must be positive and finite");
  if (!(ch.h_floor > 0.0) || !finite(ch.h_floor)) global("channel.h_floor", "must be positive and finite");
  if (!(ch.k_factor >= 0.0)) global("channel.k_factor", "must be nonnegative");
  if (ch.max_redraws < 0) global("channel.max_redraws", "must be nonnegative");

  for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
    const DeviceProfile& d = cfg.devices[i];
    const int k = static_cast<int>(i);
    auto dev = [&](std::string field, std::string msg) {
      errs.push_back({k, std::move(field), std::move(msg)});
    };
    if (d.index != k) dev("index", "must equal position " + std::to_string(k));
    if (!(d.p >= 0.0 && d.p <= 1.0)) dev("p_k", "must lie in [0,1]");
    if (!(d.w >= 0.0) || !finite(d.w)) dev("w_k", "must be nonnegative and finite");
    if (!(d.clip >= 0.0) || !finite(d.clip)) dev("C_k", "must be nonnegative and finite");
    if (!(d.sigma_sq >= 0.0) || !finite(d.sigma_sq)) dev("sigma_sq_k", "must be nonnegative and finite");
    if (!(d.power_watts >= 0.0) || !finite(d.power_watts)) dev("P_k", "must be nonnegative and finite");
  }
  return errs;
}

inline ValidationResult validate_config(const SystemConfig& cfg) {
  ValidationResult r;
  r.errors = check_config(cfg);
  if (r.errors.empty()) r.config = cfg;
  return r;
}

class InvalidConfig : public std::runtime_error {
 public:
  explicit InvalidConfig(std::vector<ConfigError> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<ConfigError>& errors) {
    std::string s = "invalid configuration";
    for (const auto& e : errors) s += "\n  " + e.to_string();
    return s;
  }
  std::vector<ConfigError> errors_;
};

inline const SystemConfig& require_valid(const SystemConfig& cfg) {
  auto errs = check_config(cfg);
  if (!errs.empty()) throw InvalidConfig(std::move(errs));
  return cfg;
}

enum class PresetDims { kSmall, kLarge };

/// Experiment configuration from the evaluation setup: 12 devices, p=0.9,
/// w=1/12, C=100, sigma^2=0.1, receiver noise 0.1, delta=delta'=1e-5,
/// gamma=1, 30 dBm, 40 classes. kSmall uses 16x7x7 feature maps with a shared
/// orthonormal encoder; kLarge uses 512x7x7 with identity encoding.
inline SystemConfig preset_config(PresetDims dims = PresetDims::kSmall) {
  SystemConfig cfg;
  cfg.k_devices = 12;
  if (dims == PresetDims::kSmall) {
    cfg.feature_dim = 16 * 7 * 7;
    cfg.reduced_dim = 16 * 7 * 7;
    cfg.encoder = EncoderKind::kSharedOrthonormal;
  } else {
    cfg.feature_dim = 512 * 7 * 7;
    cfg.reduced_dim = 512 * 7 * 7;
    cfg.encoder = EncoderKind::kIdentity;
  }
  cfg.decoder = DecoderKind::kTranspose;
  cfg.gamma = 1.0;
  cfg.sigma_sq_m = 0.1;
  cfg.delta = 1e-5;
  cfg.delta_prime = 1e-5;
  cfg.master_seed = 20240917;
  for (int k = 0; k < cfg.k_devices; ++k) {
    cfg.devices.push_back({.index = k,
                           .p = 0.9,
                           .w = 1.0 / cfg.k_devices,
                           .clip = 100.0,
                           .sigma_sq = 0.1,
                           .power_watts = dbm_to_watts(30.0)});
  }
  return cfg;
}

}  // namespace otadp

#endif  // OTADP_CONFIG_HPP
