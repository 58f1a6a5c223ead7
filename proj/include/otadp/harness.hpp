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

// Experiment driver: single runs (JSON report) and privacy sweeps (CSV).

#ifndef OTADP_HARNESS_HPP
#define OTADP_HARNESS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "otadp/analysis.hpp"
#include "otadp/channel.hpp"
#include "otadp/config.hpp"
#include "otadp/config_io.hpp"
#include "otadp/privacy.hpp"
#include "otadp/scenario.hpp"

namespace otadp {

enum class SweepMode { kUniform, kWeightCustomized, kClipCustomized };

inline std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::kUniform: return "uniform";
    case SweepMode::kWeightCustomized: return "weight";
    case SweepMode::kClipCustomized: return "clip";
  }
  return "?";
}

inline SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "uniform") return SweepMode::kUniform;
  if (s == "weight") return SweepMode::kWeightCustomized;
  if (s == "clip") return SweepMode::kClipCustomized;
  throw std::invalid_argument("unknown sweep mode '" + s + "' (expected uniform, weight or clip)");
}

inline std::vector<double> default_eps_grid() { return {0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0}; }

struct SweepSpec {
  std::vector<double> eps_grid = default_eps_grid();
  SweepMode mode = SweepMode::kUniform;
  double sensitive_fraction = 0.5;
  double rho = 0.5;  // scale applied to sensitive devices' w_k or C_k
  std::size_t trials_per_point = 4000;
  std::size_t targets_per_point = 40;
  bool accuracy_bound_uses_empirical_mse = false;
  unsigned workers = 0;
};

inline void check_sweep_spec(const SweepSpec& s) {
  if (s.eps_grid.empty()) throw std::invalid_argument("sweep: empty eps grid");
  for (std::size_t i = 0; i < s.eps_grid.size(); ++i) {
    if (!(s.eps_grid[i] > 0.0) || !std::isfinite(s.eps_grid[i])) {
      throw std::invalid_argument("sweep: eps grid values must be positive and finite");
    }
    if (i > 0 && !(s.eps_grid[i] > s.eps_grid[i - 1])) {
      throw std::invalid_argument("sweep: eps grid must be strictly increasing");
    }
  }
  if (!(s.sensitive_fraction >= 0.0 && s.sensitive_fraction <= 1.0)) {
    throw std::invalid_argument("sweep: sensitive_fraction must lie in [0,1]");
  }
  if (!(s.rho > 0.0 && s.rho <= 1.0)) throw std::invalid_argument("sweep: rho must lie in (0,1]");
  if (s.trials_per_point < 100) throw std::invalid_argument("sweep: trials_per_point must be at least 100");
  if (s.targets_per_point == 0 || s.trials_per_point % s.targets_per_point != 0) {
    throw std::invalid_argument("sweep: trials_per_point must be a positive multiple of targets_per_point");
  }
}

/// The first round(fraction * K) devices hold sensitive data.
inline std::vector<std::size_t> sensitive_devices(int k_devices, double fraction) {
  const auto n = static_cast<std::size_t>(std::lround(fraction * k_devices));
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

/// UNIFORM: w_k = 1/K, C_k = C_0. WEIGHT: sensitive w_k = rho/K, the rest
/// share the remaining mass so sum w_k = 1. CLIP: w_k = 1/K and sensitive
/// C_k scaled by rho.
inline SystemConfig apply_mode(SystemConfig cfg, const SweepSpec& spec) {
  const int k_devices = cfg.k_devices;
  const double uniform_w = 1.0 / k_devices;
  const double base_clip = cfg.devices.front().clip;
  const auto sensitive = sensitive_devices(k_devices, spec.sensitive_fraction);
  const std::size_t n_sens = sensitive.size();
  for (auto& d : cfg.devices) {
    d.w = uniform_w;
    d.clip = base_clip;
  }
  if (spec.mode == SweepMode::kWeightCustomized) {
    const double sens_w = spec.rho * uniform_w;
    const double rest_w = n_sens < static_cast<std::size_t>(k_devices)
                              ? (1.0 - static_cast<double>(n_sens) * sens_w) / static_cast<double>(k_devices - n_sens)
                              : 0.0;
    for (std::size_t k = 0; k < cfg.devices.size(); ++k) cfg.devices[k].w = k < n_sens ? sens_w : rest_w;
  } else if (spec.mode == SweepMode::kClipCustomized) {
    for (std::size_t k : sensitive) cfg.devices[k].clip = base_clip * spec.rho;
  }
  return cfg;
}

/// Devices whose eps_k sets the x-coordinate: the sensitive ones, or all.
inline std::vector<std::size_t> accounted_devices(int k_devices, double fraction) {
  auto devs = sensitive_devices(k_devices, fraction);
  if (devs.empty()) {
    for (int k = 0; k < k_devices; ++k) devs.push_back(static_cast<std::size_t>(k));
  }
  return devs;
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SweepRow {
  double eps_target = 0.0;
  double eps_actual = kNaN;
  double sigma_sq = kNaN;
  MseBreakdown bound{kNaN, kNaN, kNaN, kNaN};
  Estimate mse{kNaN, kNaN, 0};
  double p0 = kNaN;
  double acc_lower_bound = kNaN;
  Estimate acc{kNaN, kNaN, 0};
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string note;
};

struct SweepResult {
  SweepSpec spec;
  std::string config_hash;
  std::uint64_t seed = 0;
  double margin = 0.0;
  std::vector<SweepRow> rows;
};

/// One row per grid value: calibrate a common sigma^2 scale so the largest
/// eps_k over the accounted devices hits the target, then run the trials.
/// Targets and trial seeds are shared across modes and grid points.
inline SweepResult run_sweep(const Scenario& base, const SweepSpec& spec) {
  check_sweep_spec(spec);
  const SystemConfig mode_cfg = apply_mode(base.config(), spec);
  const Scenario sc = base.rebind(mode_cfg);
  SweepResult res;
  res.spec = spec;
  res.config_hash = config_hash(mode_cfg);
  res.seed = mode_cfg.master_seed;
  res.margin = sc.classifier().margin_delta;

  const std::size_t per_target = spec.trials_per_point / spec.targets_per_point;
  const double p0 = estimate_p0(sc, spec.targets_per_point, 1, spec.workers).mean;
  const auto accounted = accounted_devices(mode_cfg.k_devices, spec.sensitive_fraction);
  const AccountantInput input = accountant_input(mode_cfg);

  for (double target : spec.eps_grid) {
    SweepRow row;
    row.eps_target = target;
    row.seed = mode_cfg.master_seed;
    const Calibration cal = calibrate_noise_scale(input, accounted, target);
    if (!cal.ok) {
      row.note = cal.reason;
      res.rows.push_back(row);
      continue;
    }
    SystemConfig point = mode_cfg;
    for (auto& d : point.devices) d.sigma_sq *= cal.scale;
    const Scenario psc = sc.rebind(point);
    row.eps_actual = cal.eps;
    row.sigma_sq = point.devices[accounted.front()].sigma_sq;
    row.bound = mse_bound_for_targets(psc, spec.targets_per_point);
    const BatchResult batch = run_batch(psc, {spec.targets_per_point, per_target, false, spec.workers});
    row.mse = empirical_mse(batch);
    row.acc = empirical_accuracy(batch, mode_cfg.classifier.num_classes).overall;
    row.p0 = p0;
    const double mse_for_bound = spec.accuracy_bound_uses_empirical_mse ? row.mse.mean : row.bound.total;
    row.acc_lower_bound = accuracy_lower_bound(p0, std::max(0.0, mse_for_bound), res.margin).bound;
    row.trials = batch.sq_err.size();
    row.ok = true;
    res.rows.push_back(row);
  }
  return res;
}

inline constexpr const char* kSweepColumns =
    "eps_target,eps_actual,sigma_sq,mse_bound_total,mse_bound_noise,mse_bound_weighting,mse_bound_cross,"
    "mse_empirical,mse_stderr,p0,acc_lower_bound,acc_empirical,acc_stderr,trials,seed";

inline std::string sweep_csv(const SweepResult& res) {
  std::string out;
  out += fmt::format("# otadp sweep mode={} config_hash={} seed={}\n", to_string(res.spec.mode),
                     res.config_hash, res.seed);
  out += fmt::format("# sensitive_fraction={} rho={} targets_per_point={} accuracy_bound_mse={}\n",
                     res.spec.sensitive_fraction, res.spec.rho, res.spec.targets_per_point,
                     res.spec.accuracy_bound_uses_empirical_mse ? "empirical" : "analytic");
  out += "# x_axis: eps_actual is the largest eps_k over sensitive devices (all devices if none)\n";
  out += kSweepColumns;
  out += '\n';
  for (const auto& r : res.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.eps_target, r.eps_actual,
                       r.sigma_sq, r.bound.total, r.bound.noise_term, r.bound.weighting_term,
                       r.bound.cross_term, r.mse.mean, r.mse.std_error, r.p0, r.acc_lower_bound, r.acc.mean,
                       r.acc.std_error, r.trials, r.seed);
  }
  return out;
}

/// Raised by run_single; names the pipeline stage that failed.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace detail

struct SingleRunOptions {
  std::size_t targets = 40;
  std::size_t trials_per_target = 250;
  unsigned workers = 0;
};

/// Budgets, MSE bound and estimate, accuracy and power audit for one config.
inline nlohmann::json run_single(const SystemConfig& cfg, const SingleRunOptions& opt) {
  using detail::finite_or_null;
  using detail::stage;
  const Scenario sc = stage("config", [&] { return Scenario(cfg); });

  const AccountantInput input = accountant_input(cfg);
  const PrivacyBudget budget = stage("privacy", [&] { return compute_budgets(input); });
  const TSelection cert = stage("privacy", [&] { return choose_t(input, cfg.master_seed); });

  const BatchResult batch =
      stage("simulation", [&] { return run_batch(sc, {opt.targets, opt.trials_per_target, true, opt.workers}); });
  const MseBreakdown bound = stage("analysis", [&] { return mse_bound_for_targets(sc, opt.targets); });
  const Estimate mse = empirical_mse(batch);
  const AccuracyEstimate acc = empirical_accuracy(batch, cfg.classifier.num_classes);
  const Estimate p0 = stage("analysis", [&] { return estimate_p0(sc, opt.targets, 1, opt.workers); });
  const double margin = sc.classifier().margin_delta;
  const AccuracyBound acc_bound = accuracy_lower_bound(p0.mean, bound.total, margin);
  const auto audit = stage("power_audit", [&] { return audit_power(batch.tx_energy, cfg.devices); });

  nlohmann::json devices = nlohmann::json::array();
  for (const auto& b : budget.devices) {
    devices.push_back({{"index", b.device},
                       {"c_k", b.c_k},
                       {"eps", finite_or_null(b.eps)},
                       {"delta_tilde", finite_or_null(b.delta_tilde)},
                       {"valid", b.valid}});
  }
  nlohmann::json power = nlohmann::json::array();
  for (const auto& r : audit) {
    power.push_back({{"device_index", r.device_index},
                     {"empirical_power_watts", r.empirical_power_watts},
                     {"budget_watts", r.budget_watts},
                     {"exceeded", r.exceeded}});
  }
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : acc.per_class_rate) per_class.push_back(finite_or_null(v));

  return {{"config_hash", config_hash(cfg)},
          {"seed", cfg.master_seed},
          {"trials", batch.sq_err.size()},
          {"privacy",
           {{"mu_bar", budget.mu_bar},
            {"t", budget.t},
            {"all_valid", budget.all_valid()},
            {"certificate",
             {{"tail_probability", cert.tail_probability},
              {"half_width", cert.tail_half_width},
              {"exact", cert.exact},
              {"certified", cert.certified}}},
            {"devices", devices}}},
          {"mse",
           {{"bound",
             {{"noise", bound.noise_term},
              {"weighting", bound.weighting_term},
              {"cross", bound.cross_term},
              {"total", bound.total}}},
            {"empirical", {{"mean", mse.mean}, {"stderr", mse.std_error}}}}},
          {"accuracy",
           {{"p0", p0.mean},
            {"empirical", {{"mean", acc.overall.mean}, {"stderr", acc.overall.std_error}}},
            {"per_class", per_class},
            {"margin", margin},
            {"lower_bound", acc_bound.bound}}},
          {"power_audit", power}};
}

inline std::string report_text(const nlohmann::json& report) { return report.dump(2) + "\n"; }

}  // namespace otadp

#endif  // OTADP_HARNESS_HPP
