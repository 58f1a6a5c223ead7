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

// Per-device feature-DP accounting for sampled, aligned over-the-air
// aggregation.
//
// Neighbouring inputs differ in one device's feature. Device k reaches the
// server with sensitivity c_k = gamma w_k C_k sqrt(2 ln(1.25/delta)) and is
// masked by the aggregate perturbation variance mu = sum_i tau_i sigma_i^2,
// where tau_i ~ Bern(p_i). If Pr(|mu - mu_bar| >= t) <= delta', the mechanism
// is (eps_k, delta~_k)-feature DP with
//
//   eps_k     = ln(1 + p_k/(1 - delta') (exp(c_k / sqrt(mu_bar - t)) - 1))
//   delta~_k  = delta' + p_k delta / (1 - delta')
//
// and t chosen from max_k sigma_k^2 and sum_k p_k(1-p_k) sigma_k^4 (see
// concentration_offset). When mu_bar <= t the bound is vacuous and eps_k is
// reported as +inf. All logarithms are natural.

#ifndef OTADP_PRIVACY_HPP
#define OTADP_PRIVACY_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "otadp/config.hpp"
#include "otadp/numeric.hpp"
#include "otadp/seed.hpp"

namespace otadp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct AccountantInput {
  std::vector<double> p;
  std::vector<double> w;
  std::vector<double> clip;
  std::vector<double> sigma_sq;
  double gamma = 1.0;
  double delta = 1e-5;
  double delta_prime = 1e-5;

  std::size_t size() const { return p.size(); }
};

inline AccountantInput accountant_input(std::span<const DeviceProfile> devices, double gamma,
                                        double delta, double delta_prime) {
  AccountantInput in;
  for (const auto& d : devices) {
    in.p.push_back(d.p);
    in.w.push_back(d.w);
    in.clip.push_back(d.clip);
    in.sigma_sq.push_back(d.sigma_sq);
  }
  in.gamma = gamma;
  in.delta = delta;
  in.delta_prime = delta_prime;
  return in;
}

inline AccountantInput accountant_input(const SystemConfig& cfg) {
  return accountant_input(cfg.devices, cfg.gamma, cfg.delta, cfg.delta_prime);
}

/// Same input with every sigma_k^2 multiplied by `factor`.
inline AccountantInput scale_noise(AccountantInput in, double factor) {
  for (double& s : in.sigma_sq) s *= factor;
  return in;
}

inline double sensitivity_constant(std::size_t k, const AccountantInput& in) {
  if (!(in.delta > 0.0 && in.delta <= 1.0)) {
    throw std::invalid_argument("sensitivity_constant: delta must lie in (0,1]");
  }
  return in.gamma * in.w.at(k) * in.clip.at(k) * std::sqrt(2.0 * std::log(1.25 / in.delta));
}

inline double mu_bar(const AccountantInput& in) {
  double acc = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) acc += in.p[i] * in.sigma_sq[i];
  return acc;
}

/// t = (L/2) (a + sqrt(a/9 + 4 v / L)), with L = ln(2/delta'),
/// a = max_k sigma_k^2 and v = sum_k p_k (1 - p_k) sigma_k^4.
inline double concentration_offset(const AccountantInput& in) {
  if (!(in.delta_prime > 0.0 && in.delta_prime <= 1.0)) {
    throw std::invalid_argument("concentration_offset: delta' must lie in (0,1]");
  }
  const double log_term = std::log(2.0 / in.delta_prime);
  double max_var = 0.0;
  double var_sum = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    max_var = std::max(max_var, in.sigma_sq[k]);
    var_sum += in.p[k] * (1.0 - in.p[k]) * in.sigma_sq[k] * in.sigma_sq[k];
  }
  return 0.5 * log_term * (max_var + std::sqrt(max_var / 9.0 + 4.0 * var_sum / log_term));
}

inline constexpr std::size_t kMaxExactDevices = 20;

/// Pr(|mu - mu_bar| >= t) by enumerating every participation pattern.
/// Devices with p in {0, 1} are folded into a constant; the rest are walked
/// in Gray-code order so each step flips one device.
inline double concentration_exact(const AccountantInput& in, double t) {
  if (in.size() > kMaxExactDevices) {
    throw std::invalid_argument(fmt::format(
        "concentration_exact: {} devices exceeds the {}-device enumeration limit; use concentration_mc",
        in.size(), kMaxExactDevices));
  }
  if (std::isinf(t) && t > 0) return 0.0;
  const double mean = mu_bar(in);
  long double mu = 0.0L;
  long double log_prob = 0.0L;
  std::vector<long double> var;
  std::vector<long double> log_odds;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double p = in.p[i];
    if (p >= 1.0) {
      mu += in.sigma_sq[i];
    } else if (p > 0.0) {
      var.push_back(in.sigma_sq[i]);
      log_odds.push_back(std::log(static_cast<long double>(p)) - std::log1p(-static_cast<long double>(p)));
      log_prob += std::log1p(-static_cast<long double>(p));
    }
  }
  std::vector<double> hits;
  auto visit = [&] {
    if (std::abs(static_cast<double>(mu) - mean) >= t) {
      hits.push_back(static_cast<double>(std::exp(log_prob)));
    }
  };
  visit();
  const std::uint64_t patterns = std::uint64_t{1} << var.size();
  for (std::uint64_t g = 1; g < patterns; ++g) {
    const int j = std::countr_zero(g);
    const bool now_in = (((g ^ (g >> 1)) >> j) & 1U) != 0;
    if (now_in) {
      mu += var[j];
      log_prob += log_odds[j];
    } else {
      mu -= var[j];
      log_prob -= log_odds[j];
    }
    visit();
  }
  return std::min(1.0, pairwise_sum(hits));
}

struct McEstimate {
  double probability = 0.0;
  double half_width = 0.0;  // 95% normal-approximation interval
  std::size_t trials = 0;
};

inline McEstimate concentration_mc(const AccountantInput& in, double t, std::size_t trials, Rng& rng) {
  if (trials < 10'000) throw std::invalid_argument("concentration_mc: need at least 1e4 trials");
  McEstimate est;
  est.trials = trials;
  if (std::isinf(t) && t > 0) return est;
  const double mean = mu_bar(in);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::size_t count = 0;
  for (std::size_t n = 0; n < trials; ++n) {
    double mu = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (uniform(rng) < in.p[i]) mu += in.sigma_sq[i];
    }
    if (std::abs(mu - mean) >= t) ++count;
  }
  est.probability = static_cast<double>(count) / static_cast<double>(trials);
  est.half_width = 1.96 * std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(trials));
  return est;
}

/// t together with its tail certificate Pr(|mu - mu_bar| >= t) <= delta'.
struct TSelection {
  double t = 0.0;
  double tail_probability = 0.0;
  double tail_half_width = 0.0;  // 0 when exact
  bool exact = true;
  bool certified = false;
};

inline TSelection choose_t(const AccountantInput& in, std::uint64_t mc_seed = 0,
                           std::size_t mc_trials = 1'000'000) {
  TSelection sel;
  sel.t = concentration_offset(in);
  if (in.size() <= kMaxExactDevices) {
    sel.tail_probability = concentration_exact(in, sel.t);
    sel.exact = true;
    sel.certified = sel.tail_probability <= in.delta_prime;
  } else {
    Rng rng = make_rng(mc_seed, 0, Stream::kMonteCarlo);
    const McEstimate mc = concentration_mc(in, sel.t, mc_trials, rng);
    sel.tail_probability = mc.probability;
    sel.tail_half_width = mc.half_width;
    sel.exact = false;
    sel.certified = mc.probability + mc.half_width <= in.delta_prime;
  }
  return sel;
}

/// ln(1 + a (e^x - 1)) with a = p/(1 - delta') and x = c / sqrt(mu_bar - t),
/// evaluated without overflow for large x. +inf when mu_bar - t <= 0.
inline double amplified_epsilon(double p, double c, double mean, double t, double delta_prime) {
  const double gap = mean - t;
  if (!(gap > 0.0)) return kInf;
  if (p == 0.0 || c == 0.0) return 0.0;
  if (delta_prime >= 1.0) return kInf;
  const double x = c / std::sqrt(gap);
  const double a = p / (1.0 - delta_prime);
  if (x < 30.0) return std::log1p(a * std::expm1(x));
  // 1 + a(e^x - 1) = a e^x (1 + (1/a - 1) e^-x)
  return std::log(a) + x + std::log1p((1.0 / a - 1.0) * std::exp(-x));
}

inline double delta_tilde(double p, double delta, double delta_prime) {
  if (delta_prime >= 1.0) return p == 0.0 ? delta_prime : kInf;
  return delta_prime + p * delta / (1.0 - delta_prime);
}

struct DeviceBudget {
  int device = 0;
  double c_k = 0.0;
  double eps = 0.0;
  double delta_tilde = 0.0;
  bool valid = false;
};

struct PrivacyBudget {
  std::vector<DeviceBudget> devices;
  double mu_bar = 0.0;
  double t = 0.0;

  bool all_valid() const {
    return std::all_of(devices.begin(), devices.end(), [](const DeviceBudget& b) { return b.valid; });
  }
};

namespace detail {

inline DeviceBudget budget_for(std::size_t k, const AccountantInput& in, double mean, double t) {
  DeviceBudget b;
  b.device = static_cast<int>(k);
  b.c_k = sensitivity_constant(k, in);
  b.eps = amplified_epsilon(in.p[k], b.c_k, mean, t, in.delta_prime);
  b.delta_tilde = delta_tilde(in.p[k], in.delta, in.delta_prime);
  b.valid = (mean - t > 0.0) && std::isfinite(b.eps) && b.delta_tilde > 0.0 && b.delta_tilde <= 1.0;
  return b;
}

}  // namespace detail

inline DeviceBudget epsilon_for_device(std::size_t k, const AccountantInput& in) {
  if (k >= in.size()) throw std::out_of_range("epsilon_for_device: device index out of range");
  return detail::budget_for(k, in, mu_bar(in), concentration_offset(in));
}

inline PrivacyBudget compute_budgets(const AccountantInput& in) {
  PrivacyBudget out;
  out.mu_bar = mu_bar(in);
  out.t = concentration_offset(in);
  for (std::size_t k = 0; k < in.size(); ++k) out.devices.push_back(detail::budget_for(k, in, out.mu_bar, out.t));
  return out;
}

inline std::string budget_csv(const AccountantInput& in, const PrivacyBudget& budget) {
  std::string out = "device_index,p,w,C,sigma_sq,c_k,mu_bar,t,eps_k,delta_tilde_k,valid\n";
  for (const auto& b : budget.devices) {
    const std::size_t k = static_cast<std::size_t>(b.device);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", b.device, in.p[k], in.w[k], in.clip[k],
                       in.sigma_sq[k], b.c_k, budget.mu_bar, budget.t, b.eps, b.delta_tilde,
                       b.valid ? "true" : "false");
  }
  return out;
}

struct Calibration {
  bool ok = false;
  double scale = 1.0;     // factor applied to every sigma_k^2
  double sigma_sq = 0.0;  // resulting sigma^2 of the reference device
  double eps = kInf;      // achieved max eps over the calibrated devices
  std::string reason;
};

/// Finds one factor s so that, with every sigma_i^2 scaled by s, the largest
/// eps_k over `targets` equals target_eps (1e-6 relative). eps is
/// nonincreasing in s wherever it is finite, so the search is a bisection on
/// log s.
inline Calibration calibrate_noise_scale(const AccountantInput& in, std::span<const std::size_t> targets,
                                         double target_eps) {
  Calibration cal;
  if (!(target_eps > 0.0) || !std::isfinite(target_eps)) {
    cal.reason = "target eps must be positive and finite";
    return cal;
  }
  if (targets.empty()) {
    cal.reason = "no devices to calibrate";
    return cal;
  }
  for (std::size_t k : targets) {
    if (k >= in.size()) throw std::out_of_range("calibrate_noise_scale: device index out of range");
  }
  if (std::all_of(in.sigma_sq.begin(), in.sigma_sq.end(), [](double s) { return s == 0.0; })) {
    cal.reason = "all noise variances are zero; scaling cannot change eps";
    return cal;
  }
  auto eps_at = [&](double log_scale) {
    const AccountantInput scaled = scale_noise(in, std::exp(log_scale));
    const double mean = mu_bar(scaled);
    const double t = concentration_offset(scaled);
    double worst = 0.0;
    for (std::size_t k : targets) {
      worst = std::max(worst, amplified_epsilon(scaled.p[k], sensitivity_constant(k, scaled), mean, t,
                                                scaled.delta_prime));
    }
    return worst;
  };

  constexpr double kLogLimit = 460.0;  // scale range [1e-200, 1e200]
  double lo = 0.0;
  double hi = 0.0;
  if (eps_at(0.0) > target_eps) {
    while (eps_at(hi) > target_eps) {
      lo = hi;
      hi += std::log(2.0);
      if (hi > kLogLimit) {
        cal.reason = "target below the sampling floor: no noise level reaches it";
        return cal;
      }
    }
  } else {
    while (eps_at(lo) <= target_eps) {
      hi = lo;
      lo -= std::log(2.0);
      if (lo < -kLogLimit) {
        cal.reason = "target above the supremum reachable by reducing noise";
        return cal;
      }
    }
  }
  // Invariant: eps(lo) > target >= eps(hi).
  for (int it = 0; it < 300 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eps_at(mid) > target_eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  cal.scale = std::exp(hi);
  cal.eps = eps_at(hi);
  cal.sigma_sq = in.sigma_sq[targets.front()] * cal.scale;
  cal.ok = std::abs(cal.eps - target_eps) <= 1e-6 * target_eps;
  if (!cal.ok) cal.reason = fmt::format("bisection stalled at eps {} for target {}", cal.eps, target_eps);
  return cal;
}

inline Calibration calibrate_sigma(std::size_t k, const AccountantInput& in, double target_eps) {
  const std::size_t target[] = {k};
  return calibrate_noise_scale(in, target, target_eps);
}

}  // namespace otadp

#endif  // OTADP_PRIVACY_HPP
