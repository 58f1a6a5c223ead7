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

// Fading multiple-access channel: participation sampling, power alignment,
// analog superposition with receiver noise, and transmit-power auditing.

#ifndef OTADP_CHANNEL_HPP
#define OTADP_CHANNEL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "otadp/config.hpp"
#include "otadp/device.hpp"
#include "otadp/numeric.hpp"
#include "otadp/seed.hpp"

namespace otadp {

struct ChannelRealization {
  std::vector<double> h;
  std::vector<double> alpha;

  bool operator==(const ChannelRealization&) const = default;
};

struct ParticipationDraw {
  std::vector<std::uint8_t> tau;

  bool operator==(const ParticipationDraw&) const = default;
};

class ChannelError : public std::runtime_error {
 public:
  ChannelError(int device, const std::string& what)
      : std::runtime_error("device " + std::to_string(device) + ": " + what), device_(device) {}
  int device() const { return device_; }

 private:
  int device_;
};

/// Rician amplitude |nu + s(N1 + jN2)| with nu^2 = K*Omega/(K+1) and
/// 2s^2 = Omega/(K+1), so E[h^2] = Omega.
inline double draw_fading_amplitude(const FadingModel& model, Rng& rng) {
  if (model.kind == FadingKind::kConstant) return std::sqrt(model.mean_power);
  const double k = model.k_factor;
  if (std::isinf(k)) return std::sqrt(model.mean_power);
  const double los = std::sqrt(k * model.mean_power / (k + 1.0));
  const double scatter = std::sqrt(model.mean_power / (2.0 * (k + 1.0)));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double re = los + scatter * normal(rng);
  const double im = scatter * normal(rng);
  return std::hypot(re, im);
}

/// One block of K fading draws; draws below h_floor are redrawn.
inline std::vector<double> draw_channel(const FadingModel& model, int num_devices, Rng& rng) {
  if (!(model.mean_power > 0.0) || !(model.h_floor > 0.0)) {
    throw std::invalid_argument("draw_channel: mean_power and h_floor must be positive");
  }
  std::vector<double> h(num_devices);
  for (int k = 0; k < num_devices; ++k) {
    double v = draw_fading_amplitude(model, rng);
    int redraws = 0;
    while (v < model.h_floor) {
      if (redraws++ >= model.max_redraws) {
        throw ChannelError(k, "deep fade persisted after " + std::to_string(model.max_redraws) +
                                  " redraws (h_floor " + fmt::format("{}", model.h_floor) + ")");
      }
      v = draw_fading_amplitude(model, rng);
    }
    h[k] = v;
  }
  return h;
}

/// alpha_k = gamma * p_k / h_k so that h_k alpha_k / p_k = gamma. Devices with
/// p_k = 0 never transmit and get alpha_k = 0.
inline std::vector<double> align(std::span<const double> h, std::span<const DeviceProfile> profiles,
                                 double gamma) {
  if (h.size() != profiles.size()) throw std::invalid_argument("align: size mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("align: gamma must be positive");
  std::vector<double> alpha(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double p = profiles[k].p;
    if (p == 0.0) {
      alpha[k] = 0.0;
      continue;
    }
    if (!(h[k] > 0.0)) throw ChannelError(static_cast<int>(k), "cannot align with h = 0");
    alpha[k] = gamma * p / h[k];
  }
  return alpha;
}

inline ParticipationDraw sample_participation(std::span<const DeviceProfile> profiles, Rng& rng) {
  ParticipationDraw draw;
  draw.tau.resize(profiles.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    // One uniform per device keeps the stream aligned even for p in {0, 1}.
    const double u = uniform(rng);
    draw.tau[k] = u < profiles[k].p ? 1 : 0;
  }
  return draw;
}

/// x_k = (alpha_k / p_k) z~_k when participating, otherwise zero.
inline Vector transmit_signal(const Vector& z_tilde, double alpha, double p, bool participating) {
  if (!participating) return Vector::Zero(z_tilde.size());
  if (!(p > 0.0)) throw std::invalid_argument("transmit_signal: participating device needs p > 0");
  return (alpha / p) * z_tilde;
}

/// y = sum_k h_k x_k + m with m ~ N(0, sigma_sq_m I).
inline Vector superpose(std::span<const Vector> signals, std::span<const double> h, double sigma_sq_m,
                        Rng& rng) {
  if (signals.size() != h.size()) throw std::invalid_argument("superpose: size mismatch");
  if (signals.empty()) throw std::invalid_argument("superpose: no signals");
  const Eigen::Index r = signals.front().size();
  Vector y = Vector::Zero(r);
  for (std::size_t k = 0; k < signals.size(); ++k) {
    if (signals[k].size() != r) throw std::invalid_argument("superpose: signal length mismatch");
    y += h[k] * signals[k];
  }
  if (sigma_sq_m > 0.0) y += std::sqrt(sigma_sq_m) * standard_normal_vector(r, rng);
  return y;
}

struct PowerAuditRow {
  int device_index = 0;
  double empirical_power_watts = 0.0;
  double budget_watts = 0.0;
  bool exceeded = false;
};

/// energies[trial][k] = ||x_k||^2 in that trial. Report-only: signals are
/// never truncated to the budget.
inline std::vector<PowerAuditRow> audit_power(const std::vector<std::vector<double>>& energies,
                                              std::span<const DeviceProfile> profiles) {
  if (energies.empty()) throw std::invalid_argument("audit_power: need at least one trial");
  std::vector<PowerAuditRow> rows;
  std::vector<double> column(energies.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    for (std::size_t t = 0; t < energies.size(); ++t) {
      if (energies[t].size() != profiles.size()) {
        throw std::invalid_argument("audit_power: trial " + std::to_string(t) + " has wrong device count");
      }
      column[t] = energies[t][k];
    }
    PowerAuditRow row;
    row.device_index = profiles[k].index;
    row.empirical_power_watts = pairwise_sum(column) / static_cast<double>(energies.size());
    row.budget_watts = profiles[k].power_watts;
    row.exceeded = row.empirical_power_watts > row.budget_watts;
    rows.push_back(row);
  }
  return rows;
}

inline std::string power_audit_csv(std::span<const PowerAuditRow> rows) {
  std::string out = "device_index,empirical_power_watts,budget_watts,exceeded\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.device_index, r.empirical_power_watts, r.budget_watts,
                       r.exceeded ? "true" : "false");
  }
  return out;
}

}  // namespace otadp

#endif  // OTADP_CHANNEL_HPP
