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

// Analytic MSE bound, accuracy lower bound, and their empirical
// counterparts.
//
// The bound on E||f^ - f*||^2 has three summands:
//
//   noise     = d ||D||_F^2 (sum_k p_k sigma_k^2 + sigma_m^2 / gamma^2)
//   weighting = sum_k (w_k^2 p_k - 2 w_k p_k + 1) ||D||_F^2 ||W_k||_F^2 ||f_k||^2
//   cross     = sum_{k<j} (p_k p_j w_k w_j - p_k w_k - p_j w_j + 1)
//                         f_k^T W_k^T D^T D W_j f_j
//
// The cross term is signed and reported as such. In the (eps, delta) form
// each sigma_k^2 is replaced by 2 w_k^2 C_k^2 ln(1.25/delta_k) / eps_k^2.

#ifndef OTADP_ANALYSIS_HPP
#define OTADP_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "otadp/config.hpp"
#include "otadp/numeric.hpp"
#include "otadp/scenario.hpp"

namespace otadp {

struct MseBreakdown {
  double noise_term = 0.0;
  double weighting_term = 0.0;
  double cross_term = 0.0;
  double total = 0.0;
};

/// Everything the bound needs from the encoders, decoder and features.
struct BoundGeometry {
  double d = 0.0;
  double decoder_frob_sq = 0.0;
  std::vector<double> weight_norm;  // ||D||_F^2 ||W_k||_F^2 ||f_k||^2
  Matrix gram;                      // (D W_k f_k)^T (D W_j f_j)
};

inline BoundGeometry bound_geometry(const DecoderMatrix& D, std::span<const EncoderMatrix> encoders,
                                    std::span<const FeatureVector> features) {
  if (encoders.size() != features.size()) throw std::invalid_argument("bound_geometry: size mismatch");
  BoundGeometry g;
  g.d = static_cast<double>(D.rows());
  g.decoder_frob_sq = D.frobenius_sq();
  const std::size_t k_devices = features.size();
  std::vector<Vector> mapped;
  mapped.reserve(k_devices);
  for (std::size_t k = 0; k < k_devices; ++k) {
    g.weight_norm.push_back(g.decoder_frob_sq * encoders[k].frobenius_sq() * features[k].squaredNorm());
    mapped.push_back(D.apply(encoders[k].apply(features[k])));
  }
  g.gram = Matrix::Zero(static_cast<Eigen::Index>(k_devices), static_cast<Eigen::Index>(k_devices));
  for (std::size_t k = 0; k < k_devices; ++k) {
    for (std::size_t j = k; j < k_devices; ++j) {
      const double v = mapped[k].dot(mapped[j]);
      g.gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
      g.gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return g;
}

inline BoundGeometry bound_geometry(const Scenario& sc, const PreparedTarget& pt) {
  return bound_geometry(sc.decoder(), sc.encoders(), pt.features);
}

inline MseBreakdown mse_bound_sigma_form(const BoundGeometry& g, std::span<const DeviceProfile> devices,
                                         double sigma_sq_m, double gamma) {
  if (devices.size() != g.weight_norm.size()) throw std::invalid_argument("mse_bound: device count mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("mse_bound: gamma must be positive");
  MseBreakdown b;
  double perturbation = 0.0;
  for (const auto& dev : devices) perturbation += dev.p * dev.sigma_sq;
  b.noise_term = g.d * g.decoder_frob_sq * (perturbation + sigma_sq_m / (gamma * gamma));
  for (std::size_t k = 0; k < devices.size(); ++k) {
    const double p = devices[k].p;
    const double w = devices[k].w;
    b.weighting_term += (w * w * p - 2.0 * w * p + 1.0) * g.weight_norm[k];
  }
  for (std::size_t k = 0; k < devices.size(); ++k) {
    for (std::size_t j = k + 1; j < devices.size(); ++j) {
      const double pk = devices[k].p, wk = devices[k].w;
      const double pj = devices[j].p, wj = devices[j].w;
      b.cross_term += (pk * pj * wk * wj - pk * wk - pj * wj + 1.0) *
                      g.gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    }
  }
  b.total = b.noise_term + b.weighting_term + b.cross_term;
  return b;
}

/// Gaussian-mechanism variance for weight w, clip C and budget (eps, delta).
inline double gaussian_sigma_sq(double w, double clip, double eps, double delta) {
  if (!(eps > 0.0)) throw std::invalid_argument("gaussian_sigma_sq: eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("gaussian_sigma_sq: delta must lie in (0,1)");
  return 2.0 * w * w * clip * clip * std::log(1.25 / delta) / (eps * eps);
}

inline MseBreakdown mse_bound_eps_form(const BoundGeometry& g, std::span<const DeviceProfile> devices,
                                       std::span<const double> eps, std::span<const double> delta,
                                       double sigma_sq_m, double gamma) {
  if (eps.size() != devices.size() || delta.size() != devices.size()) {
    throw std::invalid_argument("mse_bound_eps_form: budget count mismatch");
  }
  std::vector<DeviceProfile> substituted(devices.begin(), devices.end());
  for (std::size_t k = 0; k < substituted.size(); ++k) {
    substituted[k].sigma_sq = gaussian_sigma_sq(devices[k].w, devices[k].clip, eps[k], delta[k]);
  }
  return mse_bound_sigma_form(g, substituted, sigma_sq_m, gamma);
}

inline MseBreakdown mean_breakdown(std::span<const MseBreakdown> parts) {
  if (parts.empty()) throw std::invalid_argument("mean_breakdown: empty input");
  std::vector<double> noise, weighting, cross;
  for (const auto& b : parts) {
    noise.push_back(b.noise_term);
    weighting.push_back(b.weighting_term);
    cross.push_back(b.cross_term);
  }
  const double n = static_cast<double>(parts.size());
  MseBreakdown m;
  m.noise_term = pairwise_sum(noise) / n;
  m.weighting_term = pairwise_sum(weighting) / n;
  m.cross_term = pairwise_sum(cross) / n;
  m.total = m.noise_term + m.weighting_term + m.cross_term;
  return m;
}

/// Bound averaged over the first `targets` targets (the ones run_batch uses).
inline MseBreakdown mse_bound_for_targets(const Scenario& sc, std::size_t targets) {
  std::vector<MseBreakdown> parts(targets);
  const SystemConfig& cfg = sc.config();
  parallel_for(targets, [&](std::size_t i) {
    const PreparedTarget pt = prepare_target(sc, make_target(sc, i));
    parts[i] = mse_bound_sigma_form(bound_geometry(sc, pt), cfg.devices, cfg.sigma_sq_m, cfg.gamma);
  });
  return mean_breakdown(parts);
}

struct AccuracyBound {
  double p0 = 0.0;
  double mse = 0.0;
  double margin_delta = 0.0;
  double bound = 0.0;
};

/// max(0, p0 (1 - (mse / margin)^2)).
inline AccuracyBound accuracy_lower_bound(double p0, double mse, double margin_delta) {
  if (!(margin_delta > 0.0)) throw std::invalid_argument("accuracy_lower_bound: margin must be positive");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("accuracy_lower_bound: p0 must lie in [0,1]");
  if (!(mse >= 0.0)) throw std::invalid_argument("accuracy_lower_bound: mse must be nonnegative");
  AccuracyBound a{p0, mse, margin_delta, 0.0};
  const double ratio = mse / margin_delta;
  a.bound = std::max(0.0, p0 * (1.0 - ratio * ratio));
  return a;
}

inline Estimate empirical_mse(const BatchResult& batch) { return estimate_mean(batch.sq_err); }

struct AccuracyEstimate {
  Estimate overall;
  std::vector<double> per_class_rate;  // NaN for classes never drawn
  std::vector<std::size_t> per_class_count;
};

inline AccuracyEstimate empirical_accuracy(const BatchResult& batch, int num_classes) {
  AccuracyEstimate a;
  a.overall = estimate_mean(batch.correct);
  a.per_class_count.assign(num_classes, 0);
  std::vector<double> hits(num_classes, 0.0);
  for (std::size_t i = 0; i < batch.correct.size(); ++i) {
    const int c = batch.true_label[i];
    ++a.per_class_count.at(c);
    hits[c] += batch.correct[i];
  }
  for (int c = 0; c < num_classes; ++c) {
    a.per_class_rate.push_back(a.per_class_count[c] == 0 ? std::nan("")
                                                          : hits[c] / static_cast<double>(a.per_class_count[c]));
  }
  return a;
}

/// The config with every noise source and the sampling switched off.
inline SystemConfig noiseless_config(SystemConfig cfg) {
  cfg.sigma_sq_m = 0.0;
  for (auto& d : cfg.devices) {
    d.sigma_sq = 0.0;
    d.p = 1.0;
  }
  return cfg;
}

/// P0: accuracy of the noiseless pipeline on the same targets.
inline Estimate estimate_p0(const Scenario& sc, std::size_t targets, std::size_t trials_per_target = 1,
                            unsigned workers = 0) {
  const Scenario quiet = sc.rebind(noiseless_config(sc.config()));
  const BatchResult batch = run_batch(quiet, {targets, trials_per_target, false, workers});
  return estimate_mean(batch.correct);
}

}  // namespace otadp

#endif  // OTADP_ANALYSIS_HPP
