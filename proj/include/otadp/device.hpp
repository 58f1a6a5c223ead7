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

// Device side: feature extraction (synthetic), linear encoding, norm
// clipping and Gaussian perturbation, in that order.

#ifndef OTADP_DEVICE_HPP
#define OTADP_DEVICE_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "otadp/config.hpp"
#include "otadp/numeric.hpp"
#include "otadp/seed.hpp"

namespace otadp {

using FeatureVector = Vector;

/// One common object observed by every device: the class prototype plus a
/// per-device view offset.
struct TargetObject {
  int class_label = 0;
  Vector canonical_feature;
  std::vector<Vector> view_perturbations;
};

struct EncodedFeature {
  Vector values;
  bool clipped = false;
};

/// r x d encoder; identity or dense.
using EncoderMatrix = LinearMap;

inline FeatureVector extract_feature(const TargetObject& target, int device_index) {
  if (device_index < 0 || device_index >= static_cast<int>(target.view_perturbations.size())) {
    throw std::out_of_range("extract_feature: device index " + std::to_string(device_index) +
                            " out of range");
  }
  return target.canonical_feature + target.view_perturbations[device_index];
}

inline EncodedFeature encode(const FeatureVector& f, const EncoderMatrix& W) {
  return {W.apply(f), false};
}

/// Scales z onto the ball of radius C when it lies outside. A zero vector is
/// returned unchanged; C = 0 maps every nonzero z to zero. Norms within a
/// 1e-12 relative slack of C count as inside, which makes clip idempotent
/// despite rounding in the rescaled norm.
inline EncodedFeature clip(const EncodedFeature& z, double bound) {
  if (!(bound >= 0.0)) throw std::invalid_argument("clip: bound must be nonnegative");
  const double norm = z.values.norm();
  if (norm <= bound * (1.0 + 1e-12)) return {z.values, false};
  if (bound == 0.0) return {Vector::Zero(z.values.size()), true};
  return {z.values * (bound / norm), true};
}

inline Vector standard_normal_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

/// w*z + n with n ~ N(0, sigma_sq I). The noise draw depends only on the rng
/// state, never on z.
inline Vector perturb(const EncodedFeature& z, double weight, double sigma_sq, Rng& rng) {
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("perturb: sigma_sq must be nonnegative");
  Vector out = weight * z.values;
  if (sigma_sq > 0.0) out += std::sqrt(sigma_sq) * standard_normal_vector(out.size(), rng);
  return out;
}

/// Extract, encode and clip: the deterministic part of the device pipeline.
inline EncodedFeature prepare_feature(const TargetObject& target, const DeviceProfile& profile,
                                      const EncoderMatrix& W) {
  return clip(encode(extract_feature(target, profile.index), W), profile.clip);
}

inline Vector run_device(const TargetObject& target, const DeviceProfile& profile,
                         const EncoderMatrix& W, Rng& rng) {
  return perturb(prepare_feature(target, profile, W), profile.w, profile.sigma_sq, rng);
}

/// Random r x d matrix with orthonormal rows (Q factor of a Gaussian d x r).
inline Matrix orthonormal_rows(int r, int d, std::uint64_t seed) {
  if (r > d) throw std::invalid_argument("orthonormal_rows: r exceeds d");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, r);
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  return q.transpose();
}

/// One encoder per device; shared kinds hand every device the same storage.
inline std::vector<EncoderMatrix> make_encoders(const SystemConfig& cfg) {
  std::vector<EncoderMatrix> out;
  out.reserve(cfg.k_devices);
  switch (cfg.encoder) {
    case EncoderKind::kIdentity: {
      auto id = EncoderMatrix::identity(cfg.feature_dim);
      out.assign(cfg.k_devices, id);
      break;
    }
    case EncoderKind::kSharedOrthonormal: {
      auto w = EncoderMatrix::dense(orthonormal_rows(
          cfg.reduced_dim, cfg.feature_dim, derive_trial_seed(cfg.master_seed, 0, Stream::kEncoder)));
      out.assign(cfg.k_devices, w);
      break;
    }
    case EncoderKind::kPerDeviceOrthonormal:
      for (int k = 0; k < cfg.k_devices; ++k) {
        out.push_back(EncoderMatrix::dense(orthonormal_rows(
            cfg.reduced_dim, cfg.feature_dim,
            derive_trial_seed(cfg.master_seed, 0, Stream::kEncoder, static_cast<std::uint64_t>(k) + 1))));
      }
      break;
  }
  return out;
}

}  // namespace otadp

#endif  // OTADP_DEVICE_HPP
