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

#ifndef OTADP_SERVER_HPP
#define OTADP_SERVER_HPP

#include <cstdint>
#include <limits>
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

/// d x r decoder.
using DecoderMatrix = LinearMap;

/// Nearest-centroid classifier. margin_delta is half the smallest pairwise
/// centroid distance: any input strictly closer than that to a centroid is
/// assigned to it.
struct MarginClassifier {
  std::vector<Vector> centroids;
  double margin_delta = 0.0;
};

inline Vector post_process(const Vector& y, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("post_process: gamma must be positive");
  return y / gamma;
}

inline Vector decode(const Vector& z_hat, const DecoderMatrix& D) { return D.apply(z_hat); }

inline Vector average_pool(std::span<const Vector> features) {
  if (features.empty()) throw std::invalid_argument("average_pool: empty feature list");
  Vector acc = Vector::Zero(features.front().size());
  for (const auto& f : features) {
    if (f.size() != acc.size()) throw std::invalid_argument("average_pool: length mismatch");
    acc += f;
  }
  return acc / static_cast<double>(features.size());
}

/// argmin_c ||f - c||, lowest index on ties.
inline int classify(const Vector& f, const MarginClassifier& clf) {
  if (clf.centroids.empty()) throw std::invalid_argument("classify: no centroids");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < clf.centroids.size(); ++c) {
    const double dist = (f - clf.centroids[c]).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(c);
    }
  }
  return best;
}

/// Half the minimum pairwise distance; 0 when two centroids coincide.
inline double compute_margin(std::span<const Vector> centroids) {
  if (centroids.size() < 2) throw std::invalid_argument("compute_margin: need at least two centroids");
  double min_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    for (std::size_t j = i + 1; j < centroids.size(); ++j) {
      min_sq = std::min(min_sq, (centroids[i] - centroids[j]).squaredNorm());
    }
  }
  return 0.5 * std::sqrt(min_sq);
}

inline MarginClassifier make_margin_classifier(std::vector<Vector> centroids) {
  MarginClassifier clf;
  clf.margin_delta = compute_margin(centroids);
  if (!(clf.margin_delta > 0.0)) {
    throw std::invalid_argument("classifier: duplicate centroids give a zero margin");
  }
  clf.centroids = std::move(centroids);
  return clf;
}

/// Gaussian prototype directions rescaled so the margin equals spec.margin.
/// With a dense shared encoder the prototypes are drawn inside its row space
/// (the subspace the encoder preserves).
inline MarginClassifier make_synthetic_classifier(const ClassifierSpec& spec, int feature_dim,
                                                  std::uint64_t seed,
                                                  const LinearMap* row_basis = nullptr) {
  Rng rng(seed);
  std::vector<Vector> centroids;
  centroids.reserve(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    if (row_basis != nullptr && !row_basis->is_identity()) {
      centroids.push_back(row_basis->transposed().apply(standard_normal_vector(row_basis->rows(), rng)));
    } else {
      centroids.push_back(standard_normal_vector(feature_dim, rng));
    }
  }
  const double raw = compute_margin(centroids);
  if (!(raw > 0.0)) throw std::invalid_argument("classifier: degenerate prototype draw");
  for (auto& c : centroids) c *= spec.margin / raw;
  return make_margin_classifier(std::move(centroids));
}

/// TRANSPOSE: W^T of the shared encoder. PSEUDOINVERSE: Moore-Penrose inverse
/// of the mean encoder (equal to pinv(W) when shared).
inline DecoderMatrix make_decoder(DecoderKind kind, std::span<const EncoderMatrix> encoders) {
  if (encoders.empty()) throw std::invalid_argument("make_decoder: no encoders");
  const EncoderMatrix& first = encoders.front();
  if (kind == DecoderKind::kTranspose) return first.transposed();
  if (first.is_identity()) {
    bool all_identity = true;
    for (const auto& e : encoders) all_identity = all_identity && e.is_identity();
    if (all_identity) return DecoderMatrix::identity(first.rows());
  }
  Matrix mean = Matrix::Zero(first.rows(), first.cols());
  for (const auto& e : encoders) mean += e.to_dense();
  mean /= static_cast<double>(encoders.size());
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(mean);
  return DecoderMatrix::dense(cod.pseudoInverse());
}

struct ServerOutput {
  Vector f_hat;
  int label = 0;
};

inline ServerOutput run_server(const Vector& y, double gamma, const DecoderMatrix& D,
                               const MarginClassifier& clf) {
  ServerOutput out;
  out.f_hat = decode(post_process(y, gamma), D);
  out.label = classify(out.f_hat, clf);
  return out;
}

inline std::string centroids_csv(const MarginClassifier& clf) {
  std::string out;
  for (std::size_t c = 0; c < clf.centroids.size(); ++c) {
    out += std::to_string(c);
    for (double v : clf.centroids[c]) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

inline std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += fmt::format("{}", m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace otadp

#endif  // OTADP_SERVER_HPP
