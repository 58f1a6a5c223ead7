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

#ifndef OTADP_NUMERIC_HPP
#define OTADP_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace otadp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Summation with O(log n) error growth. The reduction tree depends only on
/// the length of the input, so results are bit-reproducible.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Sample mean with its standard error (sample-variance estimator).
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  bool operator==(const Estimate&) const = default;
};

inline Estimate estimate_mean(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
  if (e.n < 2) return e;
  std::vector<double> sq(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    const double dev = samples[i] - e.mean;
    sq[i] = dev * dev;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
  e.std_error = std::sqrt(var / static_cast<double>(e.n));
  return e;
}

inline double relative_difference(double a, double b) {
  if (a == b) return 0.0;  // covers matching infinities
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) / scale;
}

/// A linear map that is either the identity or a dense matrix, optionally
/// applied transposed. Storage is shared and immutable, so copies are cheap.
class LinearMap {
 public:
  LinearMap() = default;

  static LinearMap identity(Eigen::Index dim) {
    LinearMap m;
    m.rows_ = dim;
    m.cols_ = dim;
    return m;
  }

  static LinearMap dense(Matrix matrix) {
    LinearMap m;
    m.rows_ = matrix.rows();
    m.cols_ = matrix.cols();
    m.matrix_ = std::make_shared<const Matrix>(std::move(matrix));
    return m;
  }

  LinearMap transposed() const {
    LinearMap m = *this;
    m.transposed_ = !transposed_;
    std::swap(m.rows_, m.cols_);
    return m;
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_identity() const { return matrix_ == nullptr; }

  Vector apply(const Vector& x) const {
    if (x.size() != cols_) {
      throw std::invalid_argument("dimension mismatch: map expects length " +
                                  std::to_string(cols_) + ", got " +
                                  std::to_string(x.size()));
    }
    if (is_identity()) return x;
    if (transposed_) return matrix_->transpose() * x;
    return (*matrix_) * x;
  }

  double frobenius_sq() const {
    if (is_identity()) return static_cast<double>(rows_);
    return matrix_->squaredNorm();
  }

  Matrix to_dense() const {
    if (is_identity()) return Matrix::Identity(rows_, cols_);
    if (transposed_) return matrix_->transpose();
    return *matrix_;
  }

 private:
  std::shared_ptr<const Matrix> matrix_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  bool transposed_ = false;
};

inline unsigned default_worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// evaluated exactly once; callers write results into per-index slots, so the
/// outcome does not depend on scheduling. The lowest-index exception wins.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = 0) {
  if (workers == 0) workers = default_worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          error_index[w] = i;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t first = n;
  std::exception_ptr err;
  for (unsigned w = 0; w < workers; ++w) {
    if (errors[w] && error_index[w] < first) {
      first = error_index[w];
      err = errors[w];
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace otadp

#endif  // OTADP_NUMERIC_HPP
