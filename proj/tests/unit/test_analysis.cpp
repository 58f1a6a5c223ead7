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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "otadp/analysis.hpp"
#include "otadp/privacy.hpp"
#include "otadp/testing/reference.hpp"

namespace otadp {
namespace {

SystemConfig single_device(double sigma_sq, int d = 10) {
  SystemConfig cfg;
  cfg.k_devices = 1;
  cfg.feature_dim = d;
  cfg.reduced_dim = d;
  cfg.encoder = EncoderKind::kIdentity;
  cfg.sigma_sq_m = 0.0;
  cfg.classifier = {2, 5.0, 0.05};
  cfg.master_seed = 21;
  cfg.devices = {{0, 1.0, 1.0, 100.0, sigma_sq, 1.0}};
  return cfg;
}

// Preset config at a dimension the dense reference can handle.
SystemConfig small_preset(int d) {
  SystemConfig cfg = preset_config();
  cfg.feature_dim = d;
  cfg.reduced_dim = d;
  cfg.classifier.num_classes = 8;
  cfg.classifier.view_std = 0.3;
  return cfg;
}

reference::Dense to_ref(const Matrix& m) {
  reference::Dense out(m.rows(), std::vector<long double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

TEST(MseBound, VanishesWithoutNoiseOrWeighting) {
  SystemConfig cfg = small_preset(16);
  for (auto& d : cfg.devices) d = {d.index, 1.0, 1.0, d.clip, 0.0, 1.0};
  cfg.sigma_sq_m = 0.0;
  const Scenario sc(cfg);
  const auto pt = prepare_target(sc, make_target(sc, 0));
  const MseBreakdown b = mse_bound_sigma_form(bound_geometry(sc, pt), cfg.devices, 0.0, 1.0);
  EXPECT_EQ(b.noise_term, 0.0);
  EXPECT_EQ(b.weighting_term, 0.0);
  EXPECT_EQ(b.cross_term, 0.0);
  EXPECT_EQ(b.total, 0.0);
}

TEST(MseBound, SingleIdentityDeviceIsDSigma) {
  const SystemConfig cfg = single_device(0.1);
  const Scenario sc(cfg);
  const auto pt = prepare_target(sc, make_target(sc, 0));
  const MseBreakdown b = mse_bound_sigma_form(bound_geometry(sc, pt), cfg.devices, 0.0, 1.0);
  // d ||I||_F^2 sigma^2 = 10 * 10 * 0.1.
  EXPECT_NEAR(b.noise_term, 10.0, 1e-12);
  EXPECT_EQ(b.weighting_term, 0.0);
  EXPECT_NEAR(b.total, 10.0, 1e-12);
}

TEST(MseBound, MatchesTermByTermReference) {
  Rng rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    SystemConfig cfg = small_preset(24);
    cfg.reduced_dim = 12;
    cfg.encoder = rep % 2 == 0 ? EncoderKind::kSharedOrthonormal : EncoderKind::kPerDeviceOrthonormal;
    cfg.decoder = DecoderKind::kPseudoinverse;
    for (auto& d : cfg.devices) {
      d.p = u(rng);
      d.w = 2 * u(rng);
      d.sigma_sq = u(rng);
    }
    cfg.master_seed = rep;
    const Scenario sc(cfg);
    const auto pt = prepare_target(sc, make_target(sc, 3));
    const MseBreakdown lib = mse_bound_sigma_form(bound_geometry(sc, pt), cfg.devices, cfg.sigma_sq_m, cfg.gamma);

    std::vector<reference::Dense> encs;
    std::vector<std::vector<long double>> feats;
    std::vector<reference::Device> devs;
    for (std::size_t k = 0; k < cfg.devices.size(); ++k) {
      encs.push_back(to_ref(sc.encoders()[k].to_dense()));
      feats.emplace_back(pt.features[k].begin(), pt.features[k].end());
      devs.push_back({cfg.devices[k].p, cfg.devices[k].w, cfg.devices[k].clip, cfg.devices[k].sigma_sq});
    }
    const auto ref = reference::mse_bound(to_ref(sc.decoder().to_dense()), encs, feats, devs, cfg.sigma_sq_m, cfg.gamma);
    EXPECT_LE(relative_difference(lib.noise_term, static_cast<double>(ref.noise)), 1e-9);
    EXPECT_LE(relative_difference(lib.weighting_term, static_cast<double>(ref.weighting)), 1e-9);
    EXPECT_LE(relative_difference(lib.cross_term, static_cast<double>(ref.cross)), 1e-9);
    EXPECT_LE(relative_difference(lib.total, static_cast<double>(ref.total)), 1e-9);
    EXPECT_NEAR(lib.total, lib.noise_term + lib.weighting_term + lib.cross_term, 1e-12 * std::abs(lib.total));
  }
}

TEST(MseBound, EpsFormEqualsSigmaFormAfterSubstitution) {
  Rng rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SystemConfig base = small_preset(16);
  const Scenario sc(base);
  const auto pt = prepare_target(sc, make_target(sc, 1));
  const BoundGeometry g = bound_geometry(sc, pt);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<DeviceProfile> devs = base.devices;
    std::vector<double> eps, delta;
    for (auto& d : devs) {
      eps.push_back(0.1 + 10 * u(rng));
      delta.push_back(1e-8 + 0.5 * u(rng));
      d.w = u(rng);
      d.sigma_sq = gaussian_sigma_sq(d.w, d.clip, eps.back(), delta.back());
    }
    const MseBreakdown a = mse_bound_sigma_form(g, devs, 0.1, 1.0);
    const MseBreakdown b = mse_bound_eps_form(g, devs, eps, delta, 0.1, 1.0);
    EXPECT_LE(relative_difference(a.total, b.total), 1e-12);
    EXPECT_LE(relative_difference(a.noise_term, b.noise_term), 1e-12);
  }
}

TEST(MseBound, EpsFormNoiseVanishesAsEpsGrows) {
  const SystemConfig cfg = single_device(0.0);
  const Scenario sc(cfg);
  const auto g = bound_geometry(sc, prepare_target(sc, make_target(sc, 0)));
  const double delta[] = {1e-5};
  double prev = kInf;
  for (double e : {1.0, 10.0, 1e3, 1e6}) {
    const double eps[] = {e};
    const double noise = mse_bound_eps_form(g, cfg.devices, eps, delta, 0.0, 1.0).noise_term;
    EXPECT_LT(noise, prev);
    prev = noise;
  }
  EXPECT_LT(prev, 1e-3);
  const double zero[] = {0.0};
  EXPECT_THROW(mse_bound_eps_form(g, cfg.devices, zero, delta, 0.0, 1.0), std::invalid_argument);
}

// The cross term is signed. With p = 1 its coefficient is
// (w_k - 1)(w_j - 1), so alternating w in {0, 2} makes every mixed pair
// negative and the sum over correlated features negative.
TEST(MseBound, CrossTermCanBeNegative) {
  SystemConfig cfg = small_preset(16);
  for (auto& d : cfg.devices) {
    d.p = 1.0;
    d.w = d.index % 2 == 0 ? 2.0 : 0.0;
  }
  const Scenario sc(cfg);
  const auto pt = prepare_target(sc, make_target(sc, 0));
  const MseBreakdown b = mse_bound_sigma_form(bound_geometry(sc, pt), cfg.devices, cfg.sigma_sq_m, cfg.gamma);
  EXPECT_LT(b.cross_term, 0.0);
}

TEST(AccuracyBound, Examples) {
  EXPECT_DOUBLE_EQ(accuracy_lower_bound(0.8, 0.0, 2.0).bound, 0.8);
  EXPECT_DOUBLE_EQ(accuracy_lower_bound(0.8, 2.0, 2.0).bound, 0.0);
  EXPECT_NEAR(accuracy_lower_bound(0.8, 1.0, 2.0).bound, 0.6, 1e-15);
  EXPECT_THROW(accuracy_lower_bound(0.8, 1.0, 0.0), std::invalid_argument);
}

TEST(AccuracyBound, AlwaysClampedToUnitP0) {
  Rng rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double p0 = u(rng), mse = 10 * u(rng), margin = 0.01 + 5 * u(rng);
    const AccuracyBound a = accuracy_lower_bound(p0, mse, margin);
    EXPECT_GE(a.bound, 0.0);
    EXPECT_LE(a.bound, p0);
    EXPECT_NEAR(a.bound, std::max(0.0, p0 * (1 - (mse / margin) * (mse / margin))), 1e-12);
  }
}

TEST(EmpiricalMse, ClosedFormSingleDevice) {
  const Scenario sc(single_device(0.1));
  const BatchResult batch = run_batch(sc, {10, 1000});
  const Estimate mse = empirical_mse(batch);
  EXPECT_LE(std::abs(mse.mean - 1.0), 4 * mse.std_error);
}

TEST(EmpiricalMse, NoiselessPipelineIsExact) {
  SystemConfig cfg = noiseless_config(small_preset(32));
  for (auto& d : cfg.devices) d.w = 1.0 / cfg.k_devices;
  const Scenario sc(cfg);
  const BatchResult batch = run_batch(sc, {5, 4});
  const Estimate mse = empirical_mse(batch);
  EXPECT_LT(mse.mean, 1e-20);
  EXPECT_EQ(empirical_accuracy(batch, cfg.classifier.num_classes).overall.mean, 1.0);
}

TEST(EmpiricalMse, DeterministicGivenSeed) {
  const Scenario sc(small_preset(32));
  const auto a = run_batch(sc, {4, 25});
  const auto b = run_batch(sc, {4, 25, false, 3});
  EXPECT_EQ(a.sq_err, b.sq_err);
  EXPECT_EQ(a.correct, b.correct);
}

TEST(EmpiricalAccuracy, PerClassRates) {
  BatchResult batch;
  batch.correct = {1, 0, 1, 1};
  batch.true_label = {0, 0, 2, 2};
  batch.sq_err = {0, 0, 0, 0};
  const AccuracyEstimate a = empirical_accuracy(batch, 3);
  EXPECT_DOUBLE_EQ(a.overall.mean, 0.75);
  EXPECT_DOUBLE_EQ(a.per_class_rate[0], 0.5);
  EXPECT_TRUE(std::isnan(a.per_class_rate[1]));
  EXPECT_DOUBLE_EQ(a.per_class_rate[2], 1.0);
  EXPECT_EQ(a.per_class_count, (std::vector<std::size_t>{2, 0, 2}));
}

TEST(P0, SeparableTargetsGiveOne) {
  const Scenario sc(preset_config());
  EXPECT_EQ(estimate_p0(sc, 30).mean, 1.0);
  EXPECT_EQ(estimate_p0(sc, 30).mean, estimate_p0(sc, 30).mean);
}

TEST(P0, MatchesDirectClassificationOfPooledFeature) {
  SystemConfig cfg = small_preset(16);
  cfg.classifier = {8, 0.5, 2.5};  // views cross decision boundaries
  const Scenario sc(cfg);
  const std::size_t targets = 200;
  double direct = 0.0;
  for (std::size_t i = 0; i < targets; ++i) {
    const auto pt = prepare_target(sc, make_target(sc, i));
    direct += classify(pt.f_star, sc.classifier()) == pt.target.class_label ? 1.0 : 0.0;
  }
  direct /= targets;
  const double p0 = estimate_p0(sc, targets).mean;
  EXPECT_LT(p0, 1.0);
  EXPECT_DOUBLE_EQ(p0, direct);
}

}  // namespace
}  // namespace otadp
