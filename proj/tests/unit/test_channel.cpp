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
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "otadp/channel.hpp"

namespace otadp {
namespace {

std::vector<DeviceProfile> profiles(std::vector<double> p) {
  std::vector<DeviceProfile> out;
  for (std::size_t k = 0; k < p.size(); ++k) out.push_back({static_cast<int>(k), p[k], 1.0, 1.0, 0.0, 1.0});
  return out;
}

TEST(Fading, ConstantKindIsDeterministic) {
  FadingModel m;
  m.kind = FadingKind::kConstant;
  Rng rng(1);
  EXPECT_EQ(draw_channel(m, 4, rng), std::vector<double>(4, 1.0));
  m.mean_power = 4.0;
  EXPECT_EQ(draw_channel(m, 2, rng), std::vector<double>(2, 2.0));
}

TEST(Fading, RicianSecondMoment) {
  FadingModel m;
  Rng rng(2);
  const auto h = draw_channel(m, 100'000, rng);
  double power = 0.0;
  for (double v : h) power += v * v;
  power /= static_cast<double>(h.size());
  EXPECT_NEAR(power, m.mean_power, 0.02 * m.mean_power);
  for (double v : h) EXPECT_GE(v, m.h_floor);
}

TEST(Fading, LargeKFactorConcentrates) {
  FadingModel m;
  m.k_factor = 1e6;
  Rng rng(3);
  const auto h = draw_channel(m, 10'000, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : h) mean += v;
  mean /= static_cast<double>(h.size());
  for (double v : h) sq += (v - mean) * (v - mean);
  EXPECT_LT(std::sqrt(sq / (h.size() - 1)), 0.01 * mean);
  m.k_factor = std::numeric_limits<double>::infinity();
  EXPECT_EQ(draw_channel(m, 3, rng), std::vector<double>(3, 1.0));
}

TEST(Fading, ExhaustedRedrawsNameTheDevice) {
  FadingModel m;
  m.kind = FadingKind::kConstant;
  m.h_floor = 2.0;
  Rng rng(4);
  try {
    draw_channel(m, 3, rng);
    FAIL() << "expected ChannelError";
  } catch (const ChannelError& e) {
    EXPECT_EQ(e.device(), 0);
  }
}

TEST(Align, Examples) {
  const double h1[] = {1.0};
  EXPECT_DOUBLE_EQ(align(h1, profiles({1.0}), 1.0)[0], 1.0);
  const double h2[] = {0.5};
  EXPECT_DOUBLE_EQ(align(h2, profiles({0.9}), 1.0)[0], 1.8);
  const double h3[] = {0.7};
  EXPECT_EQ(align(h3, profiles({0.0}), 1.0)[0], 0.0);
}

TEST(Align, IdentityHoldsForRandomChannels) {
  FadingModel m;
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> p(12);
    for (double& v : p) v = u(rng);
    const auto prof = profiles(p);
    const double gamma = 0.1 + 3 * u(rng);
    const auto h = draw_channel(m, 12, rng);
    const auto alpha = align(h, prof, gamma);
    for (std::size_t k = 0; k < h.size(); ++k) {
      EXPECT_NEAR(h[k] * alpha[k] / p[k], gamma, 1e-12 * gamma);
    }
  }
}

TEST(Participation, DegenerateProbabilities) {
  Rng rng(6);
  EXPECT_EQ(sample_participation(profiles({1, 1, 1}), rng).tau, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(sample_participation(profiles({0, 0, 0}), rng).tau, (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(Participation, RateMatchesProbability) {
  Rng rng(7);
  const auto prof = profiles(std::vector<double>(12, 0.9));
  std::vector<int> count(12, 0);
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_participation(prof, rng);
    for (int k = 0; k < 12; ++k) count[k] += d.tau[k];
  }
  for (int c : count) EXPECT_NEAR(static_cast<double>(c) / n, 0.9, 0.01);
}

TEST(Transmit, Examples) {
  const Vector z = (Vector(2) << 1.0, 0.0).finished();
  EXPECT_EQ(transmit_signal(z, 1.8, 0.9, false), Vector::Zero(2));
  EXPECT_EQ(transmit_signal(z, 1.0, 1.0, true), z);
  EXPECT_NEAR((transmit_signal(z, 1.8, 0.9, true) - Vector::Unit(2, 0) * 2.0).norm(), 0.0, 1e-15);
  EXPECT_THROW(transmit_signal(z, 1.0, 0.0, true), std::invalid_argument);
}

TEST(Superpose, NoiselessLinearity) {
  Rng rng(8);
  const std::vector<Vector> a = {standard_normal_vector(5, rng), standard_normal_vector(5, rng)};
  const std::vector<Vector> b = {standard_normal_vector(5, rng), standard_normal_vector(5, rng)};
  const std::vector<Vector> sum = {a[0] + b[0], a[1] + b[1]};
  const std::vector<double> h = {0.7, 1.3};
  const Vector ya = superpose(a, h, 0.0, rng);
  const Vector yb = superpose(b, h, 0.0, rng);
  EXPECT_LT((superpose(sum, h, 0.0, rng) - (ya + yb)).norm(), 1e-14);
  EXPECT_EQ(ya, 0.7 * a[0] + 1.3 * a[1]);
  const std::vector<Vector> single = {a[0]};
  const std::vector<double> unit = {1.0};
  EXPECT_EQ(superpose(single, unit, 0.0, rng), a[0]);
}

TEST(Superpose, ReceiverNoiseVariance) {
  Rng rng(9);
  const int n = 100'000;
  const std::vector<Vector> zero = {Vector::Zero(n)};
  const std::vector<double> h = {1.0};
  const Vector y = superpose(zero, h, 0.1, rng);
  const double var = (y.array() - y.mean()).square().sum() / (n - 1);
  EXPECT_NEAR(var, 0.1, 0.005);
}

TEST(PowerAudit, Examples) {
  const auto prof = profiles({0.5, 0.5});
  const auto zero = audit_power({{0.0, 0.0}, {0.0, 0.0}}, prof);
  EXPECT_EQ(zero[0].empirical_power_watts, 0.0);
  EXPECT_FALSE(zero[0].exceeded);
  const auto hot = audit_power({{2.0, 0.5}}, prof);
  EXPECT_TRUE(hot[0].exceeded);
  EXPECT_FALSE(hot[1].exceeded);
  EXPECT_EQ(power_audit_csv(hot), "device_index,empirical_power_watts,budget_watts,exceeded\n0,2,1,true\n1,0.5,1,false\n");
  EXPECT_THROW(audit_power({}, prof), std::invalid_argument);
}

}  // namespace
}  // namespace otadp
