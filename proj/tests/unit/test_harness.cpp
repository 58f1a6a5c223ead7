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
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "otadp/harness.hpp"

namespace otadp {
namespace {

SystemConfig compact() {
  SystemConfig cfg = preset_config();
  cfg.feature_dim = 32;
  cfg.reduced_dim = 32;
  cfg.classifier.num_classes = 8;
  return cfg;
}

SweepSpec tiny(SweepMode mode, std::vector<double> grid = {4.0, 256.0}) {
  SweepSpec s;
  s.mode = mode;
  s.eps_grid = std::move(grid);
  s.trials_per_point = 200;
  s.targets_per_point = 10;
  return s;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Modes, UniformWeights) {
  const SystemConfig cfg = apply_mode(preset_config(), tiny(SweepMode::kUniform));
  for (const auto& d : cfg.devices) {
    EXPECT_DOUBLE_EQ(d.w, 1.0 / 12);
    EXPECT_EQ(d.clip, 100.0);
  }
}

TEST(Modes, WeightCustomizedDownWeightsHalf) {
  const SystemConfig cfg = apply_mode(preset_config(), tiny(SweepMode::kWeightCustomized));
  int lowered = 0;
  double total = 0.0;
  for (const auto& d : cfg.devices) {
    total += d.w;
    if (d.w < 1.0 / 12) ++lowered;
  }
  EXPECT_EQ(lowered, 6);
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(cfg.devices[0].w, 0.5 / 12);
}

TEST(Modes, ClipCustomizedShrinksSensitiveClip) {
  const SystemConfig cfg = apply_mode(preset_config(), tiny(SweepMode::kClipCustomized));
  for (const auto& d : cfg.devices) EXPECT_EQ(d.clip, d.index < 6 ? 50.0 : 100.0);
}

TEST(Modes, AccountedDevicesFallBackToAll) {
  EXPECT_EQ(accounted_devices(12, 0.5).size(), 6u);
  EXPECT_EQ(accounted_devices(12, 0.0).size(), 12u);
}

TEST(Spec, RejectsBadGrids) {
  SweepSpec s = tiny(SweepMode::kUniform, {1.0, 1.0});
  EXPECT_THROW(check_sweep_spec(s), std::invalid_argument);
  s = tiny(SweepMode::kUniform, {2.0, 1.0});
  EXPECT_THROW(check_sweep_spec(s), std::invalid_argument);
  s = tiny(SweepMode::kUniform);
  s.trials_per_point = 99;
  EXPECT_THROW(check_sweep_spec(s), std::invalid_argument);
  s = tiny(SweepMode::kUniform);
  s.trials_per_point = 205;
  EXPECT_THROW(check_sweep_spec(s), std::invalid_argument);
  EXPECT_EQ(parse_sweep_mode("clip"), SweepMode::kClipCustomized);
  EXPECT_THROW(parse_sweep_mode("loud"), std::invalid_argument);
}

TEST(SweepCsv, HeaderMatchesGoldenFile) {
  std::ifstream golden(std::string(OTADP_GOLDEN_DIR) + "/sweep_columns.csv");
  ASSERT_TRUE(golden);
  std::string expected;
  std::getline(golden, expected);
  const auto out = lines(sweep_csv(run_sweep(Scenario(compact()), tiny(SweepMode::kUniform, {16.0}))));
  ASSERT_EQ(out.size(), 5u);  // three comment lines, header, one row
  EXPECT_EQ(out[3], expected);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out[i][0], '#');
  EXPECT_NE(out[0].find("mode=uniform"), std::string::npos);
  EXPECT_NE(out[0].find("config_hash="), std::string::npos);
  const auto columns = std::count(expected.begin(), expected.end(), ',');
  EXPECT_EQ(std::count(out[4].begin(), out[4].end(), ','), columns);
}

TEST(Sweep, RowsCalibratedAndFilled) {
  const Scenario sc(compact());
  for (SweepMode m : {SweepMode::kUniform, SweepMode::kWeightCustomized, SweepMode::kClipCustomized}) {
    const SweepResult r = run_sweep(sc, tiny(m));
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) {
      EXPECT_TRUE(row.ok);
      EXPECT_LE(relative_difference(row.eps_actual, row.eps_target), 1e-6);
      EXPECT_EQ(row.trials, 200u);
      EXPECT_NEAR(row.bound.total, row.bound.noise_term + row.bound.weighting_term + row.bound.cross_term,
                  1e-12 * row.bound.total);
      EXPECT_GE(row.acc_lower_bound, 0.0);
      EXPECT_LE(row.acc_lower_bound, row.p0);
    }
    EXPECT_GT(r.rows[0].sigma_sq, r.rows[1].sigma_sq);
  }
}

TEST(Sweep, UnreachableTargetEmitsNanRowAndContinues) {
  SystemConfig cfg = compact();
  cfg.delta_prime = 1.0;  // every budget is vacuous
  const SweepResult r = run_sweep(Scenario(cfg), tiny(SweepMode::kUniform, {1.0, 2.0}));
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].ok);
  EXPECT_FALSE(r.rows[0].note.empty());
  const auto out = lines(sweep_csv(r));
  EXPECT_EQ(out[4].substr(0, 8), "1,nan,na");
}

TEST(Sweep, RerunIsByteIdentical) {
  const Scenario sc(compact());
  SweepSpec a = tiny(SweepMode::kWeightCustomized);
  SweepSpec b = a;
  b.workers = 3;
  EXPECT_EQ(sweep_csv(run_sweep(sc, a)), sweep_csv(run_sweep(sc, b)));
}

TEST(Single, ReportIsCompleteAndDeterministic) {
  const SystemConfig cfg = compact();
  const SingleRunOptions opt{4, 25, 0};
  const auto report = run_single(cfg, opt);
  EXPECT_EQ(report["privacy"]["devices"].size(), 12u);
  EXPECT_EQ(report["power_audit"].size(), 12u);
  EXPECT_TRUE(report["privacy"]["devices"][0]["eps"].is_null());  // defaults: mu_bar < t
  EXPECT_TRUE(report["privacy"]["certificate"]["certified"].get<bool>());
  EXPECT_EQ(report["trials"], 100);
  EXPECT_EQ(report_text(report), report_text(run_single(cfg, {4, 25, 2})));
}

TEST(Single, NoiselessReport) {
  SystemConfig cfg = compact();
  cfg.sigma_sq_m = 0.0;
  for (auto& d : cfg.devices) d.sigma_sq = 0.0, d.p = 1.0;
  const auto report = run_single(cfg, {5, 2, 0});
  EXPECT_LT(report["mse"]["empirical"]["mean"].get<double>(), 1e-20);
  EXPECT_EQ(report["accuracy"]["empirical"]["mean"].get<double>(), 1.0);
  EXPECT_FALSE(report["privacy"]["devices"][3]["valid"].get<bool>());
}

TEST(Single, FailuresNameTheStage) {
  SystemConfig cfg = compact();
  cfg.channel.kind = FadingKind::kConstant;
  cfg.channel.h_floor = 10.0;
  try {
    run_single(cfg, {1, 1, 0});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "simulation");
  }
  cfg = compact();
  cfg.devices[0].p = 7.0;
  try {
    run_single(cfg, {1, 1, 0});
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
}

}  // namespace
}  // namespace otadp
