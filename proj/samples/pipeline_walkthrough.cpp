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

// Walks one target through the pipeline: calibrate device noise to a
// privacy target, run a few over-the-air rounds, then compare the
// empirical error with the analytic bound.

#include <cstdio>
#include <vector>

#include <fmt/core.h>

#include "otadp/otadp.hpp"

int main() {
  using namespace otadp;

  SystemConfig cfg = preset_config(PresetDims::kSmall);
  const AccountantInput base = accountant_input(cfg);
  const PrivacyBudget defaults = compute_budgets(base);
  fmt::print("default noise: mu_bar={:.4g} t={:.4g} eps_0={}\n", defaults.mu_bar, defaults.t,
             defaults.devices[0].eps);

  const std::vector<std::size_t> all = accounted_devices(cfg.k_devices, 0.0);
  const Calibration cal = calibrate_noise_scale(base, all, 16.0);
  if (!cal.ok) {
    fmt::print(stderr, "calibration failed: {}\n", cal.reason);
    return 1;
  }
  for (auto& d : cfg.devices) d.sigma_sq *= cal.scale;
  fmt::print("calibrated: sigma_sq={:.4g} max eps={:.6g}\n", cfg.devices[0].sigma_sq, cal.eps);

  const Scenario sc(cfg);
  const PreparedTarget pt = prepare_target(sc, make_target(sc, 0));
  fmt::print("target class {} margin {:.4g}\n", pt.target.class_label, sc.classifier().margin_delta);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const TrialRecord rec = run_trial(sc, pt, i);
    int present = 0;
    for (auto t : rec.tau.tau) present += t;
    fmt::print("round {}: {} devices sent, sq_err={:.4g}, predicted {}\n", i, present, rec.sq_err,
               rec.predicted_label);
  }

  const BatchResult batch = run_batch(sc, {20, 50});
  const Estimate mse = empirical_mse(batch);
  const MseBreakdown bound = mse_bound_for_targets(sc, 20);
  fmt::print("mse empirical {:.4g} +- {:.2g}, bound {:.4g}\n", mse.mean, mse.std_error, bound.total);
  return 0;
}
