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

// otadp: validate configs, run single experiments and sweeps, and run the
// acceptance suite.
//
// Exit codes: 0 success, 1 validation error, 2 acceptance failure,
// 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "otadp/acceptance.hpp"
#include "otadp/otadp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kAcceptanceFailure = 2;
constexpr int kRuntimeError = 3;

struct ConfigFlags {
  std::string path;
  std::string preset = "small";
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.path, "JSON config file (default: built-in preset)");
  cmd->add_option("--preset", f.preset, "Built-in preset when --config is absent")
      ->check(CLI::IsMember({"small", "large"}));
  cmd->add_option("--seed", f.seed, "Override the master seed");
}

otadp::SystemConfig load(const ConfigFlags& f) {
  otadp::SystemConfig cfg = f.path.empty()
                                ? otadp::preset_config(f.preset == "large" ? otadp::PresetDims::kLarge
                                                                          : otadp::PresetDims::kSmall)
                                : otadp::load_config(f.path);
  if (f.seed) cfg.master_seed = *f.seed;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::size_t per_target(std::size_t trials, std::size_t targets) {
  return std::max<std::size_t>(1, (trials + targets - 1) / targets);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private over-the-air inference simulator"};
  app.require_subcommand(1);

  ConfigFlags validate_flags;
  auto* validate = app.add_subcommand("validate", "Check a config and list every violation");
  add_config_flags(validate, validate_flags);

  ConfigFlags run_flags;
  std::size_t run_trials = 10'000;
  std::size_t run_targets = 40;
  std::string run_out = "out";
  auto* run = app.add_subcommand("run", "Single experiment: budgets, MSE, accuracy, power audit");
  add_config_flags(run, run_flags);
  run->add_option("--trials", run_trials, "Total Monte-Carlo trials")->check(CLI::PositiveNumber);
  run->add_option("--targets", run_targets, "Distinct target objects")->check(CLI::PositiveNumber);
  run->add_option("--out", run_out, "Output directory");

  ConfigFlags sweep_flags;
  otadp::SweepSpec sweep_spec;
  std::string sweep_mode = "all";
  std::string sweep_out = "out";
  auto* sweep = app.add_subcommand("sweep", "Accuracy and MSE across a privacy grid");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--mode", sweep_mode, "Privacy profile")->check(CLI::IsMember({"uniform", "weight", "clip", "all"}));
  sweep->add_option("--trials", sweep_spec.trials_per_point, "Trials per grid point");
  sweep->add_option("--targets", sweep_spec.targets_per_point, "Targets per grid point");
  sweep->add_option("--grid", sweep_spec.eps_grid, "Target eps values, strictly increasing")->delimiter(',');
  sweep->add_option("--sensitive-fraction", sweep_spec.sensitive_fraction, "Fraction of sensitive devices");
  sweep->add_option("--rho", sweep_spec.rho, "Scale for sensitive w_k or C_k");
  sweep->add_flag("--empirical-accuracy-bound", sweep_spec.accuracy_bound_uses_empirical_mse,
                  "Feed the empirical MSE, not the analytic bound, to the accuracy bound");
  sweep->add_option("--out", sweep_out, "Output directory");

  otadp::AcceptanceOptions accept_opt;
  bool accept_list = false;
  std::vector<int> accept_only;
  std::string accept_out = "acceptance_artifacts";
  auto* accept = app.add_subcommand("accept", "Run the acceptance suite");
  accept->add_flag("--list", accept_list, "List criteria without running them");
  accept->add_option("--only", accept_only, "Run only these criterion ids")->delimiter(',');
  accept->add_option("--seed", accept_opt.seed, "Master seed");
  accept->add_option("--out", accept_out, "Directory for determinism artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const otadp::SystemConfig cfg = load(validate_flags);
      const auto result = otadp::validate_config(cfg);
      if (result.ok()) {
        fmt::print("valid: {} devices, d={}, r={}, config_hash={}\n", cfg.k_devices, cfg.feature_dim,
                   cfg.reduced_dim, otadp::config_hash(cfg));
        return kOk;
      }
      for (const auto& e : result.errors) fmt::print(stderr, "error: {}\n", e.to_string());
      return kValidationError;
    }

    if (*run) {
      const otadp::SystemConfig cfg = load(run_flags);
      otadp::require_valid(cfg);
      const otadp::SingleRunOptions opt{run_targets, per_target(run_trials, run_targets), 0};
      const auto report = otadp::run_single(cfg, opt);
      const std::filesystem::path out(run_out);
      write_file(out / "report.json", otadp::report_text(report));
      const auto input = otadp::accountant_input(cfg);
      write_file(out / "budgets.csv", otadp::budget_csv(input, otadp::compute_budgets(input)));
      fmt::print("mse empirical {} (bound {}), accuracy {} (P0 {}), report in {}\n",
                 report["mse"]["empirical"]["mean"].dump(), report["mse"]["bound"]["total"].dump(),
                 report["accuracy"]["empirical"]["mean"].dump(), report["accuracy"]["p0"].dump(),
                 (out / "report.json").string());
      return kOk;
    }

    if (*sweep) {
      const otadp::SystemConfig cfg = load(sweep_flags);
      otadp::require_valid(cfg);
      const otadp::Scenario sc(cfg);
      std::vector<otadp::SweepMode> modes;
      if (sweep_mode == "all") {
        modes = {otadp::SweepMode::kUniform, otadp::SweepMode::kWeightCustomized, otadp::SweepMode::kClipCustomized};
      } else {
        modes = {otadp::parse_sweep_mode(sweep_mode)};
      }
      for (auto mode : modes) {
        sweep_spec.mode = mode;
        const auto result = otadp::run_sweep(sc, sweep_spec);
        const auto path = std::filesystem::path(sweep_out) / ("sweep_" + otadp::to_string(mode) + ".csv");
        write_file(path, otadp::sweep_csv(result));
        fmt::print("{}: {} points -> {}\n", otadp::to_string(mode), result.rows.size(), path.string());
      }
      return kOk;
    }

    if (*accept) {
      if (accept_list) {
        for (const auto& c : otadp::acceptance_criteria()) {
          fmt::print("C{} {} (limit {} s)\n", c.id, c.name, c.limit_seconds);
        }
        return kOk;
      }
      accept_opt.out_dir = accept_out;
      otadp::AcceptanceSuite suite(accept_opt);
      bool all_passed = true;
      for (const auto& c : otadp::acceptance_criteria()) {
        if (!accept_only.empty() && std::find(accept_only.begin(), accept_only.end(), c.id) == accept_only.end()) {
          continue;
        }
        const auto r = suite.run(c.id);
        fmt::print("{}\n", otadp::format_result(r));
        std::fflush(stdout);
        all_passed = all_passed && r.passed;
      }
      return all_passed ? kOk : kAcceptanceFailure;
    }
  } catch (const otadp::InvalidConfig& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kValidationError;
  } catch (const otadp::ConfigParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}
