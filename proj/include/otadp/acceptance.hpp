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

// Acceptance suite: one pass/fail verdict per criterion, with measured
// values. Tolerances, sample sizes and runtime limits are pinned below.

#ifndef OTADP_ACCEPTANCE_HPP
#define OTADP_ACCEPTANCE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "otadp/analysis.hpp"
#include "otadp/config.hpp"
#include "otadp/config_io.hpp"
#include "otadp/harness.hpp"
#include "otadp/numeric.hpp"
#include "otadp/privacy.hpp"
#include "otadp/scenario.hpp"
#include "otadp/seed.hpp"
#include "otadp/testing/reference.hpp"

namespace otadp {

namespace pinned {
inline constexpr double kTranscriptionRelTol = 1e-9;
inline constexpr int kCertificateConfigs = 50;
inline constexpr int kCertificateMaxDevices = 12;
inline constexpr int kMonotoneGridPoints = 20;
inline constexpr double kMonotoneOperatingEps = 1.0;
inline constexpr std::size_t kUnbiasTrials = 100'000;
inline constexpr double kUnbiasSigmas = 5.0;
inline constexpr std::size_t kClosedFormTrials = 10'000;
inline constexpr double kClosedFormSigmas = 4.0;
inline constexpr double kDominanceSigmas = 4.0;
inline constexpr double kTrendSigmas = 2.0;
inline constexpr std::size_t kTrendHighPrivacyPoints = 4;
inline constexpr double kChanceNoiseScale = 1e4;
inline constexpr std::size_t kChanceTargets = 100;
inline constexpr std::size_t kChanceTrialsPerTarget = 100;
inline constexpr double kChanceSigmas = 4.0;
inline constexpr std::size_t kReportTargets = 10;
inline constexpr std::size_t kReportTrialsPerTarget = 100;
}  // namespace pinned

struct CriterionInfo {
  int id;
  const char* name;
  double limit_seconds;
};

inline const std::vector<CriterionInfo>& acceptance_criteria() {
  static const std::vector<CriterionInfo> list = {
      {1, "privacy transcription oracle", 1.0},
      {2, "concentration certificate", 60.0},
      {3, "privacy amplification monotonicity", 1.0},
      {4, "unbiased over-the-air aggregation", 120.0},
      {5, "closed-form MSE oracle", 10.0},
      {6, "MSE bound dominance", 300.0},
      {7, "accuracy lower-bound consistency", 300.0},
      {8, "customized vs uniform privacy trend", 600.0},
      {9, "chance-level accuracy under heavy noise", 120.0},
      {10, "determinism of artifacts", 1200.0},
  };
  return list;
}

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

inline std::string format_result(const CriterionResult& r) {
  return fmt::format("[{}] C{} {}: {} ({:.2f} s, limit {} s)", r.passed ? "PASS" : "FAIL", r.id, r.name, r.detail,
                     r.seconds, r.limit_seconds);
}

using OffsetRule = std::function<double(const AccountantInput&)>;

struct AcceptanceOptions {
  std::uint64_t seed = preset_config().master_seed;
  std::filesystem::path out_dir = "acceptance_artifacts";
  OffsetRule offset_rule = concentration_offset;
  unsigned workers = 0;
  SweepSpec sweep;  // mode is overridden per sweep
};

class AcceptanceSuite {
 public:
  explicit AcceptanceSuite(AcceptanceOptions opt = {}) : opt_(std::move(opt)) {}

  CriterionResult run(int id) {
    const CriterionInfo* info = nullptr;
    for (const auto& c : acceptance_criteria()) {
      if (c.id == id) info = &c;
    }
    if (info == nullptr) throw std::invalid_argument(fmt::format("unknown criterion {}", id));
    CriterionResult r;
    r.id = id;
    r.name = info->name;
    r.limit_seconds = info->limit_seconds;
    const auto start = std::chrono::steady_clock::now();
    try {
      std::tie(r.passed, r.detail) = dispatch(id);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > r.limit_seconds) {
      r.passed = false;
      r.detail += fmt::format("; runtime {:.1f} s exceeds limit", r.seconds);
    }
    return r;
  }

  /// Base experiment config: the small preset under `seed`.
  SystemConfig base_config() const {
    SystemConfig cfg = preset_config(PresetDims::kSmall);
    cfg.master_seed = opt_.seed;
    return cfg;
  }

  const SweepResult& sweep(SweepMode mode) {
    auto it = sweeps_.find(mode);
    if (it != sweeps_.end()) return it->second;
    return sweeps_.emplace(mode, compute_sweep(mode, opt_.workers)).first->second;
  }

 private:
  using Verdict = std::pair<bool, std::string>;

  Verdict dispatch(int id) {
    switch (id) {
      case 1: return transcription();
      case 2: return certificate();
      case 3: return monotonicity();
      case 4: return unbiasedness();
      case 5: return closed_form_mse();
      case 6: return bound_dominance();
      case 7: return accuracy_bound_consistency();
      case 8: return customization_trend();
      case 9: return chance_level();
      case 10: return determinism();
      default: throw std::invalid_argument("unknown criterion");
    }
  }

  static std::vector<reference::Device> reference_devices(const AccountantInput& in) {
    std::vector<reference::Device> out;
    for (std::size_t k = 0; k < in.size(); ++k) out.push_back({in.p[k], in.w[k], in.clip[k], in.sigma_sq[k]});
    return out;
  }

  // Largest relative difference between library and reference outputs.
  static double privacy_discrepancy(const AccountantInput& in) {
    const PrivacyBudget lib = compute_budgets(in);
    const reference::PrivacyTerms ref = reference::privacy(reference_devices(in), in.gamma, in.delta, in.delta_prime);
    double worst = std::max(relative_difference(lib.mu_bar, static_cast<double>(ref.mu_bar)),
                            relative_difference(lib.t, static_cast<double>(ref.t)));
    for (std::size_t k = 0; k < in.size(); ++k) {
      worst = std::max(worst, relative_difference(lib.devices[k].c_k, static_cast<double>(ref.c[k])));
      worst = std::max(worst, relative_difference(lib.devices[k].eps, static_cast<double>(ref.eps[k])));
      worst = std::max(worst, relative_difference(lib.devices[k].delta_tilde, static_cast<double>(ref.delta_tilde[k])));
    }
    return worst;
  }

  Verdict transcription() {
    const AccountantInput defaults = accountant_input(preset_config());
    const double worst_default = privacy_discrepancy(defaults);
    const PrivacyBudget b = compute_budgets(defaults);
    // A second point where mu_bar > t so eps is finite.
    const AccountantInput valid = scale_noise(defaults, 5000.0);
    const double worst_valid = privacy_discrepancy(valid);
    const PrivacyBudget bv = compute_budgets(valid);
    const bool ok = worst_default <= pinned::kTranscriptionRelTol && worst_valid <= pinned::kTranscriptionRelTol;
    return {ok, fmt::format("defaults c_k={:.9g} mu_bar={:.9g} t={:.9g} eps_k={} delta~_k={:.9g} "
                            "(mu_bar-t={:.4g}); at sigma^2=500 eps_k={:.9g}; max rel diff {:.2e}/{:.2e} (tol {:.0e})",
                            b.devices[0].c_k, b.mu_bar, b.t, b.devices[0].eps, b.devices[0].delta_tilde,
                            b.mu_bar - b.t, bv.devices[0].eps, worst_default, worst_valid,
                            pinned::kTranscriptionRelTol)};
  }

  Verdict certificate() {
    double worst = 0.0;
    double worst_oracle_gap = 0.0;
    int violations = 0;
    std::string first_violation;
    for (int i = 0; i < pinned::kCertificateConfigs; ++i) {
      Rng rng = make_rng(opt_.seed, static_cast<std::uint64_t>(i), Stream::kMonteCarlo, 2);
      std::uniform_int_distribution<int> k_pick(1, pinned::kCertificateMaxDevices);
      std::uniform_real_distribution<double> p_pick(0.1, 1.0);
      std::uniform_real_distribution<double> s_pick(0.01, 1.0);
      AccountantInput in;
      const int k_devices = k_pick(rng);
      for (int k = 0; k < k_devices; ++k) {
        in.p.push_back(p_pick(rng));
        in.sigma_sq.push_back(s_pick(rng));
        in.w.push_back(1.0 / k_devices);
        in.clip.push_back(100.0);
      }
      in.delta = 1e-5;
      in.delta_prime = 1e-5;
      const double t = opt_.offset_rule(in);
      const double prob = concentration_exact(in, t);
      const double oracle = static_cast<double>(reference::concentration(reference_devices(in), t));
      worst_oracle_gap = std::max(worst_oracle_gap, std::abs(prob - oracle));
      worst = std::max(worst, prob);
      if (prob > in.delta_prime) {
        if (violations++ == 0) first_violation = fmt::format("; first violation config {} (K={}, t={:.4g}, Pr={:.3e})", i, k_devices, t, prob);
      }
    }
    const bool ok = violations == 0 && worst_oracle_gap <= 1e-12;
    return {ok, fmt::format("{} configs, max Pr(|mu-mu_bar|>=t)={:.3e} vs delta'=1e-5, {} violations, "
                            "enumeration vs brute-force gap {:.1e}{}",
                            pinned::kCertificateConfigs, worst, violations, worst_oracle_gap, first_violation)};
  }

  Verdict monotonicity() {
    const AccountantInput base = accountant_input(preset_config());
    const std::size_t all[] = {0};
    const Calibration cal = calibrate_noise_scale(base, all, pinned::kMonotoneOperatingEps);
    if (!cal.ok) return {false, "cannot calibrate operating point: " + cal.reason};
    const AccountantInput op = scale_noise(base, cal.scale);
    const double mean = mu_bar(op);
    const double t = concentration_offset(op);
    const double c0 = sensitivity_constant(0, op);

    int p_violations = 0;
    double prev = -1.0;
    double eps_lo = 0, eps_hi = 0;
    for (int i = 1; i <= pinned::kMonotoneGridPoints; ++i) {
      const double p = static_cast<double>(i) / pinned::kMonotoneGridPoints;
      const double e = amplified_epsilon(p, c0, mean, t, op.delta_prime);
      if (i == 1) eps_lo = e;
      eps_hi = e;
      if (!(e > prev)) ++p_violations;
      prev = e;
    }
    int s_violations = 0;
    prev = kInf;
    double s_first = 0, s_last = 0;
    for (int i = 0; i < pinned::kMonotoneGridPoints; ++i) {
      const AccountantInput scaled = scale_noise(op, std::pow(2.0, 0.5 * i));
      const double e = compute_budgets(scaled).devices[0].eps;
      if (i == 0) s_first = e;
      s_last = e;
      if (!(e < prev) || !std::isfinite(e)) ++s_violations;
      prev = e;
    }
    const bool ok = p_violations == 0 && s_violations == 0;
    return {ok, fmt::format("operating point sigma^2={:.4g} (eps=1); eps over p=0.05..1: {:.4g}..{:.4g}, "
                            "{} violations; eps over sigma^2 x1..x{:.0f}: {:.4g}..{:.4g}, {} violations",
                            op.sigma_sq[0], eps_lo, eps_hi, p_violations,
                            std::pow(2.0, 0.5 * (pinned::kMonotoneGridPoints - 1)), s_first, s_last,
                            s_violations)};
  }

  Verdict unbiasedness() {
    SystemConfig cfg = base_config();
    cfg.sigma_sq_m = 0.0;
    const Scenario sc(cfg);
    const PreparedTarget pt = prepare_target(sc, make_target(sc, 0));
    const MomentEstimate est = z_hat_moments(sc, pt, pinned::kUnbiasTrials, opt_.workers);
    Vector claimed = Vector::Zero(cfg.reduced_dim);
    Vector sampled = Vector::Zero(cfg.reduced_dim);
    for (std::size_t k = 0; k < cfg.devices.size(); ++k) {
      claimed += cfg.devices[k].w * pt.codes[k].values;
      sampled += cfg.devices[k].p * cfg.devices[k].w * pt.codes[k].values;
    }
    auto z_scores = [&](const Vector& ref) {
      return ((est.mean - ref).array().abs() / est.std_error.array()).matrix();
    };
    const Vector z_claimed = z_scores(claimed);
    const Vector z_sampled = z_scores(sampled);
    const auto outside = [](const Vector& z) { return (z.array() > pinned::kUnbiasSigmas).count(); };
    const auto bad = outside(z_claimed);
    return {bad == 0,
            fmt::format("{} trials, {} of {} coordinates beyond {} s.e. of sum_k w_k z_k (max |z|={:.1f}); "
                        "against sum_k p_k w_k z_k: {} beyond (max |z|={:.2f})",
                        est.n, bad, z_claimed.size(), pinned::kUnbiasSigmas, z_claimed.maxCoeff(),
                        outside(z_sampled), z_sampled.maxCoeff())};
  }

  Verdict closed_form_mse() {
    SystemConfig cfg;
    cfg.k_devices = 1;
    cfg.feature_dim = 10;
    cfg.reduced_dim = 10;
    cfg.encoder = EncoderKind::kIdentity;
    cfg.decoder = DecoderKind::kTranspose;
    cfg.sigma_sq_m = 0.0;
    cfg.classifier = {2, 5.0, 0.05};
    cfg.master_seed = opt_.seed;
    cfg.devices = {{.index = 0, .p = 1.0, .w = 1.0, .clip = 100.0, .sigma_sq = 0.1, .power_watts = 1.0}};
    const Scenario sc(cfg);
    const BatchResult batch = run_batch(sc, {10, pinned::kClosedFormTrials / 10, false, opt_.workers});
    const Estimate mse = empirical_mse(batch);
    const double expected = cfg.feature_dim * 0.1;
    const double z = std::abs(mse.mean - expected) / mse.std_error;
    return {z <= pinned::kClosedFormSigmas,
            fmt::format("empirical MSE {:.5f} +/- {:.5f} vs d*sigma^2 = {} ({:.2f} s.e., limit {})", mse.mean,
                        mse.std_error, expected, z, pinned::kClosedFormSigmas)};
  }

  Verdict bound_dominance() {
    const SweepResult& s = sweep(SweepMode::kUniform);
    int violations = 0;
    double min_ratio = kInf;
    double min_cross = kInf;
    std::string log;
    for (const auto& r : s.rows) {
      if (!r.ok) {
        ++violations;
        log += fmt::format("; eps={} not calibrated ({})", r.eps_target, r.note);
        continue;
      }
      min_ratio = std::min(min_ratio, r.bound.total / r.mse.mean);
      min_cross = std::min(min_cross, r.bound.cross_term);
      if (r.mse.mean > r.bound.total + pinned::kDominanceSigmas * r.mse.std_error) {
        ++violations;
        log += fmt::format("; eps={} mse={:.4g} > bound={:.4g} (noise {:.4g}, weighting {:.4g}, cross {:.4g})",
                           r.eps_target, r.mse.mean, r.bound.total, r.bound.noise_term, r.bound.weighting_term,
                           r.bound.cross_term);
      }
    }
    return {violations == 0, fmt::format("{} points, {} violations, min bound/empirical ratio {:.3g}, "
                                         "min cross term {:.4g}{}",
                                         s.rows.size(), violations, min_ratio, min_cross, log)};
  }

  Verdict accuracy_bound_consistency() {
    const SweepResult& s = sweep(SweepMode::kUniform);
    int violations = 0;
    double max_bound = 0.0;
    std::string log;
    for (const auto& r : s.rows) {
      if (!r.ok) {
        ++violations;
        continue;
      }
      max_bound = std::max(max_bound, r.acc_lower_bound);
      if (r.acc.mean + pinned::kDominanceSigmas * r.acc.std_error < r.acc_lower_bound) {
        ++violations;
        log += fmt::format("; eps={} acc={:.4f} < bound {:.4f}", r.eps_target, r.acc.mean, r.acc_lower_bound);
      }
    }
    const double p0 = s.rows.empty() ? kNaN : s.rows.front().p0;
    return {violations == 0, fmt::format("P0={:.4f}, margin={:.4g}, {} points, {} violations, largest lower "
                                         "bound {:.4f}{}",
                                         p0, s.margin, s.rows.size(), violations, max_bound, log)};
  }

  Verdict customization_trend() {
    const SweepResult& uni = sweep(SweepMode::kUniform);
    const SweepResult& wgt = sweep(SweepMode::kWeightCustomized);
    const SweepResult& clp = sweep(SweepMode::kClipCustomized);
    const std::size_t n = uni.rows.size();
    int violations = 0;
    std::string acc_line;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& u = uni.rows[i];
      const auto& w = wgt.rows[i];
      const auto& c = clp.rows[i];
      acc_line += fmt::format(" eps={}:{:.3f}/{:.3f}/{:.3f}", u.eps_target, u.acc.mean, w.acc.mean, c.acc.mean);
      if (i < pinned::kTrendHighPrivacyPoints) {
        const double floor = u.acc.mean - pinned::kTrendSigmas * u.acc.std_error;
        if (!(w.ok && c.ok && u.ok) || w.acc.mean < floor || c.acc.mean < floor) ++violations;
      }
    }
    const auto& u = uni.rows.back();
    const auto& w = wgt.rows.back();
    const auto& c = clp.rows.back();
    auto close = [](const SweepRow& a, const SweepRow& b) {
      return std::abs(a.acc.mean - b.acc.mean) <=
             pinned::kTrendSigmas * std::sqrt(a.acc.std_error * a.acc.std_error + b.acc.std_error * b.acc.std_error);
    };
    const bool converged = close(u, w) && close(u, c) && close(w, c);
    return {violations == 0 && converged,
            fmt::format("accuracy uniform/weight/clip:{}; high-privacy violations {}; converged at eps={}: {}",
                        acc_line, violations, u.eps_target, converged ? "yes" : "no")};
  }

  Verdict chance_level() {
    SystemConfig cfg = base_config();
    for (auto& d : cfg.devices) d.sigma_sq *= pinned::kChanceNoiseScale;
    const Scenario sc(cfg);
    const BatchResult batch = run_batch(sc, {pinned::kChanceTargets, pinned::kChanceTrialsPerTarget, false, opt_.workers});
    const Estimate acc = empirical_accuracy(batch, cfg.classifier.num_classes).overall;
    const double chance = 1.0 / cfg.classifier.num_classes;
    const double z = std::abs(acc.mean - chance) / acc.std_error;
    return {z <= pinned::kChanceSigmas,
            fmt::format("sigma^2={} accuracy {:.4f} +/- {:.4f} vs 1/{} ({:.2f} s.e., limit {})",
                        cfg.devices[0].sigma_sq, acc.mean, acc.std_error, cfg.classifier.num_classes, z,
                        pinned::kChanceSigmas)};
  }

  SweepResult compute_sweep(SweepMode mode, unsigned workers) const {
    SweepSpec spec = opt_.sweep;
    spec.mode = mode;
    spec.workers = workers;
    return run_sweep(Scenario(base_config()), spec);
  }

  std::map<std::string, std::string> artifacts(bool fresh, unsigned workers) {
    std::map<std::string, std::string> files;
    const SystemConfig cfg = base_config();
    const AccountantInput in = accountant_input(cfg);
    files["budgets.csv"] = budget_csv(in, compute_budgets(in));
    files["run.json"] =
        report_text(run_single(cfg, {pinned::kReportTargets, pinned::kReportTrialsPerTarget, workers}));
    for (SweepMode m : {SweepMode::kUniform, SweepMode::kWeightCustomized, SweepMode::kClipCustomized}) {
      files["sweep_" + to_string(m) + ".csv"] = sweep_csv(fresh ? compute_sweep(m, workers) : sweep(m));
    }
    return files;
  }

  static void write_all(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
      std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
      out << text;
    }
  }

  static std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Run A reuses the sweeps the other criteria judged; run B recomputes
  // everything on a different worker count.
  Verdict determinism() {
    const auto run_a = artifacts(false, opt_.workers);
    const auto run_b = artifacts(true, opt_.workers == 3 ? 2 : 3);
    write_all(opt_.out_dir / "run_a", run_a);
    write_all(opt_.out_dir / "run_b", run_b);
    std::vector<std::string> differing;
    for (const auto& [name, text] : run_a) {
      if (read_file(opt_.out_dir / "run_a" / name) != read_file(opt_.out_dir / "run_b" / name)) {
        differing.push_back(name);
      }
    }
    std::string names;
    for (const auto& [name, text] : run_a) names += (names.empty() ? "" : ", ") + name;
    return {differing.empty(), fmt::format("{} files compared ({}) under {}; {} differ{}", run_a.size(), names,
                                           opt_.out_dir.string(), differing.size(),
                                           differing.empty() ? "" : ": " + differing.front())};
  }

  AcceptanceOptions opt_;
  std::map<SweepMode, SweepResult> sweeps_;
};

}  // namespace otadp

#endif  // OTADP_ACCEPTANCE_HPP
