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

// End-to-end Monte-Carlo trials: targets, device pipeline, MAC and server.
//
// Randomness is keyed by (master_seed, trial, stream[, device]), so a trial's
// outcome never depends on which worker ran it or in what order.

#ifndef OTADP_SCENARIO_HPP
#define OTADP_SCENARIO_HPP

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "otadp/channel.hpp"
#include "otadp/config.hpp"
#include "otadp/device.hpp"
#include "otadp/numeric.hpp"
#include "otadp/seed.hpp"
#include "otadp/server.hpp"

namespace otadp {

/// A validated config with its encoders, decoder and classifier built once.
class Scenario {
 public:
  explicit Scenario(const SystemConfig& cfg) : cfg_(require_valid(cfg)) {
    encoders_ = make_encoders(cfg_);
    decoder_ = make_decoder(cfg_.decoder, encoders_);
    const bool shared_dense = cfg_.encoder == EncoderKind::kSharedOrthonormal;
    classifier_ = make_synthetic_classifier(cfg_.classifier, cfg_.feature_dim,
                                            derive_trial_seed(cfg_.master_seed, 0, Stream::kClassifier),
                                            shared_dense ? &encoders_.front() : nullptr);
  }

  /// Same encoders, decoder and classifier with new device profiles or noise
  /// levels. Everything those objects are built from must match.
  Scenario rebind(const SystemConfig& cfg) const {
    require_valid(cfg);
    if (cfg.k_devices != cfg_.k_devices || cfg.feature_dim != cfg_.feature_dim ||
        cfg.reduced_dim != cfg_.reduced_dim || cfg.encoder != cfg_.encoder || cfg.decoder != cfg_.decoder ||
        cfg.classifier != cfg_.classifier || cfg.master_seed != cfg_.master_seed) {
      throw std::invalid_argument("Scenario::rebind: structural fields differ");
    }
    Scenario s = *this;
    s.cfg_ = cfg;
    return s;
  }

  const SystemConfig& config() const { return cfg_; }
  const std::vector<EncoderMatrix>& encoders() const { return encoders_; }
  const DecoderMatrix& decoder() const { return decoder_; }
  const MarginClassifier& classifier() const { return classifier_; }

 private:
  SystemConfig cfg_;
  std::vector<EncoderMatrix> encoders_;
  DecoderMatrix decoder_;
  MarginClassifier classifier_;
};

/// Target i: a uniformly drawn class and one Gaussian view offset per device.
inline TargetObject make_target(const Scenario& sc, std::uint64_t target_index) {
  const SystemConfig& cfg = sc.config();
  Rng rng = make_rng(cfg.master_seed, target_index, Stream::kTarget);
  const int classes = static_cast<int>(sc.classifier().centroids.size());
  std::uniform_int_distribution<int> pick(0, classes - 1);
  TargetObject t;
  t.class_label = pick(rng);
  t.canonical_feature = sc.classifier().centroids[t.class_label];
  for (int k = 0; k < cfg.k_devices; ++k) {
    t.view_perturbations.push_back(cfg.classifier.view_std * standard_normal_vector(cfg.feature_dim, rng));
  }
  return t;
}

/// The per-target deterministic work: features f_k, clipped codes z_k and
/// the reference pooled feature f*.
struct PreparedTarget {
  TargetObject target;
  std::vector<FeatureVector> features;
  std::vector<EncodedFeature> codes;
  Vector f_star;
};

inline PreparedTarget prepare_target(const Scenario& sc, TargetObject target) {
  PreparedTarget pt;
  const auto& devices = sc.config().devices;
  for (std::size_t k = 0; k < devices.size(); ++k) {
    pt.features.push_back(extract_feature(target, devices[k].index));
    pt.codes.push_back(clip(encode(pt.features.back(), sc.encoders()[k]), devices[k].clip));
  }
  pt.f_star = average_pool(pt.features);
  pt.target = std::move(target);
  return pt;
}

struct TrialRecord {
  std::uint64_t trial_index = 0;
  ParticipationDraw tau;
  ChannelRealization channel;
  Vector z_hat;
  Vector f_hat;
  Vector f_star;
  double sq_err = 0.0;
  int predicted_label = 0;
  int true_label = 0;
  std::vector<double> tx_energy;  // ||x_k||^2
};

/// Server estimate z^ = y / gamma for one trial; fills tau, channel and
/// tx_energy in `rec`.
inline Vector aggregate(const Scenario& sc, const PreparedTarget& pt, std::uint64_t trial, TrialRecord& rec) {
  const SystemConfig& cfg = sc.config();
  const std::uint64_t seed = cfg.master_seed;
  Rng part_rng = make_rng(seed, trial, Stream::kParticipation);
  Rng chan_rng = make_rng(seed, trial, Stream::kChannel);
  Rng recv_rng = make_rng(seed, trial, Stream::kReceiverNoise);

  rec.trial_index = trial;
  rec.tau = sample_participation(cfg.devices, part_rng);
  rec.channel.h = draw_channel(cfg.channel, cfg.k_devices, chan_rng);
  rec.channel.alpha = align(rec.channel.h, cfg.devices, cfg.gamma);

  const Eigen::Index r = cfg.reduced_dim;
  std::vector<Vector> signals(cfg.devices.size());
  rec.tx_energy.assign(cfg.devices.size(), 0.0);
  for (std::size_t k = 0; k < cfg.devices.size(); ++k) {
    const DeviceProfile& d = cfg.devices[k];
    if (rec.tau.tau[k] == 0) {
      signals[k] = Vector::Zero(r);
      continue;
    }
    Rng dev_rng = make_rng(seed, trial, Stream::kDeviceNoise, static_cast<std::uint64_t>(k));
    const Vector z_tilde = perturb(pt.codes[k], d.w, d.sigma_sq, dev_rng);
    signals[k] = transmit_signal(z_tilde, rec.channel.alpha[k], d.p, true);
    rec.tx_energy[k] = signals[k].squaredNorm();
  }
  return post_process(superpose(signals, rec.channel.h, cfg.sigma_sq_m, recv_rng), cfg.gamma);
}

inline TrialRecord run_trial(const Scenario& sc, const PreparedTarget& pt, std::uint64_t trial) {
  TrialRecord rec;
  rec.z_hat = aggregate(sc, pt, trial, rec);
  rec.f_hat = decode(rec.z_hat, sc.decoder());
  rec.predicted_label = classify(rec.f_hat, sc.classifier());
  rec.true_label = pt.target.class_label;
  rec.f_star = pt.f_star;
  rec.sq_err = (rec.f_hat - rec.f_star).squaredNorm();
  return rec;
}

/// Per-trial scalars of a batch, in trial order.
struct BatchResult {
  std::vector<double> sq_err;
  std::vector<double> correct;  // 0 or 1
  std::vector<int> true_label;
  std::vector<std::vector<double>> tx_energy;  // filled when requested
};

struct BatchOptions {
  std::size_t targets = 1;
  std::size_t trials_per_target = 1;
  bool record_energy = false;
  unsigned workers = 0;  // 0: hardware concurrency
};

/// Target i uses trials i*trials_per_target .. (i+1)*trials_per_target - 1.
inline BatchResult run_batch(const Scenario& sc, const BatchOptions& opt) {
  if (opt.targets == 0 || opt.trials_per_target == 0) {
    throw std::invalid_argument("run_batch: need at least one target and one trial");
  }
  BatchResult out;
  std::vector<PreparedTarget> targets(opt.targets);
  parallel_for(opt.targets, [&](std::size_t i) { targets[i] = prepare_target(sc, make_target(sc, i)); },
               opt.workers);
  const std::size_t n = opt.targets * opt.trials_per_target;
  out.sq_err.resize(n);
  out.correct.resize(n);
  out.true_label.resize(n);
  if (opt.record_energy) out.tx_energy.resize(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const PreparedTarget& pt = targets[i / opt.trials_per_target];
        TrialRecord rec = run_trial(sc, pt, i);
        out.sq_err[i] = rec.sq_err;
        out.correct[i] = rec.predicted_label == rec.true_label ? 1.0 : 0.0;
        out.true_label[i] = rec.true_label;
        if (opt.record_energy) out.tx_energy[i] = std::move(rec.tx_energy);
      },
      opt.workers);
  return out;
}

/// Coordinate-wise mean and standard error of z^ over `trials` trials of a
/// single target. Trials are split into fixed blocks whose moments are merged
/// in block order, so the result is independent of the worker count.
struct MomentEstimate {
  Vector mean;
  Vector std_error;
  std::size_t n = 0;
};

inline MomentEstimate z_hat_moments(const Scenario& sc, const PreparedTarget& pt, std::size_t trials,
                                    unsigned workers = 0) {
  if (trials < 2) throw std::invalid_argument("z_hat_moments: need at least two trials");
  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::min(kBlocks, trials);
  const Eigen::Index r = sc.config().reduced_dim;
  std::vector<Vector> mean(blocks, Vector::Zero(r));
  std::vector<Vector> m2(blocks, Vector::Zero(r));
  std::vector<std::size_t> count(blocks, 0);
  parallel_for(
      blocks,
      [&](std::size_t b) {
        const std::size_t begin = b * trials / blocks;
        const std::size_t end = (b + 1) * trials / blocks;
        for (std::size_t i = begin; i < end; ++i) {
          TrialRecord rec;
          const Vector z = aggregate(sc, pt, i, rec);
          ++count[b];
          const Vector delta = z - mean[b];
          mean[b] += delta / static_cast<double>(count[b]);
          m2[b] += delta.cwiseProduct(z - mean[b]);
        }
      },
      workers);
  Vector total_mean = mean[0];
  Vector total_m2 = m2[0];
  double n = static_cast<double>(count[0]);
  for (std::size_t b = 1; b < blocks; ++b) {
    const double nb = static_cast<double>(count[b]);
    const Vector delta = mean[b] - total_mean;
    const double combined = n + nb;
    total_mean += delta * (nb / combined);
    total_m2 += m2[b] + delta.cwiseProduct(delta) * (n * nb / combined);
    n = combined;
  }
  MomentEstimate est;
  est.n = trials;
  est.mean = total_mean;
  est.std_error = (total_m2 / (n - 1.0) / n).cwiseSqrt();
  return est;
}

}  // namespace otadp

#endif  // OTADP_SCENARIO_HPP
