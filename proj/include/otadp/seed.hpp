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

#ifndef OTADP_SEED_HPP
#define OTADP_SEED_HPP

#include <cstdint>
#include <random>

namespace otadp {

/// Independent random streams. Every random draw in the simulator comes from
/// exactly one of these, keyed further by trial (or object) index.
enum class Stream : std::uint64_t {
  kParticipation = 1,
  kChannel = 2,
  kDeviceNoise = 3,
  kReceiverNoise = 4,
  kTarget = 5,
  kEncoder = 6,
  kClassifier = 7,
  kMonteCarlo = 8,
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes (master seed, trial index, stream, sub-stream) into one seed. Each
/// input passes through a full SplitMix round before the next is folded in,
/// so nearby indices give unrelated outputs.
constexpr std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                          std::uint64_t trial_index,
                                          Stream stream,
                                          std::uint64_t substream = 0) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ trial_index);
  h = mix64(h ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
  h = mix64(h ^ substream);
  return h;
}

inline Rng make_rng(std::uint64_t master_seed, std::uint64_t trial_index,
                    Stream stream, std::uint64_t substream = 0) {
  return Rng(derive_trial_seed(master_seed, trial_index, stream, substream));
}

}  // namespace otadp

#endif  // OTADP_SEED_HPP
