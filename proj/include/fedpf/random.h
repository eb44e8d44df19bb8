// Copyright 2026 The FedPF Simulator Authors.
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

#ifndef FEDPF_RANDOM_H_
#define FEDPF_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace fedpf {

// Platform-independent draws on top of mt19937_64. The std distributions are
// implementation-defined, so everything that feeds an experiment goes through
// here to keep metrics byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  uint64_t Below(uint64_t n);

  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Mixes (base, stream, index) into an independent seed. Used to give every
// client and every purpose (shuffling, perturbation, init) its own stream.
uint64_t DeriveSeed(uint64_t base, uint64_t stream, uint64_t index = 0);

// Stream tags for DeriveSeed.
enum class StreamTag : uint64_t {
  kSplit = 1,
  kPartition = 2,
  kInit = 3,
  kShuffle = 4,
  kPerturb = 5,
  kSampling = 6,
  kSynthetic = 7,
};

inline uint64_t DeriveSeed(uint64_t base, StreamTag tag, uint64_t index = 0) {
  return DeriveSeed(base, static_cast<uint64_t>(tag), index);
}

// Fisher-Yates with Rng::Below.
template <typename T>
void Shuffle(std::span<T> items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.Below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace fedpf

#endif  // FEDPF_RANDOM_H_
