// Copyright 2026 The JGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JGR_RNG_HPP_
#define JGR_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace jgr {

// Counter-based deterministic PRNG built on the splitmix64 mixing function.
// A stream is fully described by a single 64-bit state, which makes streams
// trivially checkpointable and platform-independent. Named streams (init,
// sampling, data, shuffle) are derived by hashing the stream name into the
// seed, and substreams by folding indices in.
class RngStream {
 public:
  explicit RngStream(uint64_t state) : state_(state) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    // Multiply-shift; bias is negligible for desk-scale n.
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (one value per call, no cached spare,
  // so the draw count stays in lockstep with the state).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Independent substream derived from this stream's state and an index.
  RngStream fork(uint64_t index) const {
    return RngStream(mix(state_ ^ 0xa0761d6478bd642full, index + 1));
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
};

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Root rng owning the run seed; hands out named streams.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {}

  RngStream stream(std::string_view name) const {
    return RngStream(RngStream::mix(seed_, fnv1a(name)));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
};

}  // namespace jgr

#endif  // JGR_RNG_HPP_
