/*
 Copyright 2026 The dsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DSTEER_RNG_HPP_
#define DSTEER_RNG_HPP_

#include <cstdint>
#include <limits>
#include <string_view>

#include "dsteer/tensor.hpp"

namespace dsteer {

/**
 * @brief Counter-based 64-bit generator (SplitMix64 output function over a keyed counter).
 *
 * The key is derived from a seed and a stream name, so independent purposes
 * ("init", "batch", "eval", ...) never share draws. Satisfies
 * UniformRandomBitGenerator.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::string_view stream);

  result_type operator()() noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// rows x cols matrix of independent N(0, 1) draws, filled row by row.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng);

/// Uniform draw on [0, 1).
double uniform01(CounterRng& rng);

}  // namespace dsteer

#endif  // DSTEER_RNG_HPP_
