// Copyright 2026 The gpadapter authors
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

#ifndef GPA_COMMON_HPP
#define GPA_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gpa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Thrown on malformed caller input (bad sizes, non-finite values, bad config).
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Thrown when a numeric routine cannot proceed (failed factorization,
// non-convergent solver, operator not PSD). Carries a diagnostic message
// with the offending quantities.
class NumericBreakdown : public std::runtime_error {
 public:
  explicit NumericBreakdown(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an object is used in a state it does not support
// (e.g. backward pass without a retained tape).
class InvalidState : public std::logic_error {
 public:
  explicit InvalidState(const std::string& msg) : std::logic_error(msg) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

// splitmix64-style mix for deriving per-step / per-series RNG streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace gpa

#endif  // GPA_COMMON_HPP
