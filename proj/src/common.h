// Copyright 2026 The tdnas Authors.
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

#ifndef TDNAS_COMMON_H_
#define TDNAS_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tdnas {

// Error taxonomy shared by the whole library.  The C API maps each kind to a
// stable integer status code, so new kinds must be appended, never reordered.
enum class ErrorKind {
  kInvalidArgument = 1,
  kBadConfig = 2,
  kValidation = 3,
  kIo = 4,
  kCorrupt = 5,
  kState = 6,
  kNumeric = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// Require is for caller mistakes, Check is for internal consistency.
inline void Require(bool cond, const std::string& msg,
                    ErrorKind kind = ErrorKind::kInvalidArgument) {
  if (!cond) Fail(kind, msg);
}

inline void Check(bool cond, const std::string& msg) {
  if (!cond) Fail(ErrorKind::kInternal, msg);
}

// Deterministic random source.  Raw draws come from std::mt19937_64, whose
// output sequence is fixed by the standard, so streams are reproducible across
// platforms.  All derived distributions are implemented here by hand; the
// std::*_distribution adaptors are not portable across library vendors.
//
// draw_count() reports the number of raw engine outputs consumed, which lets a
// caller snapshot a stream position and reconstruct it later with discard().
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t skip = 0) : eng_(seed), seed_(seed) {
    if (skip > 0) {
      eng_.discard(skip);
      draws_ = skip;
    }
  }

  uint64_t seed() const { return seed_; }
  uint64_t draw_count() const { return draws_; }

  uint64_t NextU64() {
    ++draws_;
    return eng_();
  }

  // Uniform over [0, n).  Rejection sampling keeps the result exactly uniform.
  // n == 1 consumes no randomness.
  uint64_t UniformIndex(uint64_t n) {
    Require(n > 0, "UniformIndex: n must be positive");
    if (n == 1) return 0;
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double UniformReal() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double UniformRange(double lo, double hi) {
    return lo + (hi - lo) * UniformReal();
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double Normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = UniformReal();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = UniformReal();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 eng_;
  uint64_t seed_;
  uint64_t draws_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::string FormatDouble(double v);

}  // namespace tdnas

#endif  // TDNAS_COMMON_H_
