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

#ifndef TDNAS_TENSOR_H_
#define TDNAS_TENSOR_H_

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "common.h"

namespace tdnas {

// Dense row-major tensor of doubles, rank 0..3.  Everything in the library
// computes in 64-bit floats with fixed loop order, so results are
// bit-reproducible for a given input stream.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(Numel()), 0.0);
  }
  Tensor(std::vector<int64_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    Check(static_cast<int64_t>(data.size()) == Numel(),
          "Tensor: data size does not match shape");
  }

  int64_t Numel() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
  int Rank() const { return static_cast<int>(shape.size()); }
  int64_t Dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& At(int64_t i) { return data[static_cast<size_t>(i)]; }
  double At(int64_t i) const { return data[static_cast<size_t>(i)]; }
  double& At(int64_t i, int64_t j) {
    return data[static_cast<size_t>(i * shape[1] + j)];
  }
  double At(int64_t i, int64_t j) const {
    return data[static_cast<size_t>(i * shape[1] + j)];
  }
  double& At(int64_t i, int64_t j, int64_t k) {
    return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  double At(int64_t i, int64_t j, int64_t k) const {
    return data[static_cast<size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  bool SameShape(const Tensor& o) const { return shape == o.shape; }

  static Tensor Scalar(double v) {
    Tensor t;
    t.data.assign(1, v);
    return t;
  }
  static Tensor Zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
  static Tensor Full(std::vector<int64_t> s, double v) {
    Tensor t(std::move(s));
    for (double& x : t.data) x = v;
    return t;
  }
};

std::string ShapeToString(const std::vector<int64_t>& shape);

inline void CheckRank(const Tensor& t, int rank, const char* what) {
  Require(t.Rank() == rank,
          std::string(what) + ": expected rank " + std::to_string(rank) +
              ", got shape " + ShapeToString(t.shape));
}

}  // namespace tdnas

#endif  // TDNAS_TENSOR_H_
