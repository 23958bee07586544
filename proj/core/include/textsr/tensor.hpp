// Copyright 2026 The textsr Authors.
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

#ifndef TEXTSR_TENSOR_HPP_
#define TEXTSR_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace textsr {

// Dense row-major double tensor. Everything in the model path runs in
// double precision; gradient checks and the determinism contract depend
// on it.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  void fill(double value);
  void zero() { fill(0.0); }

  // Reinterprets the buffer with a new shape of identical element count.
  Tensor reshaped(std::vector<int> shape) const;

  double max_abs() const;
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::int64_t shape_numel(const std::vector<int>& shape);

}  // namespace textsr

#endif  // TEXTSR_TENSOR_HPP_
