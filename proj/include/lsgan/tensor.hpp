// Copyright (c) 2026 The lsgan-motion Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lsgan {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of doubles with rank 1 or 2.
///
/// Tensors are immutable values. Construction from external data rejects
/// non-finite entries; results computed inside the library go through
/// `Tensor::computed`, which skips that scan.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor computed(Shape shape, std::vector<double> data);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values().size(); }
  bool empty() const noexcept { return values().empty(); }

  // A rank-1 tensor of width n is viewed as a single [1, n] row.
  std::size_t rows() const noexcept { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

  std::span<const double> data() const noexcept { return values(); }
  std::span<const double> row(std::size_t r) const;
  double operator[](std::size_t i) const noexcept { return (*data_)[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  const std::vector<double>& values() const noexcept { return data_ ? *data_ : kEmpty; }
  std::vector<double> to_vector() const { return values(); }

  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && (a.data_ == b.data_ || a.values() == b.values());
  }

 private:
  struct Unchecked {};
  Tensor(Shape shape, std::vector<double> data, Unchecked);

  static const std::vector<double> kEmpty;

  // Immutable storage, shared between copies.
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
};

}  // namespace lsgan
