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

#include "lsgan/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lsgan {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {

void check_shape(const Shape& shape, std::size_t n) {
  if (shape.empty() || shape.size() > 2) {
    throw std::invalid_argument("tensor: rank must be 1 or 2, got shape " + shape_str(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw std::invalid_argument("tensor: zero extent in shape " + shape_str(shape));
  }
  if (shape_numel(shape) != n) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not hold " +
                                std::to_string(n) + " elements");
  }
}

}  // namespace

const std::vector<double> Tensor::kEmpty;

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::make_shared<const std::vector<double>>(std::move(data))) {
  check_shape(shape_, data_->size());
  const auto& v = *data_;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw std::invalid_argument("tensor: non-finite entry at flat index " + std::to_string(i));
    }
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data, Unchecked)
    : shape_(std::move(shape)), data_(std::make_shared<const std::vector<double>>(std::move(data))) {
  check_shape(shape_, data_->size());
}

Tensor Tensor::computed(Shape shape, std::vector<double> data) {
  return Tensor(std::move(shape), std::move(data), Unchecked{});
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("tensor: ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (r >= rows()) throw std::out_of_range("tensor: row " + std::to_string(r) + " of " + shape_str(shape_));
  return data().subspan(r * cols(), cols());
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) {
    throw std::out_of_range("tensor: index (" + std::to_string(r) + "," + std::to_string(c) + ") of " +
                            shape_str(shape_));
  }
  return (*data_)[r * cols() + c];
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("tensor: item() on shape " + shape_str(shape_));
  return (*data_)[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  check_shape(shape, size());
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

}  // namespace lsgan
