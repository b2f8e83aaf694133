// Copyright (c) the n2s Project Authors
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

#include "n2s/tensor.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "n2s/errors.hpp"

namespace n2s {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) throw InvalidArgument("tensor shape has no extents");
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw InvalidArgument("tensor extent is zero: " + shape_string(shape));
    if (n > std::numeric_limits<std::size_t>::max() / e) {
      throw InvalidArgument("tensor shape overflows: " + shape_string(shape));
    }
    n *= e;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("value count " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

std::span<double> Tensor::slice(std::size_t b) {
  const std::size_t stride = data_.size() / shape_.at(0);
  if (b >= shape_[0]) throw InvalidArgument("slice index out of range");
  return std::span<double>(data_).subspan(b * stride, stride);
}

std::span<const double> Tensor::slice(std::size_t b) const {
  const std::size_t stride = data_.size() / shape_.at(0);
  if (b >= shape_[0]) throw InvalidArgument("slice index out of range");
  return std::span<const double>(data_).subspan(b * stride, stride);
}

Tensor Tensor::slice_copy(std::size_t b) const {
  if (shape_.size() < 2) throw InvalidArgument("cannot slice a 1-D tensor");
  auto s = slice(b);
  return Tensor(Shape(shape_.begin() + 1, shape_.end()),
                std::vector<double>(s.begin(), s.end()));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.empty() || b.empty()) throw ShapeError(std::string(what) + ": empty tensor");
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw InvalidArgument("stack of zero tensors");
  Shape shape{items.size()};
  shape.insert(shape.end(), items[0].shape().begin(), items[0].shape().end());
  std::vector<double> values;
  values.reserve(shape_size(shape));
  for (const Tensor& t : items) {
    require_same_shape(t, items[0], "stack");
    values.insert(values.end(), t.values().begin(), t.values().end());
  }
  return Tensor(std::move(shape), std::move(values));
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(const Tensor& a) { return dot(a, a); }

double sum(const Tensor& a) {
  return std::accumulate(a.values().begin(), a.values().end(), 0.0);
}

double mean(const Tensor& a) { return sum(a) / static_cast<double>(a.size()); }

}  // namespace n2s
