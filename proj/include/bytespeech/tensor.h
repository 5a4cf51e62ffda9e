// include/bytespeech/tensor.h

// Copyright 2026  bytespeech authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BYTESPEECH_TENSOR_H_
#define BYTESPEECH_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bytespeech::core {

// Dense row-major array of doubles. Most code uses rank 2.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor matrix(int rows, int cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor scalar(double v) { return Tensor({1, 1}, v); }

  const std::vector<int> &shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rows() const { return shape_.empty() ? 0 : shape_[0]; }
  // Product of all trailing dimensions.
  int cols() const;
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double> &storage() { return values_; }

  double &operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols() + c]; }
  double operator()(int r, int c) const {
    return values_[static_cast<std::size_t>(r) * cols() + c];
  }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> row(int r) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(r) * cols(), cols());
  }
  std::span<const double> row(int r) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(r) * cols(),
                                                    cols());
  }

  void fill(double v);
  void reshape(std::vector<int> shape);
  bool all_finite() const;
  bool same_shape(const Tensor &o) const { return shape_ == o.shape_; }

  friend bool operator==(const Tensor &, const Tensor &) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

std::string shape_string(const std::vector<int> &shape);

// A named trainable tensor plus its accumulated gradient. `lang_rows` counts
// trailing rows that hold language-vector weights; these may be zero-extended
// when a model is loaded with more languages than it was saved with.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  int lang_rows = 0;
};

// Owns a model's parameters in registration order.
class ParameterStore {
 public:
  Parameter &add(const std::string &name, std::vector<int> shape, int lang_rows = 0);

  Parameter *find(const std::string &name);
  const Parameter *find(const std::string &name) const;
  Parameter &at(const std::string &name);

  std::size_t size() const { return params_.size(); }
  std::int64_t num_values() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Parameter *> pointers();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter *> by_name_;
};

// Fills `p` with U(-scale, scale) from a generator seeded by (seed, p.name),
// so initialization does not depend on registration order.
void init_uniform(Parameter &p, std::uint64_t seed, double scale);

}  // namespace bytespeech::core

#endif  // BYTESPEECH_TENSOR_H_
