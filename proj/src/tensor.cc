// src/tensor.cc

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

#include "bytespeech/tensor.h"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bytespeech/hash.h"

namespace bytespeech::core {

namespace {

std::size_t shape_product(const std::vector<int> &shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), values_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_product(shape_))
    throw std::invalid_argument("value count does not match shape " + shape_string(shape_));
}

int Tensor::cols() const {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  int c = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

void Tensor::fill(double v) {
  for (double &x : values_) x = v;
}

void Tensor::reshape(std::vector<int> shape) {
  if (shape_product(shape) != values_.size())
    throw std::invalid_argument("reshape changes element count");
  shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
  for (double x : values_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string shape_string(const std::vector<int> &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Parameter &ParameterStore::add(const std::string &name, std::vector<int> shape, int lang_rows) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(std::move(shape));
  p->lang_rows = lang_rows;
  Parameter &ref = *p;
  by_name_[name] = p.get();
  params_.push_back(std::move(p));
  return ref;
}

Parameter *ParameterStore::find(const std::string &name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter *ParameterStore::find(const std::string &name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

Parameter &ParameterStore::at(const std::string &name) {
  Parameter *p = find(name);
  if (!p) throw std::out_of_range("no parameter named " + name);
  return *p;
}

std::int64_t ParameterStore::num_values() const {
  std::int64_t n = 0;
  for (const auto &p : params_) n += static_cast<std::int64_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto &p : params_) p->grad.fill(0.0);
}

std::vector<Parameter *> ParameterStore::pointers() {
  std::vector<Parameter *> out;
  out.reserve(params_.size());
  for (auto &p : params_) out.push_back(p.get());
  return out;
}

void init_uniform(Parameter &p, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(hash_combine(seed, hash_string(p.name)));
  for (double &x : p.value.values()) x = (2.0 * to_unit_double(rng()) - 1.0) * scale;
}

}  // namespace bytespeech::core
