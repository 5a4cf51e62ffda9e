// include/bytespeech/optim.h

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

#ifndef BYTESPEECH_OPTIM_H_
#define BYTESPEECH_OPTIM_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bytespeech/autograd.h"
#include "bytespeech/tensor.h"

namespace bytespeech::core {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  // Step t uses lr * decay_rate^((t-1) / decay_steps); decay_steps 0 disables.
  double decay_rate = 1.0;
  std::int64_t decay_steps = 0;

  double lr_at(std::int64_t step) const;
};

// First/second moment estimates for one parameter.
struct AdamMoments {
  Tensor m;
  Tensor v;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  const AdamConfig &config() const { return config_; }
  AdamConfig &mutable_config() { return config_; }

  // Applies one update using each parameter's accumulated gradient.
  void step(ParameterStore &params);

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t t) { steps_ = t; }
  std::map<std::string, AdamMoments> &moments() { return moments_; }
  const std::map<std::string, AdamMoments> &moments() const { return moments_; }

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

// Zeroes gradients, builds the loss and backpropagates into `params`.
// Throws NonFiniteLossError when the loss is NaN or infinite.
double forward_backward(const std::function<Var(Graph &)> &loss_fn, ParameterStore &params);

// Global L2 norm over all parameter gradients, left-to-right order.
double gradient_norm(const ParameterStore &params);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::vector<std::string> failing;
  std::size_t checked = 0;
  bool passed() const { return failing.empty(); }
};

struct GradCheckOptions {
  double step = 1e-4;
  double tol = 1e-4;
  int samples_per_param = 32;  // all elements when the parameter is smaller
  std::uint64_t seed = 17;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

// Compares analytic gradients against central differences. `loss_fn` must
// build the same scalar loss on every call. An element that misses at `step`
// is retried once at step / 10 and the smaller error counts: the coarse step
// keeps rounding noise below tolerance for tiny gradients, the fine one steps
// inside piecewise-linear kinks.
GradCheckReport grad_check(const std::function<Var(Graph &)> &loss_fn,
                           const std::vector<Parameter *> &params,
                           const GradCheckOptions &options = {});

}  // namespace bytespeech::core

#endif  // BYTESPEECH_OPTIM_H_
