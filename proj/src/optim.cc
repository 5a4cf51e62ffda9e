// src/optim.cc

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

#include "bytespeech/optim.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bytespeech/error.h"

namespace bytespeech::core {

double AdamConfig::lr_at(std::int64_t step) const {
  if (decay_steps <= 0 || step <= 1) return lr;
  return lr * std::pow(decay_rate, static_cast<double>(step - 1) / static_cast<double>(decay_steps));
}

double gradient_norm(const ParameterStore &params) {
  double s = 0.0;
  for (const auto &p : params)
    for (double g : p->grad.values()) s += g * g;
  return std::sqrt(s);
}

double forward_backward(const std::function<Var(Graph &)> &loss_fn, ParameterStore &params) {
  params.zero_grad();
  Graph g;
  Var loss = loss_fn(g);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) throw NonFiniteLossError("loss is not finite");
  g.backward(loss);
  return value;
}

void Adam::step(ParameterStore &params) {
  ++steps_;
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = gradient_norm(params);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  const double t = static_cast<double>(steps_);
  const double lr = config_.lr_at(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (auto &p : params) {
    AdamMoments &mom = moments_[p->name];
    if (!mom.m.same_shape(p->value)) {
      mom.m = Tensor(p->value.shape());
      mom.v = Tensor(p->value.shape());
    }
    std::span<double> w = p->value.values();
    std::span<const double> g = p->grad.values();
    std::span<double> m = mom.m.values();
    std::span<double> v = mom.v.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

namespace {

double eval_loss(const std::function<Var(Graph &)> &loss_fn) {
  Graph g(false);
  return loss_fn(g).value()[0];
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Graph &)> &loss_fn,
                           const std::vector<Parameter *> &params,
                           const GradCheckOptions &options) {
  for (Parameter *p : params) p->grad.fill(0.0);
  {
    Graph g;
    Var loss = loss_fn(g);
    g.backward(loss);
  }

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (Parameter *p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n > static_cast<std::size_t>(options.samples_per_param)) {
      // Partial Fisher-Yates with our own draws for reproducibility.
      for (std::size_t i = 0; i < static_cast<std::size_t>(options.samples_per_param); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(static_cast<std::size_t>(options.samples_per_param));
    }
    bool failed = false;
    for (std::size_t i : idx) {
      const double analytic = p->grad[i];
      auto rel_err = [&](double step) {
        const double saved = p->value[i];
        p->value[i] = saved + step;
        const double up = eval_loss(loss_fn);
        p->value[i] = saved - step;
        const double down = eval_loss(loss_fn);
        p->value[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
        return std::abs(analytic - numeric) / denom;
      };
      double rel = rel_err(options.step);
      // A miss may be a ReLU kink inside the stencil; a wrong gradient misses
      // at the finer step too.
      if (!(rel < options.tol)) rel = std::min(rel, rel_err(options.step / 10.0));
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
      if (!(rel < options.tol)) failed = true;
    }
    if (failed) report.failing.push_back(p->name);
  }
  return report;
}

}  // namespace bytespeech::core
