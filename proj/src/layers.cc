// src/layers.cc

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

#include "bytespeech/layers.h"

#include <cmath>
#include <stdexcept>

namespace bytespeech::nn {

Tensor frame_stack(const Tensor &features, int left, int stride) {
  if (left < 0 || stride < 1) throw std::invalid_argument("frame_stack: bad left/stride");
  const int t = features.rows(), d = features.cols();
  const int out_rows = (t + stride - 1) / stride;
  const int width = d * (left + 1);
  Tensor out = Tensor::matrix(out_rows, width);
  for (int j = 0; j < out_rows; ++j) {
    for (int s = 0; s <= left; ++s) {
      const int src = j * stride - left + s;
      if (src < 0) continue;
      for (int k = 0; k < d; ++k) out(j, s * d + k) = features(src, k);
    }
  }
  return out;
}

LanguageVector LanguageVector::one_hot(int num_languages, int id) {
  if (id < 0 || id >= num_languages) throw std::out_of_range("language id out of range");
  return {num_languages, id};
}

std::vector<double> LanguageVector::values() const {
  std::vector<double> v(static_cast<std::size_t>(num_languages), 0.0);
  if (active >= 0) v[static_cast<std::size_t>(active)] = 1.0;
  return v;
}

std::vector<double> concat_language(std::span<const double> input, const LanguageVector &lang) {
  std::vector<double> out(input.begin(), input.end());
  for (double x : lang.values()) out.push_back(x);
  return out;
}

Var concat_language(const Var &x, std::span<const LanguageVector> langs) {
  if (langs.empty() || langs[0].num_languages == 0) return x;
  if (static_cast<int>(langs.size()) != x.rows())
    throw std::invalid_argument("concat_language: one language vector per row");
  const int n = langs[0].num_languages;
  Tensor block = Tensor::matrix(x.rows(), n);
  for (int i = 0; i < x.rows(); ++i) {
    const LanguageVector &l = langs[static_cast<std::size_t>(i)];
    if (l.num_languages != n) throw std::invalid_argument("concat_language: width mismatch");
    if (l.active >= 0) block(i, l.active) = 1.0;
  }
  Var c = x.graph()->constant(std::move(block));
  const Var parts[] = {x, c};
  return core::concat_cols(parts);
}

Linear::Linear(ParameterStore &store, const std::string &name, int in, int out,
               std::uint64_t seed, int lang_rows, bool bias)
    : in_(in), out_(out) {
  w_ = &store.add(name + ".w", {in, out}, lang_rows);
  core::init_uniform(*w_, seed, 1.0 / std::sqrt(static_cast<double>(in)));
  if (bias) b_ = &store.add(name + ".b", {1, out});
}

Var Linear::forward(Graph &g, const Var &x) const {
  Var y = core::matmul(x, g.param(*w_));
  if (b_) y = core::add_bias(y, g.param(*b_));
  return y;
}

Embedding::Embedding(ParameterStore &store, const std::string &name, int vocab, int dim,
                     std::uint64_t seed)
    : dim_(dim) {
  table_ = &store.add(name + ".table", {vocab, dim});
  core::init_uniform(*table_, seed, 0.5);
}

Var Embedding::forward(Graph &g, std::span<const int> ids) const {
  return core::embedding(g.param(*table_), ids);
}

LstmCell::LstmCell(ParameterStore &store, const std::string &name, int input_dim, int hidden,
                   std::uint64_t seed, int lang_rows, double forget_bias)
    : input_dim_(input_dim), hidden_(hidden) {
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_in_ = &store.add(name + ".w_in", {input_dim, 4 * hidden}, lang_rows);
  w_h_ = &store.add(name + ".w_h", {hidden, 4 * hidden});
  b_ = &store.add(name + ".b", {1, 4 * hidden});
  core::init_uniform(*w_in_, seed, s);
  core::init_uniform(*w_h_, seed, s);
  for (int j = hidden; j < 2 * hidden; ++j) b_->value[static_cast<std::size_t>(j)] = forget_bias;
}

LstmCell::State LstmCell::zero_state(Graph &g, int batch) const {
  return {g.constant(Tensor::matrix(batch, hidden_)), g.constant(Tensor::matrix(batch, hidden_))};
}

LstmCell::State LstmCell::step(Graph &g, const Var &x, const State &state) const {
  using namespace core;
  Var z = add_bias(add(matmul(x, g.param(*w_in_)), matmul(state.h, g.param(*w_h_))),
                   g.param(*b_));
  const int h = hidden_;
  Var i = sigmoid(slice_cols(z, 0, h));
  Var f = sigmoid(slice_cols(z, h, h));
  Var c_hat = core::tanh(slice_cols(z, 2 * h, h));
  Var o = sigmoid(slice_cols(z, 3 * h, h));
  Var c = add(mul(f, state.c), mul(i, c_hat));
  Var out = mul(o, core::tanh(c));
  return {out, c};
}

Conv1d::Conv1d(ParameterStore &store, const std::string &name, int in_channels,
               int out_channels, int width, std::uint64_t seed) {
  if (width % 2 == 0) throw InvalidConfigError("convolution width must be odd");
  kernel_ = &store.add(name + ".kernel", {out_channels, width * in_channels});
  bias_ = &store.add(name + ".b", {1, out_channels});
  core::init_uniform(*kernel_, seed, 1.0 / std::sqrt(static_cast<double>(width * in_channels)));
}

Var Conv1d::forward(Graph &g, const Var &x, int steps) const {
  return core::add_bias(core::conv_time(x, g.param(*kernel_), steps), g.param(*bias_));
}

AdditiveAttention::AdditiveAttention(ParameterStore &store, const std::string &name,
                                     int query_dim, int key_dim, int attn_dim, int heads,
                                     int out_dim, std::uint64_t seed)
    : heads_(heads), attn_dim_(attn_dim), out_dim_(out_dim) {
  if (heads < 1) throw InvalidConfigError("attention needs at least one head");
  wq_ = &store.add(name + ".wq", {query_dim, heads * attn_dim});
  wk_ = &store.add(name + ".wk", {key_dim, heads * attn_dim});
  bk_ = &store.add(name + ".bk", {1, heads * attn_dim});
  core::init_uniform(*wq_, seed, 1.0 / std::sqrt(static_cast<double>(query_dim)));
  core::init_uniform(*wk_, seed, 1.0 / std::sqrt(static_cast<double>(key_dim)));
  for (int h = 0; h < heads; ++h) {
    Parameter &v = store.add(name + ".v" + std::to_string(h), {attn_dim, 1});
    core::init_uniform(v, seed, 1.0 / std::sqrt(static_cast<double>(attn_dim)));
    v_.push_back(&v);
  }
  out_ = Linear(store, name + ".out", heads * key_dim, out_dim, seed);
}

AttentionMemory AdditiveAttention::prepare(Graph &g, const Var &keys, int batch, int steps,
                                           std::vector<double> mask) const {
  if (steps <= 0 || keys.rows() == 0) throw EmptyKeySequenceError();
  if (keys.rows() != batch * steps)
    throw LengthMismatchError("attention keys rows != batch * steps");
  if (static_cast<int>(mask.size()) != batch * steps)
    throw LengthMismatchError("attention mask size != batch * steps");
  AttentionMemory m;
  m.keys = keys;
  m.projected = core::add_bias(core::matmul(keys, g.param(*wk_)), g.param(*bk_));
  m.batch = batch;
  m.steps = steps;
  m.mask = std::move(mask);
  return m;
}

AttentionResult AdditiveAttention::attend(Graph &g, const AttentionMemory &memory,
                                          const Var &query, const Var *extra_score) const {
  using namespace core;
  if (memory.steps <= 0) throw EmptyKeySequenceError();
  if (extra_score && heads_ != 1)
    throw std::invalid_argument("extra attention score requires a single head");
  Var q = matmul(query, g.param(*wq_));
  Var pre = add_grouped(memory.projected, q);
  if (extra_score) pre = add(pre, *extra_score);
  Var act = core::tanh(pre);
  AttentionResult r;
  std::vector<Var> contexts;
  for (int h = 0; h < heads_; ++h) {
    Var head = heads_ == 1 ? act : slice_cols(act, h * attn_dim_, attn_dim_);
    Var e = reshape(matmul(head, g.param(*v_[static_cast<std::size_t>(h)])), memory.batch,
                    memory.steps);
    Var alpha = masked_softmax(e, memory.mask);
    contexts.push_back(weighted_sum_grouped(alpha, memory.keys));
    r.weights.push_back(alpha);
  }
  Var joined = heads_ == 1 ? contexts[0] : concat_cols(contexts);
  r.context = out_.forward(g, joined);
  return r;
}

LocationSensitiveAttention::LocationSensitiveAttention(ParameterStore &store,
                                                       const std::string &name, int query_dim,
                                                       int key_dim, int attn_dim, int out_dim,
                                                       int filters, int width,
                                                       std::uint64_t seed)
    : base_(store, name, query_dim, key_dim, attn_dim, 1, out_dim, seed) {
  if (width % 2 == 0) throw InvalidConfigError("location filter width must be odd");
  kernel_ = &store.add(name + ".loc_kernel", {filters, width});
  proj_ = &store.add(name + ".loc_proj", {filters, attn_dim});
  core::init_uniform(*kernel_, seed, 1.0 / std::sqrt(static_cast<double>(width)));
  core::init_uniform(*proj_, seed, 1.0 / std::sqrt(static_cast<double>(filters)));
}

AttentionResult LocationSensitiveAttention::attend(Graph &g, const AttentionMemory &memory,
                                                   const Var &query,
                                                   const Var &cumulative) const {
  using namespace core;
  if (cumulative.rows() != memory.batch || cumulative.cols() != memory.steps)
    throw LengthMismatchError("previous attention weights do not match key length");
  Var loc = conv_time(reshape(cumulative, memory.batch * memory.steps, 1), g.param(*kernel_),
                      memory.steps);
  Var extra = matmul(loc, g.param(*proj_));
  return base_.attend(g, memory, query, &extra);
}

std::vector<double> length_mask(std::span<const int> lengths, int steps) {
  std::vector<double> m(lengths.size() * static_cast<std::size_t>(steps), 0.0);
  for (std::size_t b = 0; b < lengths.size(); ++b)
    for (int t = 0; t < lengths[b] && t < steps; ++t) m[b * steps + t] = 1.0;
  return m;
}

}  // namespace bytespeech::nn
