// include/bytespeech/layers.h

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

#ifndef BYTESPEECH_LAYERS_H_
#define BYTESPEECH_LAYERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bytespeech/autograd.h"
#include "bytespeech/error.h"
#include "bytespeech/tensor.h"

namespace bytespeech::nn {

using core::Graph;
using core::Parameter;
using core::ParameterStore;
using core::Tensor;
using core::Var;

// Output row j concatenates input rows j*stride-left .. j*stride (oldest
// first), zero-padded below row 0. Output has ceil(T/stride) rows.
Tensor frame_stack(const Tensor &features, int left = 3, int stride = 3);

// One-hot language indicator; active < 0 means "no conditioning".
struct LanguageVector {
  int num_languages = 0;
  int active = -1;

  static LanguageVector none(int num_languages) { return {num_languages, -1}; }
  static LanguageVector one_hot(int num_languages, int id);

  std::vector<double> values() const;
};

std::vector<double> concat_language(std::span<const double> input, const LanguageVector &lang);

// Appends one language vector per row of x. A no-op when num_languages is 0.
Var concat_language(const Var &x, std::span<const LanguageVector> langs);

class Linear {
 public:
  Linear() = default;
  // `lang_rows` trailing input rows are language slots.
  Linear(ParameterStore &store, const std::string &name, int in, int out, std::uint64_t seed,
         int lang_rows = 0, bool bias = true);

  Var forward(Graph &g, const Var &x) const;
  int in() const { return in_; }
  int out() const { return out_; }
  Parameter *weight() const { return w_; }
  Parameter *bias() const { return b_; }

 private:
  Parameter *w_ = nullptr;
  Parameter *b_ = nullptr;
  int in_ = 0;
  int out_ = 0;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParameterStore &store, const std::string &name, int vocab, int dim,
            std::uint64_t seed);

  Var forward(Graph &g, std::span<const int> ids) const;
  int dim() const { return dim_; }

 private:
  Parameter *table_ = nullptr;
  int dim_ = 0;
};

// LSTM cell, gates ordered (input, forget, cell, output).
class LstmCell {
 public:
  struct State {
    Var h;
    Var c;
  };

  LstmCell() = default;
  LstmCell(ParameterStore &store, const std::string &name, int input_dim, int hidden,
           std::uint64_t seed, int lang_rows = 0, double forget_bias = 1.0);

  State zero_state(Graph &g, int batch) const;
  State step(Graph &g, const Var &x, const State &state) const;
  int hidden() const { return hidden_; }
  int input_dim() const { return input_dim_; }

  Parameter *input_weight() const { return w_in_; }
  Parameter *recurrent_weight() const { return w_h_; }
  Parameter *bias() const { return b_; }

 private:
  Parameter *w_in_ = nullptr;
  Parameter *w_h_ = nullptr;
  Parameter *b_ = nullptr;
  int input_dim_ = 0;
  int hidden_ = 0;
};

// Same-padded convolution over time, per sequence.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore &store, const std::string &name, int in_channels, int out_channels,
         int width, std::uint64_t seed);

  // x: (B*T) x in_channels.
  Var forward(Graph &g, const Var &x, int steps) const;

 private:
  Parameter *kernel_ = nullptr;
  Parameter *bias_ = nullptr;
};

class EmptyKeySequenceError : public DataError {
 public:
  EmptyKeySequenceError() : DataError("EmptyKeySequence", "attention over an empty key sequence") {}
};

class LengthMismatchError : public DataError {
 public:
  explicit LengthMismatchError(const std::string &what) : DataError("LengthMismatch", what) {}
};

// Encoder outputs laid out as B sequences of `steps` rows, with per-head key
// projections computed once per utterance batch.
struct AttentionMemory {
  Var keys;       // (B*T) x key_dim
  Var projected;  // (B*T) x (heads*attn_dim)
  int batch = 0;
  int steps = 0;
  std::vector<double> mask;  // B*T, 1 for real positions
};

struct AttentionResult {
  Var context;               // B x out_dim
  std::vector<Var> weights;  // one B x T matrix per head
};

// Additive (content-based) attention: per head h,
//   e_t = v_h . tanh(Wq_h q + Wk_h k_t + b_h),  alpha_h = softmax(e),
// head contexts are alpha-weighted sums of the keys, concatenated and
// linearly projected to out_dim.
class AdditiveAttention {
 public:
  AdditiveAttention() = default;
  AdditiveAttention(ParameterStore &store, const std::string &name, int query_dim, int key_dim,
                    int attn_dim, int heads, int out_dim, std::uint64_t seed);

  AttentionMemory prepare(Graph &g, const Var &keys, int batch, int steps,
                          std::vector<double> mask) const;
  // `extra_score`, when given, is a (B*T) x attn_dim term added inside the
  // tanh (heads must be 1).
  AttentionResult attend(Graph &g, const AttentionMemory &memory, const Var &query,
                         const Var *extra_score = nullptr) const;

  int heads() const { return heads_; }
  int attn_dim() const { return attn_dim_; }
  int out_dim() const { return out_dim_; }

 private:
  Parameter *wq_ = nullptr;
  Parameter *wk_ = nullptr;
  Parameter *bk_ = nullptr;
  std::vector<Parameter *> v_;
  Linear out_;
  int heads_ = 0;
  int attn_dim_ = 0;
  int out_dim_ = 0;
};

// Single-head additive attention whose scores also see a convolution of the
// cumulative previous attention weights.
class LocationSensitiveAttention {
 public:
  LocationSensitiveAttention() = default;
  LocationSensitiveAttention(ParameterStore &store, const std::string &name, int query_dim,
                             int key_dim, int attn_dim, int out_dim, int filters, int width,
                             std::uint64_t seed);

  AttentionMemory prepare(Graph &g, const Var &keys, int batch, int steps,
                          std::vector<double> mask) const {
    return base_.prepare(g, keys, batch, steps, std::move(mask));
  }
  // cumulative: B x T sum of all previous attention weights.
  AttentionResult attend(Graph &g, const AttentionMemory &memory, const Var &query,
                         const Var &cumulative) const;

  const AdditiveAttention &base() const { return base_; }
  Parameter *location_kernel() const { return kernel_; }
  Parameter *location_projection() const { return proj_; }

 private:
  AdditiveAttention base_;
  Parameter *kernel_ = nullptr;
  Parameter *proj_ = nullptr;
};

// Builds a constant (B*T) mask from per-sequence lengths.
std::vector<double> length_mask(std::span<const int> lengths, int steps);

}  // namespace bytespeech::nn

#endif  // BYTESPEECH_LAYERS_H_
