// include/bytespeech/autograd.h

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

#ifndef BYTESPEECH_AUTOGRAD_H_
#define BYTESPEECH_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "bytespeech/error.h"
#include "bytespeech/tensor.h"

namespace bytespeech::core {

class Graph;

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  Parameter *param = nullptr;
  // Reads this->grad and accumulates into the parents it captured.
  std::function<void(Node &)> backward;

  Tensor &grad_buffer();
};

// Handle to a value recorded on a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph *graph, std::shared_ptr<Node> node) : graph_(graph), node_(std::move(node)) {}

  const Tensor &value() const { return node_->value; }
  const std::vector<int> &shape() const { return node_->value.shape(); }
  int rows() const { return node_->value.rows(); }
  int cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }

  Graph *graph() const { return graph_; }
  Node &node() const { return *node_; }
  const std::shared_ptr<Node> &node_ptr() const { return node_; }

 private:
  Graph *graph_ = nullptr;
  std::shared_ptr<Node> node_;
};

// Records operations in execution order. Backward walks the tape in reverse,
// which is a valid reverse topological order. A graph constructed with
// record=false only computes values (inference).
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  // One leaf per parameter per graph; gradients land in Parameter::grad.
  Var param(Parameter &p);

  // Creates an op node. `backward` is dropped when nothing upstream needs a
  // gradient or the graph is not recording.
  Var make(Tensor value, std::initializer_list<const Var *> parents,
           std::function<void(Node &)> backward);

  // Seeds d(loss)/d(loss) = 1 and accumulates into parameter gradients.
  void backward(const Var &loss);

  std::size_t tape_size() const { return tape_.size(); }

 private:
  bool record_;
  std::vector<std::shared_ptr<Node>> tape_;
  std::unordered_map<Parameter *, Var> params_;
};

// ---- primitive ops. Matrices are rank-2; "grouped" ops treat a
// (B*T) x C matrix as B sequences of T rows each.

Var matmul(const Var &a, const Var &b);
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
// a: m x n, bias: 1 x n (broadcast over rows).
Var add_bias(const Var &a, const Var &bias);
Var scale(const Var &a, double s);
Var affine(const Var &a, double s, double shift);
Var sigmoid(const Var &a);
Var tanh(const Var &a);
Var relu(const Var &a);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var &a, int offset, int width);
Var reshape(const Var &a, int rows, int cols);
Var sum(const Var &a);

// Rows of `table` picked by ids.
Var embedding(const Var &table, std::span<const int> ids);

// sum_i w_i * -log softmax(logits_i)[target_i]; rows with w_i == 0 are skipped.
Var softmax_cross_entropy(const Var &logits, std::span<const int> targets,
                          std::span<const double> weights);
// sum_i w_i * sum_d (pred_id - target_id)^2.
Var squared_error(const Var &pred, const Tensor &target, std::span<const double> weights);
// sum_i w_i * BCE(sigmoid(z_i), t_i) on an m x 1 logit column.
Var sigmoid_cross_entropy(const Var &logits, std::span<const double> targets,
                          std::span<const double> weights);

// keys: (B*T) x A, q: B x A  ->  row b*T+t = keys[b*T+t] + q[b].
Var add_grouped(const Var &keys, const Var &q);
// Row-wise softmax of B x T scores; positions with mask 0 get weight 0.
Var masked_softmax(const Var &scores, std::span<const double> mask);
// weights: B x T, values: (B*T) x H  ->  B x H.
Var weighted_sum_grouped(const Var &weights, const Var &values);
// Same-padded 1-D convolution along time within each of the B sequences.
// x: (B*T) x Cin, kernel: Cout x (W*Cin), W odd  ->  (B*T) x Cout.
Var conv_time(const Var &x, const Var &kernel, int steps);
// Rows b*T+t for fixed t  ->  B x C.
Var select_time(const Var &x, int steps, int t);
// Inverse of select_time over all t.
Var stack_time(std::span<const Var> per_step);
// Row r: m_r * a_r + (1 - m_r) * b_r.
Var blend_rows(std::span<const double> m, const Var &a, const Var &b);
// Row r scaled by w_r.
Var scale_rows(const Var &a, std::span<const double> w);

// Plain (non-recorded) helpers.
Tensor log_softmax_rows(const Tensor &logits);

}  // namespace bytespeech::core

#endif  // BYTESPEECH_AUTOGRAD_H_
