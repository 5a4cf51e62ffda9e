// src/autograd.cc

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

#include "bytespeech/autograd.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bytespeech::core {

Tensor &Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape());
  return grad;
}

Var Graph::constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(this, std::move(n));
}

Var Graph::param(Parameter &p) {
  auto it = params_.find(&p);
  if (it != params_.end()) return it->second;
  auto n = std::make_shared<Node>();
  n->value = p.value;
  n->param = &p;
  n->requires_grad = record_;
  if (record_) tape_.push_back(n);
  Var v(this, std::move(n));
  params_.emplace(&p, v);
  return v;
}

Var Graph::make(Tensor value, std::initializer_list<const Var *> parents,
                std::function<void(Node &)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (record_) {
    for (const Var *p : parents) {
      if (p->requires_grad()) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (n->requires_grad) {
    n->backward = std::move(backward);
    tape_.push_back(n);
  }
  return Var(this, std::move(n));
}

void Graph::backward(const Var &loss) {
  if (!record_) throw std::logic_error("backward on a non-recording graph");
  if (loss.value().size() != 1) throw std::invalid_argument("backward needs a scalar loss");
  if (!loss.requires_grad()) return;
  loss.node().grad_buffer()[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node &n = **it;
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(n);
  }
  for (auto &n : tape_) {
    if (!n->param || n->grad.empty()) continue;
    std::span<double> dst = n->param->grad.values();
    std::span<const double> src = n->grad.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

namespace {

void require(bool ok, const char *op, const std::string &what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

void require_same(const Var &a, const Var &b, const char *op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

// Accumulates into a parent's gradient when it wants one.
template <typename F>
void into(const std::shared_ptr<Node> &parent, F &&f) {
  if (parent->requires_grad) f(parent->grad_buffer());
}

}  // namespace

Var matmul(const Var &a, const Var &b) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == k, "matmul",
          "inner dims " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor out = Tensor::matrix(m, n);
  const double *A = a.value().data();
  const double *B = b.value().data();
  double *C = out.data();
  for (int i = 0; i < m; ++i) {
    double *c = C + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = A[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0) continue;
      const double *brow = B + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  auto an = a.node_ptr(), bn = b.node_ptr();
  return a.graph()->make(std::move(out), {&a, &b}, [an, bn, m, k, n](Node &self) {
    const double *G = self.grad.data();
    into(an, [&](Tensor &ga) {
      const double *B = bn->value.data();
      double *dA = ga.data();
      for (int i = 0; i < m; ++i) {
        const double *g = G + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double *brow = B + static_cast<std::size_t>(p) * n;
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += g[j] * brow[j];
          dA[static_cast<std::size_t>(i) * k + p] += s;
        }
      }
    });
    into(bn, [&](Tensor &gb) {
      const double *A = an->value.data();
      double *dB = gb.data();
      for (int i = 0; i < m; ++i) {
        const double *g = G + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double av = A[static_cast<std::size_t>(i) * k + p];
          if (av == 0.0) continue;
          double *drow = dB + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) drow[j] += av * g[j];
        }
      }
    });
  });
}

Var add(const Var &a, const Var &b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  std::span<const double> bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  auto an = a.node_ptr(), bn = b.node_ptr();
  return a.graph()->make(std::move(out), {&a, &b}, [an, bn](Node &self) {
    const Tensor &g = self.grad;
    into(an, [&](Tensor &ga) { for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i]; });
    into(bn, [&](Tensor &gb) { for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i]; });
  });
}

Var sub(const Var &a, const Var &b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  std::span<const double> bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  auto an = a.node_ptr(), bn = b.node_ptr();
  return a.graph()->make(std::move(out), {&a, &b}, [an, bn](Node &self) {
    const Tensor &g = self.grad;
    into(an, [&](Tensor &ga) { for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i]; });
    into(bn, [&](Tensor &gb) { for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i]; });
  });
}

Var mul(const Var &a, const Var &b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  std::span<const double> bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  auto an = a.node_ptr(), bn = b.node_ptr();
  return a.graph()->make(std::move(out), {&a, &b}, [an, bn](Node &self) {
    const Tensor &g = self.grad;
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
    });
    into(bn, [&](Tensor &gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
    });
  });
}

Var add_bias(const Var &a, const Var &bias) {
  const int m = a.rows(), n = a.cols();
  require(static_cast<int>(bias.value().size()) == n, "add_bias", "bias width mismatch");
  Tensor out = a.value();
  const double *b = bias.value().data();
  for (int i = 0; i < m; ++i) {
    double *row = out.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += b[j];
  }
  auto an = a.node_ptr(), bn = bias.node_ptr();
  return a.graph()->make(std::move(out), {&a, &bias}, [an, bn, m, n](Node &self) {
    const Tensor &g = self.grad;
    into(an, [&](Tensor &ga) { for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i]; });
    into(bn, [&](Tensor &gb) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) gb[static_cast<std::size_t>(j)] += g(i, j);
    });
  });
}

Var affine(const Var &a, double s, double shift) {
  Tensor out = a.value();
  for (double &x : out.values()) x = s * x + shift;
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an, s](Node &self) {
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * self.grad[i];
    });
  });
}

Var scale(const Var &a, double s) { return affine(a, s, 0.0); }

Var sigmoid(const Var &a) {
  Tensor out = a.value();
  for (double &x : out.values()) x = 1.0 / (1.0 + std::exp(-x));
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an](Node &self) {
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double y = self.value[i];
        ga[i] += self.grad[i] * y * (1.0 - y);
      }
    });
  });
}

Var tanh(const Var &a) {
  Tensor out = a.value();
  for (double &x : out.values()) x = std::tanh(x);
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an](Node &self) {
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double y = self.value[i];
        ga[i] += self.grad[i] * (1.0 - y * y);
      }
    });
  });
}

Var relu(const Var &a) {
  Tensor out = a.value();
  for (double &x : out.values()) x = x > 0.0 ? x : 0.0;
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an](Node &self) {
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (an->value[i] > 0.0) ga[i] += self.grad[i];
    });
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const int m = parts[0].rows();
  int total = 0;
  for (const Var &p : parts) {
    require(p.rows() == m, "concat_cols", "row count mismatch");
    total += p.cols();
  }
  Tensor out = Tensor::matrix(m, total);
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<int> widths;
  int off = 0;
  for (const Var &p : parts) {
    const int w = p.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j) out(i, off + j) = p.value()(i, j);
    off += w;
    nodes.push_back(p.node_ptr());
    widths.push_back(w);
  }
  // make() only needs one parent that requires a gradient, if any does.
  const Var *rep = &parts[0];
  for (const Var &p : parts)
    if (p.requires_grad()) rep = &p;
  return parts[0].graph()->make(std::move(out), {rep}, [nodes, widths, m, total](Node &self) {
    int off = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const int w = widths[k];
      into(nodes[k], [&](Tensor &g) {
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < w; ++j)
            g[static_cast<std::size_t>(i) * w + j] +=
                self.grad[static_cast<std::size_t>(i) * total + off + j];
      });
      off += w;
    }
  });
}

Var slice_cols(const Var &a, int offset, int width) {
  const int m = a.rows(), n = a.cols();
  require(offset >= 0 && width >= 0 && offset + width <= n, "slice_cols", "range out of bounds");
  Tensor out = Tensor::matrix(m, width);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < width; ++j) out(i, j) = a.value()(i, offset + j);
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an, m, n, offset, width](Node &self) {
    into(an, [&](Tensor &ga) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < width; ++j)
          ga[static_cast<std::size_t>(i) * n + offset + j] +=
              self.grad[static_cast<std::size_t>(i) * width + j];
    });
  });
}

Var reshape(const Var &a, int rows, int cols) {
  require(static_cast<std::size_t>(rows) * cols == a.value().size(), "reshape",
          "element count mismatch");
  Tensor out = a.value();
  out.reshape({rows, cols});
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an](Node &self) {
    into(an, [&](Tensor &ga) {
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    });
  });
}

Var sum(const Var &a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  auto an = a.node_ptr();
  return a.graph()->make(Tensor::scalar(s), {&a}, [an](Node &self) {
    into(an, [&](Tensor &ga) {
      const double g = self.grad[0];
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
  });
}

Var embedding(const Var &table, std::span<const int> ids) {
  const int v = table.rows(), e = table.cols();
  const int m = static_cast<int>(ids.size());
  Tensor out = Tensor::matrix(m, e);
  std::vector<int> idx(ids.begin(), ids.end());
  for (int i = 0; i < m; ++i) {
    require(idx[static_cast<std::size_t>(i)] >= 0 && idx[static_cast<std::size_t>(i)] < v,
            "embedding", "id out of range");
    for (int j = 0; j < e; ++j) out(i, j) = table.value()(idx[static_cast<std::size_t>(i)], j);
  }
  auto tn = table.node_ptr();
  return table.graph()->make(std::move(out), {&table}, [tn, idx, e](Node &self) {
    into(tn, [&](Tensor &gt) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < e; ++j)
          gt(idx[i], j) += self.grad[i * static_cast<std::size_t>(e) + j];
    });
  });
}

Var softmax_cross_entropy(const Var &logits, std::span<const int> targets,
                          std::span<const double> weights) {
  const int m = logits.rows(), v = logits.cols();
  require(static_cast<int>(targets.size()) == m && static_cast<int>(weights.size()) == m,
          "softmax_cross_entropy", "targets/weights length mismatch");
  // Cache probabilities for the backward pass.
  Tensor probs = Tensor::matrix(m, v);
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    if (weights[static_cast<std::size_t>(i)] == 0.0) continue;
    const int t = targets[static_cast<std::size_t>(i)];
    require(t >= 0 && t < v, "softmax_cross_entropy", "target out of range");
    std::span<const double> row = logits.value().row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : row) mx = x > mx ? x : mx;
    double z = 0.0;
    for (int j = 0; j < v; ++j) {
      const double e = std::exp(row[static_cast<std::size_t>(j)] - mx);
      probs(i, j) = e;
      z += e;
    }
    for (int j = 0; j < v; ++j) probs(i, j) /= z;
    loss += weights[static_cast<std::size_t>(i)] *
            -(row[static_cast<std::size_t>(t)] - mx - std::log(z));
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  auto ln = logits.node_ptr();
  return logits.graph()->make(
      Tensor::scalar(loss), {&logits},
      [ln, probs = std::move(probs), tgt, w, m, v](Node &self) {
        into(ln, [&](Tensor &gl) {
          const double g = self.grad[0];
          for (int i = 0; i < m; ++i) {
            const double wi = w[static_cast<std::size_t>(i)];
            if (wi == 0.0) continue;
            for (int j = 0; j < v; ++j) gl(i, j) += g * wi * probs(i, j);
            gl(i, tgt[static_cast<std::size_t>(i)]) -= g * wi;
          }
        });
      });
}

Var squared_error(const Var &pred, const Tensor &target, std::span<const double> weights) {
  const int m = pred.rows(), d = pred.cols();
  require(target.rows() == m && target.cols() == d, "squared_error", "target shape mismatch");
  require(static_cast<int>(weights.size()) == m, "squared_error", "weights length mismatch");
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double wi = weights[static_cast<std::size_t>(i)];
    if (wi == 0.0) continue;
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double r = pred.value()(i, j) - target(i, j);
      s += r * r;
    }
    loss += wi * s;
  }
  std::vector<double> w(weights.begin(), weights.end());
  auto pn = pred.node_ptr();
  return pred.graph()->make(Tensor::scalar(loss), {&pred}, [pn, target, w, m, d](Node &self) {
    into(pn, [&](Tensor &gp) {
      const double g = self.grad[0];
      for (int i = 0; i < m; ++i) {
        const double wi = w[static_cast<std::size_t>(i)];
        if (wi == 0.0) continue;
        for (int j = 0; j < d; ++j) gp(i, j) += g * wi * 2.0 * (pn->value(i, j) - target(i, j));
      }
    });
  });
}

Var sigmoid_cross_entropy(const Var &logits, std::span<const double> targets,
                          std::span<const double> weights) {
  const int m = logits.rows();
  require(logits.cols() == 1, "sigmoid_cross_entropy", "logits must be a column");
  require(static_cast<int>(targets.size()) == m && static_cast<int>(weights.size()) == m,
          "sigmoid_cross_entropy", "targets/weights length mismatch");
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double wi = weights[static_cast<std::size_t>(i)];
    if (wi == 0.0) continue;
    const double z = logits.value()[static_cast<std::size_t>(i)];
    const double t = targets[static_cast<std::size_t>(i)];
    // softplus(z) - t*z, computed stably.
    const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += wi * (sp - t * z);
  }
  std::vector<double> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  auto ln = logits.node_ptr();
  return logits.graph()->make(Tensor::scalar(loss), {&logits}, [ln, t, w, m](Node &self) {
    into(ln, [&](Tensor &gl) {
      const double g = self.grad[0];
      for (int i = 0; i < m; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (w[k] == 0.0) continue;
        const double p = 1.0 / (1.0 + std::exp(-ln->value[k]));
        gl[k] += g * w[k] * (p - t[k]);
      }
    });
  });
}

Var add_grouped(const Var &keys, const Var &q) {
  const int bt = keys.rows(), a = keys.cols(), b = q.rows();
  require(q.cols() == a, "add_grouped", "width mismatch");
  require(b > 0 && bt % b == 0, "add_grouped", "rows not divisible by batch");
  const int steps = bt / b;
  Tensor out = keys.value();
  for (int r = 0; r < bt; ++r) {
    const double *qr = q.value().data() + static_cast<std::size_t>(r / steps) * a;
    double *o = out.data() + static_cast<std::size_t>(r) * a;
    for (int j = 0; j < a; ++j) o[j] += qr[j];
  }
  auto kn = keys.node_ptr(), qn = q.node_ptr();
  return keys.graph()->make(std::move(out), {&keys, &q}, [kn, qn, bt, a, steps](Node &self) {
    into(kn, [&](Tensor &gk) {
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += self.grad[i];
    });
    into(qn, [&](Tensor &gq) {
      for (int r = 0; r < bt; ++r) {
        double *g = gq.data() + static_cast<std::size_t>(r / steps) * a;
        const double *s = self.grad.data() + static_cast<std::size_t>(r) * a;
        for (int j = 0; j < a; ++j) g[j] += s[j];
      }
    });
  });
}

Var masked_softmax(const Var &scores, std::span<const double> mask) {
  const int b = scores.rows(), t = scores.cols();
  require(mask.size() == scores.value().size(), "masked_softmax", "mask size mismatch");
  Tensor out = Tensor::matrix(b, t);
  for (int i = 0; i < b; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < t; ++j)
      if (mask[static_cast<std::size_t>(i) * t + j] != 0.0) mx = std::max(mx, scores.value()(i, j));
    require(std::isfinite(mx), "masked_softmax", "row has no unmasked entries");
    double z = 0.0;
    for (int j = 0; j < t; ++j) {
      if (mask[static_cast<std::size_t>(i) * t + j] == 0.0) continue;
      const double e = std::exp(scores.value()(i, j) - mx);
      out(i, j) = e;
      z += e;
    }
    for (int j = 0; j < t; ++j) out(i, j) /= z;
  }
  auto sn = scores.node_ptr();
  return scores.graph()->make(std::move(out), {&scores}, [sn, b, t](Node &self) {
    into(sn, [&](Tensor &gs) {
      for (int i = 0; i < b; ++i) {
        double dot = 0.0;
        for (int j = 0; j < t; ++j) dot += self.grad(i, j) * self.value(i, j);
        for (int j = 0; j < t; ++j) gs(i, j) += self.value(i, j) * (self.grad(i, j) - dot);
      }
    });
  });
}

Var weighted_sum_grouped(const Var &weights, const Var &values) {
  const int b = weights.rows(), t = weights.cols(), h = values.cols();
  require(values.rows() == b * t, "weighted_sum_grouped", "values rows != B*T");
  Tensor out = Tensor::matrix(b, h);
  for (int i = 0; i < b; ++i) {
    double *o = out.data() + static_cast<std::size_t>(i) * h;
    for (int j = 0; j < t; ++j) {
      const double w = weights.value()(i, j);
      if (w == 0.0) continue;
      const double *v = values.value().data() + (static_cast<std::size_t>(i) * t + j) * h;
      for (int k = 0; k < h; ++k) o[k] += w * v[k];
    }
  }
  auto wn = weights.node_ptr(), vn = values.node_ptr();
  return weights.graph()->make(std::move(out), {&weights, &values},
                               [wn, vn, b, t, h](Node &self) {
    into(wn, [&](Tensor &gw) {
      for (int i = 0; i < b; ++i) {
        const double *g = self.grad.data() + static_cast<std::size_t>(i) * h;
        for (int j = 0; j < t; ++j) {
          const double *v = vn->value.data() + (static_cast<std::size_t>(i) * t + j) * h;
          double s = 0.0;
          for (int k = 0; k < h; ++k) s += g[k] * v[k];
          gw(i, j) += s;
        }
      }
    });
    into(vn, [&](Tensor &gv) {
      for (int i = 0; i < b; ++i) {
        const double *g = self.grad.data() + static_cast<std::size_t>(i) * h;
        for (int j = 0; j < t; ++j) {
          const double w = wn->value(i, j);
          if (w == 0.0) continue;
          double *d = gv.data() + (static_cast<std::size_t>(i) * t + j) * h;
          for (int k = 0; k < h; ++k) d[k] += w * g[k];
        }
      }
    });
  });
}

Var conv_time(const Var &x, const Var &kernel, int steps) {
  const int bt = x.rows(), cin = x.cols(), cout = kernel.rows();
  require(steps > 0 && bt % steps == 0, "conv_time", "rows not divisible by steps");
  require(kernel.cols() % cin == 0, "conv_time", "kernel width not a multiple of channels");
  const int width = kernel.cols() / cin;
  require(width % 2 == 1, "conv_time", "kernel width must be odd");
  const int half = width / 2;
  Tensor out = Tensor::matrix(bt, cout);
  const double *X = x.value().data();
  const double *K = kernel.value().data();
  for (int r = 0; r < bt; ++r) {
    const int t = r % steps;
    double *o = out.data() + static_cast<std::size_t>(r) * cout;
    for (int w = 0; w < width; ++w) {
      const int src = t + w - half;
      if (src < 0 || src >= steps) continue;
      const double *xr = X + static_cast<std::size_t>(r + w - half) * cin;
      for (int co = 0; co < cout; ++co) {
        const double *k = K + static_cast<std::size_t>(co) * width * cin + w * cin;
        double s = 0.0;
        for (int ci = 0; ci < cin; ++ci) s += k[ci] * xr[ci];
        o[co] += s;
      }
    }
  }
  auto xn = x.node_ptr(), kn = kernel.node_ptr();
  return x.graph()->make(std::move(out), {&x, &kernel},
                         [xn, kn, bt, cin, cout, width, half, steps](Node &self) {
    const double *G = self.grad.data();
    into(xn, [&](Tensor &gx) {
      const double *K = kn->value.data();
      for (int r = 0; r < bt; ++r) {
        const int t = r % steps;
        const double *g = G + static_cast<std::size_t>(r) * cout;
        for (int w = 0; w < width; ++w) {
          const int src = t + w - half;
          if (src < 0 || src >= steps) continue;
          double *dx = gx.data() + static_cast<std::size_t>(r + w - half) * cin;
          for (int co = 0; co < cout; ++co) {
            const double *k = K + static_cast<std::size_t>(co) * width * cin + w * cin;
            for (int ci = 0; ci < cin; ++ci) dx[ci] += g[co] * k[ci];
          }
        }
      }
    });
    into(kn, [&](Tensor &gk) {
      const double *X = xn->value.data();
      for (int r = 0; r < bt; ++r) {
        const int t = r % steps;
        const double *g = G + static_cast<std::size_t>(r) * cout;
        for (int w = 0; w < width; ++w) {
          const int src = t + w - half;
          if (src < 0 || src >= steps) continue;
          const double *xr = X + static_cast<std::size_t>(r + w - half) * cin;
          for (int co = 0; co < cout; ++co) {
            double *dk = gk.data() + static_cast<std::size_t>(co) * width * cin + w * cin;
            for (int ci = 0; ci < cin; ++ci) dk[ci] += g[co] * xr[ci];
          }
        }
      }
    });
  });
}

Var select_time(const Var &x, int steps, int t) {
  const int bt = x.rows(), c = x.cols();
  require(steps > 0 && bt % steps == 0 && t >= 0 && t < steps, "select_time", "bad index");
  const int b = bt / steps;
  Tensor out = Tensor::matrix(b, c);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = x.value()(i * steps + t, j);
  auto xn = x.node_ptr();
  return x.graph()->make(std::move(out), {&x}, [xn, b, c, steps, t](Node &self) {
    into(xn, [&](Tensor &gx) {
      for (int i = 0; i < b; ++i)
        for (int j = 0; j < c; ++j) gx(i * steps + t, j) += self.grad(i, j);
    });
  });
}

Var stack_time(std::span<const Var> per_step) {
  require(!per_step.empty(), "stack_time", "no inputs");
  const int steps = static_cast<int>(per_step.size());
  const int b = per_step[0].rows(), c = per_step[0].cols();
  Tensor out = Tensor::matrix(b * steps, c);
  std::vector<std::shared_ptr<Node>> nodes;
  const Var *rep = &per_step[0];
  for (int t = 0; t < steps; ++t) {
    const Var &v = per_step[static_cast<std::size_t>(t)];
    require(v.rows() == b && v.cols() == c, "stack_time", "shape mismatch");
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < c; ++j) out(i * steps + t, j) = v.value()(i, j);
    nodes.push_back(v.node_ptr());
    if (v.requires_grad()) rep = &v;
  }
  return per_step[0].graph()->make(std::move(out), {rep}, [nodes, b, c, steps](Node &self) {
    for (int t = 0; t < steps; ++t) {
      into(nodes[static_cast<std::size_t>(t)], [&](Tensor &g) {
        for (int i = 0; i < b; ++i)
          for (int j = 0; j < c; ++j) g(i, j) += self.grad(i * steps + t, j);
      });
    }
  });
}

Var blend_rows(std::span<const double> m, const Var &a, const Var &b) {
  require_same(a, b, "blend_rows");
  const int rows = a.rows(), c = a.cols();
  require(static_cast<int>(m.size()) == rows, "blend_rows", "mask length mismatch");
  Tensor out = Tensor::matrix(rows, c);
  for (int i = 0; i < rows; ++i) {
    const double w = m[static_cast<std::size_t>(i)];
    for (int j = 0; j < c; ++j) {
      // Exact selection for 0/1 masks keeps padded rows bit-identical.
      if (w == 1.0) out(i, j) = a.value()(i, j);
      else if (w == 0.0) out(i, j) = b.value()(i, j);
      else out(i, j) = w * a.value()(i, j) + (1.0 - w) * b.value()(i, j);
    }
  }
  std::vector<double> mv(m.begin(), m.end());
  auto an = a.node_ptr(), bn = b.node_ptr();
  return a.graph()->make(std::move(out), {&a, &b}, [an, bn, mv, rows, c](Node &self) {
    into(an, [&](Tensor &ga) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < c; ++j) ga(i, j) += mv[static_cast<std::size_t>(i)] * self.grad(i, j);
    });
    into(bn, [&](Tensor &gb) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < c; ++j)
          gb(i, j) += (1.0 - mv[static_cast<std::size_t>(i)]) * self.grad(i, j);
    });
  });
}

Var scale_rows(const Var &a, std::span<const double> w) {
  const int rows = a.rows(), c = a.cols();
  require(static_cast<int>(w.size()) == rows, "scale_rows", "weights length mismatch");
  Tensor out = a.value();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < c; ++j) out(i, j) *= w[static_cast<std::size_t>(i)];
  std::vector<double> wv(w.begin(), w.end());
  auto an = a.node_ptr();
  return a.graph()->make(std::move(out), {&a}, [an, wv, rows, c](Node &self) {
    into(an, [&](Tensor &ga) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < c; ++j) ga(i, j) += wv[static_cast<std::size_t>(i)] * self.grad(i, j);
    });
  });
}

Tensor log_softmax_rows(const Tensor &logits) {
  Tensor out = logits;
  const int m = logits.rows(), v = logits.cols();
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < v; ++j) mx = std::max(mx, logits(i, j));
    double z = 0.0;
    for (int j = 0; j < v; ++j) z += std::exp(logits(i, j) - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < v; ++j) out(i, j) = logits(i, j) - lz;
  }
  return out;
}

}  // namespace bytespeech::core
