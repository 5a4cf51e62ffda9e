// tests/unit/test_layers.cc

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

#include <cmath>
#include <random>

#include "bytespeech/layers.h"
#include "bytespeech/optim.h"
#include "doctest.h"

using namespace bytespeech;
using namespace bytespeech::nn;
using core::GradCheckReport;

namespace {

Tensor random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Tensor t = Tensor::matrix(rows, cols);
  for (double &v : t.storage()) v = u(rng);
  return t;
}

Var probe(Graph &g, const Var &x, std::uint64_t seed) {
  return core::sum(core::mul(x, g.constant(random_matrix(x.rows(), x.cols(), seed))));
}

void check_grads(const std::function<Var(Graph &)> &f, ParameterStore &s) {
  const GradCheckReport r = core::grad_check(f, s.pointers(), {.tol = 1e-4});
  INFO("max rel err " << r.max_rel_err);
  for (const auto &name : r.failing) INFO("failing " << name);
  CHECK(r.passed());
}

double sum_row(const Tensor &t, int r) {
  double s = 0;
  for (double v : t.row(r)) s += v;
  return s;
}

}  // namespace

TEST_CASE("frame_stack matches the index formula for all short inputs") {
  for (int left : {0, 1, 3}) {
    for (int stride : {1, 2, 3}) {
      for (int t = 1; t <= 32; ++t) {
        const int d = 2;
        const Tensor x = random_matrix(t, d, static_cast<std::uint64_t>(t));
        const Tensor y = frame_stack(x, left, stride);
        REQUIRE(y.rows() == (t + stride - 1) / stride);
        REQUIRE(y.cols() == d * (left + 1));
        for (int j = 0; j < y.rows(); ++j)
          for (int s = 0; s <= left; ++s)
            for (int k = 0; k < d; ++k) {
              const int src = j * stride - left + s;
              const double expected = src < 0 ? 0.0 : x(src, k);
              REQUIRE(y(j, s * d + k) == expected);
            }
      }
    }
  }
}

TEST_CASE("frame_stack boundary cases") {
  const Tensor x = random_matrix(9, 2, 1);
  const Tensor y = frame_stack(x);
  CHECK(y.rows() == 3);
  CHECK(y.cols() == 8);
  for (int k = 0; k < 6; ++k) CHECK(y(0, k) == 0.0);
  CHECK(y(0, 6) == x(0, 0));
  CHECK(frame_stack(random_matrix(1, 2, 2)).rows() == 1);
  CHECK(frame_stack(x, 0, 1) == x);
}

TEST_CASE("language vectors") {
  const LanguageVector en = LanguageVector::one_hot(4, 0);
  const std::vector<double> in{0.5, 0.25};
  CHECK(concat_language(in, en) == std::vector<double>{0.5, 0.25, 1, 0, 0, 0});
  CHECK(LanguageVector::none(3).values() == std::vector<double>{0, 0, 0});
  CHECK_THROWS(LanguageVector::one_hot(2, 2));

  Graph g;
  Var x = g.constant(random_matrix(2, 3, 4));
  const LanguageVector langs[] = {LanguageVector::one_hot(2, 1), LanguageVector::none(2)};
  Var y = concat_language(x, langs);
  CHECK(y.cols() == 5);
  CHECK(y.value()(0, 4) == 1.0);
  CHECK(y.value()(1, 3) == 0.0);
}

TEST_CASE("zeroed language slots reproduce the unconditioned layer") {
  ParameterStore plain_store, lang_store;
  Linear plain(plain_store, "l", 3, 4, 7);
  Linear cond(lang_store, "l", 5, 4, 7, 2);
  // Copy shared rows and zero the language rows.
  Tensor &w = cond.weight()->value;
  w.fill(0.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) w(r, c) = plain.weight()->value(r, c);
  cond.bias()->value = plain.bias()->value;

  Graph g;
  Var x = g.constant(random_matrix(2, 3, 5));
  const LanguageVector zeros[] = {LanguageVector::none(2), LanguageVector::none(2)};
  const LanguageVector hot[] = {LanguageVector::one_hot(2, 0), LanguageVector::one_hot(2, 1)};
  CHECK(plain.forward(g, x).value() == cond.forward(g, concat_language(x, zeros)).value());
  // Zero slot weights also ignore a hot vector.
  CHECK(plain.forward(g, x).value() == cond.forward(g, concat_language(x, hot)).value());
}

TEST_CASE("different language vectors change a random layer's output") {
  ParameterStore s;
  LstmCell cell(s, "cell", 3 + 2, 4, 9, 2);
  Graph g;
  Var x = g.constant(random_matrix(1, 3, 6));
  const LanguageVector a[] = {LanguageVector::one_hot(2, 0)};
  const LanguageVector b[] = {LanguageVector::one_hot(2, 1)};
  const auto st = cell.zero_state(g, 1);
  CHECK_FALSE(cell.step(g, concat_language(x, a), st).h.value() ==
              cell.step(g, concat_language(x, b), st).h.value());
}

TEST_CASE("lstm cell") {
  ParameterStore s;
  LstmCell cell(s, "cell", 3, 4, 1, 0, 0.0);
  for (auto &p : s) p->value.fill(0.0);
  Graph g;
  auto st = cell.step(g, g.constant(Tensor::matrix(2, 3)), cell.zero_state(g, 2));
  for (double v : st.h.value().values()) CHECK(v == 0.0);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    ParameterStore ps;
    LstmCell c(ps, "c", 3, 4, seed);
    const Tensor xs = random_matrix(5 * 2, 3, seed + 50);
    check_grads(
        [&](Graph &gr) {
          auto state = c.zero_state(gr, 2);
          Var total;
          for (int t = 0; t < 5; ++t) {
            Var x = core::select_time(gr.constant(xs), 5, t);
            state = c.step(gr, x, state);
            Var p = probe(gr, state.h, seed + static_cast<std::uint64_t>(t));
            total = total.valid() ? core::add(total, p) : p;
          }
          return total;
        },
        ps);
  }
}

TEST_CASE("large forget bias keeps early input in memory") {
  ParameterStore s;
  LstmCell cell(s, "cell", 2, 3, 4, 0, 30.0);
  auto run = [&](double first) {
    Graph g;
    auto st = cell.zero_state(g, 1);
    for (int t = 0; t < 11; ++t) {
      Tensor x = Tensor::matrix(1, 2);
      if (t == 0) x.fill(first);
      st = cell.step(g, g.constant(x), st);
    }
    return st.h.value();
  };
  const Tensor a = run(1.0), b = run(-1.0);
  double diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
  CHECK(diff > 1e-3);
}

TEST_CASE("linear, embedding and conv gradients") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    ParameterStore s;
    Linear lin(s, "lin", 4, 3, seed);
    Embedding emb(s, "emb", 6, 4, seed);
    Conv1d conv(s, "conv", 3, 2, 5, seed);
    const std::vector<int> ids{5, 1, 1, 0, 2, 3};
    check_grads(
        [&](Graph &g) {
          Var e = emb.forward(g, ids);
          Var h = core::relu(lin.forward(g, e));
          return probe(g, conv.forward(g, h, 3), seed);
        },
        s);
  }
  const GradCheckReport tight = [] {
    ParameterStore s;
    Linear lin(s, "lin", 3, 2, 3);
    const Tensor x = random_matrix(4, 3, 8);
    return core::grad_check(
        [&](Graph &g) { return probe(g, lin.forward(g, g.constant(x)), 2); }, s.pointers(),
        {.tol = 1e-6});
  }();
  CHECK(tight.passed());
}

TEST_CASE("additive attention") {
  ParameterStore s;
  AdditiveAttention att(s, "att", 3, 4, 5, 4, 6, 1);
  Graph g;
  Var q = g.constant(random_matrix(1, 3, 2));

  // Single key: every head puts all its weight there.
  auto one = att.prepare(g, g.constant(random_matrix(1, 4, 3)), 1, 1, {1.0});
  auto r1 = att.attend(g, one, q);
  REQUIRE(r1.weights.size() == 4);
  for (const Var &w : r1.weights) CHECK(w.value()[0] == 1.0);
  CHECK(r1.context.cols() == 6);

  // Identical keys: uniform weights.
  Tensor same = Tensor::matrix(5, 4);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c) same(r, c) = 0.1 * c;
  auto mem = att.prepare(g, g.constant(same), 1, 5, std::vector<double>(5, 1.0));
  for (const Var &w : att.attend(g, mem, q).weights)
    for (double v : w.value().values()) CHECK(std::abs(v - 0.2) < 1e-9);

  // Random keys with padding: weights are a distribution over real steps.
  auto padded = att.prepare(g, g.constant(random_matrix(2 * 4, 4, 4)), 2, 4,
                            length_mask(std::vector<int>{4, 2}, 4));
  auto r2 = att.attend(g, padded, g.constant(random_matrix(2, 3, 5)));
  for (const Var &w : r2.weights) {
    for (int b = 0; b < 2; ++b) {
      CHECK(std::abs(sum_row(w.value(), b) - 1.0) < 1e-9);
      for (double v : w.value().row(b)) CHECK(v >= 0.0);
    }
    CHECK(w.value()(1, 2) == 0.0);
    CHECK(w.value()(1, 3) == 0.0);
  }

  CHECK_THROWS_AS(att.prepare(g, g.constant(Tensor::matrix(0, 4)), 1, 0, {}),
                  EmptyKeySequenceError);
  CHECK_THROWS_AS(att.prepare(g, g.constant(random_matrix(3, 4, 1)), 1, 2, {1, 1}),
                  LengthMismatchError);
}

TEST_CASE("attention gradients") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    ParameterStore s;
    AdditiveAttention att(s, "att", 3, 4, 5, 2, 3, seed);
    LocationSensitiveAttention loc(s, "loc", 3, 4, 5, 3, 2, 3, seed);
    Parameter &keys = s.add("keys", {2 * 3, 4});
    core::init_uniform(keys, seed, 1.0);
    const Tensor q = random_matrix(2, 3, seed + 7);
    const Tensor cumulative = random_matrix(2, 3, seed + 8, 0.5);
    const std::vector<double> mask{1, 1, 1, 1, 1, 0};
    check_grads(
        [&](Graph &g) {
          auto m1 = att.prepare(g, g.param(keys), 2, 3, mask);
          auto m2 = loc.prepare(g, g.param(keys), 2, 3, mask);
          Var a = att.attend(g, m1, g.constant(q)).context;
          Var b = loc.attend(g, m2, g.constant(q), g.constant(cumulative)).context;
          return core::add(probe(g, a, seed), probe(g, b, seed + 1));
        },
        s);
  }
}

TEST_CASE("location-sensitive attention without location terms is additive attention") {
  ParameterStore s;
  LocationSensitiveAttention loc(s, "att", 3, 4, 5, 6, 2, 3, 11);
  loc.location_kernel()->value.fill(0.0);
  loc.location_projection()->value.fill(0.0);
  Graph g;
  Var keys = g.constant(random_matrix(2 * 4, 4, 1));
  Var q = g.constant(random_matrix(2, 3, 2));
  auto mem = loc.prepare(g, keys, 2, 4, length_mask(std::vector<int>{4, 3}, 4));
  auto a = loc.attend(g, mem, q, g.constant(random_matrix(2, 4, 3)));
  auto b = loc.base().attend(g, mem, q);
  CHECK(a.context.value() == b.context.value());
  CHECK(a.weights[0].value() == b.weights[0].value());

  auto single = loc.prepare(g, g.constant(random_matrix(1, 4, 5)), 1, 1, {1.0});
  CHECK(loc.attend(g, single, g.constant(random_matrix(1, 3, 6)),
                   g.constant(Tensor::matrix(1, 1)))
            .weights[0]
            .value()[0] == 1.0);
  CHECK_THROWS_AS(loc.attend(g, mem, q, g.constant(Tensor::matrix(2, 3))), LengthMismatchError);
}

TEST_CASE("length mask") {
  CHECK(length_mask(std::vector<int>{2, 0, 3}, 3) ==
        std::vector<double>{1, 1, 0, 0, 0, 0, 1, 1, 1});
}
