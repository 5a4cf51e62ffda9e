// tests/unit/test_b2a.cc

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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bytespeech/b2a.h"
#include "doctest.h"

using namespace bytespeech;
using namespace bytespeech::b2a;
namespace fs = std::filesystem;

namespace {

B2AConfig tiny() {
  B2AConfig c;
  c.embedding_dim = 4;
  c.conv_layers = 1;
  c.conv_filters = 4;
  c.conv_width = 3;
  c.encoder_width = 3;
  c.decoder_width = 6;
  c.attention_dim = 4;
  c.location_filters = 2;
  c.location_width = 3;
  c.feature_dim = 3;
  c.num_speakers = 2;
  c.speaker_dim = 2;
  return c;
}

}  // namespace

TEST_CASE("parameter count") {
  B2AConfig c;
  c.embedding_dim = 2;
  c.conv_layers = 1;
  c.conv_filters = 3;
  c.conv_width = 3;
  c.encoder_width = 2;
  c.decoder_width = 3;
  c.attention_dim = 2;
  c.location_filters = 1;
  c.location_width = 3;
  c.feature_dim = 2;
  c.num_speakers = 2;
  c.speaker_dim = 1;
  // embed 512, conv 21, encoder 2*48, speakers 2, decoder 132, attention 38,
  // location 5, frame and stop heads 24.
  CHECK(parameter_count(c) == 830);
  CHECK(B2AModel(c).params().num_values() == 830);
  for (const B2AConfig &cfg : {B2AConfig{}, tiny()})
    CHECK(B2AModel(cfg).params().num_values() == parameter_count(cfg));
}

TEST_CASE("construction is deterministic") {
  const B2AModel a(tiny()), b(tiny());
  auto it = a.params().begin();
  for (const auto &p : b.params()) CHECK((*it++)->value == p->value);
  B2AConfig bad = tiny();
  bad.conv_width = 4;
  CHECK_THROWS_AS(B2AModel{bad}, InvalidConfigError);
  bad = tiny();
  bad.stop_threshold = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfigError);
  CHECK(B2AConfig::from_json(tiny().to_json()) == tiny());
}

TEST_CASE("stop labels") {
  CHECK(stop_labels(4) == std::vector<double>{0, 0, 0, 1});
  CHECK(stop_labels(1) == std::vector<double>{1});
  CHECK(stop_labels(0).empty());
}

TEST_CASE("full-model gradient check") {
  B2AModel m(tiny());
  corpus::SynthProfile p;
  p.dim = 3;
  p.kmin = p.kmax = 2;
  const auto f1 = corpus::synth_features(U"ab", p, 1);
  const auto f2 = corpus::synth_features(U"カ", p, 2);
  const std::vector<B2AExample> one{{text::encode_bytes(U"ab"), &f1, 0}};
  const std::vector<B2AExample> two{{text::encode_bytes(U"ab"), &f1, 0},
                                    {text::encode_bytes(U"カ"), &f2, 1}};
  for (const auto *batch : {&one, &two}) {
    const auto r = core::grad_check([&](Graph &g) { return m.loss(g, *batch); },
                                    m.params().pointers(), {.tol = 1e-4});
    INFO("max rel err " << r.max_rel_err);
    CHECK(r.passed());
  }
  // Three frames per step; "カ" has 2 frames, so its only step is partial.
  B2AConfig c = tiny();
  c.frames_per_step = 3;
  B2AModel grouped(c);
  const auto r = core::grad_check([&](Graph &g) { return grouped.loss(g, two); },
                                  grouped.params().pointers(), {.tol = 1e-4});
  INFO("grouped max rel err " << r.max_rel_err);
  CHECK(r.passed());
}

TEST_CASE("memorizes a tiny noiseless corpus") {
  B2AConfig c;
  c.encoder_width = 16;
  c.decoder_width = 32;
  c.attention_dim = 16;
  c.conv_filters = 16;
  c.embedding_dim = 16;
  B2AModel m(c);
  corpus::SynthProfile p;
  p.noise_sigma = 0.0;
  p.kmin = p.kmax = 3;
  const std::vector<std::u32string> texts{U"ab", U"ba", U"abc"};
  std::vector<corpus::FeatureMatrix> feats;
  for (std::size_t i = 0; i < texts.size(); ++i) feats.push_back(corpus::synth_features(texts[i], p, i));
  std::vector<B2AExample> batch;
  for (std::size_t i = 0; i < texts.size(); ++i)
    batch.push_back({text::encode_bytes(texts[i]), &feats[i], 0});
  B2ATrainer t(m, core::AdamConfig{.lr = 0.01, .clip_norm = 5.0});
  double first = t.train_step(batch), last = first;
  for (int s = 0; s < 150; ++s) last = t.train_step(batch);
  CHECK(last < 0.25 * first);
}

TEST_CASE("synthesis contract") {
  const B2AModel m(tiny());
  const auto r = m.synthesize(text::encode_bytes(U"aカ"), 1, 20);
  CHECK(r.frames.rows() == static_cast<int>(r.stop_probabilities.size()));
  CHECK(r.alignment.size() == r.stop_probabilities.size());
  CHECK(r.frames.rows() <= 20);
  for (double p : r.stop_probabilities) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  for (const auto &w : r.alignment) {
    double total = 0;
    for (double v : w) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(w.size() == 5);  // four bytes plus the terminator
  }
  CHECK(r.max_frames_exceeded == (r.stop_probabilities.back() <= 0.5));

  // Empty input is well-formed; synthesis still terminates.
  const auto empty = m.synthesize({}, 0, 5);
  CHECK(empty.frames.rows() >= 1);
  CHECK(empty.frames.rows() <= 5);

  CHECK_THROWS_AS(m.synthesize(text::ByteSeq{0xE3, 0x82}, 0, 5), IllFormedInputError);

  // Grouped decoding: one alignment row per decoder step, frames capped.
  B2AConfig c = tiny();
  c.frames_per_step = 3;
  const B2AModel grouped(c);
  const auto g = grouped.synthesize(text::encode_bytes(U"ab"), 0, 7);
  CHECK(g.frames.rows() == static_cast<int>(g.stop_probabilities.size()));
  CHECK(g.frames.rows() <= 7);
  CHECK(g.alignment.size() == static_cast<std::size_t>((g.frames.rows() + 2) / 3));
  CHECK_THROWS_AS(m.synthesize(text::ByteSeq{0x61}, 2, 5), DataError);

  const auto again = m.synthesize(text::encode_bytes(U"aカ"), 1, 20);
  CHECK(again.frames == r.frames);
}

TEST_CASE("byte input never changes model shape") {
  const B2AModel m(tiny());
  const std::int64_t n = m.params().num_values();
  for (const char32_t *t : {U"hello", U"カタカナ", U"한국어", U"mixed カタ text"}) {
    CHECK_NOTHROW(m.synthesize(text::encode_bytes(t), 0, 3));
    CHECK(m.params().num_values() == n);
  }
}

TEST_CASE("frame error and monotonicity metrics") {
  corpus::FeatureMatrix a = corpus::FeatureMatrix::matrix(2, 2, 1.0);
  corpus::FeatureMatrix b = corpus::FeatureMatrix::matrix(3, 2, 1.0);
  CHECK(frame_mse(a, a) == 0.0);
  CHECK(frame_mse(a, b) == doctest::Approx(2.0 / 6.0));
  CHECK_THROWS_AS(frame_mse(a, corpus::FeatureMatrix::matrix(2, 3)), ShapeMismatchError);

  CHECK(monotonic_fraction({}) == 1.0);
  CHECK(monotonic_fraction({{1, 0, 0}, {0.5, 0.5, 0}, {0, 0, 1}}) == 1.0);
  CHECK(monotonic_fraction({{0, 0, 1}, {0, 1, 0}, {0, 0.5, 0.5}}) == doctest::Approx(0.5));
}

TEST_CASE("checkpoint round trip and stop sidecar") {
  const fs::path dir = fs::temp_directory_path() / "bytespeech_b2a";
  fs::create_directories(dir);
  B2AModel m(tiny());
  core::Adam adam;
  save_checkpoint(dir / "m.ckpt", m, &adam, 7);
  std::int64_t step = 0;
  core::Adam restored;
  const B2AModel back = load_model(dir / "m.ckpt", &restored, &step);
  CHECK(step == 7);
  CHECK(back.config() == m.config());
  auto it = back.params().begin();
  for (const auto &p : m.params()) CHECK((*it++)->value == p->value);
  CHECK_THROWS_AS(load_model(dir / "none.ckpt"), CheckpointMissingError);

  SynthesisResult r;
  r.stop_probabilities = {0.25, 0.75};
  std::ostringstream os;
  write_stop_sidecar(os, r);
  CHECK(os.str() == "0\t0.250000\n1\t0.750000\n");
}
