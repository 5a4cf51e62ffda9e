// src/b2a.cc

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

#include "bytespeech/b2a.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

#include "bytespeech/checkpoint.h"
#include "bytespeech/hash.h"

namespace bytespeech::b2a {

namespace {

constexpr const char *kMagic = "B2A1";
constexpr int kTerminator = 0xFF;

std::uint64_t layer_seed(std::uint64_t seed, std::string_view part) {
  return hash_combine(seed, hash_string(part));
}

}  // namespace

void B2AConfig::validate() const {
  const std::pair<const char *, int> positive[] = {
      {"embedding_dim", embedding_dim},   {"conv_filters", conv_filters},
      {"conv_width", conv_width},         {"encoder_width", encoder_width},
      {"decoder_width", decoder_width},   {"attention_dim", attention_dim},
      {"location_filters", location_filters}, {"location_width", location_width},
      {"feature_dim", feature_dim},       {"num_speakers", num_speakers},
      {"speaker_dim", speaker_dim},       {"frames_per_step", frames_per_step}};
  for (const auto &[name, v] : positive)
    if (v < 1) throw InvalidConfigError(std::string(name) + " must be >= 1");
  if (conv_layers < 0) throw InvalidConfigError("conv_layers must be >= 0");
  if (conv_width % 2 == 0 || location_width % 2 == 0)
    throw InvalidConfigError("convolution widths must be odd");
  if (!(stop_threshold > 0.0 && stop_threshold < 1.0))
    throw InvalidConfigError("stop_threshold must lie in (0, 1)");
}

std::string B2AConfig::to_json() const {
  nlohmann::json j;
  j["embedding_dim"] = embedding_dim;
  j["conv_layers"] = conv_layers;
  j["conv_filters"] = conv_filters;
  j["conv_width"] = conv_width;
  j["encoder_width"] = encoder_width;
  j["decoder_width"] = decoder_width;
  j["attention_dim"] = attention_dim;
  j["location_filters"] = location_filters;
  j["location_width"] = location_width;
  j["feature_dim"] = feature_dim;
  j["num_speakers"] = num_speakers;
  j["speaker_dim"] = speaker_dim;
  j["frames_per_step"] = frames_per_step;
  j["stop_threshold"] = stop_threshold;
  j["seed"] = seed;
  return j.dump();
}

B2AConfig B2AConfig::from_json(const std::string &json) {
  B2AConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(json);
    c.embedding_dim = j.at("embedding_dim");
    c.conv_layers = j.at("conv_layers");
    c.conv_filters = j.at("conv_filters");
    c.conv_width = j.at("conv_width");
    c.encoder_width = j.at("encoder_width");
    c.decoder_width = j.at("decoder_width");
    c.attention_dim = j.at("attention_dim");
    c.location_filters = j.at("location_filters");
    c.location_width = j.at("location_width");
    c.feature_dim = j.at("feature_dim");
    c.num_speakers = j.at("num_speakers");
    c.speaker_dim = j.at("speaker_dim");
    c.frames_per_step = j.value("frames_per_step", 1);
    c.stop_threshold = j.at("stop_threshold");
    c.seed = j.at("seed");
  } catch (const nlohmann::json::exception &e) {
    throw DataError("BadConfig", std::string("b2a config: ") + e.what());
  }
  c.validate();
  return c;
}

std::int64_t parameter_count(const B2AConfig &c) {
  auto lstm = [](std::int64_t in, std::int64_t h) { return in * 4 * h + h * 4 * h + 4 * h; };
  auto linear = [](std::int64_t in, std::int64_t out) { return in * out + out; };
  const std::int64_t keys = 2 * c.encoder_width;
  std::int64_t n = 256LL * c.embedding_dim;
  std::int64_t in = c.embedding_dim;
  for (int l = 0; l < c.conv_layers; ++l) {
    n += static_cast<std::int64_t>(c.conv_filters) * c.conv_width * in + c.conv_filters;
    in = c.conv_filters;
  }
  n += 2 * lstm(in, c.encoder_width);
  n += static_cast<std::int64_t>(c.num_speakers) * c.speaker_dim;
  n += lstm(c.feature_dim + keys + c.speaker_dim, c.decoder_width);
  n += static_cast<std::int64_t>(c.decoder_width) * c.attention_dim + keys * c.attention_dim +
       c.attention_dim + c.attention_dim + linear(keys, keys);
  n += static_cast<std::int64_t>(c.location_filters) * c.location_width +
       static_cast<std::int64_t>(c.location_filters) * c.attention_dim;
  n += linear(c.decoder_width + keys, static_cast<std::int64_t>(c.feature_dim) * c.frames_per_step) +
       linear(c.decoder_width + keys, c.frames_per_step);
  return n;
}

std::vector<double> stop_labels(int frames) {
  std::vector<double> v(static_cast<std::size_t>(std::max(frames, 0)), 0.0);
  if (frames > 0) v.back() = 1.0;
  return v;
}

B2AModel::B2AModel(B2AConfig config)
    : config_(std::move(config)), store_(std::make_unique<core::ParameterStore>()) {
  config_.validate();
  const B2AConfig &c = config_;
  const std::uint64_t s = c.seed;
  const int keys = 2 * c.encoder_width;
  embedding_ = nn::Embedding(*store_, "embed", 256, c.embedding_dim, layer_seed(s, "embed"));
  int in = c.embedding_dim;
  for (int l = 0; l < c.conv_layers; ++l) {
    const std::string name = "conv" + std::to_string(l);
    convs_.emplace_back(*store_, name, in, c.conv_filters, c.conv_width, layer_seed(s, name));
    in = c.conv_filters;
  }
  forward_ = nn::LstmCell(*store_, "enc_fw", in, c.encoder_width, layer_seed(s, "enc_fw"));
  backward_ = nn::LstmCell(*store_, "enc_bw", in, c.encoder_width, layer_seed(s, "enc_bw"));
  speakers_ = nn::Embedding(*store_, "speaker", c.num_speakers, c.speaker_dim,
                            layer_seed(s, "speaker"));
  decoder_ = nn::LstmCell(*store_, "dec", c.feature_dim + keys + c.speaker_dim, c.decoder_width,
                          layer_seed(s, "dec"));
  attention_ = nn::LocationSensitiveAttention(*store_, "attn", c.decoder_width, keys,
                                              c.attention_dim, keys, c.location_filters,
                                              c.location_width, layer_seed(s, "attn"));
  frame_out_ = nn::Linear(*store_, "frame", c.decoder_width + keys, c.feature_dim * c.frames_per_step,
                          layer_seed(s, "frame"));
  stop_out_ = nn::Linear(*store_, "stop", c.decoder_width + keys, c.frames_per_step,
                         layer_seed(s, "stop"));
}

B2AModel::Encoded B2AModel::encode(Graph &g, std::span<const text::ByteSeq *const> inputs,
                                   std::span<const int> speakers) const {
  using namespace core;
  const int batch = static_cast<int>(inputs.size());
  std::vector<int> lengths;
  int steps = 0;
  for (const text::ByteSeq *b : inputs) {
    lengths.push_back(static_cast<int>(b->size()) + 1);
    steps = std::max(steps, lengths.back());
  }
  std::vector<int> ids(static_cast<std::size_t>(batch * steps), 0);
  for (int b = 0; b < batch; ++b) {
    const text::ByteSeq &bytes = *inputs[static_cast<std::size_t>(b)];
    for (int t = 0; t < steps; ++t) {
      int id = 0;
      if (t < static_cast<int>(bytes.size())) id = bytes[static_cast<std::size_t>(t)];
      else if (t == static_cast<int>(bytes.size())) id = kTerminator;
      ids[static_cast<std::size_t>(b * steps + t)] = id;
    }
  }
  std::vector<double> mask = nn::length_mask(lengths, steps);
  // Padding rows are held at zero between layers so convolutions see the
  // same zero padding at a sequence end whatever the batch.
  Var x = scale_rows(embedding_.forward(g, ids), mask);
  for (const nn::Conv1d &conv : convs_) x = scale_rows(relu(conv.forward(g, x, steps)), mask);

  std::vector<Var> fw(static_cast<std::size_t>(steps)), bw(static_cast<std::size_t>(steps));
  nn::LstmCell::State sf = forward_.zero_state(g, batch);
  for (int t = 0; t < steps; ++t) {
    sf = forward_.step(g, select_time(x, steps, t), sf);
    fw[static_cast<std::size_t>(t)] = sf.h;
  }
  nn::LstmCell::State sb = backward_.zero_state(g, batch);
  for (int t = steps - 1; t >= 0; --t) {
    std::vector<double> m(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) m[static_cast<std::size_t>(b)] = mask[static_cast<std::size_t>(b * steps + t)];
    const nn::LstmCell::State next = backward_.step(g, select_time(x, steps, t), sb);
    sb = {blend_rows(m, next.h, sb.h), blend_rows(m, next.c, sb.c)};
    bw[static_cast<std::size_t>(t)] = sb.h;
  }
  std::vector<Var> joined;
  for (int t = 0; t < steps; ++t) {
    const Var parts[] = {fw[static_cast<std::size_t>(t)], bw[static_cast<std::size_t>(t)]};
    joined.push_back(concat_cols(parts));
  }
  Encoded e;
  e.memory = attention_.prepare(g, stack_time(joined), batch, steps, std::move(mask));
  e.speaker = speakers_.forward(g, speakers);
  return e;
}

B2AModel::Carry B2AModel::initial_carry(Graph &g, const nn::AttentionMemory &memory) const {
  Carry c;
  c.state = decoder_.zero_state(g, memory.batch);
  c.context = g.constant(Tensor::matrix(memory.batch, 2 * config_.encoder_width));
  c.cumulative = g.constant(Tensor::matrix(memory.batch, memory.steps));
  return c;
}

B2AModel::StepOut B2AModel::decoder_step(Graph &g, const Encoded &enc, const Var &previous_frame,
                                         Carry &carry) const {
  using namespace core;
  const Var in[] = {previous_frame, carry.context, enc.speaker};
  carry.state = decoder_.step(g, concat_cols(in), carry.state);
  nn::AttentionResult att = attention_.attend(g, enc.memory, carry.state.h, carry.cumulative);
  carry.context = att.context;
  carry.cumulative = add(carry.cumulative, att.weights[0]);
  const Var out_in[] = {carry.state.h, carry.context};
  Var joined = concat_cols(out_in);
  return {frame_out_.forward(g, joined), stop_out_.forward(g, joined), att.weights[0]};
}

Var B2AModel::loss(Graph &g, std::span<const B2AExample> batch) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int b = static_cast<int>(batch.size());
  const int d = config_.feature_dim;
  std::vector<const text::ByteSeq *> inputs;
  std::vector<int> speakers;
  int steps = 0;
  for (const B2AExample &e : batch) {
    if (e.target == nullptr || e.target->rows() == 0)
      throw DataError("EmptyFeatures", "b2a target has no frames");
    if (e.target->cols() != d) throw ShapeMismatchError("b2a target dim != feature_dim");
    if (e.speaker < 0 || e.speaker >= config_.num_speakers)
      throw DataError("SpeakerOutOfRange", "speaker id " + std::to_string(e.speaker));
    inputs.push_back(&e.bytes);
    speakers.push_back(e.speaker);
    steps = std::max(steps, e.target->rows());
  }
  const Encoded enc = encode(g, inputs, speakers);
  Carry carry = initial_carry(g, enc.memory);

  // Decoder step s predicts frames s*r .. s*r+r-1 and is fed frame s*r-1.
  const int r = config_.frames_per_step;
  const int groups = (steps + r - 1) / r;
  const int padded = groups * r;
  Tensor target = Tensor::matrix(b * padded, d);
  std::vector<double> weight(static_cast<std::size_t>(b * padded), 0.0);
  std::vector<double> stop(weight.size(), 0.0);
  double frames = 0.0;
  for (int i = 0; i < b; ++i) {
    const corpus::FeatureMatrix &t = *batch[static_cast<std::size_t>(i)].target;
    for (int s = 0; s < t.rows(); ++s) {
      std::copy(t.row(s).begin(), t.row(s).end(), target.row(i * padded + s).begin());
      weight[static_cast<std::size_t>(i * padded + s)] = 1.0;
      frames += 1.0;
    }
    const std::vector<double> labels = stop_labels(t.rows());
    std::copy(labels.begin(), labels.end(), stop.begin() + i * padded);
  }

  std::vector<Var> pred, logits;
  Var previous = g.constant(Tensor::matrix(b, d));
  for (int s = 0; s < groups; ++s) {
    const StepOut out = decoder_step(g, enc, previous, carry);
    pred.push_back(out.frame);
    logits.push_back(out.stop_logit);
    const int last = s * r + r - 1;
    Tensor next = Tensor::matrix(b, d);
    for (int i = 0; i < b; ++i) {
      const corpus::FeatureMatrix &t = *batch[static_cast<std::size_t>(i)].target;
      if (last < t.rows()) std::copy(t.row(last).begin(), t.row(last).end(), next.row(i).begin());
    }
    previous = g.constant(std::move(next));
  }
  // (b*groups) x (r*d) is row-major, so it reshapes to one frame per row.
  Var frame_rows = core::reshape(core::stack_time(pred), b * padded, d);
  Var stop_rows = core::reshape(core::stack_time(logits), b * padded, 1);
  Var mse = core::scale(core::squared_error(frame_rows, target, weight), 1.0 / (frames * d));
  Var bce = core::scale(core::sigmoid_cross_entropy(stop_rows, stop, weight), 1.0 / frames);
  return core::add(mse, bce);
}

SynthesisResult B2AModel::synthesize(const text::ByteSeq &bytes, int speaker,
                                     int max_frames) const {
  if (!text::utf8_valid(bytes)) throw IllFormedInputError("b2a input is not well-formed UTF-8");
  if (speaker < 0 || speaker >= config_.num_speakers)
    throw DataError("SpeakerOutOfRange", "speaker id " + std::to_string(speaker));
  if (max_frames < 1) throw InvalidConfigError("max_frames must be >= 1");
  Graph g(false);
  const text::ByteSeq *input = &bytes;
  const int spk[] = {speaker};
  const Encoded enc = encode(g, std::span<const text::ByteSeq *const>(&input, 1), spk);
  Carry carry = initial_carry(g, enc.memory);
  const int d = config_.feature_dim;
  const int per_step = config_.frames_per_step;
  SynthesisResult r;
  std::vector<double> frames;
  Var previous = g.constant(Tensor::matrix(1, d));
  bool stopped = false;
  int emitted = 0;
  while (emitted < max_frames && !stopped) {
    const StepOut out = decoder_step(g, enc, previous, carry);
    r.alignment.emplace_back(out.weights.value().values().begin(),
                             out.weights.value().values().end());
    const auto &values = out.frame.value().values();
    for (int k = 0; k < per_step && emitted < max_frames && !stopped; ++k, ++emitted) {
      const double p = 1.0 / (1.0 + std::exp(-out.stop_logit.value()[k]));
      frames.insert(frames.end(), values.begin() + k * d, values.begin() + (k + 1) * d);
      r.stop_probabilities.push_back(p);
      stopped = p > config_.stop_threshold;
    }
    Tensor last = Tensor::matrix(1, d);
    std::copy(frames.end() - d, frames.end(), last.row(0).begin());
    previous = g.constant(std::move(last));
  }
  r.max_frames_exceeded = !stopped;
  r.frames = Tensor({static_cast<int>(r.stop_probabilities.size()), d}, std::move(frames));
  return r;
}

B2ATrainer::B2ATrainer(B2AModel &model, core::AdamConfig adam) : model_(&model), adam_(adam) {}

double B2ATrainer::train_step(std::span<const B2AExample> batch) {
  const double loss = core::forward_backward(
      [&](Graph &g) { return model_->loss(g, batch); }, model_->params());
  adam_.step(model_->params());
  ++step_;
  return loss;
}

void save_checkpoint(const std::filesystem::path &path, const B2AModel &model,
                     const core::Adam *adam, std::int64_t train_step) {
  core::write_checkpoint(path, core::capture(kMagic, model.config().to_json(), model.params(),
                                             adam, train_step));
}

B2AModel load_model(const std::filesystem::path &path, core::Adam *adam,
                    std::int64_t *train_step) {
  const core::CheckpointData data = core::read_checkpoint(path, kMagic);
  B2AModel model(B2AConfig::from_json(data.config_json));
  core::restore(data, model.params(), adam);
  if (train_step) *train_step = data.train_step;
  return model;
}

double frame_mse(const corpus::FeatureMatrix &synthesized,
                 const corpus::FeatureMatrix &reference) {
  const int d = std::max(synthesized.cols(), reference.cols());
  const int n = std::max(synthesized.rows(), reference.rows());
  if (n == 0 || d == 0) return 0.0;
  if (synthesized.rows() > 0 && reference.rows() > 0 && synthesized.cols() != reference.cols())
    throw ShapeMismatchError("frame dims differ");
  double sum = 0.0;
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < d; ++k) {
      const double a = t < synthesized.rows() ? synthesized(t, k) : 0.0;
      const double b = t < reference.rows() ? reference(t, k) : 0.0;
      sum += (a - b) * (a - b);
    }
  }
  return sum / (static_cast<double>(n) * d);
}

double monotonic_fraction(const std::vector<std::vector<double>> &alignment) {
  if (alignment.size() < 2) return 1.0;
  auto expected = [](const std::vector<double> &w) {
    double e = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) e += static_cast<double>(t) * w[t];
    return e;
  };
  std::size_t ok = 0;
  for (std::size_t s = 1; s < alignment.size(); ++s)
    if (expected(alignment[s]) >= expected(alignment[s - 1])) ++ok;
  return static_cast<double>(ok) / static_cast<double>(alignment.size() - 1);
}

void write_stop_sidecar(std::ostream &os, const SynthesisResult &result) {
  for (std::size_t i = 0; i < result.stop_probabilities.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", result.stop_probabilities[i]);
    os << i << '\t' << buf << '\n';
  }
}

}  // namespace bytespeech::b2a
