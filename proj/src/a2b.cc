// src/a2b.cc

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

#include "bytespeech/a2b.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "bytespeech/checkpoint.h"
#include "bytespeech/hash.h"

namespace bytespeech::a2b {

namespace {

constexpr const char *kMagic = "A2B1";

std::uint64_t layer_seed(std::uint64_t seed, std::string_view part) {
  return hash_combine(seed, hash_string(part));
}

}  // namespace

// ---- config

int ModelConfig::output_dim() const {
  return unit == OutputUnit::kBytes ? text::kByteVocabSize : vocab.output_dim();
}
int ModelConfig::sos() const { return unit == OutputUnit::kBytes ? text::kSos : vocab.sos_id(); }
int ModelConfig::eos() const { return unit == OutputUnit::kBytes ? text::kEos : vocab.eos_id(); }

int ModelConfig::language_index(const std::string &tag) const {
  auto it = std::find(languages.begin(), languages.end(), tag);
  return it == languages.end() ? -1 : static_cast<int>(it - languages.begin());
}

void ModelConfig::validate() const {
  const std::pair<const char *, int> positive[] = {
      {"feature_dim", feature_dim},       {"stack_stride", stack_stride},
      {"encoder_layers", encoder_layers}, {"encoder_width", encoder_width},
      {"decoder_layers", decoder_layers}, {"decoder_width", decoder_width},
      {"attention_heads", attention_heads}, {"attention_dim", attention_dim},
      {"embedding_dim", embedding_dim}};
  for (const auto &[name, v] : positive)
    if (v < 1) throw InvalidConfigError(std::string(name) + " must be >= 1");
  if (stack_left < 0) throw InvalidConfigError("stack_left must be >= 0");
  if (unit == OutputUnit::kGraphemes && vocab.num_symbols() == 0)
    throw InvalidConfigError("grapheme output needs a non-empty vocabulary");
  for (std::size_t i = 0; i < languages.size(); ++i)
    for (std::size_t j = i + 1; j < languages.size(); ++j)
      if (languages[i] == languages[j])
        throw InvalidConfigError("duplicate language tag " + languages[i]);
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["feature_dim"] = feature_dim;
  j["stack_left"] = stack_left;
  j["stack_stride"] = stack_stride;
  j["encoder_layers"] = encoder_layers;
  j["encoder_width"] = encoder_width;
  j["decoder_layers"] = decoder_layers;
  j["decoder_width"] = decoder_width;
  j["attention_heads"] = attention_heads;
  j["attention_dim"] = attention_dim;
  j["embedding_dim"] = embedding_dim;
  j["unit"] = unit == OutputUnit::kBytes ? "bytes" : "graphemes";
  if (unit == OutputUnit::kGraphemes) {
    std::ostringstream os;
    vocab.write(os);
    j["vocab"] = os.str();
  }
  j["languages"] = languages;
  j["language_vector"] = language_vector;
  j["seed"] = seed;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string &json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception &e) {
    throw DataError("BadConfig", std::string("model config: ") + e.what());
  }
  ModelConfig c;
  try {
    c.feature_dim = j.at("feature_dim");
    c.stack_left = j.at("stack_left");
    c.stack_stride = j.at("stack_stride");
    c.encoder_layers = j.at("encoder_layers");
    c.encoder_width = j.at("encoder_width");
    c.decoder_layers = j.at("decoder_layers");
    c.decoder_width = j.at("decoder_width");
    c.attention_heads = j.at("attention_heads");
    c.attention_dim = j.at("attention_dim");
    c.embedding_dim = j.at("embedding_dim");
    const std::string unit = j.at("unit");
    if (unit == "bytes") {
      c.unit = OutputUnit::kBytes;
    } else if (unit == "graphemes") {
      c.unit = OutputUnit::kGraphemes;
      std::istringstream is(j.at("vocab").get<std::string>());
      c.vocab = text::GraphemeVocab::read(is);
    } else {
      throw DataError("BadConfig", "unknown output unit " + unit);
    }
    c.languages = j.at("languages").get<std::vector<std::string>>();
    c.language_vector = j.at("language_vector");
    c.seed = j.at("seed");
  } catch (const nlohmann::json::exception &e) {
    throw DataError("BadConfig", std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Tensor stack_features(const ModelConfig &config, const corpus::FeatureMatrix &features) {
  if (features.rows() == 0) throw EmptyFeaturesError();
  const int pad = config.stack_left + config.stack_stride;
  Tensor padded = Tensor::matrix(features.rows() + pad, features.cols());
  std::copy(features.values().begin(), features.values().end(), padded.storage().begin());
  for (double &v : padded.storage()) v *= std::sqrt(static_cast<double>(config.feature_dim));
  return nn::frame_stack(padded, config.stack_left, config.stack_stride);
}

// ---- model

A2BModel::A2BModel(ModelConfig config)
    : config_(std::move(config)), store_(std::make_unique<core::ParameterStore>()) {
  config_.validate();
  const ModelConfig &c = config_;
  const int nl = c.num_languages();
  const std::uint64_t s = c.seed;
  int in = c.stacked_dim();
  for (int l = 0; l < c.encoder_layers; ++l) {
    const std::string name = "enc" + std::to_string(l);
    encoder_.emplace_back(*store_, name, in + nl, c.encoder_width, layer_seed(s, name), nl);
    in = c.encoder_width;
  }
  embedding_ = nn::Embedding(*store_, "embed", c.output_dim(), c.embedding_dim,
                             layer_seed(s, "embed"));
  in = c.embedding_dim + c.encoder_width;
  for (int l = 0; l < c.decoder_layers; ++l) {
    const std::string name = "dec" + std::to_string(l);
    decoder_.emplace_back(*store_, name, in + nl, c.decoder_width, layer_seed(s, name), nl);
    in = c.decoder_width;
  }
  attention_ = nn::AdditiveAttention(*store_, "attn", c.decoder_width, c.encoder_width,
                                     c.attention_dim, c.attention_heads, c.encoder_width,
                                     layer_seed(s, "attn"));
  output_ = nn::Linear(*store_, "out", c.decoder_width + c.encoder_width + nl, c.output_dim(),
                       layer_seed(s, "out"), nl);
}

std::vector<int> A2BModel::targets(std::u32string_view text) const {
  if (config_.unit == OutputUnit::kGraphemes) return config_.vocab.encode(text, true);
  const text::ByteSeq bytes = text::encode_bytes(text, true);
  return std::vector<int>(bytes.begin(), bytes.end());
}

std::u32string A2BModel::detokenize(std::span<const int> ids) const {
  if (config_.unit == OutputUnit::kGraphemes) return config_.vocab.decode(ids);
  text::ByteSeq bytes;
  for (int id : ids) bytes.push_back(static_cast<std::uint8_t>(id));
  return text::decode_bytes(text::strip_specials(bytes), text::DecodePolicy::kReplace);
}

nn::LanguageVector A2BModel::language_vector(const std::string &tag) const {
  const int n = config_.num_languages();
  if (n == 0) return nn::LanguageVector::none(0);
  const int id = config_.language_index(tag);
  return id < 0 ? nn::LanguageVector::none(n) : nn::LanguageVector::one_hot(n, id);
}

nn::AttentionMemory A2BModel::encode(Graph &g, std::span<const Tensor *const> stacked,
                                     std::span<const nn::LanguageVector> langs) const {
  const int batch = static_cast<int>(stacked.size());
  std::vector<int> lengths;
  int steps = 0;
  for (const Tensor *t : stacked) {
    if (t->rows() == 0) throw EmptyFeaturesError();
    lengths.push_back(t->rows());
    steps = std::max(steps, t->rows());
  }
  const int width = config_.stacked_dim();
  std::vector<nn::LstmCell::State> state;
  for (const auto &cell : encoder_) state.push_back(cell.zero_state(g, batch));
  std::vector<Var> top;
  for (int t = 0; t < steps; ++t) {
    Tensor x = Tensor::matrix(batch, width);
    for (int b = 0; b < batch; ++b) {
      const Tensor &m = *stacked[static_cast<std::size_t>(b)];
      if (t < m.rows()) std::copy(m.row(t).begin(), m.row(t).end(), x.row(b).begin());
    }
    Var h = g.constant(std::move(x));
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      state[l] = encoder_[l].step(g, nn::concat_language(h, langs), state[l]);
      h = state[l].h;
    }
    top.push_back(h);
  }
  // Padded steps run after the real ones, so they never feed real outputs;
  // the mask keeps them out of attention.
  return attention_.prepare(g, core::stack_time(top), batch, steps,
                            nn::length_mask(lengths, steps));
}

A2BModel::Carry A2BModel::initial_carry(Graph &g, int batch) const {
  Carry c;
  for (const auto &cell : decoder_) c.layers.push_back(cell.zero_state(g, batch));
  c.context = g.constant(Tensor::matrix(batch, config_.encoder_width));
  return c;
}

Var A2BModel::decoder_step(Graph &g, const nn::AttentionMemory &memory,
                           std::span<const nn::LanguageVector> langs,
                           std::span<const int> previous, Carry &carry,
                           std::span<const double> keep) const {
  Var embedded = embedding_.forward(g, previous);
  if (!keep.empty()) embedded = core::scale_rows(embedded, keep);
  const Var first[] = {embedded, carry.context};
  Var x = core::concat_cols(first);
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    carry.layers[l] = decoder_[l].step(g, nn::concat_language(x, langs), carry.layers[l]);
    x = carry.layers[l].h;
  }
  carry.context = attention_.attend(g, memory, x).context;
  const Var joined[] = {x, carry.context};
  return output_.forward(g, nn::concat_language(core::concat_cols(joined), langs));
}

Var A2BModel::loss(Graph &g, std::span<const Example> batch, double token_dropout,
                   std::uint64_t dropout_seed) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int b = static_cast<int>(batch.size());
  std::vector<Tensor> stacked;
  std::vector<nn::LanguageVector> langs;
  std::size_t longest = 0;
  for (const Example &e : batch) {
    if (e.features == nullptr) throw EmptyFeaturesError();
    if (e.targets.size() < 2) throw std::invalid_argument("targets must include SOS and EOS");
    stacked.push_back(stack_features(config_, *e.features));
    langs.push_back(e.lang);
    longest = std::max(longest, e.targets.size());
  }
  std::vector<const Tensor *> ptrs;
  for (const Tensor &t : stacked) ptrs.push_back(&t);
  nn::AttentionMemory memory = encode(g, ptrs, langs);

  const int steps = static_cast<int>(longest) - 1;
  Carry carry = initial_carry(g, b);
  std::vector<Var> logits;
  // Row b*steps+s of the stacked logits predicts targets[b][s+1].
  std::vector<int> gold(static_cast<std::size_t>(b * steps), 0);
  std::vector<double> weight(gold.size(), 0.0);
  double tokens = 0.0;
  for (int s = 0; s < steps; ++s) {
    std::vector<int> prev(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) {
      const auto &t = batch[static_cast<std::size_t>(i)].targets;
      const std::size_t k = static_cast<std::size_t>(s);
      prev[static_cast<std::size_t>(i)] = k < t.size() ? t[k] : config_.eos();
      if (k + 1 < t.size()) {
        gold[static_cast<std::size_t>(i * steps + s)] = t[k + 1];
        weight[static_cast<std::size_t>(i * steps + s)] = 1.0;
        tokens += 1.0;
      }
    }
    std::vector<double> keep;
    if (token_dropout > 0.0) {
      keep.resize(static_cast<std::size_t>(b));
      for (int i = 0; i < b; ++i)
        keep[static_cast<std::size_t>(i)] =
            to_unit_double(hash_combine(dropout_seed, i, s)) < token_dropout ? 0.0 : 1.0;
    }
    logits.push_back(decoder_step(g, memory, langs, prev, carry, keep));
  }
  Var ce = core::softmax_cross_entropy(core::stack_time(logits), gold, weight);
  return core::scale(ce, 1.0 / tokens);
}

// ---- inference

namespace {

struct ScorerState : decode::DecoderState {
  std::vector<Tensor> h;
  std::vector<Tensor> c;
  Tensor context;
};

}  // namespace

A2BScorer::A2BScorer(const A2BModel &model, const corpus::FeatureMatrix &features,
                     const nn::LanguageVector &lang)
    : model_(model), graph_(std::make_unique<Graph>(false)) {
  if (features.rows() == 0) throw EmptyFeaturesError();
  const ModelConfig &c = model.config();
  if (features.cols() != c.feature_dim)
    throw ShapeMismatchError("feature dim " + std::to_string(features.cols()) + " != model " +
                             std::to_string(c.feature_dim));
  stacked_ = stack_features(c, features);
  lang_.push_back(lang);
  const Tensor *ptr = &stacked_;
  memory_ = model.encode(*graph_, std::span<const Tensor *const>(&ptr, 1), lang_);
}

std::pair<std::vector<double>, decode::StatePtr> A2BScorer::step(const decode::StatePtr &state,
                                                                 int token) {
  Graph &g = *graph_;
  A2BModel::Carry carry;
  if (state == nullptr) {
    carry = model_.initial_carry(g, 1);
  } else {
    const auto &s = static_cast<const ScorerState &>(*state);
    for (std::size_t l = 0; l < s.h.size(); ++l)
      carry.layers.push_back({g.constant(s.h[l]), g.constant(s.c[l])});
    carry.context = g.constant(s.context);
  }
  const int prev[] = {token};
  Var logits = model_.decoder_step(g, memory_, lang_, prev, carry);
  auto next = std::make_shared<ScorerState>();
  for (const auto &layer : carry.layers) {
    next->h.push_back(layer.h.value());
    next->c.push_back(layer.c.value());
  }
  next->context = carry.context.value();
  const Tensor lp = core::log_softmax_rows(logits.value());
  return {std::vector<double>(lp.values().begin(), lp.values().end()), std::move(next)};
}

decode::BeamConfig default_beam(const ModelConfig &config) {
  decode::BeamConfig b;
  b.constrain_utf8 = config.unit == OutputUnit::kBytes;
  return b;
}

// ---- training

Trainer::Trainer(A2BModel &model, core::AdamConfig adam) : model_(&model), adam_(adam) {}

double Trainer::train_step(std::span<const Example> batch) {
  double loss = 0.0;
  try {
    const std::uint64_t seed = hash_combine(dropout_seed_, static_cast<std::uint64_t>(step_));
    loss = core::forward_backward(
        [&](Graph &g) { return model_->loss(g, batch, token_dropout_, seed); },
        model_->params());
  } catch (const NonFiniteLossError &e) {
    throw NonFiniteLossError(std::string(e.what()) + " at step " + std::to_string(step_ + 1) +
                             "; last good checkpoint: " +
                             (last_good_.empty() ? std::string("none") : last_good_));
  }
  adam_.step(model_->params());
  ++step_;
  return loss;
}

std::vector<Example> make_examples(const A2BModel &model,
                                   std::span<const corpus::Utterance> utterances) {
  std::vector<Example> out;
  for (const corpus::Utterance &u : utterances) {
    if (!u.features) throw EmptyFeaturesError();
    out.push_back({&*u.features, model.targets(u.text), model.language_vector(u.language)});
  }
  return out;
}

std::vector<Example> draw_batch(const A2BModel &model, corpus::MixSampler &sampler,
                                int batch_size) {
  std::vector<Example> out;
  for (int i = 0; i < batch_size; ++i) {
    const corpus::MixSampler::Draw d = sampler.next();
    if (!d.utterance->features) throw EmptyFeaturesError();
    out.push_back({&*d.utterance->features, model.targets(d.utterance->text),
                   model.language_vector(*d.language)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Example &a, const Example &b) {
    return a.features->rows() < b.features->rows();
  });
  return out;
}

// ---- checkpoints

void save_checkpoint(const std::filesystem::path &path, const A2BModel &model,
                     const core::Adam *adam, std::int64_t train_step) {
  core::write_checkpoint(path, core::capture(kMagic, model.config().to_json(), model.params(),
                                             adam, train_step));
}

A2BModel load_model(const std::filesystem::path &path, core::Adam *adam,
                    std::int64_t *train_step) {
  const core::CheckpointData data = core::read_checkpoint(path, kMagic);
  A2BModel model(ModelConfig::from_json(data.config_json));
  core::restore(data, model.params(), adam);
  if (train_step) *train_step = data.train_step;
  return model;
}

void load_into(const std::filesystem::path &path, A2BModel &model, core::Adam *adam,
               std::int64_t *train_step) {
  const core::CheckpointData data = core::read_checkpoint(path, kMagic);
  ModelConfig saved = ModelConfig::from_json(data.config_json);
  const ModelConfig &target = model.config();
  const bool prefix =
      saved.languages.size() <= target.languages.size() &&
      std::equal(saved.languages.begin(), saved.languages.end(), target.languages.begin());
  if (!prefix)
    throw ShapeMismatchError("checkpoint languages are not a prefix of the model's languages");
  saved.languages = target.languages;
  saved.seed = target.seed;
  if (!(saved == target))
    throw ShapeMismatchError("checkpoint config differs from the model beyond added languages");
  core::restore(data, model.params(), adam);
  if (train_step) *train_step = data.train_step;
}

// ---- evaluation

double EvalResult::mean_rate() const {
  if (languages.empty()) return 0.0;
  double s = 0.0;
  for (const auto &[tag, r] : languages) s += r.rate();
  return s / static_cast<double>(languages.size());
}

namespace {

UtteranceResult evaluate_one(const A2BModel &model, const corpus::Utterance &u,
                             const EvalOptions &options, score::Metric metric) {
  UtteranceResult r;
  r.id = u.id;
  r.language = u.language;
  r.reference = u.text;
  try {
    if (!u.features) throw EmptyFeaturesError();
    A2BScorer scorer(model, *u.features, model.language_vector(u.language));
    const std::vector<decode::Hypothesis> nbest = decode::beam_search(scorer, options.beam);
    r.hypothesis = model.detokenize(nbest.front().tokens);
    r.max_len_exceeded = nbest.front().max_len_exceeded;
  } catch (const Error &e) {
    r.error = e.kind() + ": " + e.what();
    r.hypothesis.clear();
  }
  try {
    r.counts = score::score_counts(metric, r.reference, r.hypothesis);
  } catch (const Error &e) {
    if (r.error.empty()) r.error = e.kind() + ": " + e.what();
  }
  return r;
}

}  // namespace

EvalResult evaluate(const A2BModel &model, const std::vector<corpus::Utterance> &test,
                    const EvalOptions &options) {
  options.beam.validate();
  if (options.threads < 1) throw InvalidConfigError("threads must be >= 1");
  auto metric_for = [&](const std::string &lang) {
    auto it = options.metric_by_language.find(lang);
    return it == options.metric_by_language.end() ? options.metric : it->second;
  };
  EvalResult result;
  result.utterances.resize(test.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < test.size(); i += stride)
      result.utterances[i] = evaluate_one(model, test[i], options, metric_for(test[i].language));
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(options.threads), std::max<std::size_t>(test.size(), 1));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (std::thread &t : pool) t.join();
  }
  for (const UtteranceResult &r : result.utterances) {
    LanguageResult &lr = result.languages[r.language];
    lr.metric = metric_for(r.language);
    lr.counts += r.counts;
    ++lr.utterances;
    if (!r.error.empty()) ++lr.failures;
  }
  return result;
}

// ---- curriculum

A2BScheduleTrainer::A2BScheduleTrainer(ModelConfig base, const corpus::CorpusMap &train,
                                       const corpus::CorpusMap &test, ScheduleOptions options)
    : base_(std::move(base)), train_(train), test_(test), options_(std::move(options)) {}

namespace {

std::vector<std::string> with_stage_languages(std::vector<std::string> langs,
                                              const corpus::MixStage &stage) {
  for (const auto &[tag, ratio] : stage.ratios)
    if (std::find(langs.begin(), langs.end(), tag) == langs.end()) langs.push_back(tag);
  return langs;
}

}  // namespace

ModelConfig A2BScheduleTrainer::stage_config(std::vector<std::string> languages) const {
  ModelConfig c = base_;
  c.languages = std::move(languages);
  if (c.unit == OutputUnit::kGraphemes) {
    std::vector<std::u32string> texts;
    for (const auto &tag : c.languages) {
      auto it = train_.find(tag);
      if (it == train_.end()) continue;
      for (const auto &u : it->second) texts.push_back(u.text);
    }
    c.vocab = text::GraphemeVocab::build(texts);
  }
  return c;
}

core::AdamConfig A2BScheduleTrainer::stage_adam(const corpus::MixStage &stage) const {
  core::AdamConfig a = options_.adam;
  if (options_.decay_per_stage) a.decay_steps = stage.steps;
  return a;
}

void A2BScheduleTrainer::reset(const corpus::MixStage &stage) {
  ModelConfig c = stage_config(with_stage_languages({}, stage));
  model_ = std::make_unique<A2BModel>(std::move(c));
  trainer_ = std::make_unique<Trainer>(*model_, stage_adam(stage));
}

void A2BScheduleTrainer::load(const std::string &path, const corpus::MixStage &stage) {
  const core::CheckpointData data = core::read_checkpoint(path, kMagic);
  ModelConfig c = stage_config(
      with_stage_languages(ModelConfig::from_json(data.config_json).languages, stage));
  auto model = std::make_unique<A2BModel>(std::move(c));
  load_into(path, *model);
  model_ = std::move(model);
  trainer_ = std::make_unique<Trainer>(*model_, stage_adam(stage));
  trainer_->set_last_good_checkpoint(path);
}

double A2BScheduleTrainer::train(const corpus::MixStage &stage) {
  corpus::MixSampler sampler(train_, stage.ratios,
                             hash_combine(options_.seed, hash_string(stage.name)));
  double window = 0.0, last = 0.0;
  int in_window = 0;
  for (int s = 1; s <= stage.steps; ++s) {
    const std::vector<Example> batch = draw_batch(*model_, sampler, options_.batch_size);
    const double loss = trainer_->train_step(batch);
    window += loss;
    ++in_window;
    if (options_.log_every > 0 && (s % options_.log_every == 0 || s == stage.steps)) {
      last = window / in_window;
      if (options_.on_progress) options_.on_progress(stage.name, s, last);
      window = 0.0;
      in_window = 0;
    }
  }
  return last;
}

void A2BScheduleTrainer::save(const std::string &path) {
  save_checkpoint(path, *model_, &trainer_->optimizer(), trainer_->step());
  trainer_->set_last_good_checkpoint(path);
}

std::map<std::string, double> A2BScheduleTrainer::evaluate(const corpus::MixStage &stage) {
  std::vector<corpus::Utterance> test;
  for (const auto &[tag, ratio] : stage.ratios) {
    auto it = test_.find(tag);
    if (it != test_.end()) test.insert(test.end(), it->second.begin(), it->second.end());
  }
  last_eval_ = a2b::evaluate(*model_, test, options_.eval);
  std::map<std::string, double> out;
  for (const auto &[tag, r] : last_eval_.languages) out[tag] = r.rate();
  return out;
}

}  // namespace bytespeech::a2b
