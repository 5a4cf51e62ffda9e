// include/bytespeech/a2b.h

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

#ifndef BYTESPEECH_A2B_H_
#define BYTESPEECH_A2B_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bytespeech/autograd.h"
#include "bytespeech/bytetext.h"
#include "bytespeech/corpus.h"
#include "bytespeech/decode.h"
#include "bytespeech/layers.h"
#include "bytespeech/optim.h"
#include "bytespeech/score.h"

namespace bytespeech::a2b {

using core::Graph;
using core::Tensor;
using core::Var;

enum class OutputUnit { kBytes, kGraphemes };

struct ModelConfig {
  int feature_dim = 8;
  int stack_left = 3;
  int stack_stride = 3;
  int encoder_layers = 2;
  int encoder_width = 128;
  int decoder_layers = 1;
  int decoder_width = 128;
  int attention_heads = 4;
  int attention_dim = 64;
  int embedding_dim = 32;
  OutputUnit unit = OutputUnit::kBytes;
  text::GraphemeVocab vocab;  // graphemes only
  // Language tags in language-vector slot order. Growing this list is the
  // only shape change a checkpoint load tolerates.
  std::vector<std::string> languages;
  bool language_vector = false;
  std::uint64_t seed = 1;

  int num_languages() const { return language_vector ? static_cast<int>(languages.size()) : 0; }
  int output_dim() const;
  int sos() const;
  int eos() const;
  int stacked_dim() const { return feature_dim * (stack_left + 1); }
  int language_index(const std::string &tag) const;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string &json);
  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

// Encoder input for raw T x D features: frames are scaled by sqrt(D) and
// left+stride zero frames are appended before stacking, so every real frame
// reaches a stacked row and the last row is silence.
Tensor stack_features(const ModelConfig &config, const corpus::FeatureMatrix &features);

// One training or scoring item. `features` are raw (unstacked) T x D frames.
struct Example {
  const corpus::FeatureMatrix *features = nullptr;
  std::vector<int> targets;  // SOS ... EOS
  nn::LanguageVector lang;
};

// Listen-attend-spell style encoder-decoder over stacked feature frames.
// Parameters live in the model's store; layers hold pointers into it, so the
// model is movable but not copyable.
class A2BModel {
 public:
  struct Carry {
    std::vector<nn::LstmCell::State> layers;
    Var context;
  };

  explicit A2BModel(ModelConfig config);
  A2BModel(A2BModel &&) = default;
  A2BModel &operator=(A2BModel &&) = default;

  const ModelConfig &config() const { return config_; }
  core::ParameterStore &params() { return *store_; }
  const core::ParameterStore &params() const { return *store_; }

  // SOS ... EOS target ids for `text`.
  std::vector<int> targets(std::u32string_view text) const;
  // Hypothesis ids to text; byte outputs are stripped and repaired.
  std::u32string detokenize(std::span<const int> ids) const;
  // All-zero when the tag is unknown or the model has no language vector.
  nn::LanguageVector language_vector(const std::string &tag) const;

  // stacked: one frame-stacked matrix per sequence (non-empty).
  nn::AttentionMemory encode(Graph &g, std::span<const Tensor *const> stacked,
                             std::span<const nn::LanguageVector> langs) const;
  Carry initial_carry(Graph &g, int batch) const;
  // Feeds the previous tokens and returns B x output_dim logits. `keep`,
  // when non-empty, scales each row's previous-token embedding.
  Var decoder_step(Graph &g, const nn::AttentionMemory &memory,
                   std::span<const nn::LanguageVector> langs, std::span<const int> previous,
                   Carry &carry, std::span<const double> keep = {}) const;

  // Teacher-forced cross-entropy averaged over all target tokens of the batch.
  // With token_dropout > 0, each previous-token embedding is zeroed with that
  // probability, drawn from hash(dropout_seed, row, step).
  Var loss(Graph &g, std::span<const Example> batch, double token_dropout = 0.0,
           std::uint64_t dropout_seed = 0) const;

 private:
  ModelConfig config_;
  std::unique_ptr<core::ParameterStore> store_;
  std::vector<nn::LstmCell> encoder_;
  nn::Embedding embedding_;
  std::vector<nn::LstmCell> decoder_;
  nn::AdditiveAttention attention_;
  nn::Linear output_;
};

class EmptyFeaturesError : public DataError {
 public:
  EmptyFeaturesError() : DataError("EmptyFeatures", "feature matrix has no frames") {}
};

// Incremental scorer for one utterance, for use with decode::beam_search.
class A2BScorer : public decode::SequenceScorer {
 public:
  A2BScorer(const A2BModel &model, const corpus::FeatureMatrix &features,
            const nn::LanguageVector &lang);

  int vocab_size() const override { return model_.config().output_dim(); }
  int sos() const override { return model_.config().sos(); }
  int eos() const override { return model_.config().eos(); }
  bool byte_level() const override { return model_.config().unit == OutputUnit::kBytes; }
  std::pair<std::vector<double>, decode::StatePtr> step(const decode::StatePtr &state,
                                                        int token) override;

 private:
  const A2BModel &model_;
  std::unique_ptr<Graph> graph_;
  Tensor stacked_;
  nn::AttentionMemory memory_;
  std::vector<nn::LanguageVector> lang_;
};

// Default search settings: UTF-8 constraint on for bytes, off for graphemes.
decode::BeamConfig default_beam(const ModelConfig &config);

class Trainer {
 public:
  Trainer(A2BModel &model, core::AdamConfig adam);

  // One Adam update on `batch`; returns the pre-update loss. A non-finite
  // loss throws NonFiniteLossError naming the last good checkpoint.
  double train_step(std::span<const Example> batch);

  A2BModel &model() { return *model_; }
  core::Adam &optimizer() { return adam_; }
  const core::Adam &optimizer() const { return adam_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }
  void set_last_good_checkpoint(std::string path) { last_good_ = std::move(path); }
  // Dropout masks depend only on (seed, step), so resumed runs replay them.
  void set_token_dropout(double p, std::uint64_t seed) {
    token_dropout_ = p;
    dropout_seed_ = seed;
  }

 private:
  A2BModel *model_;
  core::Adam adam_;
  std::int64_t step_ = 0;
  std::string last_good_;
  double token_dropout_ = 0.0;
  std::uint64_t dropout_seed_ = 0;
};

// Next `batch_size` draws as examples, ordered by feature length so padding
// stays small. Utterances must carry features.
std::vector<Example> draw_batch(const A2BModel &model, corpus::MixSampler &sampler,
                                int batch_size);
std::vector<Example> make_examples(const A2BModel &model,
                                   std::span<const corpus::Utterance> utterances);

// Checkpoints (magic A2B1).
void save_checkpoint(const std::filesystem::path &path, const A2BModel &model,
                     const core::Adam *adam, std::int64_t train_step);
// Rebuilds the saved model exactly; restores optimizer/step when requested.
A2BModel load_model(const std::filesystem::path &path, core::Adam *adam = nullptr,
                    std::int64_t *train_step = nullptr);
// Loads into an existing model whose config may differ from the saved one
// only in seed and by appending languages.
void load_into(const std::filesystem::path &path, A2BModel &model, core::Adam *adam = nullptr,
               std::int64_t *train_step = nullptr);

struct EvalOptions {
  decode::BeamConfig beam;
  score::Metric metric = score::Metric::kTer;
  std::map<std::string, score::Metric> metric_by_language;
  int threads = 1;
};

struct UtteranceResult {
  std::string id;
  std::string language;
  std::u32string reference;
  std::u32string hypothesis;
  score::AlignmentCounts counts;
  bool max_len_exceeded = false;
  std::string error;  // non-empty when decoding or scoring failed
};

struct LanguageResult {
  score::Metric metric = score::Metric::kTer;
  score::AlignmentCounts counts;
  std::size_t utterances = 0;
  std::size_t failures = 0;
  double rate() const { return counts.rate(); }
};

struct EvalResult {
  std::vector<UtteranceResult> utterances;  // input order
  std::map<std::string, LanguageResult> languages;
  double mean_rate() const;
};

// Decodes, repairs and scores every utterance. Failures are recorded per
// utterance and scored against an empty hypothesis.
EvalResult evaluate(const A2BModel &model, const std::vector<corpus::Utterance> &test,
                    const EvalOptions &options);

struct ScheduleOptions {
  int batch_size = 8;
  core::AdamConfig adam;
  // Decays the learning rate by adam.decay_rate over each stage's own
  // length, overriding adam.decay_steps.
  bool decay_per_stage = false;
  std::uint64_t seed = 1;
  EvalOptions eval;
  // Called every `log_every` steps with (stage, step, mean loss since last call).
  std::function<void(const std::string &, int, double)> on_progress;
  int log_every = 100;
};

// Drives an A2B model through a curriculum. Each stage's languages are the
// keys of its ratio map; warm starts append languages the checkpoint lacks.
// Grapheme models use the closed vocabulary of their languages' training
// text, so a stage that brings new symbols cannot warm-start.
class A2BScheduleTrainer : public corpus::ScheduleTrainer {
 public:
  A2BScheduleTrainer(ModelConfig base, const corpus::CorpusMap &train,
                     const corpus::CorpusMap &test, ScheduleOptions options);

  void reset(const corpus::MixStage &stage) override;
  void load(const std::string &path, const corpus::MixStage &stage) override;
  double train(const corpus::MixStage &stage) override;
  void save(const std::string &path) override;
  std::map<std::string, double> evaluate(const corpus::MixStage &stage) override;

  A2BModel &model() { return *model_; }
  const EvalResult &last_eval() const { return last_eval_; }

 private:
  ModelConfig base_;
  const corpus::CorpusMap &train_;
  const corpus::CorpusMap &test_;
  ScheduleOptions options_;
  std::unique_ptr<A2BModel> model_;
  std::unique_ptr<Trainer> trainer_;
  EvalResult last_eval_;

  ModelConfig stage_config(std::vector<std::string> languages) const;
  core::AdamConfig stage_adam(const corpus::MixStage &stage) const;
};

}  // namespace bytespeech::a2b

#endif  // BYTESPEECH_A2B_H_
