// include/bytespeech/b2a.h

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

#ifndef BYTESPEECH_B2A_H_
#define BYTESPEECH_B2A_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bytespeech/autograd.h"
#include "bytespeech/bytetext.h"
#include "bytespeech/corpus.h"
#include "bytespeech/layers.h"
#include "bytespeech/optim.h"

namespace bytespeech::b2a {

using core::Graph;
using core::Tensor;
using core::Var;

struct B2AConfig {
  int embedding_dim = 32;
  int conv_layers = 2;
  int conv_filters = 32;
  int conv_width = 5;
  int encoder_width = 32;  // per direction
  int decoder_width = 64;
  int attention_dim = 32;
  int location_filters = 8;
  int location_width = 7;
  int feature_dim = 8;
  int num_speakers = 1;
  int speaker_dim = 8;
  // Frames emitted per decoder step; each frame keeps its own stop logit.
  int frames_per_step = 1;
  double stop_threshold = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_json() const;
  static B2AConfig from_json(const std::string &json);
  friend bool operator==(const B2AConfig &, const B2AConfig &) = default;
};

// Number of trainable values implied by `config`.
std::int64_t parameter_count(const B2AConfig &config);

class IllFormedInputError : public DataError {
 public:
  explicit IllFormedInputError(const std::string &what) : DataError("IllFormedInput", what) {}
};

// Stop-token targets for a `frames`-frame utterance: 1 at the last frame only.
std::vector<double> stop_labels(int frames);

struct B2AExample {
  text::ByteSeq bytes;  // UTF-8 text without specials
  const corpus::FeatureMatrix *target = nullptr;
  int speaker = 0;
};

struct SynthesisResult {
  corpus::FeatureMatrix frames;
  std::vector<double> stop_probabilities;     // one per frame
  std::vector<std::vector<double>> alignment;  // per decoder step, over encoder steps
  bool max_frames_exceeded = false;
};

// Byte embedding -> conv stack -> bidirectional LSTM encoder; an LSTM frame
// decoder with location-sensitive attention predicts each frame and a stop
// logit. Every input gets a trailing 0xFF terminator, which never occurs in
// UTF-8, so the key sequence is never empty.
class B2AModel {
 public:
  explicit B2AModel(B2AConfig config);
  B2AModel(B2AModel &&) = default;
  B2AModel &operator=(B2AModel &&) = default;

  const B2AConfig &config() const { return config_; }
  core::ParameterStore &params() { return *store_; }
  const core::ParameterStore &params() const { return *store_; }

  // Mean squared frame error (per element) plus mean stop cross-entropy.
  Var loss(Graph &g, std::span<const B2AExample> batch) const;

  // Throws IllFormedInputError unless `bytes` is well-formed UTF-8.
  SynthesisResult synthesize(const text::ByteSeq &bytes, int speaker, int max_frames) const;

 private:
  struct Encoded {
    nn::AttentionMemory memory;
    Var speaker;
  };
  struct Carry {
    nn::LstmCell::State state;
    Var context;
    Var cumulative;
  };
  struct StepOut {
    Var frame;
    Var stop_logit;
    Var weights;
  };

  Encoded encode(Graph &g, std::span<const text::ByteSeq *const> inputs,
                 std::span<const int> speakers) const;
  Carry initial_carry(Graph &g, const nn::AttentionMemory &memory) const;
  StepOut decoder_step(Graph &g, const Encoded &enc, const Var &previous_frame,
                       Carry &carry) const;

  B2AConfig config_;
  std::unique_ptr<core::ParameterStore> store_;
  nn::Embedding embedding_;
  std::vector<nn::Conv1d> convs_;
  nn::LstmCell forward_;
  nn::LstmCell backward_;
  nn::Embedding speakers_;
  nn::LstmCell decoder_;
  nn::LocationSensitiveAttention attention_;
  nn::Linear frame_out_;
  nn::Linear stop_out_;
};

class B2ATrainer {
 public:
  B2ATrainer(B2AModel &model, core::AdamConfig adam);
  double train_step(std::span<const B2AExample> batch);

  B2AModel &model() { return *model_; }
  core::Adam &optimizer() { return adam_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  B2AModel *model_;
  core::Adam adam_;
  std::int64_t step_ = 0;
};

// Checkpoints (magic B2A1), same layout as the A2B ones.
void save_checkpoint(const std::filesystem::path &path, const B2AModel &model,
                     const core::Adam *adam, std::int64_t train_step);
B2AModel load_model(const std::filesystem::path &path, core::Adam *adam = nullptr,
                    std::int64_t *train_step = nullptr);

// Mean squared error per element between synthesized and reference frames.
// Frames missing on either side are compared against zeros.
double frame_mse(const corpus::FeatureMatrix &synthesized, const corpus::FeatureMatrix &reference);

// Fraction of consecutive decoder steps whose expected attended position
// sum_t t * alpha_t does not move backwards; 1 with fewer than two steps.
double monotonic_fraction(const std::vector<std::vector<double>> &alignment);

// One line per frame: index<TAB>stop probability.
void write_stop_sidecar(std::ostream &os, const SynthesisResult &result);

}  // namespace bytespeech::b2a

#endif  // BYTESPEECH_B2A_H_
