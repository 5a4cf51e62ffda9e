// tools/commands.h

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

#ifndef BYTESPEECH_TOOLS_COMMANDS_H_
#define BYTESPEECH_TOOLS_COMMANDS_H_

#include <cstdint>
#include <string>
#include <vector>

namespace bytespeech::cli {

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string out = ".";
  int threads = 1;
};

struct GenCorpusOptions {
  std::string language = "latin";
  std::string tag;  // defaults to the language name
  std::string guest;  // non-empty: code-switch texts with guest-script words
  int guest_min = 5;
  int guest_max = 8;
  int n_train = 2000;
  int n_test = 200;
  std::uint64_t text_seed = 1;
  int dim = 8;
  int kmin = 2;
  int kmax = 4;
  double noise = 0.1;
  std::uint64_t profile_seed = 1;
  bool features = true;
  std::string manifest = "manifest.json";
};

struct TokenizeOptions {
  std::string text;
  std::string file;
  std::string unit = "bytes";
  std::string vocab_text;  // grapheme vocabulary source
  bool specials = false;
};

struct TrainAsrOptions {
  std::string manifest;
  std::string unit = "bytes";
  bool language_vector = false;
  int encoder_layers = 2;
  int encoder_width = 64;
  int decoder_layers = 1;
  int decoder_width = 64;
  int attention_heads = 4;
  int attention_dim = 32;
  int embedding_dim = 32;
  int stack_stride = 3;
  int batch = 8;
  double lr = 0.003;
  double clip = 5.0;
  double decay_rate = 1.0;
  std::int64_t decay_steps = 0;
  int steps = 1000;  // single-stage runs only
  std::vector<std::string> ratios;  // single-stage runs only, TAG=W
  int beam = 4;
  int max_len = 200;
  std::string metric = "ter";
  int log_every = 100;
};

struct TrainTtsOptions {
  std::string manifest;
  std::vector<std::string> languages;
  int embedding_dim = 32;
  int conv_layers = 2;
  int conv_filters = 32;
  int conv_width = 5;
  int encoder_width = 32;
  int decoder_width = 64;
  int attention_dim = 32;
  int location_filters = 8;
  int location_width = 7;
  int frames_per_step = 1;
  int batch = 8;
  double lr = 0.003;
  double clip = 1.0;
  int steps = 2000;
  int eval_n = 50;
  int log_every = 100;
};

struct DecodeOptions {
  std::string model;
  std::string manifest;
  std::vector<std::string> languages;
  std::string split = "test";
  std::string text;       // B2A input
  std::string text_file;  // B2A input, one utterance per line
  int beam = 4;
  int nbest = 1;
  int max_len = 200;
  int max_frames = 400;
  double length_norm = 0.0;
  bool no_constraint = false;
};

struct ScoreOptions {
  std::string ref;
  std::string hyp;
  std::string metric = "ter";
  std::string output = "scores.txt";
};

struct ReportOptions {
  std::vector<std::string> cells;    // SYSTEM:LANG=score-file
  std::vector<std::string> metrics;  // LANG=wer|ter
  std::string format = "text";
};

struct GradCheckOptions {
  std::string target = "all";
  double tol = 1e-4;
  int samples = 32;
};

struct SampleMixOptions {
  std::string ratios;
  int n = 100000;
};

void gen_corpus(const GlobalOptions &g, const GenCorpusOptions &o);
void tokenize(const GlobalOptions &g, const TokenizeOptions &o);
void train_asr(const GlobalOptions &g, const TrainAsrOptions &o);
void train_tts(const GlobalOptions &g, const TrainTtsOptions &o);
void decode(const GlobalOptions &g, const DecodeOptions &o);
void score(const GlobalOptions &g, const ScoreOptions &o);
void report(const GlobalOptions &g, const ReportOptions &o);
void grad_check(const GlobalOptions &g, const GradCheckOptions &o);
void sample_mix(const GlobalOptions &g, const SampleMixOptions &o);

}  // namespace bytespeech::cli

#endif  // BYTESPEECH_TOOLS_COMMANDS_H_
