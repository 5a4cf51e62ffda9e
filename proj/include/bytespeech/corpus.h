// include/bytespeech/corpus.h

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

#ifndef BYTESPEECH_CORPUS_H_
#define BYTESPEECH_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bytespeech/error.h"
#include "bytespeech/tensor.h"

namespace bytespeech::corpus {

// T frames x D dims.
using FeatureMatrix = core::Tensor;

struct Utterance {
  std::string id;
  std::u32string text;
  std::string language;
  std::optional<FeatureMatrix> features;
};

// Language tag -> utterances.
using CorpusMap = std::map<std::string, std::vector<Utterance>>;

// Parameters of the deterministic stand-in for an acoustic frontend.
struct SynthProfile {
  int dim = 8;
  int kmin = 2;
  int kmax = 4;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const SynthProfile &, const SynthProfile &) = default;
};

class EmptyTextError : public DataError {
 public:
  EmptyTextError() : DataError("EmptyText", "cannot synthesize features for empty text") {}
};

// Unit-norm template for codepoint c; depends only on (profile.seed, c).
std::vector<double> symbol_template(const SynthProfile &profile, char32_t c);

// Frames emitted for codepoint c at position i, in [kmin, kmax].
int symbol_frames(const SynthProfile &profile, char32_t c, std::size_t position);

// Each codepoint contributes symbol_frames() copies of its template plus
// N(0, noise_sigma^2) noise drawn from a generator seeded by utt_seed.
FeatureMatrix synth_features(std::u32string_view text, const SynthProfile &profile,
                             std::uint64_t utt_seed);

// Seed for utterance `index` of `language` under a corpus-level seed.
std::uint64_t utterance_seed(std::uint64_t corpus_seed, std::string_view language,
                             std::size_t index);

// ---- synthetic text generators

struct SyntheticLanguage {
  std::string name;
  std::u32string alphabet;
  int min_words = 1;
  int max_words = 1;
  int min_word_len = 3;
  int max_word_len = 6;
  char32_t separator = U' ';
};

// Known presets: latin, katakana, hangul, cyrillic.
SyntheticLanguage preset_language(std::string_view name);

std::vector<std::u32string> generate_texts(const SyntheticLanguage &lang, std::size_t n,
                                           std::uint64_t seed);

// Host-script text with one guest-script word embedded:
// host(2..4) + guest(guest_min..guest_max) + host(1..3), no separators.
std::vector<std::u32string> generate_code_switch_texts(const SyntheticLanguage &host,
                                                       const SyntheticLanguage &guest,
                                                       std::size_t n, int guest_min,
                                                       int guest_max, std::uint64_t seed);

// Builds utterances for `texts` with synthesized features.
std::vector<Utterance> make_utterances(const std::vector<std::u32string> &texts,
                                       const std::string &language, const SynthProfile &profile,
                                       std::uint64_t corpus_seed);

// ---- multilingual mixing

class EmptyLanguageCorpusError : public DataError {
 public:
  explicit EmptyLanguageCorpusError(const std::string &language)
      : DataError("EmptyLanguageCorpus", "no utterances for language " + language),
        language_(language) {}
  const std::string &language() const { return language_; }

 private:
  std::string language_;
};

// Ratios scaled to sum to 1. Throws InvalidConfigError when a ratio is
// negative or none is positive.
std::map<std::string, double> normalize_ratios(const std::map<std::string, double> &ratios);

// Infinite deterministic stream: each draw picks a language with probability
// proportional to its ratio, then an utterance uniformly with replacement.
class MixSampler {
 public:
  struct Draw {
    const std::string *language = nullptr;
    const Utterance *utterance = nullptr;
    std::size_t index = 0;
  };

  MixSampler(const CorpusMap &corpora, const std::map<std::string, double> &ratios,
             std::uint64_t seed);

  Draw next();
  const std::vector<std::string> &languages() const { return languages_; }
  const std::vector<double> &probabilities() const { return probs_; }

 private:
  std::vector<std::string> languages_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  std::vector<const std::vector<Utterance> *> lists_;
  std::uint64_t state_;
  std::uint64_t draw_ = 0;

  std::uint64_t next_u64();
};

// ---- curriculum schedules

struct MixStage {
  std::string name;
  std::map<std::string, double> ratios;
  int steps = 0;
  // "random", or a checkpoint path to warm-start from.
  std::string init = "random";
  // Where the trained stage is saved; empty skips saving.
  std::string save;

  bool warm_start() const { return init != "random"; }
};

struct MixSchedule {
  std::vector<MixStage> stages;
  void validate() const;
};

struct StageMetrics {
  std::string stage;
  double final_loss = 0.0;
  // language -> error rate after the stage.
  std::map<std::string, double> error_rates;
};

// What run_schedule drives. Implementations own the model and its data.
class ScheduleTrainer {
 public:
  virtual ~ScheduleTrainer() = default;
  virtual void reset(const MixStage &stage) = 0;
  // Throws ShapeMismatchError when the checkpoint cannot seed this stage.
  virtual void load(const std::string &path, const MixStage &stage) = 0;
  virtual double train(const MixStage &stage) = 0;
  virtual void save(const std::string &path) = 0;
  virtual std::map<std::string, double> evaluate(const MixStage &stage) = 0;
};

std::vector<StageMetrics> run_schedule(const MixSchedule &schedule, ScheduleTrainer &trainer);

// ---- code-switch subset

// Keeps utterances containing a run of >= min_run ASCII letters. With
// require_other_script, the text must also contain a non-ASCII codepoint.
std::vector<Utterance> code_switch_filter(const std::vector<Utterance> &utterances,
                                          int min_run = 5, bool require_other_script = false);

std::size_t longest_latin_run(std::u32string_view text);

// ---- files

// One UTF-8 utterance per line.
std::vector<std::u32string> read_text_lines(const std::filesystem::path &path);
void write_text_lines(const std::filesystem::path &path, const std::vector<std::u32string> &lines);

// BLF1 record: magic, u32 T, u32 D, T*D float32, all little-endian.
void write_feature_record(std::ostream &os, const FeatureMatrix &m);
// Returns false at clean end of stream.
bool read_feature_record(std::istream &is, FeatureMatrix *m);
void write_feature_file(const std::filesystem::path &path, const std::vector<FeatureMatrix> &ms);
std::vector<FeatureMatrix> read_feature_file(const std::filesystem::path &path);

struct LanguageEntry {
  std::string tag;
  std::filesystem::path train_text;
  std::filesystem::path test_text;
  std::filesystem::path train_features;  // optional
  std::filesystem::path test_features;   // optional
  std::optional<SynthProfile> profile;   // overrides the manifest profile
};

// JSON experiment manifest; relative paths resolve against its directory.
struct Manifest {
  SynthProfile profile;
  std::uint64_t seed = 1;
  std::vector<LanguageEntry> languages;
  MixSchedule schedule;

  static Manifest load(const std::filesystem::path &path);
  void save(const std::filesystem::path &path) const;
  const LanguageEntry &language(const std::string &tag) const;
  SynthProfile profile_for(const std::string &tag) const;
};

// Reads a language's train or test split; features are read from the feature
// file when present, otherwise synthesized from the profile.
std::vector<Utterance> load_split(const Manifest &manifest, const std::string &tag, bool train);

}  // namespace bytespeech::corpus

#endif  // BYTESPEECH_CORPUS_H_
