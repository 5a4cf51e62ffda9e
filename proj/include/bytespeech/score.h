// include/bytespeech/score.h

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

#ifndef BYTESPEECH_SCORE_H_
#define BYTESPEECH_SCORE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bytespeech/error.h"

namespace bytespeech::score {

struct AlignmentCounts {
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;
  std::int64_t ref_tokens = 0;

  std::int64_t errors() const { return substitutions + deletions + insertions; }
  // (S + D + I) / N; may exceed 1.
  double rate() const;

  AlignmentCounts &operator+=(const AlignmentCounts &o);
  friend bool operator==(const AlignmentCounts &, const AlignmentCounts &) = default;
};

class EmptyReferenceError : public DataError {
 public:
  EmptyReferenceError() : DataError("EmptyReference", "reference has no tokens") {}
};

// Minimal unit-cost edit alignment. Ties between optimal alignments go to
// the one with the most substitutions; D and I then follow from N - |hyp|.
template <typename Token>
AlignmentCounts align(const std::vector<Token> &ref, const std::vector<Token> &hyp);

std::vector<std::u32string> word_tokens(std::u32string_view text);
std::vector<char32_t> codepoint_tokens(std::u32string_view text);
bool is_space(char32_t c);

// Word error counts over whitespace-separated tokens.
AlignmentCounts wer_counts(std::u32string_view ref, std::u32string_view hyp);
// Token error counts over codepoints with all whitespace removed.
AlignmentCounts ter_counts(std::u32string_view ref, std::u32string_view hyp);
double wer(std::u32string_view ref, std::u32string_view hyp);
double ter(std::u32string_view ref, std::u32string_view hyp);

enum class Metric { kWer, kTer };
std::string_view metric_name(Metric m);
AlignmentCounts score_counts(Metric m, std::u32string_view ref, std::u32string_view hyp);

// Per-utterance line of a score file: utt-id S D I N rate.
void write_score_line(std::ostream &os, const std::string &utt_id, const AlignmentCounts &c);

// (old - new) / old.
double relative_change(double old_rate, double new_rate);

struct ReportRow {
  std::string system;
  std::map<std::string, AlignmentCounts> cells;  // language -> counts
};

struct Report {
  std::vector<std::string> languages;  // column order
  std::vector<ReportRow> rows;
  // Column header suffix per language, e.g. "TER(%)".
  std::map<std::string, Metric> metrics;

  // Aligned text table, rates in percent to one decimal; "-" where missing.
  std::string to_text() const;
  // system<TAB>lang1<TAB>... with the same cell contents.
  std::string to_tsv() const;
};

}  // namespace bytespeech::score

#endif  // BYTESPEECH_SCORE_H_
