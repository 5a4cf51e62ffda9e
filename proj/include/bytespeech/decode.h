// include/bytespeech/decode.h

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

#ifndef BYTESPEECH_DECODE_H_
#define BYTESPEECH_DECODE_H_

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bytespeech/bytetext.h"

namespace bytespeech::decode {

// Opaque per-hypothesis model state.
struct DecoderState {
  virtual ~DecoderState() = default;
};
using StatePtr = std::shared_ptr<const DecoderState>;

// Autoregressive next-token distribution. step() consumes `token` after
// `state` (nullptr = before anything) and returns log-probabilities of the
// following token together with the new state.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual int vocab_size() const = 0;
  virtual int sos() const = 0;
  virtual int eos() const = 0;
  // True when tokens are UTF-8 bytes (enables the well-formedness constraint).
  virtual bool byte_level() const = 0;
  virtual std::pair<std::vector<double>, StatePtr> step(const StatePtr &state, int token) = 0;
};

struct BeamConfig {
  int beam_size = 1;
  int max_len = 200;
  bool constrain_utf8 = true;
  double length_norm_alpha = 0.0;

  void validate() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // excludes SOS; ends with EOS when finished
  double log_prob = 0.0;
  double score = 0.0;
  text::Utf8State utf8;
  bool finished = false;
  bool max_len_exceeded = false;
};

// Tokens the search may emit next. SOS is never allowed. In constrained
// byte mode this is allowed_next(utf8) with EOS only at scalar boundaries.
std::vector<bool> allowed_tokens(const SequenceScorer &scorer, const Hypothesis &hyp,
                                 const BeamConfig &config);

double hypothesis_score(double log_prob, std::size_t length, double alpha);

Hypothesis greedy_decode(SequenceScorer &scorer, const BeamConfig &config);

// n-best list, best first. Ties go to the lower token value.
std::vector<Hypothesis> beam_search(SequenceScorer &scorer, const BeamConfig &config);

// utt-id<TAB>rank<TAB>score<TAB>hyp-text, rank from 1.
void write_nbest(std::ostream &os, const std::string &utt_id, const std::vector<Hypothesis> &hyps,
                 const std::function<std::u32string(const std::vector<int> &)> &detokenize);

}  // namespace bytespeech::decode

#endif  // BYTESPEECH_DECODE_H_
