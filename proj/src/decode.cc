// src/decode.cc

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

#include "bytespeech/decode.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace bytespeech::decode {

void BeamConfig::validate() const {
  if (beam_size < 1) throw InvalidConfigError("beam_size must be >= 1");
  if (max_len < 1) throw InvalidConfigError("max_len must be >= 1");
  if (!(length_norm_alpha >= 0.0)) throw InvalidConfigError("length_norm_alpha must be >= 0");
}

std::vector<bool> allowed_tokens(const SequenceScorer &scorer, const Hypothesis &hyp,
                                 const BeamConfig &config) {
  const int v = scorer.vocab_size();
  std::vector<bool> allowed(static_cast<std::size_t>(v), true);
  if (config.constrain_utf8 && scorer.byte_level()) {
    const text::ByteMask mask = text::allowed_next(hyp.utf8, true);
    for (int t = 0; t < v; ++t) allowed[static_cast<std::size_t>(t)] = mask.bytes.test(static_cast<std::size_t>(t));
    allowed[static_cast<std::size_t>(scorer.eos())] = mask.eos;
  }
  allowed[static_cast<std::size_t>(scorer.sos())] = false;
  return allowed;
}

double hypothesis_score(double log_prob, std::size_t length, double alpha) {
  if (alpha <= 0.0 || length == 0) return log_prob;
  return log_prob / std::pow(static_cast<double>(length), alpha);
}

namespace {

void push_token(const SequenceScorer &scorer, Hypothesis *h, int token, double logp,
                double alpha) {
  h->tokens.push_back(token);
  h->log_prob += logp;
  h->score = hypothesis_score(h->log_prob, h->tokens.size(), alpha);
  if (token == scorer.eos()) {
    h->finished = true;
  } else if (scorer.byte_level()) {
    h->utf8 = text::utf8_step(h->utf8, static_cast<std::uint8_t>(token));
  }
}

struct Beam {
  Hypothesis hyp;
  StatePtr state;
  std::vector<double> next;
};

struct Candidate {
  double rank;
  int token;
  std::size_t beam;
  double logp;
};

bool better(const Candidate &a, const Candidate &b) {
  if (a.rank != b.rank) return a.rank > b.rank;
  if (a.token != b.token) return a.token < b.token;
  return a.beam < b.beam;
}

bool better_hyp(const Hypothesis &a, const Hypothesis &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis greedy_decode(SequenceScorer &scorer, const BeamConfig &config) {
  config.validate();
  Hypothesis h;
  auto [logp, state] = scorer.step(nullptr, scorer.sos());
  while (true) {
    const std::vector<bool> allowed = allowed_tokens(scorer, h, config);
    int best = -1;
    for (int t = 0; t < scorer.vocab_size(); ++t) {
      if (!allowed[static_cast<std::size_t>(t)]) continue;
      if (best < 0 || logp[static_cast<std::size_t>(t)] > logp[static_cast<std::size_t>(best)])
        best = t;
    }
    if (best < 0) break;
    push_token(scorer, &h, best, logp[static_cast<std::size_t>(best)], config.length_norm_alpha);
    if (h.finished) break;
    if (static_cast<int>(h.tokens.size()) >= config.max_len) {
      h.max_len_exceeded = true;
      break;
    }
    std::tie(logp, state) = scorer.step(state, best);
  }
  return h;
}

std::vector<Hypothesis> beam_search(SequenceScorer &scorer, const BeamConfig &config) {
  config.validate();
  const double alpha = config.length_norm_alpha;
  const std::size_t k = static_cast<std::size_t>(config.beam_size);
  std::vector<Beam> beams(1);
  std::tie(beams[0].next, beams[0].state) = scorer.step(nullptr, scorer.sos());
  std::vector<Hypothesis> completed;

  for (int len = 1; len <= config.max_len && !beams.empty(); ++len) {
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const Beam &beam = beams[b];
      const std::vector<bool> allowed = allowed_tokens(scorer, beam.hyp, config);
      for (int t = 0; t < scorer.vocab_size(); ++t) {
        if (!allowed[static_cast<std::size_t>(t)]) continue;
        const double lp = beam.next[static_cast<std::size_t>(t)];
        const double total = beam.hyp.log_prob + lp;
        cands.push_back({hypothesis_score(total, static_cast<std::size_t>(len), alpha), t, b, lp});
      }
    }
    const std::size_t keep = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      better);
    cands.resize(keep);

    std::vector<Beam> next_beams;
    for (const Candidate &c : cands) {
      const Beam &parent = beams[c.beam];
      Hypothesis h = parent.hyp;
      push_token(scorer, &h, c.token, c.logp, alpha);
      if (h.finished) {
        completed.push_back(std::move(h));
        continue;
      }
      Beam nb;
      nb.hyp = std::move(h);
      if (len < config.max_len) {
        std::tie(nb.next, nb.state) = scorer.step(parent.state, c.token);
      } else {
        nb.hyp.max_len_exceeded = true;
      }
      next_beams.push_back(std::move(nb));
    }
    beams = std::move(next_beams);

    std::sort(completed.begin(), completed.end(), better_hyp);
    if (completed.size() > k) completed.resize(k);
    // Without length normalization log-probabilities only fall, so a full
    // completed pool that beats every live beam is final.
    if (alpha == 0.0 && completed.size() == k) {
      double best_live = -INFINITY;
      for (const Beam &b : beams) best_live = std::max(best_live, b.hyp.log_prob);
      if (best_live <= completed.back().score) break;
    }
  }

  if (!completed.empty()) return completed;
  std::vector<Hypothesis> out;
  for (Beam &b : beams) {
    b.hyp.max_len_exceeded = true;
    out.push_back(std::move(b.hyp));
  }
  std::sort(out.begin(), out.end(), better_hyp);
  return out;
}

void write_nbest(std::ostream &os, const std::string &utt_id, const std::vector<Hypothesis> &hyps,
                 const std::function<std::u32string(const std::vector<int> &)> &detokenize) {
  for (std::size_t r = 0; r < hyps.size(); ++r) {
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", hyps[r].score);
    os << utt_id << '\t' << (r + 1) << '\t' << score << '\t'
       << text::to_utf8(detokenize(hyps[r].tokens)) << '\n';
  }
}

}  // namespace bytespeech::decode
