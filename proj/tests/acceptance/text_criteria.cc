// tests/acceptance/text_criteria.cc

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

// Byte-text automaton, constrained search and scoring criteria.

#include <algorithm>
#include <array>
#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "bytespeech/a2b.h"
#include "bytespeech/bytetext.h"
#include "bytespeech/decode.h"
#include "bytespeech/score.h"
#include "harness.h"

namespace bytespeech::acceptance {

namespace {

// Decodes each scalar and checks its range; shares no code with the
// incremental recognizer.
bool reference_valid(const std::vector<std::uint8_t> &b) {
  static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  std::size_t i = 0;
  while (i < b.size()) {
    const std::uint8_t lead = b[i];
    if (lead < 0x80) {
      ++i;
      continue;
    }
    int len;
    std::uint32_t cp;
    if ((lead & 0xE0) == 0xC0) len = 2, cp = lead & 0x1Fu;
    else if ((lead & 0xF0) == 0xE0) len = 3, cp = lead & 0x0Fu;
    else if ((lead & 0xF8) == 0xF0) len = 4, cp = lead & 0x07u;
    else return false;
    if (i + static_cast<std::size_t>(len) > b.size()) return false;
    for (int k = 1; k < len; ++k) {
      if ((b[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b[i + k] & 0x3Fu);
    }
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += static_cast<std::size_t>(len);
  }
  return true;
}

// Bytes next to every boundary of the well-formedness table.
constexpr std::array<std::uint8_t, 22> kEdgeBytes = {0x00, 0x7F, 0x80, 0x8F, 0x90, 0x9F, 0xA0, 0xBF,
                                                     0xC0, 0xC1, 0xC2, 0xDF, 0xE0, 0xE1, 0xEC, 0xED,
                                                     0xEE, 0xEF, 0xF0, 0xF4, 0xF5, 0xFF};

std::vector<std::uint8_t> fuzz_string(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> kind(0, 2), len(0, 12), byte(0, 255), edge(0, kEdgeBytes.size() - 1);
  std::vector<std::uint8_t> s;
  const int n = len(rng);
  switch (kind(rng)) {
    case 0:  // uniform bytes
      for (int i = 0; i < n; ++i) s.push_back(static_cast<std::uint8_t>(byte(rng)));
      break;
    case 1:  // boundary bytes
      for (int i = 0; i < n; ++i) s.push_back(kEdgeBytes[edge(rng)]);
      break;
    default: {  // well-formed text with one mutation
      std::uniform_int_distribution<std::uint32_t> plane(0, 3), low(0, 0x7F), bmp(0x80, 0xFFFF),
          astral(0x10000, 0x10FFFF);
      std::u32string t;
      for (int i = 0; i < n / 2 + 1; ++i) {
        char32_t c;
        do {
          const auto p = plane(rng);
          c = p == 0 ? low(rng) : p == 3 ? astral(rng) : bmp(rng);
        } while (!text::is_scalar_value(c));
        t.push_back(c);
      }
      s = text::encode_bytes(t);
      std::uniform_int_distribution<std::size_t> at(0, s.size() - 1);
      switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0: s[at(rng)] = static_cast<std::uint8_t>(byte(rng)); break;
        case 1: s.erase(s.begin() + static_cast<std::ptrdiff_t>(at(rng))); break;
        case 2: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at(rng)), kEdgeBytes[edge(rng)]); break;
        case 3: s.resize(at(rng)); break;
        default: break;  // unchanged
      }
    }
  }
  return s;
}

}  // namespace

Outcome utf8_automaton(const Context &) {
  std::size_t checked = 0, mismatches = 0, valid = 0;
  // Strict decoding throws on every rejection, so it is cross-checked on the
  // fuzzed strings only.
  bool with_strict = false;
  auto check = [&](const std::vector<std::uint8_t> &s) {
    const bool expect = reference_valid(s);
    bool strict_ok = expect;
    if (with_strict) {
      strict_ok = true;
      try {
        text::decode_bytes(s, text::DecodePolicy::kStrict);
      } catch (const IllFormedError &) {
        strict_ok = false;
      }
    }
    ++checked;
    valid += expect;
    if (text::utf8_valid(s) != expect || strict_ok != expect) ++mismatches;
  };

  // Every string of up to three bytes, then fuzzed longer ones.
  std::vector<std::uint8_t> s;
  check(s);
  for (int a = 0; a < 256; ++a) {
    s = {static_cast<std::uint8_t>(a)};
    check(s);
    for (int b = 0; b < 256; ++b) {
      s = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)};
      check(s);
      s.push_back(0);
      for (int c = 0; c < 256; ++c) {
        s[2] = static_cast<std::uint8_t>(c);
        check(s);
      }
    }
  }
  const std::size_t exhaustive = checked;
  std::mt19937_64 rng(2024);
  with_strict = true;
  for (int i = 0; i < 200000; ++i) check(fuzz_string(rng));

  // Masks: every state reachable from the start, probed byte by byte.
  std::vector<text::Utf8State> frontier{text::Utf8State::start()}, seen = frontier;
  std::size_t mask_mismatches = 0;
  while (!frontier.empty()) {
    const text::Utf8State st = frontier.back();
    frontier.pop_back();
    for (bool allow_eos : {false, true}) {
      const text::ByteMask m = text::allowed_next(st, allow_eos);
      for (int b = 0; b < 256; ++b)
        if (m.bytes[b] != !text::utf8_step(st, static_cast<std::uint8_t>(b)).invalid()) ++mask_mismatches;
      if (m.eos != (allow_eos && st.at_boundary())) ++mask_mismatches;
    }
    for (int b = 0; b < 256; ++b) {
      const text::Utf8State next = text::utf8_step(st, static_cast<std::uint8_t>(b));
      if (next.invalid() || std::find(seen.begin(), seen.end(), next) != seen.end()) continue;
      seen.push_back(next);
      frontier.push_back(next);
    }
  }
  bool invalid_rejected = false;
  try {
    text::allowed_next(text::Utf8State::invalid_state(), true);
  } catch (const text::InvalidStateError &) {
    invalid_rejected = true;
  }

  return {mismatches == 0 && mask_mismatches == 0 && invalid_rejected,
          format("%zu strings (%zu exhaustive, %zu well-formed), %zu decision mismatches; "
                 "%zu reachable states, %zu mask mismatches",
                 checked, exhaustive, valid, mismatches, seen.size(), mask_mismatches)};
}

namespace {

a2b::ModelConfig random_byte_model(std::uint64_t seed) {
  a2b::ModelConfig c;
  c.encoder_layers = 1;
  c.encoder_width = 16;
  c.decoder_width = 16;
  c.attention_heads = 2;
  c.attention_dim = 8;
  c.embedding_dim = 8;
  c.seed = seed;
  return c;
}

corpus::FeatureMatrix random_features(std::mt19937_64 &rng, int dim) {
  const int frames = std::uniform_int_distribution<int>(3, 30)(rng);
  std::normal_distribution<double> n(0.0, 1.0);
  corpus::FeatureMatrix f = corpus::FeatureMatrix::matrix(frames, dim);
  for (double &v : f.storage()) v = n(rng);
  return f;
}

bool well_formed_body(const std::vector<int> &tokens) {
  std::vector<std::uint8_t> bytes(tokens.begin(), tokens.end());
  return text::utf8_valid(text::strip_specials(bytes));
}

}  // namespace

Outcome constrained_decoding(const Context &) {
  constexpr int kModels = 100, kPerModel = 10;
  int decodes = 0, finished = 0, ill_formed = 0, invalid_prefixes = 0, multibyte = 0;
  int control_ill = 0;
  for (int k = 0; k < kModels; ++k) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(k);
    a2b::A2BModel model(random_byte_model(seed));
    // Spread the output distribution so multi-byte leads and EOS both occur.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> spread(0.0, 2.0);
    core::Tensor &bias = model.params().at("out.b").value;
    for (double &v : bias.storage()) v = spread(rng);
    bias[text::kEos] += 3.0;

    for (int u = 0; u < kPerModel; ++u) {
      const corpus::FeatureMatrix f = random_features(rng, model.config().feature_dim);
      a2b::A2BScorer scorer(model, f, {});
      decode::BeamConfig cfg = a2b::default_beam(model.config());
      cfg.beam_size = 1 + (u % 4);
      cfg.max_len = 32;
      const auto hyps = decode::beam_search(scorer, cfg);
      ++decodes;
      for (const auto &h : hyps) {
        if (h.utf8.invalid()) ++invalid_prefixes;
        for (int t : h.tokens) multibyte += t >= 0xC2 && t <= 0xF4;
        if (!h.finished) continue;
        ++finished;
        if (!well_formed_body(h.tokens)) ++ill_formed;
      }
    }

    // Negative control: continuation bytes favoured, constraint off.
    for (int b = 0x80; b <= 0xBF; ++b) bias[b] += 6.0;
    const corpus::FeatureMatrix f = random_features(rng, model.config().feature_dim);
    a2b::A2BScorer scorer(model, f, {});
    const decode::Hypothesis h =
        decode::greedy_decode(scorer, {.beam_size = 1, .max_len = 16, .constrain_utf8 = false});
    if (!well_formed_body(h.tokens)) ++control_ill;
  }
  const bool pass = ill_formed == 0 && invalid_prefixes == 0 && finished > 0 && control_ill > 0;
  return {pass, format("%d constrained decodes: %d finished hypotheses, %d ill-formed, %d invalid "
                       "prefixes, %d multi-byte lead bytes; control: %d/%d ill-formed",
                       decodes, finished, ill_formed, invalid_prefixes, multibyte, control_ill, kModels)};
}

namespace {

struct OracleCell {
  int cost = 0;
  int subs = 0;
};

// Lower cost first, then more substitutions.
bool better(OracleCell a, OracleCell b) { return a.cost != b.cost ? a.cost < b.cost : a.subs > b.subs; }

template <typename T>
score::AlignmentCounts oracle_counts(const std::vector<T> &ref, const std::vector<T> &hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<OracleCell>> d(n + 1, std::vector<OracleCell>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = {static_cast<int>(i), 0};
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = {static_cast<int>(j), 0};
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      OracleCell best{d[i - 1][j - 1].cost + !same, d[i - 1][j - 1].subs + !same};
      const OracleCell del{d[i - 1][j].cost + 1, d[i - 1][j].subs};
      const OracleCell ins{d[i][j - 1].cost + 1, d[i][j - 1].subs};
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      d[i][j] = best;
    }
  const OracleCell o = d[n][m];
  const int edits = o.cost - o.subs;
  const int diff = static_cast<int>(n) - static_cast<int>(m);
  return {o.subs, (edits + diff) / 2, (edits - diff) / 2, static_cast<std::int64_t>(n)};
}

std::u32string join(const std::vector<std::u32string> &words, const std::u32string &sep) {
  std::u32string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? sep : U"") + words[i];
  return out;
}

}  // namespace

Outcome scoring_oracle(const Context &ctx) {
  // All lists of length <= 8 over {0, 1, 2} in depth-first trie order, so a
  // hypothesis's oracle column extends its parent's.
  constexpr int kMaxLen = 8;
  std::vector<std::vector<int>> lists;
  std::vector<int> cur;
  auto gen = [&](auto &&self) -> void {
    lists.push_back(cur);
    if (cur.size() == kMaxLen) return;
    for (int s = 0; s < 3; ++s) {
      cur.push_back(s);
      self(self);
      cur.pop_back();
    }
  };
  gen(gen);
  std::vector<std::u32string> chars, words;
  for (const auto &l : lists) {
    std::u32string c, w;
    for (int x : l) {
      c.push_back(U'a' + static_cast<char32_t>(x));
      if (!w.empty()) w.push_back(U' ');
      w.push_back(U'a' + static_cast<char32_t>(x));
    }
    chars.push_back(c);
    words.push_back(w);
  }

  std::atomic<long long> pairs{0}, bad{0};
  auto shard = [&](std::size_t first, std::size_t stride) {
    long long my_pairs = 0, my_bad = 0;
    for (std::size_t ri = first; ri < lists.size(); ri += stride) {
      const auto &ref = lists[ri];
      if (ref.empty()) continue;
      const int n = static_cast<int>(ref.size());
      OracleCell cols[kMaxLen + 1][kMaxLen + 1];
      for (int i = 0; i <= n; ++i) cols[0][i] = {i, 0};
      std::size_t k = 0;
      auto dfs = [&](auto &&self, int depth) -> void {
        const std::size_t hi = k++;
        const OracleCell o = cols[depth][n];
        const int edits = o.cost - o.subs;
        const score::AlignmentCounts want{o.subs, (edits + n - depth) / 2, (edits - n + depth) / 2, n};
        ++my_pairs;
        if (!(score::align(ref, lists[hi]) == want) || !(score::ter_counts(chars[ri], chars[hi]) == want) ||
            !(score::wer_counts(words[ri], words[hi]) == want))
          ++my_bad;
        if (depth == kMaxLen) return;
        for (int s = 0; s < 3; ++s) {
          const OracleCell *p = cols[depth];
          OracleCell *q = cols[depth + 1];
          q[0] = {depth + 1, 0};
          for (int i = 1; i <= n; ++i) {
            const bool same = ref[i - 1] == s;
            OracleCell b{p[i - 1].cost + !same, p[i - 1].subs + !same};
            const OracleCell ins{p[i].cost + 1, p[i].subs};
            const OracleCell del{q[i - 1].cost + 1, q[i - 1].subs};
            if (better(ins, b)) b = ins;
            if (better(del, b)) b = del;
            q[i] = b;
          }
          self(self, depth + 1);
        }
      };
      dfs(dfs, 0);
    }
    pairs += my_pairs;
    bad += my_bad;
  };
  const std::size_t workers = static_cast<std::size_t>(ctx.threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(shard, w, workers);
  shard(0, workers);
  for (auto &t : pool) t.join();

  // Random pairs: longer sequences, bigger alphabets, messy whitespace.
  std::mt19937_64 rng(99);
  const std::u32string alphabet = U"abcdeアイウ가";
  const std::vector<std::u32string> spaces = {U" ", U"  ", U"\t", U"　", U" \n"};
  long long random_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    auto word_list = [&](int max_words) {
      std::vector<std::u32string> w(std::uniform_int_distribution<int>(0, max_words)(rng));
      for (auto &x : w) {
        const int len = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int c = 0; c < len; ++c)
          x.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
      }
      return w;
    };
    std::vector<std::u32string> rw = word_list(12), hw = word_list(12);
    if (rw.empty()) rw.push_back(U"a");
    const std::u32string &sep = spaces[static_cast<std::size_t>(i) % spaces.size()];
    const std::u32string ref = join(rw, sep), hyp = U" " + join(hw, U" ") + sep;
    std::vector<char32_t> rc, hc;
    for (const auto &w : rw) rc.insert(rc.end(), w.begin(), w.end());
    for (const auto &w : hw) hc.insert(hc.end(), w.begin(), w.end());
    if (!(score::wer_counts(ref, hyp) == oracle_counts(rw, hw))) ++random_bad;
    if (!(score::ter_counts(ref, hyp) == oracle_counts(rc, hc))) ++random_bad;
    if (!(score::align(rc, hc) == oracle_counts(rc, hc))) ++random_bad;
  }

  return {bad == 0 && random_bad == 0,
          format("%lld exhaustive pairs x {align, ter, wer}: %lld mismatches; 10000 random pairs: %lld "
                 "mismatches; %zu threads",
                 pairs.load(), bad.load(), random_bad, workers)};
}

}  // namespace bytespeech::acceptance
