// tests/unit/test_bytetext.cc

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

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "bytespeech/bytetext.h"
#include "doctest.h"

using namespace bytespeech;
using namespace bytespeech::text;

namespace {

// Decodes scalar by scalar and checks range, overlong and surrogate rules.
bool reference_valid(const ByteSeq &b) {
  std::size_t i = 0;
  while (i < b.size()) {
    const unsigned lead = b[i];
    int n = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      n = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      n = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      n = 3;
      cp = lead & 0x07;
    } else {
      return false;
    }
    if (i + n >= b.size()) return false;
    for (int k = 1; k <= n; ++k) {
      if ((b[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (b[i + k] & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[n] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += static_cast<std::size_t>(n) + 1;
  }
  return true;
}

ByteSeq random_bytes(std::mt19937_64 &rng) {
  // Bias towards plausible UTF-8 so that valid strings are common.
  static constexpr std::uint8_t kInteresting[] = {0x41, 0x7F, 0x80, 0x8F, 0x90, 0x9F, 0xA0,
                                                  0xBF, 0xC0, 0xC1, 0xC2, 0xDF, 0xE0, 0xE3,
                                                  0xED, 0xEF, 0xF0, 0xF4, 0xF5, 0xFF};
  ByteSeq b(rng() % 9);
  for (auto &x : b) {
    x = (rng() % 2) ? kInteresting[rng() % std::size(kInteresting)]
                    : static_cast<std::uint8_t>(rng());
  }
  return b;
}

std::u32string random_text(std::mt19937_64 &rng) {
  static constexpr char32_t kRanges[][2] = {
      {0x20, 0x7E}, {0xA0, 0x7FF}, {0x3040, 0x30FF}, {0xAC00, 0xD7A3}, {0xE000, 0xFFFD},
      {0x10000, 0x10FFFF}};
  std::u32string s(rng() % 12, U'a');
  for (auto &c : s) {
    const auto &r = kRanges[rng() % std::size(kRanges)];
    c = static_cast<char32_t>(r[0] + rng() % (r[1] - r[0] + 1));
  }
  return s;
}

}  // namespace

TEST_CASE("encode_bytes matches known encodings") {
  CHECK(encode_bytes(U"a") == ByteSeq{0x61});
  CHECK(encode_bytes(U"").empty());
  CHECK(encode_bytes(U"オ") == ByteSeq{0xE3, 0x82, 0xAA});
  CHECK(encode_bytes(U"a", true) == ByteSeq{kSos, 0x61, kEos});
  CHECK(encode_bytes(U"\U0001F600") == ByteSeq{0xF0, 0x9F, 0x98, 0x80});
}

TEST_CASE("decode_bytes strict and replace") {
  const ByteSeq ok{0x61, 0xE3, 0x82, 0xAA};
  CHECK(decode_bytes(ok, DecodePolicy::kStrict) == U"aオ");
  CHECK(decode_bytes(ByteSeq{0x80}, DecodePolicy::kReplace) == U"�");
  CHECK(decode_bytes(ByteSeq{0xE3, 0x82}, DecodePolicy::kReplace) == U"�");
  CHECK(decode_bytes(ByteSeq{0x61, 0xE3, 0x82, 0x62}, DecodePolicy::kReplace) == U"a�b");
  // Overlong lead: each byte is its own maximal subpart.
  CHECK(decode_bytes(ByteSeq{0xC0, 0xAF}, DecodePolicy::kReplace) == U"��");
  // Surrogate: ED is valid alone but A0 is not a valid second byte.
  CHECK(decode_bytes(ByteSeq{0xED, 0xA0, 0x80}, DecodePolicy::kReplace) == U"���");

  try {
    decode_bytes(ByteSeq{0x61, 0x62, 0xFF}, DecodePolicy::kStrict);
    FAIL("expected IllFormedError");
  } catch (const IllFormedError &e) {
    CHECK(e.position() == 2);
    CHECK(e.category() == ErrorCategory::kData);
  }
}

TEST_CASE("utf8_step table examples") {
  const Utf8State s0 = Utf8State::start();
  CHECK(utf8_step(s0, 0x61).at_boundary());
  const Utf8State e3 = utf8_step(s0, 0xE3);
  CHECK(e3.kind == Utf8State::Kind::kExpect);
  CHECK(e3.remaining == 2);
  CHECK(e3.lo == 0x80);
  CHECK(e3.hi == 0xBF);
  CHECK(utf8_step(s0, 0xC0).invalid());
  CHECK(utf8_step(Utf8State::invalid_state(), 0x61).invalid());
}

TEST_CASE("allowed_next examples") {
  const ByteMask start = allowed_next(Utf8State::start(), true);
  for (int b = 0; b < 256; ++b) {
    const bool expected = b <= 0x7F || (b >= 0xC2 && b <= 0xF4);
    CHECK_MESSAGE(start.bytes[b] == expected, "byte " << b);
  }
  CHECK(start.eos);
  CHECK_FALSE(allowed_next(Utf8State::start(), false).eos);

  const ByteMask ed = allowed_next(utf8_step(Utf8State::start(), 0xED), true);
  for (int b = 0; b < 256; ++b) CHECK(ed.bytes[b] == (b >= 0x80 && b <= 0x9F));
  CHECK_FALSE(ed.eos);

  const ByteMask mid = allowed_next(utf8_run(ByteSeq{0xE3, 0x82}), true);
  for (int b = 0; b < 256; ++b) CHECK(mid.bytes[b] == (b >= 0x80 && b <= 0xBF));
  CHECK_FALSE(mid.eos);

  CHECK_THROWS_AS(allowed_next(Utf8State::invalid_state(), true), InvalidStateError);
}

TEST_CASE("automaton agrees with reference validator on fuzzed strings") {
  std::mt19937_64 rng(1);
  int valid = 0;
  for (int i = 0; i < 100000; ++i) {
    const ByteSeq b = random_bytes(rng);
    const bool ref = reference_valid(b);
    valid += ref ? 1 : 0;
    REQUIRE_MESSAGE(utf8_valid(b) == ref, "sample " << i);
  }
  CHECK(valid > 10000);
}

TEST_CASE("allowed_next agrees with utf8_step in every reachable state") {
  std::vector<Utf8State> frontier{Utf8State::start()};
  std::vector<Utf8State> seen = frontier;
  while (!frontier.empty()) {
    const Utf8State s = frontier.back();
    frontier.pop_back();
    const ByteMask m = allowed_next(s, true);
    CHECK(m.eos == s.at_boundary());
    for (int b = 0; b < 256; ++b) {
      const Utf8State next = utf8_step(s, static_cast<std::uint8_t>(b));
      CHECK(m.bytes[b] == !next.invalid());
      if (!next.invalid() && std::find(seen.begin(), seen.end(), next) == seen.end()) {
        seen.push_back(next);
        frontier.push_back(next);
      }
    }
  }
  CHECK(seen.size() >= 9);
}

TEST_CASE("round trip over random mixed-script text") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const std::u32string s = random_text(rng);
    const ByteSeq b = encode_bytes(s);
    CHECK(utf8_valid(b));
    CHECK(decode_bytes(b, DecodePolicy::kStrict) == s);
    CHECK(from_utf8(to_utf8(s)) == s);
  }
}

TEST_CASE("strip_specials") {
  CHECK(strip_specials(ByteSeq{kSos, 0x61, kEos, 0x62}) == ByteSeq{0x61});
  CHECK(strip_specials(ByteSeq{0x61, 0x62}) == ByteSeq{0x61, 0x62});
  CHECK(strip_specials(ByteSeq{kEos}).empty());
}

TEST_CASE("grapheme vocabulary construction") {
  const GraphemeVocab v = GraphemeVocab::build({U"ab", U"ba"});
  CHECK(v.num_symbols() == 2);
  CHECK(v.id(U'a') == 3);
  CHECK(v.id(U'b') == 4);
  CHECK(v.count(U'a') == 2);
  CHECK(v.output_dim() == 5);

  const GraphemeVocab t = GraphemeVocab::build({U"aab"}, 2);
  CHECK(t.contains(U'a'));
  CHECK_FALSE(t.contains(U'b'));
  CHECK(t.id(U'b') == GraphemeVocab::kUnk);

  CHECK_THROWS_AS(GraphemeVocab::build({}), EmptyCorpusError);

  const std::vector<int> ids = v.encode(U"ab", true);
  CHECK(ids == std::vector<int>{v.sos_id(), 3, 4, v.eos_id()});
  CHECK(v.decode(ids) == U"ab");
  CHECK(v.symbol(GraphemeVocab::kUnk) == kReplacementChar);
}

TEST_CASE("vocabulary size agrees with an independent frequency scan") {
  std::mt19937_64 rng(3);
  std::vector<std::u32string> corpus(500);
  for (auto &s : corpus) {
    s.resize(3 + rng() % 6);
    for (auto &c : s) c = static_cast<char32_t>(0x30A1 + rng() % 60);
  }
  for (int min_count : {1, 20, 40}) {
    std::map<char32_t, int> freq;
    for (const auto &s : corpus)
      for (char32_t c : s) ++freq[c];
    std::size_t expected = 0;
    for (const auto &[c, n] : freq) expected += n >= min_count ? 1 : 0;
    const GraphemeVocab v = GraphemeVocab::build(corpus, min_count);
    CHECK(v.num_symbols() == expected);
    for (const auto &[c, n] : v.symbols()) CHECK(v.count(c) >= min_count);
  }
}

TEST_CASE("oov rate") {
  const std::vector<std::u32string> corpus{U"abc", U"cab"};
  CHECK(oov_rate(GraphemeVocab::build(corpus), corpus) == 0.0);
  CHECK(oov_rate(GraphemeVocab::build({U"a"}), {U"ab"}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(oov_rate(GraphemeVocab::build({U"a"}), {}), EmptyCorpusError);

  // 100 tokens, 3 of them unseen.
  std::u32string held(97, U'a');
  held += U"xyz";
  CHECK(oov_rate(GraphemeVocab::build({U"abc"}), {held}) == doctest::Approx(0.03));
}

TEST_CASE("byte-valued vocabulary matches byte encoding for ASCII text") {
  const GraphemeVocab v = GraphemeVocab::byte_valued();
  const std::u32string s = U"hello world~";
  const ByteSeq b = encode_bytes(s, true);
  const std::vector<int> ids = v.encode(s, true);
  REQUIRE(ids.size() == b.size());
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(ids[i] == b[i]);
  CHECK(v.output_dim() == kByteVocabSize);
}

TEST_CASE("vocabulary serialization round trip") {
  const GraphemeVocab v = GraphemeVocab::build({U"カタカナ", U"abc"});
  std::stringstream ss;
  v.write(ss);
  CHECK(ss.str().rfind("#GVOC1", 0) == 0);
  CHECK(GraphemeVocab::read(ss) == v);

  std::stringstream bad("nope\n");
  CHECK_THROWS_AS(GraphemeVocab::read(bad), DataError);
}
