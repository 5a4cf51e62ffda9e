// src/bytetext.cc

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

#include "bytespeech/bytetext.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace bytespeech::text {

bool is_scalar_value(char32_t c) {
  return c <= 0x10FFFF && !(c >= 0xD800 && c <= 0xDFFF);
}

namespace {

void append_utf8(char32_t c, ByteSeq *out) {
  if (!is_scalar_value(c)) {
    throw std::invalid_argument("not a Unicode scalar value");
  }
  if (c < 0x80) {
    out->push_back(static_cast<std::uint8_t>(c));
  } else if (c < 0x800) {
    out->push_back(static_cast<std::uint8_t>(0xC0 | (c >> 6)));
    out->push_back(static_cast<std::uint8_t>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out->push_back(static_cast<std::uint8_t>(0xE0 | (c >> 12)));
    out->push_back(static_cast<std::uint8_t>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<std::uint8_t>(0x80 | (c & 0x3F)));
  } else {
    out->push_back(static_cast<std::uint8_t>(0xF0 | (c >> 18)));
    out->push_back(static_cast<std::uint8_t>(0x80 | ((c >> 12) & 0x3F)));
    out->push_back(static_cast<std::uint8_t>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<std::uint8_t>(0x80 | (c & 0x3F)));
  }
}

Utf8State expect(std::uint8_t remaining, std::uint8_t pending, std::uint8_t lo,
                 std::uint8_t hi) {
  return {Utf8State::Kind::kExpect, remaining, pending, lo, hi};
}

}  // namespace

Utf8State utf8_step(Utf8State state, std::uint8_t b) {
  switch (state.kind) {
    case Utf8State::Kind::kInvalid:
      return state;
    case Utf8State::Kind::kStart:
      if (b <= 0x7F) return Utf8State::start();
      if (b >= 0xC2 && b <= 0xDF) return expect(1, 1, 0x80, 0xBF);
      if (b == 0xE0) return expect(2, 1, 0xA0, 0xBF);
      if (b == 0xED) return expect(2, 1, 0x80, 0x9F);
      if (b >= 0xE1 && b <= 0xEF) return expect(2, 1, 0x80, 0xBF);
      if (b == 0xF0) return expect(3, 1, 0x90, 0xBF);
      if (b >= 0xF1 && b <= 0xF3) return expect(3, 1, 0x80, 0xBF);
      if (b == 0xF4) return expect(3, 1, 0x80, 0x8F);
      return Utf8State::invalid_state();
    case Utf8State::Kind::kExpect:
      if (b < state.lo || b > state.hi) return Utf8State::invalid_state();
      if (state.remaining == 1) return Utf8State::start();
      return expect(static_cast<std::uint8_t>(state.remaining - 1),
                    static_cast<std::uint8_t>(state.pending + 1), 0x80, 0xBF);
  }
  return Utf8State::invalid_state();
}

Utf8State utf8_run(std::span<const std::uint8_t> bytes) {
  Utf8State s;
  for (std::uint8_t b : bytes) {
    s = utf8_step(s, b);
    if (s.invalid()) break;
  }
  return s;
}

bool utf8_valid(std::span<const std::uint8_t> bytes) {
  return utf8_run(bytes).at_boundary();
}

ByteMask allowed_next(const Utf8State &state, bool allow_eos) {
  if (state.invalid()) throw InvalidStateError();
  ByteMask mask;
  if (state.kind == Utf8State::Kind::kExpect) {
    for (int b = state.lo; b <= state.hi; ++b) mask.bytes.set(static_cast<std::size_t>(b));
  } else {
    for (int b = 0x00; b <= 0x7F; ++b) mask.bytes.set(static_cast<std::size_t>(b));
    for (int b = 0xC2; b <= 0xF4; ++b) mask.bytes.set(static_cast<std::size_t>(b));
  }
  mask.eos = allow_eos && state.at_boundary();
  return mask;
}

ByteSeq encode_bytes(std::u32string_view text, bool add_specials) {
  ByteSeq out;
  out.reserve(text.size() + 2);
  if (add_specials) out.push_back(kSos);
  for (char32_t c : text) append_utf8(c, &out);
  if (add_specials) out.push_back(kEos);
  return out;
}

std::u32string decode_bytes(std::span<const std::uint8_t> bytes, DecodePolicy policy) {
  std::u32string out;
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    Utf8State s;
    std::size_t j = i;
    char32_t c = 0;
    while (j < n) {
      const std::uint8_t b = bytes[j];
      Utf8State next = utf8_step(s, b);
      if (next.invalid()) break;
      if (s.at_boundary()) {
        if (b < 0x80) c = b;
        else if (b < 0xE0) c = b & 0x1F;
        else if (b < 0xF0) c = b & 0x0F;
        else c = b & 0x07;
      } else {
        c = (c << 6) | (b & 0x3F);
      }
      s = next;
      ++j;
      if (s.at_boundary()) break;
    }
    if (j > i && s.at_boundary()) {
      out.push_back(c);
      i = j;
      continue;
    }
    // Ill-formed: either the lead byte itself (j == i), a bad continuation at
    // j, or truncation at end of input.
    if (policy == DecodePolicy::kStrict) throw IllFormedError(j);
    out.push_back(kReplacementChar);
    i = (j == i) ? i + 1 : j;
  }
  return out;
}

ByteSeq strip_specials(std::span<const std::uint8_t> bytes) {
  auto begin = bytes.begin();
  if (begin != bytes.end() && *begin == kSos) ++begin;
  auto end = std::find(begin, bytes.end(), kEos);
  return ByteSeq(begin, end);
}

std::u32string from_utf8(std::string_view utf8) {
  auto p = reinterpret_cast<const std::uint8_t *>(utf8.data());
  return decode_bytes(std::span<const std::uint8_t>(p, utf8.size()), DecodePolicy::kStrict);
}

std::string to_utf8(std::u32string_view text) {
  ByteSeq b = encode_bytes(text, false);
  return std::string(b.begin(), b.end());
}

// ---------------------------------------------------------------------------

GraphemeVocab GraphemeVocab::build(const std::vector<std::u32string> &corpus, int min_count) {
  if (corpus.empty()) throw EmptyCorpusError();
  std::map<char32_t, std::int64_t> counts;
  for (const auto &utt : corpus)
    for (char32_t c : utt) ++counts[c];

  GraphemeVocab v;
  v.sos_ = 1;
  v.eos_ = 2;
  int next = 3;
  for (const auto &[c, n] : counts) {
    if (n < min_count) continue;
    v.ids_[c] = next;
    v.by_id_[next] = c;
    v.counts_[c] = n;
    ++next;
  }
  v.dim_ = next;
  return v;
}

GraphemeVocab GraphemeVocab::byte_valued() {
  GraphemeVocab v;
  for (char32_t c = 1; c < 0x80; ++c) {
    v.ids_[c] = static_cast<int>(c);
    v.by_id_[static_cast<int>(c)] = c;
    v.counts_[c] = 0;
  }
  v.sos_ = kSos;
  v.eos_ = kEos;
  v.dim_ = kByteVocabSize;
  return v;
}

int GraphemeVocab::id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnk : it->second;
}

char32_t GraphemeVocab::symbol(int id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? kReplacementChar : it->second;
}

std::int64_t GraphemeVocab::count(char32_t c) const {
  auto it = counts_.find(c);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<int> GraphemeVocab::encode(std::u32string_view text, bool add_specials) const {
  std::vector<int> out;
  out.reserve(text.size() + 2);
  if (add_specials) out.push_back(sos_);
  for (char32_t c : text) out.push_back(id(c));
  if (add_specials) out.push_back(eos_);
  return out;
}

std::u32string GraphemeVocab::decode(std::span<const int> ids) const {
  std::u32string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i == 0 && ids[i] == sos_) continue;
    if (ids[i] == eos_) break;
    out.push_back(symbol(ids[i]));
  }
  return out;
}

void GraphemeVocab::write(std::ostream &os) const {
  os << "#GVOC1\n";
  os << "#specials\t" << kUnk << '\t' << sos_ << '\t' << eos_ << '\t' << dim_ << '\n';
  for (const auto &[id, c] : by_id_) {
    std::ostringstream hex;
    hex << std::uppercase << std::hex << static_cast<std::uint32_t>(c);
    os << hex.str() << '\t' << id << '\t' << count(c) << '\n';
  }
}

GraphemeVocab GraphemeVocab::read(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line != "#GVOC1")
    throw DataError("BadVocab", "vocabulary file lacks #GVOC1 header");
  GraphemeVocab v;
  bool have_specials = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.rfind("#specials", 0) == 0) {
      std::string tag;
      int unk = -1;
      ls >> tag >> unk >> v.sos_ >> v.eos_ >> v.dim_;
      if (!ls || unk != kUnk) throw DataError("BadVocab", "malformed #specials line");
      have_specials = true;
      continue;
    }
    if (line[0] == '#') continue;
    std::uint32_t cp = 0;
    int id = 0;
    std::int64_t n = 0;
    ls >> std::hex >> cp >> std::dec >> id >> n;
    if (!ls || !is_scalar_value(cp) || id <= 0)
      throw DataError("BadVocab", "malformed vocabulary line: " + line);
    v.ids_[cp] = id;
    v.by_id_[id] = cp;
    v.counts_[cp] = n;
  }
  if (!have_specials) {
    int max_id = 2;
    for (const auto &[id, c] : v.by_id_) max_id = std::max(max_id, id);
    v.dim_ = max_id + 1;
  }
  return v;
}

double oov_rate(const GraphemeVocab &vocab, const std::vector<std::u32string> &corpus) {
  if (corpus.empty()) throw EmptyCorpusError();
  std::int64_t total = 0;
  std::int64_t missing = 0;
  for (const auto &utt : corpus) {
    for (char32_t c : utt) {
      ++total;
      if (!vocab.contains(c)) ++missing;
    }
  }
  if (total == 0) throw EmptyCorpusError();
  return static_cast<double>(missing) / static_cast<double>(total);
}

}  // namespace bytespeech::text
