// include/bytespeech/bytetext.h

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

#ifndef BYTESPEECH_BYTETEXT_H_
#define BYTESPEECH_BYTETEXT_H_

#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bytespeech/error.h"

namespace bytespeech::text {

// Start/end markers inside byte targets. Neither value can occur in
// well-formed UTF-8, so the output layer stays exactly 256 wide.
inline constexpr std::uint8_t kSos = 0xFE;
inline constexpr std::uint8_t kEos = 0xFF;
inline constexpr int kByteVocabSize = 256;
inline constexpr char32_t kReplacementChar = 0xFFFD;

using ByteSeq = std::vector<std::uint8_t>;

// UTF-8 text <-> codepoint helpers. from_utf8 is strict and throws
// IllFormedError; to_utf8 expects valid scalars.
std::u32string from_utf8(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

bool is_scalar_value(char32_t c);

// UTF-8 encoding of `text`, optionally wrapped as SOS ... EOS.
ByteSeq encode_bytes(std::u32string_view text, bool add_specials = false);

enum class DecodePolicy { kStrict, kReplace };

// kStrict throws IllFormedError at the first bad byte. kReplace maps each
// maximal ill-formed subpart to a single U+FFFD.
std::u32string decode_bytes(std::span<const std::uint8_t> bytes, DecodePolicy policy);

// Drops a leading SOS and everything from the first EOS on.
ByteSeq strip_specials(std::span<const std::uint8_t> bytes);

// State of the incremental well-formedness recognizer (RFC 3629 table).
// `remaining` continuation bytes are still expected; the next one must lie
// in [lo, hi]. All later continuation bytes are in [0x80, 0xBF].
struct Utf8State {
  enum class Kind : std::uint8_t { kStart, kExpect, kInvalid };

  Kind kind = Kind::kStart;
  std::uint8_t remaining = 0;
  std::uint8_t pending = 0;  // bytes consumed of the current scalar
  std::uint8_t lo = 0;
  std::uint8_t hi = 0;

  bool at_boundary() const { return kind == Kind::kStart; }
  bool invalid() const { return kind == Kind::kInvalid; }

  static Utf8State start() { return {}; }
  static Utf8State invalid_state() { return {Kind::kInvalid, 0, 0, 0, 0}; }

  friend bool operator==(const Utf8State &, const Utf8State &) = default;
};

Utf8State utf8_step(Utf8State state, std::uint8_t byte);

// Runs the recognizer over a whole string from kStart.
Utf8State utf8_run(std::span<const std::uint8_t> bytes);

// True iff `bytes` is well-formed and ends on a scalar boundary.
bool utf8_valid(std::span<const std::uint8_t> bytes);

struct ByteMask {
  std::bitset<256> bytes;
  bool eos = false;
};

class InvalidStateError : public DataError {
 public:
  InvalidStateError() : DataError("InvalidState", "UTF-8 recognizer is in the invalid state") {}
};

ByteMask allowed_next(const Utf8State &state, bool allow_eos);

class EmptyCorpusError : public DataError {
 public:
  EmptyCorpusError() : DataError("EmptyCorpus", "corpus is empty") {}
};

// Codepoint vocabulary for the grapheme-output baseline. Regular vocabularies
// use UNK=0, SOS=1, EOS=2 and give symbols ids 3.. in codepoint order.
class GraphemeVocab {
 public:
  static constexpr int kUnk = 0;

  GraphemeVocab() = default;

  static GraphemeVocab build(const std::vector<std::u32string> &corpus, int min_count = 1);

  // Identity vocabulary over U+0001..U+007F with SOS/EOS at 0xFE/0xFF, so ids
  // coincide with UTF-8 bytes for single-byte scripts.
  static GraphemeVocab byte_valued();

  int id(char32_t c) const;
  bool contains(char32_t c) const { return ids_.count(c) != 0; }
  // U+FFFD for UNK and for ids without a symbol.
  char32_t symbol(int id) const;

  int unk_id() const { return kUnk; }
  int sos_id() const { return sos_; }
  int eos_id() const { return eos_; }
  // Width of the output layer: largest id + 1.
  int output_dim() const { return dim_; }
  std::size_t num_symbols() const { return ids_.size(); }
  std::int64_t count(char32_t c) const;

  const std::map<char32_t, int> &symbols() const { return ids_; }

  std::vector<int> encode(std::u32string_view text, bool add_specials) const;
  // Stops at EOS; skips SOS.
  std::u32string decode(std::span<const int> ids) const;

  void write(std::ostream &os) const;
  static GraphemeVocab read(std::istream &is);

  friend bool operator==(const GraphemeVocab &, const GraphemeVocab &) = default;

 private:
  std::map<char32_t, int> ids_;
  std::map<char32_t, std::int64_t> counts_;
  std::map<int, char32_t> by_id_;
  int sos_ = 1;
  int eos_ = 2;
  int dim_ = 3;
};

// Fraction of codepoint tokens in `corpus` that `vocab` does not contain.
double oov_rate(const GraphemeVocab &vocab, const std::vector<std::u32string> &corpus);

}  // namespace bytespeech::text

#endif  // BYTESPEECH_BYTETEXT_H_
