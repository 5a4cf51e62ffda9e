// src/score.cc

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

#include "bytespeech/score.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bytespeech/bytetext.h"

namespace bytespeech::score {

double AlignmentCounts::rate() const {
  if (ref_tokens <= 0) throw EmptyReferenceError();
  return static_cast<double>(errors()) / static_cast<double>(ref_tokens);
}

AlignmentCounts &AlignmentCounts::operator+=(const AlignmentCounts &o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_tokens += o.ref_tokens;
  return *this;
}

namespace {

// Shared by align() and the allocation-free wer/ter paths; Seq needs size()
// and operator[].
template <typename Seq>
AlignmentCounts align_seq(const Seq &ref, const Seq &hyp) {
  if (ref.size() == 0) throw EmptyReferenceError();
  const std::size_t n = ref.size(), m = hyp.size();
  // Cell (i, j) turns ref[0..i) into hyp[0..j): minimal edits, then the
  // most substitutions among minimal scripts. Fixing S fixes D and I, since
  // D - I = n - m, which makes the counts symmetric under swapping sides.
  // Both keys pack into cost * 2^32 - subs, so a plain minimum orders them.
  using Key = std::int64_t;
  constexpr Key kEdit = Key{1} << 32;
  constexpr std::size_t kStackRow = 64;
  Key stack_row[kStackRow];
  std::vector<Key> heap_row;
  Key *row = stack_row;
  if (m + 1 > kStackRow) {
    heap_row.resize(m + 1);
    row = heap_row.data();
  }
  for (std::size_t j = 0; j <= m; ++j) row[j] = static_cast<Key>(j) * kEdit;
  for (std::size_t i = 1; i <= n; ++i) {
    Key diag = row[0];
    Key left = static_cast<Key>(i) * kEdit;
    row[0] = left;
    const auto &r = ref[i - 1];
    for (std::size_t j = 1; j <= m; ++j) {
      const Key up = row[j];
      const Key best = std::min(diag + (r == hyp[j - 1] ? 0 : kEdit - 1), std::min(up, left) + kEdit);
      diag = up;
      row[j] = left = best;
    }
  }
  const Key key = row[m];
  const std::int64_t cost = (key + kEdit - 1) / kEdit;
  AlignmentCounts c;
  c.ref_tokens = static_cast<std::int64_t>(n);
  c.substitutions = cost * kEdit - key;
  const std::int64_t edits = cost - c.substitutions;
  const std::int64_t diff = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(m);
  c.deletions = (edits + diff) / 2;
  c.insertions = (edits - diff) / 2;
  return c;
}

}  // namespace

template <typename Token>
AlignmentCounts align(const std::vector<Token> &ref, const std::vector<Token> &hyp) {
  return align_seq(ref, hyp);
}

template AlignmentCounts align(const std::vector<std::u32string> &,
                               const std::vector<std::u32string> &);
template AlignmentCounts align(const std::vector<char32_t> &, const std::vector<char32_t> &);
template AlignmentCounts align(const std::vector<int> &, const std::vector<int> &);
template AlignmentCounts align(const std::vector<std::string> &, const std::vector<std::string> &);

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0x3000 || c == 0x00A0;
}

std::vector<std::u32string> word_tokens(std::u32string_view text) {
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t c : text) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<char32_t> codepoint_tokens(std::u32string_view text) {
  std::vector<char32_t> out;
  for (char32_t c : text)
    if (!is_space(c)) out.push_back(c);
  return out;
}

namespace {

// Same splits as word_tokens / codepoint_tokens, into reused buffers.
void split_words(std::u32string_view text, std::vector<std::u32string_view> &out) {
  out.clear();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || is_space(text[i])) {
      if (i > start) out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
}

void strip_spaces(std::u32string_view text, std::u32string &out) {
  out.clear();
  for (char32_t c : text)
    if (!is_space(c)) out.push_back(c);
}

}  // namespace

AlignmentCounts wer_counts(std::u32string_view ref, std::u32string_view hyp) {
  thread_local std::vector<std::u32string_view> r, h;
  split_words(ref, r);
  split_words(hyp, h);
  return align_seq(r, h);
}

AlignmentCounts ter_counts(std::u32string_view ref, std::u32string_view hyp) {
  thread_local std::u32string r, h;
  strip_spaces(ref, r);
  strip_spaces(hyp, h);
  return align_seq(r, h);
}

double wer(std::u32string_view ref, std::u32string_view hyp) { return wer_counts(ref, hyp).rate(); }
double ter(std::u32string_view ref, std::u32string_view hyp) { return ter_counts(ref, hyp).rate(); }

std::string_view metric_name(Metric m) { return m == Metric::kWer ? "WER" : "TER"; }

AlignmentCounts score_counts(Metric m, std::u32string_view ref, std::u32string_view hyp) {
  return m == Metric::kWer ? wer_counts(ref, hyp) : ter_counts(ref, hyp);
}

void write_score_line(std::ostream &os, const std::string &utt_id, const AlignmentCounts &c) {
  char rate[32];
  std::snprintf(rate, sizeof rate, "%.6f", c.rate());
  os << utt_id << '\t' << c.substitutions << '\t' << c.deletions << '\t' << c.insertions << '\t'
     << c.ref_tokens << '\t' << rate << '\n';
}

double relative_change(double old_rate, double new_rate) {
  if (old_rate == 0.0) throw std::invalid_argument("relative_change: old rate is zero");
  return (old_rate - new_rate) / old_rate;
}

namespace {

std::string percent_cell(const ReportRow &row, const std::string &lang) {
  auto it = row.cells.find(lang);
  if (it == row.cells.end() || it->second.ref_tokens == 0) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * it->second.rate());
  return buf;
}

// Display width in codepoints, adequate for the ASCII-only cells we print.
std::size_t width_of(const std::string &s) {
  return text::from_utf8(s).size();
}

}  // namespace

std::string Report::to_text() const {
  std::vector<std::string> header = {"System"};
  for (const auto &l : languages) {
    auto it = metrics.find(l);
    const Metric m = it == metrics.end() ? Metric::kTer : it->second;
    header.push_back(l + " " + std::string(metric_name(m)) + "(%)");
  }
  std::vector<std::vector<std::string>> table = {header};
  for (const auto &r : rows) {
    std::vector<std::string> line = {r.system};
    for (const auto &l : languages) line.push_back(percent_cell(r, l));
    table.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto &line : table)
    for (std::size_t k = 0; k < line.size(); ++k) widths[k] = std::max(widths[k], width_of(line[k]));
  std::ostringstream os;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t k = 0; k < table[r].size(); ++k) {
      const std::string &cell = table[r][k];
      const std::size_t pad = widths[k] - width_of(cell);
      if (k == 0) os << cell << std::string(pad, ' ');
      else os << " | " << std::string(pad, ' ') << cell;
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) total += widths[k] + (k ? 3 : 0);
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

std::string Report::to_tsv() const {
  std::ostringstream os;
  os << "system";
  for (const auto &l : languages) os << '\t' << l;
  os << '\n';
  for (const auto &r : rows) {
    os << r.system;
    for (const auto &l : languages) os << '\t' << percent_cell(r, l);
    os << '\n';
  }
  return os.str();
}

}  // namespace bytespeech::score
