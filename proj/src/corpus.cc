// src/corpus.cc

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

#include "bytespeech/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"

#include "bytespeech/bytetext.h"
#include "bytespeech/hash.h"

namespace bytespeech::corpus {

namespace fs = std::filesystem;

void SynthProfile::validate() const {
  if (dim < 1) throw InvalidConfigError("synth profile: dim must be >= 1");
  if (kmin < 1 || kmax < kmin) throw InvalidConfigError("synth profile: need 1 <= kmin <= kmax");
  if (!(noise_sigma >= 0.0)) throw InvalidConfigError("synth profile: noise_sigma must be >= 0");
}

std::vector<double> symbol_template(const SynthProfile &profile, char32_t c) {
  std::mt19937_64 rng(hash_combine(profile.seed, 0x7E3D1A7E, static_cast<std::uint64_t>(c)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(profile.dim));
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (double &x : v) {
      x = normal(rng);
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (double &x : v) x /= norm;
  return v;
}

int symbol_frames(const SynthProfile &profile, char32_t c, std::size_t position) {
  const std::uint64_t span = static_cast<std::uint64_t>(profile.kmax - profile.kmin + 1);
  const std::uint64_t h =
      hash_combine(profile.seed, 0xF4A3E5, static_cast<std::uint64_t>(c), position);
  return profile.kmin + static_cast<int>(h % span);
}

FeatureMatrix synth_features(std::u32string_view text, const SynthProfile &profile,
                             std::uint64_t utt_seed) {
  if (text.empty()) throw EmptyTextError();
  profile.validate();
  std::vector<int> counts(text.size());
  int total = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    counts[i] = symbol_frames(profile, text[i], i);
    total += counts[i];
  }
  FeatureMatrix m = FeatureMatrix::matrix(total, profile.dim);
  std::map<char32_t, std::vector<double>> templates;
  int row = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto it = templates.find(text[i]);
    if (it == templates.end()) it = templates.emplace(text[i], symbol_template(profile, text[i])).first;
    for (int k = 0; k < counts[i]; ++k, ++row)
      for (int d = 0; d < profile.dim; ++d) m(row, d) = it->second[static_cast<std::size_t>(d)];
  }
  if (profile.noise_sigma > 0.0) {
    std::mt19937_64 rng(utt_seed);
    std::normal_distribution<double> normal(0.0, profile.noise_sigma);
    for (double &x : m.values()) x += normal(rng);
  }
  return m;
}

std::uint64_t utterance_seed(std::uint64_t corpus_seed, std::string_view language,
                             std::size_t index) {
  return hash_combine(corpus_seed, hash_string(language), index);
}

// ---------------------------------------------------------------------------

namespace {

std::u32string codepoint_range(char32_t first, char32_t last) {
  std::u32string s;
  for (char32_t c = first; c <= last; ++c) s.push_back(c);
  return s;
}

}  // namespace

SyntheticLanguage preset_language(std::string_view name) {
  SyntheticLanguage l;
  l.name = std::string(name);
  if (name == "latin") {
    l.alphabet = codepoint_range(U'a', U'z');
    l.min_words = 1;
    l.max_words = 2;
    l.min_word_len = 2;
    l.max_word_len = 5;
    l.separator = U' ';
  } else if (name == "katakana") {
    // Gojuon rows a..wa plus n; spans both E3 82 xx and E3 83 xx encodings.
    l.alphabet = U"アイウエオカキクケコサシスセソタチツテトナニヌネノハヒフヘホマミムメモヤユヨラリルレロワン";
    l.min_word_len = 3;
    l.max_word_len = 6;
    l.separator = 0;
  } else if (name == "hangul") {
    l.alphabet = U"가나다라마바사아자차카타파하고노도로모보소오조호";
    l.min_word_len = 3;
    l.max_word_len = 5;
    l.separator = 0;
  } else if (name == "cyrillic") {
    l.alphabet = codepoint_range(U'а', U'я');
    l.min_words = 1;
    l.max_words = 2;
    l.min_word_len = 2;
    l.max_word_len = 5;
    l.separator = U' ';
  } else {
    throw InvalidConfigError("unknown language preset '" + std::string(name) + "'");
  }
  return l;
}

namespace {

int uniform_int(std::mt19937_64 &rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::u32string random_word(const SyntheticLanguage &lang, std::mt19937_64 &rng, int min_len,
                           int max_len) {
  std::u32string w;
  const int len = uniform_int(rng, min_len, max_len);
  for (int i = 0; i < len; ++i)
    w.push_back(lang.alphabet[rng() % lang.alphabet.size()]);
  return w;
}

}  // namespace

std::vector<std::u32string> generate_texts(const SyntheticLanguage &lang, std::size_t n,
                                           std::uint64_t seed) {
  if (lang.alphabet.empty()) throw InvalidConfigError("language has an empty alphabet");
  std::mt19937_64 rng(hash_combine(seed, hash_string(lang.name)));
  std::vector<std::u32string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::u32string text;
    const int words = uniform_int(rng, lang.min_words, lang.max_words);
    for (int w = 0; w < words; ++w) {
      if (w > 0 && lang.separator != 0) text.push_back(lang.separator);
      text += random_word(lang, rng, lang.min_word_len, lang.max_word_len);
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::vector<std::u32string> generate_code_switch_texts(const SyntheticLanguage &host,
                                                       const SyntheticLanguage &guest,
                                                       std::size_t n, int guest_min,
                                                       int guest_max, std::uint64_t seed) {
  std::mt19937_64 rng(hash_combine(seed, hash_string(host.name), hash_string(guest.name)));
  std::vector<std::u32string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::u32string text = random_word(host, rng, 2, 4);
    text += random_word(guest, rng, guest_min, guest_max);
    text += random_word(host, rng, 1, 3);
    out.push_back(std::move(text));
  }
  return out;
}

std::vector<Utterance> make_utterances(const std::vector<std::u32string> &texts,
                                       const std::string &language, const SynthProfile &profile,
                                       std::uint64_t corpus_seed) {
  std::vector<Utterance> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Utterance u;
    char id[32];
    std::snprintf(id, sizeof id, "-%06zu", i);
    u.id = language + id;
    u.text = texts[i];
    u.language = language;
    u.features = synth_features(texts[i], profile, utterance_seed(corpus_seed, language, i));
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, double> normalize_ratios(const std::map<std::string, double> &ratios) {
  double total = 0.0;
  for (const auto &[lang, r] : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r))
      throw InvalidConfigError("mixing ratio for " + lang + " must be a nonnegative number");
    total += r;
  }
  if (!(total > 0.0)) throw InvalidConfigError("at least one mixing ratio must be positive");
  std::map<std::string, double> out;
  for (const auto &[lang, r] : ratios) out[lang] = r / total;
  return out;
}

MixSampler::MixSampler(const CorpusMap &corpora, const std::map<std::string, double> &ratios,
                       std::uint64_t seed)
    : state_(seed) {
  double acc = 0.0;
  for (const auto &[lang, p] : normalize_ratios(ratios)) {
    if (p == 0.0) continue;
    auto it = corpora.find(lang);
    if (it == corpora.end() || it->second.empty()) throw EmptyLanguageCorpusError(lang);
    languages_.push_back(lang);
    probs_.push_back(p);
    acc += p;
    cumulative_.push_back(acc);
    lists_.push_back(&it->second);
  }
}

std::uint64_t MixSampler::next_u64() { return hash_combine(state_, draw_++); }

MixSampler::Draw MixSampler::next() {
  const double u = to_unit_double(next_u64()) * cumulative_.back();
  std::size_t k = 0;
  while (k + 1 < cumulative_.size() && u >= cumulative_[k]) ++k;
  const auto &list = *lists_[k];
  const std::size_t idx = static_cast<std::size_t>(next_u64() % list.size());
  return {&languages_[k], &list[idx], idx};
}

// ---------------------------------------------------------------------------

void MixSchedule::validate() const {
  if (stages.empty()) throw InvalidConfigError("schedule has no stages");
  for (const MixStage &s : stages) {
    normalize_ratios(s.ratios);
    if (s.steps < 0) throw InvalidConfigError("stage " + s.name + ": negative step count");
  }
}

std::vector<StageMetrics> run_schedule(const MixSchedule &schedule, ScheduleTrainer &trainer) {
  schedule.validate();
  std::vector<StageMetrics> metrics;
  for (const MixStage &stage : schedule.stages) {
    if (stage.warm_start()) {
      if (!fs::exists(stage.init)) throw CheckpointMissingError(stage.init);
      try {
        trainer.load(stage.init, stage);
      } catch (const CheckpointShapeMismatchError &) {
        throw;
      } catch (const ShapeMismatchError &e) {
        throw CheckpointShapeMismatchError("stage " + stage.name + ": " + e.what());
      }
    } else {
      trainer.reset(stage);
    }
    StageMetrics m;
    m.stage = stage.name;
    m.final_loss = trainer.train(stage);
    if (!stage.save.empty()) trainer.save(stage.save);
    m.error_rates = trainer.evaluate(stage);
    metrics.push_back(std::move(m));
  }
  return metrics;
}

// ---------------------------------------------------------------------------

namespace {

bool is_latin_letter(char32_t c) { return (c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z'); }

}  // namespace

std::size_t longest_latin_run(std::u32string_view text) {
  std::size_t best = 0, run = 0;
  for (char32_t c : text) {
    run = is_latin_letter(c) ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

std::vector<Utterance> code_switch_filter(const std::vector<Utterance> &utterances, int min_run,
                                          bool require_other_script) {
  if (min_run < 1) throw std::invalid_argument("code_switch_filter: min_run must be >= 1");
  std::vector<Utterance> out;
  for (const Utterance &u : utterances) {
    if (longest_latin_run(u.text) < static_cast<std::size_t>(min_run)) continue;
    if (require_other_script &&
        std::none_of(u.text.begin(), u.text.end(), [](char32_t c) { return c >= 0x80; }))
      continue;
    out.push_back(u);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::u32string> read_text_lines(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("MissingFile", "cannot open " + path.string());
  std::vector<std::u32string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(text::from_utf8(line));
  }
  return out;
}

void write_text_lines(const fs::path &path, const std::vector<std::u32string> &lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  for (const auto &l : lines) out << text::to_utf8(l) << '\n';
}

namespace {

void put_u32(std::ostream &os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(b, 4);
}

bool get_u32(std::istream &is, std::uint32_t *v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char *>(b), 4)) return false;
  *v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
       (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

}  // namespace

void write_feature_record(std::ostream &os, const FeatureMatrix &m) {
  os.write("BLF1", 4);
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (double x : m.values()) {
    const float f = static_cast<float>(x);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
  }
}

bool read_feature_record(std::istream &is, FeatureMatrix *m) {
  char magic[4];
  if (!is.read(magic, 4)) {
    if (is.gcount() == 0) return false;
    throw DataError("BadFeatures", "truncated BLF1 header");
  }
  if (std::memcmp(magic, "BLF1", 4) != 0) throw DataError("BadFeatures", "missing BLF1 magic");
  std::uint32_t t = 0, d = 0;
  if (!get_u32(is, &t) || !get_u32(is, &d)) throw DataError("BadFeatures", "truncated BLF1 header");
  *m = FeatureMatrix::matrix(static_cast<int>(t), static_cast<int>(d));
  for (double &x : m->values()) {
    std::uint32_t bits;
    if (!get_u32(is, &bits)) throw DataError("BadFeatures", "truncated BLF1 payload");
    float f;
    std::memcpy(&f, &bits, 4);
    x = f;
  }
  return true;
}

void write_feature_file(const fs::path &path, const std::vector<FeatureMatrix> &ms) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  for (const auto &m : ms) write_feature_record(out, m);
}

std::vector<FeatureMatrix> read_feature_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("MissingFile", "cannot open " + path.string());
  std::vector<FeatureMatrix> out;
  FeatureMatrix m;
  while (read_feature_record(in, &m)) out.push_back(std::move(m));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

SynthProfile profile_from_json(const json &j, SynthProfile p = {}) {
  p.dim = j.value("dim", p.dim);
  p.kmin = j.value("kmin", p.kmin);
  p.kmax = j.value("kmax", p.kmax);
  p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

json profile_to_json(const SynthProfile &p) {
  return {{"dim", p.dim}, {"kmin", p.kmin}, {"kmax", p.kmax},
          {"noise_sigma", p.noise_sigma}, {"seed", p.seed}};
}

fs::path resolve(const fs::path &base, const std::string &p) {
  if (p.empty()) return {};
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

std::string relative_to(const fs::path &base, const fs::path &p) {
  if (p.empty()) return "";
  fs::path rel = p.lexically_relative(base);
  return (rel.empty() || rel.native().rfind("..", 0) == 0) ? p.string() : rel.string();
}

}  // namespace

Manifest Manifest::load(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("MissingFile", "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw DataError("BadManifest", std::string("manifest parse error: ") + e.what());
  }
  const fs::path base = path.parent_path();
  Manifest m;
  try {
    if (j.contains("profile")) m.profile = profile_from_json(j["profile"]);
    m.seed = j.value("seed", std::uint64_t{1});
    for (const auto &l : j.at("languages")) {
      LanguageEntry e;
      e.tag = l.at("tag").get<std::string>();
      e.train_text = resolve(base, l.value("train", ""));
      e.test_text = resolve(base, l.value("test", ""));
      e.train_features = resolve(base, l.value("train_features", ""));
      e.test_features = resolve(base, l.value("test_features", ""));
      if (l.contains("profile")) e.profile = profile_from_json(l["profile"], m.profile);
      m.languages.push_back(std::move(e));
    }
    if (j.contains("stages")) {
      for (const auto &s : j["stages"]) {
        MixStage st;
        st.name = s.value("name", "stage" + std::to_string(m.schedule.stages.size() + 1));
        for (const auto &[k, v] : s.at("ratios").items()) st.ratios[k] = v.get<double>();
        st.steps = s.value("steps", 0);
        const std::string init = s.value("init", "random");
        st.init = init == "random" ? init : resolve(base, init).string();
        st.save = resolve(base, s.value("save", "")).string();
        m.schedule.stages.push_back(std::move(st));
      }
    }
  } catch (const json::exception &e) {
    throw DataError("BadManifest", std::string("manifest schema error: ") + e.what());
  }
  return m;
}

void Manifest::save(const fs::path &path) const {
  const fs::path base = path.parent_path();
  json j;
  j["profile"] = profile_to_json(profile);
  j["seed"] = seed;
  j["languages"] = json::array();
  for (const auto &l : languages) {
    json e = {{"tag", l.tag}, {"train", relative_to(base, l.train_text)},
              {"test", relative_to(base, l.test_text)}};
    if (!l.train_features.empty()) e["train_features"] = relative_to(base, l.train_features);
    if (!l.test_features.empty()) e["test_features"] = relative_to(base, l.test_features);
    if (l.profile) e["profile"] = profile_to_json(*l.profile);
    j["languages"].push_back(std::move(e));
  }
  j["stages"] = json::array();
  for (const auto &s : schedule.stages) {
    json r = json::object();
    for (const auto &[k, v] : s.ratios) r[k] = v;
    j["stages"].push_back({{"name", s.name},
                           {"ratios", r},
                           {"steps", s.steps},
                           {"init", s.warm_start() ? relative_to(base, s.init) : s.init},
                           {"save", relative_to(base, s.save)}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("WriteFailed", "cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

const LanguageEntry &Manifest::language(const std::string &tag) const {
  for (const auto &l : languages)
    if (l.tag == tag) return l;
  throw DataError("UnknownLanguage", "manifest has no language " + tag);
}

SynthProfile Manifest::profile_for(const std::string &tag) const {
  const LanguageEntry &l = language(tag);
  return l.profile ? *l.profile : profile;
}

std::vector<Utterance> load_split(const Manifest &manifest, const std::string &tag, bool train) {
  const LanguageEntry &l = manifest.language(tag);
  const fs::path &text_path = train ? l.train_text : l.test_text;
  const fs::path &feat_path = train ? l.train_features : l.test_features;
  std::vector<std::u32string> texts = read_text_lines(text_path);
  const std::string split_tag = tag + (train ? "" : "-test");
  std::vector<Utterance> utts;
  if (!feat_path.empty()) {
    std::vector<FeatureMatrix> feats = read_feature_file(feat_path);
    if (feats.size() != texts.size())
      throw DataError("BadFeatures", "feature record count differs from utterance count for " + tag);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Utterance u;
      char id[32];
      std::snprintf(id, sizeof id, "-%06zu", i);
      u.id = split_tag + id;
      u.text = texts[i];
      u.language = tag;
      u.features = std::move(feats[i]);
      utts.push_back(std::move(u));
    }
  } else {
    utts = make_utterances(texts, split_tag, manifest.profile_for(tag), manifest.seed);
    for (auto &u : utts) u.language = tag;
  }
  return utts;
}

}  // namespace bytespeech::corpus
