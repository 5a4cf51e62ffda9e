// tools/commands.cc

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

#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "bytespeech/a2b.h"
#include "bytespeech/b2a.h"
#include "bytespeech/corpus.h"
#include "bytespeech/optim.h"
#include "bytespeech/score.h"

namespace bytespeech::cli {

namespace fs = std::filesystem;

namespace {

std::string format(const char *fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::ofstream open_out(const fs::path &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("WriteFailed", "cannot write " + path.string());
  return os;
}

// "TAG=W" entries; weights must parse as numbers.
std::map<std::string, double> parse_ratios(const std::vector<std::string> &items) {
  std::map<std::string, double> out;
  for (const std::string &item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected TAG=WEIGHT, got '" + item + "'");
    try {
      std::size_t used = 0;
      const double w = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      out[item.substr(0, eq)] = w;
    } catch (const std::logic_error &) {
      throw UsageError("bad weight in '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) parts.push_back(cur);
  return parts;
}

score::Metric parse_metric(const std::string &name) {
  if (name == "ter") return score::Metric::kTer;
  if (name == "wer") return score::Metric::kWer;
  throw UsageError("metric must be wer or ter, got '" + name + "'");
}

// id<TAB>text lines, file order kept.
std::vector<std::pair<std::string, std::u32string>> read_keyed(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("MissingFile", "cannot open " + path.string());
  std::vector<std::pair<std::string, std::u32string>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("BadLine", path.string() + ":" + std::to_string(number) + ": expected id<TAB>text");
    rows.emplace_back(line.substr(0, tab), text::from_utf8(line.substr(tab + 1)));
  }
  return rows;
}

void write_keyed(std::ostream &os, const std::string &id, const std::u32string &text) {
  os << id << '\t' << text::to_utf8(text) << '\n';
}

const char *kSumId = "SUM";

std::vector<std::string> manifest_tags(const corpus::Manifest &m) {
  std::vector<std::string> tags;
  for (const auto &l : m.languages) tags.push_back(l.tag);
  return tags;
}

std::string file_magic(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointMissingError(path.string());
  char magic[4] = {};
  is.read(magic, 4);
  return std::string(magic, static_cast<std::size_t>(is.gcount()));
}

// Runs fn(i) for i in [0, n) over at most `threads` workers; fn must only
// touch slot i of any shared output.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                                                    std::max<std::size_t>(n, 1));
  auto work = [&](std::size_t first) {
    for (std::size_t i = first; i < n; i += workers) fn(i);
  };
  if (workers == 1) return work(0);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto &t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------

void gen_corpus(const GlobalOptions &g, const GenCorpusOptions &o) {
  if (o.n_train < 1 || o.n_test < 0) throw UsageError("need n-train >= 1 and n-test >= 0");
  const std::string tag = o.tag.empty() ? o.language : o.tag;
  const corpus::SyntheticLanguage host = corpus::preset_language(o.language);
  const std::size_t total = static_cast<std::size_t>(o.n_train + o.n_test);
  const std::vector<std::u32string> texts =
      o.guest.empty() ? corpus::generate_texts(host, total, o.text_seed)
                      : corpus::generate_code_switch_texts(host, corpus::preset_language(o.guest), total,
                                                           o.guest_min, o.guest_max, o.text_seed);
  const std::vector<std::u32string> train(texts.begin(), texts.begin() + o.n_train);
  const std::vector<std::u32string> test(texts.begin() + o.n_train, texts.end());

  corpus::SynthProfile profile;
  profile.dim = o.dim;
  profile.kmin = o.kmin;
  profile.kmax = o.kmax;
  profile.noise_sigma = o.noise;
  profile.seed = o.profile_seed;
  profile.validate();

  const fs::path out(g.out);
  const fs::path manifest_path = out / o.manifest;
  corpus::Manifest manifest;
  if (fs::exists(manifest_path)) {
    manifest = corpus::Manifest::load(manifest_path);
    if (manifest.seed != g.seed)
      throw UsageError("manifest seed " + std::to_string(manifest.seed) + " differs from --seed " +
                       std::to_string(g.seed));
  } else {
    manifest.seed = g.seed;
    manifest.profile = profile;
  }

  corpus::LanguageEntry entry;
  entry.tag = tag;
  entry.train_text = out / (tag + ".train.txt");
  entry.test_text = out / (tag + ".test.txt");
  entry.profile = profile;
  corpus::write_text_lines(entry.train_text, train);
  corpus::write_text_lines(entry.test_text, test);
  if (o.features) {
    // Same utterance tags as the synthesized path of load_split, so both agree.
    auto feats = [&](const std::vector<std::u32string> &t, const std::string &split_tag) {
      std::vector<corpus::FeatureMatrix> ms;
      for (auto &u : corpus::make_utterances(t, split_tag, profile, manifest.seed))
        ms.push_back(std::move(*u.features));
      return ms;
    };
    entry.train_features = out / (tag + ".train.blf");
    entry.test_features = out / (tag + ".test.blf");
    corpus::write_feature_file(entry.train_features, feats(train, tag));
    corpus::write_feature_file(entry.test_features, feats(test, tag + "-test"));
  }
  auto it = std::find_if(manifest.languages.begin(), manifest.languages.end(),
                         [&](const corpus::LanguageEntry &l) { return l.tag == tag; });
  if (it == manifest.languages.end()) manifest.languages.push_back(entry);
  else *it = entry;
  manifest.save(manifest_path);
  std::cout << tag << ": " << train.size() << " train, " << test.size() << " test -> "
            << manifest_path.string() << '\n';
}

// ---------------------------------------------------------------------------

void tokenize(const GlobalOptions &, const TokenizeOptions &o) {
  if (o.text.empty() == o.file.empty()) throw UsageError("give exactly one of --text or --file");
  std::vector<std::u32string> lines;
  if (!o.text.empty()) lines.push_back(text::from_utf8(o.text));
  else lines = corpus::read_text_lines(o.file);

  if (o.unit == "bytes") {
    for (const auto &line : lines) {
      const text::ByteSeq bytes = text::encode_bytes(line, o.specials);
      std::string row;
      char hex[4];
      for (std::uint8_t b : bytes) {
        std::snprintf(hex, sizeof hex, "%02X", b);
        if (!row.empty()) row += ' ';
        row += hex;
      }
      std::cout << row << '\n';
    }
  } else if (o.unit == "graphemes") {
    if (o.vocab_text.empty()) throw UsageError("--unit graphemes needs --vocab-text");
    const auto vocab = text::GraphemeVocab::build(corpus::read_text_lines(o.vocab_text));
    for (const auto &line : lines) {
      std::string row;
      for (int id : vocab.encode(line, o.specials)) {
        if (!row.empty()) row += ' ';
        row += std::to_string(id);
      }
      std::cout << row << '\n';
    }
  } else {
    throw UsageError("unit must be bytes or graphemes");
  }
}

// ---------------------------------------------------------------------------

namespace {

void write_eval(const fs::path &out, const a2b::EvalResult &r) {
  std::ofstream scores = open_out(out / "scores.txt");
  std::ofstream hyps = open_out(out / "hyps.txt");
  score::AlignmentCounts total;
  for (const auto &u : r.utterances) {
    score::write_score_line(scores, u.id, u.counts);
    write_keyed(hyps, u.id, u.hypothesis);
    total += u.counts;
  }
  for (const auto &[lang, lr] : r.languages)
    score::write_score_line(scores, std::string(kSumId) + ":" + lang, lr.counts);
  score::write_score_line(scores, kSumId, total);
}

}  // namespace

void train_asr(const GlobalOptions &g, const TrainAsrOptions &o) {
  if (o.manifest.empty()) throw UsageError("--manifest is required");
  const corpus::Manifest manifest = corpus::Manifest::load(o.manifest);
  const fs::path out(g.out);

  corpus::MixSchedule schedule = manifest.schedule;
  if (schedule.stages.empty()) {
    corpus::MixStage stage;
    stage.name = "train";
    stage.steps = o.steps;
    if (o.ratios.empty()) {
      for (const auto &tag : manifest_tags(manifest)) stage.ratios[tag] = 1.0;
    } else {
      stage.ratios = parse_ratios(o.ratios);
    }
    schedule.stages.push_back(stage);
  } else if (!o.ratios.empty()) {
    throw UsageError("--ratios conflicts with the manifest's stages");
  }
  for (auto &stage : schedule.stages)
    if (stage.save.empty()) stage.save = (out / (stage.name + ".a2b")).string();
  schedule.validate();

  corpus::CorpusMap train, test;
  for (const auto &stage : schedule.stages) {
    for (const auto &[tag, ratio] : stage.ratios) {
      if (train.count(tag)) continue;
      train[tag] = corpus::load_split(manifest, tag, true);
      test[tag] = corpus::load_split(manifest, tag, false);
    }
  }

  a2b::ModelConfig base;
  base.feature_dim = manifest.profile_for(train.begin()->first).dim;
  base.encoder_layers = o.encoder_layers;
  base.encoder_width = o.encoder_width;
  base.decoder_layers = o.decoder_layers;
  base.decoder_width = o.decoder_width;
  base.attention_heads = o.attention_heads;
  base.attention_dim = o.attention_dim;
  base.embedding_dim = o.embedding_dim;
  base.stack_stride = o.stack_stride;
  base.language_vector = o.language_vector;
  base.seed = g.seed;
  if (o.unit == "graphemes") base.unit = a2b::OutputUnit::kGraphemes;
  else if (o.unit != "bytes") throw UsageError("unit must be bytes or graphemes");

  a2b::ScheduleOptions so;
  so.batch_size = o.batch;
  so.adam.lr = o.lr;
  so.adam.clip_norm = o.clip;
  so.adam.decay_rate = o.decay_rate;
  so.adam.decay_steps = o.decay_steps;
  so.seed = g.seed;
  so.eval.beam.beam_size = o.beam;
  so.eval.beam.max_len = o.max_len;
  so.eval.beam.constrain_utf8 = base.unit == a2b::OutputUnit::kBytes;
  so.eval.metric = parse_metric(o.metric);
  so.eval.threads = g.threads;
  so.log_every = o.log_every;
  so.on_progress = [](const std::string &stage, int step, double loss) {
    std::cerr << stage << " step " << step << " loss " << format("%.4f", loss) << '\n';
  };

  a2b::A2BScheduleTrainer trainer(base, train, test, so);
  const auto metrics = corpus::run_schedule(schedule, trainer);

  std::ofstream table = open_out(out / "stages.tsv");
  table << "stage\tfinal_loss";
  for (const auto &[tag, c] : train) table << '\t' << tag;
  table << '\n';
  for (const auto &m : metrics) {
    table << m.stage << '\t' << format("%.6f", m.final_loss);
    for (const auto &[tag, c] : train) {
      auto it = m.error_rates.find(tag);
      table << '\t' << (it == m.error_rates.end() ? "-" : format("%.6f", it->second));
    }
    table << '\n';
    std::cout << m.stage << ": loss " << format("%.4f", m.final_loss);
    for (const auto &[tag, rate] : m.error_rates) std::cout << ' ' << tag << ' ' << format("%.2f%%", 100 * rate);
    std::cout << '\n';
  }
  write_eval(out, trainer.last_eval());
}

// ---------------------------------------------------------------------------

void train_tts(const GlobalOptions &g, const TrainTtsOptions &o) {
  if (o.manifest.empty()) throw UsageError("--manifest is required");
  const corpus::Manifest manifest = corpus::Manifest::load(o.manifest);
  const std::vector<std::string> tags = o.languages.empty() ? manifest_tags(manifest) : o.languages;
  if (tags.empty()) throw DataError("EmptyCorpus", "manifest lists no languages");
  const fs::path out(g.out);

  corpus::CorpusMap train, test;
  std::map<std::string, double> ratios;
  for (const auto &tag : tags) {
    train[tag] = corpus::load_split(manifest, tag, true);
    test[tag] = corpus::load_split(manifest, tag, false);
    ratios[tag] = 1.0;
  }

  b2a::B2AConfig c;
  c.embedding_dim = o.embedding_dim;
  c.conv_layers = o.conv_layers;
  c.conv_filters = o.conv_filters;
  c.conv_width = o.conv_width;
  c.encoder_width = o.encoder_width;
  c.decoder_width = o.decoder_width;
  c.attention_dim = o.attention_dim;
  c.location_filters = o.location_filters;
  c.location_width = o.location_width;
  c.frames_per_step = o.frames_per_step;
  c.feature_dim = manifest.profile_for(tags.front()).dim;
  c.seed = g.seed;
  b2a::B2AModel model(c);

  core::AdamConfig adam;
  adam.lr = o.lr;
  adam.clip_norm = o.clip;
  b2a::B2ATrainer trainer(model, adam);
  corpus::MixSampler sampler(train, ratios, g.seed);
  double acc = 0.0;
  for (int s = 1; s <= o.steps; ++s) {
    std::vector<b2a::B2AExample> batch;
    for (int k = 0; k < o.batch; ++k) {
      const auto d = sampler.next();
      batch.push_back({text::encode_bytes(d.utterance->text), &*d.utterance->features, 0});
    }
    acc += trainer.train_step(batch);
    if (o.log_every > 0 && s % o.log_every == 0) {
      std::cerr << "step " << s << " loss " << format("%.4f", acc / o.log_every) << '\n';
      acc = 0.0;
    }
  }
  b2a::save_checkpoint(out / "model.b2a", model, &trainer.optimizer(), trainer.step());

  // Free-running synthesis on a prefix of each split.
  std::ofstream scores = open_out(out / "tts_scores.txt");
  for (const bool on_train : {true, false}) {
    double mse = 0.0, mono = 0.0;
    std::size_t n = 0;
    for (const auto &tag : tags) {
      const auto &utts = on_train ? train[tag] : test[tag];
      const std::size_t count = std::min<std::size_t>(utts.size(), static_cast<std::size_t>(o.eval_n));
      std::vector<double> errs(count), monos(count);
      parallel_for(count, g.threads, [&](std::size_t i) {
        const auto &u = utts[i];
        const auto r = model.synthesize(text::encode_bytes(u.text), 0, 2 * u.features->rows() + 20);
        errs[i] = b2a::frame_mse(r.frames, *u.features);
        monos[i] = b2a::monotonic_fraction(r.alignment);
      });
      for (std::size_t i = 0; i < count; ++i) {
        scores << utts[i].id << '\t' << format("%.6f", errs[i]) << '\t' << format("%.6f", monos[i]) << '\n';
        mse += errs[i];
        mono += monos[i];
        ++n;
      }
    }
    if (n == 0) continue;
    const std::string split_name = on_train ? "train" : "test";
    scores << kSumId << ':' << split_name << '\t' << format("%.6f", mse / n) << '\t'
           << format("%.6f", mono / n) << '\n';
    std::cout << split_name << ": mse " << format("%.5f", mse / n) << " monotonic "
              << format("%.3f", mono / n) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

void decode_a2b(const GlobalOptions &g, const DecodeOptions &o) {
  if (o.manifest.empty()) throw UsageError("decoding an A2B model needs --manifest");
  if (o.split != "train" && o.split != "test") throw UsageError("split must be train or test");
  if (o.nbest < 1 || o.nbest > o.beam) throw UsageError("need 1 <= nbest <= beam");
  const a2b::A2BModel model = a2b::load_model(o.model);
  const corpus::Manifest manifest = corpus::Manifest::load(o.manifest);
  std::vector<std::string> tags = o.languages;
  if (tags.empty()) tags = model.config().languages;
  if (tags.empty()) tags = manifest_tags(manifest);

  std::vector<corpus::Utterance> utts;
  for (const auto &tag : tags) {
    auto part = corpus::load_split(manifest, tag, o.split == "train");
    utts.insert(utts.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }

  decode::BeamConfig beam = a2b::default_beam(model.config());
  beam.beam_size = o.beam;
  beam.max_len = o.max_len;
  beam.length_norm_alpha = o.length_norm;
  if (o.no_constraint) beam.constrain_utf8 = false;
  beam.validate();

  std::vector<std::vector<decode::Hypothesis>> results(utts.size());
  std::vector<std::string> errors(utts.size());
  parallel_for(utts.size(), g.threads, [&](std::size_t i) {
    try {
      a2b::A2BScorer scorer(model, *utts[i].features, model.language_vector(utts[i].language));
      results[i] = decode::beam_search(scorer, beam);
    } catch (const Error &e) {
      errors[i] = e.kind() + ": " + e.what();
    }
  });

  const fs::path out(g.out);
  std::ofstream hyps = open_out(out / "hyps.txt");
  std::ofstream refs = open_out(out / "refs.txt");
  std::ofstream nbest = open_out(out / "nbest.txt");
  const auto detok = [&](const std::vector<int> &ids) { return model.detokenize(ids); };
  std::size_t failures = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    write_keyed(refs, utts[i].id, utts[i].text);
    if (!errors[i].empty() || results[i].empty()) {
      ++failures;
      std::cerr << "warning: " << utts[i].id << ": "
                << (errors[i].empty() ? "no hypothesis" : errors[i]) << '\n';
      write_keyed(hyps, utts[i].id, U"");
      continue;
    }
    write_keyed(hyps, utts[i].id, model.detokenize(results[i].front().tokens));
    results[i].resize(std::min<std::size_t>(results[i].size(), static_cast<std::size_t>(o.nbest)));
    decode::write_nbest(nbest, utts[i].id, results[i], detok);
  }
  std::cout << "decoded " << utts.size() << " utterances, " << failures << " failed\n";
}

void decode_b2a(const GlobalOptions &g, const DecodeOptions &o) {
  if (o.text.empty() == o.text_file.empty())
    throw UsageError("decoding a B2A model needs exactly one of --text or --text-file");
  const b2a::B2AModel model = b2a::load_model(o.model);
  std::vector<std::u32string> texts;
  if (!o.text.empty()) texts.push_back(text::from_utf8(o.text));
  else texts = corpus::read_text_lines(o.text_file);

  std::vector<b2a::SynthesisResult> results(texts.size());
  parallel_for(texts.size(), g.threads, [&](std::size_t i) {
    results[i] = model.synthesize(text::encode_bytes(texts[i]), 0, o.max_frames);
  });
  const fs::path out(g.out);
  std::vector<corpus::FeatureMatrix> frames;
  std::ofstream stops = open_out(out / "synth.stop");
  for (std::size_t i = 0; i < results.size(); ++i) {
    frames.push_back(results[i].frames);
    stops << "# " << i << '\n';
    b2a::write_stop_sidecar(stops, results[i]);
    std::cout << i << '\t' << results[i].frames.rows() << " frames"
              << (results[i].max_frames_exceeded ? "\tMaxFramesExceeded" : "") << '\n';
  }
  corpus::write_feature_file(out / "synth.blf", frames);
}

}  // namespace

void decode(const GlobalOptions &g, const DecodeOptions &o) {
  if (o.model.empty()) throw UsageError("--model is required");
  const std::string magic = file_magic(o.model);
  if (magic == "A2B1") decode_a2b(g, o);
  else if (magic == "B2A1") decode_b2a(g, o);
  else throw DataError("VersionMismatch", o.model + " is not a model checkpoint");
}

// ---------------------------------------------------------------------------

void score(const GlobalOptions &g, const ScoreOptions &o) {
  if (o.ref.empty() || o.hyp.empty()) throw UsageError("--ref and --hyp are required");
  const score::Metric metric = parse_metric(o.metric);
  const auto refs = read_keyed(o.ref);
  std::map<std::string, std::u32string> hyps;
  for (auto &[id, text] : read_keyed(o.hyp)) {
    if (!hyps.emplace(id, text).second) throw DataError("DuplicateId", "hypothesis id repeated: " + id);
  }
  std::ofstream os = open_out(fs::path(g.out) / o.output);
  score::AlignmentCounts total;
  std::size_t missing = 0;
  for (const auto &[id, ref] : refs) {
    auto it = hyps.find(id);
    if (it == hyps.end()) ++missing;
    const auto c = score::score_counts(metric, ref, it == hyps.end() ? U"" : it->second);
    score::write_score_line(os, id, c);
    total += c;
  }
  score::write_score_line(os, kSumId, total);
  std::cout << score::metric_name(metric) << ' ' << format("%.2f%%", 100 * total.rate()) << " (S "
            << total.substitutions << " D " << total.deletions << " I " << total.insertions << " / N "
            << total.ref_tokens << ")";
  if (missing) std::cout << ", " << missing << " references without hypothesis";
  std::cout << '\n';
}

// ---------------------------------------------------------------------------

namespace {

// The SUM:<lang> line when present, else the overall SUM line.
score::AlignmentCounts summary_counts(const fs::path &path, const std::string &lang) {
  std::ifstream is(path);
  if (!is) throw DataError("MissingFile", "cannot open " + path.string());
  std::optional<score::AlignmentCounts> overall, per_lang;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream fields(line);
    std::string id;
    score::AlignmentCounts c;
    if (!(fields >> id >> c.substitutions >> c.deletions >> c.insertions >> c.ref_tokens))
      throw DataError("BadLine", path.string() + ": malformed score line");
    if (id == kSumId) overall = c;
    else if (id == std::string(kSumId) + ":" + lang) per_lang = c;
  }
  if (per_lang) return *per_lang;
  if (overall) return *overall;
  throw DataError("BadScoreFile", path.string() + " has no summary line");
}

}  // namespace

void report(const GlobalOptions &g, const ReportOptions &o) {
  if (o.cells.empty()) throw UsageError("give at least one --cell SYSTEM:LANG=FILE");
  score::Report r;
  for (const std::string &item : o.metrics) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected LANG=wer|ter, got '" + item + "'");
    r.metrics[item.substr(0, eq)] = parse_metric(item.substr(eq + 1));
  }
  for (const std::string &cell : o.cells) {
    const auto colon = cell.find(':');
    const auto eq = cell.find('=', colon == std::string::npos ? 0 : colon);
    if (colon == std::string::npos || eq == std::string::npos || colon == 0 || eq == colon + 1)
      throw UsageError("expected SYSTEM:LANG=FILE, got '" + cell + "'");
    const std::string system = cell.substr(0, colon);
    const std::string lang = cell.substr(colon + 1, eq - colon - 1);
    if (std::find(r.languages.begin(), r.languages.end(), lang) == r.languages.end())
      r.languages.push_back(lang);
    auto row = std::find_if(r.rows.begin(), r.rows.end(),
                            [&](const score::ReportRow &x) { return x.system == system; });
    if (row == r.rows.end()) {
      r.rows.push_back({system, {}});
      row = r.rows.end() - 1;
    }
    row->cells[lang] = summary_counts(cell.substr(eq + 1), lang);
  }
  std::string body;
  if (o.format == "text") body = r.to_text();
  else if (o.format == "tsv") body = r.to_tsv();
  else throw UsageError("format must be text or tsv");
  std::ofstream os = open_out(fs::path(g.out) / ("report." + (o.format == "text" ? std::string("txt") : o.format)));
  os << body;
  std::cout << body;
}

// ---------------------------------------------------------------------------

namespace {

struct CheckResult {
  std::string name;
  core::GradCheckReport report;
};

CheckResult check_a2b(a2b::OutputUnit unit, std::uint64_t seed, const core::GradCheckOptions &opts) {
  a2b::ModelConfig c;
  c.feature_dim = 3;
  c.encoder_layers = 1;
  c.encoder_width = 6;
  c.decoder_layers = 2;
  c.decoder_width = 6;
  c.attention_heads = 2;
  c.attention_dim = 4;
  c.embedding_dim = 4;
  c.unit = unit;
  c.languages = {"L1", "L2"};
  c.language_vector = true;
  c.seed = seed;
  corpus::SynthProfile p;
  p.dim = 3;
  p.noise_sigma = 0.0;
  const auto texts = corpus::generate_texts(corpus::preset_language("latin"), 2, seed);
  const auto utts = corpus::make_utterances(texts, "L1", p, seed);
  if (unit == a2b::OutputUnit::kGraphemes) c.vocab = text::GraphemeVocab::build(texts);
  a2b::A2BModel m(c);
  auto ex = a2b::make_examples(m, utts);
  ex[1].lang = m.language_vector("L2");
  return {unit == a2b::OutputUnit::kBytes ? "a2b-bytes" : "a2b-graphemes",
          core::grad_check([&](core::Graph &g) { return m.loss(g, ex); }, m.params().pointers(), opts)};
}

CheckResult check_b2a(std::uint64_t seed, const core::GradCheckOptions &opts) {
  b2a::B2AConfig c;
  c.embedding_dim = 4;
  c.conv_layers = 1;
  c.conv_filters = 4;
  c.conv_width = 3;
  c.encoder_width = 3;
  c.decoder_width = 6;
  c.attention_dim = 4;
  c.location_filters = 2;
  c.location_width = 3;
  c.feature_dim = 3;
  c.num_speakers = 2;
  c.speaker_dim = 2;
  c.seed = seed;
  b2a::B2AModel m(c);
  corpus::SynthProfile p;
  p.dim = 3;
  p.kmin = p.kmax = 2;
  const auto f1 = corpus::synth_features(U"ab", p, seed);
  const auto f2 = corpus::synth_features(U"カ", p, seed + 1);
  const std::vector<b2a::B2AExample> batch{{text::encode_bytes(U"ab"), &f1, 0},
                                           {text::encode_bytes(U"カ"), &f2, 1}};
  return {"b2a", core::grad_check([&](core::Graph &g) { return m.loss(g, batch); },
                                  m.params().pointers(), opts)};
}

}  // namespace

void grad_check(const GlobalOptions &g, const GradCheckOptions &o) {
  core::GradCheckOptions opts;
  opts.tol = o.tol;
  opts.samples_per_param = o.samples;
  opts.seed = g.seed;
  std::vector<CheckResult> results;
  const bool all = o.target == "all";
  if (all || o.target == "a2b-bytes") results.push_back(check_a2b(a2b::OutputUnit::kBytes, g.seed, opts));
  if (all || o.target == "a2b-graphemes")
    results.push_back(check_a2b(a2b::OutputUnit::kGraphemes, g.seed, opts));
  if (all || o.target == "b2a") results.push_back(check_b2a(g.seed, opts));
  if (results.empty()) throw UsageError("target must be all, a2b-bytes, a2b-graphemes or b2a");

  std::vector<std::string> failed;
  for (const auto &r : results) {
    std::cout << r.name << "\tmax_rel_err " << format("%.3e", r.report.max_rel_err) << "\tchecked "
              << r.report.checked << '\t' << (r.report.passed() ? "PASS" : "FAIL") << '\n';
    if (!r.report.passed()) failed.push_back(r.name);
  }
  if (!failed.empty()) {
    std::string names;
    for (const auto &f : failed) names += (names.empty() ? "" : ",") + f;
    throw NumericError("GradCheckFailed", "gradient check failed for " + names);
  }
}

// ---------------------------------------------------------------------------

void sample_mix(const GlobalOptions &g, const SampleMixOptions &o) {
  if (o.n < 1) throw UsageError("--n must be >= 1");
  const auto ratios = parse_ratios(split(o.ratios, ','));
  if (ratios.empty()) throw UsageError("--ratios is required, e.g. EN=3,JA=3,ES=4");
  // One placeholder utterance per language; only the language draw matters.
  corpus::CorpusMap corpora;
  for (const auto &[tag, w] : ratios) corpora[tag].push_back({tag + "-0", U"x", tag, std::nullopt});
  corpus::MixSampler sampler(corpora, ratios, g.seed);
  std::map<std::string, std::int64_t> counts;
  for (int i = 0; i < o.n; ++i) ++counts[*sampler.next().language];
  for (const auto &tag : sampler.languages())
    std::cout << tag << '\t' << counts[tag] << '\t'
              << format("%.4f", static_cast<double>(counts[tag]) / o.n) << '\n';
}

}  // namespace bytespeech::cli
