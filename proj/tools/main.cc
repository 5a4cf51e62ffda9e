// tools/main.cc

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bytespeech/error.h"
#include "commands.h"

namespace {

using namespace bytespeech;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInternal = 1;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kData: return kExitData;
    case ErrorCategory::kNumeric: return kExitNumeric;
  }
  return kExitInternal;
}

// One line: "error: <Kind>: <message>".
void report_error(const std::string &kind, std::string message) {
  for (char &ch : message)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "error: " << kind << ": " << message << '\n';
}

// The resolved configuration in CLI11's config syntax, restricted to the
// global options and the chosen subcommand so `--replay` re-runs exactly it.
std::string run_meta(const CLI::App &app, const CLI::App &chosen) {
  std::vector<std::string> others;
  for (const CLI::App *sub : app.get_subcommands([](const CLI::App *) { return true; }))
    if (sub != &chosen) others.push_back(sub->get_name());
  auto is_other = [&](const std::string &name) {
    return std::find(others.begin(), others.end(), name) != others.end();
  };

  std::istringstream in(app.config_to_str(true, false));
  std::ostringstream out;
  out << "# bytespeech run.meta; rerun with: bytespeech --replay run.meta\n";
  std::string line, section;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') {
      section = line.substr(1, line.find(']') - 1);
      if (is_other(section)) continue;
    } else {
      if (is_other(section)) continue;
      const auto dot = line.find('.');
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      if (dot != std::string::npos && dot < eq && is_other(line.substr(0, dot))) continue;
      // Unset list options print as "{}", which would parse back as one item.
      if (line.compare(eq + 1, std::string::npos, "\"{}\"") == 0) continue;
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char **argv) {
  using namespace bytespeech::cli;

  CLI::App app{"bytespeech: byte-level speech recognition and synthesis toolkit"};
  app.set_config("--replay", "", "Re-run the invocation recorded in a run.meta file");
  app.require_subcommand(1, 1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Global seed for models, sampling and corpora")->capture_default_str();
  app.add_option("--out", g.out, "Output directory; receives run.meta and all artifacts")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker cap for evaluation and decoding")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenCorpusOptions gen;
  auto *c_gen = app.add_subcommand("gen-corpus", "Generate a synthetic language split and update a manifest");
  c_gen->add_option("--language", gen.language, "Preset: latin, katakana, hangul, cyrillic");
  c_gen->add_option("--tag", gen.tag, "Language tag (defaults to the preset name)");
  c_gen->add_option("--guest", gen.guest, "Embed one word of this preset per utterance");
  c_gen->add_option("--guest-min", gen.guest_min, "Shortest guest word");
  c_gen->add_option("--guest-max", gen.guest_max, "Longest guest word");
  c_gen->add_option("--n-train", gen.n_train, "Training utterances");
  c_gen->add_option("--n-test", gen.n_test, "Test utterances");
  c_gen->add_option("--text-seed", gen.text_seed, "Seed of the text generator");
  c_gen->add_option("--dim", gen.dim, "Feature dimension D");
  c_gen->add_option("--kmin", gen.kmin, "Fewest frames per symbol");
  c_gen->add_option("--kmax", gen.kmax, "Most frames per symbol");
  c_gen->add_option("--noise", gen.noise, "Feature noise sigma");
  c_gen->add_option("--profile-seed", gen.profile_seed, "Seed of the symbol templates");
  c_gen->add_option("--features", gen.features, "Write BLF1 feature files");
  c_gen->add_option("--manifest", gen.manifest, "Manifest file name inside --out");

  TokenizeOptions tok;
  auto *c_tok = app.add_subcommand("tokenize", "Print UTF-8 bytes (hex) or grapheme ids");
  c_tok->add_option("--text", tok.text, "Text to tokenize");
  c_tok->add_option("--file", tok.file, "One utterance per line");
  c_tok->add_option("--unit", tok.unit, "bytes or graphemes")->check(CLI::IsMember({"bytes", "graphemes"}));
  c_tok->add_option("--vocab-text", tok.vocab_text, "Text file the grapheme vocabulary is built from");
  c_tok->add_option("--specials", tok.specials, "Add start and end markers");

  TrainAsrOptions asr;
  auto *c_asr = app.add_subcommand("train-asr", "Train an audio-to-byte (or grapheme) recognizer");
  c_asr->add_option("--manifest", asr.manifest, "Experiment manifest (JSON)")->required();
  c_asr->add_option("--unit", asr.unit, "bytes or graphemes")->check(CLI::IsMember({"bytes", "graphemes"}));
  c_asr->add_option("--language-vector", asr.language_vector, "Condition on a 1-hot language vector");
  c_asr->add_option("--encoder-layers", asr.encoder_layers);
  c_asr->add_option("--encoder-width", asr.encoder_width);
  c_asr->add_option("--decoder-layers", asr.decoder_layers);
  c_asr->add_option("--decoder-width", asr.decoder_width);
  c_asr->add_option("--attention-heads", asr.attention_heads);
  c_asr->add_option("--attention-dim", asr.attention_dim);
  c_asr->add_option("--embedding-dim", asr.embedding_dim);
  c_asr->add_option("--stack-stride", asr.stack_stride);
  c_asr->add_option("--batch", asr.batch);
  c_asr->add_option("--lr", asr.lr);
  c_asr->add_option("--clip", asr.clip, "Global gradient-norm clip; 0 disables");
  c_asr->add_option("--decay-rate", asr.decay_rate, "Learning rate factor per --decay-steps");
  c_asr->add_option("--decay-steps", asr.decay_steps, "0 disables decay");
  c_asr->add_option("--steps", asr.steps, "Steps when the manifest has no stages");
  c_asr->add_option("--ratios", asr.ratios, "TAG=W mixing weights when the manifest has no stages");
  c_asr->add_option("--beam", asr.beam, "Beam width for evaluation");
  c_asr->add_option("--max-len", asr.max_len, "Longest hypothesis in tokens");
  c_asr->add_option("--metric", asr.metric, "ter or wer")->check(CLI::IsMember({"ter", "wer"}));
  c_asr->add_option("--log-every", asr.log_every);

  TrainTtsOptions tts;
  auto *c_tts = app.add_subcommand("train-tts", "Train a byte-to-feature synthesizer");
  c_tts->add_option("--manifest", tts.manifest, "Experiment manifest (JSON)")->required();
  c_tts->add_option("--languages", tts.languages, "Tags to train on (default: all)");
  c_tts->add_option("--embedding-dim", tts.embedding_dim);
  c_tts->add_option("--conv-layers", tts.conv_layers);
  c_tts->add_option("--conv-filters", tts.conv_filters);
  c_tts->add_option("--conv-width", tts.conv_width);
  c_tts->add_option("--encoder-width", tts.encoder_width);
  c_tts->add_option("--decoder-width", tts.decoder_width);
  c_tts->add_option("--attention-dim", tts.attention_dim);
  c_tts->add_option("--location-filters", tts.location_filters);
  c_tts->add_option("--location-width", tts.location_width);
  c_tts->add_option("--frames-per-step", tts.frames_per_step, "Frames predicted per decoder step");
  c_tts->add_option("--batch", tts.batch);
  c_tts->add_option("--lr", tts.lr);
  c_tts->add_option("--clip", tts.clip);
  c_tts->add_option("--steps", tts.steps);
  c_tts->add_option("--eval-n", tts.eval_n, "Utterances per split synthesized after training");
  c_tts->add_option("--log-every", tts.log_every);

  DecodeOptions dec;
  auto *c_dec = app.add_subcommand("decode", "Recognize a manifest split, or synthesize text with a B2A model");
  c_dec->add_option("--model", dec.model, "A2B1 or B2A1 checkpoint")->required();
  c_dec->add_option("--manifest", dec.manifest, "Manifest (recognition)");
  c_dec->add_option("--languages", dec.languages, "Tags to decode (default: the model's)");
  c_dec->add_option("--split", dec.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  c_dec->add_option("--text", dec.text, "Text to synthesize");
  c_dec->add_option("--text-file", dec.text_file, "Texts to synthesize, one per line");
  c_dec->add_option("--beam", dec.beam);
  c_dec->add_option("--nbest", dec.nbest, "Hypotheses written per utterance");
  c_dec->add_option("--max-len", dec.max_len, "Longest hypothesis in tokens");
  c_dec->add_option("--max-frames", dec.max_frames, "Longest synthesis in frames");
  c_dec->add_option("--length-norm", dec.length_norm, "Length normalization exponent");
  c_dec->add_option("--no-constraint", dec.no_constraint, "Disable the UTF-8 well-formedness mask");

  ScoreOptions sc;
  auto *c_score = app.add_subcommand("score", "Score id<TAB>text hypotheses against references");
  c_score->add_option("--ref", sc.ref)->required();
  c_score->add_option("--hyp", sc.hyp)->required();
  c_score->add_option("--metric", sc.metric, "ter or wer")->check(CLI::IsMember({"ter", "wer"}));
  c_score->add_option("--output", sc.output, "Score file name inside --out");

  ReportOptions rep;
  auto *c_rep = app.add_subcommand("report", "Tabulate score files by system and language");
  c_rep->add_option("--cell", rep.cells, "SYSTEM:LANG=score-file")->required();
  c_rep->add_option("--metric", rep.metrics, "LANG=wer|ter column metric");
  c_rep->add_option("--format", rep.format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));

  GradCheckOptions gc;
  auto *c_gc = app.add_subcommand("grad-check", "Central-difference gradient check of the full models");
  c_gc->add_option("--target", gc.target, "all, a2b-bytes, a2b-graphemes or b2a")
      ->check(CLI::IsMember({"all", "a2b-bytes", "a2b-graphemes", "b2a"}));
  c_gc->add_option("--tol", gc.tol, "Largest accepted relative error");
  c_gc->add_option("--samples", gc.samples, "Elements checked per parameter");

  SampleMixOptions mix;
  auto *c_mix = app.add_subcommand("sample-mix", "Print language proportions drawn by the mixing sampler");
  c_mix->add_option("--ratios", mix.ratios, "e.g. EN=3,JA=3,ES=4")->required();
  c_mix->add_option("--n", mix.n, "Number of draws");

  for (CLI::App *sub : app.get_subcommands([](const CLI::App *) { return true; })) {
    sub->configurable();
    sub->fallthrough();
    for (CLI::Option *opt : sub->get_options()) opt->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("UsageError", e.what());
    std::cerr << app.help();
    return kExitUsage;
  }

  CLI::App *chosen = app.get_subcommands().front();
  try {
    fs::create_directories(g.out);
    {
      std::ofstream meta(fs::path(g.out) / "run.meta", std::ios::binary | std::ios::trunc);
      if (!meta) throw DataError("WriteFailed", "cannot write run.meta in " + g.out);
      meta << run_meta(app, *chosen);
    }
    const std::string name = chosen->get_name();
    if (name == "gen-corpus") gen_corpus(g, gen);
    else if (name == "tokenize") tokenize(g, tok);
    else if (name == "train-asr") train_asr(g, asr);
    else if (name == "train-tts") train_tts(g, tts);
    else if (name == "decode") decode(g, dec);
    else if (name == "score") score(g, sc);
    else if (name == "report") report(g, rep);
    else if (name == "grad-check") grad_check(g, gc);
    else if (name == "sample-mix") sample_mix(g, mix);
  } catch (const Error &e) {
    report_error(e.kind(), e.what());
    if (e.category() == ErrorCategory::kUsage) std::cerr << chosen->help();
    return exit_code(e.category());
  } catch (const fs::filesystem_error &e) {
    report_error("FileSystem", e.what());
    return kExitData;
  } catch (const std::exception &e) {
    report_error("Internal", e.what());
    return kExitInternal;
  }
  return 0;
}
