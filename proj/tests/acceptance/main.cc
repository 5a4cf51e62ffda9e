// tests/acceptance/main.cc

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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every selected criterion passes.

#include <cstdio>
#include <exception>
#include <thread>

#include "CLI11.hpp"
#include "harness.h"

using namespace bytespeech::acceptance;

int main(int argc, char **argv) {
  CLI::App app{"bytespeech acceptance harness"};
  Context ctx;
  std::string work = (fs::temp_directory_path() / "bytespeech_acceptance").string();
  std::string cli;
  std::vector<int> only;
  ctx.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--cli", cli, "Path to the bytespeech executable")->required();
  app.add_option("--work", work, "Scratch directory")->capture_default_str();
  app.add_option("--only", only, "Criterion numbers to run (default: all)");
  app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  ctx.cli = fs::absolute(cli);
  fs::create_directories(ctx.work);

  const std::vector<Criterion> all = {
      {1, "utf8-automaton", 10, utf8_automaton},
      {2, "constrained-decoding", 60, constrained_decoding},
      {3, "gradient-integrity", 120, gradient_integrity},
      {4, "katakana-byte-grapheme-parity", 900, katakana_parity},
      {5, "ascii-byte-grapheme-equivalence", 0, ascii_parity},
      {6, "code-switch-multilingual-gain", 0, code_switch},
      {7, "curriculum-warm-start", 1800, curriculum},
      {8, "language-vector-gain", 0, language_vector},
      {9, "scoring-oracle", 30, scoring_oracle},
      {10, "byte-to-audio", 900, synthesis},
      {11, "reproducibility", 0, reproducibility},
  };

  int failed = 0, ran = 0;
  for (const Criterion &c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    ++ran;
    const std::int64_t start = now_ns();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(start);
    const bool in_time = c.time_limit_s <= 0 || secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    std::string timing = c.time_limit_s > 0 ? format("%.1fs (limit %.0fs)", secs, c.time_limit_s)
                                            : format("%.1fs", secs);
    if (o.pass && !in_time) timing += " over time";
    std::printf("criterion %2d %-32s %s  %s  %s\n", c.number, c.name.c_str(), pass ? "PASS" : "FAIL",
                timing.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
