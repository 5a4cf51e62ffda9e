// tests/unit/test_cli.cc

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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with `args` (already shell-quoted), capturing stdout.
Run cli(const std::string &args) {
  const std::string cmd = std::string("'") + BYTESPEECH_CLI + "' " + args + " 2>/dev/null";
  Run r;
  FILE *p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path temp_dir(const std::string &name) {
  fs::path d = fs::temp_directory_path() / ("bytespeech_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path &p, const std::string &s) { std::ofstream(p, std::ios::binary) << s; }

}  // namespace

TEST_CASE("tokenize") {
  const fs::path d = temp_dir("tokenize");
  CHECK(cli("--out " + d.string() + " tokenize --text オ").out == "E3 82 AA\n");
  CHECK(cli("--out " + d.string() + " tokenize --text a --specials 1").out == "FE 61 FF\n");
  write(d / "vocab.txt", "ba\n");
  // Symbols take ids from 3 in codepoint order; unknown ones map to 0.
  CHECK(cli("--out " + d.string() + " tokenize --unit graphemes --vocab-text " + (d / "vocab.txt").string() +
            " --text abz")
            .out == "3 4 0\n");
}

TEST_CASE("exit codes by error category") {
  const fs::path d = temp_dir("exit");
  const std::string out = "--out " + d.string() + " ";
  CHECK(cli(out + "no-such-command").status == 2);
  CHECK(cli(out + "score --ref x").status == 2);
  CHECK(cli(out + "--threads 0 sample-mix --ratios A=1").status == 2);
  CHECK(cli(out + "sample-mix --ratios A=-1").status == 2);
  CHECK(cli(out + "score --ref " + (d / "missing.txt").string() + " --hyp " + (d / "missing.txt").string())
            .status == 3);
  write(d / "junk.a2b", "JUNKJUNK");
  CHECK(cli(out + "decode --model " + (d / "junk.a2b").string()).status == 3);
  CHECK(cli(out + "grad-check --target b2a --tol 1e-30 --samples 2").status == 4);
  CHECK(cli(out + "grad-check --target b2a --samples 4").status == 0);
}

TEST_CASE("run.meta records the run and replays it") {
  const fs::path d = temp_dir("meta");
  const Run first = cli("--seed 7 --out " + d.string() + " sample-mix --ratios EN=3,JA=3,ES=4 --n 2000");
  REQUIRE(first.status == 0);
  const std::string meta = slurp(d / "run.meta");
  CHECK(meta.find("seed=7") != std::string::npos);
  CHECK(meta.find("[sample-mix]") != std::string::npos);
  CHECK(meta.find("n=2000") != std::string::npos);
  CHECK(meta.find("train-asr") == std::string::npos);
  fs::copy_file(d / "run.meta", d / "saved.meta");
  CHECK(cli("--replay " + (d / "saved.meta").string()).out == first.out);
  // The seed may follow the subcommand too.
  CHECK(cli("--out " + d.string() + " sample-mix --ratios EN=3,JA=3,ES=4 --n 2000 --seed 7").out == first.out);
}

TEST_CASE("sample-mix proportions follow the ratios") {
  const fs::path d = temp_dir("mix");
  std::istringstream in(cli("--out " + d.string() + " sample-mix --ratios A=1,B=3 --n 40000").out);
  std::string tag;
  long count;
  double share;
  std::map<std::string, double> shares;
  while (in >> tag >> count >> share) shares[tag] = share;
  CHECK(shares["A"] == doctest::Approx(0.25).epsilon(0.05));
  CHECK(shares["B"] == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("score files and reports") {
  const fs::path d = temp_dir("score");
  write(d / "ref.txt", "u1\tアイウ\nu2\tabc\nu3\txyz\n");
  write(d / "hyp.txt", "u1\tアイ\nu2\tabd\n");
  const Run r = cli("--out " + d.string() + " score --ref " + (d / "ref.txt").string() + " --hyp " +
                    (d / "hyp.txt").string() + " --output sys.txt");
  REQUIRE(r.status == 0);
  // A missing hypothesis scores as empty: three deletions.
  CHECK(slurp(d / "sys.txt") ==
        "u1\t0\t1\t0\t3\t0.333333\n"
        "u2\t1\t0\t0\t3\t0.333333\n"
        "u3\t0\t3\t0\t3\t1.000000\n"
        "SUM\t1\t4\t0\t9\t0.555556\n");
  const Run rep = cli("--out " + d.string() + " report --cell base:JA=" + (d / "sys.txt").string() +
                      " --format tsv");
  CHECK(rep.out == "system\tJA\nbase\t55.6\n");
  CHECK(fs::exists(d / "report.tsv"));
}

TEST_CASE("gen-corpus refuses a manifest made under another seed") {
  const fs::path d = temp_dir("gen");
  const std::string small = " gen-corpus --language latin --tag EN --n-train 3 --n-test 1";
  CHECK(cli("--seed 1 --out " + d.string() + small).status == 0);
  CHECK(fs::exists(d / "EN.train.txt"));
  CHECK(fs::exists(d / "EN.test.blf"));
  CHECK(cli("--seed 2 --out " + d.string() + small).status == 2);
}
