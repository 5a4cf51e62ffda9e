// tests/acceptance/common.cc

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

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "harness.h"

namespace bytespeech::acceptance {

std::string format(const char *fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[1024];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

fs::path fresh_dir(const Context &ctx, const std::string &name) {
  const fs::path d = ctx.work / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string file_bytes(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double seconds_since(std::int64_t start_ns) { return 1e-9 * static_cast<double>(now_ns() - start_ns); }

a2b::A2BModel train_asr(const AsrRecipe &recipe, const corpus::CorpusMap &train,
                        const std::map<std::string, double> &ratios) {
  a2b::A2BModel model(recipe.model);
  a2b::Trainer trainer(model, recipe.adam);
  corpus::MixSampler sampler(train, ratios, recipe.sampler_seed);
  for (int s = 0; s < recipe.steps; ++s) trainer.train_step(a2b::draw_batch(model, sampler, recipe.batch));
  return model;
}

a2b::EvalResult evaluate_asr(const a2b::A2BModel &model, const std::vector<corpus::Utterance> &test,
                             int beam, int max_len, int threads) {
  a2b::EvalOptions eo;
  eo.beam = a2b::default_beam(model.config());
  eo.beam.beam_size = beam;
  eo.beam.max_len = max_len;
  eo.threads = threads;
  return a2b::evaluate(model, test, eo);
}

std::vector<corpus::Utterance> noisy_copies(const std::vector<std::u32string> &texts,
                                            const std::string &tag,
                                            const corpus::SynthProfile &profile,
                                            std::uint64_t base_seed, int copies) {
  std::vector<corpus::Utterance> out;
  for (int v = 0; v < copies; ++v) {
    const std::uint64_t seed = v == 0 ? base_seed : 100 + static_cast<std::uint64_t>(v);
    auto more = corpus::make_utterances(texts, tag, profile, seed);
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return out;
}

}  // namespace bytespeech::acceptance
