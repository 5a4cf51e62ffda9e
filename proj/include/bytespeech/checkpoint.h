// include/bytespeech/checkpoint.h

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

#ifndef BYTESPEECH_CHECKPOINT_H_
#define BYTESPEECH_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bytespeech/error.h"
#include "bytespeech/optim.h"
#include "bytespeech/tensor.h"

namespace bytespeech::core {

inline constexpr std::uint16_t kCheckpointVersion = 1;

class VersionMismatchError : public DataError {
 public:
  explicit VersionMismatchError(const std::string &what) : DataError("VersionMismatch", what) {}
};

struct SavedTensor {
  std::string name;
  int lang_rows = 0;
  Tensor value;
};

// Layout (little-endian):
//   magic[4] u16 version
//   u32 n, config JSON[n]
//   u32 count, then per parameter: u16 len, name, u32 lang_rows, u8 rank,
//     u32 dims[rank], f64 values
//   u8 has_optimizer; if set: f64 lr beta1 beta2 eps clip decay_rate,
//     i64 decay_steps, i64 adam steps,
//     then m and v for every parameter in table order
//   i64 training step
struct CheckpointData {
  std::string magic;
  std::uint16_t version = kCheckpointVersion;
  std::string config_json;
  std::vector<SavedTensor> params;
  bool has_optimizer = false;
  AdamConfig adam;
  std::int64_t adam_steps = 0;
  std::vector<AdamMoments> moments;  // parallel to params
  std::int64_t train_step = 0;
};

void write_checkpoint(const std::filesystem::path &path, const CheckpointData &data);

// Throws CheckpointMissingError, VersionMismatchError (also for a wrong
// magic) or DataError on truncation.
CheckpointData read_checkpoint(const std::filesystem::path &path, const std::string &magic);

// Snapshot of a store (and optimizer, if given) in registration order.
CheckpointData capture(const std::string &magic, const std::string &config_json,
                       const ParameterStore &store, const Adam *adam, std::int64_t train_step);

// Copies saved values into `store`. A parameter whose saved shape differs is
// accepted only when its language slots grew: the saved rows land first and
// the new trailing rows are zero. Anything else throws ShapeMismatchError.
void restore(const CheckpointData &data, ParameterStore &store, Adam *adam);

}  // namespace bytespeech::core

#endif  // BYTESPEECH_CHECKPOINT_H_
