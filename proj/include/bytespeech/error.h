// include/bytespeech/error.h

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

#ifndef BYTESPEECH_ERROR_H_
#define BYTESPEECH_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bytespeech {

// Coarse failure classes; the CLI maps these onto exit codes.
enum class ErrorCategory { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string &what)
      : std::runtime_error(what), category_(category), kind_(std::move(kind)) {}

  ErrorCategory category() const { return category_; }
  // Short machine-readable name, e.g. "IllFormed" or "CheckpointMissing".
  const std::string &kind() const { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

class DataError : public Error {
 public:
  DataError(std::string kind, const std::string &what)
      : Error(ErrorCategory::kData, std::move(kind), what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what)
      : Error(ErrorCategory::kUsage, "UsageError", what) {}
};

class NumericError : public Error {
 public:
  NumericError(std::string kind, const std::string &what)
      : Error(ErrorCategory::kNumeric, std::move(kind), what) {}
};

// Strict UTF-8 decoding hit an ill-formed byte at `position`.
class IllFormedError : public DataError {
 public:
  explicit IllFormedError(std::size_t position)
      : DataError("IllFormed", "ill-formed UTF-8 at byte " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ShapeMismatchError : public DataError {
 public:
  explicit ShapeMismatchError(const std::string &what)
      : DataError("ShapeMismatch", what) {}

 protected:
  ShapeMismatchError(std::string kind, const std::string &what)
      : DataError(std::move(kind), what) {}
};

// A warm-start checkpoint cannot seed the next curriculum stage's model.
class CheckpointShapeMismatchError : public ShapeMismatchError {
 public:
  explicit CheckpointShapeMismatchError(const std::string &what)
      : ShapeMismatchError("CheckpointShapeMismatch", what) {}
};

class CheckpointMissingError : public DataError {
 public:
  explicit CheckpointMissingError(const std::string &path)
      : DataError("CheckpointMissing", "checkpoint not found: " + path) {}
};

class NonFiniteLossError : public NumericError {
 public:
  explicit NonFiniteLossError(const std::string &what)
      : NumericError("NonFiniteLoss", what) {}
};

class InvalidConfigError : public Error {
 public:
  explicit InvalidConfigError(const std::string &what)
      : Error(ErrorCategory::kUsage, "InvalidConfig", what) {}
};

}  // namespace bytespeech

#endif  // BYTESPEECH_ERROR_H_
