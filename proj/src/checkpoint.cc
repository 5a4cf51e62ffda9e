// src/checkpoint.cc

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

#include "bytespeech/checkpoint.h"

#include <bit>
#include <fstream>
#include <iterator>

namespace bytespeech::core {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void uint(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string &s) { buf_.append(s); }
  const std::string &buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DataError("TruncatedCheckpoint", "checkpoint is truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

void write_values(Writer &w, const Tensor &t) {
  for (double v : t.values()) w.f64(v);
}

Tensor read_values(Reader &r, const std::vector<int> &shape) {
  Tensor t(shape);
  for (double &v : t.storage()) v = r.f64();
  return t;
}

// Saved tensor grown along language rows into `shape`, or nullopt-like empty
// tensor when the shapes are incompatible.
bool grow_into(const Tensor &saved, int saved_lang_rows, const Parameter &p, Tensor *out) {
  if (saved.shape() == p.value.shape()) {
    *out = saved;
    return true;
  }
  if (saved.rank() != 2 || p.value.rank() != 2 || saved.cols() != p.value.cols()) return false;
  const int extra = p.value.rows() - saved.rows();
  if (extra <= 0 || p.lang_rows != saved_lang_rows + extra) return false;
  *out = Tensor(p.value.shape());
  std::copy(saved.values().begin(), saved.values().end(), out->storage().begin());
  return true;
}

}  // namespace

void write_checkpoint(const std::filesystem::path &path, const CheckpointData &data) {
  Writer w;
  w.bytes(data.magic);
  w.uint(data.version, 2);
  w.uint(data.config_json.size(), 4);
  w.bytes(data.config_json);
  w.uint(data.params.size(), 4);
  for (const SavedTensor &p : data.params) {
    w.uint(p.name.size(), 2);
    w.bytes(p.name);
    w.uint(static_cast<std::uint32_t>(p.lang_rows), 4);
    w.u8(static_cast<std::uint8_t>(p.value.rank()));
    for (int d : p.value.shape()) w.uint(static_cast<std::uint32_t>(d), 4);
    write_values(w, p.value);
  }
  w.u8(data.has_optimizer ? 1 : 0);
  if (data.has_optimizer) {
    w.f64(data.adam.lr);
    w.f64(data.adam.beta1);
    w.f64(data.adam.beta2);
    w.f64(data.adam.eps);
    w.f64(data.adam.clip_norm);
    w.f64(data.adam.decay_rate);
    w.uint(static_cast<std::uint64_t>(data.adam.decay_steps), 8);
    w.uint(static_cast<std::uint64_t>(data.adam_steps), 8);
    for (const AdamMoments &m : data.moments) {
      write_values(w, m.m);
      write_values(w, m.v);
    }
  }
  w.uint(static_cast<std::uint64_t>(data.train_step), 8);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("WriteFailed", "cannot write checkpoint " + path.string());
  os.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!os) throw DataError("WriteFailed", "cannot write checkpoint " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path &path, const std::string &magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointMissingError(path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(is), {}));
  CheckpointData d;
  d.magic = r.bytes(4);
  if (d.magic != magic)
    throw VersionMismatchError("expected " + magic + " checkpoint, found '" + d.magic + "'");
  d.version = static_cast<std::uint16_t>(r.uint(2));
  if (d.version != kCheckpointVersion)
    throw VersionMismatchError("unsupported checkpoint version " + std::to_string(d.version));
  d.config_json = r.bytes(r.uint(4));
  const std::uint64_t count = r.uint(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    SavedTensor p;
    p.name = r.bytes(r.uint(2));
    p.lang_rows = static_cast<int>(r.uint(4));
    std::vector<int> shape(r.uint(1));
    for (int &dim : shape) dim = static_cast<int>(r.uint(4));
    p.value = read_values(r, shape);
    d.params.push_back(std::move(p));
  }
  d.has_optimizer = r.uint(1) != 0;
  if (d.has_optimizer) {
    d.adam.lr = r.f64();
    d.adam.beta1 = r.f64();
    d.adam.beta2 = r.f64();
    d.adam.eps = r.f64();
    d.adam.clip_norm = r.f64();
    d.adam.decay_rate = r.f64();
    d.adam.decay_steps = static_cast<std::int64_t>(r.uint(8));
    d.adam_steps = static_cast<std::int64_t>(r.uint(8));
    for (const SavedTensor &p : d.params) {
      AdamMoments m;
      m.m = read_values(r, p.value.shape());
      m.v = read_values(r, p.value.shape());
      d.moments.push_back(std::move(m));
    }
  }
  d.train_step = static_cast<std::int64_t>(r.uint(8));
  if (!r.at_end()) throw DataError("TrailingBytes", "unexpected bytes after checkpoint");
  return d;
}

CheckpointData capture(const std::string &magic, const std::string &config_json,
                       const ParameterStore &store, const Adam *adam, std::int64_t train_step) {
  CheckpointData d;
  d.magic = magic;
  d.config_json = config_json;
  d.train_step = train_step;
  for (const auto &p : store) d.params.push_back({p->name, p->lang_rows, p->value});
  if (adam != nullptr) {
    d.has_optimizer = true;
    d.adam = adam->config();
    d.adam_steps = adam->steps();
    for (const auto &p : store) {
      auto it = adam->moments().find(p->name);
      if (it != adam->moments().end()) {
        d.moments.push_back(it->second);
      } else {
        d.moments.push_back({Tensor(p->value.shape()), Tensor(p->value.shape())});
      }
    }
  }
  return d;
}

void restore(const CheckpointData &data, ParameterStore &store, Adam *adam) {
  if (data.params.size() != store.size())
    throw ShapeMismatchError("checkpoint has " + std::to_string(data.params.size()) +
                             " parameters, model has " + std::to_string(store.size()));
  std::vector<Tensor> values(data.params.size());
  std::vector<AdamMoments> moments(data.has_optimizer ? data.params.size() : 0);
  for (std::size_t i = 0; i < data.params.size(); ++i) {
    const SavedTensor &s = data.params[i];
    const Parameter *p = store.find(s.name);
    if (p == nullptr) throw ShapeMismatchError("model has no parameter " + s.name);
    if (!grow_into(s.value, s.lang_rows, *p, &values[i]))
      throw ShapeMismatchError("parameter " + s.name + ": checkpoint " +
                               shape_string(s.value.shape()) + " vs model " +
                               shape_string(p->value.shape()));
    if (data.has_optimizer) {
      grow_into(data.moments[i].m, s.lang_rows, *p, &moments[i].m);
      grow_into(data.moments[i].v, s.lang_rows, *p, &moments[i].v);
    }
  }
  for (std::size_t i = 0; i < data.params.size(); ++i) {
    Parameter &p = store.at(data.params[i].name);
    p.value = std::move(values[i]);
    p.grad = Tensor(p.value.shape());
  }
  if (adam != nullptr && data.has_optimizer) {
    *adam = Adam(data.adam);
    adam->set_steps(data.adam_steps);
    for (std::size_t i = 0; i < data.params.size(); ++i)
      adam->moments()[data.params[i].name] = std::move(moments[i]);
  }
}

}  // namespace bytespeech::core
