// pausekit/nn/params.hpp

// Copyright 2026 Pausekit Authors

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

// Named parameter tensors with per-parameter trainable flags, plus the
// versioned binary checkpoint container.
//
// Checkpoint layout (little-endian):
//   magic "PKTCKPT\n" (8 bytes), u32 version, u64 record count, then per
//   record: u32 name length, name bytes, u8 trainable, u32 rank,
//   u64 dims[rank], f64 values[numel]. Round-trips are bit-exact.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "pausekit/nn/graph.hpp"
#include "pausekit/nn/tensor.hpp"

namespace pausekit::nn {

inline constexpr char kCheckpointMagic[8] = {'P', 'K', 'T', 'C', 'K', 'P', 'T', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Param {
  Tensor value;
  bool trainable = true;
};

class ParamSet {
 public:
  void add(const std::string& name, Tensor value, bool trainable = true) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    names_.push_back(name);
    params_.push_back(Param{std::move(value), trainable});
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Param& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return params_[it->second];
  }
  const Param& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return params_[it->second];
  }

  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return params_.size(); }

  void set_trainable_prefix(const std::string& prefix, bool trainable) {
    for (size_t i = 0; i < names_.size(); ++i)
      if (names_[i].rfind(prefix, 0) == 0) params_[i].trainable = trainable;
  }

  // Copies values (and trainable flags) for every name present in `other`,
  // e.g. to load a pre-trained encoder. Shape mismatches are errors.
  void merge_from(const ParamSet& other) {
    for (const auto& name : other.names_) {
      if (!has(name)) throw ConfigError("merge_from: unknown parameter " + name);
      Param& dst = at(name);
      const Param& src = other.at(name);
      if (!dst.value.same_shape(src.value))
        throw ConfigError("merge_from: shape mismatch for " + name + ": " +
                          dst.value.shape_str() + " vs " + src.value.shape_str());
      dst.value = src.value;
    }
  }

  // Subset whose names start with `prefix` (used to save encoder-only
  // checkpoints).
  ParamSet subset(const std::string& prefix) const {
    ParamSet out;
    for (size_t i = 0; i < names_.size(); ++i)
      if (names_[i].rfind(prefix, 0) == 0)
        out.add(names_[i], params_[i].value, params_[i].trainable);
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
    out.write(kCheckpointMagic, 8);
    write_u32(out, kCheckpointVersion);
    write_u64(out, params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      write_u32(out, static_cast<std::uint32_t>(names_[i].size()));
      out.write(names_[i].data(), static_cast<std::streamsize>(names_[i].size()));
      char t = params_[i].trainable ? 1 : 0;
      out.write(&t, 1);
      const auto& shape = params_[i].value.shape();
      write_u32(out, static_cast<std::uint32_t>(shape.size()));
      for (size_t d : shape) write_u64(out, d);
      out.write(reinterpret_cast<const char*>(params_[i].value.data()),
                static_cast<std::streamsize>(params_[i].value.numel() * sizeof(double)));
    }
    if (!out) throw ParseError("failed writing checkpoint: " + path);
  }

  static ParamSet load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
      throw ParseError(path + ": not a checkpoint file");
    std::uint32_t version = read_u32(in, path);
    if (version != kCheckpointVersion)
      throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    std::uint64_t count = read_u64(in, path);
    ParamSet ps;
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uint32_t name_len = read_u32(in, path);
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      char t = 0;
      in.read(&t, 1);
      std::uint32_t rank = read_u32(in, path);
      std::vector<size_t> shape(rank);
      for (auto& d : shape) d = static_cast<size_t>(read_u64(in, path));
      Tensor value(shape);
      in.read(reinterpret_cast<char*>(value.data()),
              static_cast<std::streamsize>(value.numel() * sizeof(double)));
      if (!in) throw ParseError(path + ": truncated checkpoint at record " + std::to_string(i));
      ps.add(name, std::move(value), t != 0);
    }
    return ps;
  }

 private:
  static void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(path + ": truncated checkpoint");
    return v;
  }
  static std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(path + ": truncated checkpoint");
    return v;
  }

  std::vector<std::string> names_;
  std::vector<Param> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Binds a named parameter into a graph (cached per graph and parameter set,
// so repeated binds share one node).
inline Var use_param(Graph& g, const ParamSet& ps, const std::string& name) {
  const Param& p = ps.at(name);
  return g.param(&ps, name, p.value, p.trainable);
}

// Uniform init with Glorot-style scale.
inline Tensor init_uniform(std::vector<size_t> shape, std::mt19937_64& rng, double scale = 0.0) {
  Tensor t(shape);
  size_t fan_in = t.rows(), fan_out = t.cols();
  double r = scale > 0.0 ? scale : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-r, r);
  for (size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

}  // namespace pausekit::nn
