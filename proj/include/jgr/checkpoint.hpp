// Copyright 2026 The JGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Binary checkpoints: magic "JGRC", version, JSON metadata, then a tensor
// table (name, dims, dtype, raw little-endian payload). Save->load->save is
// byte-identical; training resumed from a checkpoint matches an
// uninterrupted run step-for-step.

#ifndef JGR_CHECKPOINT_HPP_
#define JGR_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jgr/engine.hpp"

namespace jgr {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::vector<int32_t> dims;
  uint8_t dtype = 0;  // 0 = float32, 1 = float64
  std::vector<char> bytes;
};

struct Checkpoint {
  nlohmann::ordered_json meta;
  std::vector<CheckpointTensor> tensors;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  CheckpointTensor* find(const std::string& name) {
    for (auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

namespace detail {

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(std::string("checkpoint truncated reading ") + what);
  return v;
}

}  // namespace detail

inline void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
  out.write("JGRC", 4);
  detail::write_pod<uint32_t>(out, kCheckpointVersion);
  std::string m = meta.dump();
  detail::write_pod<uint64_t>(out, m.size());
  out.write(m.data(), static_cast<std::streamsize>(m.size()));
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::write_pod<uint16_t>(out, static_cast<uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::write_pod<uint8_t>(out, static_cast<uint8_t>(t.dims.size()));
    for (int32_t d : t.dims) detail::write_pod<int32_t>(out, d);
    detail::write_pod<uint8_t>(out, t.dtype);
    detail::write_pod<uint64_t>(out, t.bytes.size());
    out.write(t.bytes.data(), static_cast<std::streamsize>(t.bytes.size()));
  }
  if (!out) throw FormatError("checkpoint write failed: " + path);
}

inline Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "JGRC", 4) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  uint32_t version = detail::read_pod<uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path);
  uint64_t meta_len = detail::read_pod<uint64_t>(in, "metadata length");
  std::string m(meta_len, '\0');
  in.read(m.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw FormatError("checkpoint truncated reading metadata");
  Checkpoint ck;
  try {
    ck.meta = nlohmann::ordered_json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  uint32_t count = detail::read_pod<uint32_t>(in, "tensor count");
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    uint16_t name_len = detail::read_pod<uint16_t>(in, "name length");
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    uint8_t rank = detail::read_pod<uint8_t>(in, "rank");
    for (uint8_t r = 0; r < rank; ++r)
      t.dims.push_back(detail::read_pod<int32_t>(in, "dim"));
    t.dtype = detail::read_pod<uint8_t>(in, "dtype");
    uint64_t n = detail::read_pod<uint64_t>(in, "payload length");
    t.bytes.resize(n);
    in.read(t.bytes.data(), static_cast<std::streamsize>(n));
    if (!in) throw FormatError("checkpoint truncated reading tensor " + t.name);
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

// ---------------------------------------------------------------------------
// Parameter/optimizer packing
// ---------------------------------------------------------------------------

template <typename S>
void pack_params(Checkpoint& ck, const std::string& prefix,
                 const ParamStore<S>& params) {
  for (const auto& [name, t] : params) {
    CheckpointTensor ct;
    ct.name = prefix + name;
    for (int d : t.shape) ct.dims.push_back(d);
    ct.dtype = sizeof(S) == 4 ? 0 : 1;
    ct.bytes.resize(t.data->size() * sizeof(S));
    std::memcpy(ct.bytes.data(), t.data->data(), ct.bytes.size());
    ck.tensors.push_back(std::move(ct));
  }
}

template <typename S>
void unpack_params(Checkpoint& ck, const std::string& prefix,
                   ParamStore<S>& params) {
  for (auto& [name, t] : params) {
    CheckpointTensor* ct = ck.find(prefix + name);
    if (!ct) throw FormatError("checkpoint missing tensor " + prefix + name);
    if (ct->dtype != (sizeof(S) == 4 ? 0 : 1))
      throw FormatError("checkpoint dtype mismatch for " + ct->name);
    if (ct->bytes.size() != t.data->size() * sizeof(S))
      throw FormatError("checkpoint size mismatch for " + ct->name);
    std::memcpy(t.data->data(), ct->bytes.data(), ct->bytes.size());
  }
}

template <typename S>
void pack_optimizer(Checkpoint& ck, const std::string& prefix,
                    Optimizer<S>& opt) {
  ck.meta[prefix + "step_count"] = opt.step_count();
  for (auto* moments : {&opt.moments1(), &opt.moments2()}) {
    std::string tag = moments == &opt.moments1() ? "m1." : "m2.";
    for (const auto& [name, vals] : *moments) {
      CheckpointTensor ct;
      ct.name = prefix + tag + name;
      ct.dims.push_back(static_cast<int32_t>(vals.size()));
      ct.dtype = 1;
      ct.bytes.resize(vals.size() * sizeof(double));
      std::memcpy(ct.bytes.data(), vals.data(), ct.bytes.size());
      ck.tensors.push_back(std::move(ct));
    }
  }
}

template <typename S>
void unpack_optimizer(Checkpoint& ck, const std::string& prefix,
                      Optimizer<S>& opt) {
  if (!ck.meta.contains(prefix + "step_count"))
    throw FormatError("checkpoint missing " + prefix + "step_count");
  opt.set_step_count(ck.meta[prefix + "step_count"].get<long>());
  opt.moments1().clear();
  opt.moments2().clear();
  for (auto& t : ck.tensors) {
    for (const char* tag : {"m1.", "m2."}) {
      std::string full = prefix + tag;
      if (t.name.rfind(full, 0) != 0) continue;
      std::vector<double> vals(t.bytes.size() / sizeof(double));
      std::memcpy(vals.data(), t.bytes.data(), t.bytes.size());
      auto& dst = tag[1] == '1' ? opt.moments1() : opt.moments2();
      dst[t.name.substr(full.size())] = std::move(vals);
    }
  }
}

// Full trainer state: both models, both optimizers, loop counters. All run
// randomness is derived from (seed, counters), so counters are sufficient to
// resume the random streams exactly.
template <typename S>
void save_trainer(const std::string& path, JgrTrainer<S>& trainer) {
  Checkpoint ck;
  ck.meta["kind"] = "jgr-trainer";
  ck.meta["iteration"] = trainer.iteration();
  ck.meta["global_step"] = trainer.global_step();
  ck.meta["warmup_done"] = trainer.warmup_done();
  ck.meta["first_ranker_done"] = trainer.first_ranker_done();
  ck.meta["ranker_cycle_epoch"] = trainer.ranker_cycle().epoch();
  ck.meta["ranker_cycle_pos"] = trainer.ranker_cycle().pos();
  ck.meta["generator_cycle_epoch"] = trainer.generator_cycle().epoch();
  ck.meta["generator_cycle_pos"] = trainer.generator_cycle().pos();
  ck.meta["seed"] = trainer.config().seed;
  pack_params(ck, "g.", trainer.generator().params());
  pack_params(ck, "d.", trainer.ranker().params());
  pack_optimizer(ck, "opt.g.", trainer.generator_opt());
  pack_optimizer(ck, "opt.d.", trainer.ranker_opt());
  ck.save(path);
}

template <typename S>
void load_trainer(const std::string& path, JgrTrainer<S>& trainer) {
  Checkpoint ck = Checkpoint::load(path);
  if (!ck.meta.contains("kind") || ck.meta["kind"] != "jgr-trainer")
    throw FormatError("checkpoint is not a trainer checkpoint: " + path);
  unpack_params(ck, "g.", trainer.generator().params());
  unpack_params(ck, "d.", trainer.ranker().params());
  unpack_optimizer(ck, "opt.g.", trainer.generator_opt());
  unpack_optimizer(ck, "opt.d.", trainer.ranker_opt());
  trainer.restore_counters(
      ck.meta["iteration"].get<long>(), ck.meta["global_step"].get<long>(),
      ck.meta["warmup_done"].get<bool>(),
      ck.meta["first_ranker_done"].get<bool>(),
      ck.meta["ranker_cycle_epoch"].get<long>(),
      ck.meta["ranker_cycle_pos"].get<size_t>(),
      ck.meta["generator_cycle_epoch"].get<long>(),
      ck.meta["generator_cycle_pos"].get<size_t>());
}

// Single-model checkpoints (warmed generator, D0, baseline outputs).
template <typename S>
void save_model(const std::string& path, const std::string& kind,
                const ModelConfig& cfg, const ParamStore<S>& params,
                nlohmann::ordered_json extra_meta = {}) {
  Checkpoint ck;
  ck.meta["kind"] = kind;
  ck.meta["model"] = {{"vocab_size", cfg.vocab_size},
                      {"model_dim", cfg.model_dim},
                      {"ff_dim", cfg.ff_dim},
                      {"num_heads", cfg.num_heads},
                      {"encoder_layers", cfg.encoder_layers},
                      {"decoder_layers", cfg.decoder_layers},
                      {"max_positions", cfg.max_positions}};
  if (!extra_meta.is_null())
    for (auto& [k, v] : extra_meta.items()) ck.meta[k] = v;
  pack_params(ck, "m.", params);
  ck.save(path);
}

inline ModelConfig model_config_from_meta(const nlohmann::ordered_json& meta) {
  ModelConfig cfg;
  const auto& m = meta.at("model");
  cfg.vocab_size = m.at("vocab_size").get<int>();
  cfg.model_dim = m.at("model_dim").get<int>();
  cfg.ff_dim = m.at("ff_dim").get<int>();
  cfg.num_heads = m.at("num_heads").get<int>();
  cfg.encoder_layers = m.at("encoder_layers").get<int>();
  cfg.decoder_layers = m.at("decoder_layers").get<int>();
  cfg.max_positions = m.at("max_positions").get<int>();
  return cfg;
}

}  // namespace jgr

#endif  // JGR_CHECKPOINT_HPP_
