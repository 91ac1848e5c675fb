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
// Run configuration: a JSON document with a closed key set. Unknown keys are
// rejected; defaults are the engine defaults.

#ifndef JGR_RUNCONFIG_HPP_
#define JGR_RUNCONFIG_HPP_

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "jgr/baselines.hpp"
#include "jgr/engine.hpp"

namespace jgr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string task;        // synthetic task name, or empty if `data` is set
  std::string data;        // JSONL path/dir, or empty if `task` is set
  std::vector<int> data_sizes = {512, 64, 64};
  uint64_t data_seed = 1;
  std::string output_dir = ".";
  ModelConfig model;       // vocab_size filled from the dataset when 0
  ModelConfig ranker_model;
  bool ranker_model_set = false;
  JgrConfig train;
  BaselineConfig baseline;  // variant empty unless train-baseline
  nlohmann::ordered_json raw;  // the parsed document, for snapshots
};

namespace detail {

inline void reject_unknown(const nlohmann::ordered_json& obj,
                           const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key \"" + key + "\" in " + where);
}

template <typename T>
void maybe(const nlohmann::ordered_json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline void parse_model(const nlohmann::ordered_json& obj, ModelConfig& m,
                        const std::string& where) {
  reject_unknown(obj,
                 {"vocab_size", "model_dim", "ff_dim", "num_heads",
                  "encoder_layers", "decoder_layers", "max_positions",
                  "dropout", "init_std"},
                 where);
  maybe(obj, "vocab_size", m.vocab_size);
  maybe(obj, "model_dim", m.model_dim);
  maybe(obj, "ff_dim", m.ff_dim);
  maybe(obj, "num_heads", m.num_heads);
  maybe(obj, "encoder_layers", m.encoder_layers);
  maybe(obj, "decoder_layers", m.decoder_layers);
  maybe(obj, "max_positions", m.max_positions);
  maybe(obj, "dropout", m.dropout);
  maybe(obj, "init_std", m.init_std);
}

inline void parse_decode(const nlohmann::ordered_json& obj, DecodeConfig& d,
                         const std::string& where) {
  reject_unknown(obj,
                 {"max_len", "temperature", "top_p", "beam_size",
                  "length_penalty_exponent", "num_groups",
                  "diversity_penalty"},
                 where);
  maybe(obj, "max_len", d.max_len);
  maybe(obj, "temperature", d.temperature);
  maybe(obj, "top_p", d.top_p);
  maybe(obj, "beam_size", d.beam_size);
  maybe(obj, "length_penalty_exponent", d.length_penalty_exponent);
  maybe(obj, "num_groups", d.num_groups);
  maybe(obj, "diversity_penalty", d.diversity_penalty);
}

inline void parse_train(const nlohmann::ordered_json& obj, JgrConfig& t) {
  reject_unknown(
      obj,
      {"warmup_epochs", "ranker_steps_per_iter", "generator_steps_per_iter",
       "total_epochs", "candidates_ranker", "candidates_generator",
       "negatives", "picking", "reward_mode", "lr_generator", "lr_ranker",
       "first_ranker_steps", "first_ranker_warmup_steps", "batch_generator",
       "batch_ranker", "nll_weight", "rl_weight", "standardize_rewards",
       "eval_dev_cap", "delta_weights"},
      "train");
  maybe(obj, "warmup_epochs", t.warmup_epochs);
  maybe(obj, "ranker_steps_per_iter", t.ranker_steps_per_iter);
  maybe(obj, "generator_steps_per_iter", t.generator_steps_per_iter);
  maybe(obj, "total_epochs", t.total_epochs);
  maybe(obj, "candidates_ranker", t.candidates_ranker);
  maybe(obj, "candidates_generator", t.candidates_generator);
  maybe(obj, "negatives", t.negatives);
  if (obj.contains("picking"))
    t.picking = parse_pick_strategy(obj.at("picking").get<std::string>());
  if (obj.contains("reward_mode"))
    t.reward_mode = parse_reward_mode(obj.at("reward_mode").get<std::string>());
  maybe(obj, "lr_generator", t.lr_generator);
  maybe(obj, "lr_ranker", t.lr_ranker);
  maybe(obj, "first_ranker_steps", t.first_ranker_steps);
  maybe(obj, "first_ranker_warmup_steps", t.first_ranker_warmup_steps);
  maybe(obj, "batch_generator", t.batch_generator);
  maybe(obj, "batch_ranker", t.batch_ranker);
  maybe(obj, "nll_weight", t.nll_weight);
  maybe(obj, "rl_weight", t.rl_weight);
  maybe(obj, "standardize_rewards", t.standardize_rewards);
  maybe(obj, "eval_dev_cap", t.eval_dev_cap);
  if (obj.contains("delta_weights")) {
    const auto& w = obj.at("delta_weights");
    reject_unknown(w, {"R1", "R2", "RL", "B1", "B2", "B3", "B4"},
                   "train.delta_weights");
    t.delta_weights.clear();
    for (const auto& [name, value] : w.items())
      t.delta_weights[name] = value.get<double>();
  }
}

inline void parse_baseline(const nlohmann::ordered_json& obj,
                           BaselineConfig& b) {
  reject_unknown(obj, {"variant", "critic_lr", "disc_steps_per_iter", "gan_nll"},
                 "baseline");
  maybe(obj, "variant", b.variant);
  maybe(obj, "critic_lr", b.critic_lr);
  maybe(obj, "disc_steps_per_iter", b.disc_steps_per_iter);
  maybe(obj, "gan_nll", b.gan_nll);
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::ordered_json& doc) {
  detail::reject_unknown(doc,
                         {"task", "data", "data_sizes", "data_seed",
                          "output_dir", "seed", "model", "ranker_model",
                          "train", "sample_decode", "eval_decode", "baseline"},
                         "top level");
  RunConfig rc;
  rc.raw = doc;
  rc.model.vocab_size = 0;  // filled from the dataset
  detail::maybe(doc, "task", rc.task);
  detail::maybe(doc, "data", rc.data);
  detail::maybe(doc, "data_sizes", rc.data_sizes);
  detail::maybe(doc, "data_seed", rc.data_seed);
  detail::maybe(doc, "output_dir", rc.output_dir);
  if (doc.contains("seed")) rc.train.seed = doc.at("seed").get<uint64_t>();
  if (doc.contains("model")) detail::parse_model(doc.at("model"), rc.model, "model");
  rc.ranker_model = rc.model;
  if (doc.contains("ranker_model")) {
    detail::parse_model(doc.at("ranker_model"), rc.ranker_model, "ranker_model");
    rc.ranker_model_set = true;
  }
  if (doc.contains("train")) detail::parse_train(doc.at("train"), rc.train);
  if (doc.contains("sample_decode"))
    detail::parse_decode(doc.at("sample_decode"), rc.train.sample_decode,
                         "sample_decode");
  if (doc.contains("eval_decode"))
    detail::parse_decode(doc.at("eval_decode"), rc.train.eval_decode,
                         "eval_decode");
  if (doc.contains("baseline")) detail::parse_baseline(doc.at("baseline"), rc.baseline);
  rc.baseline.shared = rc.train;
  if (rc.task.empty() == rc.data.empty())
    throw ConfigError("config must set exactly one of \"task\" or \"data\"");
  if (rc.data_sizes.size() != 3)
    throw ConfigError("data_sizes must be [train, dev, test]");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

// Load (or generate) the dataset a config names.
inline Dataset load_config_dataset(const RunConfig& rc) {
  if (!rc.task.empty())
    return gen_synthetic(rc.task, rc.data_seed,
                         {rc.data_sizes[0], rc.data_sizes[1], rc.data_sizes[2]});
  return load_jsonl(rc.data);
}

}  // namespace jgr

#endif  // JGR_RUNCONFIG_HPP_
