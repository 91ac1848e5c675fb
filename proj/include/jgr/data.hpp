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
// Datasets: deterministic synthetic task generators and JSONL ingestion.
// Sequences are stored as token ids; every target ends with EOS.

#ifndef JGR_DATA_HPP_
#define JGR_DATA_HPP_

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "jgr/rng.hpp"
#include "jgr/vocab.hpp"

namespace jgr {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Example {
  std::vector<int> source;  // no BOS/EOS
  std::vector<int> target;  // ends with EOS
};

struct Dataset {
  std::string task;
  uint64_t seed = 0;
  Vocab vocab;
  std::vector<Example> train, dev, test;

  const std::vector<Example>& split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "test") return test;
    throw DataError("unknown split: " + name);
  }
};

struct SyntheticSizes {
  int train = 1000;
  int dev = 100;
  int test = 100;
};

struct SyntheticParams {
  // noisy-copy-head
  int content_vocab = 30;
  int noise_vocab = 12;
  int min_content = 4;
  int max_content = 7;
  double distractor_rate = 0.5;
  // field-summary
  int num_keys = 5;
  int num_values = 8;
  double key_present_prob = 0.7;
  int min_keys = 2;
};

namespace detail {

// Generates one split's worth of examples, skipping sources already seen so
// splits stay disjoint.
template <typename GenFn>
inline void fill_split(std::vector<Example>* out, int count, GenFn&& gen,
                       std::set<std::vector<int>>* seen_sources) {
  int attempts = 0;
  while (static_cast<int>(out->size()) < count) {
    Example ex = gen();
    if (++attempts > count * 200 + 1000)
      throw DataError("synthetic generator failed to produce enough distinct sources");
    if (!seen_sources->insert(ex.source).second) continue;
    out->push_back(std::move(ex));
  }
}

}  // namespace detail

// source: content words interleaved with marked distractor tokens;
// target: the content words in order. Extraction task; overlap metrics
// track task success directly.
inline Dataset gen_noisy_copy_head(uint64_t seed, const SyntheticSizes& sizes,
                                   const SyntheticParams& p = {}) {
  if (sizes.train <= 0 || sizes.dev <= 0 || sizes.test <= 0)
    throw DataError("gen_synthetic: sizes must be positive");
  Dataset ds;
  ds.task = "noisy-copy-head";
  ds.seed = seed;
  std::vector<int> content_ids, noise_ids;
  for (int i = 0; i < p.content_vocab; ++i)
    content_ids.push_back(ds.vocab.add("w" + std::to_string(i)));
  for (int i = 0; i < p.noise_vocab; ++i)
    noise_ids.push_back(ds.vocab.add("x" + std::to_string(i)));

  RngStream rng = Rng(seed).stream("data");
  auto gen = [&]() {
    Example ex;
    int m = p.min_content +
            static_cast<int>(rng.next_below(p.max_content - p.min_content + 1));
    for (int i = 0; i < m; ++i) {
      while (rng.next_double() < p.distractor_rate)
        ex.source.push_back(noise_ids[rng.next_below(noise_ids.size())]);
      int w = content_ids[rng.next_below(content_ids.size())];
      ex.source.push_back(w);
      ex.target.push_back(w);
    }
    ex.target.push_back(Vocab::kEos);
    return ex;
  };
  std::set<std::vector<int>> seen;
  detail::fill_split(&ds.train, sizes.train, gen, &seen);
  detail::fill_split(&ds.dev, sizes.dev, gen, &seen);
  detail::fill_split(&ds.test, sizes.test, gen, &seen);
  return ds;
}

// source: shuffled key:value pairs plus distractors; target: fixed template
// realizing the present keys in canonical order. Selection + ordering task
// with many near-miss candidates (wrong value, wrong order, dropped key).
inline Dataset gen_field_summary(uint64_t seed, const SyntheticSizes& sizes,
                                 const SyntheticParams& p = {}) {
  if (sizes.train <= 0 || sizes.dev <= 0 || sizes.test <= 0)
    throw DataError("gen_synthetic: sizes must be positive");
  Dataset ds;
  ds.task = "field-summary";
  ds.seed = seed;
  std::vector<int> key_ids, val_ids, noise_ids;
  for (int i = 0; i < p.num_keys; ++i)
    key_ids.push_back(ds.vocab.add("k" + std::to_string(i)));
  for (int i = 0; i < p.num_values; ++i)
    val_ids.push_back(ds.vocab.add("v" + std::to_string(i)));
  for (int i = 0; i < p.noise_vocab; ++i)
    noise_ids.push_back(ds.vocab.add("x" + std::to_string(i)));

  RngStream rng = Rng(seed).stream("data");
  auto gen = [&]() {
    Example ex;
    std::vector<int> chosen_val(p.num_keys, -1);
    int present = 0;
    while (present < p.min_keys) {
      present = 0;
      for (int k = 0; k < p.num_keys; ++k) {
        chosen_val[k] = rng.next_double() < p.key_present_prob
                            ? val_ids[rng.next_below(val_ids.size())]
                            : -1;
        if (chosen_val[k] >= 0) ++present;
      }
    }
    // Pairs in a shuffled order, each preceded by optional distractors.
    std::vector<int> order;
    for (int k = 0; k < p.num_keys; ++k)
      if (chosen_val[k] >= 0) order.push_back(k);
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    for (int k : order) {
      while (rng.next_double() < p.distractor_rate)
        ex.source.push_back(noise_ids[rng.next_below(noise_ids.size())]);
      ex.source.push_back(key_ids[k]);
      ex.source.push_back(chosen_val[k]);
    }
    // Canonical key order in the target.
    for (int k = 0; k < p.num_keys; ++k) {
      if (chosen_val[k] < 0) continue;
      ex.target.push_back(key_ids[k]);
      ex.target.push_back(chosen_val[k]);
    }
    ex.target.push_back(Vocab::kEos);
    return ex;
  };
  std::set<std::vector<int>> seen;
  detail::fill_split(&ds.train, sizes.train, gen, &seen);
  detail::fill_split(&ds.dev, sizes.dev, gen, &seen);
  detail::fill_split(&ds.test, sizes.test, gen, &seen);
  return ds;
}

inline Dataset gen_synthetic(const std::string& task, uint64_t seed,
                             const SyntheticSizes& sizes,
                             const SyntheticParams& params = {}) {
  if (task == "noisy-copy-head") return gen_noisy_copy_head(seed, sizes, params);
  if (task == "field-summary") return gen_field_summary(seed, sizes, params);
  throw DataError("unknown synthetic task: " + task);
}

namespace detail {

inline std::vector<std::pair<std::string, std::string>> read_jsonl_pairs(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("src") || !j.contains("tgt") ||
        !j["src"].is_string() || !j["tgt"].is_string())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected object with string fields \"src\" and \"tgt\"");
    out.emplace_back(j["src"].get<std::string>(), j["tgt"].get<std::string>());
  }
  return out;
}

}  // namespace detail

// Loads a dataset from JSONL files. `path` is either a single train file or
// a directory containing train.jsonl and optionally dev.jsonl / test.jsonl.
// The vocabulary is built from the train split only; out-of-vocab tokens in
// other splits map to UNK.
inline Dataset load_jsonl(const std::string& path) {
  std::string train_path = path, dev_path, test_path;
  {
    std::ifstream probe(path + "/train.jsonl");
    if (probe) {
      train_path = path + "/train.jsonl";
      dev_path = path + "/dev.jsonl";
      test_path = path + "/test.jsonl";
    }
  }
  Dataset ds;
  ds.task = "jsonl:" + path;
  auto train_raw = detail::read_jsonl_pairs(train_path);
  if (train_raw.empty()) throw DataError("empty train split in " + train_path);
  for (const auto& [src, tgt] : train_raw) {
    for (const auto& w : Vocab::split_words(src)) ds.vocab.add(w);
    for (const auto& w : Vocab::split_words(tgt)) ds.vocab.add(w);
  }
  auto encode_into = [&](const std::vector<std::pair<std::string, std::string>>& raw,
                         std::vector<Example>* out) {
    for (const auto& [src, tgt] : raw) {
      Example ex;
      ex.source = ds.vocab.encode_text(src);
      ex.target = ds.vocab.encode_text(tgt);
      if (ex.source.empty() || ex.target.empty())
        throw DataError("empty src or tgt in " + path);
      ex.target.push_back(Vocab::kEos);
      out->push_back(std::move(ex));
    }
  };
  encode_into(train_raw, &ds.train);
  auto maybe_load = [&](const std::string& p, std::vector<Example>* out) {
    if (p.empty()) return;
    std::ifstream probe(p);
    if (!probe) return;
    probe.close();
    encode_into(detail::read_jsonl_pairs(p), out);
  };
  maybe_load(dev_path, &ds.dev);
  maybe_load(test_path, &ds.test);
  return ds;
}

// Padded batch with masks. Training code consumes per-example trimmed
// sequences via lengths; padded views exist for mask-correctness checks.
struct Batch {
  std::vector<Example> items;
  int max_src = 0, max_tgt = 0;
  std::vector<int> src_ids, tgt_ids;       // row-major [batch, max_len], PAD-filled
  std::vector<float> src_mask, tgt_mask;   // 1 for real tokens, 0 for padding
};

inline Batch make_batch(const std::vector<Example>& items) {
  Batch b;
  b.items = items;
  for (const auto& ex : items) {
    b.max_src = std::max(b.max_src, static_cast<int>(ex.source.size()));
    b.max_tgt = std::max(b.max_tgt, static_cast<int>(ex.target.size()));
  }
  for (const auto& ex : items) {
    for (int i = 0; i < b.max_src; ++i) {
      bool real = i < static_cast<int>(ex.source.size());
      b.src_ids.push_back(real ? ex.source[i] : Vocab::kPad);
      b.src_mask.push_back(real ? 1.f : 0.f);
    }
    for (int i = 0; i < b.max_tgt; ++i) {
      bool real = i < static_cast<int>(ex.target.size());
      b.tgt_ids.push_back(real ? ex.target[i] : Vocab::kPad);
      b.tgt_mask.push_back(real ? 1.f : 0.f);
    }
  }
  return b;
}

// One epoch of batches; every example appears exactly once. Shuffle order is
// fully determined by the seed.
inline std::vector<Batch> batch_iter(const std::vector<Example>& data,
                                     int batch_size, uint64_t shuffle_seed,
                                     bool shuffle = true) {
  if (batch_size < 1) throw DataError("batch_iter: batch_size must be >= 1");
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) {
    RngStream rng = Rng(shuffle_seed).stream("shuffle");
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
  }
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    std::vector<Example> items;
    for (size_t i = start; i < std::min(order.size(), start + batch_size); ++i)
      items.push_back(data[order[i]]);
    batches.push_back(make_batch(items));
  }
  return batches;
}

}  // namespace jgr

#endif  // JGR_DATA_HPP_
