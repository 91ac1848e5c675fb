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
// Decoding strategies over a generator model: greedy, nucleus sampling, beam
// search with length normalization, and diverse (group) beam search with a
// Hamming diversity penalty. All run in eval mode (no tape recording).

#ifndef JGR_DECODE_HPP_
#define JGR_DECODE_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "jgr/model.hpp"
#include "jgr/rng.hpp"
#include "jgr/vocab.hpp"

namespace jgr {

struct DecodeConfig {
  int max_len = 24;
  double temperature = 1.0;
  double top_p = 1.0;
  int beam_size = 16;
  double length_penalty_exponent = 1.0;  // score = logprob / len^alpha
  int num_groups = 1;
  double diversity_penalty = 1.0;
  uint64_t seed = 0;

  void validate() const {
    if (top_p <= 0.0 || top_p > 1.0)
      throw ContractError("DecodeConfig: top_p must be in (0, 1]");
    if (temperature <= 0.0)
      throw ContractError("DecodeConfig: temperature must be > 0");
    if (beam_size < 1) throw ContractError("DecodeConfig: beam_size must be >= 1");
    if (num_groups < 1 || beam_size % num_groups != 0)
      throw ContractError("DecodeConfig: num_groups must divide beam_size");
    if (max_len < 1) throw ContractError("DecodeConfig: max_len must be >= 1");
  }
};

struct DecodedSequence {
  std::vector<int> tokens;  // no BOS; ends with EOS when finished
  double logprob = 0.0;
  double normalized_score = 0.0;
  bool finished = false;
};

namespace detail {

inline double length_normalize(double logprob, size_t len, double alpha) {
  return logprob / std::pow(static_cast<double>(std::max<size_t>(len, 1)), alpha);
}

template <typename S>
std::vector<double> logprob_row(const std::vector<S>& logits) {
  double mx = -1e300;
  for (S v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0;
  for (S v : logits) sum += std::exp(static_cast<double>(v) - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i)
    out[i] = static_cast<double>(logits[i]) - lse;
  return out;
}

}  // namespace detail

template <typename Model>
DecodedSequence greedy_decode(const Model& model,
                              const std::vector<int>& source,
                              const DecodeConfig& config) {
  config.validate();
  auto enc = model.encode(source);
  DecodedSequence out;
  std::vector<int> prefix = {Vocab::kBos};
  for (int step = 0; step < config.max_len; ++step) {
    auto lp = detail::logprob_row(model.next_logits(prefix, enc));
    int best = 0;
    for (size_t v = 1; v < lp.size(); ++v)
      if (lp[v] > lp[best]) best = static_cast<int>(v);
    out.tokens.push_back(best);
    out.logprob += lp[best];
    prefix.push_back(best);
    if (best == Vocab::kEos) {
      out.finished = true;
      break;
    }
  }
  out.normalized_score = detail::length_normalize(
      out.logprob, out.tokens.size(), config.length_penalty_exponent);
  return out;
}

// One ancestral sample; temperature scaling then top-p truncation keeping the
// minimal probability prefix reaching top_p (the top token always survives).
template <typename Model, typename Enc>
DecodedSequence nucleus_sample_one(const Model& model, const Enc& enc,
                                   const DecodeConfig& config, RngStream rng) {
  DecodedSequence out;
  std::vector<int> prefix = {Vocab::kBos};
  for (int step = 0; step < config.max_len; ++step) {
    auto logits = model.next_logits(prefix, enc);
    std::vector<double> scaled(logits.size());
    for (size_t v = 0; v < logits.size(); ++v)
      scaled[v] = static_cast<double>(logits[v]) / config.temperature;
    double mx = *std::max_element(scaled.begin(), scaled.end());
    double z = 0;
    for (double& v : scaled) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : scaled) v /= z;
    std::vector<int> order(scaled.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return scaled[a] != scaled[b] ? scaled[a] > scaled[b] : a < b;
    });
    size_t kept = 0;
    double mass = 0;
    while (kept < order.size()) {
      mass += scaled[order[kept]];
      ++kept;
      if (mass >= config.top_p - 1e-12) break;
    }
    double u = rng.next_double() * mass;
    int chosen = order[kept - 1];
    double acc = 0;
    for (size_t i = 0; i < kept; ++i) {
      acc += scaled[order[i]];
      if (u < acc) {
        chosen = order[i];
        break;
      }
    }
    // True model log-prob of the chosen token (not the truncated one).
    auto lp = detail::logprob_row(logits);
    out.tokens.push_back(chosen);
    out.logprob += lp[chosen];
    prefix.push_back(chosen);
    if (chosen == Vocab::kEos) {
      out.finished = true;
      break;
    }
  }
  out.normalized_score = detail::length_normalize(
      out.logprob, out.tokens.size(), config.length_penalty_exponent);
  return out;
}

// C i.i.d. nucleus samples; candidate i draws from substream fork(i), so the
// set is invariant to evaluation order and fully determined by (seed, i).
template <typename Model>
std::vector<DecodedSequence> nucleus_sample(const Model& model,
                                            const std::vector<int>& source,
                                            int num_candidates,
                                            const DecodeConfig& config,
                                            const RngStream& base_rng) {
  config.validate();
  if (num_candidates < 1)
    throw ContractError("nucleus_sample: need at least one candidate");
  auto enc = model.encode(source);
  std::vector<DecodedSequence> out;
  for (int i = 0; i < num_candidates; ++i)
    out.push_back(nucleus_sample_one(model, enc, config, base_rng.fork(i)));
  return out;
}

namespace detail {

struct Hypothesis {
  std::vector<int> tokens;
  double logprob = 0.0;
  double penalized = 0.0;  // selection score including diversity penalties
};

template <typename Model, typename Enc>
std::vector<DecodedSequence> group_beam_search(const Model& model,
                                               const Enc& enc,
                                               const DecodeConfig& config,
                                               int num_groups,
                                               double diversity_penalty) {
  const int group_width = config.beam_size / num_groups;
  const double alpha = config.length_penalty_exponent;

  struct Group {
    std::vector<Hypothesis> live;
    std::vector<DecodedSequence> finished;
  };
  std::vector<Group> groups(num_groups);
  for (auto& g : groups) g.live.push_back(Hypothesis{});

  for (int step = 0; step < config.max_len; ++step) {
    std::vector<int> token_use;  // tokens chosen by earlier groups this step
    for (auto& group : groups) {
      if (group.live.empty()) continue;
      struct Ext {
        int hyp;
        int token;
        double logprob;
        double penalized;
      };
      std::vector<Ext> exts;
      for (size_t h = 0; h < group.live.size(); ++h) {
        std::vector<int> prefix = {Vocab::kBos};
        prefix.insert(prefix.end(), group.live[h].tokens.begin(),
                      group.live[h].tokens.end());
        auto lp = logprob_row(model.next_logits(prefix, enc));
        for (size_t v = 0; v < lp.size(); ++v) {
          double pen = 0.0;
          if (diversity_penalty != 0.0)
            pen = diversity_penalty *
                  std::count(token_use.begin(), token_use.end(),
                             static_cast<int>(v));
          exts.push_back({static_cast<int>(h), static_cast<int>(v),
                          group.live[h].logprob + lp[v],
                          group.live[h].penalized + lp[v] - pen});
        }
      }
      int take = std::min<int>(group_width, static_cast<int>(exts.size()));
      std::partial_sort(exts.begin(), exts.begin() + take, exts.end(),
                        [](const Ext& a, const Ext& b) {
                          if (a.penalized != b.penalized)
                            return a.penalized > b.penalized;
                          if (a.hyp != b.hyp) return a.hyp < b.hyp;
                          return a.token < b.token;
                        });
      std::vector<Hypothesis> next_live;
      for (int i = 0; i < take; ++i) {
        const Ext& e = exts[i];
        Hypothesis h = group.live[e.hyp];
        h.tokens.push_back(e.token);
        h.logprob = e.logprob;
        h.penalized = e.penalized;
        token_use.push_back(e.token);
        if (e.token == Vocab::kEos) {
          DecodedSequence d;
          d.tokens = h.tokens;
          d.logprob = h.logprob;
          d.finished = true;
          d.normalized_score = length_normalize(h.logprob, h.tokens.size(), alpha);
          group.finished.push_back(d);
        } else {
          next_live.push_back(std::move(h));
        }
      }
      group.live = std::move(next_live);
    }
  }

  std::vector<DecodedSequence> all;
  for (auto& group : groups) {
    for (auto& d : group.finished) all.push_back(d);
    for (auto& h : group.live) {
      DecodedSequence d;
      d.tokens = h.tokens;
      d.logprob = h.logprob;
      d.finished = false;
      d.normalized_score = length_normalize(h.logprob, h.tokens.size(), alpha);
      all.push_back(d);
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const DecodedSequence& a, const DecodedSequence& b) {
                     return a.normalized_score > b.normalized_score;
                   });
  if (static_cast<int>(all.size()) > config.beam_size)
    all.resize(config.beam_size);
  return all;
}

}  // namespace detail

// Length-normalized beam search; first element is the generator's output.
template <typename Model>
std::vector<DecodedSequence> beam_search(const Model& model,
                                         const std::vector<int>& source,
                                         const DecodeConfig& config) {
  config.validate();
  auto enc = model.encode(source);
  return detail::group_beam_search(model, enc, config, 1, 0.0);
}

// Group beam search: groups decode sequentially each step and later groups
// pay diversity_penalty per token already chosen by earlier groups.
template <typename Model>
std::vector<DecodedSequence> diverse_beam_search(const Model& model,
                                                 const std::vector<int>& source,
                                                 const DecodeConfig& config) {
  config.validate();
  auto enc = model.encode(source);
  return detail::group_beam_search(model, enc, config, config.num_groups,
                                   config.diversity_penalty);
}

}  // namespace jgr

#endif  // JGR_DECODE_HPP_
