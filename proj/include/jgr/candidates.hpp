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
// Candidate sets: sampled generator outputs with matching scores, ranker
// scores, rewards, and contrastive positive/negative selection.

#ifndef JGR_CANDIDATES_HPP_
#define JGR_CANDIDATES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "jgr/data.hpp"
#include "jgr/decode.hpp"
#include "jgr/metrics.hpp"
#include "jgr/model.hpp"

namespace jgr {

struct Candidate {
  std::vector<int> tokens;  // as decoded; EOS kept when the sample finished
  double logprob = 0.0;     // sum of per-token log-probs at sampling time
  double delta = 0.0;       // matching score against the reference
  double score = std::numeric_limits<double>::quiet_NaN();  // ranker s
  double reward = 0.0;
  double advantage = 0.0;
};

struct CandidateSet {
  TokenSeq source;
  TokenSeq reference;  // with trailing EOS, as stored in the dataset
  std::vector<Candidate> candidates;
  int positive = -1;            // index of y-hat+ (argmax delta)
  bool reference_positive = false;  // GT-positive ablation: use `reference`
  std::vector<int> negatives;
  double baseline = 0.0;
};

enum class PickStrategy { kBot, kTop, kRand, kTopBot, kGtPositive };
enum class RewardMode { kFull, kOnlyMr, kOnlyRr };

inline PickStrategy parse_pick_strategy(const std::string& s) {
  if (s == "bot") return PickStrategy::kBot;
  if (s == "top") return PickStrategy::kTop;
  if (s == "rand") return PickStrategy::kRand;
  if (s == "top-bot") return PickStrategy::kTopBot;
  if (s == "gt-positive") return PickStrategy::kGtPositive;
  throw ContractError("unknown picking strategy: " + s);
}

inline std::string pick_strategy_name(PickStrategy p) {
  switch (p) {
    case PickStrategy::kBot: return "bot";
    case PickStrategy::kTop: return "top";
    case PickStrategy::kRand: return "rand";
    case PickStrategy::kTopBot: return "top-bot";
    case PickStrategy::kGtPositive: return "gt-positive";
  }
  return "?";
}

inline RewardMode parse_reward_mode(const std::string& s) {
  if (s == "full") return RewardMode::kFull;
  if (s == "only-mr") return RewardMode::kOnlyMr;
  if (s == "only-rr") return RewardMode::kOnlyRr;
  throw ContractError("unknown reward mode: " + s);
}

inline std::string reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::kFull: return "full";
    case RewardMode::kOnlyMr: return "only-mr";
    case RewardMode::kOnlyRr: return "only-rr";
  }
  return "?";
}

// C i.i.d. nucleus samples from the frozen generator; delta for each; ranker
// score for each when a ranker is supplied. Duplicates are kept as sampled.
template <typename S>
CandidateSet build_candidate_set(const GeneratorModel<S>& generator,
                                 const RankerModel<S>* ranker,
                                 const Example& example, int num_candidates,
                                 const DecodeConfig& decode,
                                 const RngStream& rng,
                                 const MatchWeights& weights) {
  if (num_candidates < 2)
    throw ContractError("build_candidate_set: need at least 2 candidates");
  CandidateSet set;
  set.source = example.source;
  set.reference = example.target;
  TokenSeq ref = strip_eos(example.target);
  auto samples =
      nucleus_sample(generator, example.source, num_candidates, decode, rng);
  for (const auto& s : samples) {
    Candidate c;
    c.tokens = s.tokens;
    c.logprob = s.logprob;
    c.delta = matching_score(strip_eos(c.tokens), ref, weights);
    if (ranker) c.score = ranker->score_value(example.source, c.tokens);
    set.candidates.push_back(std::move(c));
  }
  return set;
}

// full: R = delta + s; only-mr: R = delta; only-rr: R = s.
// Baseline is the mean reward over the set; advantage = R - b.
inline void compute_rewards(CandidateSet& set, RewardMode mode) {
  if (set.candidates.empty())
    throw ContractError("compute_rewards: empty candidate set");
  for (auto& c : set.candidates) {
    bool need_s = mode != RewardMode::kOnlyMr;
    if (need_s && std::isnan(c.score))
      throw ContractError("compute_rewards: ranker score absent");
    switch (mode) {
      case RewardMode::kFull: c.reward = c.delta + c.score; break;
      case RewardMode::kOnlyMr: c.reward = c.delta; break;
      case RewardMode::kOnlyRr: c.reward = c.score; break;
    }
  }
  double sum = 0;
  for (const auto& c : set.candidates) sum += c.reward;
  set.baseline = sum / static_cast<double>(set.candidates.size());
  for (auto& c : set.candidates) c.advantage = c.reward - set.baseline;
}

// Positive = argmax delta (ties -> lowest index). Negatives by strategy:
//   bot      lowest-delta candidates (delta ascending, ties -> highest index)
//   top      highest-delta excluding the positive (ties -> lowest index)
//   rand     uniform without replacement excluding the positive
//   top-bot  ceil(n/2) from bot + rest from top
//   gt-positive  the reference replaces y-hat+; negatives as bot
inline void select_contrastive_pairs(CandidateSet& set, PickStrategy strategy,
                                     int num_negatives, RngStream* rng = nullptr) {
  const int c = static_cast<int>(set.candidates.size());
  if (num_negatives < 1 || num_negatives >= c)
    throw ContractError("select_contrastive_pairs: need 1 <= negatives < C");
  int pos = 0;
  for (int i = 1; i < c; ++i)
    if (set.candidates[i].delta > set.candidates[pos].delta) pos = i;
  set.positive = pos;
  set.reference_positive = strategy == PickStrategy::kGtPositive;
  set.negatives.clear();

  std::vector<int> pool;
  for (int i = 0; i < c; ++i)
    if (set.reference_positive || i != pos) pool.push_back(i);

  auto by_delta_asc = [&](int a, int b) {
    double da = set.candidates[a].delta, db = set.candidates[b].delta;
    return da != db ? da < db : a > b;  // ties: last indices first
  };
  auto by_delta_desc = [&](int a, int b) {
    double da = set.candidates[a].delta, db = set.candidates[b].delta;
    return da != db ? da > db : a < b;
  };

  switch (strategy) {
    case PickStrategy::kBot:
    case PickStrategy::kGtPositive: {
      std::sort(pool.begin(), pool.end(), by_delta_asc);
      set.negatives.assign(pool.begin(), pool.begin() + num_negatives);
      break;
    }
    case PickStrategy::kTop: {
      std::sort(pool.begin(), pool.end(), by_delta_desc);
      set.negatives.assign(pool.begin(), pool.begin() + num_negatives);
      break;
    }
    case PickStrategy::kRand: {
      if (!rng)
        throw ContractError("select_contrastive_pairs: rand needs an rng");
      RngStream local = *rng;
      for (int k = 0; k < num_negatives; ++k) {
        uint64_t j = local.next_below(pool.size() - k);
        std::swap(pool[k], pool[k + j]);
        set.negatives.push_back(pool[k]);
      }
      break;
    }
    case PickStrategy::kTopBot: {
      int n_bot = (num_negatives + 1) / 2;
      int n_top = num_negatives - n_bot;
      std::vector<int> bot = pool, top = pool;
      std::sort(bot.begin(), bot.end(), by_delta_asc);
      std::sort(top.begin(), top.end(), by_delta_desc);
      std::vector<bool> used(c, false);
      for (int i = 0; i < n_bot; ++i) {
        set.negatives.push_back(bot[i]);
        used[bot[i]] = true;
      }
      int taken = 0;
      for (int idx : top) {
        if (taken == n_top) break;
        if (used[idx]) continue;
        set.negatives.push_back(idx);
        used[idx] = true;
        ++taken;
      }
      break;
    }
  }
  if (static_cast<int>(set.negatives.size()) != num_negatives)
    throw ContractError("select_contrastive_pairs: negative set size mismatch");
}

}  // namespace jgr

#endif  // JGR_CANDIDATES_HPP_
