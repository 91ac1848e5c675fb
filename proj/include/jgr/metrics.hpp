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
// Text-overlap, diversity, and distribution metrics over token id sequences.
// All functions are pure. Sequences are content tokens only (no BOS/EOS).

#ifndef JGR_METRICS_HPP_
#define JGR_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jgr/tensor.hpp"
#include "jgr/vocab.hpp"

namespace jgr {

using TokenSeq = std::vector<int>;

inline TokenSeq strip_eos(const TokenSeq& seq) {
  TokenSeq out;
  for (int t : seq)
    if (t != Vocab::kEos && t != Vocab::kBos && t != Vocab::kPad)
      out.push_back(t);
  return out;
}

namespace detail {

inline std::map<std::vector<int>, int> ngram_counts(const TokenSeq& seq, int n) {
  std::map<std::vector<int>, int> counts;
  for (int i = 0; i + n <= static_cast<int>(seq.size()); ++i)
    ++counts[std::vector<int>(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

inline int lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double f1(double overlap, double cand_total, double ref_total) {
  if (cand_total <= 0 || ref_total <= 0 || overlap <= 0) return 0.0;
  double p = overlap / cand_total, r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

}  // namespace detail

// BLEU with modified n-gram precision, brevity penalty, and add-one smoothing
// applied only to zero-count precisions. Orders above the candidate length
// are dropped so short candidates still get a defined score.
inline double bleu(const TokenSeq& cand, const TokenSeq& ref, int max_n = 4,
                   bool smoothing = true) {
  if (max_n < 1) throw ContractError("bleu: max_n must be >= 1");
  if (cand.empty() || ref.empty()) return 0.0;
  int top = std::min<int>(max_n, static_cast<int>(cand.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= top; ++n) {
    auto cc = detail::ngram_counts(cand, n);
    auto rc = detail::ngram_counts(ref, n);
    long total = 0, matched = 0;
    for (const auto& [g, c] : cc) {
      total += c;
      auto it = rc.find(g);
      if (it != rc.end()) matched += std::min(c, it->second);
    }
    double p;
    if (matched > 0)
      p = static_cast<double>(matched) / total;
    else if (smoothing)
      p = 1.0 / (total + 1.0);
    else
      return 0.0;
    log_sum += std::log(p);
  }
  double precision = std::exp(log_sum / top);
  double c = static_cast<double>(cand.size());
  double r = static_cast<double>(ref.size());
  double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return precision * bp;
}

enum class RougeVariant { kR1, kR2, kRL };

inline double rouge(const TokenSeq& cand, const TokenSeq& ref,
                    RougeVariant variant) {
  if (cand.empty() || ref.empty()) return 0.0;
  if (variant == RougeVariant::kRL) {
    double lcs = detail::lcs_length(cand, ref);
    return detail::f1(lcs, cand.size(), ref.size());
  }
  int n = variant == RougeVariant::kR1 ? 1 : 2;
  auto cc = detail::ngram_counts(cand, n);
  auto rc = detail::ngram_counts(ref, n);
  long overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [g, c] : cc) {
    cand_total += c;
    auto it = rc.find(g);
    if (it != rc.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : rc) ref_total += c;
  return detail::f1(overlap, cand_total, ref_total);
}

// Named weighted combination of overlap metrics; the matching score Delta.
using MatchWeights = std::map<std::string, double>;

inline MatchWeights default_match_weights() {
  return {{"R1", 0.02}, {"R2", 0.05}, {"RL", 0.025}};
}

inline double single_metric(const std::string& name, const TokenSeq& cand,
                            const TokenSeq& ref) {
  if (name == "R1") return rouge(cand, ref, RougeVariant::kR1);
  if (name == "R2") return rouge(cand, ref, RougeVariant::kR2);
  if (name == "RL") return rouge(cand, ref, RougeVariant::kRL);
  if (name == "B1") return bleu(cand, ref, 1);
  if (name == "B2") return bleu(cand, ref, 2);
  if (name == "B3") return bleu(cand, ref, 3);
  if (name == "B4") return bleu(cand, ref, 4);
  throw ContractError("unknown matching metric: " + name);
}

inline double matching_score(const TokenSeq& cand, const TokenSeq& ref,
                             const MatchWeights& weights) {
  bool any_positive = false;
  for (const auto& [name, w] : weights) {
    if (w < 0) throw ContractError("matching_score: negative weight for " + name);
    if (w > 0) any_positive = true;
  }
  if (!any_positive)
    throw ContractError("matching_score: need at least one positive weight");
  double delta = 0.0;
  for (const auto& [name, w] : weights)
    if (w > 0) delta += w * single_metric(name, cand, ref);
  return delta;
}

inline double max_matching_score(const MatchWeights& weights) {
  double s = 0.0;
  for (const auto& [name, w] : weights) s += w;
  return s;
}

// Corpus-level distinct-n: |unique n-grams| / |total n-grams| pooled over all
// outputs. Returns 0 when no output is long enough (flagged via *undefined).
inline double distinct_n(const std::vector<TokenSeq>& corpus, int n,
                         bool* undefined = nullptr) {
  if (n < 1) throw ContractError("distinct_n: n must be >= 1");
  if (corpus.empty()) throw ContractError("distinct_n: empty corpus");
  std::map<std::vector<int>, int> pooled;
  long total = 0;
  for (const auto& seq : corpus) {
    for (int i = 0; i + n <= static_cast<int>(seq.size()); ++i) {
      ++pooled[std::vector<int>(seq.begin() + i, seq.begin() + i + n)];
      ++total;
    }
  }
  if (undefined) *undefined = total == 0;
  if (total == 0) return 0.0;
  return static_cast<double>(pooled.size()) / total;
}

// Mean pairwise BLEU over ordered candidate pairs (i != j).
inline double self_bleu(const std::vector<TokenSeq>& candidates, int max_n = 4) {
  size_t c = candidates.size();
  if (c < 2) throw ContractError("self_bleu: need at least 2 candidates");
  double sum = 0.0;
  for (size_t i = 0; i < c; ++i)
    for (size_t j = 0; j < c; ++j)
      if (i != j) sum += bleu(candidates[i], candidates[j], max_n);
  return sum / (static_cast<double>(c) * (c - 1));
}

inline double self_distinct(const std::vector<TokenSeq>& candidates, int n,
                            bool* undefined = nullptr) {
  if (candidates.size() < 2)
    throw ContractError("self_distinct: need at least 2 candidates");
  return distinct_n(candidates, n, undefined);
}

// Empirical 1-D Wasserstein-1 distance. Equal sample counts pair sorted
// values directly; a larger sample is first thinned to the smaller count by
// mid-quantile selection.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ContractError("wasserstein_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  auto thin = [](const std::vector<double>& big, size_t m) {
    std::vector<double> out(m);
    for (size_t i = 0; i < m; ++i)
      out[i] = big[static_cast<size_t>((i + 0.5) * big.size() / m)];
    return out;
  };
  if (a.size() > b.size()) a = thin(a, b.size());
  if (b.size() > a.size()) b = thin(b, a.size());
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum / a.size();
}

// Per-metric corpus averages, serializable to JSONL records.
struct ScoreReport {
  std::map<std::string, double> values;

  double get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ContractError("no metric " + name);
    return it->second;
  }
};

}  // namespace jgr

#endif  // JGR_METRICS_HPP_
