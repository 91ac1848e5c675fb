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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "jgr/metrics.hpp"
#include "jgr/rng.hpp"

using namespace jgr;

// ---------------------------------------------------------------------------
// Independent brute-force oracles. These deliberately avoid the hash-count
// machinery of the implementation: n-grams are compared position by position.
// ---------------------------------------------------------------------------
namespace oracle {

bool same_ngram(const TokenSeq& a, int i, const TokenSeq& b, int j, int n) {
  for (int k = 0; k < n; ++k)
    if (a[i + k] != b[j + k]) return false;
  return true;
}

int count_occurrences(const TokenSeq& g_src, int gi, const TokenSeq& in, int n) {
  int c = 0;
  for (int j = 0; j + n <= static_cast<int>(in.size()); ++j)
    if (same_ngram(g_src, gi, in, j, n)) ++c;
  return c;
}

// Clipped matches of order n: for each distinct candidate n-gram (first
// occurrence scan), min(count in cand, count in ref).
void clipped(const TokenSeq& cand, const TokenSeq& ref, int n, long* matched,
             long* total) {
  *matched = 0;
  *total = std::max<long>(0, static_cast<long>(cand.size()) - n + 1);
  for (int i = 0; i + n <= static_cast<int>(cand.size()); ++i) {
    bool first = true;
    for (int j = 0; j < i; ++j)
      if (same_ngram(cand, i, cand, j, n)) {
        first = false;
        break;
      }
    if (!first) continue;
    *matched += std::min(count_occurrences(cand, i, cand, n),
                         count_occurrences(cand, i, ref, n));
  }
}

double bleu(const TokenSeq& cand, const TokenSeq& ref, int max_n) {
  if (cand.empty() || ref.empty()) return 0.0;
  int top = std::min<int>(max_n, static_cast<int>(cand.size()));
  double log_sum = 0;
  for (int n = 1; n <= top; ++n) {
    long m, t;
    clipped(cand, ref, n, &m, &t);
    double p = m > 0 ? static_cast<double>(m) / t : 1.0 / (t + 1.0);
    log_sum += std::log(p);
  }
  double bp = cand.size() >= ref.size()
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref.size()) / cand.size());
  return std::exp(log_sum / top) * bp;
}

int lcs_memo(const TokenSeq& a, const TokenSeq& b, size_t i, size_t j,
             std::vector<int>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  int& m = memo[i * b.size() + j];
  if (m >= 0) return m;
  if (a[i] == b[j]) return m = 1 + lcs_memo(a, b, i + 1, j + 1, memo);
  return m = std::max(lcs_memo(a, b, i + 1, j, memo),
                      lcs_memo(a, b, i, j + 1, memo));
}

double rouge(const TokenSeq& cand, const TokenSeq& ref, RougeVariant v) {
  if (cand.empty() || ref.empty()) return 0.0;
  double overlap, ct, rt;
  if (v == RougeVariant::kRL) {
    std::vector<int> memo(cand.size() * ref.size(), -1);
    overlap = lcs_memo(cand, ref, 0, 0, memo);
    ct = cand.size();
    rt = ref.size();
  } else {
    int n = v == RougeVariant::kR1 ? 1 : 2;
    long m, t;
    clipped(cand, ref, n, &m, &t);
    overlap = m;
    ct = t;
    rt = std::max<long>(0, static_cast<long>(ref.size()) - n + 1);
  }
  if (overlap <= 0 || ct <= 0 || rt <= 0) return 0.0;
  double p = overlap / ct, r = overlap / rt;
  return 2 * p * r / (p + r);
}

double distinct_n(const std::vector<TokenSeq>& corpus, int n) {
  // Pool, then count uniques by pairwise comparison.
  std::vector<TokenSeq> pool;
  for (const auto& s : corpus)
    for (int i = 0; i + n <= static_cast<int>(s.size()); ++i)
      pool.emplace_back(s.begin() + i, s.begin() + i + n);
  if (pool.empty()) return 0.0;
  int unique = 0;
  for (size_t i = 0; i < pool.size(); ++i) {
    bool seen = false;
    for (size_t j = 0; j < i; ++j)
      if (pool[j] == pool[i]) {
        seen = true;
        break;
      }
    if (!seen) ++unique;
  }
  return static_cast<double>(unique) / pool.size();
}

// W1 via the area between empirical CDFs, integrated over the merged support.
double wasserstein(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts;
  pts.insert(pts.end(), a.begin(), a.end());
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const std::vector<double>& s, double x) {
    int c = 0;
    for (double v : s)
      if (v <= x) ++c;
    return static_cast<double>(c) / s.size();
  };
  double area = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    area += std::abs(cdf(a, pts[i]) - cdf(b, pts[i])) * (pts[i + 1] - pts[i]);
  return area;
}

}  // namespace oracle

namespace {
TokenSeq random_seq(RngStream& rng, int min_len, int max_len, int vocab) {
  TokenSeq s(min_len + rng.next_below(max_len - min_len + 1));
  for (auto& t : s) t = 10 + static_cast<int>(rng.next_below(vocab));
  return s;
}
}  // namespace

TEST_CASE("hand-computed anchors on 'the cat sat' vs 'the cat ran'") {
  TokenSeq cand = {1, 2, 3};  // the cat sat
  TokenSeq ref = {1, 2, 4};   // the cat ran
  CHECK(rouge(cand, ref, RougeVariant::kR1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(rouge(cand, ref, RougeVariant::kR2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rouge(cand, ref, RougeVariant::kRL) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(bleu(cand, ref, 1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  double delta = matching_score(cand, ref, default_match_weights());
  CHECK(delta == doctest::Approx(0.02 * 2 / 3 + 0.05 * 0.5 + 0.025 * 2 / 3)
                     .epsilon(1e-12));
  CHECK(delta == doctest::Approx(0.055).epsilon(1e-9));
}

TEST_CASE("identity and disjoint extremes") {
  RngStream rng = Rng(5).stream("data");
  for (int trial = 0; trial < 10; ++trial) {
    TokenSeq s = random_seq(rng, 3, 10, 20);
    CHECK(bleu(s, s) == doctest::Approx(1.0));
    CHECK(rouge(s, s, RougeVariant::kR1) == doctest::Approx(1.0));
    CHECK(rouge(s, s, RougeVariant::kR2) == doctest::Approx(1.0));
    CHECK(rouge(s, s, RougeVariant::kRL) == doctest::Approx(1.0));
    CHECK(matching_score(s, s, default_match_weights()) ==
          doctest::Approx(0.095));
    TokenSeq disjoint(s.size());
    for (size_t i = 0; i < s.size(); ++i) disjoint[i] = 1000 + static_cast<int>(i);
    CHECK(bleu(s, disjoint, 4, /*smoothing=*/false) == 0.0);
    CHECK(rouge(s, disjoint, RougeVariant::kR1) == 0.0);
    CHECK(rouge(s, disjoint, RougeVariant::kRL) == 0.0);
  }
}

TEST_CASE("empty candidate scores zero") {
  TokenSeq empty, ref = {1, 2, 3};
  CHECK(bleu(empty, ref) == 0.0);
  CHECK(rouge(empty, ref, RougeVariant::kR1) == 0.0);
  CHECK(rouge(ref, empty, RougeVariant::kRL) == 0.0);
}

TEST_CASE("oracle agreement on random pairs") {
  RngStream rng = Rng(17).stream("sampling");
  for (int trial = 0; trial < 50; ++trial) {
    TokenSeq a = random_seq(rng, 1, 12, 6);  // small vocab forces collisions
    TokenSeq b = random_seq(rng, 1, 12, 6);
    for (int n : {1, 2, 3, 4}) {
      CHECK(bleu(a, b, n) == doctest::Approx(oracle::bleu(a, b, n)).epsilon(1e-9));
    }
    for (auto v : {RougeVariant::kR1, RougeVariant::kR2, RougeVariant::kRL}) {
      CHECK(rouge(a, b, v) == doctest::Approx(oracle::rouge(a, b, v)).epsilon(1e-9));
    }
  }
}

TEST_CASE("distinct-n against brute force") {
  TokenSeq aba = {7, 8, 7};
  CHECK(distinct_n({aba}, 1) == doctest::Approx(2.0 / 3));
  TokenSeq rep(5, 9);
  CHECK(distinct_n({rep}, 1) == doctest::Approx(1.0 / 5));
  TokenSeq uniq = {1, 2, 3, 4};
  CHECK(distinct_n({uniq}, 2) == doctest::Approx(1.0));

  RngStream rng = Rng(23).stream("data");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TokenSeq> corpus;
    for (int i = 0; i < 4; ++i) corpus.push_back(random_seq(rng, 1, 8, 5));
    for (int n : {1, 2, 3})
      CHECK(distinct_n(corpus, n) ==
            doctest::Approx(oracle::distinct_n(corpus, n)).epsilon(1e-12));
  }
  bool undef = false;
  CHECK(distinct_n({TokenSeq{1}}, 3, &undef) == 0.0);
  CHECK(undef);
}

TEST_CASE("self-BLEU definitional cases and double-loop oracle") {
  TokenSeq s = {1, 2, 3, 4, 5};
  CHECK(self_bleu({s, s, s}) == doctest::Approx(1.0));
  // C = 2: average of both directed scores.
  TokenSeq t = {1, 2, 9, 9};
  double expect = (bleu(s, t) + bleu(t, s)) / 2.0;
  CHECK(self_bleu({s, t}) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(self_bleu({s}), ContractError);

  RngStream rng = Rng(31).stream("data");
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TokenSeq> cs;
    for (int i = 0; i < 3; ++i) cs.push_back(random_seq(rng, 2, 7, 5));
    double brute = 0;
    int pairs = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          brute += oracle::bleu(cs[i], cs[j], 4);
          ++pairs;
        }
    CHECK(self_bleu(cs) == doctest::Approx(brute / pairs).epsilon(1e-9));
  }
}

TEST_CASE("self-distinct matches distinct over the pooled set") {
  TokenSeq a = {1, 2, 3}, b = {3, 2, 1};
  CHECK(self_distinct({a, b}, 2) == doctest::Approx(distinct_n({a, b}, 2)));
}

TEST_CASE("wasserstein anchors, symmetry, translation") {
  CHECK(wasserstein_1d({0, 1}, {0, 1}) == 0.0);
  CHECK(wasserstein_1d({0, 1}, {1, 2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein_1d({}, {1.0}), ContractError);

  RngStream rng = Rng(41).stream("data");
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = rng.next_normal();
    for (auto& v : b) v = rng.next_normal() + 0.3;
    double w = wasserstein_1d(a, b);
    CHECK(w == doctest::Approx(wasserstein_1d(b, a)).epsilon(1e-12));
    CHECK(w == doctest::Approx(oracle::wasserstein(a, b)).epsilon(1e-9));
    std::vector<double> ac = a, bc = b;
    for (auto& v : ac) v += 2.5;
    for (auto& v : bc) v += 2.5;
    CHECK(wasserstein_1d(ac, bc) == doctest::Approx(w).epsilon(1e-9));
  }
}

TEST_CASE("matching score is the stated weighted combination") {
  RngStream rng = Rng(43).stream("data");
  MatchWeights w = {{"R1", 0.3}, {"B2", 0.1}, {"RL", 0.0}};
  for (int trial = 0; trial < 20; ++trial) {
    TokenSeq a = random_seq(rng, 2, 9, 6), b = random_seq(rng, 2, 9, 6);
    double expect = 0.3 * rouge(a, b, RougeVariant::kR1) + 0.1 * bleu(a, b, 2);
    CHECK(matching_score(a, b, w) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(matching_score({1}, {1}, MatchWeights{{"R1", 0.0}}),
                  ContractError);
  CHECK_THROWS_AS(matching_score({1}, {1}, MatchWeights{{"bogus", 1.0}}),
                  ContractError);
}
