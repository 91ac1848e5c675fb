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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "jgr/decode.hpp"
#include "jgr/model.hpp"

using namespace jgr;

namespace {

ModelConfig toy_config(int vocab = 7) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.model_dim = 8;
  cfg.ff_dim = 16;
  cfg.num_heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.max_positions = 16;
  return cfg;
}

GeneratorModel<float> toy_generator(uint64_t seed = 1, int vocab = 7) {
  return GeneratorModel<float>(toy_config(vocab), Rng(seed).stream("init"));
}

// Exhaustive enumeration of every decodable sequence up to max_len tokens:
// EOS closes a sequence early; sequences that reach max_len stay unfinished.
// This mirrors the search space a beam with no pruning must explore.
struct Enumerated {
  std::vector<int> tokens;
  double logprob;
  double score;
  bool finished;
};

void enumerate_all(const GeneratorModel<float>& model, const Tensor<float>& enc,
                   std::vector<int>& prefix_tokens, double logprob, int max_len,
                   double alpha, std::vector<Enumerated>* out) {
  std::vector<int> prefix = {Vocab::kBos};
  prefix.insert(prefix.end(), prefix_tokens.begin(), prefix_tokens.end());
  auto logits = model.next_logits(prefix, enc);
  auto lp = jgr::detail::logprob_row(logits);
  for (size_t v = 0; v < lp.size(); ++v) {
    prefix_tokens.push_back(static_cast<int>(v));
    double next_lp = logprob + lp[v];
    bool finished = static_cast<int>(v) == Vocab::kEos;
    if (finished || static_cast<int>(prefix_tokens.size()) == max_len) {
      double score = next_lp / std::pow(static_cast<double>(prefix_tokens.size()),
                                        alpha);
      out->push_back({prefix_tokens, next_lp, score, finished});
    } else {
      enumerate_all(model, enc, prefix_tokens, next_lp, max_len, alpha, out);
    }
    prefix_tokens.pop_back();
  }
}

}  // namespace

TEST_CASE("config validation rejects bad fields") {
  DecodeConfig cfg;
  cfg.top_p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = DecodeConfig{};
  cfg.beam_size = 6;
  cfg.num_groups = 4;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = DecodeConfig{};
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}

TEST_CASE("greedy decoding terminates and reports consistent scores") {
  auto g = toy_generator();
  DecodeConfig cfg;
  cfg.max_len = 8;
  auto d = greedy_decode(g, {5, 6}, cfg);
  CHECK(!d.tokens.empty());
  CHECK(static_cast<int>(d.tokens.size()) <= cfg.max_len);
  if (d.finished) CHECK(d.tokens.back() == Vocab::kEos);
  double expect = d.logprob / std::pow(static_cast<double>(d.tokens.size()),
                                       cfg.length_penalty_exponent);
  CHECK(d.normalized_score == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("beam of width one reproduces greedy decoding") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    auto g = toy_generator(seed);
    DecodeConfig cfg;
    cfg.max_len = 6;
    cfg.beam_size = 1;
    auto greedy = greedy_decode(g, {5, 6}, cfg);
    auto beams = beam_search(g, {5, 6}, cfg);
    REQUIRE(beams.size() == 1);
    CHECK(beams[0].tokens == greedy.tokens);
    CHECK(beams[0].logprob == doctest::Approx(greedy.logprob).epsilon(1e-12));
  }
}

TEST_CASE("unpruned beam matches exhaustive enumeration") {
  const int vocab = 6;
  auto g = toy_generator(4, vocab);
  const std::vector<int> src = {5};
  DecodeConfig cfg;
  cfg.max_len = 3;
  cfg.beam_size = 216;  // >= vocab^max_len: no pruning can occur
  auto beams = beam_search(g, src, cfg);

  auto enc = g.encode(src);
  std::vector<Enumerated> all;
  std::vector<int> scratch;
  enumerate_all(g, enc, scratch, 0.0, cfg.max_len,
                cfg.length_penalty_exponent, &all);
  std::sort(all.begin(), all.end(),
            [](const Enumerated& a, const Enumerated& b) {
              return a.score > b.score;
            });

  REQUIRE(beams.size() <= all.size());
  // Compare the full ranked lists; random init makes exact ties negligible.
  for (size_t i = 0; i < beams.size(); ++i) {
    CHECK(beams[i].tokens == all[i].tokens);
    CHECK(beams[i].logprob == doctest::Approx(all[i].logprob).epsilon(1e-9));
    CHECK(beams[i].normalized_score ==
          doctest::Approx(all[i].score).epsilon(1e-9));
    CHECK(beams[i].finished == all[i].finished);
  }
}

TEST_CASE("beam output is sorted by normalized score") {
  auto g = toy_generator(7);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.beam_size = 8;
  auto beams = beam_search(g, {5, 6}, cfg);
  REQUIRE(!beams.empty());
  for (size_t i = 1; i < beams.size(); ++i)
    CHECK(beams[i - 1].normalized_score >= beams[i].normalized_score);
}

TEST_CASE("beam search is deterministic") {
  auto g = toy_generator(9);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.beam_size = 4;
  auto a = beam_search(g, {5, 6}, cfg);
  auto b = beam_search(g, {5, 6}, cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].logprob == b[i].logprob);
  }
}

TEST_CASE("diverse beam with a single group equals plain beam search") {
  auto g = toy_generator(11);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.beam_size = 4;
  cfg.num_groups = 1;
  cfg.diversity_penalty = 100.0;  // must have no effect with one group
  auto plain = beam_search(g, {5, 6}, cfg);
  auto diverse = diverse_beam_search(g, {5, 6}, cfg);
  REQUIRE(plain.size() == diverse.size());
  for (size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].tokens == diverse[i].tokens);
    CHECK(plain[i].logprob == diverse[i].logprob);
  }
}

TEST_CASE("strong diversity penalty forces distinct first tokens across groups") {
  auto g = toy_generator(13);
  DecodeConfig cfg;
  cfg.max_len = 5;
  cfg.beam_size = 2;
  cfg.num_groups = 2;
  cfg.diversity_penalty = 1000.0;
  auto out = diverse_beam_search(g, {5, 6}, cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[0].tokens[0] != out[1].tokens[0]);
}

TEST_CASE("zero diversity penalty reduces groups to independent beams") {
  auto g = toy_generator(15);
  DecodeConfig cfg;
  cfg.max_len = 5;
  cfg.beam_size = 4;
  cfg.num_groups = 2;
  cfg.diversity_penalty = 0.0;
  auto out = diverse_beam_search(g, {5, 6}, cfg);
  // Both groups run the same width-2 beam, so results pair up identically.
  DecodeConfig half = cfg;
  half.beam_size = 2;
  half.num_groups = 1;
  auto single = beam_search(g, {5, 6}, half);
  for (const auto& s : single) {
    int copies = 0;
    for (const auto& d : out)
      if (d.tokens == s.tokens) ++copies;
    CHECK(copies == 2);
  }
}

TEST_CASE("nucleus sampling is deterministic per (seed, candidate index)") {
  auto g = toy_generator(17);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.top_p = 0.9;
  RngStream rng = Rng(123).stream("sample");
  auto a = nucleus_sample(g, {5, 6}, 3, cfg, rng);
  auto b = nucleus_sample(g, {5, 6}, 5, cfg, rng);
  REQUIRE(a.size() == 3);
  REQUIRE(b.size() == 5);
  // Candidate i depends only on (seed, i), not on how many are drawn.
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].logprob == b[i].logprob);
  }
  RngStream other = Rng(124).stream("sample");
  auto c = nucleus_sample(g, {5, 6}, 3, cfg, other);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].tokens != c[i].tokens) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("vanishing top-p degenerates to greedy decoding") {
  auto g = toy_generator(19);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.top_p = 1e-9;
  auto greedy = greedy_decode(g, {5, 6}, cfg);
  auto samples = nucleus_sample(g, {5, 6}, 4, cfg, Rng(7).stream("sample"));
  for (const auto& s : samples) CHECK(s.tokens == greedy.tokens);
}

TEST_CASE("full top-p samples vary across candidates") {
  auto g = toy_generator(21);
  DecodeConfig cfg;
  cfg.max_len = 8;
  cfg.top_p = 1.0;
  auto samples = nucleus_sample(g, {5, 6}, 8, cfg, Rng(3).stream("sample"));
  std::set<std::vector<int>> uniq;
  for (const auto& s : samples) uniq.insert(s.tokens);
  CHECK(uniq.size() > 1);  // a near-uniform random-init model must diversify
}

TEST_CASE("sampled logprobs are true model logprobs") {
  auto g = toy_generator(23);
  DecodeConfig cfg;
  cfg.max_len = 6;
  cfg.top_p = 0.8;
  cfg.temperature = 0.7;
  auto samples = nucleus_sample(g, {5, 6}, 2, cfg, Rng(5).stream("sample"));
  auto enc = g.encode({5, 6});
  for (const auto& s : samples) {
    double lp = 0;
    std::vector<int> prefix = {Vocab::kBos};
    for (int tok : s.tokens) {
      auto row = jgr::detail::logprob_row(g.next_logits(prefix, enc));
      lp += row[tok];
      prefix.push_back(tok);
    }
    CHECK(s.logprob == doctest::Approx(lp).epsilon(1e-9));
  }
}
