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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "jgr/data.hpp"
#include "jgr/metrics.hpp"

using namespace jgr;

namespace {
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/jgr_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

bool datasets_equal(const Dataset& a, const Dataset& b) {
  auto eq = [](const std::vector<Example>& x, const std::vector<Example>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].source != y[i].source || x[i].target != y[i].target) return false;
    return true;
  };
  return a.vocab.tokens() == b.vocab.tokens() && eq(a.train, b.train) &&
         eq(a.dev, b.dev) && eq(a.test, b.test);
}
}  // namespace

TEST_CASE("vocab round-trip and reserved ids") {
  Vocab v;
  CHECK(v.id("<pad>") == Vocab::kPad);
  CHECK(v.id("<bos>") == Vocab::kBos);
  CHECK(v.id("<eos>") == Vocab::kEos);
  CHECK(v.id("<sep>") == Vocab::kSep);
  CHECK(v.id("<unk>") == Vocab::kUnk);
  v.add("hello");
  v.add("world");
  std::string text = "hello world hello";
  CHECK(v.decode(v.encode_text(text)) == text);
  CHECK(v.id("missing") == Vocab::kUnk);
}

TEST_CASE("noisy-copy-head with zero distractor rate degenerates to copy") {
  SyntheticParams p;
  p.distractor_rate = 0.0;
  Dataset ds = gen_synthetic("noisy-copy-head", 3, {50, 10, 10}, p);
  for (const auto& ex : ds.train) {
    TokenSeq expected = ex.source;
    expected.push_back(Vocab::kEos);
    CHECK(ex.target == expected);
  }
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  for (const char* task : {"noisy-copy-head", "field-summary"}) {
    Dataset a = gen_synthetic(task, 42, {30, 10, 10});
    Dataset b = gen_synthetic(task, 42, {30, 10, 10});
    Dataset c = gen_synthetic(task, 43, {30, 10, 10});
    CHECK(datasets_equal(a, b));
    CHECK_FALSE(datasets_equal(a, c));
  }
}

TEST_CASE("synthetic splits are disjoint by source") {
  Dataset ds = gen_synthetic("field-summary", 7, {100, 30, 30});
  std::set<std::vector<int>> sources;
  for (const auto* split : {&ds.train, &ds.dev, &ds.test})
    for (const auto& ex : *split) CHECK(sources.insert(ex.source).second);
}

TEST_CASE("reference target scores the maximum matching score against itself") {
  Dataset ds = gen_synthetic("noisy-copy-head", 11, {20, 5, 5});
  MatchWeights w = default_match_weights();
  for (const auto& ex : ds.train) {
    TokenSeq ref = strip_eos(ex.target);
    CHECK(matching_score(ref, ref, w) ==
          doctest::Approx(max_matching_score(w)).epsilon(1e-12));
  }
}

TEST_CASE("field-summary targets realize keys in canonical order") {
  Dataset ds = gen_synthetic("field-summary", 13, {50, 10, 10});
  for (const auto& ex : ds.train) {
    TokenSeq t = strip_eos(ex.target);
    CHECK(t.size() >= 4);
    CHECK(t.size() % 2 == 0);
    int prev_key = -1;
    for (size_t i = 0; i < t.size(); i += 2) {
      const std::string& tok = ds.vocab.token(t[i]);
      CHECK(tok[0] == 'k');
      int k = std::stoi(tok.substr(1));
      CHECK(k > prev_key);
      prev_key = k;
      CHECK(ds.vocab.token(t[i + 1])[0] == 'v');
    }
  }
}

TEST_CASE("unknown task name raises configuration error") {
  CHECK_THROWS_AS(gen_synthetic("bogus-task", 1, {10, 5, 5}), DataError);
  CHECK_THROWS_AS(gen_synthetic("noisy-copy-head", 1, {0, 5, 5}), DataError);
}

TEST_CASE("jsonl: single valid line loads") {
  TempFile f("one.jsonl", R"({"src": "a b c", "tgt": "a b"})"
                          "\n");
  Dataset ds = load_jsonl(f.path);
  REQUIRE(ds.train.size() == 1);
  CHECK(ds.train[0].source.size() == 3);
  CHECK(ds.train[0].target.back() == Vocab::kEos);
}

TEST_CASE("jsonl: missing tgt names the line") {
  TempFile f("bad.jsonl", "{\"src\": \"a\", \"tgt\": \"b\"}\n{\"src\": \"only\"}\n");
  try {
    load_jsonl(f.path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("jsonl: malformed json names the line") {
  TempFile f("mal.jsonl", "{\"src\": \"a\", \"tgt\": \"b\"}\nnot json\n");
  try {
    load_jsonl(f.path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("jsonl: dev tokens outside train vocab map to UNK") {
  std::filesystem::create_directories("/tmp/jgr_test_dir");
  {
    std::ofstream train("/tmp/jgr_test_dir/train.jsonl");
    train << R"({"src": "a b", "tgt": "b a"})" << "\n";
    std::ofstream dev("/tmp/jgr_test_dir/dev.jsonl");
    dev << R"({"src": "a zzz", "tgt": "b"})" << "\n";
  }
  Dataset ds = load_jsonl("/tmp/jgr_test_dir");
  REQUIRE(ds.dev.size() == 1);
  CHECK(ds.dev[0].source[0] == ds.vocab.id("a"));
  CHECK(ds.dev[0].source[1] == Vocab::kUnk);
}

TEST_CASE("batch_iter covers each example exactly once per epoch") {
  Dataset ds = gen_synthetic("noisy-copy-head", 19, {23, 5, 5});
  auto batches = batch_iter(ds.train, 4, 99);
  std::multiset<std::vector<int>> seen;
  int count = 0;
  for (const auto& b : batches)
    for (const auto& ex : b.items) {
      seen.insert(ex.source);
      ++count;
    }
  CHECK(count == 23);
  for (const auto& ex : ds.train) CHECK(seen.count(ex.source) >= 1);

  // batch_size = dataset size -> single batch
  CHECK(batch_iter(ds.train, 23, 1).size() == 1);
  CHECK_THROWS_AS(batch_iter(ds.train, 0, 1), DataError);
}

TEST_CASE("equal shuffle seeds give identical order") {
  Dataset ds = gen_synthetic("noisy-copy-head", 19, {40, 5, 5});
  auto a = batch_iter(ds.train, 8, 7);
  auto b = batch_iter(ds.train, 8, 7);
  auto c = batch_iter(ds.train, 8, 8);
  REQUIRE(a.size() == b.size());
  bool same_ac = true;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].src_ids == b[i].src_ids);
    if (a[i].src_ids != c[i].src_ids) same_ac = false;
  }
  CHECK_FALSE(same_ac);
}

TEST_CASE("padded batches carry masks that match true lengths") {
  std::vector<Example> items = {{{5, 6, 7}, {5, Vocab::kEos}},
                                {{8}, {8, 9, 10, Vocab::kEos}}};
  Batch b = make_batch(items);
  CHECK(b.max_src == 3);
  CHECK(b.max_tgt == 4);
  CHECK(b.src_ids[0 * 3 + 2] == 7);
  CHECK(b.src_ids[1 * 3 + 1] == Vocab::kPad);
  CHECK(b.src_mask[1 * 3 + 0] == 1.f);
  CHECK(b.src_mask[1 * 3 + 1] == 0.f);
  CHECK(b.tgt_mask[0 * 4 + 2] == 0.f);
}
