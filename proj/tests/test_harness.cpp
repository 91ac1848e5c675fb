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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "jgr/checkpoint.hpp"
#include "jgr/evaluate.hpp"
#include "jgr/runconfig.hpp"

using namespace jgr;
namespace fs = std::filesystem;

namespace {

const char* kCli = JGR_CLI_PATH;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::path("/tmp") / ("jgr_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

int run_cli(const std::string& args, std::string* output = nullptr) {
  std::string cmd = std::string(kCli) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  int status = pclose(pipe);
  if (output) *output = out;
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

ModelConfig tiny_model(int vocab) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.model_dim = 8;
  cfg.ff_dim = 16;
  cfg.num_heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.max_positions = 32;
  return cfg;
}

JgrConfig tiny_train_config() {
  JgrConfig cfg;
  cfg.warmup_epochs = 1;
  cfg.ranker_steps_per_iter = 1;
  cfg.generator_steps_per_iter = 1;
  cfg.total_epochs = 0.8;
  cfg.candidates_ranker = 3;
  cfg.candidates_generator = 2;
  cfg.negatives = 2;
  cfg.batch_ranker = 2;
  cfg.batch_generator = 2;
  cfg.first_ranker_steps = 2;
  cfg.first_ranker_warmup_steps = 1;
  cfg.sample_decode.max_len = 8;
  cfg.eval_decode.max_len = 8;
  cfg.eval_decode.beam_size = 2;
  return cfg;
}

std::string tiny_config_json(const std::string& out_dir, int seed = 7) {
  nlohmann::ordered_json j;
  j["task"] = "noisy-copy-head";
  j["data_sizes"] = {10, 4, 4};
  j["data_seed"] = 3;
  j["output_dir"] = out_dir;
  j["seed"] = seed;
  j["model"] = {{"model_dim", 8},     {"ff_dim", 16},
                {"num_heads", 2},     {"encoder_layers", 1},
                {"decoder_layers", 1}, {"max_positions", 32}};
  j["train"] = {{"warmup_epochs", 1},
                {"ranker_steps_per_iter", 1},
                {"generator_steps_per_iter", 1},
                {"total_epochs", 0.8},
                {"candidates_ranker", 3},
                {"candidates_generator", 2},
                {"negatives", 2},
                {"batch_ranker", 2},
                {"batch_generator", 2},
                {"first_ranker_steps", 2},
                {"first_ranker_warmup_steps", 1}};
  j["sample_decode"] = {{"max_len", 8}};
  j["eval_decode"] = {{"max_len", 8}, {"beam_size", 2}};
  return j.dump(2);
}

std::vector<std::string> param_bytes(const ParamStore<float>& ps) {
  std::vector<std::string> out;
  for (const auto& [name, t] : ps)
    out.emplace_back(reinterpret_cast<const char*>(t.data->data()),
                     t.data->size() * sizeof(float));
  return out;
}

}  // namespace

TEST_CASE("checkpoint save -> load -> save is byte-identical") {
  TempDir dir("roundtrip");
  Dataset ds = gen_synthetic("noisy-copy-head", 3, {6, 2, 2});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  GeneratorModel<float> g(mc, Rng(5).stream("init"));
  fs::path p1 = dir.path / "a.ckpt", p2 = dir.path / "b.ckpt";
  save_model(p1.string(), "generator-model", mc, g.params());
  Checkpoint ck = Checkpoint::load(p1.string());
  ck.save(p2.string());
  CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("checkpoint restores parameters bit-exactly") {
  TempDir dir("bits");
  Dataset ds = gen_synthetic("noisy-copy-head", 3, {6, 2, 2});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  GeneratorModel<float> g(mc, Rng(5).stream("init"));
  fs::path p = dir.path / "m.ckpt";
  save_model(p.string(), "generator-model", mc, g.params());
  GeneratorModel<float> h(mc, Rng(99).stream("init"));  // different init
  CHECK(param_bytes(h.params()) != param_bytes(g.params()));
  Checkpoint ck = Checkpoint::load(p.string());
  unpack_params(ck, "m.", h.params());
  CHECK(param_bytes(h.params()) == param_bytes(g.params()));
}

TEST_CASE("corrupt magic, bad version, and truncation are format errors") {
  TempDir dir("corrupt");
  fs::path p = dir.path / "x.ckpt";
  write_file(p, "NOPE....garbage");
  CHECK_THROWS_AS(Checkpoint::load(p.string()), FormatError);

  Dataset ds = gen_synthetic("noisy-copy-head", 3, {6, 2, 2});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  GeneratorModel<float> g(mc, Rng(5).stream("init"));
  fs::path good = dir.path / "good.ckpt";
  save_model(good.string(), "generator-model", mc, g.params());
  std::string bytes = read_file(good);

  // bump the version field (little-endian u32 right after the magic)
  std::string bad_version = bytes;
  bad_version[4] = 9;
  write_file(p, bad_version);
  CHECK_THROWS_AS(Checkpoint::load(p.string()), FormatError);

  // truncate mid-tensor
  write_file(p, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(Checkpoint::load(p.string()), FormatError);
  CHECK_THROWS_AS(Checkpoint::load((dir.path / "absent.ckpt").string()),
                  FormatError);
}

TEST_CASE("train N iterations == train k, save, load, train N-k") {
  Dataset ds = gen_synthetic("noisy-copy-head", 13, {12, 4, 4});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  JgrConfig cfg = tiny_train_config();
  cfg.total_epochs = 4.0;  // 8 iterations of 1x2 examples

  JgrTrainer<float> full(&ds, mc, mc, cfg);
  full.warmup();
  full.first_ranker_iteration();
  for (int i = 0; i < 6; ++i) full.run_iteration();

  TempDir dir("resume");
  fs::path p = dir.path / "t.ckpt";
  JgrTrainer<float> part(&ds, mc, mc, cfg);
  part.warmup();
  part.first_ranker_iteration();
  for (int i = 0; i < 3; ++i) part.run_iteration();
  save_trainer(p.string(), part);

  JgrTrainer<float> resumed(&ds, mc, mc, cfg);
  load_trainer(p.string(), resumed);
  CHECK(resumed.iteration() == 3);
  CHECK(resumed.warmup_done());
  for (int i = 0; i < 3; ++i) resumed.run_iteration();

  CHECK(param_bytes(resumed.generator().params()) ==
        param_bytes(full.generator().params()));
  CHECK(param_bytes(resumed.ranker().params()) ==
        param_bytes(full.ranker().params()));
}

TEST_CASE("run config rejects unknown keys and missing data source") {
  auto doc = nlohmann::ordered_json::parse(tiny_config_json("/tmp/x"));
  CHECK_NOTHROW(parse_run_config(doc));
  doc["bogus_key"] = 1;
  CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
  doc.erase("bogus_key");
  doc["train"]["bogus"] = 2;
  CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
  doc["train"].erase("bogus");
  doc["data"] = "/also/set";  // both task and data
  CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
  doc.erase("data");
  doc.erase("task");
  CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
}

TEST_CASE("run config defaults match the documented values") {
  nlohmann::ordered_json doc;
  doc["task"] = "field-summary";
  RunConfig rc = parse_run_config(doc);
  CHECK(rc.train.ranker_steps_per_iter == 500);
  CHECK(rc.train.generator_steps_per_iter == 500);
  CHECK(rc.train.candidates_ranker == 16);
  CHECK(rc.train.candidates_generator == 8);
  CHECK(rc.train.negatives == 2);
  CHECK(rc.train.eval_decode.beam_size == 16);
  CHECK(rc.train.sample_decode.temperature == 1.0);
  CHECK(rc.train.sample_decode.top_p == 1.0);
  CHECK(rc.train.eval_decode.length_penalty_exponent == 1.0);
  CHECK(rc.train.delta_weights == default_match_weights());
}

TEST_CASE("mode R with a constant ranker reduces to mode G") {
  Dataset ds = gen_synthetic("noisy-copy-head", 23, {6, 4, 4});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  GeneratorModel<float> g(mc, Rng(7).stream("init"));
  RankerModel<float> r(mc, Rng(8).stream("init"));
  // zero the head weights: every candidate scores exactly head bias
  auto& w = r.params().get("head.w");
  for (long i = 0; i < w.numel(); ++i) w.at(i) = 0.0f;
  DecodeConfig dec;
  dec.max_len = 8;
  dec.beam_size = 4;
  auto mode_g = evaluate(g, &r, ds.dev, dec, EvalMode::kG,
                         default_match_weights());
  auto mode_r = evaluate(g, &r, ds.dev, dec, EvalMode::kR,
                         default_match_weights());
  CHECK(mode_g.outputs == mode_r.outputs);
}

TEST_CASE("oracle reranking never scores below mode G") {
  Dataset ds = gen_synthetic("noisy-copy-head", 29, {6, 6, 4});
  ModelConfig mc = tiny_model(static_cast<int>(ds.vocab.size()));
  GeneratorModel<float> g(mc, Rng(9).stream("init"));
  DecodeConfig dec;
  dec.max_len = 8;
  dec.beam_size = 4;
  auto mode_g =
      evaluate(g, static_cast<RankerModel<float>*>(nullptr), ds.dev, dec,
               EvalMode::kG, default_match_weights());
  auto oracle =
      evaluate(g, static_cast<RankerModel<float>*>(nullptr), ds.dev, dec,
               EvalMode::kOracle, default_match_weights());
  for (size_t i = 0; i < mode_g.example_deltas.size(); ++i)
    CHECK(oracle.example_deltas[i] >= mode_g.example_deltas[i]);
}

TEST_CASE("cli: unknown flag exits 2 and names the flag") {
  std::string out;
  int rc = run_cli("train-jgr --no-such-flag", &out);
  CHECK(rc == 2);
  CHECK(out.find("--no-such-flag") != std::string::npos);
  CHECK(run_cli("definitely-not-a-command") == 2);
}

TEST_CASE("cli: gen-data writes three loadable splits") {
  TempDir dir("gendata");
  std::string out;
  int rc = run_cli("gen-data --task field-summary --seed 5 --train 8 --dev 3 "
                   "--test 3 --out " + dir.str(), &out);
  CHECK(rc == 0);
  Dataset ds = load_jsonl(dir.str());
  CHECK(ds.train.size() == 8);
  CHECK(ds.dev.size() == 3);
  CHECK(ds.test.size() == 3);
}

TEST_CASE("cli: train-jgr twice yields bit-identical logs; diagnose exports "
          "a matching csv; evaluate runs all modes") {
  TempDir dir_a("runa"), dir_b("runb");
  write_file(dir_a.path / "config.json.in", tiny_config_json(dir_a.str()));
  write_file(dir_b.path / "config.json.in", tiny_config_json(dir_b.str()));
  std::string out;
  REQUIRE(run_cli("train-jgr --config " +
                  (dir_a.path / "config.json.in").string(), &out) == 0);
  REQUIRE(run_cli("train-jgr --config " +
                  (dir_b.path / "config.json.in").string(), &out) == 0);
  std::string log_a = read_file(dir_a.path / "log.jsonl");
  std::string log_b = read_file(dir_b.path / "log.jsonl");
  CHECK(!log_a.empty());
  CHECK(log_a == log_b);

  // every expected artifact exists
  for (const char* f : {"config.json", "log.jsonl", "trainer.ckpt",
                        "generator.ckpt", "ranker.ckpt", "generator_g0.ckpt",
                        "ranker_d0.ckpt"})
    CHECK(fs::exists(dir_a.path / f));

  // diagnose: one row per generator-phase log line, values round-trip
  REQUIRE(run_cli("diagnose --run " + dir_a.str(), &out) == 0);
  std::ifstream csv(dir_a.path / "curves.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "iter,dev_delta,self_bleu,self_distinct2,wasserstein_rr_mr");
  int rows = 0;
  std::vector<double> csv_devs;
  for (std::string line; std::getline(csv, line);) {
    ++rows;
    auto comma = line.find(',');
    csv_devs.push_back(std::stod(line.substr(comma + 1)));
  }
  int gen_rows = 0;
  std::istringstream log_in(log_a);
  std::vector<double> log_devs;
  for (std::string line; std::getline(log_in, line);) {
    auto j = nlohmann::json::parse(line);
    if (j["phase"] == "generator") {
      ++gen_rows;
      log_devs.push_back(j["dev_delta"].get<double>());
    }
  }
  CHECK(rows == gen_rows);
  REQUIRE(csv_devs.size() == log_devs.size());
  for (size_t i = 0; i < csv_devs.size(); ++i)
    CHECK(csv_devs[i] == doctest::Approx(log_devs[i]).epsilon(1e-9));

  // evaluate in all three modes plus a sweep
  std::string cfg_path = (dir_a.path / "config.json.in").string();
  std::string ckpt = (dir_a.path / "trainer.ckpt").string();
  for (const char* mode : {"G", "R", "oracle"}) {
    REQUIRE(run_cli("evaluate --config " + cfg_path + " --checkpoint " + ckpt +
                    " --mode " + mode, &out) == 0);
    auto j = nlohmann::json::parse(out);
    CHECK(j.contains("mean_delta"));
  }
  REQUIRE(run_cli("evaluate --config " + cfg_path + " --checkpoint " + ckpt +
                  " --beam-sweep 1,2", &out) == 0);
  auto j = nlohmann::json::parse(out);
  REQUIRE(j["sweep"].size() == 2);
  CHECK(j["sweep"][0]["beam_size"] == 1);

  // rerank emits one line per example
  REQUIRE(run_cli("rerank --config " + cfg_path + " --checkpoint " + ckpt +
                  " --split dev", &out) == 0);
  int lines = 0;
  std::istringstream rr(out);
  for (std::string line; std::getline(rr, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("cli: diagnose on a missing run names the expected file") {
  std::string out;
  int rc = run_cli("diagnose --run /tmp/jgr_no_such_run_dir", &out);
  CHECK(rc == 1);
  CHECK(out.find("log.jsonl") != std::string::npos);
}

TEST_CASE("cli: grad-check passes and prints the max error") {
  std::string out;
  int rc = run_cli("grad-check", &out);
  CHECK(rc == 0);
  CHECK(out.find("max_rel_err=") != std::string::npos);
}

TEST_CASE("cli: warmup and baseline training produce logs and checkpoints") {
  TempDir dir("warm");
  write_file(dir.path / "c.json", tiny_config_json(dir.str()));
  std::string out;
  REQUIRE(run_cli("warmup --config " + (dir.path / "c.json").string(), &out) ==
          0);
  CHECK(fs::exists(dir.path / "generator_warmup.ckpt"));

  TempDir bdir("base");
  write_file(bdir.path / "c.json", tiny_config_json(bdir.str()));
  REQUIRE(run_cli("train-baseline --config " + (bdir.path / "c.json").string() +
                  " --method self-critic", &out) == 0);
  CHECK(fs::exists(bdir.path / "generator.ckpt"));
  std::string log = read_file(bdir.path / "log.jsonl");
  CHECK(log.find("\"method\":\"self-critic\"") != std::string::npos);
}
