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
// Command-line harness: data generation, warm-up, joint training, baseline
// training, evaluation, reranking, diagnostics export, and gradient checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jgr/baselines.hpp"
#include "jgr/checkpoint.hpp"
#include "jgr/evaluate.hpp"
#include "jgr/gradcheck.hpp"
#include "jgr/runconfig.hpp"

namespace fs = std::filesystem;
using namespace jgr;

namespace {

struct Loaded {
  RunConfig rc;
  Dataset data;
  ModelConfig gen_model;
  ModelConfig rank_model;
};

Loaded load_all(const std::string& config_path, uint64_t seed_override,
                const std::string& out_override) {
  Loaded l;
  l.rc = load_run_config(config_path);
  if (seed_override) l.rc.train.seed = seed_override;
  if (!out_override.empty()) l.rc.output_dir = out_override;
  l.rc.baseline.shared = l.rc.train;
  l.data = load_config_dataset(l.rc);
  l.gen_model = l.rc.model;
  l.rank_model = l.rc.ranker_model;
  if (l.gen_model.vocab_size == 0)
    l.gen_model.vocab_size = static_cast<int>(l.data.vocab.size());
  if (l.rank_model.vocab_size == 0)
    l.rank_model.vocab_size = static_cast<int>(l.data.vocab.size());
  return l;
}

void snapshot_config(const RunConfig& rc) {
  fs::create_directories(rc.output_dir);
  std::ofstream out(fs::path(rc.output_dir) / "config.json");
  out << rc.raw.dump(2) << "\n";
}

std::ofstream open_log(const RunConfig& rc) {
  fs::create_directories(rc.output_dir);
  std::ofstream out(fs::path(rc.output_dir) / "log.jsonl");
  if (!out) throw TrainError("cannot open log file in " + rc.output_dir);
  return out;
}

const std::vector<Example>& pick_split(const Dataset& data,
                                       const std::string& split) {
  if (split == "dev") return data.dev;
  if (split == "test") return data.test;
  if (split == "train") return data.train;
  throw ContractError("unknown split: " + split);
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------
int cmd_gen_data(const std::string& task, uint64_t seed, int train, int dev,
                 int test, const std::string& out_dir) {
  Dataset ds = gen_synthetic(task, seed, {train, dev, test});
  fs::create_directories(out_dir);
  auto dump = [&](const std::vector<Example>& split, const char* name) {
    std::ofstream out(fs::path(out_dir) / name);
    for (const auto& ex : split) {
      nlohmann::ordered_json j;
      j["src"] = ds.vocab.decode(ex.source);
      j["tgt"] = ds.vocab.decode(ex.target);
      out << j.dump() << "\n";
    }
  };
  dump(ds.train, "train.jsonl");
  dump(ds.dev, "dev.jsonl");
  dump(ds.test, "test.jsonl");
  std::cout << "wrote " << ds.train.size() << "/" << ds.dev.size() << "/"
            << ds.test.size() << " examples to " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// warmup
// ---------------------------------------------------------------------------
int cmd_warmup(const std::string& config, uint64_t seed,
               const std::string& out) {
  Loaded l = load_all(config, seed, out);
  snapshot_config(l.rc);
  auto log_stream = open_log(l.rc);
  TrainLog log(&log_stream, "warmup");
  GeneratorModel<float> g(l.gen_model,
                          Rng(l.rc.train.seed).stream("init-generator"));
  Optimizer<float> opt(OptConfig{OptKind::kAdam, l.rc.train.lr_generator});
  warmup_generator(g, opt, l.data, l.rc.train, &log);
  save_model(fs::path(l.rc.output_dir) / "generator_warmup.ckpt",
             "generator-model", l.gen_model, g.params());
  double dd = dev_delta(g, l.data.dev, l.rc.train.eval_decode,
                        l.rc.train.delta_weights, l.rc.train.eval_dev_cap);
  std::cout << "warmup done, dev_delta=" << dd << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-jgr
// ---------------------------------------------------------------------------
int cmd_train_jgr(const std::string& config, uint64_t seed,
                  const std::string& out, const std::string& resume,
                  int stop_after) {
  Loaded l = load_all(config, seed, out);
  snapshot_config(l.rc);
  auto log_stream = open_log(l.rc);
  TrainLog log(&log_stream, "jgr");
  JgrTrainer<float> trainer(&l.data, l.gen_model, l.rank_model, l.rc.train,
                            &log);
  if (!resume.empty()) load_trainer(resume, trainer);
  if (!trainer.warmup_done()) {
    trainer.warmup();
    save_model(fs::path(l.rc.output_dir) / "generator_g0.ckpt",
               "generator-model", l.gen_model, trainer.generator().params());
  }
  if (!trainer.first_ranker_done()) {
    trainer.first_ranker_iteration();
    save_model(fs::path(l.rc.output_dir) / "ranker_d0.ckpt", "ranker-model",
               l.rank_model, trainer.ranker().params());
  }
  int ran = 0;
  while (!trainer.done() && (stop_after <= 0 || ran < stop_after)) {
    trainer.run_iteration();
    ++ran;
  }
  save_trainer(fs::path(l.rc.output_dir) / "trainer.ckpt", trainer);
  save_model(fs::path(l.rc.output_dir) / "generator.ckpt", "generator-model",
             l.gen_model, trainer.generator().params());
  save_model(fs::path(l.rc.output_dir) / "ranker.ckpt", "ranker-model",
             l.rank_model, trainer.ranker().params());
  double dd = dev_delta(trainer.generator(), l.data.dev, l.rc.train.eval_decode,
                        l.rc.train.delta_weights, l.rc.train.eval_dev_cap);
  std::cout << "train-jgr done after " << trainer.iteration()
            << " iterations, dev_delta=" << dd << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-baseline
// ---------------------------------------------------------------------------
int cmd_train_baseline(const std::string& config, uint64_t seed,
                       const std::string& out, const std::string& method) {
  Loaded l = load_all(config, seed, out);
  if (!method.empty()) l.rc.baseline.variant = method;
  l.rc.baseline.validate();
  snapshot_config(l.rc);
  auto log_stream = open_log(l.rc);
  TrainLog log(&log_stream, l.rc.baseline.variant);
  const JgrConfig& tc = l.rc.train;
  const std::string& variant = l.rc.baseline.variant;

  if (variant == "wo-joint") {
    JgrTrainer<float> trainer(&l.data, l.gen_model, l.rank_model, tc, &log);
    jgr_without_joint_train(trainer);
    save_model(fs::path(l.rc.output_dir) / "generator.ckpt",
               "generator-model", l.gen_model, trainer.generator().params());
    double dd = dev_delta(trainer.generator(), l.data.dev, tc.eval_decode,
                          tc.delta_weights, tc.eval_dev_cap);
    std::cout << variant << " done, dev_delta=" << dd << "\n";
    return 0;
  }

  GeneratorModel<float> g(l.gen_model, Rng(tc.seed).stream("init-generator"));
  {
    Optimizer<float> warm_opt(OptConfig{OptKind::kAdam, tc.lr_generator});
    warmup_generator(g, warm_opt, l.data, tc, &log);  // all methods start warm
  }
  if (variant == "self-critic") {
    self_critic_train(g, l.data, tc, &log);
  } else if (variant == "actor-critic") {
    CriticModel<float> critic(l.rank_model, Rng(tc.seed).stream("init-critic"));
    actor_critic_train(g, critic, l.data, l.rc.baseline, &log);
  } else if (variant == "gan-std" || variant == "gan-mod") {
    RankerModel<float> disc(l.rank_model, Rng(tc.seed).stream("init-disc"));
    gan_train(g, disc, l.data, l.rc.baseline, &log);
  } else if (variant == "da-sep" || variant == "da-mix") {
    da_train(g, l.data, l.rc.baseline, &log);
  }
  save_model(fs::path(l.rc.output_dir) / "generator.ckpt", "generator-model",
             l.gen_model, g.params());
  double dd = dev_delta(g, l.data.dev, tc.eval_decode, tc.delta_weights,
                        tc.eval_dev_cap);
  std::cout << variant << " done, dev_delta=" << dd << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / rerank
// ---------------------------------------------------------------------------
struct Restored {
  std::unique_ptr<GeneratorModel<float>> generator;
  std::unique_ptr<RankerModel<float>> ranker;  // null for generator-only ckpt
};

Restored restore_models(const std::string& ckpt_path, const Loaded& l) {
  Checkpoint ck = Checkpoint::load(ckpt_path);
  Restored r;
  std::string kind = ck.meta.value("kind", "");
  if (kind == "jgr-trainer") {
    r.generator = std::make_unique<GeneratorModel<float>>(
        l.gen_model, Rng(l.rc.train.seed).stream("init-generator"));
    r.ranker = std::make_unique<RankerModel<float>>(
        l.rank_model, Rng(l.rc.train.seed).stream("init-ranker"));
    unpack_params(ck, "g.", r.generator->params());
    unpack_params(ck, "d.", r.ranker->params());
  } else if (kind == "generator-model") {
    ModelConfig cfg = model_config_from_meta(ck.meta);
    r.generator = std::make_unique<GeneratorModel<float>>(
        cfg, Rng(1).stream("init-generator"));
    unpack_params(ck, "m.", r.generator->params());
  } else {
    throw FormatError("checkpoint kind \"" + kind +
                      "\" is not evaluable: " + ckpt_path);
  }
  return r;
}

int cmd_evaluate(const std::string& config, const std::string& ckpt,
                 const std::string& mode_name, const std::string& split,
                 const std::string& beam_sweep_list, int cap) {
  Loaded l = load_all(config, 0, "");
  Restored r = restore_models(ckpt, l);
  const auto& examples = pick_split(l.data, split);
  EvalMode mode = parse_eval_mode(mode_name);
  nlohmann::ordered_json out;
  out["mode"] = mode_name;
  out["split"] = split;
  if (!beam_sweep_list.empty()) {
    std::vector<int> sizes;
    std::stringstream ss(beam_sweep_list);
    for (std::string tok; std::getline(ss, tok, ',');)
      sizes.push_back(std::stoi(tok));
    auto sweep = beam_sweep(*r.generator, r.ranker.get(), examples,
                            l.rc.train.eval_decode, sizes,
                            l.rc.train.delta_weights, cap);
    out["sweep"] = nlohmann::ordered_json::array();
    for (const auto& p : sweep) {
      nlohmann::ordered_json row;
      row["beam_size"] = p.beam_size;
      row["dev_delta_g"] = p.mean_delta_g;
      if (r.ranker) row["dev_delta_r"] = p.mean_delta_r;
      out["sweep"].push_back(row);
    }
  } else {
    auto report = evaluate(*r.generator, r.ranker.get(), examples,
                           l.rc.train.eval_decode, mode,
                           l.rc.train.delta_weights, cap);
    out["mean_delta"] = report.mean_delta;
    out["examples"] = report.example_deltas.size();
  }
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_rerank(const std::string& config, const std::string& ckpt,
               const std::string& split, const std::string& out_path,
               int cap) {
  Loaded l = load_all(config, 0, "");
  Restored r = restore_models(ckpt, l);
  if (!r.ranker) throw ContractError("rerank requires a trainer checkpoint");
  const auto& examples = pick_split(l.data, split);
  auto report = evaluate(*r.generator, r.ranker.get(), examples,
                         l.rc.train.eval_decode, EvalMode::kR,
                         l.rc.train.delta_weights, cap);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw TrainError("cannot open output file: " + out_path);
    out = &file;
  }
  for (size_t i = 0; i < report.outputs.size(); ++i) {
    nlohmann::ordered_json j;
    j["src"] = l.data.vocab.decode(examples[i].source);
    j["output"] = l.data.vocab.decode(report.outputs[i]);
    j["delta"] = report.example_deltas[i];
    (*out) << j.dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------
int cmd_diagnose(const std::string& run_dir, const std::string& out_path) {
  fs::path log_path = fs::path(run_dir) / "log.jsonl";
  std::ifstream in(log_path);
  if (!in)
    throw DataError("diagnose: missing log file " + log_path.string());
  fs::path csv_path =
      out_path.empty() ? fs::path(run_dir) / "curves.csv" : fs::path(out_path);
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("diagnose: cannot write " + csv_path.string());
  csv.precision(17);  // values must round-trip exactly
  csv << "iter,dev_delta,self_bleu,self_distinct2,wasserstein_rr_mr\n";
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.value("phase", "") != "generator") continue;
    csv << j["iter"].get<long>() << "," << j["dev_delta"].get<double>() << ","
        << j["self_bleu"].get<double>() << ","
        << j["self_distinct2"].get<double>() << ","
        << j["wasserstein_rr_mr"].get<double>() << "\n";
    ++rows;
  }
  std::cout << "wrote " << rows << " rows to " << csv_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// grad-check
// ---------------------------------------------------------------------------
int cmd_grad_check() {
  ModelConfig cfg;
  cfg.vocab_size = 9;
  cfg.model_dim = 4;
  cfg.ff_dim = 8;
  cfg.num_heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.max_positions = 16;
  double max_err = 0;

  GeneratorModel<double> g(cfg, Rng(5).stream("init"));
  std::vector<int> src = {5, 6, 7};
  std::vector<int> tgt = {8, 5, 6, Vocab::kEos};
  double nll_err = grad_check(
      [&]() {
        auto [total, per_token] = g.sequence_logprob(src, tgt);
        return scale(total, -1.0 / static_cast<double>(tgt.size()));
      },
      g.params());
  std::cout << "nll_loss max_rel_err=" << nll_err << "\n";
  max_err = std::max(max_err, nll_err);

  RankerModel<double> d(cfg, Rng(6).stream("init"));
  CandidateSet set;
  set.source = src;
  set.reference = tgt;
  for (auto toks : std::vector<std::vector<int>>{
           {8, 5, Vocab::kEos}, {6, Vocab::kEos}, {7, 8, Vocab::kEos}}) {
    Candidate c;
    c.tokens = toks;
    set.candidates.push_back(c);
  }
  set.positive = 0;
  set.negatives = {1, 2};
  double con_err = grad_check(
      [&]() { return contrastive_loss(d, set); }, d.params());
  std::cout << "contrastive_loss max_rel_err=" << con_err << "\n";
  max_err = std::max(max_err, con_err);

  std::vector<double> adv = {0.6, -0.2, -0.4};
  double rl_err = grad_check(
      [&]() {
        auto enc = g.encode(src);
        Tensor<double> sum;
        for (size_t i = 0; i < set.candidates.size(); ++i) {
          auto t = scale(
              sampled_sequence_logprob(g, enc, set.candidates[i].tokens),
              -adv[i]);
          sum = i == 0 ? t : add(sum, t);
        }
        return scale(sum, 1.0 / static_cast<double>(set.candidates.size()));
      },
      g.params());
  std::cout << "policy_gradient_loss max_rel_err=" << rl_err << "\n";
  max_err = std::max(max_err, rl_err);

  std::cout << "max_rel_err=" << max_err << "\n";
  return max_err <= 1e-3 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint generator-ranker training harness"};
  app.require_subcommand(1);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gd_task = "noisy-copy-head", gd_out;
  uint64_t gd_seed = 1;
  int gd_train = 1000, gd_dev = 100, gd_test = 100;
  gen_data->add_option("--task", gd_task);
  gen_data->add_option("--seed", gd_seed);
  gen_data->add_option("--train", gd_train);
  gen_data->add_option("--dev", gd_dev);
  gen_data->add_option("--test", gd_test);
  gen_data->add_option("--out", gd_out);

  // shared train options
  std::string config, out_dir, resume, method;
  uint64_t seed = 0;
  int stop_after = 0;

  auto* warmup = app.add_subcommand("warmup", "teacher-forced warm-up only");
  warmup->add_option("--config", config);
  warmup->add_option("--seed", seed);
  warmup->add_option("--out", out_dir);

  auto* train_jgr = app.add_subcommand("train-jgr", "joint training");
  train_jgr->add_option("--config", config);
  train_jgr->add_option("--seed", seed);
  train_jgr->add_option("--out", out_dir);
  train_jgr->add_option("--resume", resume);
  train_jgr->add_option("--stop-after", stop_after,
                        "run at most this many iterations, then checkpoint");

  auto* train_baseline =
      app.add_subcommand("train-baseline", "train a comparison system");
  train_baseline->add_option("--config", config);
  train_baseline->add_option("--seed", seed);
  train_baseline->add_option("--out", out_dir);
  train_baseline->add_option("--method", method,
                             "overrides baseline.variant from the config");

  std::string ckpt, mode = "G", split = "dev", sweep_list, rerank_out;
  int cap = 0;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint");
  evaluate_cmd->add_option("--config", config);
  evaluate_cmd->add_option("--checkpoint", ckpt);
  evaluate_cmd->add_option("--mode", mode, "G, R, or oracle");
  evaluate_cmd->add_option("--split", split);
  evaluate_cmd->add_option("--beam-sweep", sweep_list,
                           "comma-separated beam sizes, e.g. 1,2,4,8,16");
  evaluate_cmd->add_option("--cap", cap, "limit the number of examples");

  auto* rerank = app.add_subcommand("rerank", "ranker-selected outputs");
  rerank->add_option("--config", config);
  rerank->add_option("--checkpoint", ckpt);
  rerank->add_option("--split", split);
  rerank->add_option("--out", rerank_out);
  rerank->add_option("--cap", cap);

  std::string run_dir, csv_out;
  auto* diagnose = app.add_subcommand("diagnose", "export training curves");
  diagnose->add_option("--run", run_dir);
  diagnose->add_option("--out", csv_out);

  app.add_subcommand("grad-check", "finite-difference gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // Validate required options here (after parse) so that an unknown flag is
  // reported as such rather than masked by a missing-option error.
  auto require_opt = [](const CLI::App* cmd, const std::string& flag,
                        const std::string& value) {
    if (cmd->parsed() && value.empty()) {
      std::cerr << "error: " << flag << " is required\n";
      std::exit(2);
    }
  };
  require_opt(gen_data, "--out", gd_out);
  require_opt(warmup, "--config", config);
  require_opt(train_jgr, "--config", config);
  require_opt(train_baseline, "--config", config);
  require_opt(evaluate_cmd, "--config", config);
  require_opt(evaluate_cmd, "--checkpoint", ckpt);
  require_opt(rerank, "--config", config);
  require_opt(rerank, "--checkpoint", ckpt);
  require_opt(diagnose, "--run", run_dir);

  try {
    if (gen_data->parsed())
      return cmd_gen_data(gd_task, gd_seed, gd_train, gd_dev, gd_test, gd_out);
    if (warmup->parsed()) return cmd_warmup(config, seed, out_dir);
    if (train_jgr->parsed())
      return cmd_train_jgr(config, seed, out_dir, resume, stop_after);
    if (train_baseline->parsed())
      return cmd_train_baseline(config, seed, out_dir, method);
    if (evaluate_cmd->parsed())
      return cmd_evaluate(config, ckpt, mode, split, sweep_list, cap);
    if (rerank->parsed())
      return cmd_rerank(config, ckpt, split, rerank_out, cap);
    if (diagnose->parsed()) return cmd_diagnose(run_dir, csv_out);
    return cmd_grad_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
