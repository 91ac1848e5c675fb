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
// Comparison systems: self-critic, actor-critic, the two GAN variants, the
// data-augmentation variants, and joint-training ablation (frozen ranker).
// All reuse the engine's models, decoding, metrics, and step primitives —
// only the training objective differs.

#ifndef JGR_BASELINES_HPP_
#define JGR_BASELINES_HPP_

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "jgr/engine.hpp"

namespace jgr {

inline const std::vector<std::string>& baseline_variants() {
  static const std::vector<std::string> v = {
      "self-critic", "actor-critic", "gan-std", "gan-mod",
      "da-sep",      "da-mix",       "wo-joint"};
  return v;
}

struct BaselineConfig {
  std::string variant;           // one of baseline_variants()
  JgrConfig shared;              // knobs shared with the joint engine
  double critic_lr = 3e-4;       // actor-critic
  int disc_steps_per_iter = 0;   // GAN; 0 = shared.ranker_steps_per_iter
  bool gan_nll = true;           // keep the NLL term in the GAN generator loss

  void validate() const {
    bool ok = false;
    for (const auto& v : baseline_variants()) ok = ok || v == variant;
    if (!ok) throw ContractError("unknown baseline variant: " + variant);
    shared.validate();
  }
};

namespace detail {

inline int steps_total(const JgrConfig& cfg, size_t train_size) {
  double budget = cfg.total_epochs * static_cast<double>(train_size);
  return std::max(
      1, static_cast<int>(std::ceil(budget / cfg.batch_generator)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Self-critic: one sample per example, greedy output as the reward baseline.
// loss = -(delta(sample) - delta(greedy)) * logp(sample) + NLL.
// ---------------------------------------------------------------------------
template <typename S>
void self_critic_train(GeneratorModel<S>& generator, const Dataset& data,
                       const JgrConfig& cfg, TrainLog* log = nullptr) {
  cfg.validate();
  Optimizer<S> opt(OptConfig{OptKind::kAdam, cfg.lr_generator});
  ExampleCycler cycle(&data.train, cfg.seed, "self-critic-cycle");
  const int total = detail::steps_total(cfg, data.train.size());
  const int log_every = cfg.generator_steps_per_iter;
  double loss_sum = 0;
  for (int step = 0; step < total; ++step) {
    RngStream step_rng = Rng(cfg.seed).stream("self-critic-sample")
                             .fork(static_cast<uint64_t>(step));
    Tape<S> tape;
    TapeGuard<S> guard(tape);
    Tensor<S> loss;
    bool first = true;
    for (int i = 0; i < cfg.batch_generator; ++i) {
      const Example& ex = cycle.next();
      TokenSeq ref = strip_eos(ex.target);
      DecodedSequence sample, greedy;
      {
        Tape<S>* saved = Tape<S>::active();
        Tape<S>::active() = nullptr;  // decoding is not differentiated
        sample = nucleus_sample(generator, ex.source, 1, cfg.sample_decode,
                                step_rng.fork(static_cast<uint64_t>(i)))[0];
        greedy = greedy_decode(generator, ex.source, cfg.sample_decode);
        Tape<S>::active() = saved;
      }
      double adv =
          matching_score(strip_eos(sample.tokens), ref, cfg.delta_weights) -
          matching_score(strip_eos(greedy.tokens), ref, cfg.delta_weights);
      auto enc = generator.encode(ex.source);
      auto [lp, per_token] =
          generator.sequence_logprob_with_enc(enc, ex.target);
      Tensor<S> item =
          scale(scale(lp, S(-1) / static_cast<S>(ex.target.size())),
                static_cast<S>(cfg.nll_weight));
      if (sample.tokens != greedy.tokens && adv != 0.0) {
        auto slp = sampled_sequence_logprob(generator, enc, sample.tokens);
        item = add(item, scale(slp, static_cast<S>(-cfg.rl_weight * adv)));
      }
      loss = first ? item : add(loss, item);
      first = false;
    }
    auto mean = scale(loss, S(1) / static_cast<S>(cfg.batch_generator));
    double v = static_cast<double>(mean.item());
    if (!std::isfinite(v))
      throw TrainError("self-critic: non-finite loss at step " +
                       std::to_string(step));
    loss_sum += v;
    generator.params().zero_grad();
    tape.backward(mean);
    opt.step(generator.params());
    if (log && ((step + 1) % log_every == 0 || step + 1 == total)) {
      double dd = dev_delta(generator, data.dev, cfg.eval_decode,
                            cfg.delta_weights, cfg.eval_dev_cap);
      log->row(step / log_every, "generator", loss_sum / (step + 1), dd, 0.0,
               0.0, 0.0, cfg.seed);
    }
  }
}

// ---------------------------------------------------------------------------
// Actor-critic: the critic regresses delta with squared error; the generator
// uses the critic score as its only reward (mean baseline) plus NLL.
// ---------------------------------------------------------------------------
template <typename S>
double critic_regression_step(CriticModel<S>& critic, Optimizer<S>& opt,
                              const std::vector<CandidateSet>& sets) {
  if (sets.empty()) throw ContractError("critic step: empty batch");
  Tape<S> tape;
  TapeGuard<S> guard(tape);
  Tensor<S> total;
  bool first = true;
  long n = 0;
  for (const auto& set : sets) {
    for (const auto& cand : set.candidates) {
      auto d = add_scalar(critic.score(set.source, cand.tokens),
                          static_cast<S>(-cand.delta));
      auto sq = mul(d, d);
      total = first ? sq : add(total, sq);
      first = false;
      ++n;
    }
  }
  auto loss = scale(total, S(1) / static_cast<S>(n));
  double v = static_cast<double>(loss.item());
  if (!std::isfinite(v)) throw TrainError("critic step: non-finite loss");
  critic.params().zero_grad();
  tape.backward(loss);
  opt.step(critic.params());
  return v;
}

template <typename S>
void actor_critic_train(GeneratorModel<S>& generator, CriticModel<S>& critic,
                        const Dataset& data, const BaselineConfig& bcfg,
                        TrainLog* log = nullptr) {
  bcfg.validate();
  const JgrConfig& cfg = bcfg.shared;
  Optimizer<S> gen_opt(OptConfig{OptKind::kAdam, cfg.lr_generator});
  Optimizer<S> critic_opt(OptConfig{OptKind::kAdam, bcfg.critic_lr});
  ExampleCycler critic_cycle(&data.train, cfg.seed, "critic-cycle");
  ExampleCycler gen_cycle(&data.train, cfg.seed, "ac-gen-cycle");

  double budget = cfg.total_epochs * static_cast<double>(data.train.size());
  double per_iter = static_cast<double>(cfg.generator_steps_per_iter) *
                    cfg.batch_generator;
  int iters = std::max(1, static_cast<int>(std::ceil(budget / per_iter)));
  long step_counter = 0;

  auto sample_sets = [&](ExampleCycler& cycle, int num_cand,
                         const char* stream) {
    RngStream rng = Rng(cfg.seed).stream(stream)
                        .fork(static_cast<uint64_t>(step_counter++));
    std::vector<CandidateSet> sets;
    for (int i = 0; i < cfg.batch_generator; ++i)
      sets.push_back(build_candidate_set<S>(
          generator, nullptr, cycle.next(), num_cand, cfg.sample_decode,
          rng.fork(static_cast<uint64_t>(i)), cfg.delta_weights));
    return sets;
  };

  for (int iter = 0; iter < iters; ++iter) {
    double critic_loss_sum = 0;
    for (int a = 0; a < cfg.ranker_steps_per_iter; ++a) {
      auto sets =
          sample_sets(critic_cycle, cfg.candidates_ranker, "critic-cand");
      critic_loss_sum += critic_regression_step(critic, critic_opt, sets);
    }
    double gen_loss_sum = 0;
    for (int b = 0; b < cfg.generator_steps_per_iter; ++b) {
      auto sets = sample_sets(gen_cycle, cfg.candidates_generator, "ac-cand");
      for (auto& set : sets) {
        for (auto& cand : set.candidates)
          cand.score = critic.score_value(set.source, cand.tokens);
        compute_rewards(set, RewardMode::kOnlyRr);  // critic score as reward
      }
      gen_loss_sum += generator_step(generator, gen_opt, sets, cfg).total;
    }
    if (log) {
      double dd = dev_delta(generator, data.dev, cfg.eval_decode,
                            cfg.delta_weights, cfg.eval_dev_cap);
      log->row(iter, "critic", critic_loss_sum / cfg.ranker_steps_per_iter,
               dd, 0.0, 0.0, 0.0, cfg.seed);
      log->row(iter, "generator",
               gen_loss_sum / cfg.generator_steps_per_iter, dd, 0.0, 0.0, 0.0,
               cfg.seed);
    }
  }
}

// ---------------------------------------------------------------------------
// GAN: discriminator = ranker body read through a sigmoid. std trains it
// against the ground truth as real; mod uses the best sampled candidate.
// Generator reward is log p_D (strictly negative), mean baseline, plus NLL
// unless toggled off.
// ---------------------------------------------------------------------------

// log p_D for a raw discriminator logit: log sigmoid(s), strictly negative.
inline double gan_log_pd(double s) {
  return s >= 0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
}

// Binary logistic loss: -log sigmoid(s_real) - mean_j log(1 - sigmoid(s_fake_j)).
template <typename S>
double discriminator_step(RankerModel<S>& disc, Optimizer<S>& opt,
                          const std::vector<CandidateSet>& sets,
                          bool use_best_candidate_as_real) {
  if (sets.empty()) throw ContractError("discriminator step: empty batch");
  Tape<S> tape;
  TapeGuard<S> guard(tape);
  Tensor<S> total;
  bool first = true;
  long terms = 0;
  for (const auto& set : sets) {
    int best = 0;
    for (size_t i = 1; i < set.candidates.size(); ++i)
      if (set.candidates[i].delta > set.candidates[best].delta)
        best = static_cast<int>(i);
    const TokenSeq& real = use_best_candidate_as_real
                               ? set.candidates[best].tokens
                               : set.reference;
    auto real_term =
        softplus(scale(disc.score(set.source, real), S(-1)));
    total = first ? real_term : add(total, real_term);
    first = false;
    ++terms;
    for (size_t i = 0; i < set.candidates.size(); ++i) {
      if (use_best_candidate_as_real && static_cast<int>(i) == best) continue;
      auto fake_term = softplus(disc.score(set.source, set.candidates[i].tokens));
      total = add(total, fake_term);
      ++terms;
    }
  }
  auto loss = scale(total, S(1) / static_cast<S>(terms));
  double v = static_cast<double>(loss.item());
  if (!std::isfinite(v)) throw TrainError("discriminator: non-finite loss");
  disc.params().zero_grad();
  tape.backward(loss);
  opt.step(disc.params());
  return v;
}

template <typename S>
void gan_train(GeneratorModel<S>& generator, RankerModel<S>& disc,
               const Dataset& data, const BaselineConfig& bcfg,
               TrainLog* log = nullptr) {
  bcfg.validate();
  const bool mod = bcfg.variant == "gan-mod";
  if (!mod && bcfg.variant != "gan-std")
    throw ContractError("gan_train: variant must be gan-std or gan-mod");
  const JgrConfig& cfg = bcfg.shared;
  Optimizer<S> gen_opt(OptConfig{OptKind::kAdam, cfg.lr_generator});
  Optimizer<S> disc_opt(OptConfig{OptKind::kAdam, cfg.lr_ranker});
  ExampleCycler disc_cycle(&data.train, cfg.seed, "gan-disc-cycle");
  ExampleCycler gen_cycle(&data.train, cfg.seed, "gan-gen-cycle");
  const int disc_steps = bcfg.disc_steps_per_iter > 0
                             ? bcfg.disc_steps_per_iter
                             : cfg.ranker_steps_per_iter;

  double budget = cfg.total_epochs * static_cast<double>(data.train.size());
  double per_iter = static_cast<double>(cfg.generator_steps_per_iter) *
                    cfg.batch_generator;
  int iters = std::max(1, static_cast<int>(std::ceil(budget / per_iter)));
  long step_counter = 0;

  auto sample_sets = [&](ExampleCycler& cycle, const char* stream) {
    RngStream rng = Rng(cfg.seed).stream(stream)
                        .fork(static_cast<uint64_t>(step_counter++));
    std::vector<CandidateSet> sets;
    for (int i = 0; i < cfg.batch_generator; ++i)
      sets.push_back(build_candidate_set<S>(
          generator, nullptr, cycle.next(), cfg.candidates_generator,
          cfg.sample_decode, rng.fork(static_cast<uint64_t>(i)),
          cfg.delta_weights));
    return sets;
  };

  for (int iter = 0; iter < iters; ++iter) {
    double disc_loss_sum = 0;
    for (int a = 0; a < disc_steps; ++a) {
      auto sets = sample_sets(disc_cycle, "gan-disc-cand");
      disc_loss_sum += discriminator_step(disc, disc_opt, sets, mod);
    }
    double disc_loss = disc_loss_sum / disc_steps;
    if (disc_loss < 1e-3)
      std::cerr << "[warn] gan discriminator near-collapse, loss="
                << disc_loss << "\n";

    double gen_loss_sum = 0;
    for (int b = 0; b < cfg.generator_steps_per_iter; ++b) {
      auto sets = sample_sets(gen_cycle, "gan-gen-cand");
      JgrConfig gcfg = cfg;
      if (!bcfg.gan_nll) gcfg.nll_weight = 0.0;
      for (auto& set : sets) {
        // reward = log p_D = log sigmoid(s); strictly negative
        for (auto& cand : set.candidates)
          cand.reward =
              gan_log_pd(disc.score_value(set.source, cand.tokens));
        double sum = 0;
        for (const auto& c : set.candidates) sum += c.reward;
        set.baseline = sum / static_cast<double>(set.candidates.size());
        for (auto& c : set.candidates) c.advantage = c.reward - set.baseline;
      }
      gen_loss_sum += generator_step(generator, gen_opt, sets, gcfg).total;
    }
    if (log) {
      double dd = dev_delta(generator, data.dev, cfg.eval_decode,
                            cfg.delta_weights, cfg.eval_dev_cap);
      log->row(iter, "discriminator", disc_loss, dd, 0.0, 0.0, 0.0, cfg.seed);
      log->row(iter, "generator",
               gen_loss_sum / cfg.generator_steps_per_iter, dd, 0.0, 0.0, 0.0,
               cfg.seed);
    }
  }
}

// ---------------------------------------------------------------------------
// Data augmentation: decode one beam output per training input with the
// frozen warmed generator, then fine-tune with pure NLL.
//   sep: fine-tune on the synthetic set, then on the original data.
//   mix: fine-tune on the shuffled union.
// ---------------------------------------------------------------------------
template <typename S>
std::vector<Example> build_augmented_split(const GeneratorModel<S>& generator,
                                           const std::vector<Example>& train,
                                           const DecodeConfig& decode) {
  std::vector<Example> out;
  for (const auto& ex : train) {
    auto beams = beam_search(generator, ex.source, decode);
    TokenSeq target = beams.front().tokens;
    if (target.empty() || target.back() != Vocab::kEos)
      target.push_back(Vocab::kEos);  // NLL training requires terminated targets
    out.push_back({ex.source, target});
  }
  return out;
}

template <typename S>
void da_train(GeneratorModel<S>& generator, const Dataset& data,
              const BaselineConfig& bcfg, TrainLog* log = nullptr) {
  bcfg.validate();
  const bool mix = bcfg.variant == "da-mix";
  if (!mix && bcfg.variant != "da-sep")
    throw ContractError("da_train: variant must be da-sep or da-mix");
  const JgrConfig& cfg = bcfg.shared;
  auto augmented =
      build_augmented_split(generator, data.train, cfg.eval_decode);

  Optimizer<S> opt(OptConfig{OptKind::kAdam, cfg.lr_generator});
  int epochs = std::max(1, static_cast<int>(std::lround(cfg.total_epochs)));
  auto fine_tune = [&](const std::vector<Example>& split, int n_epochs,
                       const char* phase, int iter_base) {
    Dataset view;
    view.vocab = data.vocab;
    view.train = split;
    view.dev = data.dev;
    JgrConfig wcfg = cfg;
    wcfg.warmup_epochs = n_epochs;
    TrainLog* silent = nullptr;
    warmup_generator(generator, opt, view, wcfg, silent);
    if (log) {
      double dd = dev_delta(generator, data.dev, cfg.eval_decode,
                            cfg.delta_weights, cfg.eval_dev_cap);
      log->row(iter_base, phase, 0.0, dd, 0.0, 0.0, 0.0, cfg.seed);
    }
  };

  if (mix) {
    std::vector<Example> merged = data.train;
    merged.insert(merged.end(), augmented.begin(), augmented.end());
    fine_tune(merged, epochs, "generator", 0);
  } else {
    int first = std::max(1, epochs / 2);
    int second = std::max(1, epochs - first);
    fine_tune(augmented, first, "augmented", 0);
    fine_tune(data.train, second, "generator", 1);
  }
}

// ---------------------------------------------------------------------------
// w/o joint: NLL-train G fully, train D once on the frozen G's candidates,
// then run the RL phase with D permanently frozen, logging the same
// diagnostics as the joint loop.
// ---------------------------------------------------------------------------
template <typename S>
void jgr_without_joint_train(JgrTrainer<S>& trainer) {
  trainer.warmup();
  trainer.first_ranker_iteration();
  while (!trainer.done()) trainer.run_iteration(/*update_ranker=*/false);
}

}  // namespace jgr

#endif  // JGR_BASELINES_HPP_
