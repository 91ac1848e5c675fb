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
// Joint generator-ranker training: generator warm-up (NLL), contrastive
// ranker steps, policy-gradient generator steps with a mean-reward baseline,
// the extended first ranker iteration, and the alternating training loop with
// per-interval diagnostics.

#ifndef JGR_ENGINE_HPP_
#define JGR_ENGINE_HPP_

#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jgr/candidates.hpp"
#include "jgr/data.hpp"
#include "jgr/decode.hpp"
#include "jgr/metrics.hpp"
#include "jgr/model.hpp"
#include "jgr/optim.hpp"

namespace jgr {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JgrConfig {
  int warmup_epochs = 5;
  int ranker_steps_per_iter = 500;     // A
  int generator_steps_per_iter = 500;  // B
  double total_epochs = 4.0;           // generator example budget in epochs
  int candidates_ranker = 16;          // C when training the ranker
  int candidates_generator = 8;        // C when training the generator
  int negatives = 2;
  PickStrategy picking = PickStrategy::kBot;
  RewardMode reward_mode = RewardMode::kFull;
  MatchWeights delta_weights = default_match_weights();
  double lr_generator = 3e-4;
  double lr_ranker = 3e-4;
  int first_ranker_steps = 200;        // extended first ranker iteration
  int first_ranker_warmup_steps = 50;  // linear learning-rate warm-up
  int batch_generator = 8;
  int batch_ranker = 8;
  double nll_weight = 1.0;  // equal unit weights by default
  double rl_weight = 1.0;
  bool standardize_rewards = false;  // raw ranker logit used as s by default
  DecodeConfig sample_decode;        // temperature/top_p 1.0 by default
  DecodeConfig eval_decode;          // beam 16 by default
  int eval_dev_cap = 0;              // 0 = evaluate the whole dev split
  uint64_t seed = 1;

  JgrConfig() {
    sample_decode.beam_size = 1;
    eval_decode.beam_size = 16;
  }

  void validate() const {
    if (ranker_steps_per_iter < 1 || generator_steps_per_iter < 1)
      throw ContractError("JgrConfig: A and B must be >= 1");
    if (candidates_ranker < negatives + 1 ||
        candidates_generator < 2 || negatives < 1)
      throw ContractError("JgrConfig: need C >= negatives + 1 and C >= 2");
    if (total_epochs <= 0 || warmup_epochs < 0)
      throw ContractError("JgrConfig: bad epoch counts");
    if (batch_generator < 1 || batch_ranker < 1)
      throw ContractError("JgrConfig: batch sizes must be >= 1");
    sample_decode.validate();
    eval_decode.validate();
  }
};

// ---------------------------------------------------------------------------
// Logging: one JSON object per line, fixed key order, no timestamps.
// ---------------------------------------------------------------------------
class TrainLog {
 public:
  explicit TrainLog(std::ostream* out, std::string method = "jgr")
      : out_(out), method_(std::move(method)) {}

  void row(long iter, const std::string& phase, double loss, double dev_delta,
           double self_bleu, double self_distinct2, double wasserstein,
           uint64_t seed) {
    if (!out_) return;
    nlohmann::ordered_json j;
    j["iter"] = iter;
    j["phase"] = phase;
    j["loss"] = loss;
    j["dev_delta"] = dev_delta;
    j["self_bleu"] = self_bleu;
    j["self_distinct2"] = self_distinct2;
    j["wasserstein_rr_mr"] = wasserstein;
    j["seed"] = seed;
    if (!method_.empty()) j["method"] = method_;
    (*out_) << j.dump() << "\n";
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::string method_;
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

// Mean matching score of decoded outputs on (a prefix of) a split.
// beam_size 1 decodes greedily; otherwise the top beam is scored.
template <typename S>
double dev_delta(const GeneratorModel<S>& generator,
                 const std::vector<Example>& examples,
                 const DecodeConfig& decode, const MatchWeights& weights,
                 int cap = 0) {
  if (examples.empty()) return 0.0;
  size_t n = examples.size();
  if (cap > 0) n = std::min(n, static_cast<size_t>(cap));
  double sum = 0;
  for (size_t i = 0; i < n; ++i) {
    TokenSeq out;
    if (decode.beam_size == 1) {
      out = greedy_decode(generator, examples[i].source, decode).tokens;
    } else {
      auto beams = beam_search(generator, examples[i].source, decode);
      out = beams.front().tokens;
    }
    sum += matching_score(strip_eos(out), strip_eos(examples[i].target),
                          weights);
  }
  return sum / static_cast<double>(n);
}

// Log-prob of an arbitrary sampled token sequence (EOS not required, unlike
// the teacher-forced path) under the current parameters, differentiable.
template <typename S>
Tensor<S> sampled_sequence_logprob(const GeneratorModel<S>& generator,
                                   const Tensor<S>& enc_out,
                                   const std::vector<int>& tokens) {
  if (tokens.empty())
    throw ContractError("sampled_sequence_logprob: empty candidate");
  std::vector<int> prefix = {Vocab::kBos};
  prefix.insert(prefix.end(), tokens.begin(), tokens.end() - 1);
  auto lp = log_softmax(generator.decoder_logits(prefix, enc_out));
  return sum_all(gather_logprob(lp, tokens));
}

// Contrastive loss for one set: -log softmax of s+ against the negatives.
template <typename S>
Tensor<S> contrastive_loss(const RankerModel<S>& ranker,
                           const CandidateSet& set) {
  if (set.negatives.empty() || (set.positive < 0 && !set.reference_positive))
    throw ContractError("contrastive_loss: pairs not selected");
  std::vector<Tensor<S>> scores;
  const TokenSeq& pos = set.reference_positive
                            ? set.reference
                            : set.candidates[set.positive].tokens;
  scores.push_back(ranker.score(set.source, pos));
  for (int idx : set.negatives)
    scores.push_back(ranker.score(set.source, set.candidates[idx].tokens));
  auto lp = log_softmax(concat_vec(scores));
  Tensor<S> onehot = Tensor<S>::zeros({static_cast<int>(scores.size())});
  onehot.at(0) = S(1);
  return scale(sum_all(mul(lp, onehot)), S(-1));
}

// One ranker optimizer step over a batch of selected sets; returns the loss.
template <typename S>
double ranker_step(RankerModel<S>& ranker, Optimizer<S>& opt,
                   const std::vector<CandidateSet>& sets) {
  if (sets.empty()) throw ContractError("ranker_step: empty batch");
  Tape<S> tape;
  TapeGuard<S> guard(tape);
  Tensor<S> total;
  bool first = true;
  for (const auto& set : sets) {
    auto l = contrastive_loss(ranker, set);
    total = first ? l : add(total, l);
    first = false;
  }
  auto loss = scale(total, S(1) / static_cast<S>(sets.size()));
  double value = static_cast<double>(loss.item());
  if (!std::isfinite(value))
    throw TrainError("ranker_step: non-finite contrastive loss");
  ranker.params().zero_grad();
  tape.backward(loss);
  opt.step(ranker.params());
  return value;
}

struct GeneratorStepLoss {
  double nll = 0;
  double rl = 0;
  double total = 0;
};

// One generator optimizer step: teacher-forced NLL on the references plus the
// policy-gradient term over candidates, advantages precomputed on the sets.
// Candidate log-probs are recomputed here so gradients flow through theta.
template <typename S>
GeneratorStepLoss generator_step(GeneratorModel<S>& generator,
                                 Optimizer<S>& opt,
                                 const std::vector<CandidateSet>& sets,
                                 const JgrConfig& cfg) {
  if (sets.empty()) throw ContractError("generator_step: empty batch");
  Tape<S> tape;
  TapeGuard<S> guard(tape);
  Tensor<S> nll_sum, rl_sum;
  bool have_nll = false, have_rl = false;
  long num_candidates = 0;
  for (const auto& set : sets) {
    auto enc = generator.encode(set.source);
    auto [total_lp, per_token] =
        generator.sequence_logprob_with_enc(enc, set.reference);
    auto nll = scale(total_lp, S(-1) / static_cast<S>(set.reference.size()));
    nll_sum = have_nll ? add(nll_sum, nll) : nll;
    have_nll = true;
    for (const auto& cand : set.candidates) {
      ++num_candidates;
      if (cand.advantage == 0.0) continue;  // no gradient contribution
      auto lp = sampled_sequence_logprob(generator, enc, cand.tokens);
      auto term = scale(lp, static_cast<S>(-cand.advantage));
      rl_sum = have_rl ? add(rl_sum, term) : term;
      have_rl = true;
    }
  }
  const S inv_b = S(1) / static_cast<S>(sets.size());
  auto nll_mean = scale(nll_sum, inv_b);
  GeneratorStepLoss out;
  out.nll = static_cast<double>(nll_mean.item());
  Tensor<S> loss = scale(nll_mean, static_cast<S>(cfg.nll_weight));
  if (have_rl) {
    auto rl_mean = scale(rl_sum, S(1) / static_cast<S>(num_candidates));
    out.rl = static_cast<double>(rl_mean.item());
    loss = add(loss, scale(rl_mean, static_cast<S>(cfg.rl_weight)));
  }
  out.total = static_cast<double>(loss.item());
  if (!std::isfinite(out.total))
    throw TrainError("generator_step: non-finite loss");
  generator.params().zero_grad();
  tape.backward(loss);
  opt.step(generator.params());
  return out;
}

// ---------------------------------------------------------------------------
// Example cycling: reshuffled epochs, state = (epoch, position) only, so a
// resumed run continues with the identical stream.
// ---------------------------------------------------------------------------
class ExampleCycler {
 public:
  ExampleCycler(const std::vector<Example>* data, uint64_t seed,
                const std::string& name)
      : data_(data), seed_(seed), name_(name) {
    reshuffle();
  }

  const Example& next() {
    if (pos_ >= order_.size()) {
      ++epoch_;
      reshuffle();
    }
    return (*data_)[order_[pos_++]];
  }

  long epoch() const { return epoch_; }
  size_t pos() const { return pos_; }
  void restore(long epoch, size_t pos) {
    epoch_ = epoch;
    reshuffle();
    pos_ = pos;
  }

 private:
  void reshuffle() {
    order_.resize(data_->size());
    for (size_t i = 0; i < order_.size(); ++i)
      order_[i] = static_cast<int>(i);
    RngStream rng = Rng(seed_).stream(name_).fork(static_cast<uint64_t>(epoch_));
    for (size_t i = order_.size(); i > 1; --i) {
      uint64_t j = rng.next_below(i);
      std::swap(order_[i - 1], order_[j]);
    }
    pos_ = 0;
  }

  const std::vector<Example>* data_;
  uint64_t seed_;
  std::string name_;
  std::vector<int> order_;
  long epoch_ = 0;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Warm-up: teacher-forced NLL for warmup_epochs; dev delta logged per epoch.
// ---------------------------------------------------------------------------
template <typename S>
void warmup_generator(GeneratorModel<S>& generator, Optimizer<S>& opt,
                      const Dataset& data, const JgrConfig& cfg,
                      TrainLog* log = nullptr) {
  cfg.validate();
  for (int epoch = 0; epoch < cfg.warmup_epochs; ++epoch) {
    uint64_t shuffle_seed =
        Rng(cfg.seed).stream("warmup-shuffle").fork(epoch).next_u64();
    auto batches = batch_iter(data.train, cfg.batch_generator, shuffle_seed);
    double loss_sum = 0;
    for (const auto& batch : batches) {
      Tape<S> tape;
      TapeGuard<S> guard(tape);
      Tensor<S> total;
      bool first = true;
      for (const auto& ex : batch.items) {
        auto [lp, per_token] = generator.sequence_logprob(ex.source, ex.target);
        auto nll = scale(lp, S(-1) / static_cast<S>(ex.target.size()));
        total = first ? nll : add(total, nll);
        first = false;
      }
      auto loss = scale(total, S(1) / static_cast<S>(batch.items.size()));
      double v = static_cast<double>(loss.item());
      if (!std::isfinite(v))
        throw TrainError("warmup diverged: non-finite loss at epoch " +
                         std::to_string(epoch));
      loss_sum += v;
      generator.params().zero_grad();
      tape.backward(loss);
      opt.step(generator.params());
    }
    if (log) {
      double dd = dev_delta(generator, data.dev, cfg.eval_decode,
                            cfg.delta_weights, cfg.eval_dev_cap);
      log->row(epoch, "warmup", loss_sum / batches.size(), dd, 0.0, 0.0, 0.0,
               cfg.seed);
    }
  }
}

// ---------------------------------------------------------------------------
// JgrTrainer: owns models, optimizers, counters; checkpointable by value.
// ---------------------------------------------------------------------------
template <typename S>
class JgrTrainer {
 public:
  JgrTrainer(const Dataset* data, ModelConfig gen_cfg, ModelConfig rank_cfg,
             JgrConfig cfg, TrainLog* log = nullptr)
      : data_(data),
        cfg_(cfg),
        log_(log),
        generator_(gen_cfg, Rng(cfg.seed).stream("init-generator")),
        ranker_(rank_cfg, Rng(cfg.seed).stream("init-ranker")),
        gen_opt_(OptConfig{OptKind::kAdam, cfg.lr_generator}),
        rank_opt_(OptConfig{OptKind::kAdam, cfg.lr_ranker}),
        ranker_cycle_(&data->train, cfg.seed, "ranker-cycle"),
        generator_cycle_(&data->train, cfg.seed, "generator-cycle") {
    cfg_.validate();
    if (data->train.empty()) throw DataError("JgrTrainer: empty train split");
  }

  GeneratorModel<S>& generator() { return generator_; }
  RankerModel<S>& ranker() { return ranker_; }
  Optimizer<S>& generator_opt() { return gen_opt_; }
  Optimizer<S>& ranker_opt() { return rank_opt_; }
  const JgrConfig& config() const { return cfg_; }

  long iteration() const { return iteration_; }
  long global_step() const { return global_step_; }
  bool warmup_done() const { return warmup_done_; }
  bool first_ranker_done() const { return first_ranker_done_; }

  // Counter restore for checkpoint resume (parameters and optimizer moments
  // are restored separately through the stores).
  void restore_counters(long iteration, long global_step, bool warmup_done,
                        bool first_ranker_done, long r_epoch, size_t r_pos,
                        long g_epoch, size_t g_pos) {
    iteration_ = iteration;
    global_step_ = global_step;
    warmup_done_ = warmup_done;
    first_ranker_done_ = first_ranker_done;
    ranker_cycle_.restore(r_epoch, r_pos);
    generator_cycle_.restore(g_epoch, g_pos);
  }
  const ExampleCycler& ranker_cycle() const { return ranker_cycle_; }
  const ExampleCycler& generator_cycle() const { return generator_cycle_; }

  int iterations_total() const {
    double budget = cfg_.total_epochs * static_cast<double>(data_->train.size());
    double per_iter = static_cast<double>(cfg_.generator_steps_per_iter) *
                      static_cast<double>(cfg_.batch_generator);
    return std::max(1, static_cast<int>(std::ceil(budget / per_iter)));
  }

  void warmup() {
    warmup_generator(generator_, gen_opt_, *data_, cfg_, log_);
    warmup_done_ = true;
  }

  // Extended first ranker training on candidates from the frozen warmed
  // generator, with linear learning-rate warm-up. Returns per-step losses.
  std::vector<double> first_ranker_iteration() {
    std::vector<double> losses;
    for (int step = 0; step < cfg_.first_ranker_steps; ++step) {
      double frac = cfg_.first_ranker_warmup_steps > 0
                        ? std::min(1.0, static_cast<double>(step + 1) /
                                            cfg_.first_ranker_warmup_steps)
                        : 1.0;
      rank_opt_.set_lr(cfg_.lr_ranker * frac);
      losses.push_back(one_ranker_step());
    }
    rank_opt_.set_lr(cfg_.lr_ranker);
    first_ranker_done_ = true;
    if (log_ && !losses.empty())
      log_->row(iteration_, "ranker-init", losses.back(), 0.0, 0.0, 0.0, 0.0,
                cfg_.seed);
    return losses;
  }

  bool done() const { return iteration_ >= iterations_total(); }

  // One alternating interval: A ranker steps, then B generator steps, then
  // the per-interval diagnostics row. update_ranker=false skips the ranker
  // phase entirely (the ranker stays frozen), used by the non-joint variant.
  void run_iteration(bool update_ranker = true) {
    double ranker_loss_sum = 0;
    if (update_ranker)
      for (int a = 0; a < cfg_.ranker_steps_per_iter; ++a)
        ranker_loss_sum += one_ranker_step();

    double gen_loss_sum = 0;
    std::vector<double> rr, mr;
    double sb_sum = 0, sd_sum = 0;
    long sb_count = 0;
    for (int b = 0; b < cfg_.generator_steps_per_iter; ++b) {
      auto sets = sample_generator_sets();
      for (const auto& set : sets) {
        std::vector<TokenSeq> cands;
        for (const auto& c : set.candidates) {
          cands.push_back(strip_eos(c.tokens));
          mr.push_back(c.delta);
          if (!std::isnan(c.score)) rr.push_back(c.score);
        }
        sb_sum += self_bleu(cands);
        bool undefined = false;
        double sd = self_distinct(cands, 2, &undefined);
        sd_sum += undefined ? 0.0 : sd;
        ++sb_count;
      }
      gen_loss_sum += generator_step(generator_, gen_opt_, sets, cfg_).total;
    }

    double w = (rr.empty() || mr.empty()) ? 0.0 : wasserstein_1d(rr, mr);
    double dd = dev_delta(generator_, data_->dev, cfg_.eval_decode,
                          cfg_.delta_weights, cfg_.eval_dev_cap);
    if (log_) {
      if (update_ranker)
        log_->row(iteration_, "ranker",
                  ranker_loss_sum / cfg_.ranker_steps_per_iter, dd, 0.0, 0.0,
                  0.0, cfg_.seed);
      log_->row(iteration_, "generator",
                gen_loss_sum / cfg_.generator_steps_per_iter, dd,
                sb_count ? sb_sum / sb_count : 0.0,
                sb_count ? sd_sum / sb_count : 0.0, w, cfg_.seed);
    }
    last_wasserstein_ = w;
    ++iteration_;
  }

  double last_wasserstein() const { return last_wasserstein_; }

  void train() {
    if (!warmup_done_) warmup();
    if (!first_ranker_done_) first_ranker_iteration();
    while (!done()) {
      try {
        run_iteration();
      } catch (const TrainError& e) {
        throw TrainError("iteration " + std::to_string(iteration_) + ": " +
                         e.what());
      }
    }
  }

  // Builds one batch of ranker candidate sets (frozen generator, frozen
  // ranker scores not needed for the contrastive objective).
  std::vector<CandidateSet> sample_ranker_sets() {
    std::vector<CandidateSet> sets;
    RngStream step_rng =
        Rng(cfg_.seed).stream("ranker-cand").fork(static_cast<uint64_t>(global_step_));
    for (int i = 0; i < cfg_.batch_ranker; ++i) {
      const Example& ex = ranker_cycle_.next();
      CandidateSet set = build_candidate_set<S>(
          generator_, nullptr, ex, cfg_.candidates_ranker, cfg_.sample_decode,
          step_rng.fork(static_cast<uint64_t>(i)), cfg_.delta_weights);
      RngStream pick_rng = step_rng.fork(1000 + static_cast<uint64_t>(i));
      select_contrastive_pairs(set, cfg_.picking, cfg_.negatives, &pick_rng);
      sets.push_back(std::move(set));
    }
    return sets;
  }

  // Builds one batch of generator candidate sets with rewards and advantages.
  std::vector<CandidateSet> sample_generator_sets() {
    std::vector<CandidateSet> sets;
    RngStream step_rng =
        Rng(cfg_.seed).stream("gen-cand").fork(static_cast<uint64_t>(global_step_));
    ++global_step_;
    const RankerModel<S>* d =
        cfg_.reward_mode == RewardMode::kOnlyMr ? nullptr : &ranker_;
    for (int i = 0; i < cfg_.batch_generator; ++i) {
      const Example& ex = generator_cycle_.next();
      CandidateSet set = build_candidate_set<S>(
          generator_, d, ex, cfg_.candidates_generator, cfg_.sample_decode,
          step_rng.fork(static_cast<uint64_t>(i)), cfg_.delta_weights);
      compute_rewards(set, cfg_.reward_mode);
      sets.push_back(std::move(set));
    }
    return sets;
  }

 private:
  double one_ranker_step() {
    auto sets = sample_ranker_sets();
    ++global_step_;
    return ranker_step(ranker_, rank_opt_, sets);
  }

  const Dataset* data_;
  JgrConfig cfg_;
  TrainLog* log_;
  GeneratorModel<S> generator_;
  RankerModel<S> ranker_;
  Optimizer<S> gen_opt_;
  Optimizer<S> rank_opt_;
  ExampleCycler ranker_cycle_;
  ExampleCycler generator_cycle_;
  long iteration_ = 0;
  long global_step_ = 0;
  bool warmup_done_ = false;
  bool first_ranker_done_ = false;
  double last_wasserstein_ = 0.0;
};

}  // namespace jgr

#endif  // JGR_ENGINE_HPP_
