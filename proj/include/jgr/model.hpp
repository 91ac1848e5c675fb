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
// Transformer models: the encoder-decoder generator, the encoder ranker with
// a scalar head, and the critic (ranker architecture, regression use).
// Pre-LN blocks, learned positional embeddings, tied input/output embedding.

#ifndef JGR_MODEL_HPP_
#define JGR_MODEL_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "jgr/ops.hpp"
#include "jgr/optim.hpp"
#include "jgr/vocab.hpp"

namespace jgr {

struct ModelConfig {
  int vocab_size = 0;
  int model_dim = 64;
  int ff_dim = 256;
  int num_heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;  // generator only
  int max_positions = 64;
  double dropout = 0.0;
  double init_std = 0.02;

  void validate(bool with_decoder) const {
    if (vocab_size < 1 || model_dim < 1 || ff_dim < 1 || num_heads < 1 ||
        encoder_layers < 1 || max_positions < 1 ||
        (with_decoder && decoder_layers < 1))
      throw ContractError("ModelConfig: all counts must be >= 1");
    if (model_dim % num_heads != 0)
      throw ContractError("ModelConfig: model_dim not divisible by num_heads");
  }
};

namespace detail {

template <typename S>
void add_attention_params(ParamStore<S>& ps, const std::string& p, int d,
                          RngStream& rng, double std) {
  for (const char* w : {"wq", "wk", "wv", "wo"})
    ps.add_normal(p + w, {d, d}, rng, std);
  for (const char* b : {"bq", "bk", "bv", "bo"}) ps.add(p + b, {d});
}

template <typename S>
void add_ln_params(ParamStore<S>& ps, const std::string& p, int d) {
  ps.add_const(p + "gain", {d}, S(1));
  ps.add(p + "bias", {d});
}

template <typename S>
void add_ffn_params(ParamStore<S>& ps, const std::string& p, int d, int ff,
                    RngStream& rng, double std) {
  ps.add_normal(p + "w1", {d, ff}, rng, std);
  ps.add(p + "b1", {ff});
  ps.add_normal(p + "w2", {ff, d}, rng, std);
  ps.add(p + "b2", {d});
}

// Additive causal mask: 0 on/below the diagonal, -1e9 above.
template <typename S>
Tensor<S> causal_mask(int t) {
  Tensor<S> m = Tensor<S>::zeros({t, t});
  for (int i = 0; i < t; ++i)
    for (int j = i + 1; j < t; ++j) m.at(i, j) = S(-1e9);
  return m;
}

}  // namespace detail

// Shared transformer machinery over a ParamStore; models below own the store
// and call into this with their parameter prefixes.
template <typename S>
class TransformerCore {
 public:
  TransformerCore(ParamStore<S>* ps, const ModelConfig* cfg)
      : ps_(ps), cfg_(cfg) {}

  Tensor<S> layer_norm_p(const Tensor<S>& x, const std::string& prefix) const {
    return layer_norm(x, ps_->get(prefix + "gain"), ps_->get(prefix + "bias"));
  }

  // Multi-head attention; kv may differ from q for cross-attention.
  Tensor<S> attention(const Tensor<S>& q_in, const Tensor<S>& kv_in,
                      const std::string& prefix, bool causal) const {
    const int d = cfg_->model_dim;
    const int h = cfg_->num_heads;
    const int dh = d / h;
    auto q = add_rowvec(matmul(q_in, ps_->get(prefix + "wq")),
                        ps_->get(prefix + "bq"));
    auto k = add_rowvec(matmul(kv_in, ps_->get(prefix + "wk")),
                        ps_->get(prefix + "bk"));
    auto v = add_rowvec(matmul(kv_in, ps_->get(prefix + "wv")),
                        ps_->get(prefix + "bv"));
    Tensor<S> mask;
    if (causal) mask = detail::causal_mask<S>(q_in.rows());
    std::vector<Tensor<S>> heads;
    S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
    for (int i = 0; i < h; ++i) {
      auto qh = slice_cols(q, i * dh, (i + 1) * dh);
      auto kh = slice_cols(k, i * dh, (i + 1) * dh);
      auto vh = slice_cols(v, i * dh, (i + 1) * dh);
      auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      if (causal) scores = add(scores, mask);
      heads.push_back(matmul(softmax(scores), vh));
    }
    auto ctx = concat_cols(heads);
    return add_rowvec(matmul(ctx, ps_->get(prefix + "wo")),
                      ps_->get(prefix + "bo"));
  }

  Tensor<S> ffn(const Tensor<S>& x, const std::string& prefix) const {
    auto h = gelu(add_rowvec(matmul(x, ps_->get(prefix + "w1")),
                             ps_->get(prefix + "b1")));
    return add_rowvec(matmul(h, ps_->get(prefix + "w2")),
                      ps_->get(prefix + "b2"));
  }

  Tensor<S> embed(const std::vector<int>& ids, const std::string& emb_name,
                  const std::string& pos_name) const {
    auto x = embedding_lookup(ps_->get(emb_name), ids);
    auto pos = slice_rows(ps_->get(pos_name), 0, static_cast<int>(ids.size()));
    return add(x, pos);
  }

  Tensor<S> encoder_stack(Tensor<S> x, const std::string& prefix,
                          int layers) const {
    for (int l = 0; l < layers; ++l) {
      std::string p = prefix + std::to_string(l) + ".";
      x = add(x, attention(layer_norm_p(x, p + "ln1."),
                           layer_norm_p(x, p + "ln1."), p + "att.", false));
      x = add(x, ffn(layer_norm_p(x, p + "ln2."), p + "ff."));
    }
    return layer_norm_p(x, prefix + "ln.");
  }

 private:
  ParamStore<S>* ps_;
  const ModelConfig* cfg_;
};

// ---------------------------------------------------------------------------
// GeneratorModel: transformer encoder-decoder with tied LM head.
// ---------------------------------------------------------------------------
template <typename S>
class GeneratorModel {
 public:
  GeneratorModel(ModelConfig cfg, RngStream init_rng)
      : cfg_(cfg), core_(&params_, &cfg_) {
    cfg_.validate(/*with_decoder=*/true);
    const int d = cfg_.model_dim;
    params_.add_normal("emb", {cfg_.vocab_size, d}, init_rng, cfg_.init_std);
    params_.add_normal("pos", {cfg_.max_positions, d}, init_rng, cfg_.init_std);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      std::string p = "enc." + std::to_string(l) + ".";
      detail::add_ln_params(params_, p + "ln1.", d);
      detail::add_attention_params(params_, p + "att.", d, init_rng, cfg_.init_std);
      detail::add_ln_params(params_, p + "ln2.", d);
      detail::add_ffn_params(params_, p + "ff.", d, cfg_.ff_dim, init_rng,
                             cfg_.init_std);
    }
    detail::add_ln_params(params_, "enc.ln.", d);
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      std::string p = "dec." + std::to_string(l) + ".";
      detail::add_ln_params(params_, p + "ln1.", d);
      detail::add_attention_params(params_, p + "self.", d, init_rng, cfg_.init_std);
      detail::add_ln_params(params_, p + "lnx.", d);
      detail::add_attention_params(params_, p + "cross.", d, init_rng, cfg_.init_std);
      detail::add_ln_params(params_, p + "ln2.", d);
      detail::add_ffn_params(params_, p + "ff.", d, cfg_.ff_dim, init_rng,
                             cfg_.init_std);
    }
    detail::add_ln_params(params_, "dec.ln.", d);
    if (params_.total_params() != expected_param_count())
      throw ContractError("generator parameter count mismatch");
  }

  // Embedding + positions + per-layer attention/LN/FFN weights; the LM head
  // is tied to the embedding and contributes nothing extra.
  long expected_param_count() const {
    const long d = cfg_.model_dim, ff = cfg_.ff_dim;
    const long ln = 2 * d;
    const long att = 4 * d * d + 4 * d;
    const long ffn = d * ff + ff + ff * d + d;
    long enc = cfg_.encoder_layers * (2 * ln + att + ffn) + ln;
    long dec = cfg_.decoder_layers * (3 * ln + 2 * att + ffn) + ln;
    return static_cast<long>(cfg_.vocab_size) * d +
           static_cast<long>(cfg_.max_positions) * d + enc + dec;
  }

  std::vector<int> truncate_source(std::vector<int> src) const {
    if (static_cast<int>(src.size()) > cfg_.max_positions)
      src.resize(cfg_.max_positions);
    return src;
  }

  Tensor<S> encode(const std::vector<int>& source) const {
    if (source.empty()) throw ContractError("encode: empty source");
    std::vector<int> src = truncate_source(source);
    auto x = core_.embed(src, "emb", "pos");
    return core_.encoder_stack(x, "enc.", cfg_.encoder_layers);
  }

  // Hidden states for a BOS-initiated target prefix against encoder output.
  Tensor<S> decoder_hidden(const std::vector<int>& prefix,
                           const Tensor<S>& enc_out) const {
    if (prefix.empty() || prefix[0] != Vocab::kBos)
      throw ContractError("decoder: prefix must begin with BOS");
    std::vector<int> ids = prefix;
    if (static_cast<int>(ids.size()) > cfg_.max_positions)
      throw ContractError("decoder: prefix exceeds max_positions");
    auto x = core_.embed(ids, "emb", "pos");
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      std::string p = "dec." + std::to_string(l) + ".";
      auto normed = core_.layer_norm_p(x, p + "ln1.");
      x = add(x, core_.attention(normed, normed, p + "self.", true));
      x = add(x, core_.attention(core_.layer_norm_p(x, p + "lnx."), enc_out,
                                 p + "cross.", false));
      x = add(x, core_.ffn(core_.layer_norm_p(x, p + "ln2."), p + "ff."));
    }
    return core_.layer_norm_p(x, "dec.ln.");
  }

  // Next-token logits for every prefix position; tied output projection.
  Tensor<S> decoder_logits(const std::vector<int>& prefix,
                           const Tensor<S>& enc_out) const {
    return matmul(decoder_hidden(prefix, enc_out),
                  transpose(params_.get("emb")));
  }

  // Logits for the next token after the full prefix, as a plain row.
  std::vector<S> next_logits(const std::vector<int>& prefix,
                             const Tensor<S>& enc_out) const {
    auto logits = decoder_logits(prefix, enc_out);
    int last = logits.rows() - 1;
    std::vector<S> row(cfg_.vocab_size);
    for (int c = 0; c < cfg_.vocab_size; ++c) row[c] = logits.at(last, c);
    return row;
  }

  // Per-token log-probs of `target` (which must end with EOS) given `source`;
  // first element of the pair is the total.
  std::pair<Tensor<S>, Tensor<S>> sequence_logprob(
      const std::vector<int>& source, const std::vector<int>& target) const {
    if (target.empty() || target.back() != Vocab::kEos)
      throw ContractError("sequence_logprob: target must end with EOS");
    auto enc_out = encode(source);
    return sequence_logprob_with_enc(enc_out, target);
  }

  std::pair<Tensor<S>, Tensor<S>> sequence_logprob_with_enc(
      const Tensor<S>& enc_out, const std::vector<int>& target) const {
    std::vector<int> prefix;
    prefix.push_back(Vocab::kBos);
    prefix.insert(prefix.end(), target.begin(), target.end() - 1);
    auto lp = log_softmax(decoder_logits(prefix, enc_out));
    auto per_token = gather_logprob(lp, target);
    return {sum_all(per_token), per_token};
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }

 private:
  ModelConfig cfg_;
  mutable ParamStore<S> params_;
  TransformerCore<S> core_;
};

// ---------------------------------------------------------------------------
// RankerModel: transformer encoder over [BOS, x, SEP, y-hat], first-position
// pooling, 1-unit linear head. Also serves as the critic and the GAN
// discriminator body (consumers interpret the scalar).
// ---------------------------------------------------------------------------
template <typename S>
class RankerModel {
 public:
  RankerModel(ModelConfig cfg, RngStream init_rng)
      : cfg_(cfg), core_(&params_, &cfg_) {
    cfg_.validate(/*with_decoder=*/false);
    const int d = cfg_.model_dim;
    params_.add_normal("emb", {cfg_.vocab_size, d}, init_rng, cfg_.init_std);
    params_.add_normal("pos", {cfg_.max_positions, d}, init_rng, cfg_.init_std);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      std::string p = "enc." + std::to_string(l) + ".";
      detail::add_ln_params(params_, p + "ln1.", d);
      detail::add_attention_params(params_, p + "att.", d, init_rng, cfg_.init_std);
      detail::add_ln_params(params_, p + "ln2.", d);
      detail::add_ffn_params(params_, p + "ff.", d, cfg_.ff_dim, init_rng,
                             cfg_.init_std);
    }
    detail::add_ln_params(params_, "enc.ln.", d);
    params_.add_normal("head.w", {d, 1}, init_rng, cfg_.init_std);
    params_.add("head.b", {1});
    if (params_.total_params() != expected_param_count())
      throw ContractError("ranker parameter count mismatch");
  }

  long expected_param_count() const {
    const long d = cfg_.model_dim, ff = cfg_.ff_dim;
    const long ln = 2 * d;
    const long att = 4 * d * d + 4 * d;
    const long ffn = d * ff + ff + ff * d + d;
    long enc = cfg_.encoder_layers * (2 * ln + att + ffn) + ln;
    return static_cast<long>(cfg_.vocab_size) * d +
           static_cast<long>(cfg_.max_positions) * d + enc + d + 1;
  }

  // [BOS] ++ x ++ [SEP] ++ y-hat, truncated to max_positions keeping the
  // candidate intact first (the source gives way).
  std::vector<int> build_input(const std::vector<int>& source,
                               const std::vector<int>& candidate) const {
    std::vector<int> cand = candidate;
    int budget = cfg_.max_positions - 2;  // BOS and SEP
    if (static_cast<int>(cand.size()) > budget) cand.resize(budget);
    int src_budget = budget - static_cast<int>(cand.size());
    std::vector<int> src = source;
    if (static_cast<int>(src.size()) > src_budget) src.resize(src_budget);
    std::vector<int> ids;
    ids.push_back(Vocab::kBos);
    ids.insert(ids.end(), src.begin(), src.end());
    ids.push_back(Vocab::kSep);
    ids.insert(ids.end(), cand.begin(), cand.end());
    return ids;
  }

  // Scalar score s as a 1-element tensor (differentiable under a tape).
  Tensor<S> score(const std::vector<int>& source,
                  const std::vector<int>& candidate) const {
    auto ids = build_input(source, strip_input(candidate));
    auto x = core_.embed(ids, "emb", "pos");
    auto h = core_.encoder_stack(x, "enc.", cfg_.encoder_layers);
    auto pooled = slice_rows(h, 0, 1);  // first-position pooling
    auto s = add(matmul(pooled, params_.get("head.w")),
                 reshape_bias());
    // (1,1) -> scalar via sum
    return sum_all(s);
  }

  double score_value(const std::vector<int>& source,
                     const std::vector<int>& candidate) const {
    return static_cast<double>(score(source, candidate).item());
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }

 private:
  static std::vector<int> strip_input(const std::vector<int>& candidate) {
    std::vector<int> out;
    for (int t : candidate)
      if (t != Vocab::kBos && t != Vocab::kEos) out.push_back(t);
    return out;
  }

  Tensor<S> reshape_bias() const {
    // head.b as (1,1) for the add with the pooled projection.
    Tensor<S>& b = params_.get("head.b");
    Tensor<S> r = b;
    r.shape = {1, 1};
    return r;
  }

  ModelConfig cfg_;
  mutable ParamStore<S> params_;
  TransformerCore<S> core_;
};

// The actor-critic baseline's value network: ranker architecture, trained by
// squared-error regression onto matching scores.
template <typename S>
using CriticModel = RankerModel<S>;

}  // namespace jgr

#endif  // JGR_MODEL_HPP_
