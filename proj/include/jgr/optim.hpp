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

#ifndef JGR_OPTIM_HPP_
#define JGR_OPTIM_HPP_

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jgr/rng.hpp"
#include "jgr/tensor.hpp"

namespace jgr {

// Ordered, named collection of trainable tensors. Order is construction
// order, which fixes checkpoint layout and optimizer traversal.
template <typename S>
class ParamStore {
 public:
  Tensor<S>& add(const std::string& name, std::vector<int> shape) {
    if (index_.count(name)) throw ContractError("duplicate parameter " + name);
    Tensor<S> t = Tensor<S>::zeros(std::move(shape));
    t.mark_parameter();
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
  }

  Tensor<S>& add_normal(const std::string& name, std::vector<int> shape,
                        RngStream& rng, double stddev) {
    Tensor<S>& t = add(name, std::move(shape));
    for (long i = 0; i < t.numel(); ++i)
      t.at(i) = static_cast<S>(rng.next_normal() * stddev);
    return t;
  }

  Tensor<S>& add_const(const std::string& name, std::vector<int> shape, S v) {
    Tensor<S>& t = add(name, std::move(shape));
    for (long i = 0; i < t.numel(); ++i) t.at(i) = v;
    return t;
  }

  Tensor<S>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("no parameter " + name);
    return items_[it->second].second;
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  size_t size() const { return items_.size(); }

  long total_params() const {
    long n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : items_) t.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Tensor<S>>> items_;
  std::map<std::string, size_t> index_;
};

enum class OptKind { kSgd, kAdam };

struct OptConfig {
  OptKind kind = OptKind::kAdam;
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global grad-norm clip; <= 0 disables
};

// SGD / Adam over a ParamStore. Adam moments are keyed by parameter name and
// survive checkpointing.
template <typename S>
class Optimizer {
 public:
  explicit Optimizer(OptConfig cfg) : cfg_(cfg) {}

  void step(ParamStore<S>& params) {
    if (cfg_.lr <= 0) throw ContractError("optimizer: lr must be > 0");
    ++t_;
    double clip_scale = 1.0;
    if (cfg_.clip_norm > 0) {
      double sq = 0;
      for (auto& [name, p] : params) {
        if (!p.grad) throw ContractError("optimizer: missing grad for " + name);
        for (S g : *p.grad) sq += static_cast<double>(g) * static_cast<double>(g);
      }
      double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
    }
    for (auto& [name, p] : params) {
      if (!p.grad) throw ContractError("optimizer: missing grad for " + name);
      if (cfg_.kind == OptKind::kSgd) {
        for (long i = 0; i < p.numel(); ++i)
          p.at(i) -= static_cast<S>(cfg_.lr * clip_scale *
                                    static_cast<double>((*p.grad)[i]));
      } else {
        auto& m = moments1_[name];
        auto& v = moments2_[name];
        if (m.empty()) {
          m.assign(p.numel(), 0.0);
          v.assign(p.numel(), 0.0);
        }
        double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (long i = 0; i < p.numel(); ++i) {
          double g = static_cast<double>((*p.grad)[i]) * clip_scale;
          m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
          v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
          double mhat = m[i] / bc1;
          double vhat = v[i] / bc2;
          p.at(i) -=
              static_cast<S>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
      }
    }
  }

  const OptConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long step_count() const { return t_; }
  void set_step_count(long t) { t_ = t; }

  // Moment state, exposed for checkpointing.
  std::map<std::string, std::vector<double>>& moments1() { return moments1_; }
  std::map<std::string, std::vector<double>>& moments2() { return moments2_; }

 private:
  OptConfig cfg_;
  long t_ = 0;
  std::map<std::string, std::vector<double>> moments1_;
  std::map<std::string, std::vector<double>> moments2_;
};

}  // namespace jgr

#endif  // JGR_OPTIM_HPP_
