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

#ifndef JGR_GRADCHECK_HPP_
#define JGR_GRADCHECK_HPP_

#include <cmath>
#include <functional>

#include "jgr/ops.hpp"
#include "jgr/optim.hpp"
#include "jgr/tensor.hpp"

namespace jgr {

// Compares reverse-mode gradients of a deterministic scalar-valued function
// against central finite differences, perturbing every parameter element.
// Returns the max relative error max(|a - n|) / max(|a|, |n|, 1e-8).
// Run in 64-bit only; the oracle is meaningless in float.
inline double grad_check(const std::function<Tensor<double>()>& f,
                         ParamStore<double>& params, double eps = 1e-4) {
  params.zero_grad();
  Tape<double> tape;
  double loss0;
  {
    TapeGuard<double> guard(tape);
    Tensor<double> loss = f();
    loss0 = loss.item();
    tape.backward(loss);
  }
  if (!std::isfinite(loss0)) throw ContractError("grad_check: non-finite loss");

  double max_rel = 0.0;
  for (auto& [name, p] : params) {
    for (long i = 0; i < p.numel(); ++i) {
      double saved = p.at(i);
      p.at(i) = saved + eps;
      double lp = f().item();
      p.at(i) = saved - eps;
      double lm = f().item();
      p.at(i) = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw ContractError("grad_check: non-finite perturbed loss at " + name);
      double numeric = (lp - lm) / (2.0 * eps);
      double analytic = (*p.grad)[i];
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace jgr

#endif  // JGR_GRADCHECK_HPP_
