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
// Evaluation: generator-only (top beam), ranker reranking over all beams,
// and the oracle reranker upper bound; plus the beam-size sweep.

#ifndef JGR_EVALUATE_HPP_
#define JGR_EVALUATE_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "jgr/engine.hpp"

namespace jgr {

enum class EvalMode { kG, kR, kOracle };

inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "G" || s == "g") return EvalMode::kG;
  if (s == "R" || s == "r") return EvalMode::kR;
  if (s == "oracle") return EvalMode::kOracle;
  throw ContractError("unknown eval mode: " + s);
}

struct EvalReport {
  std::vector<TokenSeq> outputs;        // selected hypothesis per example
  std::vector<double> example_deltas;   // matching score per example
  double mean_delta = 0.0;
};

// mode G: top beam. mode R: argmax ranker score over all beams (ties go to
// the higher beam rank, so a constant ranker reduces to mode G). oracle:
// argmax true delta (the reranking upper bound).
template <typename S>
EvalReport evaluate(const GeneratorModel<S>& generator,
                     const RankerModel<S>* ranker,
                     const std::vector<Example>& examples,
                     const DecodeConfig& decode, EvalMode mode,
                     const MatchWeights& weights, int cap = 0) {
  if (mode == EvalMode::kR && !ranker)
    throw ContractError("evaluate: mode R requires a ranker");
  EvalReport report;
  size_t n = examples.size();
  if (cap > 0) n = std::min(n, static_cast<size_t>(cap));
  for (size_t i = 0; i < n; ++i) {
    const Example& ex = examples[i];
    auto beams = beam_search(generator, ex.source, decode);
    size_t pick = 0;
    if (mode == EvalMode::kR) {
      double best = -std::numeric_limits<double>::infinity();
      for (size_t b = 0; b < beams.size(); ++b) {
        double s = ranker->score_value(ex.source, beams[b].tokens);
        if (s > best) {  // strict: ties keep the higher beam rank
          best = s;
          pick = b;
        }
      }
    } else if (mode == EvalMode::kOracle) {
      double best = -std::numeric_limits<double>::infinity();
      for (size_t b = 0; b < beams.size(); ++b) {
        double d = matching_score(strip_eos(beams[b].tokens),
                                  strip_eos(ex.target), weights);
        if (d > best) {
          best = d;
          pick = b;
        }
      }
    }
    TokenSeq out = beams[pick].tokens;
    double delta =
        matching_score(strip_eos(out), strip_eos(ex.target), weights);
    report.outputs.push_back(std::move(out));
    report.example_deltas.push_back(delta);
  }
  double sum = 0;
  for (double d : report.example_deltas) sum += d;
  report.mean_delta =
      report.example_deltas.empty()
          ? 0.0
          : sum / static_cast<double>(report.example_deltas.size());
  return report;
}

struct BeamSweepPoint {
  int beam_size;
  double mean_delta_g;
  double mean_delta_r;  // NaN when no ranker supplied
};

template <typename S>
std::vector<BeamSweepPoint> beam_sweep(const GeneratorModel<S>& generator,
                                       const RankerModel<S>* ranker,
                                       const std::vector<Example>& examples,
                                       DecodeConfig decode,
                                       const std::vector<int>& sizes,
                                       const MatchWeights& weights,
                                       int cap = 0) {
  std::vector<BeamSweepPoint> out;
  for (int b : sizes) {
    decode.beam_size = b;
    decode.num_groups = 1;
    BeamSweepPoint p;
    p.beam_size = b;
    p.mean_delta_g =
        evaluate(generator, ranker, examples, decode, EvalMode::kG, weights, cap)
            .mean_delta;
    p.mean_delta_r =
        ranker ? evaluate(generator, ranker, examples, decode, EvalMode::kR,
                          weights, cap)
                     .mean_delta
               : std::numeric_limits<double>::quiet_NaN();
    out.push_back(p);
  }
  return out;
}

}  // namespace jgr

#endif  // JGR_EVALUATE_HPP_
