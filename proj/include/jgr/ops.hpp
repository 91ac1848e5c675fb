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
// Differentiable primitives over Tensor<S>. Each op computes the forward
// value and, when a tape is active and any input is tracked, records a node
// whose backward closure routes gradients to the inputs. Shapes are checked
// explicitly; there is no implicit broadcasting beyond the documented
// row-vector bias add.

#ifndef JGR_OPS_HPP_
#define JGR_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "jgr/rng.hpp"
#include "jgr/tensor.hpp"

namespace jgr {

namespace detail {

template <typename S>
inline void check_finite(const Tensor<S>& t, const char* op) {
#ifndef NDEBUG
  for (S v : *t.data)
    if (!std::isfinite(static_cast<double>(v)))
      throw ContractError(std::string("non-finite output of ") + op);
#endif
  (void)t;
  (void)op;
}

template <typename S>
inline bool any_tracked(const std::vector<const Tensor<S>*>& ins) {
  Tape<S>* tape = Tape<S>::active();
  if (!tape) return false;
  for (const Tensor<S>* t : ins)
    if (tape->tracks(*t)) return true;
  return false;
}

template <typename S, typename F>
inline Tensor<S> record(Tensor<S> out, const std::vector<const Tensor<S>*>& ins,
                        F&& back) {
  if (!any_tracked<S>(ins)) return out;
  Tape<S>* tape = Tape<S>::active();
  out.node = tape->add_node(out.numel(), std::forward<F>(back));
  out.tape_id = tape->id();
  return out;
}

template <typename S>
inline void require_same_shape(const Tensor<S>& a, const Tensor<S>& b,
                               const char* op) {
  if (a.shape != b.shape)
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape) + " vs " + shape_str(b.shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: incompatible " + shape_str(a.shape) + " x " +
                     shape_str(b.shape));
  Tensor<S> out = Tensor<S>::zeros({a.rows(), b.cols()});
  out.mat_mut().noalias() = a.mat().lazyProduct(b.mat());
  detail::check_finite(out, "matmul");
  return detail::record<S>(
      out, {&a, &b}, [a, b](Tape<S>& tape, const std::vector<S>& g) {
        typename Tensor<S>::CMapM gm(g.data(), a.rows(), b.cols());
        if (tape.tracks(a)) {
          std::vector<S> ga(a.numel());
          typename Tensor<S>::MapM(ga.data(), a.rows(), a.cols()).noalias() =
              gm.lazyProduct(b.mat().transpose());
          tape.accumulate(a, ga);
        }
        if (tape.tracks(b)) {
          std::vector<S> gb(b.numel());
          typename Tensor<S>::MapM(gb.data(), b.rows(), b.cols()).noalias() =
              a.mat().transpose().lazyProduct(gm);
          tape.accumulate(b, gb);
        }
      });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  if (a.ndim() != 2) throw ShapeError("transpose: need 2-D " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros({a.cols(), a.rows()});
  out.mat_mut() = a.mat().transpose();
  return detail::record<S>(
      out, {&a}, [a](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(a.numel());
        typename Tensor<S>::MapM(ga.data(), a.rows(), a.cols()) =
            typename Tensor<S>::CMapM(g.data(), a.cols(), a.rows()).transpose();
        tape.accumulate(a, ga);
      });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) + b.at(i);
  detail::check_finite(out, "add");
  return detail::record<S>(out, {&a, &b},
                           [a, b](Tape<S>& tape, const std::vector<S>& g) {
                             tape.accumulate(a, g);
                             tape.accumulate(b, g);
                           });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) - b.at(i);
  return detail::record<S>(out, {&a, &b},
                           [a, b](Tape<S>& tape, const std::vector<S>& g) {
                             tape.accumulate(a, g);
                             std::vector<S> gb(g.size());
                             for (size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
                             tape.accumulate(b, gb);
                           });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) * b.at(i);
  detail::check_finite(out, "mul");
  return detail::record<S>(
      out, {&a, &b}, [a, b](Tape<S>& tape, const std::vector<S>& g) {
        if (tape.tracks(a)) {
          std::vector<S> ga(g.size());
          for (size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * b.at(i);
          tape.accumulate(a, ga);
        }
        if (tape.tracks(b)) {
          std::vector<S> gb(g.size());
          for (size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * a.at(i);
          tape.accumulate(b, gb);
        }
      });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) * c;
  return detail::record<S>(out, {&a},
                           [a, c](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(g.size());
                             for (size_t i = 0; i < g.size(); ++i)
                               ga[i] = g[i] * c;
                             tape.accumulate(a, ga);
                           });
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) + c;
  return detail::record<S>(out, {&a},
                           [a](Tape<S>& tape, const std::vector<S>& g) {
                             tape.accumulate(a, g);
                           });
}

// out[r, c] = a[r, c] + v[c]
template <typename S>
Tensor<S> add_rowvec(const Tensor<S>& a, const Tensor<S>& v) {
  if (a.ndim() != 2 || v.ndim() != 1 || v.shape[0] != a.cols())
    throw ShapeError("add_rowvec: " + shape_str(a.shape) + " + " +
                     shape_str(v.shape));
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c) + v.at(c);
  return detail::record<S>(
      out, {&a, &v}, [a, v](Tape<S>& tape, const std::vector<S>& g) {
        tape.accumulate(a, g);
        if (tape.tracks(v)) {
          std::vector<S> gv(v.numel(), S(0));
          for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c)
              gv[c] += g[static_cast<size_t>(r) * a.cols() + c];
          tape.accumulate(v, gv);
        }
      });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) out.at(i) = a.at(i) > S(0) ? a.at(i) : S(0);
  return detail::record<S>(out, {&a},
                           [a](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(g.size());
                             for (size_t i = 0; i < g.size(); ++i)
                               ga[i] = a.at(i) > S(0) ? g[i] : S(0);
                             tape.accumulate(a, ga);
                           });
}

template <typename S>
Tensor<S> gelu(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) {
    double x = static_cast<double>(a.at(i));
    out.at(i) = static_cast<S>(0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)));
  }
  return detail::record<S>(
      out, {&a}, [a](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(g.size());
        const double inv_sqrt_2pi = 0.3989422804014327;
        for (size_t i = 0; i < g.size(); ++i) {
          double x = static_cast<double>(a.at(i));
          double d = 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
                     x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
          ga[i] = g[i] * static_cast<S>(d);
        }
        tape.accumulate(a, ga);
      });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i)
    out.at(i) = S(1) / (S(1) + std::exp(-a.at(i)));
  return detail::record<S>(out, {&a},
                           [a, out](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(g.size());
                             for (size_t i = 0; i < g.size(); ++i) {
                               S y = out.at(i);
                               ga[i] = g[i] * y * (S(1) - y);
                             }
                             tape.accumulate(a, ga);
                           });
}

// log(1 + exp(x)), numerically stable.
template <typename S>
Tensor<S> softplus(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  for (long i = 0; i < a.numel(); ++i) {
    S x = a.at(i);
    out.at(i) = x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return detail::record<S>(out, {&a},
                           [a](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(g.size());
                             for (size_t i = 0; i < g.size(); ++i)
                               ga[i] = g[i] / (S(1) + std::exp(-a.at(i)));
                             tape.accumulate(a, ga);
                           });
}

// Train-only inverted dropout; p == 0 is the identity and records nothing.
template <typename S>
Tensor<S> dropout(const Tensor<S>& a, double p, RngStream& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ContractError("dropout: rate must be < 1");
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  auto mask = std::make_shared<std::vector<S>>(a.numel());
  S keep_scale = static_cast<S>(1.0 / (1.0 - p));
  for (long i = 0; i < a.numel(); ++i) {
    (*mask)[i] = rng.next_double() >= p ? keep_scale : S(0);
    out.at(i) = a.at(i) * (*mask)[i];
  }
  return detail::record<S>(out, {&a},
                           [a, mask](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(g.size());
                             for (size_t i = 0; i < g.size(); ++i)
                               ga[i] = g[i] * (*mask)[i];
                             tape.accumulate(a, ga);
                           });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> slice_rows(const Tensor<S>& a, int r0, int r1) {
  if (a.ndim() != 2 || r0 < 0 || r1 > a.rows() || r0 >= r1)
    throw ShapeError("slice_rows: [" + std::to_string(r0) + "," +
                     std::to_string(r1) + ") of " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros({r1 - r0, a.cols()});
  out.mat_mut() = a.mat().middleRows(r0, r1 - r0);
  return detail::record<S>(
      out, {&a}, [a, r0, r1](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(a.numel(), S(0));
        typename Tensor<S>::MapM(ga.data(), a.rows(), a.cols())
            .middleRows(r0, r1 - r0) =
            typename Tensor<S>::CMapM(g.data(), r1 - r0, a.cols());
        tape.accumulate(a, ga);
      });
}

template <typename S>
Tensor<S> slice_cols(const Tensor<S>& a, int c0, int c1) {
  if (a.ndim() != 2 || c0 < 0 || c1 > a.cols() || c0 >= c1)
    throw ShapeError("slice_cols: [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") of " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros({a.rows(), c1 - c0});
  out.mat_mut() = a.mat().middleCols(c0, c1 - c0);
  return detail::record<S>(
      out, {&a}, [a, c0, c1](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(a.numel(), S(0));
        typename Tensor<S>::MapM(ga.data(), a.rows(), a.cols())
            .middleCols(c0, c1 - c0) =
            typename Tensor<S>::CMapM(g.data(), a.rows(), c1 - c0);
        tape.accumulate(a, ga);
      });
}

template <typename S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  int rows = parts[0].rows(), total = 0;
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.rows() != rows)
      throw ShapeError("concat_cols: row mismatch " + shape_str(p.shape));
    total += p.cols();
  }
  Tensor<S> out = Tensor<S>::zeros({rows, total});
  int off = 0;
  for (const auto& p : parts) {
    out.mat_mut().middleCols(off, p.cols()) = p.mat();
    off += p.cols();
  }
  std::vector<const Tensor<S>*> ins;
  for (const auto& p : parts) ins.push_back(&p);
  return detail::record<S>(
      out, ins, [parts, rows, total](Tape<S>& tape, const std::vector<S>& g) {
        typename Tensor<S>::CMapM gm(g.data(), rows, total);
        int off = 0;
        for (const auto& p : parts) {
          if (tape.tracks(p)) {
            std::vector<S> gp(p.numel());
            typename Tensor<S>::MapM(gp.data(), rows, p.cols()) =
                gm.middleCols(off, p.cols());
            tape.accumulate(p, gp);
          }
          off += p.cols();
        }
      });
}

// Concatenate 1-D tensors (and scalars) into one 1-D tensor.
template <typename S>
Tensor<S> concat_vec(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_vec: no inputs");
  long total = 0;
  for (const auto& p : parts) {
    if (p.ndim() != 1) throw ShapeError("concat_vec: need 1-D inputs");
    total += p.numel();
  }
  Tensor<S> out = Tensor<S>::zeros({static_cast<int>(total)});
  long off = 0;
  for (const auto& p : parts)
    for (long i = 0; i < p.numel(); ++i) out.at(off++) = p.at(i);
  std::vector<const Tensor<S>*> ins;
  for (const auto& p : parts) ins.push_back(&p);
  return detail::record<S>(
      out, ins, [parts](Tape<S>& tape, const std::vector<S>& g) {
        long off = 0;
        for (const auto& p : parts) {
          if (tape.tracks(p)) {
            std::vector<S> gp(g.begin() + off, g.begin() + off + p.numel());
            tape.accumulate(p, gp);
          }
          off += p.numel();
        }
      });
}

// ---------------------------------------------------------------------------
// Lookup / gather
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, const std::vector<int>& ids) {
  if (table.ndim() != 2) throw ShapeError("embedding_lookup: table not 2-D");
  if (ids.empty()) throw ShapeError("embedding_lookup: empty id list");
  int d = table.cols();
  for (int id : ids)
    if (id < 0 || id >= table.rows())
      throw ContractError("embedding_lookup: id " + std::to_string(id) +
                          " out of range [0," + std::to_string(table.rows()) + ")");
  Tensor<S> out = Tensor<S>::zeros({static_cast<int>(ids.size()), d});
  for (size_t t = 0; t < ids.size(); ++t)
    out.mat_mut().row(static_cast<int>(t)) = table.mat().row(ids[t]);
  return detail::record<S>(
      out, {&table}, [table, ids, d](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> gt(table.numel(), S(0));
        for (size_t t = 0; t < ids.size(); ++t)
          for (int c = 0; c < d; ++c)
            gt[static_cast<size_t>(ids[t]) * d + c] += g[t * d + c];
        tape.accumulate(table, gt);
      });
}

// out[t] = logprobs[t, ids[t]]
template <typename S>
Tensor<S> gather_logprob(const Tensor<S>& logprobs, const std::vector<int>& ids) {
  if (logprobs.ndim() != 2 ||
      static_cast<int>(ids.size()) != logprobs.rows())
    throw ShapeError("gather_logprob: " + shape_str(logprobs.shape) + " with " +
                     std::to_string(ids.size()) + " ids");
  int v = logprobs.cols();
  for (int id : ids)
    if (id < 0 || id >= v)
      throw ContractError("gather_logprob: id out of range");
  Tensor<S> out = Tensor<S>::zeros({static_cast<int>(ids.size())});
  for (size_t t = 0; t < ids.size(); ++t)
    out.at(static_cast<long>(t)) = logprobs.at(static_cast<int>(t), ids[t]);
  return detail::record<S>(
      out, {&logprobs}, [logprobs, ids, v](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> gl(logprobs.numel(), S(0));
        for (size_t t = 0; t < ids.size(); ++t)
          gl[t * v + ids[t]] += g[t];
        tape.accumulate(logprobs, gl);
      });
}

// ---------------------------------------------------------------------------
// Normalizations and reductions
// ---------------------------------------------------------------------------

// Softmax along the last axis (rows of a 2-D tensor; a 1-D tensor is one row).
template <typename S>
Tensor<S> softmax(const Tensor<S>& a) {
  if (a.ndim() < 1 || a.ndim() > 2 || a.shape.back() < 1)
    throw ShapeError("softmax: invalid axis on " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  int rows = a.ndim() == 2 ? a.rows() : 1;
  int cols = a.shape.back();
  for (int r = 0; r < rows; ++r) {
    S mx = a.at(static_cast<long>(r) * cols);
    for (int c = 1; c < cols; ++c) mx = std::max(mx, a.at(static_cast<long>(r) * cols + c));
    S sum = S(0);
    for (int c = 0; c < cols; ++c) {
      S e = std::exp(a.at(static_cast<long>(r) * cols + c) - mx);
      out.at(static_cast<long>(r) * cols + c) = e;
      sum += e;
    }
    for (int c = 0; c < cols; ++c) out.at(static_cast<long>(r) * cols + c) /= sum;
  }
  detail::check_finite(out, "softmax");
  return detail::record<S>(
      out, {&a}, [a, out, rows, cols](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(g.size());
        for (int r = 0; r < rows; ++r) {
          S dot = S(0);
          for (int c = 0; c < cols; ++c)
            dot += g[static_cast<size_t>(r) * cols + c] *
                   out.at(static_cast<long>(r) * cols + c);
          for (int c = 0; c < cols; ++c) {
            size_t i = static_cast<size_t>(r) * cols + c;
            ga[i] = out.at(static_cast<long>(i)) * (g[i] - dot);
          }
        }
        tape.accumulate(a, ga);
      });
}

template <typename S>
Tensor<S> log_softmax(const Tensor<S>& a) {
  if (a.ndim() < 1 || a.ndim() > 2 || a.shape.back() < 1)
    throw ShapeError("log_softmax: invalid axis on " + shape_str(a.shape));
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  int rows = a.ndim() == 2 ? a.rows() : 1;
  int cols = a.shape.back();
  for (int r = 0; r < rows; ++r) {
    S mx = a.at(static_cast<long>(r) * cols);
    for (int c = 1; c < cols; ++c)
      mx = std::max(mx, a.at(static_cast<long>(r) * cols + c));
    S sum = S(0);
    for (int c = 0; c < cols; ++c)
      sum += std::exp(a.at(static_cast<long>(r) * cols + c) - mx);
    S lse = mx + std::log(sum);
    for (int c = 0; c < cols; ++c)
      out.at(static_cast<long>(r) * cols + c) =
          a.at(static_cast<long>(r) * cols + c) - lse;
  }
  return detail::record<S>(
      out, {&a}, [a, out, rows, cols](Tape<S>& tape, const std::vector<S>& g) {
        std::vector<S> ga(g.size());
        for (int r = 0; r < rows; ++r) {
          S gsum = S(0);
          for (int c = 0; c < cols; ++c)
            gsum += g[static_cast<size_t>(r) * cols + c];
          for (int c = 0; c < cols; ++c) {
            size_t i = static_cast<size_t>(r) * cols + c;
            ga[i] = g[i] - std::exp(out.at(static_cast<long>(i))) * gsum;
          }
        }
        tape.accumulate(a, ga);
      });
}

// Per-row layer norm with learned gain and bias over the last axis.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& a, const Tensor<S>& gain,
                     const Tensor<S>& bias, S eps = S(1e-5)) {
  if (a.ndim() != 2 || gain.ndim() != 1 || bias.ndim() != 1 ||
      gain.shape[0] != a.cols() || bias.shape[0] != a.cols())
    throw ShapeError("layer_norm: " + shape_str(a.shape) + " with gain " +
                     shape_str(gain.shape));
  int rows = a.rows(), cols = a.cols();
  Tensor<S> out = Tensor<S>::zeros(a.shape);
  auto xhat = std::make_shared<std::vector<S>>(a.numel());
  auto inv_std = std::make_shared<std::vector<S>>(rows);
  for (int r = 0; r < rows; ++r) {
    S mean = a.mat().row(r).mean();
    S var = S(0);
    for (int c = 0; c < cols; ++c) {
      S d = a.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<S>(cols);
    S istd = S(1) / std::sqrt(var + eps);
    (*inv_std)[r] = istd;
    for (int c = 0; c < cols; ++c) {
      S xh = (a.at(r, c) - mean) * istd;
      (*xhat)[static_cast<size_t>(r) * cols + c] = xh;
      out.at(r, c) = gain.at(c) * xh + bias.at(c);
    }
  }
  detail::check_finite(out, "layer_norm");
  return detail::record<S>(
      out, {&a, &gain, &bias},
      [a, gain, bias, xhat, inv_std, rows, cols](Tape<S>& tape,
                                                 const std::vector<S>& g) {
        if (tape.tracks(a)) {
          std::vector<S> ga(a.numel());
          for (int r = 0; r < rows; ++r) {
            S m1 = S(0), m2 = S(0);
            for (int c = 0; c < cols; ++c) {
              size_t i = static_cast<size_t>(r) * cols + c;
              S gy = g[i] * gain.at(c);
              m1 += gy;
              m2 += gy * (*xhat)[i];
            }
            m1 /= static_cast<S>(cols);
            m2 /= static_cast<S>(cols);
            for (int c = 0; c < cols; ++c) {
              size_t i = static_cast<size_t>(r) * cols + c;
              S gy = g[i] * gain.at(c);
              ga[i] = (gy - m1 - (*xhat)[i] * m2) * (*inv_std)[r];
            }
          }
          tape.accumulate(a, ga);
        }
        if (tape.tracks(gain)) {
          std::vector<S> gg(cols, S(0));
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
              gg[c] += g[static_cast<size_t>(r) * cols + c] *
                       (*xhat)[static_cast<size_t>(r) * cols + c];
          tape.accumulate(gain, gg);
        }
        if (tape.tracks(bias)) {
          std::vector<S> gb(cols, S(0));
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
              gb[c] += g[static_cast<size_t>(r) * cols + c];
          tape.accumulate(bias, gb);
        }
      });
}

template <typename S>
Tensor<S> sum_all(const Tensor<S>& a) {
  S s = S(0);
  for (long i = 0; i < a.numel(); ++i) s += a.at(i);
  Tensor<S> out = Tensor<S>::scalar(s);
  return detail::record<S>(out, {&a},
                           [a](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(a.numel(), g[0]);
                             tape.accumulate(a, ga);
                           });
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& a) {
  S s = S(0);
  for (long i = 0; i < a.numel(); ++i) s += a.at(i);
  S n = static_cast<S>(a.numel());
  Tensor<S> out = Tensor<S>::scalar(s / n);
  return detail::record<S>(out, {&a},
                           [a, n](Tape<S>& tape, const std::vector<S>& g) {
                             std::vector<S> ga(a.numel(), g[0] / n);
                             tape.accumulate(a, ga);
                           });
}

}  // namespace jgr

#endif  // JGR_OPS_HPP_
