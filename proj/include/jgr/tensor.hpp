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

#ifndef JGR_TENSOR_HPP_
#define JGR_TENSOR_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jgr {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

template <typename S>
class Tape;

// Dense row-major tensor. Copies are shallow (shared storage); deep copies go
// through clone(). A tensor is a gradient leaf when requires_grad is set, in
// which case grad holds the accumulated gradient buffer. Intermediate values
// produced under an active tape carry the index of their tape node instead.
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<S>> data;
  bool requires_grad = false;
  std::shared_ptr<std::vector<S>> grad;  // leaves only
  int node = -1;                         // tape node of this value, -1 = none
  uint64_t tape_id = 0;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::make_shared<std::vector<S>>(numel_of(t.shape), S(0));
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<S> values) {
    if (numel_of(shape) != static_cast<long>(values.size()))
      throw ShapeError("tensor init: " + shape_str(shape) + " vs " +
                       std::to_string(values.size()) + " values");
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::make_shared<std::vector<S>>(std::move(values));
    return t;
  }

  static Tensor scalar(S v) { return from({1}, {v}); }

  static long numel_of(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) {
      if (d <= 0) throw ShapeError("nonpositive dim in " + shape_str(shape));
      n *= d;
    }
    return n;
  }

  long numel() const { return static_cast<long>(data->size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const {
    if (ndim() != 2) throw ShapeError("cols() on " + shape_str(shape));
    return shape[1];
  }
  S item() const {
    if (numel() != 1) throw ContractError("item() on " + shape_str(shape));
    return (*data)[0];
  }

  S& at(long i) { return (*data)[i]; }
  S at(long i) const { return (*data)[i]; }
  S& at(int r, int c) { return (*data)[static_cast<long>(r) * cols() + c]; }
  S at(int r, int c) const {
    return (*data)[static_cast<long>(r) * cols() + c];
  }

  void mark_parameter() {
    requires_grad = true;
    grad = std::make_shared<std::vector<S>>(data->size(), S(0));
  }

  void zero_grad() {
    if (grad) std::fill(grad->begin(), grad->end(), S(0));
  }

  Tensor clone() const {
    Tensor t;
    t.shape = shape;
    t.data = std::make_shared<std::vector<S>>(*data);
    return t;
  }

  using Mat =
      Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  // 2-D Eigen view; 1-D tensors map as a single row.
  CMapM mat() const {
    if (ndim() == 1) return CMapM(data->data(), 1, shape[0]);
    if (ndim() != 2) throw ShapeError("mat() on " + shape_str(shape));
    return CMapM(data->data(), shape[0], shape[1]);
  }
  MapM mat_mut() {
    if (ndim() == 1) return MapM(data->data(), 1, shape[0]);
    if (ndim() != 2) throw ShapeError("mat() on " + shape_str(shape));
    return MapM(data->data(), shape[0], shape[1]);
  }
};

// Reverse-mode tape. Nodes are appended in execution order, so a reverse
// sweep is a valid topological traversal. Node gradients live on the tape;
// leaf gradients accumulate into the leaf tensors' own buffers.
template <typename S>
class Tape {
 public:
  struct Node {
    std::vector<S> grad;  // d(loss)/d(node output)
    std::function<void(Tape&, const std::vector<S>&)> backward;
  };

  Tape() : id_(next_id()++) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  uint64_t id() const { return id_; }
  size_t size() const { return nodes_.size(); }
  Node& node(int i) { return nodes_[i]; }

  int add_node(long numel,
               std::function<void(Tape&, const std::vector<S>&)> backward) {
    nodes_.push_back(Node{std::vector<S>(numel, S(0)), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  static Tape*& active() {
    thread_local Tape* t = nullptr;
    return t;
  }

  // True when gradients should flow out of this tensor on this tape.
  bool tracks(const Tensor<S>& t) const {
    return (t.node >= 0 && t.tape_id == id_) || (t.requires_grad && t.grad);
  }

  void accumulate(const Tensor<S>& t, const std::vector<S>& g) {
    if (t.node >= 0 && t.tape_id == id_) {
      auto& dst = nodes_[t.node].grad;
      for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    } else if (t.requires_grad && t.grad) {
      auto& dst = *t.grad;
      for (size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }
  }

  // Backpropagate from a scalar loss recorded on this tape.
  void backward(const Tensor<S>& loss) {
    if (loss.numel() != 1) throw ContractError("backward on non-scalar loss");
    if (loss.node < 0 || loss.tape_id != id_)
      throw ContractError("backward: loss not recorded on this tape");
    if (nodes_.empty()) throw ContractError("backward on empty tape");
    nodes_[loss.node].grad[0] = S(1);
    for (int i = loss.node; i >= 0; --i) {
      if (!nodes_[i].backward) continue;
      bool nonzero = false;
      for (S g : nodes_[i].grad)
        if (g != S(0)) {
          nonzero = true;
          break;
        }
      if (nonzero) nodes_[i].backward(*this, nodes_[i].grad);
    }
  }

 private:
  static uint64_t& next_id() {
    static uint64_t id = 1;
    return id;
  }
  std::vector<Node> nodes_;
  uint64_t id_;
};

// Scoped activation of a tape. Ops record nodes only while a tape is active,
// so evaluation-mode code simply runs outside any guard.
template <typename S>
class TapeGuard {
 public:
  explicit TapeGuard(Tape<S>& tape) : prev_(Tape<S>::active()) {
    Tape<S>::active() = &tape;
  }
  ~TapeGuard() { Tape<S>::active() = prev_; }
  TapeGuard(const TapeGuard&) = delete;

 private:
  Tape<S>* prev_;
};

}  // namespace jgr

#endif  // JGR_TENSOR_HPP_
