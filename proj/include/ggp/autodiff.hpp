#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation applied to its Vars; backward() walks the
// records in reverse and accumulates gradients into a Gradients buffer that is
// aligned with a ParameterStore. Tapes are single-threaded; independent tapes
// can run concurrently against the same (immutable) ParameterStore.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ggp/tensor.hpp"

namespace ggp::ad {

struct Parameter {
  std::string name;
  Matrix value;
};

/// Named parameter tensors in registration order. The order is part of the
/// checkpoint contract and of every flattened view.
class ParameterStore {
 public:
  int add(const std::string& name, Matrix init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  int index_of(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t scalar_count() const;
  double get_scalar(std::size_t flat_index) const;
  void set_scalar(std::size_t flat_index, double v);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, int> index_;
};

/// Gradient buffers aligned with a ParameterStore.
class Gradients {
 public:
  explicit Gradients(const ParameterStore& store);

  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const Gradients& other, double scale = 1.0);
  void scale(double s);
  double get_scalar(std::size_t flat_index) const;
  bool all_finite() const;

 private:
  std::vector<Matrix> grads_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// With `record == false` no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  /// Leaf bound to store[index]; the value is referenced, not copied.
  Var param(const ParameterStore& store, int index);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 Var and accumulates parameter gradients into `out`.
  void backward(Var loss, Gradients& out);

  std::size_t node_count() const { return nodes_.size(); }

  // Plumbing used by the op implementations.
  using Backward = std::function<void(Tape&, int self)>;
  Var push(Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var push(Matrix value, std::span<const Var> parents, Backward backward);
  const Matrix& value(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  /// grad(id) += delta, allocating on first use. No-op for nodes without gradient.
  template <typename Expr>
  void accumulate(int id, const Expr& delta) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward backward;
    int param_index = -1;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool record_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// ---- operations ---------------------------------------------------------

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1 x c row to every row of a.
Var add_row(Var a, Var row);
/// out(i, j) = col_a(i) + col_b(j) for n x 1 columns.
Var outer_sum(Var col_a, Var col_b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);

Var gelu(Var a);
Var elu(Var a);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);

/// Row-wise layer normalization with 1 x c gain and bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Row-wise softmax. Where `mask` is false the output is exactly zero; every row
/// must keep at least one entry.
Var softmax_rows(Var a, const BoolMatrix* mask = nullptr);

/// Mean over rows of -log softmax(logits)[row, target[row]], with the softmax
/// restricted to `mask` when given. Returns a 1 x 1 Var.
Var cross_entropy(Var logits, std::span<const int> targets, const BoolMatrix* mask = nullptr);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index width);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index height);
Var gather_rows(Var table, std::span<const int> rows);
Var mean_rows(Var a);
Var sum_all(Var a);

// ---- numerics shared with non-taped code ------------------------------------

/// Row-wise softmax on plain matrices; masked entries are zero.
Matrix softmax_rows(const Matrix& a, const BoolMatrix* mask = nullptr);

}  // namespace ggp::ad
