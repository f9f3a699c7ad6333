#include "ggp/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "ggp/error.hpp"

namespace ggp::ad {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, what);
}

}  // namespace

// ---- ParameterStore / Gradients --------------------------------------------

int ParameterStore::add(const std::string& name, Matrix init) {
  if (index_.count(name)) throw Error(ErrorKind::kConfigInvalid, "duplicate parameter " + name);
  const int id = static_cast<int>(params_.size());
  params_.push_back({name, std::move(init)});
  index_.emplace(name, id);
  return id;
}

int ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorKind::kFormat, "unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

double ParameterStore::get_scalar(std::size_t flat_index) const {
  for (const auto& p : params_) {
    const auto sz = static_cast<std::size_t>(p.value.size());
    if (flat_index < sz) return p.value.data()[flat_index];
    flat_index -= sz;
  }
  throw Error(ErrorKind::kShapeMismatch, "flat parameter index out of range");
}

void ParameterStore::set_scalar(std::size_t flat_index, double v) {
  for (auto& p : params_) {
    const auto sz = static_cast<std::size_t>(p.value.size());
    if (flat_index < sz) {
      p.value.data()[flat_index] = v;
      return;
    }
    flat_index -= sz;
  }
  throw Error(ErrorKind::kShapeMismatch, "flat parameter index out of range");
}

Gradients::Gradients(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (const auto& p : store) grads_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
}

void Gradients::zero() {
  for (auto& g : grads_) g.setZero();
}

void Gradients::add(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += scale * other.grads_[i];
}

void Gradients::scale(double s) {
  for (auto& g : grads_) g *= s;
}

double Gradients::get_scalar(std::size_t flat_index) const {
  for (const auto& g : grads_) {
    const auto sz = static_cast<std::size_t>(g.size());
    if (flat_index < sz) return g.data()[flat_index];
    flat_index -= sz;
  }
  throw Error(ErrorKind::kShapeMismatch, "flat gradient index out of range");
}

bool Gradients::all_finite() const {
  for (const auto& g : grads_) {
    if (!g.allFinite()) return false;
  }
  return true;
}

// ---- Tape ---------------------------------------------------------------------

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(const ParameterStore& store, int index) {
  Node n;
  n.external = &store[static_cast<std::size_t>(index)].value;
  n.param_index = index;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

Var Tape::push(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return push(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      assert(p.tape() == this);
      n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(p.id())].needs_grad;
    }
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var loss, Gradients& out) {
  require(record_, "backward on a non-recording tape");
  require(loss.rows() == 1 && loss.cols() == 1, "backward needs a scalar loss");
  if (!nodes_[loss.id()].needs_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param_index >= 0) out[static_cast<std::size_t>(n.param_index)] += n.grad;
  }
}

// ---- ops ------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value().transpose(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib));
    if (t.needs_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shapes differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: bias shape");
  Tape& t = *a.tape();
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.push(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    if (t.needs_grad(ir)) t.accumulate(ir, t.grad(self).colwise().sum());
  });
}

Var outer_sum(Var col_a, Var col_b) {
  require(col_a.cols() == 1 && col_b.cols() == 1, "outer_sum: expects columns");
  Tape& t = *col_a.tape();
  const int ia = col_a.id(), ib = col_b.id();
  Matrix out = col_a.value().replicate(1, col_b.rows()).rowwise() +
               col_b.value().col(0).transpose();
  return t.push(std::move(out), {col_a, col_b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.rowwise().sum());
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum().transpose());
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value() * s, {a}, [ia, s](Tape& t, int self) { t.accumulate(ia, t.grad(self) * s); });
}

Var hadamard(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shapes differ");
  Tape& t = *a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var gelu(Var a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kK = 0.044715;
  Tape& t = *a.tape();
  const int ia = a.id();
  const Matrix& x = a.value();
  Matrix out = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kC * (v + kK * v * v * v))); });
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& x = t.value(ia);
    Matrix d = x.unaryExpr([](double v) {
      const double th = std::tanh(kC * (v + kK * v * v * v));
      return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kC * (1.0 + 3.0 * kK * v * v);
    });
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

Var elu(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    Matrix d = t.value(ia).unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return t.push(std::move(out), {a}, [ia, slope](Tape& t, int self) {
    Matrix d = t.value(ia).unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  Matrix out = a.value().array().tanh().matrix();
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(ia, t.grad(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: gain shape");
  require(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bias shape");
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  const Eigen::Index rows = xv.rows(), cols = xv.cols();
  Matrix xhat(rows, cols);
  Vector inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.push(std::move(out), {x, gain, bias},
                [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                  if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
                  if (!t.needs_grad(ix)) return;
                  Matrix dxhat = (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
                  Matrix dx(dxhat.rows(), dxhat.cols());
                  for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                    const double m1 = dxhat.row(r).mean();
                    const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                    dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
                  }
                  t.accumulate(ix, dx);
                });
}

Matrix softmax_rows(const Matrix& a, const BoolMatrix* mask) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false, finite = true;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (!mask || (*mask)(r, c)) {
        any = true;
        finite = finite && std::isfinite(a(r, c));
        mx = std::max(mx, a(r, c));
      }
    }
    if (!any) throw Error(ErrorKind::kShapeMismatch, "softmax row has no admissible entry");
    // Non-finite logits propagate as NaN so callers can report them.
    if (!finite) {
      out.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (!mask || (*mask)(r, c)) {
        out(r, c) = std::exp(a(r, c) - mx);
        total += out(r, c);
      }
    }
    out.row(r) /= total;
  }
  return out;
}

Var softmax_rows(Var a, const BoolMatrix* mask) {
  if (mask) require(mask->rows() == a.rows() && mask->cols() == a.cols(), "softmax: mask shape");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(softmax_rows(a.value(), mask), {a}, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Vector dots = g.cwiseProduct(y).rowwise().sum();
    t.accumulate(ia, (y.array() * (g.colwise() - dots).array()).matrix());
  });
}

Var cross_entropy(Var logits, std::span<const int> targets, const BoolMatrix* mask) {
  require(static_cast<Eigen::Index>(targets.size()) == logits.rows(), "cross_entropy: target count");
  if (mask) require(mask->rows() == logits.rows() && mask->cols() == logits.cols(), "cross_entropy: mask shape");
  Tape& t = *logits.tape();
  Matrix probs = softmax_rows(logits.value(), mask);
  const auto rows = static_cast<double>(targets.size());
  double loss = 0.0;
  std::vector<int> tg(targets.begin(), targets.end());
  for (std::size_t r = 0; r < tg.size(); ++r) {
    require(tg[r] >= 0 && tg[r] < logits.cols(), "cross_entropy: target out of range");
    loss -= std::log(probs(static_cast<Eigen::Index>(r), tg[r]));
  }
  const int il = logits.id();
  return t.push(Matrix::Constant(1, 1, loss / rows), {logits},
                [il, probs = std::move(probs), tg = std::move(tg), rows](Tape& t, int self) {
                  Matrix d = probs;
                  for (std::size_t r = 0; r < tg.size(); ++r) d(static_cast<Eigen::Index>(r), tg[r]) -= 1.0;
                  t.accumulate(il, d * (t.grad(self)(0, 0) / rows));
                });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  Tape& t = *parts.front().tape();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == parts.front().rows(), "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(parts.front().rows(), cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.cols();
  }
  return t.push(std::move(out), std::span<const Var>(parts), [spans = std::move(spans)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (const auto& [id, start] : spans) {
      if (t.needs_grad(id)) t.accumulate(id, g.middleCols(start, t.value(id).cols()));
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no parts");
  Tape& t = *parts.front().tape();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == parts.front().cols(), "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, parts.front().cols());
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.rows();
  }
  return t.push(std::move(out), std::span<const Var>(parts), [spans = std::move(spans)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    for (const auto& [id, start] : spans) {
      if (t.needs_grad(id)) t.accumulate(id, g.middleRows(start, t.value(id).rows()));
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index width) {
  require(start >= 0 && width > 0 && start + width <= a.cols(), "slice_cols: range");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().middleCols(start, width), {a}, [ia, start, width](Tape& t, int self) {
    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
    d.middleCols(start, width) = t.grad(self);
    t.accumulate(ia, d);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index height) {
  require(start >= 0 && height > 0 && start + height <= a.rows(), "slice_rows: range");
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().middleRows(start, height), {a}, [ia, start, height](Tape& t, int self) {
    Matrix d = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
    d.middleRows(start, height) = t.grad(self);
    t.accumulate(ia, d);
  });
}

Var gather_rows(Var table, std::span<const int> rows) {
  Tape& t = *table.tape();
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < tv.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = tv.row(rows[r]);
  }
  const int it = table.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {table}, [it, idx = std::move(idx)](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Matrix d = Matrix::Zero(t.value(it).rows(), t.value(it).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) d.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(it, d);
  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(a.value().colwise().mean(), {a}, [ia](Tape& t, int self) {
    const double n = static_cast<double>(t.value(ia).rows());
    t.accumulate(ia, t.grad(self).replicate(t.value(ia).rows(), 1) / n);
  });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  const int ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia](Tape& t, int self) {
    t.accumulate(ia, Matrix::Constant(t.value(ia).rows(), t.value(ia).cols(), t.grad(self)(0, 0)));
  });
}

}  // namespace ggp::ad
