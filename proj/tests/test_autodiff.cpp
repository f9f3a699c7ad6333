#include <doctest.h>

#include <random>

#include "ggp/autodiff.hpp"
#include "ggp/layers.hpp"
#include "gradcheck.hpp"

using namespace ggp;
using namespace ggp::ad;

namespace {

Matrix rand_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Sum of the op's output weighted by a fixed random matrix, so every output
// entry carries a distinct gradient.
Var weighted(Var out, const Matrix& w) { return sum_all(hadamard(out, out.tape()->constant(w))); }

void check_op(const std::function<Var(Tape&, Var, Var)>& op, Eigen::Index ar, Eigen::Index ac, Eigen::Index br,
              Eigen::Index bc, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  ParameterStore store;
  const int a = store.add("a", rand_matrix(rng, ar, ac));
  const int b = store.add("b", rand_matrix(rng, br, bc));
  Matrix w;
  auto loss = [&](Tape& t) {
    Var out = op(t, t.param(store, a), t.param(store, b));
    if (w.size() == 0) w = rand_matrix(rng, out.rows(), out.cols());
    return weighted(out, w);
  };
  const auto r = testing::check_gradients(store, loss);
  CHECK(r.failures == 0);
}

}  // namespace

TEST_CASE("elementwise and linear ops") {
  check_op([](Tape&, Var a, Var b) { return matmul(a, b); }, 3, 4, 4, 2);
  check_op([](Tape&, Var a, Var b) { return matmul_nt(a, b); }, 3, 4, 5, 4);
  check_op([](Tape&, Var a, Var b) { return add(a, b); }, 3, 4, 3, 4);
  check_op([](Tape&, Var a, Var b) { return sub(a, b); }, 3, 4, 3, 4);
  check_op([](Tape&, Var a, Var b) { return add_row(a, b); }, 3, 4, 1, 4);
  check_op([](Tape&, Var a, Var b) { return outer_sum(a, b); }, 3, 1, 3, 1);
  check_op([](Tape&, Var a, Var b) { return hadamard(a, b); }, 3, 4, 3, 4);
  check_op([](Tape&, Var a, Var b) { return scale(add(a, b), -2.5); }, 2, 2, 2, 2);
}

TEST_CASE("nonlinearities") {
  check_op([](Tape&, Var a, Var) { return gelu(a); }, 4, 5, 1, 1);
  check_op([](Tape&, Var a, Var) { return elu(a); }, 4, 5, 1, 1, 2);
  check_op([](Tape&, Var a, Var) { return leaky_relu(a, 0.2); }, 4, 5, 1, 1, 3);
  check_op([](Tape&, Var a, Var) { return ad::tanh(a); }, 4, 5, 1, 1);
}

TEST_CASE("normalization and softmax") {
  check_op([](Tape& t, Var a, Var b) { return layer_norm(a, b, t.constant(Matrix::Constant(1, 5, 0.3))); }, 4, 5, 1, 5);
  check_op([](Tape&, Var a, Var) { return softmax_rows(a); }, 3, 6, 1, 1);
  static BoolMatrix mask = [] {
    BoolMatrix m = BoolMatrix::Constant(3, 6, true);
    m(0, 1) = m(0, 4) = m(2, 0) = false;
    return m;
  }();
  check_op([](Tape&, Var a, Var) { return softmax_rows(a, &mask); }, 3, 6, 1, 1);
  check_op([](Tape&, Var a, Var) { return cross_entropy(a, std::vector<int>{2, 0, 5}); }, 3, 6, 1, 1);
  check_op([](Tape&, Var a, Var) { return cross_entropy(a, std::vector<int>{2, 3, 5}, &mask); }, 3, 6, 1, 1);
}

TEST_CASE("structural ops") {
  check_op([](Tape&, Var a, Var b) { return concat_cols({a, b, a}); }, 3, 2, 3, 4);
  check_op([](Tape&, Var a, Var b) { return concat_rows({b, a}); }, 2, 3, 4, 3);
  check_op([](Tape&, Var a, Var) { return slice_cols(a, 1, 2); }, 3, 4, 1, 1);
  check_op([](Tape&, Var a, Var) { return slice_rows(a, 1, 2); }, 4, 3, 1, 1);
  check_op([](Tape&, Var a, Var) { return gather_rows(a, std::vector<int>{2, 0, 2}); }, 4, 3, 1, 1);
  check_op([](Tape&, Var a, Var) { return mean_rows(a); }, 4, 3, 1, 1);
}

TEST_CASE("masked softmax zeros and normalization") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng() % 6), c = 1 + static_cast<Eigen::Index>(rng() % 6);
    BoolMatrix mask(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) mask(i, j) = rng() % 2 == 0;
      mask(i, static_cast<Eigen::Index>(rng() % static_cast<unsigned>(c))) = true;
    }
    const Matrix p = softmax_rows(Matrix(30.0 * rand_matrix(rng, r, c)), &mask);
    for (Eigen::Index i = 0; i < r; ++i) {
      CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (Eigen::Index j = 0; j < c; ++j) {
        if (!mask(i, j)) CHECK(p(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("parameter reuse accumulates gradients") {
  ParameterStore store;
  const int a = store.add("a", Matrix::Constant(1, 1, 3.0));
  Gradients g(store);
  Tape t;
  Var x = t.param(store, a);
  t.backward(sum_all(hadamard(x, x)), g);
  CHECK(g[0](0, 0) == doctest::Approx(6.0));
}

TEST_CASE("multi-head attention gradients") {
  std::mt19937_64 rng(12);
  ParameterStore store;
  const auto mha = nn::MultiHeadAttention::create(store, "mha", 8, 2, rng);
  const int xq = store.add("xq", rand_matrix(rng, 3, 8));
  const int xk = store.add("xk", rand_matrix(rng, 4, 8));
  BoolMatrix mask = BoolMatrix::Constant(3, 4, true);
  mask(0, 3) = false;
  const Matrix w = rand_matrix(rng, 3, 8);
  auto loss = [&](Tape& t) {
    Var q = t.param(store, xq), k = t.param(store, xk);
    return weighted(mha.attend(t, store, q, k, k, &mask), w);
  };
  CHECK(testing::check_gradients(store, loss).failures == 0);
}

TEST_CASE("store flattening") {
  ParameterStore store;
  store.add("a", Matrix::Zero(2, 2));
  store.add("b", Matrix::Zero(1, 3));
  CHECK(store.scalar_count() == 7);
  store.set_scalar(5, 4.0);
  CHECK(store[1].value(0, 1) == 4.0);
  CHECK(store.index_of("b") == 1);
  CHECK_THROWS(store.add("a", Matrix::Zero(1, 1)));
}
