#include "ggp/layers.hpp"

#include <cmath>

namespace ggp::nn {

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

Linear Linear::create(ParameterStore& store, const std::string& name, int in, int out,
                      std::mt19937_64& rng, bool with_bias) {
  Linear l;
  l.weight = store.add(name + ".weight", xavier_uniform(in, out, rng));
  if (with_bias) l.bias = store.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::operator()(Tape& tape, const ParameterStore& store, Var x) const {
  Var y = ad::matmul(x, tape.param(store, weight));
  return bias >= 0 ? ad::add_row(y, tape.param(store, bias)) : y;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, int width) {
  return {store.add(name + ".gain", Matrix::Ones(1, width)),
          store.add(name + ".bias", Matrix::Zero(1, width))};
}

Var LayerNorm::operator()(Tape& tape, const ParameterStore& store, Var x) const {
  return ad::layer_norm(x, tape.param(store, gain), tape.param(store, bias));
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name, int d,
                                              int heads, std::mt19937_64& rng) {
  MultiHeadAttention m;
  m.query = Linear::create(store, name + ".query", d, d, rng);
  m.key = Linear::create(store, name + ".key", d, d, rng);
  m.value = Linear::create(store, name + ".value", d, d, rng);
  m.out = Linear::create(store, name + ".out", d, d, rng);
  m.heads = heads;
  return m;
}

Var MultiHeadAttention::attend(Tape& tape, const ParameterStore& store, Var q, Var k, Var v,
                               const BoolMatrix* mask) const {
  const Eigen::Index width = q.cols() / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(width));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : ad::slice_cols(q, h * width, width);
    Var kh = heads == 1 ? k : ad::slice_cols(k, h * width, width);
    Var vh = heads == 1 ? v : ad::slice_cols(v, h * width, width);
    Var weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt), mask);
    outs.push_back(ad::matmul(weights, vh));
  }
  Var joined = heads == 1 ? outs.front() : ad::concat_cols(outs);
  return out(tape, store, joined);
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& name, int d, int hidden,
                                std::mt19937_64& rng) {
  return {Linear::create(store, name + ".inner", d, hidden, rng),
          Linear::create(store, name + ".outer", hidden, d, rng)};
}

Var FeedForward::operator()(Tape& tape, const ParameterStore& store, Var x) const {
  return outer(tape, store, ad::gelu(inner(tape, store, x)));
}

EncoderLayer EncoderLayer::create(ParameterStore& store, const std::string& name, int d, int heads,
                                  int ffn_hidden, std::mt19937_64& rng) {
  EncoderLayer l;
  l.norm_attn = LayerNorm::create(store, name + ".norm_attn", d);
  l.attn = MultiHeadAttention::create(store, name + ".attn", d, heads, rng);
  l.norm_ffn = LayerNorm::create(store, name + ".norm_ffn", d);
  l.ffn = FeedForward::create(store, name + ".ffn", d, ffn_hidden, rng);
  return l;
}

Var EncoderLayer::operator()(Tape& tape, const ParameterStore& store, Var x,
                             const BoolMatrix* mask) const {
  Var h = norm_attn(tape, store, x);
  Var attended = attn.attend(tape, store, attn.query(tape, store, h), attn.key(tape, store, h),
                             attn.value(tape, store, h), mask);
  x = ad::add(x, attended);
  return ad::add(x, ffn(tape, store, norm_ffn(tape, store, x)));
}

}  // namespace ggp::nn
