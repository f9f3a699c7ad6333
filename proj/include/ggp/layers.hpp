#pragma once

#include <random>
#include <string>

#include "ggp/autodiff.hpp"

namespace ggp::nn {

using ad::ParameterStore;
using ad::Tape;
using ad::Var;

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
Matrix normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng);

/// x W + b, with W stored in x n_out.
struct Linear {
  int weight = -1;
  int bias = -1;

  static Linear create(ParameterStore& store, const std::string& name, int in, int out,
                       std::mt19937_64& rng, bool with_bias = true);
  Var operator()(Tape& tape, const ParameterStore& store, Var x) const;
};

struct LayerNorm {
  int gain = -1;
  int bias = -1;

  static LayerNorm create(ParameterStore& store, const std::string& name, int width);
  Var operator()(Tape& tape, const ParameterStore& store, Var x) const;
};

/// Multi-head scaled dot-product attention. Projections are applied by the
/// caller so cached keys/values can be reused during incremental decoding.
struct MultiHeadAttention {
  Linear query, key, value, out;
  int heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name, int d, int heads,
                                   std::mt19937_64& rng);
  /// q: m x d, k/v: s x d (already projected); mask: m x s or null.
  Var attend(Tape& tape, const ParameterStore& store, Var q, Var k, Var v,
             const BoolMatrix* mask) const;
};

struct FeedForward {
  Linear inner, outer;

  static FeedForward create(ParameterStore& store, const std::string& name, int d, int hidden,
                            std::mt19937_64& rng);
  Var operator()(Tape& tape, const ParameterStore& store, Var x) const;
};

/// Pre-norm transformer encoder layer.
struct EncoderLayer {
  LayerNorm norm_attn, norm_ffn;
  MultiHeadAttention attn;
  FeedForward ffn;

  static EncoderLayer create(ParameterStore& store, const std::string& name, int d, int heads,
                             int ffn_hidden, std::mt19937_64& rng);
  Var operator()(Tape& tape, const ParameterStore& store, Var x, const BoolMatrix* mask) const;
};

}  // namespace ggp::nn
