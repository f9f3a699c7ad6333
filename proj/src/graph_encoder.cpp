#include "ggp/graph_encoder.hpp"

#include <cmath>
#include <optional>

#include "ggp/error.hpp"

namespace ggp {

Matrix edge_logit_bias(const RelationMatrix& rel) {
  const auto n = static_cast<Eigen::Index>(rel.size());
  Matrix bias = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && rel.mask(i, j)) bias(i, j) = std::log(rel.weights(i, j) + kEdgeBiasEps);
    }
  }
  return bias;
}

GraphEncoder::GraphEncoder(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng)
    : config_(config) {
  const int d = config.d;
  const int width = d / config.gat_heads;
  for (int l = 0; l < config.gat_layers; ++l) {
    const std::string name = "gat.layer" + std::to_string(l);
    Layer layer;
    layer.weight = store.add(name + ".weight", nn::xavier_uniform(d, d, rng));
    layer.attn_src = store.add(name + ".attn_src", nn::xavier_uniform(1, d, rng) * std::sqrt(1.0 / width));
    layer.attn_dst = store.add(name + ".attn_dst", nn::xavier_uniform(1, d, rng) * std::sqrt(1.0 / width));
    layer.out = nn::Linear::create(store, name + ".out", d, d, rng);
    layers_.push_back(layer);
  }
}

ad::Var GraphEncoder::encode(ad::Tape& tape, const ad::ParameterStore& store, const RelationMatrix& rel,
                             ad::Var node_feats, AttentionMaps* attention) const {
  const auto n = static_cast<Eigen::Index>(rel.size());
  if (node_feats.rows() != n || node_feats.cols() != config_.d) {
    throw Error(ErrorKind::kShapeMismatch, "node features must be n x d");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!rel.mask(i, i)) throw Error(ErrorKind::kShapeMismatch, "relation mask is missing a self-loop");
  }
  const int heads = config_.gat_heads;
  const Eigen::Index width = config_.d / heads;
  std::optional<ad::Var> bias;
  if (config_.edge_bias) bias = tape.constant(edge_logit_bias(rel));
  if (attention) attention->assign(layers_.size(), {});

  ad::Var h = node_feats;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    ad::Var projected = ad::matmul(h, tape.param(store, layer.weight));
    ad::Var a_src = tape.param(store, layer.attn_src);
    ad::Var a_dst = tape.param(store, layer.attn_dst);
    std::vector<ad::Var> outs;
    for (int hd = 0; hd < heads; ++hd) {
      ad::Var ph = heads == 1 ? projected : ad::slice_cols(projected, hd * width, width);
      ad::Var src = ad::matmul_nt(ph, heads == 1 ? a_src : ad::slice_cols(a_src, hd * width, width));
      ad::Var dst = ad::matmul_nt(ph, heads == 1 ? a_dst : ad::slice_cols(a_dst, hd * width, width));
      ad::Var logits = ad::leaky_relu(ad::outer_sum(src, dst), kGatLeakySlope);
      if (bias) logits = ad::add(logits, *bias);
      ad::Var alpha = ad::softmax_rows(logits, &rel.mask);
      if (attention) (*attention)[l].push_back(alpha.value());
      outs.push_back(ad::elu(ad::matmul(alpha, ph)));
    }
    h = layer.out(tape, store, heads == 1 ? outs.front() : ad::concat_cols(outs));
  }
  return h;
}

AttentionMaps GraphEncoder::attention_weights(const ad::ParameterStore& store, const RelationMatrix& rel,
                                              const Matrix& node_feats) const {
  ad::Tape tape(false);
  AttentionMaps maps;
  encode(tape, store, rel, tape.constant(node_feats), &maps);
  return maps;
}

}  // namespace ggp
