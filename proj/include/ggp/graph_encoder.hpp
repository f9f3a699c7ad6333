#pragma once

#include <random>
#include <vector>

#include "ggp/layers.hpp"
#include "ggp/model_config.hpp"
#include "ggp/transition_graph.hpp"

namespace ggp {

inline constexpr double kGatLeakySlope = 0.2;
inline constexpr double kEdgeBiasEps = 1e-6;

/// Attention coefficients indexed [layer][head]; each n x n, zero outside the mask.
using AttentionMaps = std::vector<std::vector<Matrix>>;

/// Additive logit bias log(m_ij + eps) on masked-in off-diagonal edges, 0 elsewhere.
Matrix edge_logit_bias(const RelationMatrix& rel);

/// Stacked masked graph attention. Per layer and head:
///   e_ij = LeakyReLU(a_src . W h_i + a_dst . W h_j) [+ edge bias],
///   alpha_i = softmax over the masked neighbours of i,
///   h'_i = ELU(sum_j alpha_ij W h_j);
/// heads are concatenated and projected back to d.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng);

  /// `attention`, when given, receives the coefficients of every layer and head.
  ad::Var encode(ad::Tape& tape, const ad::ParameterStore& store, const RelationMatrix& rel,
                 ad::Var node_feats, AttentionMaps* attention = nullptr) const;

  AttentionMaps attention_weights(const ad::ParameterStore& store, const RelationMatrix& rel,
                                  const Matrix& node_feats) const;

  struct Layer {
    int weight = -1;
    int attn_src = -1;
    int attn_dst = -1;
    nn::Linear out;
  };
  const std::vector<Layer>& layers() const { return layers_; }
  int heads() const { return config_.gat_heads; }
  bool uses_edge_bias() const { return config_.edge_bias; }

 private:
  ModelConfig config_;
  std::vector<Layer> layers_;
};

}  // namespace ggp
