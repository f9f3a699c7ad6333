#pragma once

#include <cstddef>

#include <json.hpp>

namespace ggp {

/// Dimensions and ablation switches for the full planner.
struct ModelConfig {
  int d = 64;
  int layers = 2;
  int heads = 2;
  int ffn_mult = 2;
  int gat_layers = 2;
  int gat_heads = 2;
  int max_phrase_len = 8;
  int max_phrases = 64;
  /// Decoder position table size; decoding never runs longer than this.
  int max_decode_steps = 4 * 64 + 1;

  bool use_graph = true;
  bool use_copy_decoder = true;
  /// Bias GAT logits by log(m_ij + eps) on corpus edges.
  bool edge_bias = true;
  /// Learned phrase-position encodings in the collection-level encoder.
  bool collection_positions = true;

  /// Throws kConfigInvalid on non-positive dims or heads that do not divide d.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace ggp
