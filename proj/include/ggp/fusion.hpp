#pragma once

#include <optional>
#include <random>

#include "ggp/layers.hpp"
#include "ggp/model_config.hpp"

namespace ggp {

/// Row-wise two-layer MLP over [graph_repr ; seq_repr] (2d -> d -> d). With
/// `use_graph` off the same MLP reads seq_repr alone (d -> d -> d).
class Fusion {
 public:
  Fusion() = default;
  Fusion(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng);

  /// `graph_repr` is ignored (and may be empty) when the graph path is disabled.
  ad::Var fuse(ad::Tape& tape, const ad::ParameterStore& store, std::optional<ad::Var> graph_repr,
               ad::Var seq_repr) const;

  bool uses_graph() const { return use_graph_; }

 private:
  bool use_graph_ = true;
  int d_ = 0;
  nn::Linear hidden_;
  nn::Linear out_;
};

}  // namespace ggp
