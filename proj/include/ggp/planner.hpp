#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ggp/fusion.hpp"
#include "ggp/graph_encoder.hpp"
#include "ggp/grouping_decoder.hpp"
#include "ggp/seq_encoder.hpp"
#include "ggp/transition_graph.hpp"

namespace ggp {

/// Per-sample inputs derived once: token ids and the relation matrix.
struct PreparedSample {
  const PhraseCollection* collection = nullptr;
  const Plan* plan = nullptr;
  std::vector<std::vector<int>> token_ids;
  RelationMatrix rel;
};

/// Representations at each stage, as plain values.
struct EncodedMemory {
  Matrix phrase_vecs;  // p^s, n x d
  Matrix seq;          // c^s, n x d
  Matrix graph;        // c^g, n x d (empty without the graph path)
  Matrix fused;        // m, n x d
};

/// The graph-based grouping planner: sequential encoder, GAT over the corpus
/// subgraph, fusion MLP, and the grouping copy decoder.
class PlannerModel {
 public:
  /// `surface_vocab` (sorted) is only used when the copy decoder is ablated.
  PlannerModel(const ModelConfig& config, TokenVocab tokens, std::vector<std::string> surface_vocab,
               std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const TokenVocab& tokens() const { return tokens_; }
  const std::vector<std::string>& surface_vocab() const { return decoder_.surface_vocab(); }
  ad::ParameterStore& params() { return store_; }
  const ad::ParameterStore& params() const { return store_; }

  const SequentialEncoder& seq_encoder() const { return seq_; }
  const GraphEncoder& graph_encoder() const { return gat_; }
  const Fusion& fusion() const { return fusion_; }
  const GroupingDecoder& decoder() const { return decoder_; }

  /// `graph` may be null (or the graph path disabled): every phrase is then an isolated node.
  PreparedSample prepare(const PhraseCollection& collection, const TransitionGraph* graph,
                         const Plan* plan = nullptr) const;

  struct Encoded {
    ad::Var phrase_vecs;
    ad::Var seq;
    std::optional<ad::Var> graph;
    ad::Var fused;
  };
  Encoded encode(ad::Tape& tape, const PreparedSample& sample, AttentionMaps* attention = nullptr) const;

  /// Mean teacher-forced cross-entropy against sample.plan.
  ad::Var loss(ad::Tape& tape, const PreparedSample& sample) const;

  EncodedMemory encode_values(const PreparedSample& sample) const;
  NeuralStepModel step_model(const PreparedSample& sample) const;
  /// beam_size 1 is greedy. max_steps defaults to 4n, capped by the position table.
  DecodeResult plan(const PreparedSample& sample, int beam_size = 1, DecodeConstraints constraints = {}) const;
  /// GAT coefficients per layer and head; empty when the graph path is disabled.
  AttentionMaps attention(const PreparedSample& sample) const;

 private:
  ModelConfig config_;
  TokenVocab tokens_;
  ad::ParameterStore store_;
  SequentialEncoder seq_;
  GraphEncoder gat_;
  Fusion fusion_;
  GroupingDecoder decoder_;
};

struct CorpusPlans {
  std::vector<Plan> plans;
  /// Samples where the decoder emitted no phrase and the random planner stood in.
  std::size_t degenerate = 0;
  std::size_t truncated = 0;
};

/// Decodes every sample in order. Degenerate decodes fall back to
/// random_planner(n, fallback_seed + index).
CorpusPlans plan_corpus(const PlannerModel& model, const std::vector<Sample>& corpus,
                        const TransitionGraph* graph, int beam_size, std::uint64_t fallback_seed);

/// Sorted unique phrase surfaces of a corpus (the closed vocabulary of the copy ablation).
std::vector<std::string> surface_vocabulary(const std::vector<Sample>& corpus);

}  // namespace ggp
