#pragma once

#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ggp/layers.hpp"
#include "ggp/model_config.hpp"
#include "ggp/plan.hpp"

namespace ggp {

// Decoder output symbols for a collection of n phrases: 0..n-1 copy phrase i,
// n closes the current group, n+1 ends the plan.
inline int boundary_symbol(int n) { return n; }
inline int eos_symbol(int n) { return n + 1; }

/// Teacher-forcing targets: phrases in plan order, a boundary between groups, EOS last.
std::vector<int> plan_to_symbols(const Plan& plan, int n);
/// Splits at boundaries and stops at EOS; a trailing open group is closed.
Plan symbols_to_plan(std::span<const int> symbols, int n);

/// Probabilities over the n+2 symbols. `support` marks symbols the model can
/// emit at all (the closed-vocabulary head cannot emit unseen phrases).
struct StepDistribution {
  Vector probs;
  std::vector<bool> support;
};

/// -log probs[target].
double step_loss(const StepDistribution& dist, int target);

/// Scores of each augmented memory row against a query: memory_aug * query / sqrt(d).
Vector pointer_scores(const Vector& query, const Matrix& memory_aug);

/// Decoder position plus per-layer self-attention key/value cache.
struct DecoderState {
  int step = 0;
  int last_symbol = -1;
  std::vector<Matrix> self_keys;
  std::vector<Matrix> self_values;
};

/// Anything that yields successive step distributions; the search procedures
/// below only see this interface.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual int phrase_count() const = 0;
  virtual DecoderState initial_state() const = 0;
  /// Consumes state.last_symbol and returns the next distribution together with
  /// the advanced state; the caller sets last_symbol on the returned state.
  virtual std::pair<StepDistribution, DecoderState> step(const DecoderState& state) const = 0;
};

struct DecodeConstraints {
  /// 0 means 4n.
  int max_steps = 0;
  bool forbid_leading_boundary = true;
  bool forbid_double_boundary = true;
  bool forbid_eos_after_boundary = true;
  bool forbid_eos_before_phrase = true;
};

struct DecodeResult {
  Plan plan;
  std::vector<int> symbols;
  double log_prob = 0.0;
  /// log_prob divided by the number of emitted symbols (EOS included).
  double normalized_score = 0.0;
  /// max_steps ran out before EOS; the open group was closed.
  bool truncated = false;
};

/// Symbols admissible after `prefix` under `constraints` (ignoring support).
std::vector<bool> admissible_symbols(std::span<const int> prefix, int n, const DecodeConstraints& constraints);

/// Argmax decoding. Throws kDegeneratePlan when no phrase is emitted.
DecodeResult decode_greedy(const StepModel& model, const DecodeConstraints& constraints = {});
/// Length-normalized beam search; beam_size 1 reproduces decode_greedy. Wider
/// beams never return a lower normalized score than the greedy path.
DecodeResult decode_beam(const StepModel& model, int beam_size, const DecodeConstraints& constraints = {});

class GroupingDecoder;

/// Per-sample inference context: augmented memory and cross-attention projections.
struct DecoderContext {
  const ad::ParameterStore* store = nullptr;
  int n = 0;
  Matrix memory_aug;   // (n+2) x d
  Matrix input_table;  // (n+3) x d: augmented memory rows, then BOS
  std::vector<Matrix> cross_keys;
  std::vector<Matrix> cross_values;
  // Closed-vocabulary head only: output id -> collection slot (-1 when absent).
  std::vector<int> vocab_to_slot;
  BoolMatrix vocab_allowed;
};

/// Transformer decoder with a pointer softmax over the collection plus two
/// learned pseudo-slots for BOUNDARY and EOS. Built without a surface
/// vocabulary it copies; built with one it predicts surfaces from that closed
/// vocabulary instead (the copy ablation).
class GroupingDecoder {
 public:
  GroupingDecoder() = default;
  GroupingDecoder(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng,
                  std::vector<std::string> surface_vocab = {});

  bool copies() const { return surface_vocab_.empty(); }
  const std::vector<std::string>& surface_vocab() const { return surface_vocab_; }

  /// Mean per-step cross-entropy of the teacher-forced golden symbol sequence.
  ad::Var sequence_loss(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory,
                        const Plan& plan, const PhraseCollection& collection) const;

  /// T x (n+2) pointer scores (or T x (|vocab|+2) logits) for the given input symbols,
  /// where input n+2 is BOS.
  ad::Var teacher_forced_logits(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory,
                                std::span<const int> inputs) const;

  DecoderContext prepare(const ad::ParameterStore& store, const Matrix& memory,
                         const PhraseCollection& collection) const;
  DecoderState initial_state(const DecoderContext& ctx) const;
  std::pair<StepDistribution, DecoderState> decode_step(const DecoderState& state,
                                                        const DecoderContext& ctx) const;

 private:
  struct Layer {
    nn::LayerNorm norm_self, norm_cross, norm_ffn;
    nn::MultiHeadAttention self_attn, cross_attn;
    nn::FeedForward ffn;
  };

  ad::Var augmented_memory(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory) const;
  ad::Var output_logits(ad::Tape& tape, const ad::ParameterStore& store, ad::Var z, ad::Var memory_aug) const;
  /// Output ids for each symbol of the closed-vocabulary head.
  std::vector<int> vocab_targets(std::span<const int> symbols, const PhraseCollection& collection) const;
  BoolMatrix vocab_mask(const PhraseCollection& collection, Eigen::Index rows) const;

  ModelConfig config_;
  int bos_ = -1;
  int boundary_ = -1;
  int eos_ = -1;
  int positions_ = -1;
  std::vector<Layer> layers_;
  nn::LayerNorm final_norm_;
  int pointer_ = -1;
  nn::Linear vocab_out_;
  std::vector<std::string> surface_vocab_;
};

/// StepModel over a trained GroupingDecoder and one prepared context.
class NeuralStepModel : public StepModel {
 public:
  NeuralStepModel(const GroupingDecoder& decoder, DecoderContext ctx)
      : decoder_(decoder), ctx_(std::move(ctx)) {}

  int phrase_count() const override { return ctx_.n; }
  DecoderState initial_state() const override { return decoder_.initial_state(ctx_); }
  std::pair<StepDistribution, DecoderState> step(const DecoderState& state) const override {
    return decoder_.decode_step(state, ctx_);
  }

 private:
  const GroupingDecoder& decoder_;
  DecoderContext ctx_;
};

}  // namespace ggp
