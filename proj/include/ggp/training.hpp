#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ggp/planner.hpp"

namespace ggp {

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 1.0;
  int batch_size = 32;
  int max_epochs = 30;
  /// Epochs without a dev PLAN BLEU-4 improvement before stopping; 0 never stops early.
  int patience = 5;
  int eval_beam = 1;
  /// Probability of replacing each training token with UNK, so phrases never
  /// seen in training still look familiar to the encoder.
  double token_dropout = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

class AdamOptimizer {
 public:
  AdamOptimizer(const ad::ParameterStore& store, double lr, double beta1, double beta2, double eps);
  void step(ad::ParameterStore& store, const ad::Gradients& grads);
  std::uint64_t steps() const { return steps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t steps_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Everything needed to rebuild a trained planner.
struct Checkpoint {
  TrainConfig config;
  std::vector<std::string> tokens;
  std::vector<std::string> surfaces;
  std::vector<std::pair<std::string, Matrix>> arrays;
  std::uint64_t step = 0;
  std::string rng_state;
  int epoch = 0;
};

Checkpoint make_checkpoint(const PlannerModel& model, const TrainConfig& config, std::uint64_t step,
                           const std::mt19937_64& rng, int epoch);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// kFileNotFound, kFormat on a corrupt container, kVersionMismatch on a foreign version.
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Throws kFormat when the stored arrays do not match the configured architecture.
PlannerModel model_from_checkpoint(const Checkpoint& ckpt);

/// Owns the model, the optimizer and the prepared training samples. `train`
/// must outlive the trainer.
class Trainer {
 public:
  Trainer(const std::vector<Sample>& train, const TransitionGraph* graph, const TrainConfig& config);

  /// One optimizer update on the given training indices; returns the mean loss.
  /// Throws kNonFiniteLoss without touching the parameters.
  double step(std::span<const std::size_t> batch);
  double mean_loss(std::span<const std::size_t> batch) const;
  /// Mean loss plus the summed gradient, scaled to the batch mean. Token
  /// dropout is drawn from `rng` when given.
  double loss_and_gradient(std::span<const std::size_t> batch, ad::Gradients& grads,
                           std::mt19937_64* rng = nullptr) const;

  PlannerModel& model() { return model_; }
  const PlannerModel& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }
  std::uint64_t steps() const { return adam_.steps(); }
  std::size_t size() const { return prepared_.size(); }

 private:
  TrainConfig config_;
  PlannerModel model_;
  std::vector<PreparedSample> prepared_;
  AdamOptimizer adam_;
  std::mt19937_64 rng_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_pb4 = 0.0;
  double dev_prl = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Trains until max_epochs or early stopping and returns the checkpoint with the
/// best dev PLAN BLEU-4 (the last one when `dev` is empty). One JSON line per
/// epoch goes to `log` when given.
TrainResult train(const std::vector<Sample>& train, const std::vector<Sample>& dev, const TransitionGraph* graph,
                  const TrainConfig& config, std::ostream* log = nullptr);

}  // namespace ggp
