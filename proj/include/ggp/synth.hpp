#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ggp/plan.hpp"
#include "ggp/tensor.hpp"

namespace ggp {

struct SynthConfig {
  int vocab_size = 50;
  /// Dirichlet concentration of each hidden row over its successors.
  double concentration = 0.5;
  int successors = 3;
  int train = 5000;
  int dev = 500;
  int test = 500;
  int min_phrases = 4;
  int max_phrases = 8;
  /// Fraction of the phrase inventory that only appears in the test split.
  double unseen_fraction = 0.0;
  /// Number of distinct tokens phrases are spelled from; 0 means 2 * vocab_size.
  int token_pool = 0;
  std::uint64_t seed = 1;

  /// Throws kConfigInvalid for V < 10, fewer than 100 samples, or an
  /// inconsistent range.
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

struct SynthCorpus {
  std::vector<Sample> train;
  std::vector<Sample> dev;
  std::vector<Sample> test;
  /// Row-stochastic V x V matrix the walks were drawn from.
  Matrix hidden;
  std::vector<std::string> surfaces;
  /// Phrases that end a group after two members.
  std::vector<bool> closer;
  std::vector<bool> held_out;
};

/// Draws a hidden sparse transition matrix and samples plans as weighted walks
/// over it. Each sample's phrase list is shuffled so input order carries no
/// signal.
SynthCorpus generate_synthetic(const SynthConfig& config);

}  // namespace ggp
