#pragma once

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ggp/layers.hpp"
#include "ggp/model_config.hpp"
#include "ggp/plan.hpp"

namespace ggp {

/// Token -> id. Id 0 is padding and id 1 stands in for unseen tokens.
class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  TokenVocab() = default;
  /// `tokens` must not contain the reserved spellings; duplicates are dropped.
  explicit TokenVocab(const std::vector<std::string>& tokens);
  static TokenVocab from_corpus(const std::vector<Sample>& corpus);

  int id(const std::string& token) const;
  std::size_t size() const { return tokens_.size() + 2; }
  /// Non-reserved tokens in id order (id = index + 2).
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Throws kPhraseTooLong when a phrase exceeds `max_len` tokens.
  std::vector<std::vector<int>> encode(const PhraseCollection& collection, int max_len) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

/// Hierarchical sequential encoder: each phrase is encoded over its own tokens
/// and mean-pooled, then the phrase vectors are contextualized against each other.
class SequentialEncoder {
 public:
  SequentialEncoder() = default;
  SequentialEncoder(ad::ParameterStore& store, const ModelConfig& config, std::size_t vocab_size,
                    std::mt19937_64& rng);

  /// 1 x d vector for one phrase.
  ad::Var encode_phrase(ad::Tape& tape, const ad::ParameterStore& store,
                        std::span<const int> token_ids) const;
  /// n x d, row i = encode_phrase(token_ids[i]); all phrases share one batched pass.
  ad::Var encode_phrases(ad::Tape& tape, const ad::ParameterStore& store,
                         const std::vector<std::vector<int>>& token_ids) const;
  /// n x d contextualized phrase representations.
  ad::Var encode_collection(ad::Tape& tape, const ad::ParameterStore& store, ad::Var phrase_vecs) const;

 private:
  ModelConfig config_;
  int token_embed_ = -1;
  int token_pos_ = -1;
  int phrase_pos_ = -1;
  std::vector<nn::EncoderLayer> phrase_layers_;
  nn::LayerNorm phrase_norm_;
  std::vector<nn::EncoderLayer> collection_layers_;
  nn::LayerNorm collection_norm_;
};

}  // namespace ggp
