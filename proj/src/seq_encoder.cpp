#include "ggp/seq_encoder.hpp"

#include <numeric>
#include <set>

#include "ggp/error.hpp"

namespace ggp {

TokenVocab::TokenVocab(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    if (ids_.count(t)) continue;
    ids_.emplace(t, static_cast<int>(tokens_.size()) + 2);
    tokens_.push_back(t);
  }
}

TokenVocab TokenVocab::from_corpus(const std::vector<Sample>& corpus) {
  std::set<std::string> seen;
  for (const auto& s : corpus) {
    for (const auto& p : s.collection.phrases()) seen.insert(p.tokens().begin(), p.tokens().end());
  }
  return TokenVocab(std::vector<std::string>(seen.begin(), seen.end()));
}

int TokenVocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<std::vector<int>> TokenVocab::encode(const PhraseCollection& collection, int max_len) const {
  std::vector<std::vector<int>> out;
  out.reserve(collection.size());
  for (const auto& p : collection.phrases()) {
    if (static_cast<int>(p.tokens().size()) > max_len) {
      throw Error(ErrorKind::kPhraseTooLong, "phrase '" + p.surface() + "' has " +
                                                 std::to_string(p.tokens().size()) +
                                                 " tokens; maximum is " + std::to_string(max_len));
    }
    std::vector<int> ids;
    ids.reserve(p.tokens().size());
    for (const auto& t : p.tokens()) ids.push_back(id(t));
    out.push_back(std::move(ids));
  }
  return out;
}

SequentialEncoder::SequentialEncoder(ad::ParameterStore& store, const ModelConfig& config,
                                     std::size_t vocab_size, std::mt19937_64& rng)
    : config_(config) {
  const int d = config.d;
  const int hidden = config.ffn_mult * d;
  token_embed_ = store.add("seq.token_embed", nn::normal(static_cast<Eigen::Index>(vocab_size), d, 1.0, rng));
  token_pos_ = store.add("seq.token_pos", nn::normal(config.max_phrase_len, d, 0.1, rng));
  for (int l = 0; l < config.layers; ++l) {
    phrase_layers_.push_back(nn::EncoderLayer::create(
        store, "seq.phrase.layer" + std::to_string(l), d, config.heads, hidden, rng));
  }
  phrase_norm_ = nn::LayerNorm::create(store, "seq.phrase.norm", d);
  if (config.collection_positions) {
    phrase_pos_ = store.add("seq.phrase_pos", nn::normal(config.max_phrases, d, 0.1, rng));
  }
  for (int l = 0; l < config.layers; ++l) {
    collection_layers_.push_back(nn::EncoderLayer::create(
        store, "seq.collection.layer" + std::to_string(l), d, config.heads, hidden, rng));
  }
  collection_norm_ = nn::LayerNorm::create(store, "seq.collection.norm", d);
}

ad::Var SequentialEncoder::encode_phrase(ad::Tape& tape, const ad::ParameterStore& store,
                                         std::span<const int> token_ids) const {
  return encode_phrases(tape, store, {std::vector<int>(token_ids.begin(), token_ids.end())});
}

ad::Var SequentialEncoder::encode_phrases(ad::Tape& tape, const ad::ParameterStore& store,
                                          const std::vector<std::vector<int>>& token_ids) const {
  std::vector<int> flat;
  std::vector<int> positions;
  std::vector<Eigen::Index> starts;
  for (const auto& ids : token_ids) {
    if (ids.empty() || static_cast<int>(ids.size()) > config_.max_phrase_len) {
      throw Error(ErrorKind::kPhraseTooLong, "phrase length outside [1, max_phrase_len]");
    }
    starts.push_back(static_cast<Eigen::Index>(flat.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      flat.push_back(ids[k]);
      positions.push_back(static_cast<int>(k));
    }
  }
  const auto total = static_cast<Eigen::Index>(flat.size());
  const auto n = static_cast<Eigen::Index>(token_ids.size());

  // Tokens attend only within their own phrase.
  BoolMatrix block = BoolMatrix::Constant(total, total, false);
  Matrix pool = Matrix::Zero(n, total);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(token_ids[static_cast<std::size_t>(i)].size());
    block.block(starts[i], starts[i], k, k).setConstant(true);
    pool.block(i, starts[i], 1, k).setConstant(1.0 / static_cast<double>(k));
  }
  const BoolMatrix* mask = n > 1 ? &block : nullptr;

  ad::Var x = ad::add(ad::gather_rows(tape.param(store, token_embed_), flat),
                      ad::gather_rows(tape.param(store, token_pos_), positions));
  for (const auto& layer : phrase_layers_) x = layer(tape, store, x, mask);
  x = phrase_norm_(tape, store, x);
  return n == 1 ? ad::mean_rows(x) : ad::matmul(tape.constant(std::move(pool)), x);
}

ad::Var SequentialEncoder::encode_collection(ad::Tape& tape, const ad::ParameterStore& store,
                                             ad::Var phrase_vecs) const {
  const auto n = static_cast<int>(phrase_vecs.rows());
  if (phrase_vecs.cols() != config_.d) throw Error(ErrorKind::kShapeMismatch, "phrase vectors must be n x d");
  if (n > config_.max_phrases) throw Error(ErrorKind::kShapeMismatch, "collection larger than max_phrases");
  ad::Var x = phrase_vecs;
  if (phrase_pos_ >= 0) {
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    x = ad::add(x, ad::gather_rows(tape.param(store, phrase_pos_), rows));
  }
  for (const auto& layer : collection_layers_) x = layer(tape, store, x, nullptr);
  return collection_norm_(tape, store, x);
}

}  // namespace ggp
