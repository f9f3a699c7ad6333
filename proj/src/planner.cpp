#include "ggp/planner.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "ggp/baselines.hpp"
#include "ggp/error.hpp"

namespace ggp {

PlannerModel::PlannerModel(const ModelConfig& config, TokenVocab tokens, std::vector<std::string> surface_vocab,
                           std::uint64_t seed)
    : config_(config), tokens_(std::move(tokens)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  seq_ = SequentialEncoder(store_, config_, tokens_.size(), rng);
  if (config_.use_graph) gat_ = GraphEncoder(store_, config_, rng);
  fusion_ = Fusion(store_, config_, rng);
  if (config_.use_copy_decoder) surface_vocab.clear();
  else if (surface_vocab.empty()) throw Error(ErrorKind::kConfigInvalid, "the closed-vocabulary decoder needs a surface vocabulary");
  decoder_ = GroupingDecoder(store_, config_, rng, std::move(surface_vocab));
}

PreparedSample PlannerModel::prepare(const PhraseCollection& collection, const TransitionGraph* graph,
                                     const Plan* plan) const {
  if (collection.size() > static_cast<std::size_t>(config_.max_phrases)) {
    throw Error(ErrorKind::kInvalidCollection, "collection larger than the model's max_phrases");
  }
  PreparedSample s;
  s.collection = &collection;
  s.plan = plan;
  s.token_ids = tokens_.encode(collection, config_.max_phrase_len);
  s.rel = (config_.use_graph && graph) ? extract_subgraph(*graph, collection) : identity_relation(collection.size());
  return s;
}

PlannerModel::Encoded PlannerModel::encode(ad::Tape& tape, const PreparedSample& sample, AttentionMaps* attention) const {
  Encoded e;
  e.phrase_vecs = seq_.encode_phrases(tape, store_, sample.token_ids);
  e.seq = seq_.encode_collection(tape, store_, e.phrase_vecs);
  if (config_.use_graph) e.graph = gat_.encode(tape, store_, sample.rel, e.seq, attention);
  e.fused = fusion_.fuse(tape, store_, e.graph, e.seq);
  return e;
}

ad::Var PlannerModel::loss(ad::Tape& tape, const PreparedSample& sample) const {
  if (!sample.plan) throw Error(ErrorKind::kMissingPlan, "training sample has no golden plan");
  Encoded e = encode(tape, sample);
  return decoder_.sequence_loss(tape, store_, e.fused, *sample.plan, *sample.collection);
}

EncodedMemory PlannerModel::encode_values(const PreparedSample& sample) const {
  ad::Tape tape(false);
  Encoded e = encode(tape, sample);
  return {e.phrase_vecs.value(), e.seq.value(), e.graph ? e.graph->value() : Matrix(), e.fused.value()};
}

NeuralStepModel PlannerModel::step_model(const PreparedSample& sample) const {
  ad::Tape tape(false);
  Encoded e = encode(tape, sample);
  return NeuralStepModel(decoder_, decoder_.prepare(store_, e.fused.value(), *sample.collection));
}

DecodeResult PlannerModel::plan(const PreparedSample& sample, int beam_size, DecodeConstraints constraints) const {
  const int n = static_cast<int>(sample.collection->size());
  const int limit = config_.max_decode_steps;
  constraints.max_steps = std::min(constraints.max_steps > 0 ? constraints.max_steps : 4 * n, limit);
  const NeuralStepModel model = step_model(sample);
  return beam_size == 1 ? decode_greedy(model, constraints) : decode_beam(model, beam_size, constraints);
}

AttentionMaps PlannerModel::attention(const PreparedSample& sample) const {
  if (!config_.use_graph) return {};
  ad::Tape tape(false);
  AttentionMaps maps;
  encode(tape, sample, &maps);
  return maps;
}

CorpusPlans plan_corpus(const PlannerModel& model, const std::vector<Sample>& corpus,
                        const TransitionGraph* graph, int beam_size, std::uint64_t fallback_seed) {
  CorpusPlans out;
  out.plans.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const PreparedSample prepared = model.prepare(corpus[i].collection, graph);
    try {
      DecodeResult r = model.plan(prepared, beam_size);
      if (r.truncated) ++out.truncated;
      out.plans.push_back(std::move(r.plan));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegeneratePlan) throw;
      ++out.degenerate;
      out.plans.push_back(random_planner(corpus[i].collection.size(), fallback_seed + i));
    }
  }
  return out;
}

std::vector<std::string> surface_vocabulary(const std::vector<Sample>& corpus) {
  std::set<std::string> seen;
  for (const auto& s : corpus) {
    for (const auto& p : s.collection.phrases()) seen.insert(p.surface());
  }
  return {seen.begin(), seen.end()};
}

}  // namespace ggp
