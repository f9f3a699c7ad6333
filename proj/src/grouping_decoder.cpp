#include "ggp/grouping_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ggp/error.hpp"

namespace ggp {
namespace {

BoolMatrix causal_mask(Eigen::Index steps) {
  BoolMatrix mask = BoolMatrix::Constant(steps, steps, false);
  for (Eigen::Index i = 0; i < steps; ++i) mask.row(i).head(i + 1).setConstant(true);
  return mask;
}

int resolve_max_steps(const DecodeConstraints& c, int n) { return c.max_steps > 0 ? c.max_steps : 4 * n; }

std::vector<int> candidates(const StepDistribution& dist, std::span<const int> prefix, int n,
                            const DecodeConstraints& constraints) {
  const auto admissible = admissible_symbols(prefix, n, constraints);
  std::vector<int> out;
  for (int s = 0; s < n + 2; ++s) {
    if (admissible[static_cast<std::size_t>(s)] && dist.support[static_cast<std::size_t>(s)]) out.push_back(s);
  }
  // Nothing the model can emit is admissible: end the plan.
  if (out.empty()) out.push_back(eos_symbol(n));
  return out;
}

DecodeResult finish(std::vector<int> symbols, double log_prob, int n) {
  DecodeResult r;
  r.truncated = symbols.empty() || symbols.back() != eos_symbol(n);
  r.plan = symbols_to_plan(symbols, n);
  if (r.plan.groups.empty()) throw Error(ErrorKind::kDegeneratePlan, "decoder emitted no phrase before EOS");
  r.log_prob = log_prob;
  r.normalized_score = log_prob / static_cast<double>(symbols.size());
  r.symbols = std::move(symbols);
  return r;
}

}  // namespace

std::vector<int> plan_to_symbols(const Plan& plan, int n) {
  std::vector<int> out;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (g > 0) out.push_back(boundary_symbol(n));
    out.insert(out.end(), plan.groups[g].begin(), plan.groups[g].end());
  }
  out.push_back(eos_symbol(n));
  return out;
}

Plan symbols_to_plan(std::span<const int> symbols, int n) {
  Plan plan;
  Group open;
  for (int s : symbols) {
    if (s == eos_symbol(n)) break;
    if (s == boundary_symbol(n)) {
      if (!open.empty()) plan.groups.push_back(std::move(open));
      open.clear();
    } else if (s >= 0 && s < n) {
      open.push_back(s);
    } else {
      throw Error(ErrorKind::kInvalidPlan, "decoder symbol out of range");
    }
  }
  if (!open.empty()) plan.groups.push_back(std::move(open));
  return plan;
}

double step_loss(const StepDistribution& dist, int target) {
  if (target < 0 || target >= dist.probs.size()) throw Error(ErrorKind::kShapeMismatch, "target symbol out of range");
  return -std::log(dist.probs(target));
}

Vector pointer_scores(const Vector& query, const Matrix& memory_aug) {
  if (memory_aug.cols() != query.size()) throw Error(ErrorKind::kShapeMismatch, "query width differs from memory");
  return memory_aug * query / std::sqrt(static_cast<double>(query.size()));
}

std::vector<bool> admissible_symbols(std::span<const int> prefix, int n, const DecodeConstraints& c) {
  std::vector<bool> ok(static_cast<std::size_t>(n + 2), true);
  const bool after_boundary = !prefix.empty() && prefix.back() == boundary_symbol(n);
  const bool any_phrase = std::any_of(prefix.begin(), prefix.end(), [n](int s) { return s < n; });
  auto boundary = ok[static_cast<std::size_t>(boundary_symbol(n))];
  auto eos = ok[static_cast<std::size_t>(eos_symbol(n))];
  if (prefix.empty() && c.forbid_leading_boundary) boundary = false;
  if (after_boundary && c.forbid_double_boundary) boundary = false;
  if (after_boundary && c.forbid_eos_after_boundary) eos = false;
  if (!any_phrase && c.forbid_eos_before_phrase) eos = false;
  return ok;
}

DecodeResult decode_greedy(const StepModel& model, const DecodeConstraints& constraints) {
  const int n = model.phrase_count();
  const int max_steps = resolve_max_steps(constraints, n);
  DecoderState state = model.initial_state();
  std::vector<int> symbols;
  double log_prob = 0.0;
  for (int t = 0; t < max_steps; ++t) {
    auto [dist, next] = model.step(state);
    int best = -1;
    for (int s : candidates(dist, symbols, n, constraints)) {
      if (best < 0 || dist.probs(s) > dist.probs(best)) best = s;
    }
    log_prob += std::log(dist.probs(best));
    symbols.push_back(best);
    if (best == eos_symbol(n)) break;
    state = std::move(next);
    state.last_symbol = best;
  }
  return finish(std::move(symbols), log_prob, n);
}

DecodeResult decode_beam(const StepModel& model, int beam_size, const DecodeConstraints& constraints) {
  if (beam_size < 1) throw Error(ErrorKind::kConfigInvalid, "beam size must be at least 1");
  const int n = model.phrase_count();
  const int max_steps = resolve_max_steps(constraints, n);

  struct Hypothesis {
    DecoderState state;
    std::vector<int> symbols;
    double log_prob = 0.0;
  };
  struct Candidate {
    std::size_t beam;
    int symbol;
    double score;
  };

  std::vector<Hypothesis> beams;
  beams.push_back({model.initial_state(), {}, 0.0});
  std::vector<Hypothesis> finished;

  for (int t = 0; t < max_steps && !beams.empty(); ++t) {
    std::vector<std::pair<StepDistribution, DecoderState>> steps;
    std::vector<Candidate> pool;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      steps.push_back(model.step(beams[b].state));
      const auto& dist = steps.back().first;
      for (int s : candidates(dist, beams[b].symbols, n, constraints)) {
        pool.push_back({b, s, beams[b].log_prob + std::log(dist.probs(s))});
      }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.beam != b.beam) return a.beam < b.beam;
      return a.symbol < b.symbol;
    });
    std::vector<Hypothesis> next;
    for (std::size_t k = 0; k < pool.size() && k < static_cast<std::size_t>(beam_size); ++k) {
      const Candidate& c = pool[k];
      Hypothesis h{steps[c.beam].second, beams[c.beam].symbols, c.score};
      h.symbols.push_back(c.symbol);
      if (c.symbol == eos_symbol(n)) {
        finished.push_back(std::move(h));
      } else {
        h.state.last_symbol = c.symbol;
        next.push_back(std::move(h));
      }
    }
    beams = std::move(next);
    if (finished.size() >= static_cast<std::size_t>(beam_size)) break;
  }
  for (auto& h : beams) finished.push_back(std::move(h));

  const Hypothesis* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& h : finished) {
    const double score = h.log_prob / static_cast<double>(h.symbols.size());
    if (!best || score > best_score) {
      best = &h;
      best_score = score;
    }
  }
  DecodeResult result = finish(best->symbols, best->log_prob, n);
  if (beam_size > 1) {
    // Pruning can drop the greedy path, so it competes explicitly.
    DecodeResult greedy = decode_greedy(model, constraints);
    if (greedy.normalized_score > result.normalized_score) return greedy;
  }
  return result;
}

// ---- GroupingDecoder -----------------------------------------------------------

GroupingDecoder::GroupingDecoder(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng,
                                 std::vector<std::string> surface_vocab)
    : config_(config), surface_vocab_(std::move(surface_vocab)) {
  if (!std::is_sorted(surface_vocab_.begin(), surface_vocab_.end())) {
    throw Error(ErrorKind::kConfigInvalid, "surface vocabulary must be sorted");
  }
  const int d = config.d;
  bos_ = store.add("dec.bos", nn::normal(1, d, 0.5, rng));
  boundary_ = store.add("dec.boundary", nn::normal(1, d, 0.5, rng));
  eos_ = store.add("dec.eos", nn::normal(1, d, 0.5, rng));
  positions_ = store.add("dec.pos", nn::normal(config.max_decode_steps, d, 0.1, rng));
  for (int l = 0; l < config.layers; ++l) {
    const std::string name = "dec.layer" + std::to_string(l);
    Layer layer;
    layer.norm_self = nn::LayerNorm::create(store, name + ".norm_self", d);
    layer.self_attn = nn::MultiHeadAttention::create(store, name + ".self_attn", d, config.heads, rng);
    layer.norm_cross = nn::LayerNorm::create(store, name + ".norm_cross", d);
    layer.cross_attn = nn::MultiHeadAttention::create(store, name + ".cross_attn", d, config.heads, rng);
    layer.norm_ffn = nn::LayerNorm::create(store, name + ".norm_ffn", d);
    layer.ffn = nn::FeedForward::create(store, name + ".ffn", d, config.ffn_mult * d, rng);
    layers_.push_back(std::move(layer));
  }
  final_norm_ = nn::LayerNorm::create(store, "dec.norm", d);
  if (copies()) {
    pointer_ = store.add("dec.pointer.weight", nn::xavier_uniform(d, d, rng));
  } else {
    vocab_out_ = nn::Linear::create(store, "dec.vocab_out", d, static_cast<int>(surface_vocab_.size()) + 2, rng);
  }
}

ad::Var GroupingDecoder::augmented_memory(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory) const {
  if (memory.cols() != config_.d || memory.rows() < 1) throw Error(ErrorKind::kShapeMismatch, "memory must be n x d, n >= 1");
  return ad::concat_rows({memory, tape.param(store, boundary_), tape.param(store, eos_)});
}

ad::Var GroupingDecoder::output_logits(ad::Tape& tape, const ad::ParameterStore& store, ad::Var z,
                                       ad::Var memory_aug) const {
  if (copies()) {
    ad::Var query = ad::matmul(z, tape.param(store, pointer_));
    return ad::scale(ad::matmul_nt(query, memory_aug), 1.0 / std::sqrt(static_cast<double>(config_.d)));
  }
  return vocab_out_(tape, store, z);
}

ad::Var GroupingDecoder::teacher_forced_logits(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory,
                                               std::span<const int> inputs) const {
  const auto steps = static_cast<Eigen::Index>(inputs.size());
  if (steps < 1 || steps > config_.max_decode_steps) {
    throw Error(ErrorKind::kShapeMismatch, "decoder sequence length outside [1, max_decode_steps]");
  }
  ad::Var memory_aug = augmented_memory(tape, store, memory);
  ad::Var table = ad::concat_rows({memory_aug, tape.param(store, bos_)});
  std::vector<int> positions(inputs.size());
  std::iota(positions.begin(), positions.end(), 0);
  ad::Var x = ad::add(ad::gather_rows(table, inputs), ad::gather_rows(tape.param(store, positions_), positions));
  const BoolMatrix causal = causal_mask(steps);
  for (const auto& layer : layers_) {
    ad::Var h = layer.norm_self(tape, store, x);
    x = ad::add(x, layer.self_attn.attend(tape, store, layer.self_attn.query(tape, store, h),
                                          layer.self_attn.key(tape, store, h),
                                          layer.self_attn.value(tape, store, h), &causal));
    h = layer.norm_cross(tape, store, x);
    x = ad::add(x, layer.cross_attn.attend(tape, store, layer.cross_attn.query(tape, store, h),
                                           layer.cross_attn.key(tape, store, memory_aug),
                                           layer.cross_attn.value(tape, store, memory_aug), nullptr));
    x = ad::add(x, layer.ffn(tape, store, layer.norm_ffn(tape, store, x)));
  }
  return output_logits(tape, store, final_norm_(tape, store, x), memory_aug);
}

std::vector<int> GroupingDecoder::vocab_targets(std::span<const int> symbols,
                                                const PhraseCollection& collection) const {
  const int n = static_cast<int>(collection.size());
  const int vocab = static_cast<int>(surface_vocab_.size());
  std::vector<int> out;
  out.reserve(symbols.size());
  for (int s : symbols) {
    if (s == boundary_symbol(n)) {
      out.push_back(vocab);
    } else if (s == eos_symbol(n)) {
      out.push_back(vocab + 1);
    } else {
      const auto& surface = collection[static_cast<std::size_t>(s)].surface();
      auto it = std::lower_bound(surface_vocab_.begin(), surface_vocab_.end(), surface);
      if (it == surface_vocab_.end() || *it != surface) {
        throw Error(ErrorKind::kUnknownPhrase, "phrase '" + surface + "' is outside the decoder vocabulary");
      }
      out.push_back(static_cast<int>(it - surface_vocab_.begin()));
    }
  }
  return out;
}

BoolMatrix GroupingDecoder::vocab_mask(const PhraseCollection& collection, Eigen::Index rows) const {
  const auto vocab = static_cast<Eigen::Index>(surface_vocab_.size());
  BoolMatrix mask = BoolMatrix::Constant(rows, vocab + 2, false);
  mask.col(vocab).setConstant(true);
  mask.col(vocab + 1).setConstant(true);
  for (const auto& p : collection.phrases()) {
    auto it = std::lower_bound(surface_vocab_.begin(), surface_vocab_.end(), p.surface());
    if (it != surface_vocab_.end() && *it == p.surface()) mask.col(it - surface_vocab_.begin()).setConstant(true);
  }
  return mask;
}

ad::Var GroupingDecoder::sequence_loss(ad::Tape& tape, const ad::ParameterStore& store, ad::Var memory,
                                       const Plan& plan, const PhraseCollection& collection) const {
  const int n = static_cast<int>(collection.size());
  if (memory.rows() != n) throw Error(ErrorKind::kShapeMismatch, "memory rows differ from collection size");
  validate_plan(plan, collection);
  const auto targets = plan_to_symbols(plan, n);
  std::vector<int> inputs;
  inputs.reserve(targets.size());
  inputs.push_back(n + 2);
  inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
  ad::Var logits = teacher_forced_logits(tape, store, memory, inputs);
  if (copies()) return ad::cross_entropy(logits, targets);
  const BoolMatrix mask = vocab_mask(collection, logits.rows());
  return ad::cross_entropy(logits, vocab_targets(targets, collection), &mask);
}

DecoderContext GroupingDecoder::prepare(const ad::ParameterStore& store, const Matrix& memory,
                                        const PhraseCollection& collection) const {
  if (memory.rows() != static_cast<Eigen::Index>(collection.size())) {
    throw Error(ErrorKind::kShapeMismatch, "memory rows differ from collection size");
  }
  ad::Tape tape(false);
  DecoderContext ctx;
  ctx.store = &store;
  ctx.n = static_cast<int>(collection.size());
  ad::Var memory_aug = augmented_memory(tape, store, tape.constant(memory));
  ctx.memory_aug = memory_aug.value();
  ctx.input_table = ad::concat_rows({memory_aug, tape.param(store, bos_)}).value();
  for (const auto& layer : layers_) {
    ctx.cross_keys.push_back(layer.cross_attn.key(tape, store, memory_aug).value());
    ctx.cross_values.push_back(layer.cross_attn.value(tape, store, memory_aug).value());
  }
  if (!copies()) {
    const int vocab = static_cast<int>(surface_vocab_.size());
    ctx.vocab_to_slot.assign(static_cast<std::size_t>(vocab) + 2, -1);
    for (int i = ctx.n - 1; i >= 0; --i) {
      const auto& surface = collection[static_cast<std::size_t>(i)].surface();
      auto it = std::lower_bound(surface_vocab_.begin(), surface_vocab_.end(), surface);
      if (it != surface_vocab_.end() && *it == surface) ctx.vocab_to_slot[static_cast<std::size_t>(it - surface_vocab_.begin())] = i;
    }
    ctx.vocab_to_slot[static_cast<std::size_t>(vocab)] = boundary_symbol(ctx.n);
    ctx.vocab_to_slot[static_cast<std::size_t>(vocab) + 1] = eos_symbol(ctx.n);
    ctx.vocab_allowed = vocab_mask(collection, 1);
  }
  return ctx;
}

DecoderState GroupingDecoder::initial_state(const DecoderContext& ctx) const {
  DecoderState s;
  s.step = 0;
  s.last_symbol = ctx.n + 2;
  s.self_keys.resize(layers_.size());
  s.self_values.resize(layers_.size());
  return s;
}

std::pair<StepDistribution, DecoderState> GroupingDecoder::decode_step(const DecoderState& state,
                                                                       const DecoderContext& ctx) const {
  if (state.step >= config_.max_decode_steps) throw Error(ErrorKind::kShapeMismatch, "decoder ran past max_decode_steps");
  if (state.last_symbol < 0 || state.last_symbol > ctx.n + 2) throw Error(ErrorKind::kShapeMismatch, "decoder state has no input symbol");
  const ad::ParameterStore& store = *ctx.store;
  ad::Tape tape(false);
  DecoderState next;
  next.step = state.step + 1;
  next.self_keys.resize(layers_.size());
  next.self_values.resize(layers_.size());

  Matrix input = ctx.input_table.row(state.last_symbol) + store[static_cast<std::size_t>(positions_)].value.row(state.step);
  ad::Var x = tape.constant(std::move(input));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    ad::Var h = layer.norm_self(tape, store, x);
    ad::Var k = layer.self_attn.key(tape, store, h);
    ad::Var v = layer.self_attn.value(tape, store, h);
    if (state.self_keys[l].size() > 0) {
      k = ad::concat_rows({tape.constant(state.self_keys[l]), k});
      v = ad::concat_rows({tape.constant(state.self_values[l]), v});
    }
    x = ad::add(x, layer.self_attn.attend(tape, store, layer.self_attn.query(tape, store, h), k, v, nullptr));
    next.self_keys[l] = k.value();
    next.self_values[l] = v.value();
    h = layer.norm_cross(tape, store, x);
    x = ad::add(x, layer.cross_attn.attend(tape, store, layer.cross_attn.query(tape, store, h),
                                           tape.constant(ctx.cross_keys[l]), tape.constant(ctx.cross_values[l]),
                                           nullptr));
    x = ad::add(x, layer.ffn(tape, store, layer.norm_ffn(tape, store, x)));
  }
  ad::Var z = final_norm_(tape, store, x);

  StepDistribution dist;
  if (copies()) {
    const Matrix query = z.value() * store[static_cast<std::size_t>(pointer_)].value;
    const Vector scores = pointer_scores(query.row(0).transpose(), ctx.memory_aug);
    dist.probs = ad::softmax_rows(Matrix(scores.transpose())).row(0).transpose();
    dist.support.assign(static_cast<std::size_t>(ctx.n + 2), true);
  } else {
    const Matrix vocab_probs = ad::softmax_rows(vocab_out_(tape, store, z).value(), &ctx.vocab_allowed);
    dist.probs = Vector::Zero(ctx.n + 2);
    dist.support.assign(static_cast<std::size_t>(ctx.n + 2), false);
    for (std::size_t s = 0; s < ctx.vocab_to_slot.size(); ++s) {
      const int slot = ctx.vocab_to_slot[s];
      if (slot < 0) continue;
      dist.probs(slot) = vocab_probs(0, static_cast<Eigen::Index>(s));
      dist.support[static_cast<std::size_t>(slot)] = true;
    }
  }
  return {std::move(dist), std::move(next)};
}

}  // namespace ggp
