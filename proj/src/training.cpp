#include "ggp/training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "ggp/error.hpp"
#include "ggp/metrics.hpp"

namespace ggp {
namespace {

constexpr char kCheckpointMagic[8] = {'G', 'G', 'P', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::kFormat, "truncated checkpoint");
  return value;
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

double global_norm(const ad::Gradients& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) total += g[i].squaredNorm();
  return std::sqrt(total);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kConfigInvalid, "learning rate must be positive");
  if (batch_size < 1 || max_epochs < 1 || patience < 0 || eval_beam < 1) {
    throw Error(ErrorKind::kConfigInvalid, "batch size, epochs and beam must be positive; patience non-negative");
  }
  if (token_dropout < 0.0 || token_dropout >= 1.0) {
    throw Error(ErrorKind::kConfigInvalid, "token_dropout must lie in [0, 1)");
  }
  if (grad_clip < 0.0) throw Error(ErrorKind::kConfigInvalid, "grad_clip must be non-negative");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"model", c.model},       {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                     {"beta2", c.beta2},       {"adam_eps", c.adam_eps},           {"grad_clip", c.grad_clip},
                     {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},   {"patience", c.patience},
                     {"eval_beam", c.eval_beam},   {"token_dropout", c.token_dropout},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("model", c.model);
  get("learning_rate", c.learning_rate);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("adam_eps", c.adam_eps);
  get("grad_clip", c.grad_clip);
  get("batch_size", c.batch_size);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  get("eval_beam", c.eval_beam);
  get("token_dropout", c.token_dropout);
  get("seed", c.seed);
}

// ---- Adam ---------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(const ad::ParameterStore& store, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : store) {
    first_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    second_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamOptimizer::step(ad::ParameterStore& store, const ad::Gradients& grads) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    first_[i] = beta1_ * first_[i] + (1.0 - beta1_) * grads[i];
    second_[i] = beta2_ * second_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
    store[i].value.array() -= lr_ * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps_);
  }
}

// ---- checkpoints ----------------------------------------------------------------

Checkpoint make_checkpoint(const PlannerModel& model, const TrainConfig& config, std::uint64_t step,
                           const std::mt19937_64& rng, int epoch) {
  Checkpoint c;
  c.config = config;
  c.tokens = model.tokens().tokens();
  c.surfaces = model.surface_vocab();
  for (const auto& p : model.params()) c.arrays.emplace_back(p.name, p.value);
  c.step = step;
  c.rng_state = rng_to_string(rng);
  c.epoch = epoch;
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "ggp-checkpoint";
  header["version"] = kCheckpointFormatVersion;
  header["config"] = ckpt.config;
  header["tokens"] = ckpt.tokens;
  header["surfaces"] = ckpt.surfaces;
  header["step"] = ckpt.step;
  header["epoch"] = ckpt.epoch;
  header["rng"] = ckpt.rng_state;
  auto& arrays = header["arrays"] = nlohmann::json::array();
  for (const auto& [name, m] : ckpt.arrays) arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileNotFound, "cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod<std::uint32_t>(out, kCheckpointFormatVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  // Column-major doubles, in header order.
  for (const auto& [name, m] : ckpt.arrays) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a planner checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch, "checkpoint format version " + std::to_string(version) + " is not supported");
  }
  const auto length = read_pod<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorKind::kFormat, "truncated checkpoint header");

  Checkpoint c;
  try {
    const auto header = nlohmann::json::parse(text);
    c.config = header.at("config").get<TrainConfig>();
    c.tokens = header.at("tokens").get<std::vector<std::string>>();
    c.surfaces = header.at("surfaces").get<std::vector<std::string>>();
    c.step = header.at("step").get<std::uint64_t>();
    c.epoch = header.at("epoch").get<int>();
    c.rng_state = header.at("rng").get<std::string>();
    for (const auto& a : header.at("arrays")) {
      Matrix m(a.at("rows").get<Eigen::Index>(), a.at("cols").get<Eigen::Index>());
      c.arrays.emplace_back(a.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("corrupt checkpoint header: ") + e.what());
  }
  for (auto& [name, m] : c.arrays) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw Error(ErrorKind::kFormat, "truncated checkpoint array " + name);
  }
  return c;
}

PlannerModel model_from_checkpoint(const Checkpoint& ckpt) {
  PlannerModel model(ckpt.config.model, TokenVocab(ckpt.tokens), ckpt.surfaces, ckpt.config.seed);
  auto& store = model.params();
  if (store.size() != ckpt.arrays.size()) {
    throw Error(ErrorKind::kFormat, "checkpoint holds " + std::to_string(ckpt.arrays.size()) +
                                        " arrays; the configured model has " + std::to_string(store.size()));
  }
  for (const auto& [name, m] : ckpt.arrays) {
    if (!store.contains(name)) throw Error(ErrorKind::kFormat, "checkpoint array " + name + " is not a model parameter");
    auto& p = store[static_cast<std::size_t>(store.index_of(name))];
    if (p.value.rows() != m.rows() || p.value.cols() != m.cols()) {
      throw Error(ErrorKind::kFormat, "checkpoint array " + name + " has the wrong shape");
    }
    p.value = m;
  }
  return model;
}

// ---- Trainer ----------------------------------------------------------------------

Trainer::Trainer(const std::vector<Sample>& train, const TransitionGraph* graph, const TrainConfig& config)
    : config_(config),
      model_((config.validate(), config.model), TokenVocab::from_corpus(train), surface_vocabulary(train), config.seed),
      adam_(model_.params(), config.learning_rate, config.beta1, config.beta2, config.adam_eps),
      rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  prepared_.reserve(train.size());
  for (const auto& s : train) {
    if (!s.plan) throw Error(ErrorKind::kMissingPlan, "training sample has no golden plan");
    prepared_.push_back(model_.prepare(s.collection, graph, &*s.plan));
  }
}

double Trainer::loss_and_gradient(std::span<const std::size_t> batch, ad::Gradients& grads,
                                  std::mt19937_64* rng) const {
  grads.zero();
  double total = 0.0;
  std::bernoulli_distribution drop(config_.token_dropout);
  for (std::size_t idx : batch) {
    const PreparedSample* sample = &prepared_.at(idx);
    PreparedSample noisy;
    if (rng && config_.token_dropout > 0.0) {
      noisy = *sample;
      for (auto& phrase : noisy.token_ids) {
        for (int& id : phrase) {
          if (drop(*rng)) id = TokenVocab::kUnk;
        }
      }
      sample = &noisy;
    }
    ad::Tape tape;
    ad::Var loss = model_.loss(tape, *sample);
    if (!std::isfinite(loss.scalar())) {
      throw Error(ErrorKind::kNonFiniteLoss, "non-finite loss on training sample " + std::to_string(idx));
    }
    total += loss.scalar();
    tape.backward(loss, grads);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  grads.scale(scale);
  return total * scale;
}

double Trainer::step(std::span<const std::size_t> batch) {
  if (batch.empty()) throw Error(ErrorKind::kConfigInvalid, "empty batch");
  ad::Gradients grads(model_.params());
  const double loss = loss_and_gradient(batch, grads, &rng_);
  if (!grads.all_finite()) {
    std::string ids;
    for (std::size_t i : batch) ids += (ids.empty() ? "" : ",") + std::to_string(i);
    throw Error(ErrorKind::kNonFiniteLoss, "non-finite gradient in batch [" + ids + "]");
  }
  if (config_.grad_clip > 0.0) {
    const double norm = global_norm(grads);
    if (norm > config_.grad_clip) grads.scale(config_.grad_clip / norm);
  }
  adam_.step(model_.params(), grads);
  return loss;
}

double Trainer::mean_loss(std::span<const std::size_t> batch) const {
  double total = 0.0;
  for (std::size_t idx : batch) {
    ad::Tape tape(false);
    total += model_.loss(tape, prepared_.at(idx)).scalar();
  }
  return total / static_cast<double>(batch.size());
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"dev_pb4", dev_pb4}, {"dev_prl", dev_prl}};
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev, const TransitionGraph* graph,
                  const TrainConfig& config, std::ostream* log) {
  if (train_set.empty()) throw Error(ErrorKind::kEmptyCorpus, "training corpus is empty");
  for (const auto& s : dev) {
    if (!s.plan) throw Error(ErrorKind::kMissingPlan, "dev sample has no golden plan");
  }
  Trainer trainer(train_set, graph, config);
  std::vector<PhraseCollection> dev_collections;
  std::vector<Plan> dev_golden;
  for (const auto& s : dev) {
    dev_collections.push_back(s.collection);
    dev_golden.push_back(*s.plan);
  }

  TrainResult result;
  double best_pb4 = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(trainer.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), trainer.rng());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      loss_sum += trainer.step(std::span<const std::size_t>(order.data() + start, len));
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    if (!dev.empty()) {
      const auto plans = plan_corpus(trainer.model(), dev, graph, config.eval_beam, config.seed);
      const auto report = evaluate_plans(plans.plans, dev_golden, dev_collections);
      rec.dev_pb4 = report.plan_bleu4;
      rec.dev_prl = report.plan_rouge_l;
    }
    result.history.push_back(rec);
    if (log) *log << rec.to_json().dump() << '\n' << std::flush;

    if (dev.empty() || rec.dev_pb4 > best_pb4) {
      best_pb4 = rec.dev_pb4;
      since_best = 0;
      result.best = make_checkpoint(trainer.model(), config, trainer.steps(), trainer.rng(), epoch);
      result.best_epoch = epoch;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace ggp
