#include "ggp/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ggp/error.hpp"

namespace ggp {
namespace {

std::string token_name(int i, int pool) {
  const int width = pool > 100 ? 3 : 2;
  std::string digits = std::to_string(i);
  return "w" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') + digits;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Walker {
  const Matrix& hidden;
  const std::vector<bool>& closer;

  Sample sample(std::mt19937_64& rng, const std::vector<int>& allowed, int n,
                const std::vector<std::string>& surfaces) const {
    std::vector<int> walk;
    std::vector<bool> used(static_cast<std::size_t>(hidden.rows()), false);
    walk.push_back(allowed[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(allowed.size()) - 1))]);
    used[static_cast<std::size_t>(walk.back())] = true;
    std::vector<bool> is_allowed(used.size(), false);
    for (int a : allowed) is_allowed[static_cast<std::size_t>(a)] = true;

    while (static_cast<int>(walk.size()) < n) {
      const int cur = walk.back();
      std::vector<int> next;
      std::vector<double> w;
      for (Eigen::Index j = 0; j < hidden.cols(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (hidden(cur, j) > 0.0 && is_allowed[uj] && !used[uj]) {
          next.push_back(static_cast<int>(j));
          w.push_back(hidden(cur, j));
        }
      }
      int chosen;
      if (next.empty()) {
        std::vector<int> free;
        for (int a : allowed) {
          if (!used[static_cast<std::size_t>(a)]) free.push_back(a);
        }
        chosen = free[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(free.size()) - 1))];
      } else {
        std::discrete_distribution<int> pick(w.begin(), w.end());
        chosen = next[static_cast<std::size_t>(pick(rng))];
      }
      walk.push_back(chosen);
      used[static_cast<std::size_t>(chosen)] = true;
    }

    // Input order is a fresh permutation; the plan refers to slots in it.
    std::vector<int> order(walk.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> slot_of(walk.size());
    std::vector<std::string> phrase_surfaces;
    for (std::size_t s = 0; s < order.size(); ++s) {
      slot_of[static_cast<std::size_t>(order[s])] = static_cast<int>(s);
      phrase_surfaces.push_back(surfaces[static_cast<std::size_t>(walk[static_cast<std::size_t>(order[s])])]);
    }

    Plan plan;
    Group group;
    std::string text;
    for (std::size_t k = 0; k < walk.size(); ++k) {
      group.push_back(slot_of[k]);
      const bool close = group.size() == 3 || (group.size() == 2 && closer[static_cast<std::size_t>(walk[k])]);
      if (close || k + 1 == walk.size()) {
        for (std::size_t g = 0; g < group.size(); ++g) {
          if (g > 0) text += g + 1 == group.size() ? " and " : " , ";
          text += phrase_surfaces[static_cast<std::size_t>(group[g])];
        }
        text += " . ";
        plan.groups.push_back(std::move(group));
        group.clear();
      }
    }
    text.pop_back();
    Sample s{PhraseCollection::from_surfaces(phrase_surfaces), std::move(plan), std::move(text)};
    return s;
  }
};

}  // namespace

void SynthConfig::validate() const {
  if (vocab_size < 10) throw Error(ErrorKind::kConfigInvalid, "vocab_size must be at least 10");
  if (train + dev + test < 100 || train < 1 || dev < 0 || test < 0) {
    throw Error(ErrorKind::kConfigInvalid, "need at least 100 samples including a non-empty train split");
  }
  if (min_phrases < 1 || max_phrases < min_phrases) {
    throw Error(ErrorKind::kConfigInvalid, "phrases-per-sample range is empty");
  }
  if (successors < 1 || successors >= vocab_size) throw Error(ErrorKind::kConfigInvalid, "successors out of range");
  if (!(concentration > 0.0)) throw Error(ErrorKind::kConfigInvalid, "concentration must be positive");
  if (unseen_fraction < 0.0 || unseen_fraction >= 1.0) {
    throw Error(ErrorKind::kConfigInvalid, "unseen_fraction must lie in [0, 1)");
  }
  const int seen = vocab_size - static_cast<int>(unseen_fraction * vocab_size + 0.5);
  if (max_phrases > seen) throw Error(ErrorKind::kConfigInvalid, "max_phrases exceeds the phrases available to training");
  if (token_pool < 0) throw Error(ErrorKind::kConfigInvalid, "token_pool must be non-negative");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"concentration", c.concentration},
                     {"successors", c.successors}, {"train", c.train},
                     {"dev", c.dev},               {"test", c.test},
                     {"min_phrases", c.min_phrases}, {"max_phrases", c.max_phrases},
                     {"unseen_fraction", c.unseen_fraction}, {"token_pool", c.token_pool},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("vocab_size", c.vocab_size);
  get("concentration", c.concentration);
  get("successors", c.successors);
  get("train", c.train);
  get("dev", c.dev);
  get("test", c.test);
  get("min_phrases", c.min_phrases);
  get("max_phrases", c.max_phrases);
  get("unseen_fraction", c.unseen_fraction);
  get("token_pool", c.token_pool);
  get("seed", c.seed);
}

SynthCorpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int v = config.vocab_size;
  const int pool = config.token_pool > 0 ? config.token_pool : 2 * v;

  SynthCorpus out;
  std::set<std::string> taken;
  while (static_cast<int>(out.surfaces.size()) < v) {
    const int len = uniform_int(rng, 1, 3);
    std::string s;
    for (int t = 0; t < len; ++t) {
      if (t > 0) s += ' ';
      s += token_name(uniform_int(rng, 0, pool - 1), pool);
    }
    if (taken.insert(s).second) out.surfaces.push_back(s);
  }

  out.hidden = Matrix::Zero(v, v);
  std::gamma_distribution<double> gamma(config.concentration, 1.0);
  for (int i = 0; i < v; ++i) {
    std::vector<int> others;
    for (int j = 0; j < v; ++j) {
      if (j != i) others.push_back(j);
    }
    std::shuffle(others.begin(), others.end(), rng);
    double total = 0.0;
    std::vector<double> w(static_cast<std::size_t>(config.successors));
    for (auto& x : w) {
      x = gamma(rng) + 1e-12;
      total += x;
    }
    for (int k = 0; k < config.successors; ++k) {
      out.hidden(i, others[static_cast<std::size_t>(k)]) = w[static_cast<std::size_t>(k)] / total;
    }
  }

  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < v; ++i) out.closer.push_back(coin(rng));

  out.held_out.assign(static_cast<std::size_t>(v), false);
  const int unseen = static_cast<int>(config.unseen_fraction * v + 0.5);
  std::vector<int> ids(static_cast<std::size_t>(v));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (int k = 0; k < unseen; ++k) out.held_out[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])] = true;

  std::vector<int> seen_ids, all_ids(static_cast<std::size_t>(v));
  std::iota(all_ids.begin(), all_ids.end(), 0);
  for (int i = 0; i < v; ++i) {
    if (!out.held_out[static_cast<std::size_t>(i)]) seen_ids.push_back(i);
  }

  const Walker walker{out.hidden, out.closer};
  auto draw = [&](int count, const std::vector<int>& allowed, std::vector<Sample>& dst) {
    const int hi = std::min(config.max_phrases, static_cast<int>(allowed.size()));
    for (int k = 0; k < count; ++k) {
      const int n = uniform_int(rng, std::min(config.min_phrases, hi), hi);
      dst.push_back(walker.sample(rng, allowed, n, out.surfaces));
    }
  };
  draw(config.train, seen_ids, out.train);
  draw(config.dev, seen_ids, out.dev);
  draw(config.test, all_ids, out.test);
  return out;
}

}  // namespace ggp
