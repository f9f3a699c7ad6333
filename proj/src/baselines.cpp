#include "ggp/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>

namespace ggp {
namespace {

template <typename Rng>
int pick_uniform(const std::vector<int>& options, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
  return options[dist(rng)];
}

}  // namespace

Plan random_planner(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> dist(0, i - 1);
    std::swap(order[i - 1], order[dist(rng)]);
  }
  std::bernoulli_distribution cut(kRandomBoundaryProbability);
  Plan plan;
  Group group;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && cut(rng)) {
      plan.groups.push_back(std::move(group));
      group.clear();
    }
    group.push_back(order[i]);
  }
  if (!group.empty()) plan.groups.push_back(std::move(group));
  return plan;
}

Plan graph_greedy_planner(const PhraseCollection& collection, const TransitionGraph& graph, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(collection.size());
  const RelationMatrix rel = extract_subgraph(graph, collection);

  std::vector<double> positive;
  for (Eigen::Index i = 0; i < rel.weights.size(); ++i) {
    if (rel.weights.data()[i] > 0.0) positive.push_back(rel.weights.data()[i]);
  }
  std::optional<double> median;
  if (!positive.empty()) {
    std::sort(positive.begin(), positive.end());
    const std::size_t m = positive.size();
    median = m % 2 == 1 ? positive[m / 2] : 0.5 * (positive[m / 2 - 1] + positive[m / 2]);
  }

  std::vector<std::uint64_t> out_count(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (auto id = graph.id(collection[static_cast<std::size_t>(i)].surface())) out_count[static_cast<std::size_t>(i)] = graph.out_count(*id);
  }
  // Highest out-count first; among equals, the phrase fewest collection
  // members lead into, so a chain starts at its head.
  auto in_edges = [&rel, n](int i) {
    int k = 0;
    for (int j = 0; j < n; ++j) k += j != i && rel.weights(j, i) > 0.0;
    return k;
  };
  const std::uint64_t top = *std::max_element(out_count.begin(), out_count.end());
  std::vector<int> starts;
  int fewest = n;
  for (int i = 0; i < n; ++i) {
    if (out_count[static_cast<std::size_t>(i)] != top) continue;
    const int k = in_edges(i);
    if (k < fewest) {
      fewest = k;
      starts.clear();
    }
    if (k == fewest) starts.push_back(i);
  }

  std::vector<bool> used(static_cast<std::size_t>(n), false);
  int current = pick_uniform(starts, rng);
  used[static_cast<std::size_t>(current)] = true;
  Plan plan;
  Group group{current};
  for (int step = 1; step < n; ++step) {
    double best = 0.0;
    std::vector<int> ties;
    std::vector<int> unused;
    for (int j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      unused.push_back(j);
      const double w = rel.weights(current, j);
      if (w > best) {
        best = w;
        ties = {j};
      } else if (w > 0.0 && w == best) {
        ties.push_back(j);
      }
    }
    const int next = pick_uniform(ties.empty() ? unused : ties, rng);
    if (median && best < *median) {
      plan.groups.push_back(std::move(group));
      group.clear();
    }
    group.push_back(next);
    used[static_cast<std::size_t>(next)] = true;
    current = next;
  }
  plan.groups.push_back(std::move(group));
  return plan;
}

}  // namespace ggp
