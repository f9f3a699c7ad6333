#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "ggp/corpus.hpp"
#include "ggp/error.hpp"
#include "ggp/transition_graph.hpp"
#include "test_util.hpp"

using namespace ggp;

namespace {

Sample sample(const std::vector<std::string>& surfaces, Plan plan) {
  return Sample{PhraseCollection::from_surfaces(surfaces), std::move(plan), std::nullopt};
}

// Straightforward recount: every adjacent pair of the flattened plan, by surface.
std::map<std::pair<std::string, std::string>, std::uint64_t> oracle_counts(const std::vector<Sample>& corpus) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  for (const auto& s : corpus) {
    const auto flat = s.plan->flatten();
    for (std::size_t k = 0; k + 1 < flat.size(); ++k) {
      ++counts[{s.collection[static_cast<std::size_t>(flat[k])].surface(),
                s.collection[static_cast<std::size_t>(flat[k + 1])].surface()}];
    }
  }
  return counts;
}

std::vector<Sample> random_corpus(std::mt19937_64& rng, int samples, int vocab) {
  std::vector<Sample> out;
  for (int i = 0; i < samples; ++i) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> surfaces;
    for (int k = 0; k < n; ++k) surfaces.push_back("p" + std::to_string(rng() % static_cast<unsigned>(vocab)));
    out.push_back(sample(surfaces, testing::random_plan(rng, n, 8)));
  }
  return out;
}

}  // namespace

TEST_CASE("single edge") {
  const auto g = build_transition_graph({sample({"a", "b"}, Plan{{{0}, {1}}})});
  const int a = *g.id("a"), b = *g.id("b");
  CHECK(g.count(a, b) == 1);
  CHECK(g.weight(a, b) == 1.0);
  CHECK(g.weight(b, a) == 0.0);
}

TEST_CASE("two plans") {
  const auto g = build_transition_graph({sample({"a", "b", "c"}, Plan{{{0, 1}, {2}}}),
                                         sample({"a", "c"}, Plan{{{0, 1}}})});
  const int a = *g.id("a"), b = *g.id("b"), c = *g.id("c");
  CHECK(g.count(a, b) == 1);
  CHECK(g.count(b, c) == 1);
  CHECK(g.count(a, c) == 1);
  CHECK(g.weight(a, b) == 0.5);
  CHECK(g.weight(a, c) == 0.5);
  CHECK(g.out_count(a) == 2);
  CHECK(g.row(a).size() == 2);
}

TEST_CASE("counts match an independent recount") {
  std::mt19937_64 rng(5);
  const auto corpus = random_corpus(rng, 300, 15);
  const auto g = build_transition_graph(corpus);
  const auto expected = oracle_counts(corpus);
  std::size_t nnz = 0;
  for (const auto& t : g.triples()) {
    CHECK(expected.at({g.surface(static_cast<int>(t.from)), g.surface(static_cast<int>(t.to))}) == t.count);
    ++nnz;
  }
  CHECK(nnz == expected.size());
}

TEST_CASE("rows are stochastic") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = build_transition_graph(random_corpus(rng, 50, 12));
    for (int i = 0; i < static_cast<int>(g.size()); ++i) {
      double sum = 0.0;
      for (const auto& e : g.row(i)) sum += e.weight;
      if (g.out_count(i) > 0) {
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      } else {
        CHECK(sum == 0.0);
      }
    }
  }
}

TEST_CASE("corpus order does not matter") {
  std::mt19937_64 rng(7);
  auto corpus = random_corpus(rng, 200, 20);
  const auto g1 = build_transition_graph(corpus);
  std::shuffle(corpus.begin(), corpus.end(), rng);
  const auto g2 = build_transition_graph(corpus);
  CHECK(g1 == g2);
  for (int i = 0; i < static_cast<int>(g1.size()); ++i) {
    for (int j = 0; j < static_cast<int>(g1.size()); ++j) CHECK(g1.weight(i, j) == g2.weight(i, j));
  }
}

TEST_CASE("shards merge to the full graph") {
  std::mt19937_64 rng(8);
  const auto corpus = random_corpus(rng, 120, 10);
  TransitionCounter left, right;
  for (std::size_t i = 0; i < corpus.size(); ++i) (i % 3 == 0 ? left : right).add(corpus[i]);
  right.merge(left);
  CHECK(right.finish() == build_transition_graph(corpus));
}

TEST_CASE("graph errors") {
  auto kind = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kUnknownPhrase;
  };
  CHECK(kind([] { build_transition_graph({}); }) == ErrorKind::kEmptyCorpus);
  CHECK(kind([] { build_transition_graph({Sample{PhraseCollection::from_surfaces({"a"}), std::nullopt, std::nullopt}}); }) ==
        ErrorKind::kMissingPlan);
}

TEST_CASE("binary round trip") {
  std::mt19937_64 rng(9);
  const auto g = build_transition_graph(random_corpus(rng, 100, 12));
  const auto path = std::filesystem::temp_directory_path() / "ggp_graph_test.bin";
  g.save(path);
  CHECK(TransitionGraph::load(path) == g);

  std::ofstream(path, std::ios::binary) << "not a graph";
  CHECK_THROWS_AS(TransitionGraph::load(path), Error);
  CHECK_THROWS_AS(TransitionGraph::load(path.string() + ".missing"), Error);
}

TEST_CASE("subgraph is the principal submatrix") {
  std::mt19937_64 rng(10);
  const auto g = build_transition_graph(random_corpus(rng, 200, 10));
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<std::string> surfaces;
    for (int k = 0; k < n; ++k) surfaces.push_back("p" + std::to_string(rng() % 14));  // some unknown
    const auto c = PhraseCollection::from_surfaces(surfaces);
    const auto rel = extract_subgraph(g, c);
    REQUIRE(rel.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto a = g.id(surfaces[static_cast<std::size_t>(i)]);
        const auto b = g.id(surfaces[static_cast<std::size_t>(j)]);
        const double w = a && b ? g.weight(*a, *b) : 0.0;
        CHECK(rel.weights(i, j) == w);
        CHECK(rel.mask(i, j) == (i == j || w > 0.0));
      }
    }
  }
}

TEST_CASE("unknown phrases give an identity mask") {
  const auto g = build_transition_graph({sample({"a", "b"}, Plan{{{0, 1}}})});
  const auto rel = extract_subgraph(g, PhraseCollection::from_surfaces({"x", "y", "z"}));
  CHECK(rel.weights.isZero());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(rel.mask(i, j) == (i == j));
  }
  const auto one = extract_subgraph(g, PhraseCollection::from_surfaces({"a"}));
  CHECK(one.mask.rows() == 1);
  CHECK(one.mask(0, 0));
}
