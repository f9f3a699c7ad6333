#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ggp/plan.hpp"
#include "ggp/tensor.hpp"

namespace ggp {

inline constexpr std::uint32_t kGraphFormatVersion = 1;

struct TransitionTriple {
  std::uint32_t from;
  std::uint32_t to;
  std::uint64_t count;

  friend bool operator==(const TransitionTriple&, const TransitionTriple&) = default;
};

struct TransitionEdge {
  int to;
  std::uint64_t count;
  double weight;
};

/// Corpus-level directed phrase graph. weight(i, j) estimates P(next = j | current = i)
/// from adjacent pairs in golden plans; rows with no outgoing counts are all zero.
class TransitionGraph {
 public:
  TransitionGraph() = default;
  /// `vocab` must be sorted and unique; triples may arrive in any order.
  TransitionGraph(std::vector<std::string> vocab, std::vector<TransitionTriple> triples);

  std::size_t size() const { return vocab_.size(); }
  std::optional<int> id(std::string_view surface) const;
  const std::string& surface(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& vocab() const { return vocab_; }

  /// Outgoing edges of `id`, sorted by target.
  const std::vector<TransitionEdge>& row(int id) const { return rows_.at(static_cast<std::size_t>(id)); }
  double weight(int from, int to) const;
  std::uint64_t count(int from, int to) const;
  std::uint64_t out_count(int from) const { return out_counts_.at(static_cast<std::size_t>(from)); }

  /// COO triples sorted by (from, to).
  std::vector<TransitionTriple> triples() const;

  void save(const std::filesystem::path& path) const;
  static TransitionGraph load(const std::filesystem::path& path);

  friend bool operator==(const TransitionGraph& a, const TransitionGraph& b) {
    return a.vocab_ == b.vocab_ && a.triples() == b.triples();
  }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> ids_;
  std::vector<std::vector<TransitionEdge>> rows_;
  std::vector<std::uint64_t> out_counts_;
};

/// Accumulates transition counts keyed by surface. Counters built over disjoint
/// shards can be merged in any order; the finished graph is identical.
class TransitionCounter {
 public:
  /// Throws kMissingPlan when the sample has no golden plan.
  void add(const Sample& sample);
  void merge(const TransitionCounter& other);
  /// Throws kEmptyCorpus when nothing was added.
  TransitionGraph finish() const;

 private:
  std::set<std::string> surfaces_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts_;
  std::size_t samples_ = 0;
};

TransitionGraph build_transition_graph(const std::vector<Sample>& corpus);

/// Per-sample relation matrix M_g: weights restricted to the collection, plus an
/// adjacency mask with every self-loop forced on.
struct RelationMatrix {
  Matrix weights;
  BoolMatrix mask;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }
};

RelationMatrix extract_subgraph(const TransitionGraph& graph, const PhraseCollection& collection);

/// Mask-only relation matrix over n nodes with self-loops (no corpus information).
RelationMatrix identity_relation(std::size_t n);

}  // namespace ggp
