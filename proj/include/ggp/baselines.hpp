#pragma once

#include <cstdint>

#include "ggp/plan.hpp"
#include "ggp/transition_graph.hpp"

namespace ggp {

inline constexpr double kRandomBoundaryProbability = 0.5;

/// Uniform random permutation of all n phrases, with a group boundary placed in
/// each of the n-1 gaps independently with probability 0.5.
Plan random_planner(std::size_t n, std::uint64_t seed);

/// Starts at the phrase with the largest corpus out-count (ties go to the phrase
/// with the fewest incoming in-collection edges, then uniformly), then repeatedly moves
/// to the unused phrase with the heaviest transition from the current one (ties
/// and dead ends broken uniformly at random). A boundary precedes every step
/// whose edge weight falls below the median positive weight of the subgraph.
Plan graph_greedy_planner(const PhraseCollection& collection, const TransitionGraph& graph, std::uint64_t seed);

}  // namespace ggp
