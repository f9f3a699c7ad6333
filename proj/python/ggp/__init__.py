"""Graph-based grouping planner."""

from ._core import (
    GGPError,
    TransitionGraph,
    bleu4,
    corpus_bleu4,
    graph_greedy_plan,
    is_valid_plan,
    linearize_plan,
    parse_plan,
    plan_bleu4,
    plan_rouge_l,
    random_plan,
    rouge_l,
    run_cli,
    serialize_plan,
)

__all__ = [
    "GGPError",
    "TransitionGraph",
    "bleu4",
    "corpus_bleu4",
    "graph_greedy_plan",
    "is_valid_plan",
    "linearize_plan",
    "parse_plan",
    "plan_bleu4",
    "plan_rouge_l",
    "random_plan",
    "rouge_l",
    "run_cli",
    "serialize_plan",
]
