import json

import pytest

import ggp


SURFACES = ["red fox", "lazy dog", "jumps", "quick"]


def test_plan_round_trip():
    groups = ggp.parse_plan("quick, red fox; jumps, lazy dog", SURFACES)
    assert groups == [[3, 0], [2, 1]]
    assert ggp.serialize_plan(groups, SURFACES) == "quick, red fox; jumps, lazy dog"
    assert ggp.is_valid_plan(groups, SURFACES)
    assert ggp.linearize_plan(groups, SURFACES) == ["quick", "red fox", "<SEP>", "jumps", "lazy dog"]


def test_unknown_phrase_raises_with_kind():
    with pytest.raises(ggp.GGPError) as info:
        ggp.parse_plan("cat", SURFACES)
    assert info.value.kind == "UnknownPhrase"


def test_metrics():
    toks = "the cat sat on the mat".split()
    assert ggp.bleu4(toks, [toks]) == pytest.approx(100.0)
    assert ggp.rouge_l(toks, toks) == pytest.approx(100.0)
    assert ggp.bleu4(["x"], [toks]) == 0.0
    plan = [[0, 1], [2, 3]]
    assert ggp.plan_bleu4(plan, plan, SURFACES) == pytest.approx(100.0)
    assert ggp.plan_rouge_l(plan, [[0], [1, 2, 3]], SURFACES) < 100.0


def test_random_plan_covers_every_phrase_once():
    groups = ggp.random_plan(6, seed=3)
    assert sorted(i for g in groups for i in g) == list(range(6))
    assert groups == ggp.random_plan(6, seed=3)


def test_cli_pipeline(tmp_path):
    out = str(tmp_path)
    code, _, err = ggp.run_cli(["synth", "--out-dir", out, "--train", "200", "--dev", "20", "--test", "20"])
    assert code == 0, err
    code, _, err = ggp.run_cli(["build-graph", "--corpus", f"{out}/train.jsonl", "--out", f"{out}/graph.bin"])
    assert code == 0, err

    graph = ggp.TransitionGraph.load(f"{out}/graph.bin")
    assert len(graph) > 0
    rebuilt = ggp.TransitionGraph.from_corpus(f"{out}/train.jsonl")
    assert rebuilt.vocab == graph.vocab
    rel = graph.relation_matrix(graph.vocab[:5])
    assert rel.shape == (5, 5)
    assert (rel >= 0.0).all()
    assert (rel.sum(axis=1) <= 1.0 + 1e-9).all()

    with open(f"{out}/test.jsonl") as f:
        sample = json.loads(f.readline())
    surfaces = sample["phrases"]
    groups = ggp.graph_greedy_plan(surfaces, graph, seed=1)
    assert ggp.is_valid_plan(groups, surfaces)

    code, _, err = ggp.run_cli(["eval", "--corpus", f"{out}/missing.jsonl", "--plans", f"{out}/x.txt"])
    assert code == 3
    assert json.loads(err)["kind"] == "FileNotFound"
