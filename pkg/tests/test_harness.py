import json

import pytest

from catamatch import cli
from catamatch.edmonds import MatrixPencil
from catamatch.errors import InvalidInput
from catamatch.harness import (
    NAMED_GRAPHS,
    Corpus,
    TapeConfig,
    full_corpus,
    generate,
    graph_corpus,
    instance_text,
    named_graph,
    oracle_bipartite_matching,
    oracle_gallai_edmonds,
    oracle_matroid_intersection,
    oracle_max_matching,
    oracle_symbolic_rank,
    verify_all,
)
from catamatch.mixedrank import LinearMatroidPair, MixedMatrix
from catamatch.tutte import Graph

P = 2**31 - 1


def test_oracle_max_matching_examples():
    assert oracle_max_matching(named_graph("P3")) == 1
    assert oracle_max_matching(named_graph("K4")) == 2
    assert oracle_max_matching(named_graph("Petersen")) == 5
    with pytest.raises(InvalidInput):
        oracle_max_matching(Graph(17, ()))


def test_petersen_is_cubic():
    g = named_graph("Petersen")
    assert g.m == 15 and all(len(g.neighbors(v)) == 3 for v in g.vertices())


def test_oracle_gallai_edmonds_examples():
    ge = oracle_gallai_edmonds(named_graph("P3"))
    assert (ge.D, ge.A, ge.C) == ({1, 3}, {2}, set())
    ge = oracle_gallai_edmonds(named_graph("K4"))
    assert (ge.D, ge.A, ge.C) == (set(), set(), {1, 2, 3, 4})
    ge = oracle_gallai_edmonds(named_graph("C5"))
    assert (ge.D, ge.A, ge.C) == ({1, 2, 3, 4, 5}, set(), set())


def test_oracle_symbolic_rank_examples():
    eye = tuple(tuple(int(i == j) for j in range(3)) for i in range(3))
    assert oracle_symbolic_rank(MatrixPencil((eye,), 3, 3, P), 5) == 3
    assert oracle_symbolic_rank(MixedMatrix(2, 2, ((0, 1), (1, 1)), ((0, 0),), P), 30) == 2
    zero = ((0, 0), (0, 0))
    assert oracle_symbolic_rank(MatrixPencil((zero, zero), 2, 2, P), 5) == 0


def test_other_oracles():
    eye = ((1, 0), (0, 1))
    assert oracle_matroid_intersection(LinearMatroidPair(eye, ((1, 1),), 2, P)) == 1
    assert oracle_bipartite_matching([0, 1], ["a"], [(0, "a"), (1, "a")]) == 1


def test_generators_are_deterministic():
    assert generate("random-graph", 1, {"n": 6, "prob": 0.5}).edges == (
        (1, 4), (1, 6), (2, 3), (2, 5), (3, 4), (4, 5), (5, 6))
    g = generate("pm-graph", 1, {"n": 8, "prob": 0.4})
    assert oracle_max_matching(g) == 4
    pen = generate("pencil", 1, {"m": 2, "n": 4, "rank": 1})
    assert pen.matrices[1] == ((0, 0, 0, 0), (0, 0, 0, 0), (0, 4, 0, 2), (0, 2, 0, 1))
    for kind, params in (("mixed", {}), ("matroid-pair", {}), ("pencil", {}), ("random-graph", {})):
        assert instance_text(generate(kind, 9, params)) == instance_text(generate(kind, 9, params))


def test_generator_errors():
    with pytest.raises(InvalidInput):
        generate("pm-graph", 1, {"n": 5})
    with pytest.raises(InvalidInput):
        generate("nonsense", 1, {})
    with pytest.raises(InvalidInput):
        named_graph("K9")


def test_corpus_json_round_trip_is_byte_identical():
    c = full_corpus()
    again = Corpus.from_json(c.to_json())
    assert again.entries == c.entries
    for e, f in zip(c.entries[::25], again.entries[::25]):
        assert instance_text(e.build()) == instance_text(f.build())


def test_graph_corpus_shape():
    c = graph_corpus()
    assert len(c) == 200 + len(NAMED_GRAPHS)
    assert all(e.build().n <= 10 for e in c.entries)


def test_verify_all_small_corpus():
    c = Corpus("tiny")
    c.add("k4", "named", 0, name="K4")
    c.add("mx", "mixed", 2, rows=3, cols=3)
    c.add("mp", "matroid-pair", 3, n=4)
    c.add("pe", "pencil", 4, m=2, n=3)
    c.add("pm", "pm-graph", 5, n=6, prob=0.5)
    reports = verify_all(c, TapeConfig(), audit=True)
    assert reports and all(r.agrees and r.restored for r in reports)


def test_cli_round_trip(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert cli.main(["gen", "named", "name=C5", "-o", str(g)]) == 0
    report = tmp_path / "rep.txt"
    assert cli.main(["matching-size", str(g), "--audit", "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert "nu = 2" in out
    side = json.loads((tmp_path / "rep.txt.json").read_text())
    assert side[0]["restored"] is True
    assert cli.main(["gallai-edmonds", str(g)]) == 0
    assert "D = [1, 2, 3, 4, 5]" in capsys.readouterr().out
    assert cli.main(["matching", str(g)]) == 0
    assert cli.main(["trank", str(g), "--value-set-size", "5", "--blocks", "3"]) == 0


def test_cli_other_commands(tmp_path, capsys):
    mx = tmp_path / "m.txt"
    mx.write_text(f"2 2 {P}\n? 1\n1 1\n")
    assert cli.main(["mixed-rank", str(mx)]) == 0
    assert "rank = 2" in capsys.readouterr().out
    pair = tmp_path / "pair.txt"
    assert cli.main(["gen", "matroid-pair", "n=4", "--seed", "3", "-o", str(pair)]) == 0
    assert cli.main(["matroid-intersect", str(pair)]) == 0
    pen = tmp_path / "pen.txt"
    assert cli.main(["gen", "pencil", "m=2", "n=3", "-o", str(pen)]) == 0
    assert cli.main(["edmonds-approx", str(pen), "--epsilon", "1/3"]) == 0
    assert cli.main(["edmonds-approx", str(pen), "--ell", "3"]) == 2
    pm = tmp_path / "pm.txt"
    assert cli.main(["gen", "pm-graph", "n=6", "-o", str(pm)]) == 0
    assert cli.main(["pm", str(pm), "--w-max", "7"]) == 0
    rep = tmp_path / "rep.txt"
    rep.write_text(f"3 6 {P}\n1 0 1 0 1 0\n0 1 0 1 0 1\n1 1 0 0 2 2\n")
    assert cli.main(["matroid-matching", str(rep), str(pm)]) == 0
    assert cli.main(["verify-all", "--kind", "matroid-pair"]) == 0
