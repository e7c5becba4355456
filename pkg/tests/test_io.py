import itertools
from fractions import Fraction

import numpy as np
import pytest
from helpers import c4, contradiction_grid, grid_spec, line_instance, p3, penalty_pair, random_instance, row_grid

from stableclust import Instance, Metric, ParseError, Point, apply_perturbation, random_perturbation
from stableclust.io import (
    load_graph,
    load_instance,
    parse_graph,
    parse_grid_tiling,
    parse_instance,
    parse_value,
    save_instance,
    serialize_graph,
    serialize_grid_tiling,
    serialize_instance,
    write_text,
)
from stableclust.reductions import (
    build_cylinder_instance,
    build_grid_instance,
    build_pvc4_instance,
    build_pvc6_instance,
)

MINIMAL = """\
stableclust-instance 1
objective kmedian
k 1
metric euclidean
dimension 1 lift 0
begin points
0 1 0 penalty 5
10 1 10 penalty 3/1
end points
begin centres
0 0
end centres
"""


def _explicit_instance():
    pts = [Point(0, ()), Point(1, ())]
    cts = [Point(0, (), role="centre"), Point(1, (), role="centre")]
    d = {(p.site, c.site): Fraction(1 + p.id + 2 * c.id) for p in pts for c in cts}
    d[(cts[0].site, cts[1].site)] = Fraction(2)
    d[(pts[0].site, pts[1].site)] = Fraction(5, 2)
    return Instance("kmeans", pts, cts, Metric.explicit(d), 1)


def _perturbed():
    inst = random_instance(np.random.default_rng(7), 5, 4, 2, "kmedian")
    return apply_perturbation(inst, random_perturbation(inst, Fraction(6, 5), np.random.default_rng(1)))


FIXTURES = {
    "line": line_instance,
    "penalty": penalty_pair,
    "random_kmeans_penalty": lambda: random_instance(np.random.default_rng(3), 7, 5, 2, "kmeans", True),
    "explicit": _explicit_instance,
    "perturbed": _perturbed,
    "pvc4": lambda: build_pvc4_instance(c4()).instance,
    "pvc6": lambda: build_pvc6_instance(p3()).instance,
    "grid": lambda: build_grid_instance(grid_spec(contradiction_grid(), Fraction(4, 9))),
    "cylinder": lambda: build_cylinder_instance(grid_spec(row_grid(1))),
}


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_round_trip(name):
    inst = FIXTURES[name]()
    text = serialize_instance(inst)
    back = parse_instance(text)
    assert serialize_instance(back) == text
    assert back.provenance == inst.provenance
    k = inst.k
    for S in itertools.islice(itertools.combinations(inst.centre_ids, k), 40):
        assert back.cost(S) == inst.cost(S)


def test_grid_provenance_is_written():
    text = serialize_instance(FIXTURES["grid"]())
    assert "begin provenance" in text
    assert parse_instance(text).provenance


def test_minimal_file():
    inst = parse_instance(MINIMAL)
    assert inst.penalties[10] == 3
    assert inst.cost({0}) == 3
    assert inst.k == 1 and inst.objective == "kmedian"


def test_comments_and_blank_lines_ignored():
    text = "# header comment\n\n" + MINIMAL.replace("k 1", "k 1   # one centre")
    assert serialize_instance(parse_instance(text)) == serialize_instance(parse_instance(MINIMAL))


def test_irrational_penalty_round_trip():
    text = MINIMAL.replace("penalty 5", "penalty 2*sqrt(3)")
    inst = parse_instance(text)
    assert inst.penalties[0] * inst.penalties[0] == 12
    assert parse_instance(serialize_instance(inst)).penalties[0] == inst.penalties[0]


def test_parse_value_sum():
    v = parse_value("1/2+sqrt(2)")
    assert v - parse_value("sqrt(2)") == Fraction(1, 2)


@pytest.mark.parametrize("old,new,line", [
    ("stableclust-instance 1", "stableclust-instance 2", 1),
    ("objective kmedian", "objective kcenter", 2),
    ("metric euclidean", "metric manhattan", 4),
    ("penalty 5", "penalty -5", 7),
    ("penalty 5", "penalty 0", 7),
    ("0 1 0 penalty", "0 0 0 penalty", 7),
    ("10 1 10 penalty 3/1", "10 1 10 4 penalty 3", 8),
    ("10 1 10 penalty 3/1", "0 1 10 penalty 3", 8),
    ("10 1 10 penalty 3/1", "10 1 1/0 penalty 3", 8),
    ("10 1 10 penalty 3/1", "10 1 10", 9),
    ("0 0\nend centres", "0 0 penalty 1\nend centres", 11),
])
def test_parse_errors_carry_line_numbers(old, new, line):
    with pytest.raises(ParseError) as exc:
        parse_instance(MINIMAL.replace(old, new))
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}: ")


def test_unclosed_block():
    with pytest.raises(ParseError, match="not closed"):
        parse_instance(MINIMAL.replace("end centres\n", ""))


def test_trailing_content():
    with pytest.raises(ParseError) as exc:
        parse_instance(MINIMAL + "extra\n")
    assert exc.value.line == 13


def test_semantic_errors_become_parse_errors():
    with pytest.raises(ParseError):
        parse_instance(MINIMAL.replace("k 1", "k 3"))


def test_truncated_file():
    with pytest.raises(ParseError, match="unexpected end"):
        parse_instance("stableclust-instance 1\nobjective kmeans\n")


def test_explicit_metric_block_validation():
    text = serialize_instance(_explicit_instance())
    rows = text.splitlines()
    i = rows.index("begin metric")
    bad = rows[:i + 2] + [rows[i + 3]] + rows[i + 3:]
    with pytest.raises(ParseError):
        parse_instance("\n".join(bad) + "\n")
    neg = text.replace(rows[i + 2], rows[i + 2].rsplit(" ", 1)[0] + " -1")
    with pytest.raises(ParseError, match="negative"):
        parse_instance(neg)


def test_explicit_metric_missing_entries():
    text = serialize_instance(_explicit_instance())
    rows = text.splitlines()
    i = rows.index("begin metric")
    # drop the point-to-point entry; the instance never needs it
    rows[i + 2] = "p1 -"
    inst = parse_instance("\n".join(rows) + "\n")
    assert inst.cost({0}) == _explicit_instance().cost({0})


def test_save_and_load(tmp_path):
    path = tmp_path / "line.inst"
    save_instance(path, line_instance())
    assert load_instance(path).cost({0, 4}) == 2
    with pytest.raises(FileExistsError):
        save_instance(path, line_instance())
    save_instance(path, penalty_pair(), force=True)
    assert load_instance(path).has_penalties
    assert not list(tmp_path.glob("*.tmp"))


def test_write_text_refuses_overwrite(tmp_path):
    path = tmp_path / "x.txt"
    write_text(path, "a")
    with pytest.raises(FileExistsError):
        write_text(path, "b")
    assert path.read_text() == "a"


def test_graph_round_trip(tmp_path):
    g = c4()
    text = serialize_graph(g)
    assert text.splitlines()[0] == "4 4 2 4"
    assert parse_graph(text) == g
    path = tmp_path / "g.txt"
    write_text(path, text)
    assert load_graph(path) == g


@pytest.mark.parametrize("text,line", [
    ("3 2 1 2\n1 2\n", 1),
    ("3 1 1\n1 2\n", 1),
    ("3 1 1 1\n1 2 3\n", 2),
    ("3 1 1 1\n1 x\n", 2),
])
def test_graph_errors(text, line):
    with pytest.raises(ParseError) as exc:
        parse_graph(text)
    assert exc.value.line == line


def test_graph_semantic_error():
    with pytest.raises(ParseError, match="self-loop"):
        parse_graph("3 1 1 1\n2 2\n")
    with pytest.raises(ParseError):
        parse_graph("")


def test_grid_tiling_round_trip():
    gt = contradiction_grid()
    assert parse_grid_tiling(serialize_grid_tiling(gt)) == gt


@pytest.mark.parametrize("text", [
    "grid 2 1\n1 1 1,1\n",
    "grid-tiling 2 1\n1 1 11\n",
    "grid-tiling 2 1\n1 1 1,1\n1 1 2,2\n",
    "grid-tiling 2 1\n1 1\n",
    "grid-tiling 2 1\n1 1 3,1\n",
    "",
])
def test_grid_tiling_errors(text):
    with pytest.raises(ParseError):
        parse_grid_tiling(text)
