"""Line-oriented text formats for instances, graphs and grid tilings.

Instance files::

    stableclust-instance 1
    objective kmedian
    k 2
    metric euclidean            # or: cylinder_max, explicit [triangle false]
    dimension 2 lift 0
    begin points
    <id> <multiplicity> <coords...> <lift squares...> [penalty <value>]
    end points
    begin centres
    <id> <coords...> <lift squares...>
    end centres
    order <centre ids...>       # optional, tie-breaking order
    begin metric                # explicit metric only
    <site> <squared distances to every earlier site, '-' if absent>
    end metric
    begin provenance            # optional
    <key> <value>
    end provenance

Rationals are written reduced (``p/q``); square roots as ``c*sqrt(n)``.
Sites in the metric block are ``p<id>`` and ``c<id>``, data points first,
each group in ascending id order.  ``#`` starts a comment.

Graph files start with ``n m k s`` followed by ``m`` lines ``u v`` (vertices
``1..n``).  Grid tiling files start with ``grid-tiling n k`` followed by one
line ``i j a,b a,b ...`` per cell.
"""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from .errors import ParseError
from .exact import format_exact, parse_exact
from .instance import Instance
from .metric import CYLINDER_MAX, EUCLIDEAN, Metric, Point

__all__ = [
    "FORMAT_VERSION",
    "format_value",
    "parse_value",
    "serialize_instance",
    "parse_instance",
    "load_instance",
    "save_instance",
    "serialize_graph",
    "parse_graph",
    "load_graph",
    "serialize_grid_tiling",
    "parse_grid_tiling",
    "load_grid_tiling",
    "write_text",
]

FORMAT_VERSION = 1
MAGIC = "stableclust-instance"


def format_value(v) -> str:
    """Exact value as a single whitespace-free token."""
    return format_exact(v).replace(" ", "")


def parse_value(token: str):
    parts = token.split("+")
    if len(parts) == 1:
        return parse_exact(token)
    total = Fraction(0)
    for p in parts:
        total = total + parse_exact(p)
    return total


def _rational(token: str, line: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"malformed rational {token!r}", line) from None


def _int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {token!r}", line) from None


def _site_name(site) -> str:
    role, i = site
    return f"{'p' if role == 'point' else 'c'}{i}"


def _sites(inst: Instance) -> list:
    return [p.site for p in sorted(inst.points, key=lambda p: p.id)] + \
           [c.site for c in sorted(inst.centres, key=lambda c: c.id)]


def serialize_instance(inst: Instance) -> str:
    """Canonical text form: fixed block order, ascending ids, reduced rationals."""
    sample = inst.centres[0]
    dim, lift = len(sample.coords), len(sample.lift_sq)
    out = [f"{MAGIC} {FORMAT_VERSION}", f"objective {inst.objective}", f"k {inst.k}"]
    m = inst.metric
    if m.kind == "explicit":
        out.append("metric explicit" + ("" if m.triangle else " triangle false"))
    else:
        out.append(f"metric {m.kind}")
    out.append(f"dimension {dim} lift {lift}")
    out.append("begin points")
    for p in sorted(inst.points, key=lambda p: p.id):
        row = [str(p.id), str(p.multiplicity)] + [format_value(x) for x in p.coords + p.lift_sq]
        if inst.penalties is not None:
            row += ["penalty", format_value(inst.penalties[p.id])]
        out.append(" ".join(row))
    out.append("end points")
    out.append("begin centres")
    for c in sorted(inst.centres, key=lambda c: c.id):
        out.append(" ".join([str(c.id)] + [format_value(x) for x in c.coords + c.lift_sq]))
    out.append("end centres")
    if list(inst.centre_order) != sorted(inst.centre_ids):
        out.append("order " + " ".join(map(str, inst.centre_order)))
    if m.kind == "explicit":
        out.append("begin metric")
        sites = _sites(inst)
        for r, a in enumerate(sites):
            row = [_site_name(a)]
            for b in sites[:r]:
                key = (a, b) if a <= b else (b, a)
                v = m.sq_table.get(key)
                row.append("-" if v is None else format_value(v))
            out.append(" ".join(row))
        out.append("end metric")
    if inst.provenance:
        out.append("begin provenance")
        for key in sorted(inst.provenance):
            out.append(f"{key} {inst.provenance[key]}")
        out.append("end provenance")
    return "\n".join(out) + "\n"


def _lines(text: str) -> Iterator[tuple[int, list]]:
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield n, body.split()


def _raw_lines(text: str) -> Iterator[tuple[int, str]]:
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield n, body


class _Reader:
    def __init__(self, text: str):
        self.rows = list(_raw_lines(text))
        self.pos = 0

    def peek(self):
        return self.rows[self.pos] if self.pos < len(self.rows) else (None, None)

    def take(self, what: str) -> tuple[int, list]:
        if self.pos >= len(self.rows):
            last = self.rows[-1][0] if self.rows else None
            raise ParseError(f"unexpected end of file, expected {what}", last)
        n, body = self.rows[self.pos]
        self.pos += 1
        return n, body.split()

    def keyword(self, key: str) -> tuple[int, list]:
        n, toks = self.take(key)
        if toks[0] != key:
            raise ParseError(f"expected {key!r}, got {toks[0]!r}", n)
        return n, toks[1:]

    def block(self, name: str) -> list:
        n, toks = self.take(f"begin {name}")
        if toks != ["begin", name]:
            raise ParseError(f"expected 'begin {name}'", n)
        rows = []
        while True:
            n, body = self.rows[self.pos] if self.pos < len(self.rows) else (None, None)
            if n is None:
                raise ParseError(f"block {name!r} is not closed", self.rows[-1][0])
            self.pos += 1
            if body.split() == ["end", name]:
                return rows
            rows.append((n, body))


def _parse_point_row(n: int, toks: list, dim: int, lift: int, has_id_mult: bool):
    head = 2 if has_id_mult else 1
    need = head + dim + lift
    if len(toks) < need:
        raise ParseError(f"dimension mismatch: expected {dim + lift} coordinates", n)
    pid = _int(toks[0], n, "id")
    mult = _int(toks[1], n, "multiplicity") if has_id_mult else 1
    coords = tuple(_rational(t, n) for t in toks[head:head + dim])
    lifts = tuple(_rational(t, n) for t in toks[head + dim:need])
    rest = toks[need:]
    pen = None
    if rest:
        if rest[0] != "penalty" or len(rest) != 2:
            raise ParseError(f"dimension mismatch or trailing tokens {rest}", n)
        try:
            pen = parse_value(rest[1])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"malformed penalty {rest[1]!r}", n) from None
        if not pen > 0:
            raise ParseError(f"penalty must be positive, got {rest[1]}", n)
    if mult < 1:
        raise ParseError("multiplicity must be positive", n)
    if any(v < 0 for v in lifts):
        raise ParseError("lifted squares must be nonnegative", n)
    return pid, mult, coords, lifts, pen


def parse_instance(text: str) -> Instance:
    """Parse and validate an instance file; errors carry line numbers."""
    rd = _Reader(text)
    n, toks = rd.take("header")
    if toks[0] != MAGIC:
        raise ParseError(f"missing {MAGIC!r} header", n)
    if len(toks) != 2 or toks[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {' '.join(toks[1:])!r}", n)
    n, rest = rd.keyword("objective")
    objective = rest[0] if rest else ""
    if objective not in ("kmeans", "kmedian"):
        raise ParseError(f"unknown objective {objective!r}", n)
    n, rest = rd.keyword("k")
    k = _int(rest[0] if rest else "", n, "k")
    n, rest = rd.keyword("metric")
    if not rest or rest[0] not in ("euclidean", "cylinder_max", "explicit"):
        raise ParseError(f"unknown metric {' '.join(rest)!r}", n)
    kind = rest[0]
    triangle = rest[1:] != ["triangle", "false"]
    n, rest = rd.keyword("dimension")
    if len(rest) != 3 or rest[1] != "lift":
        raise ParseError("expected 'dimension <d> lift <l>'", n)
    dim, lift = _int(rest[0], n, "dimension"), _int(rest[2], n, "lift")

    points, penalties, seen = [], {}, set()
    for n, body in rd.block("points"):
        pid, mult, coords, lifts, pen = _parse_point_row(n, body.split(), dim, lift, True)
        if pid in seen:
            raise ParseError(f"duplicate point id {pid}", n)
        seen.add(pid)
        points.append(Point(pid, coords, mult, lifts))
        if pen is not None:
            penalties[pid] = pen
    if penalties and len(penalties) != len(points):
        raise ParseError("penalties must be given for every point or for none", rd.rows[rd.pos - 1][0])

    centres, seen = [], set()
    for n, body in rd.block("centres"):
        cid, _, coords, lifts, pen = _parse_point_row(n, body.split(), dim, lift, False)
        if pen is not None:
            raise ParseError("centres cannot carry penalties", n)
        if cid in seen:
            raise ParseError(f"duplicate centre id {cid}", n)
        seen.add(cid)
        centres.append(Point(cid, coords, 1, lifts, "centre"))

    order = None
    n, body = rd.peek()
    if body is not None and body.split()[0] == "order":
        rd.pos += 1
        order = tuple(_int(t, n, "centre id") for t in body.split()[1:])

    metric = {"euclidean": EUCLIDEAN, "cylinder_max": CYLINDER_MAX}.get(kind)
    if kind == "explicit":
        sites = [p.site for p in sorted(points, key=lambda p: p.id)] + \
                [c.site for c in sorted(centres, key=lambda c: c.id)]
        names = {_site_name(s): s for s in sites}
        table = {}
        rows = rd.block("metric")
        if len(rows) != len(sites):
            raise ParseError(f"metric block needs {len(sites)} rows, got {len(rows)}",
                             rows[-1][0] if rows else None)
        for r, (n, body) in enumerate(rows):
            toks = body.split()
            if names.get(toks[0]) != sites[r]:
                raise ParseError(f"expected row for {_site_name(sites[r])}, got {toks[0]!r}", n)
            if len(toks) != r + 1:
                raise ParseError(f"row {toks[0]} needs {r} entries, got {len(toks) - 1}", n)
            for b, t in zip(sites[:r], toks[1:]):
                if t == "-":
                    continue
                v = _rational(t, n)
                if v < 0:
                    raise ParseError(f"negative squared distance {t}", n)
                table[(sites[r], b)] = v
        metric = Metric.from_squares(table, triangle)

    prov = {}
    n, body = rd.peek()
    if body is not None and body == "begin provenance":
        for n, line in rd.block("provenance"):
            key, _, value = line.partition(" ")
            prov[key] = value.strip()
    n, body = rd.peek()
    if body is not None:
        raise ParseError(f"unexpected content {body!r}", n)

    try:
        return Instance(objective, points, centres, metric, k, penalties or None, order, prov)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_instance(path) -> Instance:
    return parse_instance(Path(path).read_text())


def write_text(path, text: str, force: bool = False) -> None:
    """Write ``text`` atomically; refuse to overwrite unless ``force``."""
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use --force to overwrite)")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def save_instance(path, inst: Instance, force: bool = False) -> None:
    write_text(path, serialize_instance(inst), force)


# graphs ------------------------------------------------------------------

def serialize_graph(g) -> str:
    lines = [f"{g.n_vertices} {g.m} {g.k} {g.s}"] + [f"{u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str):
    from .errors import InstanceError
    from .reductions.pvc import PvcGraph

    rows = list(_lines(text))
    if not rows:
        raise ParseError("empty graph file", None)
    n, head = rows[0]
    if len(head) != 4:
        raise ParseError("graph header must be 'n m k s'", n)
    nv, m, k, s = (_int(t, n, "header field") for t in head)
    if len(rows) - 1 != m:
        raise ParseError(f"header announces {m} edges, found {len(rows) - 1}", n)
    edges = []
    for n, toks in rows[1:]:
        if len(toks) != 2:
            raise ParseError("edge line must be 'u v'", n)
        edges.append((_int(toks[0], n, "vertex"), _int(toks[1], n, "vertex")))
    try:
        return PvcGraph(nv, tuple(edges), k, s)
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc


def load_graph(path):
    return parse_graph(Path(path).read_text())


# grid tilings ------------------------------------------------------------

def serialize_grid_tiling(gt) -> str:
    lines = [f"grid-tiling {gt.n} {gt.k}"]
    for i in range(1, gt.k + 1):
        for j in range(1, gt.k + 1):
            lines.append(f"{i} {j} " + " ".join(f"{a},{b}" for a, b in sorted(gt.sets[i, j])))
    return "\n".join(lines) + "\n"


def parse_grid_tiling(text: str):
    from .errors import InstanceError
    from .reductions.grid import GridTilingInstance

    rows = list(_lines(text))
    if not rows:
        raise ParseError("empty grid tiling file", None)
    n, head = rows[0]
    if len(head) != 3 or head[0] != "grid-tiling":
        raise ParseError("header must be 'grid-tiling n k'", n)
    gn, gk = _int(head[1], n, "n"), _int(head[2], n, "k")
    sets = {}
    for n, toks in rows[1:]:
        if len(toks) < 3:
            raise ParseError("cell line must be 'i j a,b ...'", n)
        cell = (_int(toks[0], n, "i"), _int(toks[1], n, "j"))
        if cell in sets:
            raise ParseError(f"duplicate cell {cell}", n)
        pairs = set()
        for t in toks[2:]:
            a, sep, b = t.partition(",")
            if not sep:
                raise ParseError(f"malformed pair {t!r}", n)
            pairs.add((_int(a, n, "a"), _int(b, n, "b")))
        sets[cell] = pairs
    try:
        return GridTilingInstance(gn, gk, sets)
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc


def load_grid_tiling(path):
    return parse_grid_tiling(Path(path).read_text())
