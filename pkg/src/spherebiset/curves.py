"""Multicurves as conjugacy classes: invariance, Thurston matrices, exact
spectral tests, curve graphs and the bounded Levy search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .groups import BoundExceeded, ConjClass, Word
from .machines import Machine, _scc


class CurveError(ValueError):
    pass


class Multicurve:
    """A finite set of unoriented essential conjugacy classes, kept in a
    canonical sorted order."""

    def __init__(self, group, words: Iterable[Word]):
        self.group = group
        classes = []
        seen = set()
        for w in words:
            cls = group.conj_class(w, oriented=False)
            kind, _, _ = group.classify_class(cls)
            if kind != "essential":
                raise CurveError(f"class of {w!r} is {kind}, not essential")
            if cls.form not in seen:
                seen.add(cls.form)
                classes.append(cls)
        classes.sort(key=lambda c: c.form.sort_key())
        self.classes: tuple[ConjClass, ...] = tuple(classes)

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __contains__(self, cls: ConjClass) -> bool:
        return any(c.form == cls.form for c in self.classes)

    def __eq__(self, other):
        return (isinstance(other, Multicurve)
                and [c.form for c in self.classes]
                == [c.form for c in other.classes])

    def index(self, cls: ConjClass) -> int:
        for i, c in enumerate(self.classes):
            if c.form == cls.form:
                return i
        raise CurveError("class not in multicurve")

    def forms(self) -> list[Word]:
        return [c.form for c in self.classes]

    def union(self, other: "Multicurve") -> "Multicurve":
        return Multicurve(self.group, self.forms() + other.forms())

    def __repr__(self):
        return f"Multicurve({self.forms()})"


@dataclass
class InvarianceReport:
    backward_closed: bool
    surjective: bool
    offending: list[tuple[Word, ConjClass]] = field(default_factory=list)

    @property
    def invariant(self) -> bool:
        return self.backward_closed and self.surjective


def _lift_classification(machine: Machine, curve: ConjClass,
                         curves: Multicurve):
    """Classify every lift of ``curve``: yields (degree, kind, data) with kind
    in {'trivial', 'peripheral', 'curve', 'other'}."""
    G = machine.left
    for d, prod, _ in machine.lift_orbits(curve.form):
        cls = G.conj_class(prod, oriented=False)
        kind, name, exp = G.classify_class(cls)
        if kind == "trivial":
            yield d, "trivial", None
        elif kind == "peripheral":
            yield d, "peripheral", (name, exp)
        elif cls in curves:
            yield d, "curve", curves.index(cls)
        else:
            yield d, "other", cls


def is_invariant(machine: Machine, curves: Multicurve) -> InvarianceReport:
    """Backward closure and surjectivity of the essential lifts."""
    hit: set[int] = set()
    offending = []
    closed = True
    for curve in curves:
        for d, kind, data in _lift_classification(machine, curve, curves):
            if kind == "curve":
                hit.add(data)
            elif kind == "other":
                closed = False
                offending.append((curve.form, data))
    surjective = hit == set(range(len(curves)))
    return InvarianceReport(closed, surjective, offending)


def generate_invariant(machine: Machine, seed: Multicurve,
                       bound: int = 64) -> Multicurve:
    """Close the seed under essential lifts, up to the given set size."""
    group = machine.left
    current = list(seed.forms())
    known = set(current)
    todo = list(current)
    while todo:
        w = todo.pop(0)
        for d, prod, _ in machine.lift_orbits(w):
            cls = group.conj_class(prod, oriented=False)
            kind, _, _ = group.classify_class(cls)
            if kind == "essential" and cls.form not in known:
                known.add(cls.form)
                current.append(cls.form)
                todo.append(cls.form)
                if len(current) > bound:
                    raise BoundExceeded(
                        f"invariant closure exceeded {bound} curves")
    return Multicurve(group, current)


class ThurstonMatrix:
    """Exact nonnegative rational transition matrix indexed by a multicurve."""

    def __init__(self, curves: Multicurve,
                 entries: list[list[Fraction]]):
        n = len(curves)
        if len(entries) != n or any(len(r) != n for r in entries):
            raise CurveError("matrix shape mismatch")
        self.curves = curves
        self.entries = [[Fraction(x) for x in row] for row in entries]

    def __eq__(self, other):
        if isinstance(other, ThurstonMatrix):
            return self.entries == other.entries and self.curves == other.curves
        return self.entries == [[Fraction(x) for x in row] for row in other]

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def size(self) -> int:
        return len(self.entries)

    def __repr__(self):
        return f"ThurstonMatrix({self.entries})"


def thurston_matrix(machine: Machine, curves: Multicurve) -> ThurstonMatrix:
    """Column gamma collects 1/deg over lifts landing in the multicurve
    (unoriented matching)."""
    report = is_invariant(machine, curves)
    if not report.backward_closed:
        raise CurveError("multicurve is not backward-closed")
    n = len(curves)
    entries = [[Fraction(0)] * n for _ in range(n)]
    for j, curve in enumerate(curves):
        for d, kind, data in _lift_classification(machine, curve, curves):
            if kind == "curve":
                entries[data][j] += Fraction(1, d)
    return ThurstonMatrix(curves, entries)


def spectral_ge_one(matrix) -> bool:
    """Exact test whether the spectral radius of a nonnegative rational
    matrix is >= 1.

    For nonnegative T the spectral radius is an eigenvalue, so I - T is
    singular iff 1 is an eigenvalue; otherwise T has radius < 1 exactly when
    (I - T)^-1 is entrywise nonnegative (the M-matrix characterization).
    """
    entries = matrix.entries if isinstance(matrix, ThurstonMatrix) else [
        [Fraction(x) for x in row] for row in matrix]
    n = len(entries)
    m = [[(Fraction(1) if i == j else Fraction(0)) - entries[i][j]
          for j in range(n)] for i in range(n)]
    inv = _invert(m)
    if inv is None:
        return True
    return any(x < 0 for row in inv for x in row)


def _invert(m: list[list[Fraction]]) -> Optional[list[list[Fraction]]]:
    n = len(m)
    a = [row[:] + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        pv = a[col][col]
        a[col] = [x / pv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


# ---------------------------------------------------------------------------
# Curve graphs
# ---------------------------------------------------------------------------

@dataclass
class CurveGraph:
    """Directed multigraph on a multicurve; an edge gamma -> delta per
    essential lift, labeled with the covering degree."""

    curves: Multicurve
    edges: list[tuple[int, int, int]]  # (source, target, degree)

    def out_edges(self, i: int) -> list[tuple[int, int, int]]:
        return [e for e in self.edges if e[0] == i]


def curve_graph(machine: Machine, curves: Multicurve) -> CurveGraph:
    report = is_invariant(machine, curves)
    if not report.backward_closed:
        raise CurveError("multicurve is not backward-closed")
    edges = []
    for j, curve in enumerate(curves):
        for d, kind, data in _lift_classification(machine, curve, curves):
            if kind == "curve":
                edges.append((j, data, d))
    edges.sort()
    return CurveGraph(curves, edges)


@dataclass
class MulticurveClassification:
    levy_cycles: list[list[int]]
    bicycles: list[list[int]]
    unicycles: list[list[int]]
    primitive_sccs: list[list[int]]
    is_levy: bool
    is_anti_levy: bool
    is_cantor: bool
    is_anti_cantor: bool
    max_levy: list[int]
    max_cantor: list[int]


def classify_multicurve(graph: CurveGraph) -> MulticurveClassification:
    n = len(graph.curves)
    adj = {i: sorted({t for s, t, _ in graph.edges if s == i})
           for i in range(n)}
    sccs = [sorted(g) for g in _scc(adj)]
    comp = {}
    for k, group in enumerate(sccs):
        for v in group:
            comp[v] = k

    def internal_edges(k):
        return [e for e in graph.edges
                if comp[e[0]] == k and comp[e[1]] == k]

    cyclic, bicycles, unicycles = [], [], []
    for k, group in enumerate(sccs):
        inside = internal_edges(k)
        has_cycle = len(group) > 1 or any(s == t for s, t, _ in inside)
        if not has_cycle:
            continue
        cyclic.append(k)
        if len(inside) > len(group):
            bicycles.append(group)
        else:
            unicycles.append(group)

    # primitive: all incoming edges come from the component itself
    primitive = []
    for k, group in enumerate(sccs):
        if all(comp[s] == k for s, t, _ in graph.edges if comp[t] == k):
            primitive.append(group)

    levy_cycles = _degree_one_cycles(graph)

    def closure(seed: set[int]) -> set[int]:
        out = set(seed)
        todo = list(seed)
        while todo:
            v = todo.pop()
            for s, t, _ in graph.edges:
                if s == v and t not in out:
                    out.add(t)
                    todo.append(t)
        return out

    levy_seed = {v for cyc in levy_cycles for v in cyc}
    cantor_seed = {v for g in bicycles for v in g}
    max_levy = sorted(closure(levy_seed)) if levy_seed else []
    max_cantor = sorted(closure(cantor_seed)) if cantor_seed else []
    return MulticurveClassification(
        levy_cycles=levy_cycles,
        bicycles=bicycles,
        unicycles=unicycles,
        primitive_sccs=primitive,
        is_levy=bool(levy_cycles) and set(max_levy) == set(range(n)),
        is_anti_levy=not levy_cycles,
        is_cantor=bool(cantor_seed) and set(max_cantor) == set(range(n)),
        is_anti_cantor=not bicycles,
        max_levy=max_levy,
        max_cantor=max_cantor,
    )


def _degree_one_cycles(graph: CurveGraph) -> list[list[int]]:
    """Simple directed cycles using only degree-1 edges, each rotated to
    start at its least vertex; deterministic order."""
    n = len(graph.curves)
    adj = {i: sorted({t for s, t, d in graph.edges if s == i and d == 1})
           for i in range(n)}
    cycles: set[tuple[int, ...]] = set()

    def dfs(start, v, path, on_path):
        for w in adj[v]:
            if w == start:
                cycles.add(tuple(path))
            elif w > start and w not in on_path:
                on_path.add(w)
                dfs(start, w, path + [w], on_path)
                on_path.discard(w)

    for start in range(n):
        dfs(start, start, [start], {start})
    return sorted([list(c) for c in cycles], key=lambda c: (len(c), c))


# ---------------------------------------------------------------------------
# Bounded Levy search
# ---------------------------------------------------------------------------

def essential_classes_up_to(group, bound: int) -> list[Word]:
    """Canonical unoriented essential class forms of length <= bound,
    ordered by (length, syllables)."""
    seen = set()
    out = []
    for w in group.words_up_to(bound):
        cls = group.conj_class(w, oriented=False)
        if cls.form in seen or cls.form.length() > bound:
            continue
        seen.add(cls.form)
        kind, _, _ = group.classify_class(cls)
        if kind == "essential":
            out.append(cls.form)
    out.sort(key=Word.sort_key)
    return out


def levy_search(machine: Machine, bound: int,
                closure_bound: int = 64) -> Optional[Multicurve]:
    """Enumerate essential classes with short cyclic forms, close each under
    lifts and look for a Levy cycle; returns the generated Levy multicurve of
    the first hit, or None (within the stated bound)."""
    group = machine.left
    for seed_form in essential_classes_up_to(group, bound):
        try:
            curves = generate_invariant(
                machine, Multicurve(group, [seed_form]), closure_bound)
        except BoundExceeded:
            continue
        graph = curve_graph(machine, curves)
        cycles = _degree_one_cycles(graph)
        if cycles:
            cyc = cycles[0]
            forms = [curves.classes[i].form for i in cyc]
            return generate_invariant(
                machine, Multicurve(group, forms), closure_bound)
    return None
