"""Sphere bisets presented by wreath recursions.

A machine stores, for every generator g of the right-acting group and every
basis element s, the transition s*g = h*s'.  The action convention is

    s_i * g = h_i * s_{pi(i)}     for psi(g) = <h_1, ..., h_d> pi,

with the wreath product <h>pi * <h'>pi' = <h_i h'_{pi(i)}> pi pi'; this is the
convention under which r = cb satisfies r = <a, r> in the twisted z^2+i
family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .groups import (BoundExceeded, ConjClass, GroupError, GroupMap,
                     SphereGroup, Word, INF)


class MachineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CheckReport:
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append(Check(name, passed, detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"{'ok  ' if c.passed else 'FAIL'} {c.name}"
                + (f": {c.detail}" if c.detail else "")
                for c in self.checks]


@dataclass(frozen=True)
class Portrait:
    """Induced map on peripheral classes with local degrees:
    mapping[left gen] = (right gen, degree)."""

    mapping: dict[str, tuple[str, int]]

    def target(self, gen: str) -> tuple[str, int]:
        return self.mapping[gen]

    def __eq__(self, other):
        return isinstance(other, Portrait) and self.mapping == other.mapping

    def compose(self, other: "Portrait") -> "Portrait":
        """self then other: degrees multiply along the composition."""
        out = {}
        for g, (mid, d1) in self.mapping.items():
            tgt, d2 = other.mapping[mid]
            out[g] = (tgt, d1 * d2)
        return Portrait(out)


# ---------------------------------------------------------------------------
# Machines
# ---------------------------------------------------------------------------

class Machine:
    """A left-free biset of finite degree given by its wreath recursion."""

    def __init__(self, left, right, basis: Sequence[str],
                 trans: dict[str, tuple[tuple[Word, ...], tuple[int, ...]]]):
        self.left = left
        self.right = right
        self.basis = tuple(basis)
        if len(set(self.basis)) != len(self.basis):
            raise MachineError("duplicate basis labels")
        if not self.basis:
            raise MachineError("empty basis")
        d = len(self.basis)
        norm_trans = {}
        for g in right.gens:
            if g not in trans:
                raise MachineError(f"missing transitions for generator {g!r}")
            entries, perm = trans[g]
            if len(entries) != d or sorted(perm) != list(range(d)):
                raise MachineError(f"bad transition shape for {g!r}")
            norm_trans[g] = (tuple(left.normalize(w) for w in entries),
                             tuple(perm))
        self.trans = norm_trans
        self._inv_trans: dict[str, tuple[tuple[Word, ...], tuple[int, ...]]] = {}

    # -- basics -------------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.basis)

    def label_index(self, label: str) -> int:
        try:
            return self.basis.index(label)
        except ValueError:
            raise MachineError(f"unknown basis label {label!r}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Machine):
            return NotImplemented
        if (self.basis != other.basis or self.left != other.left
                or self.right != other.right):
            return False
        for g in self.right.gens:
            e1, p1 = self.trans[g]
            e2, p2 = other.trans[g]
            if p1 != p2:
                return False
            if any(not self.left.equal(a, b) for a, b in zip(e1, e2)):
                return False
        return True

    def __repr__(self):
        return (f"Machine(degree {self.degree} over "
                f"{getattr(self.right, 'gens', '?')})")

    # -- the action ----------------------------------------------------------

    def _gen_step(self, g: str, sign: int):
        if sign > 0:
            return self.trans[g]
        if g not in self._inv_trans:
            entries, perm = self.trans[g]
            inv_perm = tuple(perm.index(i) for i in range(self.degree))
            inv_entries = tuple(self.left.normalize(entries[inv_perm[i]].inverse())
                                for i in range(self.degree))
            self._inv_trans[g] = (inv_entries, inv_perm)
        return self._inv_trans[g]

    def act_index(self, i: int, w: Word) -> tuple[Word, int]:
        """s_i * w = h * s_j; returns (h normalized, j)."""
        out = Word()
        for g, sign in w.letters():
            entries, perm = self._gen_step(g, sign)
            out = out * entries[i]
            i = perm[i]
        return self.left.normalize(out), i

    def act(self, label: str, w: Word) -> tuple[Word, str]:
        h, j = self.act_index(self.label_index(label), w)
        return h, self.basis[j]

    def act_tuple(self, labels: tuple[int, ...], w: Word) -> tuple[Word, tuple[int, ...]]:
        """Right action on basis words (tuples of indices); the last index is
        the innermost tensor factor."""
        if not labels:
            return self.right.normalize(w), ()
        h, j = self.act_index(labels[-1], w)
        h2, rest = self.act_tuple(labels[:-1], h)
        return h2, rest + (j,)

    def permutation(self, w: Word) -> tuple[int, ...]:
        return tuple(self.act_index(i, w)[1] for i in range(self.degree))

    def states(self, w: Word) -> list[Word]:
        return [self.act_index(i, w)[0] for i in range(self.degree)]

    # -- lifts and portraits --------------------------------------------------

    def lift_orbits(self, w: Word) -> list[tuple[int, Word, int]]:
        """Orbits of the right action of w on the basis: a list of
        (orbit length, cycle product, minimal start index)."""
        steps = [self.act_index(i, w) for i in range(self.degree)]
        seen = [False] * self.degree
        orbits = []
        for i in range(self.degree):
            if seen[i]:
                continue
            j = i
            prod = Word()
            length = 0
            while True:
                seen[j] = True
                h, j2 = steps[j]
                prod = prod * h
                length += 1
                j = j2
                if j == i:
                    break
            orbits.append((length, self.left.normalize(prod), i))
        return orbits

    def lifts(self, w: Word, oriented: bool = True) -> list[tuple[int, ConjClass]]:
        """The lift multiset of the conjugacy class of w."""
        return [(d, self.left.conj_class(p, oriented=oriented))
                for d, p, _ in self.lift_orbits(w)]

    def portrait(self) -> Portrait:
        report, portrait = self._check_lifts()
        bad = report.failures()
        if bad:
            raise MachineError("not a sphere biset: " + bad[0].name)
        return portrait

    def _check_lifts(self) -> tuple[CheckReport, Optional[Portrait]]:
        report = CheckReport()
        mapping: dict[str, tuple[str, int]] = {}
        ok = True
        for g in self.right.gens:
            for d, cls in self.lifts(Word.gen(g), oriented=True):
                kind, name, exp = self.left.classify_class(cls)
                if kind == "trivial":
                    continue
                if kind != "peripheral" or exp != 1:
                    report.add("lift condition", False,
                               f"lift of {g} is neither trivial nor peripheral")
                    ok = False
                    continue
                if name in mapping:
                    report.add("lift condition", False,
                               f"peripheral class {name} lifted twice")
                    ok = False
                else:
                    mapping[name] = (g, d)
        missing = [g for g in self.left.gens if g not in mapping]
        if missing:
            report.add("lift condition", False,
                       f"peripheral classes never lifted: {missing}")
            ok = False
        if ok:
            report.add("lift condition", True)
            return report, Portrait(mapping)
        return report, None

    # -- admissibility ---------------------------------------------------------

    def check_sphere_biset(self) -> tuple[CheckReport, Optional[Portrait]]:
        """Verify the sphere-biset axioms; failures are report entries."""
        report = CheckReport()
        # relator and torsion relations die in the wreath product
        rel = self.right.relator_word()
        rel_ok = all(self.act_index(i, rel) == (Word(), i)
                     for i in range(self.degree))
        report.add("relator acts trivially", rel_ok)
        for g, e in zip(self.right.gens, self.right.orders):
            if e != INF:
                okg = all(self.act_index(i, Word.gen(g, e)) == (Word(), i)
                          for i in range(self.degree))
                report.add(f"order relation {g}^{e}", okg)
        # transitivity
        parent = list(range(self.degree))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.right.gens:
            _, perm = self.trans[g]
            for i, j in enumerate(perm):
                parent[find(i)] = find(j)
        transitive = len({find(i) for i in range(self.degree)}) == 1
        report.add("right-transitive", transitive)
        # Riemann-Hurwitz
        rh = 0
        for g in self.right.gens:
            for d, _, _ in self.lift_orbits(Word.gen(g)):
                rh += d - 1
        report.add("Riemann-Hurwitz", rh == 2 * self.degree - 2,
                   f"sum {rh} vs {2 * self.degree - 2}")
        lift_report, portrait = self._check_lifts()
        report.checks.extend(lift_report.checks)
        return report, portrait

    # -- products and basis changes --------------------------------------------

    def tensor(self, other: "Machine") -> "Machine":
        """self (x) other; requires self.right == other.left.  The basis is
        the product basis with the self-label major."""
        if self.right != other.left:
            raise MachineError("tensor group mismatch")
        labels = tuple(f"{a}.{b}" for a in self.basis for b in other.basis)
        db = other.degree
        trans = {}
        for g in other.right.gens:
            entries = []
            perm = []
            for i in range(self.degree):
                for j in range(other.degree):
                    h, j2 = other.act_index(j, Word.gen(g))
                    h2, i2 = self.act_index(i, h)
                    entries.append(h2)
                    perm.append(i2 * db + j2)
            trans[g] = (tuple(entries), tuple(perm))
        return Machine(self.left, other.right, labels, trans)

    def change_basis(self, new: Sequence[tuple[str, Word, str]]) -> "Machine":
        """New basis elements newlabel = prefix * oldlabel; the old labels
        must be hit exactly once."""
        if len(new) != self.degree:
            raise MachineError("basis size mismatch")
        olds = [self.label_index(old) for _, _, old in new]
        if sorted(olds) != list(range(self.degree)):
            raise MachineError("old labels must form a permutation of the basis")
        labels = tuple(lbl for lbl, _, _ in new)
        prefixes = [p for _, p, _ in new]
        where = {o: k for k, o in enumerate(olds)}  # old index -> new position
        trans = {}
        for g in self.right.gens:
            entries = []
            perm = []
            for k in range(self.degree):
                h, j = self.act_index(olds[k], Word.gen(g))
                k2 = where[j]
                entries.append(self.left.mul(prefixes[k], h,
                                             self.left.inv(prefixes[k2])))
                perm.append(k2)
            trans[g] = (tuple(entries), tuple(perm))
        return Machine(self.left, self.right, labels, trans)

    def relabeled(self, labels: Sequence[str]) -> "Machine":
        if len(labels) != self.degree:
            raise MachineError("label count mismatch")
        return Machine(self.left, self.right, tuple(labels), dict(self.trans))

    # -- misc invariants ---------------------------------------------------------

    def ord_min(self) -> dict[str, Optional[int]]:
        """Minimal orbisphere orders per peripheral class; None means infinite."""
        if self.left != self.right:
            raise MachineError("ord_min needs equal acting groups")
        lift_data: dict[str, list[tuple[int, Optional[str]]]] = {}
        for g in self.right.gens:
            rows = []
            for d, cls in self.lifts(Word.gen(g), oriented=True):
                kind, name, _ = self.left.classify_class(cls)
                if kind == "peripheral":
                    rows.append((d, name))
                elif kind == "trivial":
                    rows.append((d, None))
                else:
                    raise MachineError("lift condition fails; not a sphere biset")
            lift_data[g] = rows
        # infinite order: a reachable cycle with an edge of degree > 1
        out: dict[str, Optional[int]] = {}
        sccs = _scc({g: [b for d, b in lift_data[g] if b is not None]
                     for g in self.right.gens})
        comp = {}
        for k, group in enumerate(sccs):
            for v in group:
                comp[v] = k
        heavy = set()
        for g in self.right.gens:
            for d, b in lift_data[g]:
                if b is not None and comp[b] == comp[g] and d > 1:
                    heavy.add(comp[g])
        for g in self.right.gens:
            reach = _reachable(g, lift_data)
            if any(comp[x] in heavy for x in reach):
                out[g] = None
                continue
            values: dict[str, set[int]] = {x: {1} for x in reach}
            changed = True
            while changed:
                changed = False
                for x in reach:
                    new = set(values[x])
                    for d, b in lift_data[x]:
                        if b is None:
                            new.add(d)
                        else:
                            for q in values[b]:
                                new.add(d * q)
                    if new != values[x]:
                        values[x] = new
                        changed = True
            import math
            out[g] = math.lcm(*values[g])
        return out

    def tree_action(self, w: Word, level: int) -> dict[tuple[int, ...], tuple[int, ...]]:
        """The permutation induced by w on basis words of the given length."""
        if self.left != self.right:
            raise MachineError("tree_action needs equal acting groups")
        out = {}
        for tup in itertools.product(range(self.degree), repeat=level):
            out[tup] = self.act_tuple(tup, w)[1]
        return out

    def transport(self, left_map: Optional[GroupMap] = None,
                  right_map: Optional[GroupMap] = None) -> "Machine":
        """Rename the machine through group isomorphisms.  ``right_map`` goes
        from the new right group to the current one; ``left_map`` from the
        current left group to the new one."""
        right = right_map.source if right_map else self.right
        left = left_map.target if left_map else self.left
        trans = {}
        for g in right.gens:
            w = right_map(Word.gen(g)) if right_map else Word.gen(g)
            entries = []
            perm = []
            for i in range(self.degree):
                h, j = self.act_index(i, w)
                entries.append(left_map(h) if left_map else h)
                perm.append(j)
            trans[g] = (tuple(entries), tuple(perm))
        return Machine(left, right, self.basis, trans)


def _scc(adj: dict[str, list[str]]) -> list[list[str]]:
    """Tarjan, iterative."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = itertools.count()
    for root in adj:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                group = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    group.append(w)
                    if w == v:
                        break
                out.append(group)
    return out


def _reachable(start: str, lift_data) -> set[str]:
    seen = {start}
    todo = [start]
    while todo:
        x = todo.pop()
        for d, b in lift_data[x]:
            if b is not None and b not in seen:
                seen.add(b)
                todo.append(b)
    return seen


# ---------------------------------------------------------------------------
# Degree-1 machines and twisting
# ---------------------------------------------------------------------------

def automorphism_machine(m: GroupMap, label: str = "e") -> Machine:
    """The degree-1 machine whose entries are the images under ``m``.

    With the action convention above, tensoring on the right by this machine
    realizes post-composition by the mapping class whose action on the group
    is ``m`` (validated on the twisted z^2+i family)."""
    if m.source != m.target:
        raise MachineError("automorphism machines need a self-map")
    trans = {g: ((m.images[g],), (0,)) for g in m.source.gens}
    return Machine(m.source, m.source, (label,), trans)


def twist(machine: Machine, pre: Optional[GroupMap] = None,
          post: Optional[GroupMap] = None) -> Machine:
    """pre (x) machine (x) post, keeping the original basis labels."""
    out = machine
    if post is not None:
        if post.kind != "automorphism":
            raise MachineError("twisting needs automorphism-claimed maps")
        out = out.tensor(automorphism_machine(post)).relabeled(machine.basis)
    if pre is not None:
        if pre.kind != "automorphism":
            raise MachineError("twisting needs automorphism-claimed maps")
        out = automorphism_machine(pre).tensor(out).relabeled(out.basis)
    return out


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------

@dataclass
class IsoWitness:
    """A basis identification: change_basis(source, assignments) == target."""

    assignments: list[tuple[str, Word, str]]

    def __repr__(self):
        return f"IsoWitness({self.assignments})"


def iso_verify(b: Machine, c: Machine, witness: IsoWitness,
               pre: Optional[GroupMap] = None,
               post: Optional[GroupMap] = None) -> bool:
    source = twist(b, pre, post) if (pre or post) else b
    try:
        return source.change_basis(witness.assignments) == c
    except MachineError:
        return False


def iso_search(b: Machine, c: Machine, bound: int = 3) -> Optional[IsoWitness]:
    """Search a basis identification making the machines equal.

    Returns a witness, or None when the machines are provably not isomorphic
    (degree, groups or portraits differ); raises BoundExceeded when the
    bounded prefix enumeration is exhausted.
    """
    if b.degree != c.degree or b.left != c.left or b.right != c.right:
        return None
    rep_b, _ = b._check_lifts()
    rep_c, _ = c._check_lifts()
    if rep_b.ok and rep_c.ok:
        if b.portrait() != c.portrait():
            return None
    routes = _basis_routes(b)
    for t1 in range(c.degree):
        for p in b.left.words_up_to(bound):
            witness = _propagate_iso(b, c, t1, p, routes)
            if witness is not None:
                return witness
    raise BoundExceeded(f"no isomorphism witness within prefix bound {bound}")


def _basis_routes(b: Machine) -> list[tuple[Word, Word]]:
    """For each basis index i, a pair (g, h) with s_0 * g = h * s_i."""
    routes: dict[int, tuple[Word, Word]] = {0: (Word(), Word())}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            g0, _ = routes[i]
            for g in b.right.gens:
                for sign in (1, -1):
                    w = g0 * Word.gen(g, sign)
                    h, j = b.act_index(0, w)
                    if j not in routes:
                        routes[j] = (w, h)
                        nxt.append(j)
        frontier = nxt
    if len(routes) != b.degree:
        raise MachineError("machine is not right-transitive")
    return [routes[i] for i in range(b.degree)]


def _propagate_iso(b: Machine, c: Machine, t1: int, p: Word,
                   routes) -> Optional[IsoWitness]:
    # beta(s_i) = h_route^-1 * p * (t1 . g_route)   computed in c
    images: list[tuple[Word, int]] = []
    for g_route, h_route in routes:
        hc, t = c.act_index(t1, g_route)
        pref = c.left.mul(c.left.inv(h_route), p, hc)
        images.append((pref, t))
    if sorted(t for _, t in images) != list(range(c.degree)):
        return None
    # verify all transitions
    for g in b.right.gens:
        for i in range(b.degree):
            h, j = b.act_index(i, Word.gen(g))
            pi, ti = images[i]
            pj, tj = images[j]
            hc, t2 = c.act_index(ti, Word.gen(g))
            if t2 != tj:
                return None
            lhs = c.left.mul(pi, hc)
            rhs = c.left.mul(h, pj)
            if not c.left.equal(lhs, rhs):
                return None
    assignments = [(c.basis[t], pref, b.basis[i])
                   for i, (pref, t) in enumerate(images)]
    # change_basis wants new labels in their own order; reorder by target
    assignments.sort(key=lambda a: c.basis.index(a[0]))
    witness = IsoWitness(assignments)
    if not iso_verify(b, c, witness):
        return None
    return witness
