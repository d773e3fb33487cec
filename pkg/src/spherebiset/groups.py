"""Word arithmetic in sphere and orbisphere groups.

A sphere group is presented as ``<g_1, ..., g_n | g_1^e_1, ..., single relator>``
where the relator is the product of all generators in a fixed order.  The word
problem is solved by eliminating one designated infinite-order generator via
the relator, which leaves a free product of cyclic groups; words are kept in
syllable normal form there.  The (2,2,2,2) profile (no infinite generator) is
handled separately through its crossed-product model Z^2 x {+-1}, see
:mod:`spherebiset.lattes`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

INF = 0  # order marker for infinite-order generators


class GroupError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------

class Word:
    """An immutable syllable word: tuple of (generator name, nonzero exponent).

    Adjacent syllables always carry distinct generators.  Words are *formal*:
    reduction relative to a group's relations is the group's job, but the
    constructor merges adjacent equal-generator syllables and drops zeros so
    that free reduction is automatic.
    """

    __slots__ = ("syllables",)

    def __init__(self, syllables: Iterable[tuple[str, int]] = ()):
        merged: list[tuple[str, int]] = []
        for gen, exp in syllables:
            if exp == 0:
                continue
            if merged and merged[-1][0] == gen:
                s = merged[-1][1] + exp
                if s == 0:
                    merged.pop()
                else:
                    merged[-1] = (gen, s)
            else:
                merged.append((gen, exp))
        self.syllables = tuple(merged)

    @staticmethod
    def gen(name: str, exp: int = 1) -> "Word":
        return Word([(name, exp)])

    @staticmethod
    def identity() -> "Word":
        return Word()

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.syllables + other.syllables)

    def inverse(self) -> "Word":
        return Word((g, -e) for g, e in reversed(self.syllables))

    def __pow__(self, n: int) -> "Word":
        if n == 0:
            return Word()
        base = self if n > 0 else self.inverse()
        return Word(base.syllables * abs(n))

    def conj(self, by: "Word") -> "Word":
        """w^by = by^-1 * w * by."""
        return by.inverse() * self * by

    def is_identity(self) -> bool:
        return not self.syllables

    def length(self) -> int:
        return sum(abs(e) for _, e in self.syllables)

    def letters(self) -> Iterator[tuple[str, int]]:
        """Yield single letters (gen, +-1)."""
        for g, e in self.syllables:
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                yield g, step

    def gens_used(self) -> set[str]:
        return {g for g, _ in self.syllables}

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.syllables == other.syllables

    def __hash__(self) -> int:
        return hash(self.syllables)

    def __lt__(self, other: "Word") -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.length(), self.syllables)

    def __repr__(self) -> str:
        from .textformat import format_word
        return f"Word({format_word(self)!r})"


def word_from_letters(letters: Iterable[tuple[str, int]]) -> Word:
    return Word(letters)


# ---------------------------------------------------------------------------
# Conjugacy classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjClass:
    """Canonical form of a conjugacy class.

    ``form`` is the lexicographically least cyclic rotation of the cyclically
    reduced word, further minimized over inversion when unoriented.
    """

    form: Word
    oriented: bool

    def is_trivial(self) -> bool:
        return self.form.is_identity()

    def __repr__(self) -> str:
        tag = "oriented" if self.oriented else "unoriented"
        return f"ConjClass({self.form!r}, {tag})"


# ---------------------------------------------------------------------------
# Sphere groups
# ---------------------------------------------------------------------------

class SphereGroup:
    """An orbisphere group with ordered generators, orders and relator order.

    ``orders[i]`` is the order of generator i, with ``INF`` (0) meaning
    infinite.  ``relator`` is a permutation of the generator names; the
    defining relation is the product of the generators in that order.
    """

    def __init__(self, gens: Sequence[str], orders: Sequence[int],
                 relator: Sequence[str]):
        if len(gens) < 2:
            raise GroupError("sphere groups need at least 2 marked points")
        if len(set(gens)) != len(gens):
            raise GroupError("duplicate generator names")
        if sorted(relator) != sorted(gens):
            raise GroupError("relator must be a permutation of the generators")
        if len(orders) != len(gens):
            raise GroupError("orders/gens length mismatch")
        for e in orders:
            if e != INF and e < 2:
                raise GroupError("finite generator orders must be >= 2")
        self.gens = tuple(gens)
        self.orders = tuple(orders)
        self.relator = tuple(relator)
        self.order_of = dict(zip(self.gens, self.orders))

        if all(e != INF for e in orders):
            if tuple(sorted(orders)) != (2, 2, 2, 2):
                raise GroupError(
                    "unsupported order profile: need an infinite-order "
                    "generator or the (2,2,2,2) profile")
            self.is_2222 = True
            self.eliminated = None
            self._sub = None
            from .lattes import crossed_assignment
            self._kelt = crossed_assignment(self.relator)
        else:
            self.is_2222 = False
            # eliminate the first infinite-order generator in relator order
            self.eliminated = next(g for g in self.relator
                                   if self.order_of[g] == INF)
            k = self.relator.index(self.eliminated)
            rest = self.relator[k + 1:] + self.relator[:k]
            self._sub = Word((g, 1) for g in rest).inverse()
            self._kelt = None

    # -- basics ------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, SphereGroup)
                and self.gens == other.gens
                and self.orders == other.orders
                and self.relator == other.relator)

    def __hash__(self):
        return hash((self.gens, self.orders, self.relator))

    def __repr__(self):
        rel = "*".join(self.relator)
        return f"SphereGroup(<{','.join(self.gens)} | {rel}>)"

    def relator_word(self) -> Word:
        return Word((g, 1) for g in self.relator)

    def generator(self, name: str) -> Word:
        if name not in self.order_of:
            raise GroupError(f"unknown generator {name!r}")
        return Word.gen(name)

    def peripheral_names(self) -> tuple[str, ...]:
        return self.gens

    # -- normal form -------------------------------------------------------

    def normalize(self, w: Word) -> Word:
        """Normal form of ``w``; idempotent and constant on group elements."""
        for g in w.gens_used():
            if g not in self.order_of:
                raise GroupError(f"unknown generator {g!r}")
        if self.is_2222:
            from .lattes import kelt_of_word, word_of_kelt
            return word_of_kelt(kelt_of_word(w, self._kelt), self._kelt)
        # substitute the eliminated generator, then reduce syllable by syllable
        out: list[tuple[str, int]] = []
        expanded: list[tuple[str, int]] = []
        for g, e in w.syllables:
            if g == self.eliminated:
                rep = self._sub if e > 0 else self._sub.inverse()
                for _ in range(abs(e)):
                    expanded.extend(rep.syllables)
            else:
                expanded.append((g, e))
        for g, e in expanded:
            if out and out[-1][0] == g:
                e = out.pop()[1] + e
            e = self._reduce_exp(g, e)
            if e != 0:
                out.append((g, e))
                # a merge may enable another: re-check tail
                while len(out) >= 2 and out[-1][0] == out[-2][0]:
                    g2, e2 = out.pop()
                    g1, e1 = out.pop()
                    e3 = self._reduce_exp(g1, e1 + e2)
                    if e3 != 0:
                        out.append((g1, e3))
        return Word(out)

    def _reduce_exp(self, g: str, e: int) -> int:
        order = self.order_of[g]
        if order == INF:
            return e
        return e % order  # canonical range 0..order-1

    def mul(self, *ws: Word) -> Word:
        acc = Word()
        for w in ws:
            acc = acc * w
        return self.normalize(acc)

    def inv(self, w: Word) -> Word:
        return self.normalize(w.inverse())

    def is_trivial(self, w: Word) -> bool:
        return self.normalize(w).is_identity()

    def equal(self, u: Word, v: Word) -> bool:
        return self.normalize(u) == self.normalize(v)

    # -- conjugacy ---------------------------------------------------------

    def cyclic_reduce(self, w: Word) -> tuple[Word, Word]:
        """Return (c, p) with w = p * c * p^-1 and c cyclically reduced,
        i.e. single-syllable or with distinct first and last generators."""
        w = self.normalize(w)
        p = Word()
        while True:
            s = w.syllables
            if len(s) < 2 or s[0][0] != s[-1][0]:
                return w, self.normalize(p)
            t = Word([s[-1]])
            w2 = self.normalize(t * w * t.inverse())
            if len(w2.syllables) >= len(s):
                return w, self.normalize(p)
            p = p * t.inverse()
            w = w2

    def _rotations(self, c: Word) -> list[tuple[Word, Word]]:
        """All syllable rotations (rot, r) of cyclically reduced c with
        rot = r^-1 * c * r."""
        outs = []
        syl = c.syllables
        r = Word()
        for k in range(max(1, len(syl))):
            rot = self.normalize(Word(syl[k:] + syl[:k]))
            outs.append((rot, self.normalize(r)))
            if k < len(syl):
                r = r * Word([syl[k]])
        return outs

    def conj_class(self, w: Word, oriented: bool = False) -> ConjClass:
        if self.is_2222:
            from .lattes import kelt_of_word, class_canonical_2222
            return ConjClass(
                class_canonical_2222(kelt_of_word(w, self._kelt),
                                     self._kelt, oriented), oriented)
        c, _ = self.cyclic_reduce(w)
        best = min(rot for rot, _ in self._rotations(c))
        if not oriented:
            ci, _ = self.cyclic_reduce(self.inv(c))
            besti = min(rot for rot, _ in self._rotations(ci))
            if besti < best:
                best = besti
        return ConjClass(best, oriented)

    def are_conjugate(self, u: Word, v: Word,
                      oriented: bool = True) -> Optional[Word]:
        """A witness w with w^-1 * u * w = v (or = v^-1 when unoriented),
        or None.  The witness is deterministic."""
        if self.is_2222:
            from .lattes import conjugator_2222, kelt_of_word
            return conjugator_2222(kelt_of_word(u, self._kelt),
                                   kelt_of_word(v, self._kelt),
                                   self._kelt, oriented)
        cu, pu = self.cyclic_reduce(u)
        targets = [v] if oriented else [v, self.inv(v)]
        best: Optional[Word] = None
        for tv in targets:
            cv, pv = self.cyclic_reduce(tv)
            for rot, r in self._rotations(cu):
                if rot == cv:
                    w = self.mul(pu, r, self.inv(pv))
                    cand = self.normalize(w)
                    if best is None or cand.sort_key() < best.sort_key():
                        best = cand
        return best

    def classify_class(self, c: ConjClass) -> tuple[str, Optional[str], Optional[int]]:
        """('trivial'|'peripheral'|'essential', generator name, exponent)."""
        form = c.form
        if form.is_identity():
            return ("trivial", None, None)
        if len(form.syllables) == 1:
            g, e = form.syllables[0]
            return ("peripheral", g, e)
        if self.is_2222:
            # translations are essential; reflection classes are peripheral
            from .lattes import kelt_of_word
            n, eps = kelt_of_word(form, self._kelt)
            if eps == -1:
                target = (n[0] % 2, n[1] % 2)
                for g, vec in self._kelt.items():
                    if (vec[0] % 2, vec[1] % 2) == target:
                        return ("peripheral", g, 1)
        return ("essential", None, None)

    def classify_word(self, w: Word) -> tuple[str, Optional[str], Optional[int]]:
        return self.classify_class(self.conj_class(w, oriented=True))

    # -- enumeration -------------------------------------------------------

    def words_up_to(self, bound: int) -> Iterator[Word]:
        """All distinct normal forms of letter-length <= bound, ordered by
        (length, syllables)."""
        seen = {Word()}
        yield Word()
        frontier = [Word()]
        for _ in range(bound):
            nxt = []
            for w in frontier:
                for g in self.gens:
                    for step in (1, -1):
                        w2 = self.normalize(w * Word.gen(g, step))
                        if w2 not in seen and w2.length() <= bound:
                            seen.add(w2)
                            nxt.append(w2)
            nxt.sort(key=Word.sort_key)
            yield from nxt
            frontier = nxt


# ---------------------------------------------------------------------------
# Subgroup membership and rewriting (Stallings folding + Nielsen rewriting)
# ---------------------------------------------------------------------------

class _FoldGraph:
    """Folded subgroup graph over a free product of cyclic groups.

    Vertices are integers with union-find merging.  The generator words are
    laid down as a wedge of loops at the base vertex; folding then merges
    vertices until every vertex has at most one in- and one out-edge per
    label.  Finite generator orders are folded in by closing length-``order``
    chains of equal label into cycles.
    """

    def __init__(self, group: SphereGroup, gens: Sequence[Word]):
        self.group = group
        self.parent: list[int] = [0]
        self.base = 0
        self.labels = tuple(g for g in group.gens if g != group.eliminated)
        edges: list[tuple[int, str, int]] = []
        for w in gens:
            v = self.base
            letters = list(group.normalize(w).letters())
            for i, (g, step) in enumerate(letters):
                nxt = self.base if i == len(letters) - 1 else self._new_vertex()
                edges.append((v, g, nxt) if step > 0 else (nxt, g, v))
                v = nxt
        self._edges = edges
        self._fold()

    def _new_vertex(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def _find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def _union(self, a: int, b: int):
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def _canon_edges(self) -> set[tuple[int, str, int]]:
        return {(self._find(u), g, self._find(v)) for u, g, v in self._edges}

    def _fold(self):
        while True:
            edges = self._canon_edges()
            merged = False
            by_src: dict[tuple[int, str], int] = {}
            by_tgt: dict[tuple[int, str], int] = {}
            for u, g, v in sorted(edges):
                if (u, g) in by_src and by_src[(u, g)] != v:
                    self._union(by_src[(u, g)], v)
                    merged = True
                else:
                    by_src[(u, g)] = v
                if (v, g) in by_tgt and by_tgt[(v, g)] != u:
                    self._union(by_tgt[(v, g)], u)
                    merged = True
                else:
                    by_tgt[(v, g)] = u
            if merged:
                continue
            # torsion closure: a complete chain of ``order`` g-edges is a loop
            succ = self._succ_tables()
            closed = False
            for g in self.labels:
                order = self.group.order_of[g]
                if order == INF:
                    continue
                for v in list(succ[g]):
                    cur, steps = v, 0
                    while steps < order and cur in succ[g]:
                        cur = succ[g][cur]
                        steps += 1
                        if cur == v:
                            break
                    if steps == order and cur != v:
                        self._union(cur, v)
                        closed = True
            if not closed:
                break
        self._edges = sorted(self._canon_edges())
        self.succ = self._succ_tables()
        self.pred = {g: {} for g in self.labels}
        for u, g, v in self._edges:
            self.pred[g][v] = u

    def _succ_tables(self) -> dict[str, dict[int, int]]:
        succ: dict[str, dict[int, int]] = {g: {} for g in self.labels}
        for u, g, v in self._canon_edges():
            succ[g][u] = v
        return succ

    def trace(self, w: Word) -> Optional[int]:
        """Follow w from the base; None if the path leaves the graph."""
        v = self._find(self.base)
        for g, step in self.group.normalize(w).letters():
            table = self.succ[g] if step > 0 else self.pred[g]
            if v not in table:
                return None
            v = table[v]
        return v

    def contains(self, w: Word) -> bool:
        return self.trace(w) == self._find(self.base)

    def has_torsion_vertices(self) -> bool:
        """True if some finite-order generator closes a cycle in the graph;
        such subgroups carry torsion petals, and the free-group rewriting
        below would be incomplete for them."""
        for g in self.labels:
            order = self.group.order_of[g]
            if order == INF:
                continue
            for v in self.succ[g]:
                cur, steps = v, 0
                while steps <= order and cur in self.succ[g]:
                    cur = self.succ[g][cur]
                    steps += 1
                    if cur == v:
                        return True
        return False

    def spanning_data(self):
        """BFS spanning tree (vertex -> access word from base) plus the
        non-tree edges (u, gen, v) in deterministic order."""
        base = self._find(self.base)
        tree: dict[int, Word] = {base: Word()}
        frontier = [base]
        used: set[tuple[int, str, int]] = set()
        while frontier:
            nxt = []
            for v in sorted(frontier):
                for g in self.labels:
                    if v in self.succ[g] and self.succ[g][v] not in tree:
                        w = self.succ[g][v]
                        tree[w] = tree[v] * Word.gen(g)
                        used.add((v, g, w))
                        nxt.append(w)
                    if v in self.pred[g] and self.pred[g][v] not in tree:
                        u = self.pred[g][v]
                        tree[u] = tree[v] * Word.gen(g, -1)
                        used.add((u, g, v))
                        nxt.append(u)
            frontier = nxt
        nontree = sorted(e for e in self._edges if e not in used)
        return tree, nontree


def subgroup_contains(group: SphereGroup, gens: Sequence[Word], w: Word) -> bool:
    if not gens:
        raise GroupError("empty generating set")
    return _FoldGraph(group, gens).contains(w)


def _nielsen_reduce(pairs: list[tuple[Word, Word]]) -> list[tuple[Word, Word]]:
    """Reduce pairs (element, expression) by length-decreasing Nielsen moves.

    Elements live in the free group on the fold-graph petals; expressions are
    words over the original subgroup generator names.  The petal-word map is a
    homomorphism, so moves are applied to both components in parallel.
    """
    pairs = [(e, x) for e, x in pairs if not e.is_identity()]
    changed = True
    while changed:
        changed = False
        pairs.sort(key=lambda p: p[0].sort_key())
        for j in range(len(pairs)):
            ej, xj = pairs[j]
            for i in range(len(pairs)):
                if i == j:
                    continue
                ei, xi = pairs[i]
                for s in (1, -1):
                    left = (ei ** s) * ej
                    if left.length() < ej.length():
                        pairs[j] = (left, (xi ** s) * xj)
                        changed = True
                        break
                    right = ej * (ei ** s)
                    if right.length() < ej.length():
                        pairs[j] = (right, xj * (xi ** s))
                        changed = True
                        break
                if changed:
                    break
            if changed:
                pairs = [(e, x) for e, x in pairs if not e.is_identity()]
                break
    return pairs


class SubgroupRewriter:
    """Membership and canonical rewriting for a finitely generated subgroup
    of a sphere group (free profile; torsion handled for membership only)."""

    def __init__(self, group: SphereGroup, named_gens: Sequence[tuple[str, Word]]):
        if not named_gens:
            raise GroupError("empty generating set")
        if group.is_2222:
            raise GroupError("subgroup rewriting unsupported for (2,2,2,2)")
        self.group = group
        self.names = [n for n, _ in named_gens]
        self.gen_words = [group.normalize(w) for _, w in named_gens]
        self.graph = _FoldGraph(group, self.gen_words)
        self._torsion = self.graph.has_torsion_vertices()
        if not self._torsion:
            self._prepare_rewriting()

    def contains(self, w: Word) -> bool:
        return self.graph.contains(w)

    # -- rewriting over the given generators --------------------------------

    def _petal_word(self, w: Word) -> Optional[Word]:
        """Express a subgroup element over the petal alphabet p0, p1, ..."""
        tree, nontree = self._tree, self._nontree
        index = {edge: k for k, edge in enumerate(nontree)}
        v = self.graph._find(self.graph.base)
        out = Word()
        for g, step in self.group.normalize(w).letters():
            table = self.graph.succ[g] if step > 0 else self.graph.pred[g]
            v = self.graph._find(v)
            if v not in table:
                return None
            w2 = self.graph._find(table[v])
            edge = (v, g, w2) if step > 0 else (w2, g, v)
            if edge in index:
                out = out * Word.gen(f"p{index[edge]}", step)
            v = w2
        if v != self.graph._find(self.graph.base):
            return None
        return out

    def _prepare_rewriting(self):
        self._tree, self._nontree = self.graph.spanning_data()
        pairs = []
        for name, w in zip(self.names, self.gen_words):
            pw = self._petal_word(w)
            assert pw is not None
            pairs.append((pw, Word.gen(name)))
        self._basis = _nielsen_reduce(pairs)

    def rewrite(self, w: Word) -> Optional[Word]:
        """w as a word over the subgroup generator *names*, or None."""
        if self._torsion:
            raise GroupError("rewriting with torsion petals is unsupported")
        target = self._petal_word(w)
        if target is None:
            return None
        # shortest-first search over petal words, moves = basis elements;
        # greedy length descent almost always succeeds in one sweep
        import heapq
        start = target
        counter = 0
        heap = [(start.length(), 0, start, Word())]
        seen = {start}
        while heap:
            if len(seen) > 20000:
                raise GroupError("rewriting search exploded")
            _, _, cur, expr = heapq.heappop(heap)
            if cur.is_identity():
                return expr
            for e, x in self._basis:
                for s in (1, -1):
                    nxt = (e ** (-s)) * cur
                    if nxt.length() <= cur.length() and nxt not in seen:
                        seen.add(nxt)
                        counter += 1
                        heapq.heappush(
                            heap, (nxt.length(), counter, nxt, expr * (x ** s)))
        return None

    def rewrite_checked(self, w: Word) -> Optional[Word]:
        """Like rewrite, with a round-trip verification in the ambient group."""
        expr = self.rewrite(w)
        if expr is None:
            return None
        back = self.evaluate(expr)
        if not self.group.equal(back, w):
            raise GroupError("internal rewriting error (round trip failed)")
        return expr

    def evaluate(self, expr: Word) -> Word:
        table = dict(zip(self.names, self.gen_words))
        acc = Word()
        for g, e in expr.syllables:
            acc = acc * (table[g] ** e)
        return self.group.normalize(acc)


def subgroup_rewrite(group: SphereGroup, named_gens: Sequence[tuple[str, Word]],
                     w: Word) -> Optional[Word]:
    """Fold once and rewrite ``w`` over the named generators, or None."""
    return SubgroupRewriter(group, named_gens).rewrite_checked(w)


# ---------------------------------------------------------------------------
# Group homomorphisms
# ---------------------------------------------------------------------------

class GroupMap:
    """A homomorphism given by generator images; ``kind`` is 'endomorphism'
    or 'automorphism' (claimed, not verified beyond basic sanity)."""

    def __init__(self, source: SphereGroup, target: SphereGroup,
                 images: dict[str, Word], kind: str = "endomorphism"):
        missing = set(source.gens) - set(images)
        if missing:
            raise GroupError(f"missing images for {sorted(missing)}")
        self.source = source
        self.target = target
        self.images = {g: target.normalize(w) for g, w in images.items()}
        self.kind = kind

    def __call__(self, w: Word) -> Word:
        acc = Word()
        for g, e in self.source.normalize(w).syllables:
            acc = acc * (self.images[g] ** e)
        return self.target.normalize(acc)

    def check(self) -> list[str]:
        """Sanity report: order preservation and relator image."""
        problems = []
        for g, e in zip(self.source.gens, self.source.orders):
            if e != INF and not self.target.is_trivial(self.images[g] ** e):
                problems.append(f"image of {g} does not have order dividing {e}")
        if (self.source.gens == self.target.gens
                and self.source.relator == self.target.relator):
            if not self.target.is_trivial(self(self.source.relator_word())):
                problems.append("relator image is not trivial")
        return problems

    def then(self, other: "GroupMap") -> "GroupMap":
        """Left-to-right composition: apply self, then other."""
        if self.target is not other.source and self.target != other.source:
            raise GroupError("composition group mismatch")
        images = {g: other(self.images[g]) for g in self.source.gens}
        kind = ("automorphism"
                if self.kind == other.kind == "automorphism" else "endomorphism")
        return GroupMap(self.source, other.target, images, kind)

    def __pow__(self, n: int) -> "GroupMap":
        if n < 0:
            raise GroupError("use invert_auto for inverses")
        acc = identity_map(self.source)
        for _ in range(n):
            acc = acc.then(self)
        return acc

    def is_identity(self) -> bool:
        return all(self.images[g] == Word.gen(g) for g in self.source.gens)

    def __eq__(self, other):
        return (isinstance(other, GroupMap) and self.source == other.source
                and self.target == other.target and self.images == other.images)


def identity_map(group: SphereGroup) -> GroupMap:
    return GroupMap(group, group,
                    {g: Word.gen(g) for g in group.gens}, "automorphism")


def conjugation_map(group: SphereGroup, by: Word) -> GroupMap:
    return GroupMap(group, group,
                    {g: group.normalize(Word.gen(g).conj(by))
                     for g in group.gens}, "automorphism")


class BoundExceeded(Exception):
    """A bounded search ran out of budget; distinct from a negative answer."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def invert_auto(m: GroupMap, bound: int = 6) -> GroupMap:
    """Invert a claimed automorphism by Schreier-graph search up to the
    word-length bound; verified by a generator round trip."""
    if m.kind != "automorphism":
        raise GroupError("invert_auto requires an automorphism-claimed map")
    G = m.source
    # BFS over image elements: node = normal form, edge = right mult by phi(g)
    targets = {Word.gen(g): g for g in G.gens}
    found: dict[str, Word] = {}
    seen = {Word(): Word()}  # image -> preimage word
    frontier = [Word()]
    for _ in range(bound):
        if len(found) == len(G.gens):
            break
        nxt = []
        for img in sorted(frontier, key=Word.sort_key):
            pre = seen[img]
            for g in G.gens:
                for s in (1, -1):
                    img2 = G.mul(img, m.images[g] ** s)
                    if img2 in seen:
                        continue
                    seen[img2] = pre * Word.gen(g, s)
                    nxt.append(img2)
                    if img2 in targets and targets[img2] not in found:
                        found[targets[img2]] = seen[img2]
        frontier = nxt
    if len(found) != len(G.gens):
        missing = [g for g in G.gens if g not in found]
        raise BoundExceeded(f"no inverse found within bound {bound} "
                            f"(missing {missing})")
    inv = GroupMap(G, G, found, "automorphism")
    comp = m.then(inv)
    if not comp.is_identity():
        raise BoundExceeded("inverse candidate failed the round trip")
    return inv
