"""(2,2,2,2)-orbisphere bisets as crossed products Z^2 x {+-1}.

The four-generator group with all orders 2 and a single product relator is
isomorphic to the group of maps x -> eps*x + n on Z^2; a generator acts as the
point reflection about half its assigned vector.  Bisets of such orbispheres
come from affine pairs (M, v) with det M > 0 acting by n -> M n + v, and both
directions (building the wreath recursion from the pair and extracting the
pair from a recursion) are implemented here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from .groups import BoundExceeded, GroupError, Word

Vec = tuple[int, int]
Mat = tuple[Vec, Vec]  # rows

# assignment of vectors to the four generators, by relator position
_POSITION_VECTORS: tuple[Vec, ...] = ((0, 0), (1, 0), (1, 1), (0, 1))


def crossed_assignment(relator: Sequence[str]) -> dict[str, Vec]:
    if len(relator) != 4:
        raise GroupError("(2,2,2,2) groups have exactly 4 generators")
    return dict(zip(relator, _POSITION_VECTORS))


def kelt_mul(a: tuple[Vec, int], b: tuple[Vec, int]) -> tuple[Vec, int]:
    (n, eps), (m, delta) = a, b
    return ((n[0] + eps * m[0], n[1] + eps * m[1]), eps * delta)


def kelt_inv(a: tuple[Vec, int]) -> tuple[Vec, int]:
    n, eps = a
    return ((-eps * n[0], -eps * n[1]), eps)


def kelt_of_word(w: Word, assign: dict[str, Vec]) -> tuple[Vec, int]:
    acc: tuple[Vec, int] = ((0, 0), 1)
    for g, step in w.letters():
        if g not in assign:
            raise GroupError(f"unknown generator {g!r}")
        acc = kelt_mul(acc, (assign[g], -1))  # each generator is an involution
    return acc


def word_of_kelt(k: tuple[Vec, int], assign: dict[str, Vec]) -> Word:
    """Canonical word for a crossed-product element."""
    n, eps = k
    if eps == -1:
        for g, v in assign.items():
            if v == n:
                return Word.gen(g)
    by_vec = {v: g for g, v in assign.items()}
    r1 = by_vec[(0, 0)]
    e1 = (Word.gen(by_vec[(1, 0)]) * Word.gen(r1))
    e2 = (Word.gen(by_vec[(0, 1)]) * Word.gen(r1))
    letters: list[tuple[str, int]] = []
    for unit, count in ((e1, n[0]), (e2, n[1])):
        block = unit if count >= 0 else unit.inverse()
        for _ in range(abs(count)):
            letters.extend(block.syllables)
    if eps == -1:
        letters.append((r1, 1))
    # reduce with every generator an involution
    out: list[tuple[str, int]] = []
    for g, e in letters:
        e = e % 2
        if e == 0:
            continue
        if out and out[-1][0] == g:
            out.pop()
        else:
            out.append((g, 1))
    return Word(out)


def class_canonical_2222(k: tuple[Vec, int], assign: dict[str, Vec],
                         oriented: bool) -> Word:
    """Canonical form of the conjugacy class of ``k``.

    Translation classes are {+-n} already, so orientation does not matter;
    reflection classes are indexed by n mod 2.
    """
    n, eps = k
    if eps == 1:
        cand = min(n, (-n[0], -n[1]))
        return word_of_kelt((cand, 1), assign)
    return word_of_kelt(((n[0] % 2, n[1] % 2), -1), assign)


def conjugator_2222(ku: tuple[Vec, int], kv: tuple[Vec, int],
                    assign: dict[str, Vec], oriented: bool) -> Optional[Word]:
    """Deterministic w with w^-1 * u * w = v, or None."""
    (n, eps), (m, delta) = ku, kv
    if eps != delta:
        return None
    if eps == 1:
        if m == n:
            return Word()
        if m == (-n[0], -n[1]):
            return word_of_kelt(((0, 0), -1), assign)
        return None
    cands = []
    for d in (1, -1):
        # w = (p, d) conjugates (n,-1) to (d*(n-2p), -1)
        num = (n[0] - d * m[0], n[1] - d * m[1])
        if num[0] % 2 == 0 and num[1] % 2 == 0:
            p = (num[0] // 2, num[1] // 2)
            cands.append(word_of_kelt((p, d), assign))
    if not cands:
        return None
    return min(cands, key=Word.sort_key)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def mat_det(m: Mat) -> int:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def mat_mul(a: Mat, b: Mat) -> Mat:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0],
         a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0],
         a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def mat_vec(m: Mat, v: Vec) -> Vec:
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


def mat_neg(m: Mat) -> Mat:
    return ((-m[0][0], -m[0][1]), (-m[1][0], -m[1][1]))


def mat_inv_times(m: Mat, v: Vec) -> Optional[Vec]:
    """m^-1 v if integral, else None."""
    d = mat_det(m)
    if d == 0:
        return None
    x = m[1][1] * v[0] - m[0][1] * v[1]
    y = -m[1][0] * v[0] + m[0][0] * v[1]
    if x % d or y % d:
        return None
    return (x // d, y // d)


@dataclass(frozen=True)
class AffinePair:
    """An affine endomorphism n -> M n + v of Z^2 with det M > 0."""

    matrix: Mat
    vector: Vec = (0, 0)

    def __post_init__(self):
        if mat_det(self.matrix) <= 0:
            raise GroupError("affine pairs require det M > 0")

    def apply(self, k: tuple[Vec, int]) -> tuple[Vec, int]:
        n, eps = k
        img = mat_vec(self.matrix, n)
        if eps == 1:
            return (img, 1)
        return ((img[0] + self.vector[0], img[1] + self.vector[1]), -1)

    def degree(self) -> int:
        return mat_det(self.matrix)

    def class_map(self) -> dict[Vec, Vec]:
        """Induced map on the four order-2 classes (vectors mod 2)."""
        out = {}
        for n in itertools.product((0, 1), repeat=2):
            img = self.apply((n, -1))[0]
            out[n] = (img[0] % 2, img[1] % 2)
        return out

    def compose(self, other: "AffinePair") -> "AffinePair":
        """self followed by other (left-to-right)."""
        m = mat_mul(other.matrix, self.matrix)
        v = mat_vec(other.matrix, self.vector)
        return AffinePair(m, (v[0] + other.vector[0], v[1] + other.vector[1]))


def standard_2222_group():
    from .groups import SphereGroup
    return SphereGroup(("a", "b", "c", "d"), (2, 2, 2, 2), ("d", "c", "b", "a"))


def _coset_reps(m: Mat) -> list[Vec]:
    """Representatives of Z^2 / m Z^2 in lexicographic box order."""
    d = abs(mat_det(m))
    reps: list[Vec] = []
    seen: set[Vec] = set()
    for x in range(0, 2 * d + 1):
        for y in range(0, 2 * d + 1):
            if len(reps) == d:
                return reps
            v = (x, y)
            canon = _coset_canon(m, v, seen, reps)
            if canon:
                reps.append(v)
                seen.add(v)
    if len(reps) != d:
        raise GroupError("coset enumeration failed")
    return reps


def _coset_canon(m: Mat, v: Vec, seen: set[Vec], reps: list[Vec]) -> bool:
    for r in reps:
        if mat_inv_times(m, (v[0] - r[0], v[1] - r[1])) is not None:
            return False
    return True


def build_Bmv(pair: AffinePair):
    """The wreath recursion of the biset of an affine pair, over the standard
    (2,2,2,2) group; the basis is the set of translation coset representatives
    of the image subgroup."""
    from .machines import Machine

    group = standard_2222_group()
    assign = crossed_assignment(group.relator)
    m, v = pair.matrix, pair.vector
    reps = _coset_reps(m)
    labels = tuple(f"s{i+1}" for i in range(len(reps)))
    rep_index = {}

    def index_of(t: Vec) -> int:
        for i, r in enumerate(reps):
            if mat_inv_times(m, (t[0] - r[0], t[1] - r[1])) is not None:
                return i
        raise GroupError("coset lookup failed")

    trans = {}
    for g in group.gens:
        entries = []
        perm = []
        kg = (assign[g], -1)
        for t in reps:
            prod = kelt_mul((t, 1), kg)  # (t + w, -1)
            # find t' with prod = (M^v)(h) * (t',1): h = (M^-1(t + w + t' - v), -1)
            target = prod[0]
            tp_idx = None
            for j, tp in enumerate(reps):
                s = (target[0] + tp[0] - v[0], target[1] + tp[1] - v[1])
                hvec = mat_inv_times(m, s)
                if hvec is not None:
                    tp_idx = j
                    h = (hvec, -1)
                    break
            if tp_idx is None:
                raise GroupError("transition solve failed")
            entries.append(word_of_kelt(h, assign))
            perm.append(tp_idx)
        trans[g] = (tuple(entries), tuple(perm))
    del rep_index, index_of
    return Machine(group, group, labels, trans)


def extract_Mv(machine) -> AffinePair:
    """Recover the affine pair of a (2,2,2,2) machine, up to sign of M and
    the portrait-equivalence of v; verified by rebuilding."""
    from .machines import iso_search

    group = machine.right
    if not getattr(group, "is_2222", False) or machine.left != group:
        raise GroupError("extract_Mv needs a (2,2,2,2) self-biset")
    assign = group._kelt
    by_vec = {v: g for g, v in assign.items()}
    r1 = by_vec[(0, 0)]
    e1_word = Word.gen(by_vec[(1, 0)]) * Word.gen(r1)
    e2_word = Word.gen(by_vec[(0, 1)]) * Word.gen(r1)

    cols = []
    for unit, wd in (((1, 0), e1_word), ((0, 1), e2_word)):
        orbit = machine.lift_orbits(wd)
        # use the orbit through the first basis element
        deg, prod, _start = next(o for o in orbit if o[2] == 0)
        hvec, eps = kelt_of_word(prod, assign)
        if eps != 1:
            raise GroupError("translation lifted to a reflection")
        # M hvec = deg * unit
        cols.append((hvec, (deg * unit[0], deg * unit[1])))
    (h1, t1), (h2, t2) = cols
    det_h = h1[0] * h2[1] - h1[1] * h2[0]
    if det_h == 0:
        raise GroupError("degenerate lift data")
    # solve M (h1 h2) = (t1 t2)
    m00 = (t1[0] * h2[1] - t2[0] * h1[1])
    m01 = (-t1[0] * h2[0] + t2[0] * h1[0])
    m10 = (t1[1] * h2[1] - t2[1] * h1[1])
    m11 = (-t1[1] * h2[0] + t2[1] * h1[0])
    if any(x % det_h for x in (m00, m01, m10, m11)):
        raise GroupError("matrix reconstruction is not integral")
    m: Mat = ((m00 // det_h, m01 // det_h), (m10 // det_h, m11 // det_h))
    if mat_det(m) < 0:
        raise GroupError("reconstructed matrix has negative determinant")

    # v mod 2 from the portrait: the class of the position-1 generator maps to
    # the class of (M*0 + v, -1)
    portrait = machine.portrait()
    img = portrait.target(r1)
    v = assign[img[0]]
    pair = AffinePair(m, v)
    rebuilt = build_Bmv(pair)
    try:
        iso_search(rebuilt, machine, bound=2)
    except BoundExceeded:
        raise GroupError("extraction failed verification")
    return pair


def iso_2222(p: AffinePair, q: AffinePair) -> bool:
    """Isomorphism test: M = +-N and equal induced class maps."""
    if p.matrix != q.matrix and p.matrix != mat_neg(q.matrix):
        return False
    return p.class_map() == q.class_map()


def is_geometric(p: AffinePair) -> bool:
    """No eigenvalue +-1: 1 -+ tr(M) + det(M) != 0 for both signs."""
    tr = p.matrix[0][0] + p.matrix[1][1]
    det = mat_det(p.matrix)
    return (1 - tr + det) != 0 and (1 + tr + det) != 0


_SL2_GENS: dict[str, Mat] = {
    "S": ((0, -1), (1, 0)),
    "T": ((1, 1), (0, 1)),
}


def sl2_conj_search(m: Mat, n: Mat, bound: int = 6) -> Optional[Mat]:
    """Search X in SL_2(Z), as a bounded product of the standard generators,
    with X m X^-1 = n.  None means a trace/determinant obstruction; a fruitless
    search raises BoundExceeded."""
    if (m[0][0] + m[1][1] != n[0][0] + n[1][1]) or mat_det(m) != mat_det(n):
        return None
    frontier: list[Mat] = [((1, 0), (0, 1))]
    seen = {frontier[0]}
    moves = []
    for name, g in _SL2_GENS.items():
        gi = ((g[1][1], -g[0][1]), (-g[1][0], g[0][0]))  # SL2 inverse
        moves.extend([g, gi])
    for x in list(frontier):
        if _conj_ok(x, m, n):
            return x
    for _ in range(bound):
        nxt = []
        for x in frontier:
            for g in moves:
                y = mat_mul(g, x)
                if y in seen:
                    continue
                seen.add(y)
                if _conj_ok(y, m, n):
                    return y
                nxt.append(y)
        frontier = nxt
    raise BoundExceeded(f"no SL2 conjugator within bound {bound}")


def _conj_ok(x: Mat, m: Mat, n: Mat) -> bool:
    xi = ((x[1][1], -x[0][1]), (-x[1][0], x[0][0]))
    return mat_mul(mat_mul(x, m), xi) == n
