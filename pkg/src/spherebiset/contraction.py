"""Nucleus computation, nucleus machines, contraction testing and bounded
conjugacy in bisets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .groups import BoundExceeded, GroupError, SphereGroup, Word, INF
from .machines import Machine, MachineError


@dataclass
class Nucleus:
    """A finite state-closed, inverse-closed set of group elements containing
    the identity, attached to the machine it was computed from."""

    machine: Machine
    elements: tuple[Word, ...]

    def __contains__(self, w: Word) -> bool:
        return self.machine.right.normalize(w) in self._set()

    def _set(self) -> set[Word]:
        return set(self.elements)

    def __len__(self):
        return len(self.elements)


@dataclass
class NucleusEdge:
    source: Word
    target: Word
    input: str
    output: str


@dataclass
class NucleusMachine:
    """The Moore diagram of a nucleus: vertex set = nucleus, one edge per
    (vertex, basis element) with input/output labels."""

    nucleus: Nucleus
    edges: list[NucleusEdge]

    def out_edges(self, w: Word) -> list[NucleusEdge]:
        return [e for e in self.edges if e.source == w]


def nucleus(machine: Machine, bound: int = 200) -> Nucleus:
    """Closure iteration for the nucleus of (B, S).

    Start from the generators, their inverses and the identity; repeatedly add
    all states of pairwise products, breadth-first, deduplicating by canonical
    form.  Raises BoundExceeded with a growth witness when the candidate set
    passes the bound.
    """
    if machine.left != machine.right:
        raise MachineError("nucleus needs equal acting groups")
    G = machine.right
    elems: list[Word] = []
    elem_set: set[Word] = set()

    def insert(w: Word, witness: Word):
        stack = [w]
        while stack:
            x = stack.pop()
            for y in (x, G.inv(x)):
                if y in elem_set:
                    continue
                elem_set.add(y)
                elems.append(y)
                if len(elem_set) > bound:
                    raise BoundExceeded(
                        f"nucleus exceeded bound {bound}", witness=witness)
                stack.extend(machine.states(y))

    for g in [Word()] + [G.normalize(Word.gen(g)) for g in G.gens]:
        insert(g, g)
    done = 0
    while done < len(elems):
        u = elems[done]
        done += 1
        if u.is_identity():
            continue
        for v in elems[:done]:
            for a, b in ((u, v), (v, u)):
                w = G.mul(a, b)
                for h in machine.states(w):
                    insert(h, w)
    ordered = sorted(elem_set, key=Word.sort_key)
    return Nucleus(machine, tuple(ordered))


def nucleus_machine(nuc: Nucleus) -> NucleusMachine:
    machine = nuc.machine
    edges = []
    for w in nuc.elements:
        for i, s in enumerate(machine.basis):
            h, j = machine.act_index(i, w)
            if h not in nuc._set():
                raise MachineError("nucleus is not state-closed")
            edges.append(NucleusEdge(w, h, s, machine.basis[j]))
    return NucleusMachine(nuc, edges)


@dataclass
class ContractionResult:
    contracting: Optional[bool]  # True = yes, None = not decided within bound
    nucleus: Optional[Nucleus] = None
    witness: Optional[Word] = None
    profile: Optional[tuple[int, ...]] = None


def minimal_profile(machine: Machine) -> tuple[int, ...]:
    """The minimal orbisphere orders (ord_B), as a tuple aligned with the
    right group's generators; INF encodes infinity."""
    om = machine.ord_min()
    return tuple(INF if om[g] is None else om[g] for g in machine.right.gens)


def profile_is_bounded(machine: Machine, profile: Sequence[int]) -> bool:
    """ord(a) = inf iff ord_B(a) = inf, and ord(a) * deg_a(B) | ord(B_*(a))."""
    om = machine.ord_min()
    portrait = machine.portrait()
    order = dict(zip(machine.right.gens, profile))
    for g in machine.right.gens:
        inf_b = om[g] is None
        if (order[g] == INF) != inf_b:
            return False
        if order[g] != INF and om[g] and om[g] > 1 and order[g] % om[g]:
            return False
    for g in machine.right.gens:
        tgt, deg = portrait.target(g)
        if order[g] == INF:
            continue
        if order[tgt] == INF:
            continue
        if order[tgt] % (order[g] * deg):
            return False
    return True


def quotient_machine(machine: Machine, profile: Sequence[int]) -> Machine:
    group = SphereGroup(machine.right.gens, tuple(profile),
                        machine.right.relator)
    return Machine(group, group, machine.basis, dict(machine.trans))


def is_contracting(machine: Machine, profile: Optional[Sequence[int]] = None,
                   bound: int = 200) -> ContractionResult:
    """Semi-decision: yes with a nucleus, or not-decided-within-bound with a
    growth witness.  The profile defaults to the minimal orbisphere orders."""
    if profile is None:
        profile = minimal_profile(machine)
    if not profile_is_bounded(machine, profile):
        raise MachineError("orbisphere profile is not bounded for this machine")
    quotient = quotient_machine(machine, profile)
    try:
        nuc = nucleus(quotient, bound)
    except BoundExceeded as exc:
        return ContractionResult(None, witness=exc.witness,
                                 profile=tuple(profile))
    return ContractionResult(True, nucleus=nuc, profile=tuple(profile))


# ---------------------------------------------------------------------------
# Conjugacy inside a biset
# ---------------------------------------------------------------------------

BisetElement = tuple[Word, str]  # (group prefix, basis label)


def elt_tensor(machine: Machine, elts: Sequence[BisetElement]) -> tuple[Word, tuple[int, ...]]:
    """Normal form (word, basis index tuple) of a tensor of biset elements."""
    word = Word()
    labels: tuple[int, ...] = ()
    for w, s in elts:
        # move the accumulated word across the previous factors
        h, labels = machine.act_tuple(labels, w)
        word = machine.left.mul(word, h)
        labels = labels + (machine.label_index(s),)
    return machine.left.normalize(word), labels


def conj_in_biset(machine: Machine, b: BisetElement, c: BisetElement,
                  bound: int = 4) -> Optional[Word]:
    """The least ell with ell * b = c * ell in B, searching words up to the
    given length; None when the search is exhausted."""
    return conj_in_tensor(machine,
                          (b[0], (machine.label_index(b[1]),)),
                          (c[0], (machine.label_index(c[1]),)),
                          bound)


def conj_in_tensor(machine: Machine, b: tuple[Word, tuple[int, ...]],
                   c: tuple[Word, tuple[int, ...]],
                   bound: int = 4) -> Optional[Word]:
    wb, sb = b
    wc, sc = c
    G = machine.right
    for ell in G.words_up_to(bound):
        h, s2 = machine.act_tuple(sc, ell)
        if s2 != sb:
            continue
        if machine.left.equal(machine.left.mul(ell, wb),
                              machine.left.mul(wc, h)):
            return ell
    return None


def conj_in_tensor_all(machine: Machine, b, c, bound: int = 4):
    wb, sb = b
    wc, sc = c
    for ell in machine.right.words_up_to(bound):
        h, s2 = machine.act_tuple(sc, ell)
        if s2 == sb and machine.left.equal(machine.left.mul(ell, wb),
                                           machine.left.mul(wc, h)):
            yield ell


# ---------------------------------------------------------------------------
# Portraits of bisets
# ---------------------------------------------------------------------------

@dataclass
class PortraitOfBisets:
    """Cyclic subgroups and transitive subbiset generators indexed by
    A (peripheral) plus E (extra points), with dynamics ``targets``."""

    machine: Machine
    targets: dict[str, str]
    subgroup_gens: dict[str, Optional[Word]]  # None for indices in E
    elements: dict[str, BisetElement]

    def indices(self) -> list[str]:
        return sorted(self.targets)

    def cycle_and_tail(self):
        """Split indices into the B_*-cycles and the trees hanging off them."""
        cycles = []
        on_cycle = set()
        for a in self.indices():
            seen = {}
            cur = a
            k = 0
            while cur not in seen:
                seen[cur] = k
                k += 1
                cur = self.targets[cur]
            if cur not in on_cycle:
                cyc = []
                c = cur
                while True:
                    cyc.append(c)
                    on_cycle.add(c)
                    c = self.targets[c]
                    if c == cur:
                        break
                cycles.append(cyc)
        tails = [a for a in self.indices() if a not in on_cycle]
        return cycles, tails


def minimal_portrait(machine: Machine) -> PortraitOfBisets:
    """The canonical minimal portrait of bisets of a machine."""
    G = machine.right
    targets = {}
    sub = {}
    elements = {}
    for a in G.gens:
        tgt, deg = machine.portrait().target(a)
        targets[a] = tgt
        sub[a] = G.normalize(Word.gen(a))
        # find the orbit of the target generator whose cycle product is
        # conjugate to gen a, and a conjugating witness
        placed = False
        for d, prod, start in machine.lift_orbits(Word.gen(tgt)):
            w = G.are_conjugate(Word.gen(a), prod, oriented=True)
            if d == deg and w is not None:
                elements[a] = (w, machine.basis[start])
                placed = True
                break
        if not placed:
            raise MachineError(f"could not place the portrait at {a}")
    return PortraitOfBisets(machine, targets, sub, elements)


def conjugate_portrait(p: PortraitOfBisets, by: Word) -> PortraitOfBisets:
    """The diagonal conjugate: G_a^by and by^-1 * B_a * by."""
    G = p.machine.right
    sub = {a: (None if g is None else G.normalize(g.conj(by)))
           for a, g in p.subgroup_gens.items()}
    elements = {}
    for a, (w, s) in p.elements.items():
        h, s2 = p.machine.act(s, by)
        elements[a] = (G.mul(G.inv(by), w, h), s2)
    return PortraitOfBisets(p.machine, dict(p.targets), sub, elements)


def portrait_conjugate(p: PortraitOfBisets, q: PortraitOfBisets,
                       bound: int = 4) -> Optional[dict[str, Word]]:
    """Conjugators (ell_a) with G^p_a = ell_a^-1 G^q_a ell_a and
    B^p_a = ell_a^-1 B^q_a ell_{B_*(a)}, or None within the bound."""
    if p.targets != q.targets or p.machine is not q.machine:
        raise MachineError("portraits must share machine and parameterization")
    machine = p.machine
    G = machine.right
    cycles, tails = p.cycle_and_tail()
    solution: dict[str, Word] = {}

    def subgroup_ok(a: str, ell: Word) -> bool:
        gp, gq = p.subgroup_gens[a], q.subgroup_gens[a]
        if gp is None or gq is None:
            return gp is None and gq is None
        conj = G.normalize(gq.conj(ell))
        return conj == G.normalize(gp) or conj == G.inv(gp)

    for cyc in cycles:
        e = len(cyc)
        bp = elt_tensor(machine, [p.elements[a] for a in cyc])
        bq = elt_tensor(machine, [q.elements[a] for a in cyc])
        start = None
        for ell in conj_in_tensor_all(machine, bp, bq, bound):
            ells = _propagate_cycle(p, q, cyc, ell)
            if ells is not None and all(subgroup_ok(a, ells[a]) for a in cyc):
                start = ells
                break
        if start is None:
            return None
        solution.update(start)

    # tails: ell_a is determined by ell at the target
    remaining = [a for a in tails]
    guard = 0
    while remaining:
        guard += 1
        if guard > 10 * len(p.targets) + 10:
            raise MachineError("portrait dynamics is not eventually periodic")
        for a in list(remaining):
            tgt = p.targets[a]
            if tgt not in solution:
                continue
            ell = _solve_tail(p, q, a, solution[tgt])
            if ell is None or not subgroup_ok(a, ell):
                return None
            solution[a] = ell
            remaining.remove(a)
    return solution


def _propagate_cycle(p, q, cyc, ell0) -> Optional[dict[str, Word]]:
    out = {cyc[0]: ell0}
    machine = p.machine
    for k, a in enumerate(cyc):
        nxt = cyc[(k + 1) % len(cyc)]
        ell = _solve_tail_for(p, q, a, out[a], forward=True)
        if ell is None:
            return None
        if nxt in out:
            if out[nxt] != ell:
                return None
        else:
            out[nxt] = ell
    return out


def _solve_tail_for(p, q, a, ell_a, forward: bool) -> Optional[Word]:
    """Given ell_a, the relation b^p_a = ell_a^-1 b^q_a ell_{B_*(a)}
    determines ell at the target uniquely, if it exists."""
    machine = p.machine
    G = machine.right
    wq, sq = q.elements[a]
    wp, sp = p.elements[a]
    # ell_a^-1 * wq * (sq . ell_tgt) = wp * sp
    # so act(sq, ell_tgt) must be (h, sp) with h = wq^-1 * ell_a * wp
    h = G.mul(G.inv(wq), ell_a, wp)
    return _solve_act(machine, sq, h, sp)


def _solve_act(machine: Machine, s: str, h: Word, target: str) -> Optional[Word]:
    """The unique-up-to-stabilizer ell with s * ell = h * target; the least
    solution is returned (bounded deterministic search)."""
    G = machine.right
    for ell in G.words_up_to(max(4, h.length() + 2)):
        got_h, got_s = machine.act(s, ell)
        if got_s == target and machine.left.equal(got_h, h):
            return ell
    return None


def _solve_tail(p, q, a, ell_tgt) -> Optional[Word]:
    machine = p.machine
    G = machine.right
    wq, sq = q.elements[a]
    wp, sp = p.elements[a]
    h, s2 = machine.act(sq, ell_tgt)
    if s2 != sp:
        return None
    return G.mul(wq, h, G.inv(wp))
