"""Sphere trees of groups and trees of bisets along an invariant multicurve.

Decomposition is certificate-driven: the caller supplies the adapted basis,
the list of preimage vertices with their covering (rho) and inclusion
(lambda) targets and sub-bases, and optional edge twists.  The decomposition
is then *verified*, never guessed: every transition of every vertex machine
is recomputed inside the ambient machine, and edge inclusions must agree as
ambient biset elements.

Vertex machines do their word arithmetic through the ambient group: words
over the vertex generator names are evaluated, normalized there, and
rewritten back through the folded subgroup graph.  The abstract vertex
presentations (whose relators need not hold ambiently, see the module notes)
are used only for conjugacy-class bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .groups import (GroupError, SphereGroup, SubgroupRewriter, Word, INF)
from .machines import CheckReport, Machine, MachineError


class DecompositionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Group contexts for vertex and edge machines
# ---------------------------------------------------------------------------

class SubgroupSphereGroup:
    """A sphere-group presentation realized inside an ambient sphere group.

    Arithmetic (normalize/mul/equal) routes through the ambient group, with
    canonical rewriting back over the subgroup generators; conjugacy-class
    bookkeeping uses the abstract presentation.
    """

    def __init__(self, ambient: SphereGroup, name: str,
                 gens: Sequence[tuple[str, Word]],
                 relator: Sequence[str],
                 tags: Optional[dict[str, tuple[str, str]]] = None):
        self.ambient = ambient
        self.name = name
        self.gens = tuple(n for n, _ in gens)
        self.images = {n: ambient.normalize(w) for n, w in gens}
        self.relator = tuple(relator)
        self.tags = dict(tags or {})
        self.rewriter = SubgroupRewriter(ambient, list(gens))
        orders = []
        for n in self.gens:
            orders.append(self._ambient_order(self.images[n]))
        self.orders = tuple(orders)
        self.order_of = dict(zip(self.gens, self.orders))
        self.abstract = SphereGroup(self.gens, self.orders, self.relator)
        self.is_2222 = False

    def _ambient_order(self, w: Word) -> int:
        c, _ = self.ambient.cyclic_reduce(w)
        if len(c.syllables) == 1:
            g, e = c.syllables[0]
            m = self.ambient.order_of[g]
            if m != INF:
                from math import gcd
                return m // gcd(m, abs(e))
        return INF

    # -- context protocol ----------------------------------------------------

    def evaluate(self, w: Word) -> Word:
        acc = Word()
        for g, e in w.syllables:
            if g not in self.images:
                raise GroupError(f"unknown vertex generator {g!r}")
            acc = acc * (self.images[g] ** e)
        return self.ambient.normalize(acc)

    def normalize(self, w: Word) -> Word:
        expr = self.rewriter.rewrite_checked(self.evaluate(w))
        if expr is None:
            raise GroupError("word leaves the vertex subgroup")
        return expr

    def mul(self, *ws: Word) -> Word:
        acc = Word()
        for w in ws:
            acc = acc * w
        return self.normalize(acc)

    def inv(self, w: Word) -> Word:
        return self.normalize(w.inverse())

    def equal(self, u: Word, v: Word) -> bool:
        return self.ambient.equal(self.evaluate(u), self.evaluate(v))

    def is_trivial(self, w: Word) -> bool:
        return self.ambient.is_trivial(self.evaluate(w))

    def relator_word(self) -> Word:
        return Word((g, 1) for g in self.relator)

    def conj_class(self, w: Word, oriented: bool = False):
        return self.abstract.conj_class(w, oriented=oriented)

    def classify_class(self, cls):
        return self.abstract.classify_class(cls)

    def words_up_to(self, bound: int):
        return self.abstract.words_up_to(bound)

    def __eq__(self, other):
        return (isinstance(other, SubgroupSphereGroup)
                and self.ambient == other.ambient
                and self.gens == other.gens
                and self.images == other.images)

    def __hash__(self):
        return hash((self.ambient, self.gens))

    def __repr__(self):
        return f"SubgroupSphereGroup({self.name}: {','.join(self.gens)})"


class CyclicGroup:
    """An infinite cyclic context generated by one word of the ambient group
    (a curve or edge group)."""

    def __init__(self, ambient: SphereGroup, name: str, image: Word):
        self.ambient = ambient
        self.name = name
        self.image = ambient.normalize(image)
        self.gens = (name,)
        self.orders = (INF,)
        self.order_of = {name: INF}
        self.is_2222 = False

    def evaluate(self, w: Word) -> Word:
        k = self.exponent(w)
        return self.ambient.normalize(self.image ** k)

    def exponent(self, w: Word) -> int:
        k = 0
        for g, e in w.syllables:
            if g != self.name:
                raise GroupError(f"unknown cyclic generator {g!r}")
            k += e
        return k

    def power_of(self, amb: Word) -> Optional[int]:
        """Solve image^k == amb in the ambient group."""
        amb = self.ambient.normalize(amb)
        if amb.is_identity():
            return 0
        c, _ = self.ambient.cyclic_reduce(self.image)
        base = max(1, c.length())
        for k in range(1, amb.length() // base + 2):
            for sk in (k, -k):
                if self.ambient.equal(self.image ** sk, amb):
                    return sk
        return None

    def normalize(self, w: Word) -> Word:
        k = self.exponent(w)
        return Word([(self.name, k)]) if k else Word()

    def mul(self, *ws: Word) -> Word:
        return self.normalize(Word([s for w in ws for s in w.syllables]))

    def inv(self, w: Word) -> Word:
        return self.normalize(w.inverse())

    def equal(self, u: Word, v: Word) -> bool:
        return self.exponent(u) == self.exponent(v)

    def is_trivial(self, w: Word) -> bool:
        return self.exponent(w) == 0

    def conj_class(self, w: Word, oriented: bool = False):
        from .groups import ConjClass
        k = self.exponent(w)
        if not oriented:
            k = abs(k)
        return ConjClass(Word([(self.name, k)]) if k else Word(), oriented)

    def classify_class(self, cls):
        if cls.form.is_identity():
            return ("trivial", None, None)
        return ("peripheral", self.name, cls.form.syllables[0][1])

    def words_up_to(self, bound: int):
        yield Word()
        for k in range(1, bound + 1):
            yield Word([(self.name, k)])
            yield Word([(self.name, -k)])

    def __eq__(self, other):
        return (isinstance(other, CyclicGroup) and self.name == other.name
                and self.ambient == other.ambient
                and self.ambient.equal(self.image, other.image))

    def __hash__(self):
        return hash((self.name, self.image))

    def __repr__(self):
        return f"CyclicGroup({self.name})"


class TrivialGroup:
    """The context of a vertex blown down to an unmarked point."""

    gens: tuple[str, ...] = ()
    orders: tuple[int, ...] = ()
    order_of: dict = {}
    is_2222 = False

    def __init__(self, ambient: SphereGroup):
        self.ambient = ambient

    def evaluate(self, w: Word) -> Word:
        if w.syllables:
            raise GroupError("nontrivial word over the trivial group")
        return Word()

    def normalize(self, w: Word) -> Word:
        self.evaluate(w)
        return Word()

    def mul(self, *ws: Word) -> Word:
        for w in ws:
            self.evaluate(w)
        return Word()

    def inv(self, w: Word) -> Word:
        return self.normalize(w)

    def equal(self, u: Word, v: Word) -> bool:
        return True

    def is_trivial(self, w: Word) -> bool:
        return True

    def conj_class(self, w: Word, oriented: bool = False):
        from .groups import ConjClass
        return ConjClass(Word(), oriented)

    def classify_class(self, cls):
        return ("trivial", None, None)

    def words_up_to(self, bound: int):
        yield Word()

    def __eq__(self, other):
        return isinstance(other, TrivialGroup) and self.ambient == other.ambient

    def __hash__(self):
        return hash(("trivial", self.ambient))


# ---------------------------------------------------------------------------
# Trees of groups
# ---------------------------------------------------------------------------

@dataclass
class SphereVertexSpec:
    """A sphere vertex: abstract generators with ambient images, the abstract
    relator order, and a tag per generator, either ('marked', ambient gen) or
    ('curve', curve name)."""

    name: str
    gens: list[tuple[str, Word]]
    relator: list[str]
    tags: dict[str, tuple[str, str]]


@dataclass
class CurveVertexSpec:
    name: str
    rep: Word  # a chosen representative c_Gamma in the ambient group


class SphereTreeOfGroups:
    """Downstairs tree: sphere vertices and curve vertices, with edges from
    each curve to its two incident spheres."""

    def __init__(self, ambient: SphereGroup,
                 spheres: Sequence[SphereVertexSpec],
                 curves: Sequence[CurveVertexSpec],
                 edges: Sequence[tuple[str, str]]):
        self.ambient = ambient
        self.spheres = {s.name: s for s in spheres}
        self.curves = {c.name: c for c in curves}
        self.edges = [tuple(e) for e in edges]
        self._contexts: dict[str, object] = {}
        self.validate()

    def context(self, name: str):
        if name in self._contexts:
            return self._contexts[name]
        if name in self.spheres:
            s = self.spheres[name]
            ctx = SubgroupSphereGroup(self.ambient, s.name, s.gens,
                                      s.relator, s.tags)
        elif name in self.curves:
            c = self.curves[name]
            ctx = CyclicGroup(self.ambient, c.name, c.rep)
        else:
            raise DecompositionError(f"unknown tree vertex {name!r}")
        self._contexts[name] = ctx
        return ctx

    def curve_forms(self) -> dict[str, Word]:
        return {n: self.ambient.conj_class(c.rep, oriented=False).form
                for n, c in self.curves.items()}

    def validate(self):
        names = set(self.spheres) | set(self.curves)
        if len(names) != len(self.spheres) + len(self.curves):
            raise DecompositionError("vertex names clash")
        for a, b in self.edges:
            if not ((a in self.spheres and b in self.curves)
                    or (a in self.curves and b in self.spheres)):
                raise DecompositionError("edges join spheres to curves")
        # connected and acyclic
        if len(self.edges) != len(names) - 1:
            raise DecompositionError("tree must have #vertices - 1 edges")
        seen = set()
        todo = [next(iter(names))]
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            for a, b in self.edges:
                if a == v and b not in seen:
                    todo.append(b)
                if b == v and a not in seen:
                    todo.append(a)
        if seen != names:
            raise DecompositionError("tree is not connected")
        for c in self.curves:
            inc = [e for e in self.edges if c in e]
            if len(inc) != 2:
                raise DecompositionError(
                    f"curve vertex {c} must meet exactly 2 spheres")
        # tag accounting and class membership
        marked_seen = {}
        curve_seen: dict[str, int] = {}
        for s in self.spheres.values():
            for gname, img in s.gens:
                tag = s.tags.get(gname)
                if tag is None:
                    raise DecompositionError(f"untagged generator {gname}")
                kind, ref = tag
                if kind == "marked":
                    if ref in marked_seen:
                        raise DecompositionError(
                            f"marked point {ref} tagged twice")
                    marked_seen[ref] = s.name
                    if self.ambient.are_conjugate(
                            img, Word.gen(ref), oriented=True) is None:
                        raise DecompositionError(
                            f"{s.name}.{gname} is not in the class of {ref}")
                elif kind == "curve":
                    curve_seen[ref] = curve_seen.get(ref, 0) + 1
                    if self.ambient.are_conjugate(
                            img, self.curves[ref].rep, oriented=False) is None:
                        raise DecompositionError(
                            f"{s.name}.{gname} is not in the curve class {ref}")
                else:
                    raise DecompositionError(f"unknown tag kind {kind!r}")
        missing = set(self.ambient.gens) - set(marked_seen)
        if missing:
            raise DecompositionError(f"marked points never tagged: {missing}")
        for c, count in curve_seen.items():
            if count != 2:
                raise DecompositionError(
                    f"curve {c} tagged at {count} generators, expected 2")


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass
class CertVertex:
    name: str
    rho: str                      # downstairs vertex covered by this piece
    lam: Optional[str]            # downstairs vertex it includes into; None = point
    sub_basis: list[str]          # adapted basis labels
    prefixes: dict[str, Word] = field(default_factory=dict)  # overrides


@dataclass
class CertEdge:
    curve: str                    # downstairs curve vertex
    rep_label: str                # adapted label generating the orbit
    side1: tuple[str, str, Word]  # (vertex name, adapted label, twist)
    side2: tuple[str, str, Word]


@dataclass
class DecompositionCertificate:
    basis: list[tuple[str, Word, str]]  # (adapted label, prefix, machine label)
    vertices: list[CertVertex]
    edges: list[CertEdge] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Trees of bisets
# ---------------------------------------------------------------------------

@dataclass
class TreeVertex:
    name: str
    rho: str
    lam: Optional[str]
    machine: Machine
    tag: str                      # essential | annular | trivial
    basis_elements: list[tuple[Word, str]]  # ambient (prefix, machine label)


@dataclass
class TreeEdge:
    curve: str
    degree: int
    upstairs_rep: Word            # ambient cycle product along the orbit
    side1: tuple[str, str, Word]  # (vertex, vertex basis label, twist)
    side2: tuple[str, str, Word]


@dataclass
class TreeOfBisets:
    machine: Machine
    tree: SphereTreeOfGroups
    certificate: DecompositionCertificate
    vertices: dict[str, TreeVertex]
    edges: list[TreeEdge]

    def vertex_machines(self) -> dict[str, Machine]:
        return {n: v.machine for n, v in self.vertices.items()}


def _adapted_elements(machine: Machine, cert: DecompositionCertificate):
    """adapted label -> (prefix, machine basis index)."""
    out = {}
    for label, prefix, old in cert.basis:
        out[label] = (machine.left.normalize(prefix), machine.label_index(old))
    if len(out) != machine.degree:
        raise DecompositionError("adapted basis must cover the machine basis")
    return out


def _vertex_machine(machine: Machine, tree: SphereTreeOfGroups,
                    cert_vertex: CertVertex, adapted) -> TreeVertex:
    amb = machine.right
    rho_ctx = tree.context(cert_vertex.rho)
    lam_ctx = (TrivialGroup(amb) if cert_vertex.lam is None
               else tree.context(cert_vertex.lam))
    pairs = []
    for label in cert_vertex.sub_basis:
        prefix, idx = adapted[label]
        if label in cert_vertex.prefixes:
            prefix = amb.normalize(cert_vertex.prefixes[label])
        pairs.append((label, prefix, idx))
    where = {idx: k for k, (_, _, idx) in enumerate(pairs)}
    trans = {}
    entries_ambient: list[Word] = []
    for gname in rho_ctx.gens:
        w_amb = (rho_ctx.images[gname] if isinstance(rho_ctx, SubgroupSphereGroup)
                 else rho_ctx.image)
        entries = []
        perm = []
        for label, prefix, idx in pairs:
            h, j = machine.act_index(idx, w_amb)
            if j not in where:
                raise DecompositionError(
                    f"{cert_vertex.name}: acting by {gname} leaves the "
                    f"sub-basis at label {label!r}")
            k2 = where[j]
            entry_amb = amb.mul(prefix, h, amb.inv(pairs[k2][1]))
            entries_ambient.append(entry_amb)
            entries.append(_rewrite_into(lam_ctx, entry_amb, cert_vertex, gname))
            perm.append(k2)
        trans[gname] = (tuple(entries), tuple(perm))
    vertex_machine = Machine(lam_ctx, rho_ctx,
                             tuple(l for l, _, _ in pairs), trans)
    tag = _classify_vertex(amb, tree, entries_ambient)
    return TreeVertex(cert_vertex.name, cert_vertex.rho, cert_vertex.lam,
                      vertex_machine, tag,
                      [(p, machine.basis[i]) for _, p, i in pairs])


def _rewrite_into(ctx, amb_word: Word, cert_vertex: CertVertex, gname: str) -> Word:
    try:
        if isinstance(ctx, TrivialGroup):
            if not ctx.ambient.is_trivial(amb_word):
                raise GroupError("nontrivial entry at a collapsed vertex")
            return Word()
        if isinstance(ctx, CyclicGroup):
            k = ctx.power_of(amb_word)
            if k is None:
                raise GroupError("entry is not a power of the curve")
            return Word([(ctx.name, k)]) if k else Word()
        expr = ctx.rewriter.rewrite_checked(amb_word)
        if expr is None:
            raise GroupError("entry leaves the target subgroup")
        return expr
    except GroupError as exc:
        raise DecompositionError(
            f"{cert_vertex.name}: output for generator {gname} does not land "
            f"in the lambda target ({exc})") from exc


def _classify_vertex(amb: SphereGroup, tree: SphereTreeOfGroups,
                     entries: list[Word]) -> str:
    nontrivial = [w for w in entries if not amb.is_trivial(w)]
    if not nontrivial:
        return "trivial"
    root = _common_cyclic_root(amb, nontrivial)
    if root is None:
        return "essential"
    kind, _, _ = amb.classify_word(root)
    if kind in ("trivial", "peripheral"):
        return "trivial"
    form = amb.conj_class(root, oriented=False).form
    if form in set(tree.curve_forms().values()):
        return "annular"
    return "essential"


def _common_cyclic_root(amb: SphereGroup, words: list[Word]) -> Optional[Word]:
    """A word c with every input a power of a conjugate c^w, or None.

    Detected through the folded subgroup graph: the subgroup generated by the
    entries must have rank one.
    """
    rewriter = SubgroupRewriter(amb, [(f"y{k}", w) for k, w in enumerate(words)])
    tree, nontree = rewriter.graph.spanning_data()
    if len(nontree) != 1:
        return None if len(nontree) > 1 else Word()
    u, g, v = nontree[0]
    loop = tree[u] * Word.gen(g) * tree[v].inverse()
    return amb.normalize(loop)


def decompose(machine: Machine, tree: SphereTreeOfGroups,
              cert: DecompositionCertificate) -> TreeOfBisets:
    """Apply a decomposition certificate to a machine, verifying closure."""
    if machine.left != machine.right:
        raise DecompositionError("decomposition needs a self-biset")
    adapted = _adapted_elements(machine, cert)
    vertices = {}
    for cv in cert.vertices:
        vertices[cv.name] = _vertex_machine(machine, tree, cv, adapted)
    edges = (list(cert.edges) and
             _edges_from_cert(machine, tree, cert, vertices, adapted)
             or _derive_edges(machine, tree, cert, vertices, adapted))
    tb = TreeOfBisets(machine, tree, cert, vertices, edges)
    _check_partition(machine, tree, cert)
    return tb


def _check_partition(machine: Machine, tree: SphereTreeOfGroups,
                     cert: DecompositionCertificate):
    labels = [lbl for lbl, _, _ in cert.basis]
    for down in tree.spheres:
        used = [l for cv in cert.vertices if cv.rho == down
                for l in cv.sub_basis]
        if sorted(used) != sorted(labels):
            raise DecompositionError(
                f"sub-bases over {down} do not partition the adapted basis")


def _orbit_data(machine: Machine, adapted, rep: Word):
    """Orbits of a curve representative on the adapted basis: lists of
    (labels in orbit order, ambient cycle product)."""
    amb = machine.right
    labels = sorted(adapted)
    steps = {}
    for label in labels:
        prefix, idx = adapted[label]
        h, j = machine.act_index(idx, rep)
        label2 = next(l for l in labels if adapted[l][1] == j)
        steps[label] = (amb.mul(prefix, h, amb.inv(adapted[label2][0])), label2)
    seen = set()
    orbits = []
    for label in labels:
        if label in seen:
            continue
        cyc = []
        prod = Word()
        cur = label
        while True:
            seen.add(cur)
            cyc.append(cur)
            h, cur = steps[cur]
            prod = prod * h
            if cur == label:
                break
        orbits.append((cyc, amb.normalize(prod)))
    return orbits


def _incident_vertices(tree: SphereTreeOfGroups, curve: str) -> list[str]:
    return [a if a != curve else b for a, b in tree.edges if curve in (a, b)]


def _derive_edges(machine: Machine, tree: SphereTreeOfGroups,
                  cert: DecompositionCertificate, vertices, adapted):
    edges = []
    for cname, cv in tree.curves.items():
        sides = _incident_vertices(tree, cname)
        for orbit, prod in _orbit_data(machine, adapted, cv.rep):
            rep_label = min(orbit)
            incident = []
            for down in sides:
                owner = next((v for v in cert.vertices
                              if v.rho == down and rep_label in v.sub_basis),
                             None)
                if owner is None:
                    raise DecompositionError(
                        f"orbit of {cname} at {rep_label} split across "
                        f"sub-bases over {down}")
                # twist = adapted prefix relative to the vertex's own prefix
                tv = vertices[owner.name]
                vp = dict((lbl, p) for (p, _), lbl in
                          zip(tv.basis_elements, tv.machine.basis))
                amb = machine.right
                twist = amb.mul(adapted[rep_label][0],
                                amb.inv(vp[rep_label]))
                incident.append((owner.name, rep_label, twist))
            edges.append(TreeEdge(cname, len(orbit), prod,
                                  incident[0], incident[1]))
    return edges


def _edges_from_cert(machine: Machine, tree: SphereTreeOfGroups,
                     cert: DecompositionCertificate, vertices, adapted):
    edges = []
    for ce in cert.edges:
        rep = tree.curves[ce.curve].rep
        orbits = _orbit_data(machine, adapted, rep)
        orbit, prod = next((o, p) for o, p in orbits if ce.rep_label in o)
        edges.append(TreeEdge(ce.curve, len(orbit), prod, ce.side1, ce.side2))
    return edges


# ---------------------------------------------------------------------------
# Verification and return bisets
# ---------------------------------------------------------------------------

def verify_tree(tb: TreeOfBisets) -> CheckReport:
    report = CheckReport()
    machine, tree, cert = tb.machine, tb.tree, tb.certificate
    amb = machine.right
    adapted = _adapted_elements(machine, cert)
    # sub-bases partition the adapted basis per downstairs sphere
    try:
        _check_partition(machine, tree, cert)
        report.add("sub-bases partition the basis", True)
    except DecompositionError as exc:
        report.add("sub-bases partition the basis", False, str(exc))
    # vertex round-trips: recompute the machines from the ambient recursion
    for cv in cert.vertices:
        try:
            fresh = _vertex_machine(machine, tree, cv, adapted)
            same = fresh.machine == tb.vertices[cv.name].machine
            report.add(f"vertex {cv.name} round trip", same)
            report.add(f"vertex {cv.name} tag",
                       fresh.tag == tb.vertices[cv.name].tag,
                       f"recomputed {fresh.tag}")
        except DecompositionError as exc:
            report.add(f"vertex {cv.name} round trip", False, str(exc))
    # edge inclusions: both images must be the same ambient biset element
    for edge in tb.edges:
        sides = []
        for vname, label, twist in (edge.side1, edge.side2):
            tv = tb.vertices[vname]
            vp = dict(zip(tv.machine.basis,
                          (p for p, _ in tv.basis_elements)))
            vl = dict(zip(tv.machine.basis,
                          (l for _, l in tv.basis_elements)))
            if label not in vp:
                sides.append(None)
                continue
            sides.append((amb.mul(twist, vp[label]), vl[label]))
        ok = (None not in sides
              and sides[0][1] == sides[1][1]
              and amb.equal(sides[0][0], sides[1][0]))
        report.add(f"edge over {edge.curve} at {edge.side1[1]} intertwines", ok)
    # essential dynamics well-defined
    try:
        _essential_dynamics(tb)
        report.add("essential dynamics well-defined", True)
    except DecompositionError as exc:
        report.add("essential dynamics well-defined", False, str(exc))
    return report


def _essential_dynamics(tb: TreeOfBisets) -> dict[str, str]:
    out = {}
    for down in tb.tree.spheres:
        ess = [v for v in tb.vertices.values()
               if v.lam == down and v.tag == "essential"]
        if len(ess) != 1:
            raise DecompositionError(
                f"sphere {down} carries {len(ess)} essential vertices")
        if ess[0].rho not in tb.tree.spheres:
            raise DecompositionError(
                f"essential vertex over {down} covers a curve")
        out[down] = ess[0].rho
    return out


def return_bisets(tb: TreeOfBisets) -> dict[str, Machine]:
    """One machine per essential cycle, tensored along the cycle; keyed by the
    minimal downstairs vertex of the cycle."""
    dyn = _essential_dynamics(tb)
    vertex_of = {v.lam: v for v in tb.vertices.values()
                 if v.tag == "essential"}
    out = {}
    seen = set()
    for start in sorted(dyn):
        if start in seen:
            continue
        trail = []
        cur = start
        while cur not in trail:
            trail.append(cur)
            cur = dyn[cur]
        cycle = trail[trail.index(cur):]
        anchor = min(cycle)
        k = cycle.index(anchor)
        cycle = cycle[k:] + cycle[:k]
        seen.update(cycle)
        if anchor in out:
            continue
        machine = vertex_of[cycle[0]].machine
        for nxt in cycle[1:]:
            machine = machine.tensor(vertex_of[nxt].machine)
        out[anchor] = machine
    return out
