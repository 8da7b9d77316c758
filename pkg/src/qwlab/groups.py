"""Permutations of the walk basis, graph automorphisms, and orbits.

Group elements are stored as explicit index arrays on the flat
``(vertex, color)`` basis; matrices are materialized on demand.  The
automorphism criterion is exact integer arithmetic: p is an automorphism
iff conjugating the shift permutation by p returns it unchanged.
"""

from __future__ import annotations

import collections
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GroupOrderError, NotAnAutomorphismError
from .graphs import BasisIndexing, CayleyGraph, ColoredGraph, shift_permutation

__all__ = [
    "Permutation",
    "PermGroup",
    "parse_cycles",
    "direction_perm_to_automorphism",
    "left_translation",
    "is_automorphism",
    "is_direction_preserving",
    "closure",
    "orbits",
    "group_to_dict",
    "group_from_dict",
]

DEFAULT_MAX_ORDER = 10_080  # |S_7|; desk-scale graphs only


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``[0, D)`` stored as its image tuple."""

    image: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(len(self.image))):
            raise ValueError("image is not a bijection")

    @classmethod
    def identity(cls, dim: int) -> "Permutation":
        return cls(tuple(range(dim)))

    @property
    def degree(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.other)(x) = self(other(x))."""
        return Permutation(tuple(self.image[x] for x in other.image))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.image)
        for i, x in enumerate(self.image):
            inv[x] = i
        return Permutation(tuple(inv))

    @property
    def is_identity(self) -> bool:
        return all(i == x for i, x in enumerate(self.image))

    def matrix(self, dtype=complex) -> np.ndarray:
        d = len(self.image)
        m = np.zeros((d, d), dtype=dtype)
        m[np.asarray(self.image), np.arange(d)] = 1
        return m

    def apply_to_vector(self, vec: np.ndarray) -> np.ndarray:
        out = np.empty_like(vec)
        out[np.asarray(self.image)] = vec
        return out


@dataclass(frozen=True)
class PermGroup:
    """A closed set of permutations with a distinguished generator list."""

    elements: tuple[Permutation, ...]
    generators: tuple[Permutation, ...]

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def degree(self) -> int:
        return self.elements[0].degree

    def __contains__(self, p: Permutation) -> bool:
        return p in set(self.elements)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, degree: int) -> Permutation:
    """Parse disjoint cycles over ``1..degree`` into a 0-based permutation.

    ``"(1,2)"`` swaps the first two symbols, ``"(1,2,3)"`` maps 1->2->3->1,
    and the empty string is the identity.  Whitespace is ignored.
    """
    stripped = re.sub(r"\s+", "", text)
    if degree < 1:
        raise ValueError("degree must be >= 1")
    image = list(range(degree))
    if stripped:
        body = _CYCLE_RE.sub("", stripped)
        if body:
            raise ValueError(f"malformed cycle notation: {text!r}")
        seen: set[int] = set()
        for group in _CYCLE_RE.findall(stripped):
            if not group:
                continue
            try:
                symbols = [int(tok) for tok in group.split(",")]
            except ValueError:
                raise ValueError(f"malformed cycle notation: {text!r}") from None
            for s in symbols:
                if not 1 <= s <= degree:
                    raise ValueError(f"symbol {s} out of range 1..{degree}")
                if s in seen:
                    raise ValueError(f"symbol {s} repeated across cycles")
                seen.add(s)
            for a, b in zip(symbols, symbols[1:] + symbols[:1]):
                image[a - 1] = b - 1
    return Permutation(tuple(image))


def direction_perm_to_automorphism(cay: CayleyGraph, dirperm: Permutation) -> Permutation:
    """Lift a permutation of generator directions to a basis automorphism.

    The induced vertex map sends the word t_{i1}..t_{ik} to
    t_{pi(i1)}..t_{pi(ik)}; it is only well defined when any two words for
    the same vertex agree after relabeling, which is checked exhaustively
    over all edges.  The basis permutation acts as |v, c> -> |phi(v), pi(c)>.
    """
    g = cay.graph
    d = cay.degree
    if dirperm.degree != d:
        raise ValueError("direction permutation degree does not match generators")
    if not g.is_consistently_colored:
        raise ValueError("graph is not consistently colored")

    e_idx = cay.vertex_index[cay.identity]
    vmap = [-1] * g.num_vertices
    vmap[e_idx] = e_idx
    queue = collections.deque([e_idx])
    while queue:
        v = queue.popleft()
        for c in range(1, d + 1):
            w, _ = g.neighbor(v, c)
            target, _ = g.neighbor(vmap[v], dirperm(c - 1) + 1)
            if vmap[w] == -1:
                vmap[w] = target
                queue.append(w)

    for v in range(g.num_vertices):
        for c in range(1, d + 1):
            w, _ = g.neighbor(v, c)
            target, _ = g.neighbor(vmap[v], dirperm(c - 1) + 1)
            if vmap[w] != target:
                raise NotAnAutomorphismError(
                    f"direction permutation is not an automorphism: vertex {v}, "
                    f"color {c} maps inconsistently"
                )

    idx = BasisIndexing.from_graph(g)
    image = [0] * idx.total_dim
    for v in range(g.num_vertices):
        for c in range(1, d + 1):
            image[idx.index(v, c)] = idx.index(vmap[v], dirperm(c - 1) + 1)
    return Permutation(tuple(image))


def left_translation(cay: CayleyGraph, element) -> Permutation:
    """Direction-preserving automorphism g -> a*g with identity coin action."""
    g = cay.graph
    idx = BasisIndexing.from_graph(g)
    image = [0] * idx.total_dim
    for v in range(g.num_vertices):
        w = cay.vertex_index[cay.mul(element, cay.elements[v])]
        for c in g.colors(v):
            image[idx.index(v, c)] = idx.index(w, c)
    return Permutation(tuple(image))


def is_automorphism(g: ColoredGraph, p: Permutation) -> bool:
    """Exact check that conjugating the shift by p returns the shift."""
    shift = shift_permutation(g)
    if p.degree != shift.size:
        raise ValueError("permutation dimension does not match the walk basis")
    img = np.asarray(p.image)
    return bool(np.array_equal(shift[img], img[shift]))


def is_direction_preserving(g: ColoredGraph, p: Permutation) -> bool:
    """True when p acts as (vertex permutation) x (identity on colors)."""
    idx = BasisIndexing.from_graph(g)
    for v in range(g.num_vertices):
        targets = set()
        for c in g.colors(v):
            w, cw = idx.pair(p(idx.index(v, c)))
            if cw != c:
                return False
            targets.add(w)
        if len(targets) != 1:
            return False
    return True


def closure(
    generators: Sequence[Permutation],
    *,
    dim: int | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> PermGroup:
    """Full element set generated by breadth-first products.

    Finite closure under generator products contains inverses and the
    identity automatically.  Raises :class:`GroupOrderError` beyond
    ``max_order`` elements to guard against combinatorial blowup.
    """
    generators = tuple(generators)
    if not generators:
        if dim is None:
            raise ValueError("dim required for an empty generator list")
        e = Permutation.identity(dim)
        return PermGroup((e,), ())
    if dim is not None and any(g.degree != dim for g in generators):
        raise ValueError("generator degree does not match dim")

    e = Permutation.identity(generators[0].degree)
    seen = {e.image: e}
    queue = collections.deque([e])
    while queue:
        p = queue.popleft()
        for s in generators:
            q = s.compose(p)
            if q.image not in seen:
                if len(seen) >= max_order:
                    raise GroupOrderError(
                        f"group order exceeds max_order={max_order}"
                    )
                seen[q.image] = q
                queue.append(q)
    elements = tuple(sorted(seen.values(), key=lambda p: p.image))
    return PermGroup(elements, generators)


def orbits(grp: PermGroup | Iterable[Permutation], dim: int) -> tuple[tuple[int, ...], ...]:
    """Partition of ``[0, dim)`` into orbits, sorted by smallest member."""
    perms = grp.generators if isinstance(grp, PermGroup) else tuple(grp)
    parent = list(range(dim))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for p in perms:
        if p.degree != dim:
            raise ValueError("permutation degree does not match dim")
        for i, j in enumerate(p.image):
            union(i, j)

    buckets: dict[int, list[int]] = collections.defaultdict(list)
    for i in range(dim):
        buckets[find(i)].append(i)
    return tuple(tuple(sorted(members)) for _, members in sorted(buckets.items()))


def group_to_dict(grp: PermGroup) -> dict:
    return {
        "degree": grp.degree,
        "generators": [list(p.image) for p in grp.generators],
        "elements": [list(p.image) for p in grp.elements],
    }


def group_from_dict(d: dict) -> PermGroup:
    try:
        gens = tuple(Permutation(tuple(img)) for img in d["generators"])
        elems = tuple(Permutation(tuple(img)) for img in d["elements"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed group document: {exc}") from None
    return PermGroup(elems, gens)


def group_to_json(grp: PermGroup) -> str:
    return json.dumps(group_to_dict(grp), sort_keys=True)


def group_from_json(text: str) -> PermGroup:
    return group_from_dict(json.loads(text))
