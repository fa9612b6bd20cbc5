"""Commutative cubes of finite sets and the hyperspace / symmetric-power functors.

A :class:`FinCube` assigns a finite set (given by its size) to every subset
``s`` of ``{0..n-1}`` (encoded as a bitmask) and a map to every inclusion
``s ⊆ t``.  ``Exp`` sends a set to its nonempty subsets and ``SP(k)`` to its
size-``k`` multisets; ``exp`` and ``sigma^k`` are their algebraic duals,
computed here as images of a subalgebra of ``P(m)``.
"""
from __future__ import annotations

import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from . import kernels
from .commute import commutes, commutes_via_pushout, find_weak_failure, weakly_commutes
from .core import (
    InternalCheckError,
    Subalgebra,
    generate_subalgebra,
    intersect,
    intersect_all,
    join_all,
    mask_of,
    points_of,
    upper_projection,
)

logger = logging.getLogger(__name__)

DEFAULT_SIZE_CAP = 1 << 16


class SizeOverflow(ValueError):
    pass


class NotFunctorial(ValueError):
    pass


def size_cap() -> int:
    raw = os.environ.get("BOOLALG_SIZE_CAP", "")
    return int(raw) if raw.strip() else DEFAULT_SIZE_CAP


def _check_size(size: int, what: str) -> None:
    cap = size_cap()
    if size > cap:
        raise SizeOverflow(f"{what} has {size} points, above the cap {cap} (BOOLALG_SIZE_CAP)")


# -- functor identifiers -----------------------------------------------------


@dataclass(frozen=True)
class FunctorId:
    kind: str
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("exp", "sp"):
            raise ValueError(f"unknown functor {self.kind!r}")
        if self.kind == "sp" and self.k < 2:
            raise ValueError("SP(k) needs k >= 2")

    @classmethod
    def parse(cls, text: "str | FunctorId") -> "FunctorId":
        if isinstance(text, FunctorId):
            return text
        t = text.strip().lower()
        if t == "exp":
            return cls("exp")
        for prefix in ("sp", "sigma"):
            if t.startswith(prefix) and t[len(prefix):].isdigit():
                return cls("sp", int(t[len(prefix):]))
        raise ValueError(f"unknown functor {text!r}; use exp, sp2, sp3, ...")

    def __str__(self) -> str:
        return "exp" if self.kind == "exp" else f"sp{self.k}"


EXP = FunctorId("exp")
SP2 = FunctorId("sp", 2)


# -- finite maps and cubes ---------------------------------------------------


@dataclass(frozen=True)
class FinMap:
    domain: int
    codomain: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if len(self.table) != self.domain:
            raise ValueError(f"table has {len(self.table)} entries for a domain of {self.domain}")
        if any(not 0 <= v < self.codomain for v in self.table):
            raise ValueError("map value outside the codomain")

    @classmethod
    def identity(cls, size: int) -> "FinMap":
        return cls(size, size, tuple(range(size)))

    def __call__(self, x: int) -> int:
        return self.table[x]

    def then(self, other: "FinMap") -> "FinMap":
        """``other ∘ self``."""
        if other.domain != self.codomain:
            raise ValueError("maps do not compose")
        return FinMap(self.domain, other.codomain, tuple(other.table[v] for v in self.table))


def subset_key(s: int) -> str:
    return "".join(str(i) for i in points_of(s))


def _parse_key(key: str, n: int) -> int:
    s = 0
    for ch in key:
        i = int(ch)
        if not 0 <= i < n or s >> i & 1:
            raise ValueError(f"bad subset key {key!r}")
        s |= 1 << i
    return s


def _subsets(mask: int) -> Iterator[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass
class FinCube:
    n: int
    spaces: dict[int, int]
    maps: dict[tuple[int, int], FinMap] = field(default_factory=dict)

    def __post_init__(self):
        full = (1 << self.n) - 1
        if set(self.spaces) != set(range(full + 1)):
            raise ValueError("need one space per subset")
        for s in range(full + 1):
            self.maps.setdefault((s, s), FinMap.identity(self.spaces[s]))
        for s in range(full + 1):
            for t in range(full + 1):
                if s & ~t == 0 and (s, t) not in self.maps:
                    raise ValueError(f"missing map {subset_key(s)}->{subset_key(t)}")
        for (s, t), f in self.maps.items():
            if s & ~t:
                raise ValueError(f"map {subset_key(s)}->{subset_key(t)} is not along an inclusion")
            if f.domain != self.spaces[s] or f.codomain != self.spaces[t]:
                raise ValueError(f"map {subset_key(s)}->{subset_key(t)} has the wrong shape")

    def map(self, s: int, t: int) -> FinMap:
        return self.maps[(s, t)]

    def is_functorial(self) -> bool:
        full = (1 << self.n) - 1
        for s in range(full + 1):
            if self.maps[(s, s)].table != tuple(range(self.spaces[s])):
                return False
        for u in range(full + 1):
            for t in _subsets(u):
                for s in _subsets(t):
                    if self.maps[(s, t)].then(self.maps[(t, u)]) != self.maps[(s, u)]:
                        return False
        return True

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "spaces": {subset_key(s): k for s, k in sorted(self.spaces.items())},
            "maps": {
                f"{subset_key(s)}->{subset_key(t)}": list(f.table)
                for (s, t), f in sorted(self.maps.items())
                if s != t
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "FinCube":
        n = int(data["n"])
        spaces = {_parse_key(k, n): int(v) for k, v in data["spaces"].items()}
        maps = {}
        for key, table in data.get("maps", {}).items():
            src, _, dst = key.partition("->")
            s, t = _parse_key(src, n), _parse_key(dst, n)
            if s not in spaces or t not in spaces:
                raise ValueError(f"map {key} refers to a missing space")
            maps[(s, t)] = FinMap(spaces[s], spaces[t], table)
        return cls(n, spaces, maps)


def projection_cube(a: Sequence[Sequence[int] | set[int]]) -> FinCube:
    """Cube of restriction maps ``2^{b(s)} -> 2^{b(t)}``.

    ``b(∅)`` is the union of the ``a_i`` and ``b(s)`` the intersection over
    ``s``.  Points of ``2^b`` are 0/1 vectors over ``sorted(b)``, numbered
    lexicographically (first coordinate most significant).
    """
    sets = [frozenset(int(x) for x in ai) for ai in a]
    n = len(sets)
    full = (1 << n) - 1
    union = frozenset().union(*sets)
    supports = {}
    for s in range(full + 1):
        members = [sets[i] for i in points_of(s)]
        supports[s] = sorted(frozenset.intersection(*members) if members else union)
    _check_size(1 << len(supports[0]), "projection cube")
    spaces = {s: 1 << len(b) for s, b in supports.items()}
    maps = {}
    for t in range(full + 1):
        bt = supports[t]
        for s in _subsets(t):
            bs = supports[s]
            width = len(bs)
            # bit position (from the most significant end) of each kept coordinate
            shifts = [width - 1 - bs.index(x) for x in bt]
            table = []
            for p in range(spaces[s]):
                v = 0
                for sh in shifts:
                    v = (v << 1) | (p >> sh & 1)
                table.append(v)
            maps[(s, t)] = FinMap(spaces[s], spaces[t], table)
    return FinCube(n, spaces, maps)


def family_cube(family: Sequence[Subalgebra]) -> FinCube:
    """Dual cube of a family: points of the ground at ``∅``, atoms of ``⋂_{i∈s} A_i`` at ``s``."""
    family = list(family)
    n = len(family)
    m = family[0].ground if family else 0
    full = (1 << n) - 1
    algebras = {0: Subalgebra.discrete(m)}
    for s in range(1, full + 1):
        algebras[s] = intersect_all([family[i] for i in points_of(s)])
    spaces = {s: A.n_atoms for s, A in algebras.items()}
    maps = {}
    for t in range(full + 1):
        lab = algebras[t].labels
        for s in _subsets(t):
            table = [int(lab[(b & -b).bit_length() - 1]) for b in algebras[s].blocks]
            maps[(s, t)] = FinMap(spaces[s], spaces[t], table)
    return FinCube(n, spaces, maps)


def dual_family(cube: FinCube) -> list[Subalgebra]:
    """Subalgebras of ``P(X_∅)`` given by the fibres of the maps ``X_∅ -> X_{i}``."""
    return [Subalgebra.from_labels(cube.map(0, 1 << i).table) for i in range(cube.n)]


def unlifted_tuple(cube: FinCube, *, check: bool = True, backend: Optional[str] = None):
    """Least pairwise-compatible tuple of corner points with no common preimage in ``X_∅``."""
    if check and not cube.is_functorial():
        raise NotFunctorial("cube maps do not compose")
    n = cube.n
    if n == 0:
        return None
    sizes = np.array([cube.spaces[1 << i] for i in range(n)], dtype=np.int64)
    pair_labels = {}
    for i, j in itertools.permutations(range(n), 2):
        pair_labels[(i, j)] = cube.map(1 << i, (1 << i) | (1 << j)).table
    labels = kernels.label_table(n, list(sizes), pair_labels)
    radix = np.ones(n, dtype=np.int64)
    for j in range(n - 2, -1, -1):
        radix[j] = radix[j + 1] * sizes[j + 1]
    if cube.spaces[0]:
        corners = np.stack([np.asarray(cube.map(0, 1 << i).table, dtype=np.int64) for i in range(n)], axis=1)
        lifted = np.unique(corners @ radix)
    else:
        lifted = np.zeros(0, dtype=np.int64)
    return kernels.unlifted_tuple(sizes, labels, radix, lifted, backend=backend)


def is_n_commutative(cube: FinCube, *, check: bool = True) -> bool:
    return unlifted_tuple(cube, check=check) is None


# -- functor application -----------------------------------------------------


@lru_cache(maxsize=64)
def exp_points(size: int) -> tuple[int, ...]:
    """Nonempty subsets of ``range(size)`` as bitmasks, ordered by their sorted tuples."""
    _check_size((1 << size) - 1, "Exp space")
    return tuple(sorted(range(1, 1 << size), key=points_of))


@lru_cache(maxsize=64)
def sp_points(size: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Size-``k`` multisets of ``range(size)`` as sorted tuples, lexicographically."""
    _check_size(math.comb(size + k - 1, k), f"SP{k} space")
    return tuple(itertools.combinations_with_replacement(range(size), k))


def _functor_space(F: FunctorId, size: int):
    return exp_points(size) if F.kind == "exp" else sp_points(size, F.k)


def _functor_map(F: FunctorId, f: FinMap) -> FinMap:
    src = _functor_space(F, f.domain)
    dst = _functor_space(F, f.codomain)
    index = {p: r for r, p in enumerate(dst)}
    if F.kind == "exp":
        table = []
        for K in src:
            image = 0
            for x in points_of(K):
                image |= 1 << f.table[x]
            table.append(index[image])
    else:
        table = [index[tuple(sorted(f.table[x] for x in M))] for M in src]
    return FinMap(len(src), len(dst), table)


def apply_functor(F: "FunctorId | str", cube: FinCube, *, check: bool = True) -> FinCube:
    F = FunctorId.parse(F)
    spaces = {s: len(_functor_space(F, k)) for s, k in cube.spaces.items()}
    maps = {key: _functor_map(F, f) for key, f in cube.maps.items()}
    out = FinCube(cube.n, spaces, maps)
    if check and not out.is_functorial():
        raise InternalCheckError(f"{F} broke functoriality")
    return out


# -- algebra side ----------------------------------------------------------------


def functor_ground(F: "FunctorId | str", m: int) -> int:
    F = FunctorId.parse(F)
    return len(_functor_space(F, m))


def functor_image(F: "FunctorId | str", A: Subalgebra, m: Optional[int] = None) -> Subalgebra:
    """Range of ``F(id: A -> P(m))`` as a partition of the new ground.

    exp: two nonempty subsets are identified when they meet the same atoms
    of ``A``; sigma^k: two multisets when they have the same multiset of
    ``A``-atoms.
    """
    F = FunctorId.parse(F)
    m = A.ground if m is None else m
    if A.ground != m:
        raise ValueError(f"subalgebra over {A.ground} points, expected {m}")
    lab = [int(v) for v in A.labels]
    if F.kind == "exp":
        keys = []
        for K in exp_points(m):
            hit = 0
            for x in points_of(K):
                hit |= 1 << lab[x]
            keys.append(hit)
    else:
        index: dict[tuple[int, ...], int] = {}
        keys = [index.setdefault(tuple(sorted(lab[x] for x in M)), len(index)) for M in sp_points(m, F.k)]
    if not keys:
        return Subalgebra(0, ())
    return Subalgebra.from_labels(keys)


def functor_image_by_generators(F: "FunctorId | str", A: Subalgebra, m: Optional[int] = None) -> Subalgebra:
    """Oracle: the image generated from members of ``A``.

    exp: generated by the boxes ``[a] = {K : K ⊆ a}``.  sigma^k: generated by
    the symmetric elements "at least ``c`` of the ``k`` coordinates lie in
    ``a``".  Enumerates all ``2^atoms`` members, so only for small inputs.
    """
    F = FunctorId.parse(F)
    m = A.ground if m is None else m
    members = list(A.members())
    gens = []
    if F.kind == "exp":
        pts = exp_points(m)
        for a in members:
            gens.append(mask_of(r for r, K in enumerate(pts) if K & ~a == 0))
    else:
        pts = sp_points(m, F.k)
        for a in members:
            counts = [sum(1 for x in M if a >> x & 1) for M in pts]
            for c in range(1, F.k + 1):
                gens.append(mask_of(r for r, cnt in enumerate(counts) if cnt >= c))
    return generate_subalgebra(len(pts), gens)


# -- searches ----------------------------------------------------------------


def restricted_growth_strings(m: int) -> list[tuple[int, ...]]:
    """All set partitions of ``range(m)`` as restricted growth strings, lexicographically."""
    if m == 0:
        return [()]
    out = []

    def rec(prefix: list[int], top: int) -> None:
        if len(prefix) == m:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            prefix.append(v)
            rec(prefix, max(top, v))
            prefix.pop()

    rec([0], 0)
    return out


def subalgebras_of(m: int) -> list[Subalgebra]:
    return [Subalgebra.from_labels(rgs) for rgs in restricted_growth_strings(m)]


CONDITIONS = ("well", "prefix", "triple")


@dataclass
class AlgebraWitness:
    functor: str
    ground: int
    condition: str
    indices: tuple[int, int, int]
    family: tuple[Subalgebra, ...]
    failing_atoms: tuple[int, ...]
    transcript: list[str]

    def to_json(self) -> dict:
        return {
            "kind": "algebra",
            "functor": self.functor,
            "ground": self.ground,
            "condition": self.condition,
            "indices": list(self.indices),
            "family": [A.to_json() for A in self.family],
            "failingImageAtoms": list(self.failing_atoms),
            "transcript": self.transcript,
        }


def _image_fails(images, condition):
    if condition == "prefix":
        if not weakly_commutes(images[:2]):
            return find_weak_failure(images[:2]) + (None,)
    return find_weak_failure(images)


class _AlgebraSearch:
    def __init__(self, F: FunctorId, m: int, condition: str):
        if condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")
        self.F, self.m, self.condition = F, m, condition
        self.algebras = subalgebras_of(m)
        self.images = [functor_image(F, A, m) for A in self.algebras]
        self._pair: dict[tuple[int, int], bool] = {}

    def pair(self, i: int, j: int) -> bool:
        key = (min(i, j), max(i, j))
        if key not in self._pair:
            self._pair[key] = commutes([self.algebras[i], self.algebras[j]], cross_check=False)
        return self._pair[key]

    def accept(self, i: int, j: int, k: int):
        A = [self.algebras[x] for x in (i, j, k)]
        if self.condition == "well" and not (self.pair(i, j) and self.pair(i, k) and self.pair(j, k)):
            return None
        if self.condition == "prefix" and not self.pair(i, j):
            return None
        if not commutes(A, cross_check=False):
            return None
        return _image_fails([self.images[x] for x in (i, j, k)], self.condition)

    def scan_first(self, i: int):
        count = len(self.algebras)
        for j in range(count):
            for k in range(count):
                hit = self.accept(i, j, k)
                if hit is not None:
                    return (i, j, k), hit
        return None


_WORKER: Optional[_AlgebraSearch] = None


def _init_worker(F: FunctorId, m: int, condition: str) -> None:
    global _WORKER
    _WORKER = _AlgebraSearch(F, m, condition)


def _scan_in_worker(i: int):
    assert _WORKER is not None
    return _WORKER.scan_first(i)


def weak_failure_reference(family: Sequence[Subalgebra]) -> Optional[tuple[int, ...]]:
    """Plain-loop weak commutativity check, independent of the kernels."""
    family = list(family)
    n = len(family)
    if n <= 1:
        return None
    m = family[0].ground
    full = (1 << m) - 1
    shared = []
    for i in range(n):
        parts = [intersect(family[i], family[j]) for j in range(n) if j != i]
        shared.append(join_all(parts, m))
    for t in itertools.product(*(range(A.n_atoms) for A in family)):
        x = full
        y = full
        for i, a in enumerate(t):
            b = family[i].blocks[a]
            x &= b
            y &= upper_projection(shared[i], b).bits
        if x == 0 and y != 0:
            return t
    return None


def _verify_algebra_witness(F: FunctorId, m: int, condition: str, family) -> list[str]:
    log = []
    subsets = {"well": [(0, 1), (0, 2), (1, 2), (0, 1, 2)], "prefix": [(0, 1), (0, 1, 2)], "triple": [(0, 1, 2)]}
    for sub in subsets[condition]:
        ok = commutes_via_pushout([family[x] for x in sub])
        log.append(f"commutes{sub} via pushout mediating map: {ok}")
        if not ok:
            raise InternalCheckError(f"witness family fails to commute on {sub}")
    images = [functor_image_by_generators(F, A, m) for A in family]
    dual = [functor_image(F, A, m) for A in family]
    if images != dual:
        raise InternalCheckError("generator-based and dual functor images differ")
    log.append(f"{F} images rebuilt from generators: {[B.n_atoms for B in images]} atoms over {images[0].ground} points")
    bad = weak_failure_reference(images)
    if bad is None and condition == "prefix":
        bad = weak_failure_reference(images[:2])
    if bad is None:
        raise InternalCheckError("reference check finds the images weakly commute")
    if _meet([images[i].blocks[a] for i, a in enumerate(bad)], images[0].ground):
        raise InternalCheckError("reference failure tuple has a nonempty meet")
    log.append(f"image atoms {bad} have empty meet but their shared-part projections meet")
    return log


def _meet(masks, m):
    out = (1 << m) - 1
    for b in masks:
        out &= b
    return out


def search_algebra_counterexample(
    F: "FunctorId | str",
    m: int,
    *,
    condition: str = "well",
    workers: int = 1,
    verify: bool = True,
) -> Optional[AlgebraWitness]:
    """Least triple of subalgebras of ``P(m)`` whose functor images fail to weakly commute.

    ``condition`` selects the hypothesis on the triple: ``"well"`` (every pair
    and the triple commute), ``"prefix"`` (the pair ``(A_0, A_1)`` and the
    triple commute) or ``"triple"`` (the triple commutes).  Triples are
    ordered lexicographically by restricted-growth-string index.
    """
    F = FunctorId.parse(F)
    if m > 6:
        raise SizeOverflow("algebra search is limited to grounds of at most 6 points")
    search = _AlgebraSearch(F, m, condition)
    count = len(search.algebras)
    found = None
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(F, m, condition)) as pool:
            for res in pool.map(_scan_in_worker, range(count)):
                if res is not None:
                    found = res
                    break
    else:
        for i in range(count):
            found = search.scan_first(i)
            if found is not None:
                break
    if found is None:
        return None
    idx, failing = found
    family = tuple(search.algebras[x] for x in idx)
    transcript = [f"triple {idx} of {count} subalgebras of P({m})"]
    if verify:
        transcript += _verify_algebra_witness(F, m, condition, family)
    return AlgebraWitness(str(F), m, condition, idx, family, tuple(x for x in failing if x is not None), transcript)


def lex_subsets(k: int) -> list[int]:
    """All subsets of ``range(k)`` as bitmasks, ordered by sorted tuple (empty first)."""
    return sorted(range(1 << k), key=points_of)


@dataclass
class CubeWitness:
    functor: str
    sets: tuple[tuple[int, ...], ...]
    unlifted: tuple[int, ...]
    transcript: list[str]

    def to_json(self) -> dict:
        return {
            "kind": "cube",
            "functor": self.functor,
            "sets": [list(a) for a in self.sets],
            "unliftedTuple": list(self.unlifted),
            "transcript": self.transcript,
        }


def _cube_candidates(k: int) -> Iterator[tuple[int, int, int]]:
    full = (1 << k) - 1
    order = lex_subsets(k)
    for a in itertools.product(order, repeat=3):
        if a[0] | a[1] | a[2] == full:
            yield a


def _describe_point(F: FunctorId, size: int, index: int, support) -> str:
    width = len(support)

    def vec(p):
        return "".join(str(p >> (width - 1 - c) & 1) for c in range(width)) or "()"

    if F.kind == "exp":
        return "{" + ",".join(vec(p) for p in points_of(exp_points(size)[index])) + "}"
    return "[" + ",".join(vec(p) for p in sp_points(size, F.k)[index]) + "]"


def _verify_cube_witness(F: FunctorId, sets) -> list[str]:
    cube = projection_cube(sets)
    base = dual_family(cube)
    log = [f"dual subalgebras of P({cube.spaces[0]}): {[A.n_atoms for A in base]} atoms"]
    if not commutes(base):
        raise InternalCheckError("projection cube is not 3-commutative on the algebra side")
    log.append("base family commutes (algebra side)")
    images = [functor_image(F, A, cube.spaces[0]) for A in base]
    if commutes(images):
        raise InternalCheckError("functor images commute, cube witness not confirmed")
    log.append(f"{F} images over {images[0].ground} points do not commute (algebra side)")
    return log


def search_cube_counterexample(
    F: "FunctorId | str", universe_bound: int, *, verify: bool = True
) -> Optional[CubeWitness]:
    """Least ``(a_0, a_1, a_2)`` whose projection cube is 3-commutative but its image is not.

    Universe sizes are tried in increasing order; at size ``k`` only triples
    covering ``range(k)`` are considered, ordered lexicographically with
    subsets compared as sorted tuples.
    """
    F = FunctorId.parse(F)
    for k in range(universe_bound + 1):
        for masks in _cube_candidates(k):
            sets = tuple(tuple(points_of(a)) for a in masks)
            cube = projection_cube(sets)
            if not is_n_commutative(cube, check=False):
                raise InternalCheckError(f"projection cube of {sets} is not 3-commutative")
            image = apply_functor(F, cube, check=False)
            bad = unlifted_tuple(image, check=False)
            if bad is None:
                continue
            if not image.is_functorial():
                raise InternalCheckError("functor image is not functorial")
            supports = [sorted(sets[i]) for i in range(3)]
            desc = [_describe_point(F, cube.spaces[1 << i], bad[i], supports[i]) for i in range(3)]
            transcript = [
                f"a = {[list(s) for s in sets]} over a universe of {k} points",
                f"projection cube is 3-commutative; {F} cube has {image.spaces[0]} points at the bottom corner",
                f"compatible corner tuple {list(bad)} = {desc} has no common preimage",
            ]
            if verify:
                transcript += _verify_cube_witness(F, sets)
            return CubeWitness(str(F), sets, bad, transcript)
    return None


def brute_force_cube_search(F: "FunctorId | str", universe_bound: int):
    """Oracle for the recorded search minima: the cube search itself, fully verified."""
    hit = search_cube_counterexample(F, universe_bound, verify=True)
    return None if hit is None else hit.sets
