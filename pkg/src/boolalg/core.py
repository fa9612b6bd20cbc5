"""Finite Boolean algebras as partition subalgebras of a powerset.

An :class:`Element` is a subset of the ground set ``{0, ..., m-1}`` stored as
a Python int bitset.  A :class:`Subalgebra` is the partition of the ground
set into its atoms; its members are exactly the unions of blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class GroundMismatch(ValueError):
    pass


class InvalidSubalgebra(ValueError):
    pass


class InternalCheckError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


def points_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(points: Iterable[int]) -> int:
    mask = 0
    for p in points:
        mask |= 1 << int(p)
    return mask


def _full(m: int) -> int:
    return (1 << m) - 1


@dataclass(frozen=True)
class Element:
    ground: int
    bits: int

    def __post_init__(self):
        if self.ground < 0:
            raise ValueError("ground size must be nonnegative")
        if self.bits < 0 or self.bits >> self.ground:
            raise ValueError(f"bits {self.bits:#x} exceed ground {self.ground}")

    @classmethod
    def from_points(cls, ground: int, points: Iterable[int]) -> "Element":
        return cls(ground, mask_of(points))

    @classmethod
    def zero(cls, ground: int) -> "Element":
        return cls(ground, 0)

    @classmethod
    def one(cls, ground: int) -> "Element":
        return cls(ground, _full(ground))

    def _check(self, other: "Element") -> None:
        if not isinstance(other, Element):
            raise TypeError(f"expected Element, got {type(other).__name__}")
        if other.ground != self.ground:
            raise GroundMismatch(f"ground {self.ground} vs {other.ground}")

    def __and__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.ground, self.bits & other.bits)

    def __or__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.ground, self.bits | other.bits)

    def __invert__(self) -> "Element":
        return Element(self.ground, _full(self.ground) & ~self.bits)

    def __le__(self, other: "Element") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def __ge__(self, other: "Element") -> bool:
        return other <= self

    def is_zero(self) -> bool:
        return self.bits == 0

    def points(self) -> list[int]:
        return points_of(self.bits)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __repr__(self) -> str:
        return f"Element({self.ground}, {self.points()})"

    def to_json(self) -> dict:
        return {"ground": self.ground, "bits": self.points()}

    @classmethod
    def from_json(cls, data: dict) -> "Element":
        return cls.from_points(int(data["ground"]), data["bits"])


@dataclass(frozen=True)
class ElementFamily:
    """A tuple of elements over one ground set."""

    ground: int
    members: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        for x in self.members:
            if x.ground != self.ground:
                raise GroundMismatch(f"member over ground {x.ground}, family over {self.ground}")

    def __iter__(self) -> Iterator[Element]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> Element:
        return self.members[i]


ElementLike = Union[Element, int]


@dataclass(frozen=True)
class Subalgebra:
    """Subalgebra of ``P(ground)`` given by its atoms (blocks of a partition).

    Blocks are kept sorted by least member, so equal subalgebras compare
    equal.  ``Subalgebra(0, ())`` is the degenerate one-element algebra.
    """

    ground: int
    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(sorted((int(b) for b in self.blocks), key=lambda b: b & -b))
        object.__setattr__(self, "blocks", blocks)
        seen = 0
        for b in blocks:
            if b <= 0:
                raise InvalidSubalgebra("blocks must be nonempty")
            if b & seen:
                raise InvalidSubalgebra("blocks overlap")
            seen |= b
        if seen != _full(self.ground):
            raise InvalidSubalgebra(f"blocks do not cover the ground set of size {self.ground}")

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_blocks(cls, ground: int, blocks: Iterable[Iterable[int]]) -> "Subalgebra":
        return cls(ground, tuple(mask_of(b) for b in blocks))

    @classmethod
    def from_labels(cls, labels) -> "Subalgebra":
        """Partition whose blocks are the level sets of ``labels``."""
        labels = np.asarray(labels)
        m = labels.shape[0]
        if m == 0:
            return cls(0, ())
        _, inv = np.unique(labels, return_inverse=True)
        inv = inv.reshape(-1)
        order = np.argsort(inv, kind="stable")
        cuts = np.flatnonzero(np.diff(inv[order])) + 1
        buf = np.zeros(m, dtype=bool)
        blocks = []
        for group in np.split(order, cuts):
            buf[:] = False
            buf[group] = True
            blocks.append(int.from_bytes(np.packbits(buf, bitorder="little").tobytes(), "little"))
        return cls(m, tuple(blocks))

    @classmethod
    def trivial(cls, m: int) -> "Subalgebra":
        return cls(m, (_full(m),) if m else ())

    @classmethod
    def discrete(cls, m: int) -> "Subalgebra":
        """The whole powerset ``P(m)``."""
        return cls(m, tuple(1 << p for p in range(m)))

    # -- structure ------------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return len(self.blocks)

    @property
    def atoms(self) -> tuple[Element, ...]:
        return tuple(Element(self.ground, b) for b in self.blocks)

    @property
    def size(self) -> int:
        return 1 << len(self.blocks)

    @cached_property
    def labels(self) -> np.ndarray:
        """``labels[p]`` is the index of the block containing point ``p``."""
        lab = np.empty(self.ground, dtype=np.int64)
        for k, b in enumerate(self.blocks):
            lab[points_of(b)] = k
        return lab

    def block_of(self, point: int) -> int:
        return int(self.labels[point])

    def contains(self, x: ElementLike) -> bool:
        bits = self._bits(x)
        for b in self.blocks:
            inter = b & bits
            if inter and inter != b:
                return False
        return True

    __contains__ = contains

    def members(self) -> Iterator[int]:
        """All ``2**n_atoms`` members as bitsets, in binary-counter order."""
        for sel in range(1 << len(self.blocks)):
            yield self.element_from_atoms(sel)

    def element_from_atoms(self, selection: int) -> int:
        """Union of the blocks whose indices are set in ``selection``."""
        out = 0
        for k in points_of(selection):
            out |= self.blocks[k]
        return out

    def atoms_below(self, x: ElementLike) -> list[int]:
        bits = self._bits(x)
        return [k for k, b in enumerate(self.blocks) if b & ~bits == 0]

    def refines(self, other: "Subalgebra") -> bool:
        """True iff ``other`` is a subalgebra of ``self``."""
        _same_ground(self, other)
        return all(self.contains(b) for b in other.blocks)

    def _bits(self, x: ElementLike) -> int:
        if isinstance(x, Element):
            if x.ground != self.ground:
                raise GroundMismatch(f"element over {x.ground}, algebra over {self.ground}")
            return x.bits
        x = int(x)
        if x < 0 or x >> self.ground:
            raise ValueError("bitset exceeds ground")
        return x

    def __repr__(self) -> str:
        return f"Subalgebra({self.ground}, {[points_of(b) for b in self.blocks]})"

    def to_json(self) -> dict:
        return {"ground": self.ground, "blocks": [points_of(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, data: dict) -> "Subalgebra":
        ground = int(data["ground"])
        blocks = data["blocks"]
        for b in blocks:
            for p in b:
                if not 0 <= int(p) < ground:
                    raise InvalidSubalgebra(f"point {p} outside ground {ground}")
            if len(set(b)) != len(b):
                raise InvalidSubalgebra("repeated point inside a block")
        return cls.from_blocks(ground, blocks)


def _same_ground(*algebras: Subalgebra) -> int:
    grounds = {a.ground for a in algebras}
    if len(grounds) > 1:
        raise GroundMismatch(f"subalgebras over different grounds {sorted(grounds)}")
    return grounds.pop() if grounds else 0


def common_ground(family: Sequence[Subalgebra]) -> int:
    return _same_ground(*family)


def generate_subalgebra(m: int, gens: Iterable[ElementLike]) -> Subalgebra:
    """Smallest subalgebra of ``P(m)`` containing every generator.

    Points are identified when they lie in exactly the same generators.
    """
    blocks = [_full(m)] if m else []
    for g in gens:
        if isinstance(g, Element):
            if g.ground != m:
                raise GroundMismatch(f"generator over {g.ground}, expected {m}")
            g = g.bits
        elif int(g) >> m:
            raise GroundMismatch("generator exceeds ground")
        refined = []
        for b in blocks:
            inside, outside = b & g, b & ~g
            if inside:
                refined.append(inside)
            if outside:
                refined.append(outside)
        blocks = refined
    return Subalgebra(m, tuple(blocks))


SMALL_INTERSECT = 4096


def _merge_blocks(left, right) -> tuple[int, ...]:
    # union every left block meeting a right block; bit operations only
    blocks = list(left)
    for b in right:
        hit = 0
        rest = []
        for c in blocks:
            if c & b:
                hit |= c
            else:
                rest.append(c)
        rest.append(hit)
        blocks = rest
    return tuple(blocks)


def intersect(A: Subalgebra, B: Subalgebra) -> Subalgebra:
    """Common members of ``A`` and ``B``: connected components of shared blocks."""
    m = _same_ground(A, B)
    if m == 0:
        return A
    ka, kb = A.n_atoms, B.n_atoms
    if ka * kb <= SMALL_INTERSECT:
        return Subalgebra(m, _merge_blocks(A.blocks, B.blocks))
    graph = coo_matrix(
        (np.ones(m, dtype=np.int8), (A.labels, ka + B.labels)), shape=(ka + kb, ka + kb)
    )
    _, comp = connected_components(graph, directed=False)
    return Subalgebra.from_labels(comp[A.labels])


def intersect_all(family: Sequence[Subalgebra], m: int | None = None) -> Subalgebra:
    """n-ary intersection; the empty intersection is ``P(m)``."""
    if not family:
        if m is None:
            raise ValueError("empty intersection needs the ground size")
        return Subalgebra.discrete(m)
    return reduce(intersect, family)


def join_subalgebras(A: Subalgebra, B: Subalgebra) -> Subalgebra:
    """Subalgebra generated by ``A`` together with ``B``: the common refinement."""
    _same_ground(A, B)
    return Subalgebra(A.ground, tuple(a & b for a in A.blocks for b in B.blocks if a & b))


def join_all(family: Sequence[Subalgebra], m: int | None = None) -> Subalgebra:
    """n-ary join; the empty join is the trivial algebra ``{0, 1}``."""
    if not family:
        if m is None:
            raise ValueError("empty join needs the ground size")
        return Subalgebra.trivial(m)
    return reduce(join_subalgebras, family)


def upper_projection(A: Subalgebra, x: ElementLike) -> Element:
    """Least member of ``A`` above ``x``."""
    bits = A._bits(x)
    out = 0
    for b in A.blocks:
        if b & bits:
            out |= b
    return Element(A.ground, out)


def lower_projection(A: Subalgebra, x: ElementLike) -> Element:
    """Greatest member of ``A`` below ``x``."""
    bits = A._bits(x)
    return ~upper_projection(A, _full(A.ground) & ~bits)


def is_independent(family: Sequence[Subalgebra]) -> bool:
    """Every choice of one atom per subalgebra has a nonempty meet."""
    if not family:
        return True
    m = common_ground(family)
    from . import kernels

    sizes = [A.n_atoms for A in family]
    masks = kernels.to_words([b for A in family for b in A.blocks], m)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    labels = np.zeros((len(family), len(family), max(sizes)), dtype=np.int64)
    return kernels.incompatible_tuple(masks, offsets, labels) is None
