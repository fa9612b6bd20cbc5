"""Commutativity predicates for tuples of subalgebras of one powerset.

All tuple tests run over atoms only: a tuple of members fails a predicate
iff some tuple of atoms below them does.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .core import (
    Element,
    ElementLike,
    GroundMismatch,
    InternalCheckError,
    Subalgebra,
    common_ground,
    intersect,
    join_all,
    upper_projection,
)

CROSS_CHECK_LIMIT = 10**6


@dataclass(frozen=True)
class WitnessTuple:
    """Weak incompatibility witness: ``x_i <= y_i`` in the shared part, meet zero."""

    elements: tuple[Element, ...]

    def to_json(self) -> list:
        return [y.points() for y in self.elements]


@dataclass(frozen=True)
class PredicateResult:
    result: bool
    counterexample: Optional[tuple[int, ...]] = None

    def __bool__(self) -> bool:
        return self.result

    def to_json(self) -> dict:
        ce = list(self.counterexample) if self.counterexample is not None else None
        return {"result": self.result, "counterexample": ce}


def _pack(family: Sequence[Subalgebra]):
    m = common_ground(family)
    sizes = [A.n_atoms for A in family]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    masks = kernels.to_words([b for A in family for b in A.blocks], m)
    return m, sizes, offsets, masks


def pairwise_intersections(family: Sequence[Subalgebra]) -> dict[tuple[int, int], Subalgebra]:
    return {
        (i, j): intersect(family[i], family[j])
        for i, j in itertools.combinations(range(len(family)), 2)
    }


def compatibility_labels(family: Sequence[Subalgebra], inters=None) -> np.ndarray:
    """``labels[i, j, a]``: block of ``A_i ∩ A_j`` containing atom ``a`` of ``A_i``."""
    n = len(family)
    inters = inters if inters is not None else pairwise_intersections(family)
    pair_labels = {}
    for (i, j), C in inters.items():
        for src, dst in ((i, j), (j, i)):
            A = family[src]
            pair_labels[(src, dst)] = [C.labels[(b & -b).bit_length() - 1] for b in A.blocks]
    return kernels.label_table(n, [A.n_atoms for A in family], pair_labels)


def find_incompatible_tuple(family: Sequence[Subalgebra]) -> Optional[tuple[int, ...]]:
    """Least pairwise-compatible atom tuple whose meet is empty.

    Atoms ``b_i``, ``b_j`` are compatible when they lie in the same block of
    ``A_i ∩ A_j``; the family commutes iff no such tuple exists.
    """
    if len(family) <= 1:
        common_ground(family)
        return None
    m, sizes, offsets, masks = _pack(family)
    if m == 0:
        return None
    return kernels.incompatible_tuple(masks, offsets, compatibility_labels(family))


def commutes_via_pushout(family: Sequence[Subalgebra]) -> bool:
    """Injectivity of the mediating map from the pushout into the ambient powerset."""
    from .amalgam import compatible_tuples, embed_as_system

    if len(family) <= 1:
        return True
    full = (1 << common_ground(family)) - 1
    for t in compatible_tuples(embed_as_system(family)):
        meet = full
        for A, a in zip(family, t):
            meet &= A.blocks[a]
        if not meet:
            return False
    return True


def commutes_result(family: Sequence[Subalgebra], *, cross_check: bool = True) -> PredicateResult:
    family = list(family)
    witness = find_incompatible_tuple(family)
    result = witness is None
    if cross_check and len(family) > 1 and math.prod(A.n_atoms for A in family) <= CROSS_CHECK_LIMIT:
        if commutes_via_pushout(family) != result:
            raise InternalCheckError("atom-tuple and pushout commutativity tests disagree")
    return PredicateResult(result, witness)


def commutes(family: Sequence[Subalgebra], *, cross_check: bool = True) -> bool:
    return commutes_result(family, cross_check=cross_check).result


def shared_parts(family: Sequence[Subalgebra], inters=None) -> list[Subalgebra]:
    """``D_i``: the join of ``A_i ∩ A_j`` over ``j != i``."""
    n = len(family)
    m = common_ground(family)
    inters = inters if inters is not None else pairwise_intersections(family)
    out = []
    for i in range(n):
        traces = [inters[(min(i, j), max(i, j))] for j in range(n) if j != i]
        out.append(join_all(traces, m))
    return out


def find_weak_failure(family: Sequence[Subalgebra]) -> Optional[tuple[int, ...]]:
    """Least atom tuple with empty meet whose minimal witness candidate has a nonempty meet."""
    family = list(family)
    if len(family) <= 1:
        common_ground(family)
        return None
    m, sizes, offsets, masks = _pack(family)
    if m == 0:
        return None
    D = shared_parts(family)
    ys = [upper_projection(Di, b).bits for Di, A in zip(D, family) for b in A.blocks]
    return kernels.weak_failure(masks, kernels.to_words(ys, m), offsets)


def weakly_commutes_result(family: Sequence[Subalgebra]) -> PredicateResult:
    witness = find_weak_failure(family)
    return PredicateResult(witness is None, witness)


def weakly_commutes(family: Sequence[Subalgebra]) -> bool:
    return find_weak_failure(family) is None


def weak_witness(family: Sequence[Subalgebra], xs: Sequence[ElementLike]) -> Optional[WitnessTuple]:
    """Minimal weak incompatibility witness for ``xs``, or ``None`` if none exists.

    Any witness dominates the tuple of upper projections into the shared
    parts, so checking that one tuple decides existence.
    """
    family = list(family)
    m = common_ground(family)
    if len(xs) != len(family):
        raise ValueError("need one element per subalgebra")
    elems = []
    for A, x in zip(family, xs):
        if isinstance(x, Element):
            if x.ground != m:
                raise GroundMismatch("element ground differs from the family")
        else:
            x = Element(m, int(x))
        if not A.contains(x):
            raise ValueError(f"{x} is not a member of its subalgebra")
        elems.append(x)
    meet = (1 << m) - 1
    for x in elems:
        meet &= x.bits
    if meet:
        raise ValueError("the tuple has a nonzero meet")
    D = shared_parts(family)
    ys = tuple(upper_projection(Di, x) for Di, x in zip(D, elems))
    total = (1 << m) - 1
    for y in ys:
        total &= y.bits
    return WitnessTuple(ys) if total == 0 else None


def commutes_over(A: Subalgebra, B: Subalgebra, C: Subalgebra) -> bool:
    """Every disjoint atom pair of ``A`` and ``B`` is separated by a member of ``C``."""
    common_ground([A, B, C])
    for x in A.blocks:
        z = upper_projection(C, x).bits
        for y in B.blocks:
            if not x & y and z & y:
                return False
    return True


def _dedupe(family: Iterable[Subalgebra]) -> list[Subalgebra]:
    out: list[Subalgebra] = []
    for A in family:
        if A not in out:
            out.append(A)
    return out


def _well(family, max_arity, predicate) -> Optional[tuple[int, ...]]:
    family = _dedupe(family)
    common_ground(family)
    top = len(family) if max_arity is None else min(max_arity, len(family))
    for r in range(2, top + 1):
        for sub in itertools.combinations(range(len(family)), r):
            if not predicate([family[i] for i in sub]):
                return sub
    return None


def failing_subfamily(family_set, max_arity: Optional[int] = None, *, weak: bool = False):
    """Indices (into the deduplicated family) of the first failing subset, or ``None``."""
    pred = weakly_commutes if weak else commutes
    return _well(family_set, max_arity, pred)


def commutes_well(family_set: Iterable[Subalgebra], max_arity: Optional[int] = None) -> bool:
    """Every subset of size at most ``max_arity`` commutes."""
    return _well(family_set, max_arity, commutes) is None


def weakly_commutes_well(family_set: Iterable[Subalgebra], max_arity: Optional[int] = None) -> bool:
    return _well(family_set, max_arity, weakly_commutes) is None


def stepping_up_hypotheses(family: Sequence[Subalgebra]) -> tuple[bool, bool, bool]:
    """The three hypotheses for extending a commuting family by its last member.

    (1) the first ``n`` members commute; (2) ``A_n`` meets their join exactly
    in the join of its pairwise traces; (3) that join commutes with ``A_n``.
    """
    family = list(family)
    m = common_ground(family)
    head, last = family[:-1], family[-1]
    C = join_all(head, m)
    low = commutes(head)
    cohere = intersect(last, C) == join_all([intersect(last, A) for A in head], m)
    pair = commutes([C, last])
    return low, cohere, pair
