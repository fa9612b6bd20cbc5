"""Random generators and brute-force oracles shared by the test modules."""
from __future__ import annotations

import itertools
import random

from hypothesis import strategies as st

from boolalg.amalgam import OverlapSystem, PairData
from boolalg.core import Subalgebra, generate_subalgebra


def random_subalgebra(rng: random.Random, m: int) -> Subalgebra:
    k = rng.randint(1, m)
    return Subalgebra.from_labels([rng.randrange(k) for _ in range(m)])


def random_generated_family(rng: random.Random, m: int, n: int, n_gens: int = 4) -> list[Subalgebra]:
    """Subalgebras generated by random subsets of a shared pool of random elements.

    Families built this way commute far more often than independent random
    partitions, so implication tests are not vacuous.
    """
    pool = [rng.randrange(1 << m) for _ in range(n_gens)]
    return [generate_subalgebra(m, [g for g in pool if rng.random() < 0.5]) for _ in range(n)]


def random_family(rng: random.Random, m: int, n: int) -> list[Subalgebra]:
    if rng.random() < 0.5:
        return random_generated_family(rng, m, n)
    return [random_subalgebra(rng, m) for _ in range(n)]


def random_surjection(rng: random.Random, size: int, k: int) -> tuple[int, ...]:
    values = list(range(k)) + [rng.randrange(k) for _ in range(size - k)]
    rng.shuffle(values)
    return tuple(values)


def random_system(rng: random.Random, n: int, max_atoms: int = 4) -> OverlapSystem:
    counts = [rng.randint(1, max_atoms) for _ in range(n)]
    pairs = {}
    for i, j in itertools.combinations(range(n), 2):
        k = rng.randint(1, min(counts[i], counts[j]))
        pairs[(i, j)] = PairData(k, random_surjection(rng, counts[i], k), random_surjection(rng, counts[j], k))
    return OverlapSystem(tuple(counts), pairs)


def members(A: Subalgebra) -> list[int]:
    return list(A.members())


def brute_intersection_members(A: Subalgebra, B: Subalgebra) -> set[int]:
    return set(members(A)) & set(members(B))


def brute_commutes(family) -> bool:
    """Definitional check: every pairwise-compatible atom tuple has a common point.

    Compatibility is tested with member sets of the intersections, not with
    the partition machinery.
    """
    family = list(family)
    if len(family) <= 1:
        return True
    m = family[0].ground
    inter = {}
    for i, j in itertools.combinations(range(len(family)), 2):
        inter[(i, j)] = brute_intersection_members(family[i], family[j])
    for t in itertools.product(*(A.blocks for A in family)):
        ok = True
        for (i, j), C in inter.items():
            # same ultrafilter on the intersection: every common member contains both or neither
            for c in C:
                if bool(t[i] & c) != bool(t[j] & c):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        meet = (1 << m) - 1
        for b in t:
            meet &= b
        if not meet:
            return False
    return True


def brute_interpolation(A: Subalgebra, B: Subalgebra) -> bool:
    """For all members x of A and y of B with x <= y there is a common member between them."""
    C = brute_intersection_members(A, B)
    full = (1 << A.ground) - 1
    for x in members(A):
        z = full
        for c in C:
            if x & ~c == 0:
                z &= c
        for y in members(B):
            if x & ~y == 0 and z & ~y:
                return False
    return True


def subalgebras(m: int):
    return st.lists(st.integers(0, m - 1), min_size=m, max_size=m).map(Subalgebra.from_labels)


@st.composite
def families(draw, max_m: int = 6, max_n: int = 4, min_n: int = 1):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    if draw(st.booleans()):
        return random_generated_family(rng, m, n)
    return [draw(subalgebras(m)) for _ in range(n)]


def int_table(f, order) -> int:
    """Truth table of a formula as a Python int, computed bit-parallel without numpy."""
    from boolalg.logic import And, Const, Iff, Implies, Not, Or, Var

    k = len(order)
    full = (1 << (1 << k)) - 1
    cols = {name: sum(1 << p for p in range(1 << k) if p >> v & 1) for v, name in enumerate(order)}

    def ev(g):
        if isinstance(g, Var):
            return cols[g.name]
        if isinstance(g, Const):
            return full if g.value else 0
        if isinstance(g, Not):
            return full & ~ev(g.arg)
        a, b = ev(g.left), ev(g.right)
        if isinstance(g, And):
            return a & b
        if isinstance(g, Or):
            return a | b
        if isinstance(g, Implies):
            return (full & ~a) | b
        return full & ~(a ^ b)

    return ev(f)
