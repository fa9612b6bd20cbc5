import itertools
import random

import numpy as np
import pytest

from boolalg import kernels
from boolalg.commute import _pack, compatibility_labels, find_weak_failure, shared_parts
from boolalg.core import Subalgebra, upper_projection
from boolalg.functors import apply_functor, projection_cube, unlifted_tuple

from helpers import random_family


def brute_incompatible(family, labels):
    for t in itertools.product(*(range(A.n_atoms) for A in family)):
        if any(labels[i, j, t[i]] != labels[j, i, t[j]] for i, j in itertools.combinations(range(len(family)), 2)):
            continue
        meet = (1 << family[0].ground) - 1
        for A, a in zip(family, t):
            meet &= A.blocks[a]
        if not meet:
            return t
    return None


@pytest.mark.parametrize("seed", range(4))
def test_incompatible_tuple_backends(seed):
    rng = random.Random(seed)
    for _ in range(150):
        m = rng.choice([3, 6, 8, 70, 130])
        fam = random_family(rng, m, rng.randint(2, 4))
        _, _, offsets, masks = _pack(fam)
        labels = compatibility_labels(fam)
        expected = brute_incompatible(fam, labels) if m <= 8 else None
        a = kernels.incompatible_tuple(masks, offsets, labels, backend="numba")
        b = kernels.incompatible_tuple(masks, offsets, labels, backend="numpy")
        assert a == b
        if m <= 8:
            assert a == expected


@pytest.mark.parametrize("seed", range(4))
def test_weak_failure_backends(seed):
    rng = random.Random(100 + seed)
    for _ in range(150):
        m = rng.choice([4, 7, 66])
        fam = random_family(rng, m, rng.randint(2, 4))
        _, _, offsets, masks = _pack(fam)
        D = shared_parts(fam)
        ys = kernels.to_words([upper_projection(Di, b).bits for Di, A in zip(D, fam) for b in A.blocks], m)
        a = kernels.weak_failure(masks, ys, offsets, backend="numba")
        b = kernels.weak_failure(masks, ys, offsets, backend="numpy")
        assert a == b == find_weak_failure(fam)


def test_unlifted_backends():
    rng = random.Random(3)
    for _ in range(60):
        k = rng.randint(1, 3)
        sets = [{x for x in range(k) if rng.random() < 0.6} for _ in range(3)]
        cube = apply_functor(rng.choice(["exp", "sp2"]), projection_cube(sets))
        assert unlifted_tuple(cube, backend="numba") == unlifted_tuple(cube, backend="numpy")


def test_to_words_roundtrip():
    masks = [0, 1, (1 << 64) | 5, (1 << 129) - 1]
    words = kernels.to_words(masks, 130)
    assert words.shape == (4, 3)
    back = [sum(int(w) << (64 * i) for i, w in enumerate(row)) for row in words]
    assert back == masks


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.incompatible_tuple(np.zeros((1, 1), np.uint64), np.array([0, 1]), np.zeros((1, 1, 1), np.int64), backend="gpu")


def test_empty_family_kernels():
    offsets = np.array([0], dtype=np.int64)
    assert kernels.incompatible_tuple(np.zeros((0, 1), np.uint64), offsets, np.zeros((0, 0, 1), np.int64)) is None
