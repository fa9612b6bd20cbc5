"""Tuple-search kernels shared by the commutativity and cube predicates.

Every search walks tuples ``(t_0, ..., t_{n-1})`` in lexicographic order,
where ``t_k`` ranges over ``0 .. sizes[k]-1``, and returns the first tuple
satisfying a leaf condition.  Atom masks are packed into ``uint64`` words
(shape ``(rows, words)``) so grounds larger than 64 points work unchanged.

Pairwise constraints are encoded by a padded label table ``labels`` of shape
``(n, n, max_size)``: entries ``i`` and ``j`` of a tuple are compatible iff
``labels[i, j, t_i] == labels[j, i, t_j]``.

Each kernel has two implementations with identical results:

* ``*_loop``: an explicit backtracking loop, compiled by numba when enabled;
* ``*_numpy``: a vectorised frontier expansion, one first coordinate at a time.

The public wrappers pick one according to :data:`BACKEND`.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ._accel import NUMBA_ENABLED, njit

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
_WORD = (1 << 64) - 1


def n_words(nbits: int) -> int:
    return max(1, (nbits + 63) // 64)


def to_words(masks: Sequence[int], nbits: int) -> np.ndarray:
    """Pack Python-int bitsets into a ``(len(masks), words)`` uint64 array."""
    width = n_words(nbits)
    out = np.zeros((len(masks), width), dtype=np.uint64)
    for r, mask in enumerate(masks):
        w = 0
        while mask:
            out[r, w] = mask & _WORD
            mask >>= 64
            w += 1
    return out


def label_table(n: int, sizes: Sequence[int], pair_labels) -> np.ndarray:
    """Build the padded ``(n, n, max_size)`` table from ``pair_labels[(i, j)]``.

    Missing pairs (and the diagonal) get label 0 on both sides, which imposes
    no constraint.
    """
    width = max(sizes) if len(sizes) else 1
    table = np.zeros((n, n, max(width, 1)), dtype=np.int64)
    for (i, j), lab in pair_labels.items():
        table[i, j, : len(lab)] = lab
    return table


# ---------------------------------------------------------------------------
# pairwise-compatible tuple whose meet is zero
# ---------------------------------------------------------------------------


@njit(cache=True)
def incompatible_tuple_loop(masks, offsets, labels):
    n = offsets.shape[0] - 1
    width = masks.shape[1]
    idx = np.full(n, -1, np.int64)
    if n == 0:
        return idx
    meet = np.empty((n + 1, width), np.uint64)
    for w in range(width):
        meet[0, w] = _ALL
    k = 0
    while k >= 0:
        idx[k] += 1
        if idx[k] >= offsets[k + 1] - offsets[k]:
            idx[k] = -1
            k -= 1
            continue
        a = idx[k]
        ok = True
        for j in range(k):
            if labels[j, k, idx[j]] != labels[k, j, a]:
                ok = False
                break
        if not ok:
            continue
        row = offsets[k] + a
        for w in range(width):
            meet[k + 1, w] = meet[k, w] & masks[row, w]
        if k == n - 1:
            zero = True
            for w in range(width):
                if meet[n, w] != 0:
                    zero = False
                    break
            if zero:
                return idx.copy()
        else:
            k += 1
            idx[k] = -1
    return np.full(n, -1, np.int64)


def incompatible_tuple_numpy(masks, offsets, labels):
    n = offsets.shape[0] - 1
    sizes = np.diff(offsets)
    for first in range(int(sizes[0]) if n else 0):
        idx = np.array([[first]], dtype=np.int64)
        meet = masks[offsets[0] + first][None, :]
        for k in range(1, n):
            idx, cand = _expand(idx, int(sizes[k]))
            meet = np.repeat(meet, int(sizes[k]), axis=0)
            ok = _compatible(idx, cand, k, labels)
            idx = np.column_stack([idx[ok], cand[ok]])
            meet = meet[ok] & masks[offsets[k] + cand[ok]]
            if not len(idx):
                break
        if len(idx) and idx.shape[1] == n:
            hits = np.flatnonzero(~meet.any(axis=1))
            if hits.size:
                return idx[hits[0]].copy()
    return np.full(n, -1, np.int64)


# ---------------------------------------------------------------------------
# tuple with zero x-meet but nonzero y-meet (weak commutativity failure)
# ---------------------------------------------------------------------------


@njit(cache=True)
def weak_failure_loop(xmasks, ymasks, offsets):
    n = offsets.shape[0] - 1
    width = xmasks.shape[1]
    idx = np.full(n, -1, np.int64)
    if n == 0:
        return idx
    xm = np.empty((n + 1, width), np.uint64)
    ym = np.empty((n + 1, width), np.uint64)
    for w in range(width):
        xm[0, w] = _ALL
        ym[0, w] = _ALL
    k = 0
    while k >= 0:
        idx[k] += 1
        if idx[k] >= offsets[k + 1] - offsets[k]:
            idx[k] = -1
            k -= 1
            continue
        row = offsets[k] + idx[k]
        ynz = False
        for w in range(width):
            ym[k + 1, w] = ym[k, w] & ymasks[row, w]
            xm[k + 1, w] = xm[k, w] & xmasks[row, w]
            if ym[k + 1, w] != 0:
                ynz = True
        if not ynz:
            continue
        if k == n - 1:
            xz = True
            for w in range(width):
                if xm[n, w] != 0:
                    xz = False
                    break
            if xz:
                return idx.copy()
        else:
            k += 1
            idx[k] = -1
    return np.full(n, -1, np.int64)


def weak_failure_numpy(xmasks, ymasks, offsets):
    n = offsets.shape[0] - 1
    sizes = np.diff(offsets)
    for first in range(int(sizes[0]) if n else 0):
        idx = np.array([[first]], dtype=np.int64)
        xm = xmasks[offsets[0] + first][None, :]
        ym = ymasks[offsets[0] + first][None, :]
        keep = ym.any(axis=1)
        idx, xm, ym = idx[keep], xm[keep], ym[keep]
        for k in range(1, n):
            if not len(idx):
                break
            idx, cand = _expand(idx, int(sizes[k]))
            rows = offsets[k] + cand
            ym = np.repeat(ym, int(sizes[k]), axis=0) & ymasks[rows]
            xm = np.repeat(xm, int(sizes[k]), axis=0) & xmasks[rows]
            keep = ym.any(axis=1)
            idx = np.column_stack([idx[keep], cand[keep]])
            xm, ym = xm[keep], ym[keep]
        if len(idx):
            hits = np.flatnonzero(~xm.any(axis=1))
            if hits.size:
                return idx[hits[0]].copy()
    return np.full(n, -1, np.int64)


# ---------------------------------------------------------------------------
# pairwise-compatible tuple missing from a sorted set of lifted codes
# ---------------------------------------------------------------------------


@njit(cache=True)
def unlifted_tuple_loop(sizes, labels, radix, lifted):
    n = sizes.shape[0]
    idx = np.full(n, -1, np.int64)
    if n == 0:
        return idx
    k = 0
    while k >= 0:
        idx[k] += 1
        if idx[k] >= sizes[k]:
            idx[k] = -1
            k -= 1
            continue
        a = idx[k]
        ok = True
        for j in range(k):
            if labels[j, k, idx[j]] != labels[k, j, a]:
                ok = False
                break
        if not ok:
            continue
        if k == n - 1:
            code = 0
            for j in range(n):
                code += idx[j] * radix[j]
            pos = np.searchsorted(lifted, code)
            if pos >= lifted.shape[0] or lifted[pos] != code:
                return idx.copy()
        else:
            k += 1
            idx[k] = -1
    return np.full(n, -1, np.int64)


def unlifted_tuple_numpy(sizes, labels, radix, lifted):
    n = sizes.shape[0]
    for first in range(int(sizes[0]) if n else 0):
        idx = np.array([[first]], dtype=np.int64)
        for k in range(1, n):
            idx, cand = _expand(idx, int(sizes[k]))
            ok = _compatible(idx, cand, k, labels)
            idx = np.column_stack([idx[ok], cand[ok]])
            if not len(idx):
                break
        if len(idx):
            codes = idx @ radix
            pos = np.searchsorted(lifted, codes)
            pos_c = np.minimum(pos, max(len(lifted) - 1, 0))
            found = (pos < len(lifted)) & (lifted[pos_c] == codes) if len(lifted) else np.zeros(len(codes), bool)
            miss = np.flatnonzero(~found)
            if miss.size:
                return idx[miss[0]].copy()
    return np.full(n, -1, np.int64)


def _expand(idx: np.ndarray, size: int):
    """Cartesian extension of a frontier by one coordinate, order preserved."""
    cand = np.tile(np.arange(size, dtype=np.int64), len(idx))
    return np.repeat(idx, size, axis=0), cand


def _compatible(idx, cand, k, labels):
    ok = np.ones(len(cand), dtype=bool)
    for j in range(k):
        ok &= labels[j, k, idx[:, j]] == labels[k, j, cand]
    return ok


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _pick(backend: Optional[str], loop, vec):
    backend = backend or BACKEND
    if backend == "numba":
        return loop
    if backend == "numpy":
        return vec
    raise ValueError(f"unknown backend {backend!r}")


def _result(idx: np.ndarray):
    if idx.shape[0] == 0 or idx[0] < 0:
        return None
    return tuple(int(v) for v in idx)


def incompatible_tuple(masks, offsets, labels, backend=None):
    """First pairwise-compatible tuple with zero meet, or ``None``."""
    fn = _pick(backend, incompatible_tuple_loop, incompatible_tuple_numpy)
    return _result(fn(masks, offsets, labels))


def weak_failure(xmasks, ymasks, offsets, backend=None):
    """First tuple whose x-meet is zero while its y-meet is not, or ``None``."""
    fn = _pick(backend, weak_failure_loop, weak_failure_numpy)
    return _result(fn(xmasks, ymasks, offsets))


def unlifted_tuple(sizes, labels, radix, lifted, backend=None):
    """First pairwise-compatible tuple whose mixed-radix code is not in ``lifted``."""
    fn = _pick(backend, unlifted_tuple_loop, unlifted_tuple_numpy)
    return _result(fn(sizes, labels, radix, lifted))
