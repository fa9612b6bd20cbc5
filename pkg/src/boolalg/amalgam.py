"""Overlapping finite Boolean algebras: pushouts and amalgamation.

An :class:`OverlapSystem` describes ``n`` abstract finite algebras by their
atom counts and, for each pair ``i < j``, the atom maps of ``A_i`` and
``A_j`` onto the atoms of ``A_i ∩ A_j``.  The pushout is materialised as the
powerset of the pairwise-compatible atom tuples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (
    Element,
    InternalCheckError,
    Subalgebra,
    common_ground,
    intersect,
    join_all,
    points_of,
)

ORACLE_LIMIT = 4096


class InvalidSystem(ValueError):
    pass


class HypothesisFailed(Exception):
    """An assembly stage could not be certified."""

    KINDS = ("trace-noncommuting", "reflection-condition", "incoherent-identification", "embedding-failed")

    def __init__(self, stage: int, which: str, detail: str = ""):
        if which not in self.KINDS:
            raise ValueError(which)
        self.stage = stage
        self.which = which
        self.detail = detail
        super().__init__(f"hypothesis-failed(stage={stage}, {which}){': ' + detail if detail else ''}")


@dataclass(frozen=True)
class PairData:
    inter_atoms: int
    map_i: tuple[int, ...]
    map_j: tuple[int, ...]


@dataclass(frozen=True, eq=True)
class OverlapSystem:
    atom_counts: tuple[int, ...]
    pairs: Mapping[tuple[int, int], PairData] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "atom_counts", tuple(int(k) for k in self.atom_counts))
        object.__setattr__(self, "pairs", dict(self.pairs))
        n = self.n
        for k in self.atom_counts:
            if k < 1:
                raise InvalidSystem("every algebra needs at least one atom")
        expected = set(itertools.combinations(range(n), 2))
        if set(self.pairs) != expected:
            missing = sorted(expected - set(self.pairs))
            extra = sorted(set(self.pairs) - expected)
            raise InvalidSystem(f"pair data mismatch: missing {missing}, unexpected {extra}")
        for (i, j), pd in self.pairs.items():
            for side, mp, count in (("mapI", pd.map_i, self.atom_counts[i]), ("mapJ", pd.map_j, self.atom_counts[j])):
                if len(mp) != count:
                    raise InvalidSystem(f"pair ({i},{j}) {side} has length {len(mp)}, expected {count}")
                if any(not 0 <= v < pd.inter_atoms for v in mp):
                    raise InvalidSystem(f"pair ({i},{j}) {side} has values outside [0,{pd.inter_atoms})")
                if set(mp) != set(range(pd.inter_atoms)):
                    raise InvalidSystem(f"pair ({i},{j}) {side} is not surjective")

    __hash__ = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return len(self.atom_counts)

    def maps(self, i: int, j: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Atom maps of ``A_i`` and of ``A_j`` onto the atoms of ``A_i ∩ A_j``."""
        if i < j:
            pd = self.pairs[(i, j)]
            return pd.map_i, pd.map_j
        pd = self.pairs[(j, i)]
        return pd.map_j, pd.map_i

    def inter_atoms(self, i: int, j: int) -> int:
        return self.pairs[(min(i, j), max(i, j))].inter_atoms

    def subsystem(self, indices: Sequence[int]) -> "OverlapSystem":
        idx = list(indices)
        pairs = {}
        for a, b in itertools.combinations(range(len(idx)), 2):
            mi, mj = self.maps(idx[a], idx[b])
            pairs[(a, b)] = PairData(self.inter_atoms(idx[a], idx[b]), mi, mj)
        return OverlapSystem(tuple(self.atom_counts[i] for i in idx), pairs)

    def trace(self, i: int, m: int) -> Subalgebra:
        """``A_i ∩ A_m`` as a subalgebra of ``P(atoms(A_i))``."""
        return Subalgebra.from_labels(self.maps(i, m)[0])

    def to_json(self) -> dict:
        return {
            "atomCounts": list(self.atom_counts),
            "pairs": [
                {"i": i, "j": j, "interAtoms": pd.inter_atoms, "mapI": list(pd.map_i), "mapJ": list(pd.map_j)}
                for (i, j), pd in sorted(self.pairs.items())
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "OverlapSystem":
        try:
            counts = [int(k) for k in data["atomCounts"]]
            pairs = {}
            for rec in data.get("pairs", []):
                i, j = int(rec["i"]), int(rec["j"])
                mi, mj = tuple(int(v) for v in rec["mapI"]), tuple(int(v) for v in rec["mapJ"])
                if i > j:
                    i, j, mi, mj = j, i, mj, mi
                if (i, j) in pairs:
                    raise InvalidSystem(f"duplicate pair ({i},{j})")
                if not (0 <= i < j < len(counts)):
                    raise InvalidSystem(f"pair ({i},{j}) out of range")
                pairs[(i, j)] = PairData(int(rec["interAtoms"]), mi, mj)
        except (KeyError, TypeError) as exc:
            raise InvalidSystem(f"malformed system JSON: {exc}") from exc
        return cls(tuple(counts), pairs)


def embed_as_system(family: Sequence[Subalgebra]) -> OverlapSystem:
    """Abstract overlap data of subalgebras of one powerset."""
    family = list(family)
    common_ground(family)
    pairs = {}
    for i, j in itertools.combinations(range(len(family)), 2):
        C = intersect(family[i], family[j])
        lab = C.labels
        mi = tuple(int(lab[(b & -b).bit_length() - 1]) for b in family[i].blocks)
        mj = tuple(int(lab[(b & -b).bit_length() - 1]) for b in family[j].blocks)
        pairs[(i, j)] = PairData(C.n_atoms, mi, mj)
    return OverlapSystem(tuple(A.n_atoms for A in family), pairs)


def compatible_tuples(system: OverlapSystem) -> list[tuple[int, ...]]:
    """All atom tuples agreeing on every pairwise intersection, in lexicographic order."""
    n = system.n
    if n == 0:
        return [()]
    # buckets[(j, k)][v]: atoms of A_k whose image in A_j ∩ A_k is v
    buckets = {}
    for j, k in itertools.combinations(range(n), 2):
        _, mk = system.maps(j, k)
        table: dict[int, set[int]] = {}
        for a, v in enumerate(mk):
            table.setdefault(v, set()).add(a)
        buckets[(j, k)] = table
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def extend(k: int) -> None:
        if k == n:
            out.append(tuple(prefix))
            return
        cand = None
        for j in range(k):
            v = system.maps(j, k)[0][prefix[j]]
            allowed = buckets[(j, k)].get(v, set())
            cand = set(allowed) if cand is None else cand & allowed
            if not cand:
                return
        for a in sorted(cand) if cand is not None else range(system.atom_counts[k]):
            prefix.append(a)
            extend(k + 1)
            prefix.pop()

    extend(0)
    return out


@dataclass(frozen=True)
class PushoutResult:
    """Pushout as ``P(tuples)``; ``coprojections[i][a]`` is a bitset over tuple indices."""

    tuples: tuple[tuple[int, ...], ...]
    coprojections: tuple[tuple[int, ...], ...]
    injective: tuple[bool, ...]
    offending: tuple[Optional[int], ...]

    @property
    def ground(self) -> int:
        return len(self.tuples)

    @property
    def degenerate(self) -> bool:
        return not self.tuples

    def coprojected(self, i: int, trace: Optional[Subalgebra] = None) -> Subalgebra:
        """Image in the pushout of ``A_i`` (or of a subalgebra of it, given on its atoms)."""
        if trace is None:
            return Subalgebra.from_labels([t[i] for t in self.tuples])
        return Subalgebra.from_labels([int(trace.labels[t[i]]) for t in self.tuples])

    def image(self, i: int, atoms_mask: int) -> Element:
        bits = 0
        for a in points_of(atoms_mask):
            bits |= self.coprojections[i][a]
        return Element(self.ground, bits)

    def to_json(self, coprojections: bool = False) -> dict:
        data = {
            "atoms": len(self.tuples),
            "tuples": [list(t) for t in self.tuples],
            "injective": [
                {"algebra": i, "injective": inj, "collapsedAtom": off}
                for i, (inj, off) in enumerate(zip(self.injective, self.offending))
            ],
        }
        if coprojections:
            data["coprojections"] = [[points_of(mask) for mask in cp] for cp in self.coprojections]
        return data


def _coprojections(system: OverlapSystem, tuples: Sequence[tuple[int, ...]]):
    cops = []
    for i, count in enumerate(system.atom_counts):
        masks = [0] * count
        for r, t in enumerate(tuples):
            masks[t[i]] |= 1 << r
        cops.append(tuple(masks))
    return tuple(cops)


def pushout(system: OverlapSystem, *, verify: bool = True) -> PushoutResult:
    tuples = tuple(compatible_tuples(system))
    cops = _coprojections(system, tuples)
    offending = tuple(next((a for a, mask in enumerate(cp) if not mask), None) for cp in cops)
    result = PushoutResult(tuples, cops, tuple(o is None for o in offending), offending)
    if verify and math.prod(system.atom_counts) <= ORACLE_LIMIT:
        verify_pushout_duality(system, result)
    return result


@dataclass(frozen=True)
class IdealQuotient:
    """Free product ``P(all tuples)`` modulo the principal ideal below ``kernel``."""

    all_tuples: tuple[tuple[int, ...], ...]
    kernel: int
    cofactors: tuple[tuple[int, ...], ...]

    def surviving(self) -> list[int]:
        full = (1 << len(self.all_tuples)) - 1
        return points_of(full & ~self.kernel)


def pushout_by_ideal(system: OverlapSystem) -> IdealQuotient:
    """Term-quotient construction of the pushout, for small systems.

    The free product of the ``A_i`` is the powerset of all atom tuples.  The
    ideal is generated by ``cofact_i(x) ∧ cofact_j(-x)`` for every ``x`` in
    every pairwise intersection; in a finite powerset it is principal.
    """
    total = math.prod(system.atom_counts)
    if total > ORACLE_LIMIT:
        raise ValueError(f"oracle limited to {ORACLE_LIMIT} tuples, system has {total}")
    tuples = tuple(itertools.product(*(range(k) for k in system.atom_counts)))
    cofactors = []
    for i, count in enumerate(system.atom_counts):
        masks = [0] * count
        for r, t in enumerate(tuples):
            masks[t[i]] |= 1 << r
        cofactors.append(tuple(masks))

    def cofact(i: int, atoms: Sequence[int]) -> int:
        out = 0
        for a in atoms:
            out |= cofactors[i][a]
        return out

    kernel = 0
    for (i, j), pd in system.pairs.items():
        k = pd.inter_atoms
        if k <= 10:
            xs = range(1, (1 << k) - 1)
        else:
            xs = [1 << c for c in range(k)]
        everything = (1 << k) - 1
        for x in xs:
            above_i = [a for a, v in enumerate(pd.map_i) if x >> v & 1]
            below_j = [a for a, v in enumerate(pd.map_j) if (everything & ~x) >> v & 1]
            above_j = [a for a, v in enumerate(pd.map_j) if x >> v & 1]
            below_i = [a for a, v in enumerate(pd.map_i) if (everything & ~x) >> v & 1]
            kernel |= cofact(i, above_i) & cofact(j, below_j)
            kernel |= cofact(j, above_j) & cofact(i, below_i)
    return IdealQuotient(tuples, kernel, tuple(cofactors))


def verify_pushout_duality(system: OverlapSystem, result: Optional[PushoutResult] = None) -> bool:
    """Check the ideal quotient against the compatible-tuple pushout; raise on mismatch."""
    result = result if result is not None else pushout(system, verify=False)
    quotient = pushout_by_ideal(system)
    keep = quotient.surviving()
    kept_tuples = tuple(quotient.all_tuples[r] for r in keep)
    if kept_tuples != result.tuples:
        raise InternalCheckError("ideal quotient and compatible tuples give different atoms")
    position = {r: pos for pos, r in enumerate(keep)}
    for i, cofs in enumerate(quotient.cofactors):
        for a, mask in enumerate(cofs):
            image = 0
            for r in points_of(mask & ~quotient.kernel):
                image |= 1 << position[r]
            if image != result.coprojections[i][a]:
                raise InternalCheckError(f"coprojection {i} disagrees at atom {a}")
    return True


def missing_atoms(system: OverlapSystem) -> list[tuple[int, int]]:
    """Atoms ``(k, a)`` that occur in no compatible tuple, hence collapse to 0."""
    seen = [set() for _ in range(system.n)]
    for t in compatible_tuples(system):
        for k, a in enumerate(t):
            seen[k].add(a)
    return [(k, a) for k, count in enumerate(system.atom_counts) for a in range(count) if a not in seen[k]]


def has_common_extension(system: OverlapSystem) -> bool:
    return not missing_atoms(system)


@dataclass(frozen=True)
class ReflectionReport:
    result: bool
    condition: Optional[int] = None
    index: Optional[int] = None
    certificate: Optional[object] = None

    def __bool__(self) -> bool:
        return self.result

    def to_json(self) -> dict:
        cert = self.certificate
        if isinstance(cert, Element):
            cert = cert.points()
        elif isinstance(cert, tuple):
            cert = list(cert)
        return {"result": self.result, "condition": self.condition, "index": self.index, "certificate": cert}


def commutatively_reflects(
    system: OverlapSystem, traces: Sequence[Subalgebra], result: Optional[PushoutResult] = None
) -> ReflectionReport:
    """Check the three reflection conditions for traces ``M ∩ A_i`` inside the pushout.

    ``traces[i]`` is a subalgebra of ``A_i`` written on the atoms of ``A_i``
    (a partition of ``range(atom_counts[i])``).
    """
    from .commute import find_incompatible_tuple

    if len(traces) != system.n:
        raise ValueError("need one trace per algebra")
    for i, T in enumerate(traces):
        if not isinstance(T, Subalgebra) or T.ground != system.atom_counts[i]:
            raise InvalidSystem(f"trace {i} is not a subalgebra of A_{i}")
    result = result if result is not None else pushout(system)
    images = [result.coprojected(i, T) for i, T in enumerate(traces)]
    witness = find_incompatible_tuple(images)
    if witness is not None:
        return ReflectionReport(False, 2, None, witness)
    joined = join_all(images, result.ground)
    for i in range(system.n):
        full_image = result.coprojected(i)
        meet = intersect(full_image, joined)
        for block in meet.blocks:
            if not images[i].contains(block):
                return ReflectionReport(False, 3, i, Element(result.ground, block))
    return ReflectionReport(True)


@dataclass
class StageRecord:
    stage: int
    checks: dict[str, bool]

    def to_json(self) -> dict:
        return {"stage": self.stage, "checks": dict(self.checks)}


@dataclass
class AssemblyChain:
    """Successive amalgams ``B_1 ≤ B_2 ≤ ... ≤ B_n``.

    ``stages[m-1]`` lists the atoms of ``B_m`` as tuples of atom indices of
    ``A_0 .. A_{m-1}``; the embedding of ``A_i`` sends an atom to the set of
    tuples carrying it in coordinate ``i``.  ``B_{m+1}`` extends ``B_m`` by
    forgetting the last coordinate.
    """

    system: OverlapSystem
    stages: list[tuple[tuple[int, ...], ...]]
    log: list[StageRecord]

    @property
    def final(self) -> tuple[tuple[int, ...], ...]:
        return self.stages[-1]

    def embedding(self, i: int, stage: Optional[int] = None) -> list[int]:
        points = self.stages[-1 if stage is None else stage - 1]
        masks = [0] * self.system.atom_counts[i]
        for r, t in enumerate(points):
            masks[t[i]] |= 1 << r
        return masks

    def verify(self) -> bool:
        """Re-derive every stage claim from the point sets alone."""
        sysm = self.system
        for m, points in enumerate(self.stages, start=1):
            if len(set(points)) != len(points):
                return False
            for i in range(m):
                if any(mask == 0 for mask in self.embedding(i, m)):
                    return False
            for t in points:
                for i, j in itertools.combinations(range(m), 2):
                    mi, mj = sysm.maps(i, j)
                    if mi[t[i]] != mj[t[j]]:
                        return False
            if m > 1:
                prev = set(self.stages[m - 2])
                if {t[:-1] for t in points} != prev:
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "stages": [[list(t) for t in pts] for pts in self.stages],
            "log": [r.to_json() for r in self.log],
        }


def assemble(system: OverlapSystem) -> AssemblyChain:
    """Amalgamate ``A_0, ..., A_{n-1}`` one algebra at a time, certifying each step.

    At stage ``m`` the traces ``A_i ∩ A_m`` (``i < m``) are realised inside
    ``A_m``; their join ``D`` is glued to the current amalgam ``B_m`` along
    the mediating map ``g: D -> B_m``.  Raises :class:`HypothesisFailed`
    naming the first check that does not hold.
    """
    from .commute import find_incompatible_tuple

    n = system.n
    if n == 0:
        raise InvalidSystem("empty system")
    stages = [tuple((a,) for a in range(system.atom_counts[0]))]
    log = [StageRecord(0, {"base": True})]
    for m in range(1, n):
        checks: dict[str, bool] = {}
        log.append(StageRecord(m, checks))
        k_m = system.atom_counts[m]
        traces_in_m = [system.trace(m, i) for i in range(m)]

        witness = find_incompatible_tuple(traces_in_m)
        checks["trace-family-commutes"] = witness is None
        if witness is not None:
            raise HypothesisFailed(m, "trace-noncommuting", f"trace atoms {witness} inside A_{m} have empty meet")

        traces_in_i = [system.trace(i, m) for i in range(m)]
        report = commutatively_reflects(system.subsystem(range(m)), traces_in_i)
        checks["reflects"] = report.result
        if not report.result:
            raise HypothesisFailed(m, "reflection-condition", f"condition ({report.condition}) fails")

        # dual of g: each atom of B_m picks the D-atom (set of A_m atoms) it must lie under
        trace_blocks = []
        for i in range(m):
            _, map_m = system.maps(i, m)
            by_value: dict[int, int] = {}
            for a, v in enumerate(map_m):
                by_value[v] = by_value.get(v, 0) | (1 << a)
            trace_blocks.append(by_value)
        full = (1 << k_m) - 1
        fibres = []
        for t in stages[-1]:
            S = full
            for i in range(m):
                map_i, _ = system.maps(i, m)
                S &= trace_blocks[i][map_i[t[i]]]
            fibres.append(S)
        well_defined = all(fibres)
        checks["g-well-defined"] = well_defined
        if not well_defined:
            bad = stages[-1][fibres.index(0)]
            raise HypothesisFailed(m, "incoherent-identification", f"B-atom {bad} has no image in D")

        D = join_all(traces_in_m, k_m)
        hit = 0
        for S in fibres:
            hit |= S
        g_injective = all(block & hit for block in D.blocks) and all(
            S in D.blocks for S in fibres
        )
        checks["g-injective"] = g_injective
        if not g_injective:
            raise HypothesisFailed(m, "reflection-condition", "mediating map D -> B is not injective")

        new_points = tuple(t + (a,) for t, S in zip(stages[-1], fibres) for a in points_of(S))
        alpha_ok = {p[-1] for p in new_points} == set(range(k_m))
        beta_ok = {p[:-1] for p in new_points} == set(stages[-1])
        checks["pushout-embeds-both-sides"] = alpha_ok and beta_ok
        if not (alpha_ok and beta_ok):
            raise HypothesisFailed(m, "embedding-failed", "binary pushout coprojection not injective")
        stages.append(new_points)

    chain = AssemblyChain(system, stages, log)
    final_ok = chain.verify() and set(chain.final) <= set(compatible_tuples(system))
    log[-1].checks["final-embeddings-verified"] = final_ok
    if not final_ok:
        raise InternalCheckError("assembled chain fails re-verification")
    return chain
