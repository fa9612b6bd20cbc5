"""Built-in example families and overlap systems with their expected claims.

Each fixture is a list of named claims; a claim pairs an expected value with
a thunk computing the observed one.  Numbers that come from brute-force
oracles (rather than hand analysis) are read from ``data/oracles.json`` and
can be rebuilt with :func:`regenerate_oracles`.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Optional

from .amalgam import (
    OverlapSystem,
    PairData,
    HypothesisFailed,
    assemble,
    commutatively_reflects,
    compatible_tuples,
    embed_as_system,
    has_common_extension,
    pushout,
    verify_pushout_duality,
)
from .commute import (
    commutes,
    stepping_up_hypotheses,
    weak_witness,
    weakly_commutes,
)
from .core import Subalgebra, generate_subalgebra, intersect, is_independent, mask_of

ORACLE_FILE = "oracles.json"


def _pattern_ground(points, n_bits):
    """Ground indexed by bit patterns; generator ``g_k`` holds where bit ``k`` is set."""
    m = len(points)
    gens = [mask_of(r for r, p in enumerate(points) if p >> k & 1) for k in range(n_bits)]
    return m, gens


def noncomm() -> list[Subalgebra]:
    return [Subalgebra.from_blocks(3, [[0], [1, 2]]), Subalgebra.from_blocks(3, [[1], [0, 2]])]


def lowcoherenothigh() -> list[Subalgebra]:
    # three generators whose common meet is removed
    m, g = _pattern_ground(range(7), 3)
    return [generate_subalgebra(m, [gi]) for gi in g]


def lowpairnothigh() -> list[Subalgebra]:
    m, g = _pattern_ground(range(4), 2)
    g2 = g[0] ^ g[1]
    return [generate_subalgebra(m, [x]) for x in (g[0], g[1], g2)]


def highnotlow() -> list[Subalgebra]:
    # g_0 and g_1 disjoint
    m, g = _pattern_ground([p for p in range(8) if p & 3 != 3], 3)
    return [generate_subalgebra(m, [g[j] for j in range(3) if j != i]) for i in range(3)]


def strictlyweakcomm() -> list[Subalgebra]:
    # bit 0 = g01, bit 1 = g02, bit 2 = g12; all-true pattern removed
    m, g = _pattern_ground(range(7), 3)
    g01, g02, g12 = g
    return [
        generate_subalgebra(m, [g01, g02]),
        generate_subalgebra(m, [g01, g12]),
        generate_subalgebra(m, [g02, g12]),
    ]


def strictlyweakcomm_generators() -> dict[str, int]:
    _, (g01, g02, g12) = _pattern_ground(range(7), 3)
    return {"g01": g01, "g02": g02, "g12": g12}


def badoverlap() -> OverlapSystem:
    """Three 3-atom algebras on chains ``0<x0<x1``, ``0<x1<x2``, ``0<x2<-x0``.

    Atom order: ``A_0 = [x0, x1-x0, -x1]``, ``A_1 = [x1, x2-x1, -x2]``,
    ``A_2 = [x2, -x0-x2, x0]``; each pairwise intersection is ``<x>`` for the
    shared ``x`` with atoms ``[x, -x]``.
    """
    return OverlapSystem(
        (3, 3, 3),
        {
            (0, 1): PairData(2, (0, 0, 1), (0, 1, 1)),
            (1, 2): PairData(2, (0, 0, 1), (0, 1, 1)),
            (0, 2): PairData(2, (0, 1, 1), (1, 1, 0)),
        },
    )


def reflection_failure() -> tuple[OverlapSystem, list[Subalgebra]]:
    """Two identified 2-atom algebras; only the second trace is the full algebra.

    The coprojected traces commute, but the first coprojected algebra meets
    their join in more than its own (trivial) trace.  Found by random search.
    """
    system = OverlapSystem((2, 2), {(0, 1): PairData(2, (0, 1), (0, 1))})
    return system, [Subalgebra.trivial(2), Subalgebra.discrete(2)]


def free_family(n_gens: int, subsets) -> list[Subalgebra]:
    """Subalgebras of the free algebra on ``n_gens`` generators, one per generator subset."""
    m, g = _pattern_ground(range(1 << n_gens), n_gens)
    return [generate_subalgebra(m, [g[k] for k in sub]) for sub in subsets]


# -- oracle record ---------------------------------------------------------


def _oracle_path() -> Path:
    return Path(str(resources.files("boolalg") / "data" / ORACLE_FILE))


def load_oracles() -> dict:
    with open(_oracle_path()) as fh:
        return json.load(fh)


def brute_force_tuples(system: OverlapSystem) -> list[tuple[int, ...]]:
    """Every atom tuple checked against every pair; no pruning."""
    out = []
    for t in itertools.product(*(range(k) for k in system.atom_counts)):
        if all(
            system.maps(i, j)[0][t[i]] == system.maps(i, j)[1][t[j]]
            for i, j in itertools.combinations(range(system.n), 2)
        ):
            out.append(t)
    return out


def regenerate_oracles(path: Optional[Path] = None, *, searches: bool = True) -> dict:
    """Recompute oracle-derived numbers and rewrite the record."""
    from .functors import CONDITIONS, brute_force_cube_search, search_algebra_counterexample

    tuples = brute_force_tuples(badoverlap())
    data: dict[str, Any] = {
        "badoverlap": {
            "compatible_tuple_count": len(tuples),
            "compatible_tuples": [list(t) for t in tuples],
            "enumerated": 27,
        }
    }
    if searches:
        data["cube_search"] = {}
        for name in ("exp", "sp2"):
            hit = brute_force_cube_search(name, 6)
            data["cube_search"][name] = None if hit is None else [sorted(a) for a in hit]
        data["algebra_search_ground_4"] = {}
        for name in ("exp", "sp2"):
            for cond in CONDITIONS:
                hit = search_algebra_counterexample(name, 4, condition=cond)
                data["algebra_search_ground_4"][f"{name}/{cond}"] = None if hit is None else list(hit.indices)
    else:
        old = load_oracles()
        data["cube_search"] = old.get("cube_search", {})
        data["algebra_search_ground_4"] = old.get("algebra_search_ground_4", {})
    target = path or _oracle_path()
    with open(target, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data


# -- claims ------------------------------------------------------------------


@dataclass
class Claim:
    name: str
    expected: Any
    observe: Callable[[], Any]


@dataclass
class FixtureReport:
    fixture: str
    claims: list[tuple[str, Any, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(exp == obs for _, exp, obs in self.claims)

    def to_json(self) -> dict:
        return {
            "fixture": self.fixture,
            "pass": self.passed,
            "claims": [
                {"claim": name, "expected": exp, "observed": obs, "ok": exp == obs}
                for name, exp, obs in self.claims
            ],
        }


def _pair(fam, i, j):
    return commutes([fam[i], fam[j]])


def _assemble_failure(system):
    try:
        assemble(system)
    except HypothesisFailed as exc:
        return [exc.stage, exc.which]
    return None


def _witness_ok(fam) -> bool:
    """The hand-built case-(2) witness and the minimal one both satisfy the witness invariants."""
    g = strictlyweakcomm_generators()
    m = fam[0].ground
    full = (1 << m) - 1
    xs = [g["g01"] & g["g02"], g["g01"] & g["g12"], g["g02"] & g["g12"]]
    w = weak_witness(fam, xs)
    if w is None:
        return False
    from .commute import shared_parts

    D = shared_parts(fam)
    meet = full
    for Di, x, y in zip(D, xs, w.elements):
        if not (Di.contains(y) and x & ~y.bits == 0):
            return False
        meet &= y.bits
    given = [g["g01"], g["g12"], g["g02"]]
    given_ok = all(Di.contains(y) and x & ~y == 0 for Di, x, y in zip(D, xs, given))
    return meet == 0 and given_ok and given[0] & given[1] & given[2] == 0


def fixture_claims() -> dict[str, list[Claim]]:
    oracles = load_oracles()
    nc = noncomm()
    bo = badoverlap()
    lch = lowcoherenothigh()
    lpn = lowpairnothigh()
    hnl = highnotlow()
    swc = strictlyweakcomm()
    rs, rt = reflection_failure()
    return {
        "noncomm": [
            Claim("pushout_atoms", 4, lambda: pushout(embed_as_system(nc)).ground),
            Claim("intersection_trivial", True, lambda: intersect(*nc).n_atoms == 1),
            Claim("commutes", False, lambda: commutes(nc)),
            Claim("has_common_extension", True, lambda: has_common_extension(embed_as_system(nc))),
        ],
        "badoverlap": [
            Claim("has_common_extension", False, lambda: has_common_extension(bo)),
            Claim("coproj_0_injective", False, lambda: pushout(bo).injective[0]),
            Claim("coproj_0_x0_collapses", True, lambda: pushout(bo).coprojections[0][0] == 0),
            Claim(
                "compatible_tuple_count",
                oracles["badoverlap"]["compatible_tuple_count"],
                lambda: len(compatible_tuples(bo)),
            ),
            Claim("pushout_duality", True, lambda: verify_pushout_duality(bo)),
            Claim("assemble_fails", [2, "trace-noncommuting"], lambda: _assemble_failure(bo)),
        ],
        "lowcoherenothigh": [
            Claim("pairs_independent", True, lambda: all(is_independent([lch[i], lch[j]]) for i, j in [(0, 1), (0, 2), (1, 2)])),
            Claim("triple_independent", False, lambda: is_independent(lch)),
            Claim("triple_commutes", False, lambda: commutes(lch)),
            Claim("stepping_up_hypotheses", [True, True, False], lambda: list(stepping_up_hypotheses(lch))),
        ],
        "lowpairnothigh": [
            Claim("pairs_independent", True, lambda: all(is_independent([lpn[i], lpn[j]]) for i, j in [(0, 1), (0, 2), (1, 2)])),
            Claim("triple_commutes", False, lambda: commutes(lpn)),
            Claim("stepping_up_hypotheses", [True, False, True], lambda: list(stepping_up_hypotheses(lpn))),
        ],
        "highnotlow": [
            Claim("pair_01_commutes", False, lambda: _pair(hnl, 0, 1)),
            Claim("triple_commutes", True, lambda: commutes(hnl)),
            Claim("intersection_01_is_g2", True, lambda: intersect(hnl[0], hnl[1]) == generate_subalgebra(hnl[0].ground, [_pattern_ground([p for p in range(8) if p & 3 != 3], 3)[1][2]])),
        ],
        "strictlyweakcomm": [
            Claim("triple_commutes", False, lambda: commutes(swc)),
            Claim("triple_weakly_commutes", True, lambda: weakly_commutes(swc)),
            Claim("pair_01_weakly_commutes", False, lambda: weakly_commutes([swc[0], swc[1]])),
            Claim("pair_01_commutes", False, lambda: _pair(swc, 0, 1)),
            Claim("traces_in_A2_commute", True, lambda: commutes([intersect(swc[0], swc[2]), intersect(swc[1], swc[2])])),
            Claim("stepping_up_hypotheses", [False, True, True], lambda: list(stepping_up_hypotheses(swc))),
            Claim("case_2_witness_valid", True, lambda: _witness_ok(swc)),
        ],
        "reflection_failure": [
            Claim("reflects", False, lambda: commutatively_reflects(rs, rt).result),
            Claim("failed_condition", 3, lambda: commutatively_reflects(rs, rt).condition),
            Claim("certificate", [0], lambda: commutatively_reflects(rs, rt).certificate.points()),
        ],
    }


def run_fixture(name: str, claims: list[Claim]) -> FixtureReport:
    report = FixtureReport(name)
    for c in claims:
        report.claims.append((c.name, c.expected, c.observe()))
    return report


def run_all() -> list[FixtureReport]:
    return [run_fixture(name, claims) for name, claims in fixture_claims().items()]
