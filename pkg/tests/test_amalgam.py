import itertools
import json
import math
import random

import pytest
from hypothesis import given, strategies as st

from boolalg.amalgam import (
    HypothesisFailed,
    InvalidSystem,
    OverlapSystem,
    PairData,
    assemble,
    commutatively_reflects,
    compatible_tuples,
    embed_as_system,
    has_common_extension,
    missing_atoms,
    pushout,
    pushout_by_ideal,
    verify_pushout_duality,
)
from boolalg.commute import commutes
from boolalg.core import Subalgebra, generate_subalgebra
from boolalg.fixtures import badoverlap, brute_force_tuples, free_family, load_oracles, noncomm, reflection_failure

from helpers import families, random_system


def sa(m, blocks):
    return Subalgebra.from_blocks(m, blocks)


class TestSystem:
    def test_embed_noncomm(self):
        s = embed_as_system(noncomm())
        assert s.atom_counts == (2, 2)
        pd = s.pairs[(0, 1)]
        assert pd.inter_atoms == 1 and pd.map_i == (0, 0) and pd.map_j == (0, 0)

    def test_embed_single(self):
        s = embed_as_system([sa(3, [[0], [1, 2]])])
        assert s.n == 1 and not s.pairs

    def test_disjoint_splits(self):
        s = embed_as_system([generate_subalgebra(4, [0b0001]), generate_subalgebra(4, [0b0010])])
        assert s.pairs[(0, 1)].inter_atoms == 1

    def test_rejects_non_surjective(self):
        with pytest.raises(InvalidSystem):
            OverlapSystem((2, 2), {(0, 1): PairData(2, (0, 0), (0, 1))})

    def test_rejects_missing_pair(self):
        with pytest.raises(InvalidSystem):
            OverlapSystem((2, 2, 2), {(0, 1): PairData(1, (0, 0), (0, 0))})

    def test_json_roundtrip(self):
        s = badoverlap()
        assert OverlapSystem.from_json(json.loads(json.dumps(s.to_json()))) == s

    def test_json_swapped_pair(self):
        data = {"atomCounts": [2, 3], "pairs": [{"i": 1, "j": 0, "interAtoms": 2, "mapI": [0, 1, 1], "mapJ": [1, 0]}]}
        s = OverlapSystem.from_json(data)
        assert s.pairs[(0, 1)].map_i == (1, 0)


class TestTuples:
    def test_noncomm_free(self):
        assert compatible_tuples(embed_as_system(noncomm())) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_single(self):
        assert compatible_tuples(OverlapSystem((3,), {})) == [(0,), (1,), (2,)]

    def test_badoverlap_matches_oracle(self):
        got = compatible_tuples(badoverlap())
        assert got == brute_force_tuples(badoverlap())
        assert len(got) == load_oracles()["badoverlap"]["compatible_tuple_count"]

    @pytest.mark.parametrize("seed", range(3))
    def test_random_matches_brute_force(self, seed):
        rng = random.Random(seed)
        for _ in range(200):
            s = random_system(rng, rng.randint(1, 4))
            assert compatible_tuples(s) == brute_force_tuples(s)


class TestPushout:
    def test_noncomm(self):
        res = pushout(embed_as_system(noncomm()))
        assert res.ground == 4 and all(res.injective)

    def test_badoverlap_collapse(self):
        res = pushout(badoverlap())
        assert not res.injective[0] and res.offending[0] == 0
        assert res.coprojections[0][0] == 0

    def test_free_product(self):
        s = OverlapSystem((2, 3), {(0, 1): PairData(1, (0, 0), (0, 0, 0))})
        assert pushout(s).ground == 6

    def test_degenerate(self):
        s = OverlapSystem((1, 2), {(0, 1): PairData(1, (0,), (0, 0))})
        s2 = OverlapSystem((2, 2, 2), {
            (0, 1): PairData(2, (0, 1), (0, 1)),
            (1, 2): PairData(2, (0, 1), (0, 1)),
            (0, 2): PairData(2, (0, 1), (1, 0)),
        })
        res = pushout(s2)
        assert res.degenerate and not any(res.injective)
        assert pushout(s).ground == 2

    def test_coprojection_invariant(self):
        rng = random.Random(11)
        for _ in range(100):
            s = random_system(rng, rng.randint(1, 4))
            res = pushout(s, verify=False)
            for i in range(s.n):
                for a in range(s.atom_counts[i]):
                    rows = {r for r, t in enumerate(res.tuples) if t[i] == a}
                    assert res.coprojections[i][a] == sum(1 << r for r in rows)
                assert res.injective[i] == all(res.coprojections[i])

    def test_pairs_always_embed(self):
        rng = random.Random(12)
        for _ in range(300):
            s = random_system(rng, 2, max_atoms=6)
            assert all(pushout(s).injective)
            assert has_common_extension(s)

    def test_ideal_oracle_size_guard(self):
        with pytest.raises(ValueError):
            pushout_by_ideal(OverlapSystem((17, 17, 17), {
                (0, 1): PairData(1, (0,) * 17, (0,) * 17),
                (0, 2): PairData(1, (0,) * 17, (0,) * 17),
                (1, 2): PairData(1, (0,) * 17, (0,) * 17),
            }))

    @given(st.integers(0, 2**32 - 1))
    def test_duality_random(self, seed):
        rng = random.Random(seed)
        s = random_system(rng, rng.randint(1, 4), max_atoms=5)
        assert verify_pushout_duality(s)


class TestExtension:
    def test_badoverlap(self):
        assert not has_common_extension(badoverlap())
        assert (0, 0) in missing_atoms(badoverlap())

    def test_noncomm_has_extension_but_does_not_commute(self):
        assert has_common_extension(embed_as_system(noncomm()))
        assert not commutes(noncomm())

    def test_delta_system(self):
        # three algebras sharing one common core <c>
        s = embed_as_system(free_family(4, [(0, 1), (0, 2), (0, 3)]))
        assert has_common_extension(s)

    @given(families(max_m=6, max_n=4))
    def test_commutes_implies_extension(self, fam):
        if commutes(fam):
            assert has_common_extension(embed_as_system(fam))

    @given(families(max_m=6, max_n=4))
    def test_embedded_families_always_extend(self, fam):
        # the ambient powerset is a common extension
        assert has_common_extension(embed_as_system(fam))


class TestReflects:
    def test_trivial_traces(self):
        s = OverlapSystem((2, 3), {(0, 1): PairData(1, (0, 0), (0, 0, 0))})
        assert commutatively_reflects(s, [Subalgebra.trivial(2), Subalgebra.trivial(3)]).result

    def test_recorded_failure(self):
        s, traces = reflection_failure()
        rep = commutatively_reflects(s, traces)
        assert not rep.result and rep.condition == 3 and rep.certificate.points() == [0]

    def test_trace_validation(self):
        with pytest.raises(InvalidSystem):
            commutatively_reflects(embed_as_system(noncomm()), [Subalgebra.trivial(3), Subalgebra.trivial(2)])

    @given(families(max_m=6, max_n=3, min_n=2))
    def test_full_traces_match_commutes(self, fam):
        s = embed_as_system(fam)
        res = pushout(s)
        traces = [Subalgebra.discrete(k) for k in s.atom_counts]
        rep = commutatively_reflects(s, traces, res)
        images = [res.coprojected(i) for i in range(s.n)]
        assert (rep.condition != 2) == commutes(images)


class TestAssemble:
    def test_single(self):
        chain = assemble(OverlapSystem((3,), {}))
        assert chain.final == ((0,), (1,), (2,))

    @pytest.mark.parametrize(
        "n_gens,subsets",
        [
            (3, [(0, 1), (1, 2), (0, 2)]),
            (3, [(0,), (1,), (2,)]),
            (4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
            (4, [(0, 1, 2), (1, 2, 3), (0, 3), (2,)]),
        ],
    )
    def test_free_families(self, n_gens, subsets):
        fam = free_family(n_gens, subsets)
        s = embed_as_system(fam)
        chain = assemble(s)
        assert chain.verify()
        assert has_common_extension(s)
        for i in range(s.n):
            assert all(chain.embedding(i))
        # identifications: atoms in the same intersection block land in tuples agreeing there
        for i, j in itertools.combinations(range(s.n), 2):
            mi, mj = s.maps(i, j)
            assert all(mi[t[i]] == mj[t[j]] for t in chain.final)

    def test_badoverlap_fails_at_stage_two(self):
        with pytest.raises(HypothesisFailed) as info:
            assemble(badoverlap())
        assert info.value.stage == 2 and info.value.which == "trace-noncommuting"

    @pytest.mark.parametrize("seed", range(3))
    def test_success_implies_extension(self, seed):
        rng = random.Random(seed)
        for _ in range(200):
            s = random_system(rng, rng.randint(1, 4))
            try:
                chain = assemble(s)
            except HypothesisFailed:
                continue
            assert has_common_extension(s) and chain.verify()
