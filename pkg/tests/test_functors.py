import itertools
import json
import random

import pytest
from hypothesis import given, strategies as st

from boolalg.commute import commutes
from boolalg.core import Subalgebra, intersect
from boolalg.functors import (
    EXP,
    SP2,
    FinCube,
    FinMap,
    FunctorId,
    NotFunctorial,
    SizeOverflow,
    apply_functor,
    dual_family,
    exp_points,
    family_cube,
    functor_ground,
    functor_image,
    functor_image_by_generators,
    is_n_commutative,
    lex_subsets,
    projection_cube,
    restricted_growth_strings,
    search_algebra_counterexample,
    search_cube_counterexample,
    sp_points,
    unlifted_tuple,
)

from helpers import families, random_subalgebra, subalgebras


def random_sets(rng, k, n=3):
    return [{x for x in range(k) if rng.random() < 0.5} for _ in range(n)]


class TestFunctorId:
    def test_parse(self):
        assert FunctorId.parse("exp") == EXP
        assert FunctorId.parse("SP2") == SP2
        assert str(FunctorId.parse("sigma3")) == "sp3"

    @pytest.mark.parametrize("bad", ["sp1", "foo", "sp"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            FunctorId.parse(bad)


class TestCubes:
    def test_disjoint_supports(self):
        c = projection_cube([{0}, {1}, {2}])
        assert c.spaces[0] == 8 and all(c.spaces[1 << i] == 2 for i in range(3))
        assert is_n_commutative(c) and c.is_functorial()

    def test_pairwise_overlaps(self):
        c = projection_cube([{0, 1}, {1, 2}, {0, 2}])
        assert all(c.spaces[s] == 2 for s in (3, 5, 6)) and c.spaces[7] == 1
        assert is_n_commutative(c)

    def test_empty_bottom_fails(self):
        c = FinCube(2, {0: 0, 1: 1, 2: 1, 3: 1}, {
            (0, 1): FinMap(0, 1, ()), (0, 2): FinMap(0, 1, ()), (0, 3): FinMap(0, 1, ()),
            (1, 3): FinMap(1, 1, (0,)), (2, 3): FinMap(1, 1, (0,)),
        })
        assert not is_n_commutative(c)

    def test_square_is_pullback_surjectivity(self):
        # 2-cube: bottom maps onto the fibre product iff 2-commutative
        c = FinCube(2, {0: 2, 1: 2, 2: 2, 3: 1}, {
            (0, 1): FinMap(2, 2, (0, 1)), (0, 2): FinMap(2, 2, (0, 1)), (0, 3): FinMap(2, 1, (0, 0)),
            (1, 3): FinMap(2, 1, (0, 0)), (2, 3): FinMap(2, 1, (0, 0)),
        })
        assert unlifted_tuple(c) == (0, 1)

    def test_non_functorial_rejected(self):
        c = FinCube(1, {0: 2, 1: 2}, {(0, 1): FinMap(2, 2, (0, 1))})
        c.maps[(1, 1)] = FinMap(2, 2, (1, 0))
        with pytest.raises(NotFunctorial):
            is_n_commutative(c)

    def test_json_roundtrip(self):
        c = projection_cube([{0, 1}, {1}])
        data = json.loads(json.dumps(c.to_json()))
        assert set(data["spaces"]) == {"", "0", "1", "01"}
        assert "->0" in data["maps"]
        back = FinCube.from_json(data)
        assert back.spaces == c.spaces and back.maps == c.maps

    @given(st.integers(0, 4), st.integers(0, 2**32 - 1))
    def test_projection_cubes_commute(self, k, seed):
        rng = random.Random(seed)
        c = projection_cube(random_sets(rng, k, rng.randint(1, 4)))
        assert c.is_functorial() and is_n_commutative(c)


class TestFunctorApplication:
    def test_counts(self):
        assert len(exp_points(4)) == 15
        assert len(sp_points(4, 2)) == 10
        c = projection_cube([{0}])
        assert apply_functor("exp", c).spaces[0] == 3

    def test_point_space(self):
        c = projection_cube([set()])
        assert apply_functor("exp", c).spaces[0] == 1

    def test_lex_order(self):
        assert [tuple(sorted({0, 1, 2} & {i for i in range(3) if K >> i & 1})) for K in exp_points(3)] == [
            (0,), (0, 1), (0, 1, 2), (0, 2), (1,), (1, 2), (2,)
        ]

    @given(st.integers(0, 3), st.integers(0, 2**32 - 1), st.sampled_from(["exp", "sp2", "sp3"]))
    def test_functoriality_preserved(self, k, seed, F):
        rng = random.Random(seed)
        c = projection_cube(random_sets(rng, k, rng.randint(1, 3)))
        assert apply_functor(F, c, check=False).is_functorial()

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("BOOLALG_SIZE_CAP", "100")
        exp_points.cache_clear()
        try:
            with pytest.raises(SizeOverflow):
                exp_points(8)
        finally:
            exp_points.cache_clear()


class TestAlgebraSide:
    def test_trivial_image(self):
        assert functor_image("exp", Subalgebra.trivial(3)).n_atoms == 1
        assert functor_image("sp2", Subalgebra.trivial(3)).n_atoms == 1

    def test_filter_count(self):
        assert functor_ground("exp", 3) == 7
        assert functor_image("exp", Subalgebra.discrete(3)).n_atoms == 7

    @given(st.integers(1, 4).flatmap(subalgebras), st.sampled_from(["exp", "sp2", "sp3"]))
    def test_dual_matches_generators(self, A, F):
        assert functor_image(F, A) == functor_image_by_generators(F, A)

    @given(st.integers(1, 5).flatmap(lambda m: st.tuples(subalgebras(m), subalgebras(m))), st.sampled_from(["exp", "sp2"]))
    def test_preserves_intersections(self, pair, F):
        A, B = pair
        assert functor_image(F, intersect(A, B)) == intersect(functor_image(F, A), functor_image(F, B))

    @given(st.integers(1, 4).flatmap(lambda m: st.tuples(subalgebras(m), subalgebras(m))), st.sampled_from(["exp", "sp2", "sp3"]))
    def test_pair_preservation(self, pair, F):
        A, B = pair
        if commutes([A, B]):
            assert commutes([functor_image(F, A), functor_image(F, B)])


class TestStoneDuality:
    @given(families(max_m=6, max_n=4))
    def test_family_cube(self, fam):
        c = family_cube(fam)
        assert c.is_functorial()
        assert is_n_commutative(c) == commutes(fam)

    @given(st.integers(0, 4), st.integers(0, 2**32 - 1))
    def test_projection_cube_dual(self, k, seed):
        rng = random.Random(seed)
        c = projection_cube(random_sets(rng, k, rng.randint(1, 4)))
        assert commutes(dual_family(c)) == is_n_commutative(c)

    @given(st.integers(2, 3), st.integers(0, 2**32 - 1), st.sampled_from(["exp", "sp2"]))
    def test_functor_cube_dual(self, k, seed, F):
        rng = random.Random(seed)
        c = projection_cube(random_sets(rng, k))
        images = [functor_image(F, A) for A in dual_family(c)]
        assert commutes(images) == is_n_commutative(apply_functor(F, c))


class TestCubeRemarks:
    @given(st.integers(0, 3), st.integers(0, 2**32 - 1))
    def test_grouping_remark(self, k, seed):
        # merging coordinates of a commutative projection cube keeps it commutative
        rng = random.Random(seed)
        sets = random_sets(rng, k, 3)
        merged = [sets[0] & sets[1], sets[2]]
        assert is_n_commutative(projection_cube(merged))

    @given(st.integers(0, 3), st.integers(0, 2**32 - 1))
    def test_stepping_down_remark(self, k, seed):
        # restricting to the faces through the last coordinate
        rng = random.Random(seed)
        sets = random_sets(rng, k, 3)
        full = projection_cube(sets)
        face = projection_cube([sets[0] & sets[2], sets[1] & sets[2]])
        if is_n_commutative(full) and is_n_commutative(face):
            assert is_n_commutative(projection_cube(sets[:2]))


class TestSearch:
    def test_rgs(self):
        assert [len(restricted_growth_strings(m)) for m in range(1, 6)] == [1, 2, 5, 15, 52]

    def test_lex_subsets(self):
        assert lex_subsets(2) == [0, 1, 3, 2]

    def test_algebra_ground_one(self):
        assert search_algebra_counterexample("exp", 1) is None

    def test_algebra_search_triple_exp(self):
        hit = search_algebra_counterexample("exp", 4, condition="triple")
        assert hit is not None and commutes(list(hit.family))

    def test_algebra_workers_deterministic(self):
        a = search_algebra_counterexample("exp", 4, condition="prefix", workers=1)
        b = search_algebra_counterexample("exp", 4, condition="prefix", workers=2)
        assert a.indices == b.indices

    def test_cube_search_small_bound(self):
        assert search_cube_counterexample("exp", 2) is None

    @pytest.mark.parametrize("F", ["exp", "sp2"])
    def test_cube_search(self, F):
        hit = search_cube_counterexample(F, 6)
        assert hit is not None
        sets = [set(a) for a in hit.sets]
        assert any(sets[i] & sets[j] for i, j in itertools.combinations(range(3), 2))
        cube = projection_cube(hit.sets)
        assert is_n_commutative(cube) and not is_n_commutative(apply_functor(F, cube))
