import math

import numpy as np
import pytest

from gpwave.errors import BasisTooLarge, ConfigError
from gpwave.lattice import (LatticeBasis, QuasiMomentum, build_basis, build_model,
                            decompose_potential, gamma_set, momentum, pi_set,
                            resonance_T, split_k)
from gpwave.trigpoly import TrigPolynomial, random_real_potential

from conftest import AXIS_PAIRS, STD_PAIRS


def brute_ball(j_max):
    n = int(math.ceil(j_max))
    out = []
    for a in range(-n, n + 1):
        for b in range(-n, n + 1):
            for c in range(-n, n + 1):
                if a * a + b * b + c * c <= j_max * j_max:
                    out.append((a, b, c))
    return sorted(out)


class TestBasis:
    @pytest.mark.parametrize("j_max,count", [(1.0, 7), (1.5, 19), (2.1, 33)])
    def test_counts(self, j_max, count):
        basis = LatticeBasis(j_max)
        assert len(basis) == count
        assert [tuple(v) for v in basis.indices] == brute_ball(j_max)

    def test_sorted_and_invertible(self):
        basis = LatticeBasis(3.0)
        idx = [tuple(int(x) for x in v) for v in basis.indices]
        assert idx == sorted(idx)
        for m, v in enumerate(idx):
            assert basis.ordinal(v) == m

    def test_negation_closed(self):
        basis = LatticeBasis(2.5)
        for v in basis.indices:
            assert basis.contains(tuple(-int(x) for x in v))

    def test_too_large(self):
        with pytest.raises(BasisTooLarge):
            LatticeBasis(60.0, max_size=10_000)

    def test_requires_j_max_at_least_one(self):
        with pytest.raises(ConfigError):
            LatticeBasis(0.5)


class TestQuasiMomentum:
    def test_validation(self):
        with pytest.raises(ConfigError):
            QuasiMomentum((1.0, 0.0, 0.0))
        with pytest.raises(ConfigError):
            QuasiMomentum((-0.1, 0.0, 0.0))

    def test_momentum_values(self):
        vec, sq = momentum((0, 0, 0), QuasiMomentum((0.0, 0.0, 0.0)))
        assert sq == 0.0
        vec, sq = momentum((1, 0, 0), QuasiMomentum((0.3, 0.4, 0.5)))
        assert np.allclose(vec, [1.3, 0.4, 0.5])
        assert sq == pytest.approx(2.1)

    def test_degeneracy_witness(self):
        t = QuasiMomentum((0.5, 0.0, 0.0))
        _, sq_neg = momentum((-1, 0, 0), t)
        _, sq_zero = momentum((0, 0, 0), t)
        assert sq_neg == sq_zero == 0.25


class TestSplitK:
    @pytest.mark.parametrize("kvec,j,t", [
        ((1.3, 0.4, 0.5), (1, 0, 0), (0.3, 0.4, 0.5)),
        ((0.3, 0.4, 0.5), (0, 0, 0), (0.3, 0.4, 0.5)),
        ((-0.5, 0.0, 0.0), (-1, 0, 0), (0.5, 0.0, 0.0)),
    ])
    def test_examples(self, kvec, j, t):
        jj, tt = split_k(np.array(kvec))
        assert tuple(jj) == j
        assert np.allclose(tt.vec, t, atol=1e-15)

    def test_roundtrip(self, rng):
        for _ in range(50):
            j = rng.integers(-40, 40, size=3)
            t = rng.uniform(0.05, 0.95, size=3)
            jj, tt = split_k(t + j)
            assert np.array_equal(jj, j)
            assert np.allclose(tt.vec, t, atol=1e-12)


class TestGammaSet:
    def test_axis_families(self):
        v = TrigPolynomial.zero()
        gens = gamma_set(v, 1.5)
        assert gens == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]

    def test_radius_2_1(self):
        gens = gamma_set(TrigPolynomial.zero(), 2.1)
        assert len(gens) == 9
        # 3 axis families (absorbing +-2e_i) plus 6 sqrt(2) families
        assert (1, 0, 0) in gens and (2, 0, 0) not in gens
        assert (1, -1, 0) in gens and (-1, 1, 0) not in gens

    def test_small_radius_empty(self):
        assert gamma_set(TrigPolynomial.zero(), 1.0) == []

    def test_unique_cover_and_non_proportional(self):
        r0 = 3.2
        gens = gamma_set(TrigPolynomial.zero(), r0)
        n = int(math.ceil(r0))
        for a in range(-n, n + 1):
            for b in range(-n, n + 1):
                for c in range(-n, n + 1):
                    q = (a, b, c)
                    if q == (0, 0, 0) or a * a + b * b + c * c >= r0 * r0:
                        continue
                    hits = []
                    for g in gens:
                        for m in range(-4, 5):
                            if m and (m * g[0], m * g[1], m * g[2]) == q:
                                hits.append((g, m))
                    assert len(hits) == 1, q
        for g1 in gens:
            for g2 in gens:
                if g1 == g2:
                    continue
                for m in range(-4, 5):
                    assert (m * g2[0], m * g2[1], m * g2[2]) != g1

    def test_rejects_wide_support(self):
        v = TrigPolynomial.from_dict({(3, 0, 0): 1.0, (-3, 0, 0): 1.0})
        with pytest.raises(ConfigError):
            gamma_set(v, 2.0)


class TestDecompose:
    def test_family_assignment(self):
        v = TrigPolynomial.from_dict({
            (1, 0, 0): 0.1, (-1, 0, 0): 0.1, (2, 0, 0): 0.2, (-2, 0, 0): 0.2,
            (0, 1, 0): 0.3, (0, -1, 0): 0.3})
        gens = gamma_set(v, 2.5)
        parts = decompose_potential(v, gens, 2.5)
        assert len(parts[(1, 0, 0)]) == 4
        assert len(parts[(0, 1, 0)]) == 2

    def test_zero_potential(self):
        gens = gamma_set(TrigPolynomial.zero(), 2.0)
        parts = decompose_potential(TrigPolynomial.zero(), gens, 2.0)
        assert all(len(p) == 0 for p in parts.values())

    def test_partition_reconstructs(self, rng):
        v = random_real_potential(rng, STD_PAIRS, norm=1.1)
        gens = gamma_set(v, 2.0)
        parts = decompose_potential(v, gens, 2.0)
        total = TrigPolynomial.zero()
        seen = set()
        for p in parts.values():
            for q in p.as_dict():
                assert q not in seen
                seen.add(q)
            total = total + p
        assert total == v

    def test_unmatched_frequency_fails(self):
        v = TrigPolynomial.from_dict({(1, 1, 0): 1.0, (-1, -1, 0): 1.0})
        with pytest.raises(ConfigError):
            decompose_potential(v, [(1, 0, 0)], 2.0)


class TestResonanceSets:
    def test_pi_threshold_small_k(self):
        basis = build_basis(4.0)
        got = pi_set((1, 0, 0), 100.0, basis, 1.0)
        expect = {m for m, v in enumerate(basis.indices) if abs(v[0]) <= 2}
        assert got == expect  # threshold 100^(1/5) ~ 2.512

    def test_pi_threshold_values(self):
        assert 100.0 ** 0.2 == pytest.approx(2.51188643, rel=1e-8)
        assert 1e9 ** 0.2 == pytest.approx(63.0957344, rel=1e-8)

    def test_pi_zero_plane_always_included(self):
        basis = build_basis(3.0)
        got = pi_set((1, 0, 0), 1.0001, basis, 1e-9)
        expect = {m for m, v in enumerate(basis.indices) if v[0] == 0}
        assert got == expect

    def test_pi_with_center(self):
        basis = build_basis(2.0)
        got = pi_set((1, 0, 0), 100.0, basis, 1.0, center=(7, 0, 0))
        expect = {m for m, v in enumerate(basis.indices) if abs(v[0] + 7) <= 2}
        assert got == expect

    def test_t_requires_two_generators(self):
        basis = build_basis(3.0)
        assert resonance_T([(1, 0, 0)], 100.0, basis, 1.0) == set()

    def test_t_contains_origin(self):
        basis = build_basis(3.0)
        gens = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        t = resonance_T(gens, 100.0, basis, 1.0)
        assert basis.ordinal((0, 0, 0)) in t

    def test_t_threshold_arithmetic(self):
        basis = build_basis(20.0)
        gens = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        t = resonance_T(gens, 100.0, basis, 1.0)
        expect = set()
        for m, v in enumerate(basis.indices):
            narrow = [abs(int(v[a])) <= 2 for a in range(3)]
            wide = [abs(int(v[a])) <= 15 for a in range(3)]
            if any(narrow[a] and wide[b] for a in range(3) for b in range(3) if a != b):
                expect.add(m)
        assert t == expect


class TestBuildModel:
    def test_zero_potential_empty(self):
        basis = build_basis(3.0)
        gens = gamma_set(TrigPolynomial.zero(), 2.0)
        model = build_model(TrigPolynomial.zero(), gens, 50.0, 2.0, basis, 1.0)
        assert all(len(p) == 0 for p in model.parts.values())
        assert all(not s for s in model.supports.values())

    def test_single_generator_slab(self, rng):
        v = random_real_potential(rng, [(1, 0, 0)], norm=0.2)
        basis = build_basis(4.0)
        model = build_model(v, [(1, 0, 0)], 100.0, 2.0, basis, 1.0)
        expect = {m for m, vv in enumerate(basis.indices) if abs(vv[0]) <= 2}
        assert model.supports[(1, 0, 0)] == frozenset(expect)
        assert model.t_set == frozenset()

    def test_disjoint_supports(self, rng):
        v = random_real_potential(rng, AXIS_PAIRS, norm=0.3)
        basis = build_basis(4.0)
        gens = gamma_set(v, 1.5)
        model = build_model(v, gens, 100.0, 1.5, basis, 1.0)
        seen = set()
        for s in model.supports.values():
            assert not (s & seen)
            seen |= s

    def test_report_dict(self, rng):
        v = random_real_potential(rng, AXIS_PAIRS, norm=0.3)
        basis = build_basis(3.0)
        gens = gamma_set(v, 1.5)
        model = build_model(v, gens, 80.0, 1.5, basis, 1.0, center=(3, -2, 1))
        rep = model.to_report_dict()
        assert rep["center"] == [3, -2, 1]
        assert set(rep["support_sizes"]) == {str(list(g)) for g in gens}
