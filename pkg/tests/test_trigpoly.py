import json
import math

import numpy as np
import pytest

from gpwave.errors import ConfigError
from gpwave.trigpoly import TrigPolynomial, random_real_potential

from conftest import STD_PAIRS, brute_convolve


def P(d):
    return TrigPolynomial.from_dict(d)


class TestStarNorm:
    def test_unit_pair(self):
        assert P({(1, 0, 0): 1, (-1, 0, 0): 1}).star_norm() == 2.0

    def test_zero(self):
        assert TrigPolynomial.zero().star_norm() == 0.0

    def test_complex_modulus(self):
        assert P({(1, 0, 0): 3 - 4j}).star_norm() == 5.0

    def test_zero_iff_zero_polynomial(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=0.7)
        assert f.star_norm() > 0
        assert (f - f).star_norm() == 0.0

    def test_conjugate_invariance(self, rng):
        f = P({(1, 2, 0): 0.3 + 1j, (0, -1, 1): -2.5j, (2, 0, 0): 0.25})
        assert f.conjugate_reflect().star_norm() == pytest.approx(f.star_norm(), abs=0)

    def test_exact_summation_of_spread_magnitudes(self):
        # one large and many tiny coefficients: naive left-to-right float
        # summation would lose the tail; the exact accumulation keeps it
        terms = {(0, 0, 1): 1.0}
        for i in range(1, 501):
            terms[(i, 0, 0)] = 1e-18
        got = P(terms).star_norm()
        assert got == pytest.approx(1.0 + 500e-18, rel=1e-15)
        assert got > 1.0


class TestConvolve:
    def test_cosine_double_angle(self):
        f = P({(1, 0, 0): 0.5, (-1, 0, 0): 0.5})
        expect = {(2, 0, 0): 0.25, (0, 0, 0): 0.5, (-2, 0, 0): 0.25}
        assert f.convolve(f).as_dict() == expect

    def test_identity_element(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=1.3)
        one = P({(0, 0, 0): 1.0})
        assert f.convolve(one) == f

    def test_matches_brute_force_and_submultiplicative(self, rng):
        for _ in range(25):
            f = TrigPolynomial(rng.integers(-4, 5, size=(5, 3)),
                               rng.standard_normal(5) + 1j * rng.standard_normal(5))
            g = TrigPolynomial(rng.integers(-4, 5, size=(5, 3)),
                               rng.standard_normal(5) + 1j * rng.standard_normal(5))
            ref = brute_convolve(f, g)
            got = f.convolve(g).as_dict()
            assert set(got) == set(ref)
            for q in ref:
                assert got[q] == pytest.approx(ref[q], rel=1e-14, abs=1e-15)
            assert f.convolve(g).star_norm() <= f.star_norm() * g.star_norm() * (1 + 1e-14)

    def test_support_radius_subadditive(self, rng):
        f = P({(2, 0, 0): 1.0, (0, 1, 0): 1.0})
        g = P({(0, 0, 3): 1.0})
        assert f.convolve(g).support_radius <= f.support_radius + g.support_radius + 1e-12


class TestRemoveMean:
    def test_deletes_zero_frequency(self):
        got = P({(0, 0, 0): 5, (1, 0, 0): 2}).remove_mean()
        assert got.as_dict() == {(1, 0, 0): 2}
        assert got.is_mean_free()

    def test_idempotent_and_bit_identical_elsewhere(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=0.9) + TrigPolynomial.constant(3.0)
        once = f.remove_mean()
        assert once.remove_mean() == once
        for q, c in once.as_dict().items():
            assert f.as_dict()[q] == c

    def test_seed_potential_reduces_to_v(self, rng):
        # V + sigma|A|^2 loses exactly its constant part
        v = random_real_potential(rng, STD_PAIRS, norm=0.4)
        w0 = v + TrigPolynomial.constant(1e-7)
        assert w0.remove_mean() == v

    def test_star_norm_contraction(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=1.0) + TrigPolynomial.constant(0.3)
        assert f.remove_mean().star_norm() <= f.star_norm()


class TestModSquared:
    def test_constant(self):
        a = 0.3 - 0.7j
        assert P({(0, 0, 0): a}).mod_squared().as_dict() == {(0, 0, 0): abs(a) ** 2}

    def test_single_wave(self):
        assert P({(1, 0, 0): 1.0}).mod_squared().as_dict() == {(0, 0, 0): 1.0}

    def test_binomial_expansion(self):
        eps = 0.125
        got = P({(0, 0, 0): 1.0, (1, 0, 0): eps}).mod_squared().as_dict()
        assert got == {(0, 0, 0): 1 + eps ** 2, (1, 0, 0): eps, (-1, 0, 0): eps}

    def test_hermitian_bitwise_and_mean(self, rng):
        psi = TrigPolynomial(rng.integers(-3, 4, size=(8, 3)),
                             rng.standard_normal(8) + 1j * rng.standard_normal(8))
        g = psi.mod_squared()
        d = g.as_dict()
        for q, c in d.items():
            mq = (-q[0], -q[1], -q[2])
            assert d[mq] == c.conjugate()          # bitwise after canonicalization
        assert g.is_real_valued(tol=0.0)
        norm_sq = float(np.sum(np.abs(psi.coeffs) ** 2))
        assert complex(g.get((0, 0, 0))).real == pytest.approx(norm_sq, rel=1e-13)
        assert complex(g.get((0, 0, 0))).imag == 0.0


class TestTruncation:
    def test_truncate_drops_small(self):
        f = P({(1, 0, 0): 1.0, (0, 1, 0): 1e-16})
        assert f.truncate(1e-12).as_dict() == {(1, 0, 0): 1.0}

    def test_limit_radius_reports_mass(self):
        f = P({(1, 0, 0): 1.0, (3, 3, 3): 0.25, (4, 0, 0): -0.5j})
        cut, dropped = f.limit_radius(2.0)
        assert cut.as_dict() == {(1, 0, 0): 1.0}
        assert dropped == pytest.approx(0.75)

    def test_limit_radius_noop(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=0.3)
        cut, dropped = f.limit_radius(10.0)
        assert cut == f and dropped == 0.0


class TestSerialization:
    def test_roundtrip_sorted(self, rng):
        f = random_real_potential(rng, STD_PAIRS, norm=0.8)
        text = f.to_json()
        back = TrigPolynomial.from_json(text, require_real=True, require_mean_free=True)
        assert back == f
        qs = [tuple(rec["q"]) for rec in json.loads(text)]
        assert qs == sorted(qs)

    def test_rejects_zero_frequency_when_mean_free(self):
        obj = [{"q": [0, 0, 0], "re": 1.0, "im": 0.0}]
        with pytest.raises(ConfigError):
            TrigPolynomial.from_json_obj(obj, require_mean_free=True)

    def test_rejects_non_real(self):
        obj = [{"q": [1, 0, 0], "re": 1.0, "im": 0.5},
               {"q": [-1, 0, 0], "re": 1.0, "im": 0.5}]
        with pytest.raises(ConfigError):
            TrigPolynomial.from_json_obj(obj, require_real=True)

    def test_rejects_malformed_record(self):
        with pytest.raises(ConfigError):
            TrigPolynomial.from_json_obj([{"q": [1, 0], "re": 1.0, "im": 0.0}])
        with pytest.raises(ConfigError):
            TrigPolynomial.from_json_obj([{"q": [1, 0, 0], "re": 1.0}])


class TestCanonicalForm:
    def test_no_stored_zeros(self):
        f = P({(1, 0, 0): 1.0, (0, 1, 0): 0.0})
        assert len(f) == 1

    def test_duplicate_frequencies_merge(self):
        f = TrigPolynomial(np.array([[1, 0, 0], [1, 0, 0]]), np.array([1.0, 2.0]))
        assert f.as_dict() == {(1, 0, 0): 3.0}

    def test_exact_cancellation_removed(self):
        f = TrigPolynomial(np.array([[1, 0, 0], [1, 0, 0]]), np.array([1.0, -1.0]))
        assert len(f) == 0
