import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hilbert_selberg.errors import ValidationError
from hilbert_selberg.quadfield import (
    CLASS_NUMBER_ONE, FieldCtx, QuadInt, canonical_disc, chi_D,
    format_quadint, fundamental_unit, is_fundamental_discriminant,
    kronecker, lattice_points, make_field, parse_quadint, sigma1,
    unit_reduce, zeta_minus_one, bernoulli_L_minus_one,
)

from oracles import kronecker_ref, L_minus_one_ref, zeta_K_minus_one_ref


# frozen from the generalized Bernoulli route (independent oracle)
ZETA_MINUS_ONE = {
    5: Fraction(1, 30), 8: Fraction(1, 12), 12: Fraction(1, 6),
    13: Fraction(1, 6), 17: Fraction(1, 3), 21: Fraction(1, 3),
    24: Fraction(1, 2), 28: Fraction(2, 3), 44: Fraction(7, 6),
    97: Fraction(17, 3),
}

# frozen minimal totally positive-norm units, coordinates over (1, omega)
FUNDAMENTAL_UNITS = {
    5: (0, 1), 8: (1, 1), 12: (2, 1), 13: (1, 1), 17: (3, 2),
    21: (2, 1), 24: (5, 2), 28: (8, 3), 44: (10, 3), 97: (5035, 1138),
}


def coords(D):
    return st.builds(QuadInt, st.just(D),
                     st.integers(-50, 50), st.integers(-50, 50))


class TestQuadIntRing:
    @given(x=coords(5), y=coords(5), z=coords(5))
    @settings(max_examples=150)
    def test_ring_axioms(self, x, y, z):
        assert (x + y) * z == x * z + y * z
        assert (x * y) * z == x * (y * z)
        assert x * y == y * x
        assert x + (y + z) == (x + y) + z

    @given(x=coords(13), y=coords(13))
    @settings(max_examples=150)
    def test_norm_trace_conj(self, x, y):
        assert (x * y).norm() == x.norm() * y.norm()
        assert (x + y).trace() == x.trace() + y.trace()
        assert (x * y).conj() == x.conj() * y.conj()
        assert x * x.conj() == QuadInt(13, x.norm(), 0)

    @given(x=coords(8))
    @settings(max_examples=100)
    def test_embeddings_match_invariants(self, x):
        e1, e2 = x.embed(1), x.embed(2)
        assert e1 + e2 == pytest.approx(float(x.trace()), abs=1e-9)
        assert e1 * e2 == pytest.approx(float(x.norm()), rel=1e-9, abs=1e-9)

    def test_exact_sign_on_near_zero_values(self):
        # Fibonacci convergents make a + b*omega nearly vanish at slot 1
        fib = [1, 1]
        while len(fib) < 40:
            fib.append(fib[-1] + fib[-2])
        for k in range(10, 38):
            x = QuadInt(5, fib[k], -fib[k - 1])
            import mpmath as mp
            with mp.workdps(60):
                ref = mp.sign(fib[k] - fib[k - 1] * (1 + mp.sqrt(5)) / 2)
            assert x.sign_embed(1) == int(ref)

    @given(x=coords(12), y=coords(12))
    @settings(max_examples=100)
    def test_round_div_remainder_small(self, x, y):
        if y.is_zero():
            return
        q = x.round_div(y)
        r = x - q * y
        # nearest-lattice rounding keeps both embeddings of r/y below 1
        ny = abs(y.norm())
        assert abs(r.norm()) <= ny  # norm-Euclidean bound with slack

    def test_powers_and_unit_inverse(self):
        F = make_field(8, with_census=False)
        eps = F.eps
        assert eps ** 3 == eps * eps * eps
        assert (eps ** -2) * eps ** 2 == F.one
        with pytest.raises(ValidationError):
            QuadInt(8, 2, 0).inverse_unit()


class TestFormatting:
    def test_round_trip(self):
        for text in ("0", "1", "-1", "w", "-w", "1+8*w", "3-2*w", "-5+w"):
            x = parse_quadint(text, 5)
            assert parse_quadint(format_quadint(x), 5) == x

    def test_explicit_format(self):
        assert format_quadint(QuadInt(5, 1, 8), explicit=True) == "1+8*w"
        assert format_quadint(QuadInt(5, 3, 0), explicit=True) == "3+0*w"
        assert format_quadint(QuadInt(5, 0, 1)) == "w"

    def test_rejects_garbage(self):
        for bad in ("", "1+", "w*w", "2.5", "1 + 2w"):
            with pytest.raises(ValidationError):
                parse_quadint(bad, 5)


class TestFieldConstants:
    def test_discriminant_whitelist(self):
        assert 5 in CLASS_NUMBER_ONE and 97 in CLASS_NUMBER_ONE
        assert 40 not in CLASS_NUMBER_ONE  # class number 2
        for D in CLASS_NUMBER_ONE:
            assert is_fundamental_discriminant(D)

    def test_zeta_minus_one_frozen(self):
        for D, val in ZETA_MINUS_ONE.items():
            assert zeta_minus_one(D) == val

    def test_zeta_minus_one_dual_route(self):
        # lattice-sum route against the Bernoulli route, all fields
        for D in sorted(CLASS_NUMBER_ONE):
            lhs = zeta_minus_one(D)
            rhs = Fraction(-1, 12) * bernoulli_L_minus_one(D)
            assert lhs == rhs, D

    def test_L_minus_one_against_oracle(self):
        for D in (5, 8, 12, 17, 29, 41):
            assert bernoulli_L_minus_one(D) == L_minus_one_ref(D)
            assert zeta_minus_one(D) == zeta_K_minus_one_ref(D)

    def test_kronecker_against_oracle(self):
        for D in (5, 8, 12, 13):
            chi = chi_D(D)
            for a in range(1, 60):
                assert kronecker(D, a) == kronecker_ref(D, a)
                assert chi(a) == kronecker_ref(D, a)

    def test_chi_vanishes_on_common_factors(self):
        assert chi_D(5)(10) == 0
        assert chi_D(12)(6) == 0

    def test_sigma1(self):
        assert sigma1(1) == 1
        assert sigma1(6) == 12
        assert sigma1(12) == 28


class TestUnits:
    def test_frozen_units(self):
        for D, (a, b) in FUNDAMENTAL_UNITS.items():
            assert fundamental_unit(D) == QuadInt(D, a, b)

    def test_unit_properties(self):
        for D in sorted(CLASS_NUMBER_ONE):
            eps = fundamental_unit(D)
            assert abs(eps.norm()) == 1
            assert eps.embed(1) > 1.0

    def test_minimality_by_scan(self):
        # any unit strictly between 1 and eps at slot 1 would show up as
        # a solution of y^2 D = x^2 -+ 4 with smaller height
        for D in (5, 8, 12, 13, 17):
            eps = fundamental_unit(D)
            e1 = eps.embed(1)
            found = []
            for b in range(1, 2000):
                for shift in (-4, 4):
                    x2 = b * b * D + shift
                    if x2 <= 0:
                        continue
                    a = math.isqrt(x2)
                    if a * a == x2:
                        found.append((a + b * math.sqrt(D)) / 2.0)
            assert found and min(found) == pytest.approx(e1, rel=1e-12)


class TestFieldCtx:
    def test_make_field_rejects_bad_discriminants(self):
        with pytest.raises(ValidationError):
            make_field(6)
        with pytest.raises(ValidationError):
            make_field(16)
        with pytest.raises(ValidationError):
            make_field(40)

    def test_regulator(self):
        F = make_field(12, with_census=False)
        assert F.regulator == pytest.approx(math.log(2.0 + math.sqrt(3.0)))

    def test_census_and_euler_characteristic(self):
        expected = {
            5: (2, 2, 3, 3, 5, 5),
            8: (2, 2, 3, 3, 4, 4),
            12: (2, 2, 2, 3, 3, 6),
        }
        for D, orders in expected.items():
            F = make_field(D)
            got = tuple(sorted(nu for nu, _ in F.census_classes()))
            assert got == orders
            assert F.euler_char == 4

    def test_census_unavailable_elsewhere(self):
        F = make_field(13, with_census=False)
        assert F.elliptic_census is None
        assert F.euler_char is None

    def test_field_json(self):
        F = make_field(5)
        blob = F.to_json()
        assert blob["D"] == 5
        assert blob["zeta_minus_one"] == "1/30"
        assert blob["eps"] == [0, 1]


class TestCanonicalization:
    def test_unit_reduce_window_and_idempotence(self):
        F = make_field(8, with_census=False)
        eps1 = F.eps.embed(1)
        for x in (QuadInt(8, 7, 3), QuadInt(8, -5, 2), QuadInt(8, 1, -9),
                  QuadInt(8, 123, -45)):
            y = unit_reduce(x, F)
            assert 1.0 - 1e-12 <= y.embed(1) < eps1 + 1e-12
            assert unit_reduce(y, F) == y
            ratio_norm = abs(x.norm()) == abs(y.norm())
            assert ratio_norm

    def test_canonical_disc_stable_under_square_units(self):
        F = make_field(12, with_census=False)
        eps2 = F.eps * F.eps
        d = QuadInt(12, 13, 4)
        base = canonical_disc(d, F)
        assert canonical_disc(d * eps2, F) == base
        assert canonical_disc(d * eps2 * eps2, F) == base

    def test_lattice_points_box(self):
        pts = list(lattice_points(5, 3.0, 3.0))
        assert len(pts) == len(set((p.a, p.b) for p in pts))
        for p in pts:
            assert abs(p.embed(1)) <= 3.0 + 1e-9
            assert abs(p.embed(2)) <= 3.0 + 1e-9
        assert QuadInt(5, 1, 1) in pts
