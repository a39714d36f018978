import cmath
import math

import mpmath as mp
import numpy as np
import pytest

from hilbert_selberg.errors import ValidationError
from hilbert_selberg.quadfield import make_field
from hilbert_selberg.specfun import (
    ZETA_PRIME_MINUS_ONE, dedekind_zeta, digamma, dirichlet_L, gamma2,
    li, log_barnes_g, loggamma2, g_nu, xi_ratio, zeta_eps, log_zeta_eps,
)

from oracles import dedekind_coeffs, li_gauss_legendre


def test_zeta_prime_minus_one_constant():
    with mp.workdps(40):
        ref = float(mp.zeta(-1, derivative=1))
    assert ZETA_PRIME_MINUS_ONE == pytest.approx(ref, abs=1e-16)


class TestBarnesDoubleGamma:
    def test_against_mpmath(self):
        pts = [0.3, 1.7, 4.2, 0.5 + 2.1j, -0.7 + 0.4j, 3.0 - 5.0j, 12.5,
               0.1 - 0.1j]
        for z in pts:
            ref = complex(mp.barnesg(mp.mpc(z)))
            got = cmath.exp(log_barnes_g(complex(z)))
            assert got == pytest.approx(ref, rel=5e-12)

    def test_gamma2_at_one(self):
        assert gamma2(1.0 + 0j) == pytest.approx(1.0, rel=1e-12)

    def test_ladder(self):
        # Gamma_2(s+1)/Gamma_2(s) = sqrt(2 pi)/Gamma(s)
        for s in (0.4, 1.3 + 0.8j, 2.6 - 1.1j, 5.5):
            lhs = gamma2(s + 1) / gamma2(s)
            with mp.workdps(30):
                rhs = complex(mp.sqrt(2 * mp.pi) / mp.gamma(mp.mpc(s)))
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_pole_guard(self):
        with pytest.raises(ValidationError):
            log_barnes_g(0.0 + 0j)
        with pytest.raises(ValidationError):
            log_barnes_g(-3.0 + 0j)

    def test_xi_ratio_closed_form(self):
        # exp(L(s+2) + L(2-s) - L(s) - L(-s)) == -4 sin^2(pi s),
        # L = log Gamma_2 shifted; the combination is branch-stable
        rng = np.random.default_rng(7)
        for _ in range(12):
            s = complex(rng.uniform(0.05, 0.45), rng.uniform(-0.5, 0.5))
            want = -4.0 * cmath.sin(cmath.pi * s) ** 2
            assert xi_ratio(s) == pytest.approx(want, rel=5e-12)

    def test_loggamma2_matches_gamma2(self):
        z = 1.3 + 0.4j
        assert cmath.exp(loggamma2(z)) == pytest.approx(gamma2(z), rel=1e-12)


class TestGnu:
    def test_degenerate_nu_one(self):
        assert g_nu(1.7 + 0.3j, 1) == pytest.approx(1.0)

    def test_nu_two_closed_form(self):
        # G_2(s) = Gamma(s/2)^{1/2} Gamma((s+1)/2)^{-1/2} ... direct product
        s = 0.3 + 0.2j
        direct = cmath.exp(
            sum((2 - 1 - 2 * l) / 2.0 * complex(mp.loggamma((s + l) / 2))
                for l in range(2)))
        assert g_nu(s, 2) == pytest.approx(direct, rel=1e-12)


class TestDirichletL:
    def test_modes_agree(self):
        for D in (5, 8, 12):
            for s in (2.0, 2.0 + 1.0j, 3.7):
                a = dirichlet_L(s, D, mode="hurwitz")
                b = dirichlet_L(s, D, mode="dirichlet")
                assert a == pytest.approx(b, rel=1e-9, abs=1e-9)

    def test_L_minus_one(self):
        # analytic continuation hits the exact rational value
        for D, val in ((5, -0.4), (8, -1.0), (12, -2.0)):
            assert dirichlet_L(-1.0, D) == pytest.approx(val, rel=1e-10)

    def test_dirichlet_mode_needs_convergence(self):
        with pytest.raises(ValidationError):
            dirichlet_L(0.5, 5, mode="dirichlet")

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            dirichlet_L(2.0, 5, mode="euler")


class TestDedekindZeta:
    def test_against_dirichlet_series(self):
        co = dedekind_coeffs(5, 30000)
        for s in (3.0, 3.0 + 0.5j):
            ref = sum(co[n] * n ** (-complex(s)) for n in range(1, 30001))
            assert dedekind_zeta(s, 5) == pytest.approx(ref, rel=1e-7)

    def test_pole_guard(self):
        with pytest.raises(ValidationError):
            dedekind_zeta(1.0, 5)


class TestDigamma:
    def test_against_mpmath(self):
        for z in (0.3, 2.0 + 1.0j, -1.5 + 0.2j, 17.0):
            assert digamma(complex(z)) == pytest.approx(
                complex(mp.digamma(mp.mpc(z))), rel=1e-12)

    def test_pole_guard(self):
        with pytest.raises(ValidationError):
            digamma(-2.0 + 0j)


class TestLi:
    def test_li_values(self):
        assert li(2.0) == pytest.approx(0.0, abs=1e-14)
        assert li(10.0) == pytest.approx(li_gauss_legendre(10.0), rel=1e-9)
        assert li(1000.0) == pytest.approx(li_gauss_legendre(1000.0),
                                           rel=1e-9)

    def test_li_domain(self):
        with pytest.raises(ValidationError):
            li(1.0)
        with pytest.raises(ValidationError):
            li(0.5)


class TestZetaEps:
    def test_geometric_series_identity(self):
        F = make_field(5, with_census=False)
        s = 1.3 + 0.7j
        eps1 = F.eps.embed(1)
        direct = sum(eps1 ** (-2 * s * k) for k in range(200))
        assert zeta_eps(s, F) == pytest.approx(direct, rel=1e-12)
        assert cmath.exp(log_zeta_eps(s, F)) == pytest.approx(
            zeta_eps(s, F), rel=1e-12)

    def test_pole_guard_names_lattice(self):
        # poles of (1 - eps^{-2s})^{-1} sit at s = i pi k / (2 log eps) * 2
        F = make_field(5, with_census=False)
        with pytest.raises(ValidationError):
            zeta_eps(complex(0.0, math.pi / F.regulator), F)
        with pytest.raises(ValidationError):
            zeta_eps(0j, F)
