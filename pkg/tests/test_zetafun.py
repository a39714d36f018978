"""Euler products, exponent tables, ledger orders, and factor identities.

Frozen integer tables below were recomputed independently with plain
modular arithmetic over the certified class census before being pinned
here; the leading coefficients come from the closed form evaluated at
30 digits.
"""

import cmath
import math
import random

import pytest

from hilbert_selberg.errors import InvariantViolation, ValidationError
from hilbert_selberg.geodesics import enumerate_geodesics
from hilbert_selberg.quadfield import make_field
from hilbert_selberg.zetafun import (AlphaTable, ZetaParams, alpha_table,
                                     completed_factors, divisor_ledger,
                                     fe_identity_checks, fe_rhs, order_at,
                                     residue_point_order, ruelle,
                                     ruelle_leading, selberg_log_deriv,
                                     selberg_zeta)

# residue-point orders at s = -k, k = 0..7
RESIDUE_ORDERS = {
    (5, 2): [4, 0, 0, 0, 0, 0, 4, 0],
    (5, 4): [-2, 0, 0, 2, 0, 2, -2, 2],
    (5, 6): [0, 0, 2, -2, 2, 0, 2, 0],
    (8, 2): [4, 0, 0, 0, 4, 0, 4, 0],
    (8, 4): [-2, 2, 0, 2, 0, 4, 0, 4],
    (8, 6): [0, -2, 4, 0, 2, 0, 4, 2],
    (12, 2): [4, 0, 2, 2, 4, 0, 8, 4],
    (12, 4): [-2, 3, 1, 3, 1, 6, 2, 7],
    (12, 6): [1, -1, 4, 0, 5, 3, 5, 3],
}

ABS_LEADING = {5: 1.6040191066934307, 8: 2.1019242122616387,
               12: 2.0857307956994519}

COVERAGE = 100.0


@pytest.fixture(scope="module")
def d5():
    F = make_field(5)
    return F, enumerate_geodesics(F, 10.0)


def test_empty_product_limit(d5):
    F, cls = d5
    v = selberg_zeta(ZetaParams(50.0 + 0j, 4, 100.0, 40), cls,
                     coverage=COVERAGE)
    assert abs(v.value - 1.0) < 1e-12


def test_weight_two_real_on_real_axis(d5):
    F, cls = d5
    v = selberg_zeta(ZetaParams(2.2 + 0j, 2, 100.0, 40), cls,
                     coverage=COVERAGE)
    assert v.value.imag == pytest.approx(0.0, abs=1e-14)
    ld = selberg_log_deriv(ZetaParams(3.0 + 0j, 2, 100.0, 40), cls,
                           coverage=COVERAGE)
    assert ld.value.imag == pytest.approx(0.0, abs=1e-14)


def test_log_deriv_matches_finite_difference(d5):
    F, cls = d5
    h = 1e-4
    rng = random.Random(7)
    points = [(2.5 + 0j, 4)]
    for _ in range(10):
        s = complex(rng.uniform(1.5, 3.0), rng.uniform(-1.0, 1.0))
        points.append((s, rng.choice([2, 4, 6])))
    for s, m in points:
        p = ZetaParams(s, m, 100.0, 60)
        f = lambda z: selberg_zeta(
            ZetaParams(z, m, 100.0, 60), cls, coverage=COVERAGE).log_value
        fd = (f(s + h) - f(s - h)) / (2.0 * h)
        ld = selberg_log_deriv(p, cls, coverage=COVERAGE).value
        assert abs(fd - ld) <= 1e-6 * abs(ld)


def test_log_deriv_decays_far_right(d5):
    F, cls = d5
    v = selberg_log_deriv(ZetaParams(40.0 + 0j, 4, 100.0, 40), cls,
                          coverage=COVERAGE)
    assert abs(v.value) < 1e-15


def test_deeper_inner_product_stays_within_tail(d5):
    F, cls = d5
    a = selberg_zeta(ZetaParams(2.0 + 0.5j, 4, 100.0, 8), cls,
                     coverage=COVERAGE)
    b = selberg_zeta(ZetaParams(2.0 + 0.5j, 4, 100.0, 16), cls,
                     coverage=COVERAGE)
    assert abs(a.log_value - b.log_value) <= a.tail_bound


def test_conjugation_symmetry(d5):
    F, cls = d5
    rng = random.Random(11)
    for m in (2, 4, 6):
        s = complex(rng.uniform(1.5, 3.0), rng.uniform(0.2, 1.5))
        za = selberg_zeta(ZetaParams(s, m, 100.0, 40), cls,
                          coverage=COVERAGE)
        zb = selberg_zeta(ZetaParams(s.conjugate(), m, 100.0, 40), cls,
                          coverage=COVERAGE)
        assert abs(za.value - zb.value.conjugate()) < 1e-12 * abs(za.value)


def test_weight_reflection_at_two(d5):
    # m = 2 is the self-paired weight: Z(s;2) = conj(Z(conj(s); 4-2))
    F, cls = d5
    s = 1.8 + 0.9j
    za = selberg_zeta(ZetaParams(s, 2, 100.0, 40), cls, coverage=COVERAGE)
    zb = selberg_zeta(ZetaParams(s.conjugate(), 2, 100.0, 40), cls,
                      coverage=COVERAGE)
    assert abs(za.value - zb.value.conjugate()) < 1e-12 * abs(za.value)


def test_domain_and_window_errors(d5):
    F, cls = d5
    with pytest.raises(ValidationError):
        selberg_zeta(ZetaParams(0.8 + 0j, 4, 100.0, 40), cls,
                     coverage=COVERAGE)
    with pytest.raises(ValidationError):
        selberg_log_deriv(ZetaParams(1.0 + 2j, 4, 100.0, 40), cls,
                          coverage=COVERAGE)
    # window reaching past what the class list covers
    with pytest.raises(ValidationError):
        selberg_zeta(ZetaParams(2.5 + 0j, 4, 400.0, 40), cls,
                     coverage=COVERAGE)
    with pytest.raises(ValidationError):
        ZetaParams(2.5 + 0j, 3, 100.0, 40).validate()
    with pytest.raises(ValidationError):
        ZetaParams(2.5 + 0j, 4, 100.0, -1).validate()


def test_ruelle_dual_evaluation(d5):
    F, cls = d5
    rng = random.Random(3)
    for _ in range(10):
        s = complex(rng.uniform(1.5, 3.5), rng.uniform(-1.0, 1.0))
        r = ruelle(s, cls, coverage=COVERAGE)
        assert abs(r.value - r.direct) <= r.tail_bound + 1e-11 * abs(r.value)
    r = ruelle(2.2 + 0j, cls, coverage=COVERAGE)
    assert r.value.imag == pytest.approx(0.0, abs=1e-14)
    far = ruelle(50.0 + 0j, cls, coverage=COVERAGE)
    assert abs(far.value - 1.0) < 1e-12


def test_alpha_table_weight_two_collapses():
    F = make_field(5)
    tab = alpha_table(2, F)
    for j, e in enumerate(tab.entries):
        assert e.alpha == tuple(range(e.nu))
        assert e.alpha_bar == tuple(range(e.nu))
        for k in range(12):
            assert tab.beta(k, j) == 0


def test_alpha_table_frozen_rows():
    F = make_field(5)
    tab = alpha_table(4, F)
    rows = {(e.nu, e.t): (e.alpha, e.alpha_bar) for e in tab.entries}
    assert rows[(2, 1)] == ((1, 0), (1, 0))
    assert rows[(3, 1)] == ((1, 2, 0), (2, 0, 1))
    assert rows[(5, 3)] == ((3, 4, 0, 1, 2), (2, 3, 4, 0, 1))
    # the order-two class at weight 4, depth 0
    j2 = next(i for i, e in enumerate(tab.entries) if e.nu == 2)
    assert tab.beta(0, j2) == 1
    assert tab.beta_sum(0) == 6
    assert [tab.beta_sum(k) for k in range(4)] == [6, 0, 0, -2]


@pytest.mark.parametrize("D", [5, 8, 12])
@pytest.mark.parametrize("m", [2, 4, 6, 8])
def test_beta_integrality_sweep(D, m):
    tab = alpha_table(m, make_field(D))
    for j, e in enumerate(tab.entries):
        for k in range(51):
            b = tab.beta(k, j)
            assert isinstance(b, int)
            assert (e.alpha[k % e.nu] + e.alpha_bar[k % e.nu]
                    - 2 * (k % e.nu)) % e.nu == 0


@pytest.mark.parametrize("D", [5, 8, 12])
@pytest.mark.parametrize("m", [2, 4, 6])
def test_residue_orders_frozen(D, m):
    F = make_field(D)
    got = [residue_point_order(k, m, F) for k in range(8)]
    assert got == RESIDUE_ORDERS[(D, m)]


def test_ledger_weight_two():
    F = make_field(5)
    led = divisor_ledger(2, F, k_max=8)
    assert order_at(led, 1.0 + 0j) == -2
    assert [order_at(led, complex(-k, 0)) for k in range(7)] == \
        [4, 0, 0, 0, 0, 0, 4]
    spacing = math.pi / F.regulator
    assert order_at(led, complex(0.0, spacing)) == 2
    assert order_at(led, complex(0.0, -3 * spacing)) == 2
    # the lattice is symbolic: far beyond k_max still answers
    assert order_at(led, complex(0.0, 10000 * spacing)) == 2
    assert order_at(led, 0.37 + 0.4j) == 0


def test_ledger_weight_four_coincidences():
    F = make_field(5)
    led = divisor_ledger(4, F, k_max=8)
    spacing = math.pi / F.regulator
    # s=0: residue -2, pole lattice -1, extra zero +1
    assert order_at(led, 0.0 + 0j) == -2
    # s=-1: residue 0 plus the zero-lattice base point
    assert order_at(led, -1.0 + 0j) == 1
    assert order_at(led, -2.0 + 0j) == 0
    assert order_at(led, -3.0 + 0j) == 2
    # s=1: only the extra simple zero lives there
    assert order_at(led, 1.0 + 0j) == 1
    assert order_at(led, complex(-1.0, spacing)) == 1
    assert order_at(led, complex(0.0, spacing)) == -1


def test_ledger_weight_six():
    F = make_field(5)
    led = divisor_ledger(6, F, k_max=8)
    assert order_at(led, 0.0 + 0j) == 0
    assert order_at(led, -1.0 + 0j) == -1
    assert order_at(led, -2.0 + 0j) == 3
    assert all(isinstance(e.order, int) for e in led.entries)


def test_ledger_json_shape():
    F = make_field(5)
    led = divisor_ledger(2, F, k_max=4)
    doc = led.to_json()
    assert doc["m"] == 2 and doc["D"] == 5
    assert doc["lattice_spacing"] == pytest.approx(math.pi / F.regulator)
    kinds = {e["kind"] for e in doc["entries"]}
    assert kinds == {"point", "lattice"}


@pytest.mark.parametrize("D", [5, 8, 12])
def test_leading_term_frozen(D):
    out = ruelle_leading(make_field(D))
    assert out["n0"] == 6
    assert out["abs_leading"] == pytest.approx(ABS_LEADING[D], rel=1e-12)


def test_leading_term_prefactors():
    assert ruelle_leading(make_field(5))["stabilizer_product"] == 900
    assert ruelle_leading(make_field(8))["stabilizer_product"] == 576
    assert ruelle_leading(make_field(12))["stabilizer_product"] == 432


def test_completed_factors_structure(d5):
    F, _ = d5
    s = 2.3 + 0.4j
    out = completed_factors(s, 4, F)
    assert set(out) == {"Z_id", "Z_ell", "Z_par_sct", "Z_hyp2_sct"}
    assert out["Z_par_sct"] == 1.0 + 0.0j
    mirror = completed_factors(s.conjugate(), 4, F)
    for key in out:
        assert abs(out[key] - mirror[key].conjugate()) \
            < 1e-10 * (1.0 + abs(out[key]))


def test_completed_factors_weight_two(d5):
    F, _ = d5
    s = 1.7 + 0j
    out = completed_factors(s, 2, F)
    assert out["Z_par_sct"] == pytest.approx(math.exp(-2 * 1.7 * F.regulator))
    from hilbert_selberg.specfun import zeta_eps
    assert out["Z_hyp2_sct"] == pytest.approx(zeta_eps(s, F) ** 2)
    # weight-two exponents collapse to (nu - 1 - 2l)/nu
    tab = alpha_table(2, F)
    for e in tab.entries:
        for l in range(e.nu):
            got = (e.nu - 1 - e.alpha[l] - e.alpha_bar[l]) / e.nu
            assert got == pytest.approx((e.nu - 1 - 2 * l) / e.nu)


def test_completed_factors_pole_reports(d5):
    F, _ = d5
    with pytest.raises(ValidationError):
        completed_factors(0.0 + 0j, 2, F)
    with pytest.raises(ValidationError):
        completed_factors(3.0 + 0j, 3, F)


def test_fe_rhs_even_and_vanishing(d5):
    F, _ = d5
    rng = random.Random(5)
    for _ in range(8):
        s = complex(rng.uniform(0.05, 0.45), rng.uniform(-0.6, 0.6))
        a, b = fe_rhs(s, F), fe_rhs(-s, F)
        assert abs(a - b) <= 1e-9 * (1.0 + abs(a))
    fit = (math.log(abs(fe_rhs(0.02 + 0j, F)))
           - math.log(abs(fe_rhs(0.01 + 0j, F)))) / math.log(2.0)
    n0 = ruelle_leading(F)["n0"]
    assert abs(fit - 2 * n0) < 0.05
    with pytest.raises(ValidationError):
        fe_rhs(1.0 + 0j, F)


def test_fe_identity_checks(d5):
    F, _ = d5
    report = fe_identity_checks(F, n_points=20, nus=(2, 3, 5, 6))
    assert report["xi_max_err"] <= 1e-8
    assert report["gnu_ratio_max_err"] <= 1e-8
