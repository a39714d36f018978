"""Primitive hyperbolic-elliptic classes ordered by norm, with
prime-geodesic and class-number-average count reports.

A class of norm eps^2 and rotation angle w0 has a trace t0 whose
embeddings are eps + 1/eps and 2*cos(w0), so everything with eps <= x
lives over a finite trace box.  Each trace t feeds the discriminant
pipeline through t^2 - d*u^2 = 4: square divisors u^2 are peeled off
t^2 - 4 and every mixed-sign quotient is a candidate discriminant.
The Pell step recovers the true fundamental solution, which may be
smaller than the (t, u) pair that produced the candidate.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .errors import BudgetExceededError, ValidationError
from .pellforms import (DiscriminantRecord, class_number, in_Dpm,
                        pell_fundamental)
from .quadfield import FieldCtx, QuadInt, canonical_disc, lattice_points
from .specfun import li

__all__ = [
    "GeodesicClass", "CountReport", "square_divisor_quotients",
    "enumerate_geodesics", "pgt_report", "class_average_report",
]


@dataclass(frozen=True)
class GeodesicClass:
    """A family of primitive hyperbolic-elliptic conjugacy classes
    sharing one canonical discriminant.

    multiplicity counts the form classes of d, each contributing one
    conjugacy class with the same norm and angle.
    """

    d: QuadInt
    norm: float
    angle: float
    multiplicity: int
    record: DiscriminantRecord

    def __post_init__(self) -> None:
        if not self.norm > 1.0:
            raise ValidationError("class norm must exceed 1")
        if not 0.0 < self.angle < math.pi:
            raise ValidationError("rotation angle must lie in (0, pi)")
        if self.multiplicity < 1:
            raise ValidationError("multiplicity must be positive")

    @property
    def log_eps(self) -> float:
        return 0.5 * math.log(self.norm)


@dataclass(frozen=True)
class CountReport:
    """Counting sums at a cutoff x, with the smooth main terms.

    main_terms is (x^2, 2*li(x^2)).  The named entries in residuals
    record which main term each sum was compared against; secondary
    terms from small eigenvalues are not modelled, so residuals are
    informational rather than asserted.
    """

    x: float
    psi_sum: float
    pi_sum: int
    main_terms: Tuple[float, float]
    residuals: Dict[str, float]


def square_divisor_quotients(P: QuadInt, F: FieldCtx) -> List[QuadInt]:
    """Quotients P / u^2 over square divisors u^2 of P, one u per
    associate window (unit-square twins collapse downstream under
    discriminant canonicalization).  P itself is always included."""
    D = F.D
    out = [P]
    N = abs(P.norm())
    eps1 = math.exp(F.regulator)
    k = 2
    while k * k <= N:
        if N % (k * k) == 0:
            root = math.sqrt(k)
            for u in lattice_points(D, root * eps1 + 0.5, root + 0.5):
                if u.is_zero() or abs(u.norm()) != k:
                    continue
                uu = u * u
                if uu.divides(P):
                    out.append(P.exact_div(uu))
        k += 1
    return out


def enumerate_geodesics(F: FieldCtx, x: float, height: float = 8.0,
                        trace_bound: float = None) -> List[GeodesicClass]:
    """All classes with eps_K(d) <= x, sorted by norm.

    trace_bound overrides the first-embedding box edge x + 1/x; any
    larger value returns the identical list, since candidates whose
    fundamental solution lands outside eps <= x are filtered after the
    Pell step.  On a budget error the exception carries the classes
    found so far in .partial and .incomplete = True.
    """
    if x < 1.0:
        raise ValidationError("geodesic cutoff needs x >= 1")
    D = F.D
    four = QuadInt(D, 4, 0)
    bound1 = x + 1.0 / x if trace_bound is None else float(trace_bound)
    cands: Dict[Tuple[int, int], QuadInt] = {}
    for t in lattice_points(D, bound1, 2.0):
        if t.embed(1) <= 2.0 or abs(t.embed(2)) >= 2.0:
            continue
        P = t * t - four
        for d in square_divisor_quotients(P, F):
            if not in_Dpm(d, F):
                continue
            dc = canonical_disc(d, F)
            cands.setdefault((dc.a, dc.b), dc)
    classes: List[GeodesicClass] = []
    pell_cap = max(2.0 * x, 25.0)
    try:
        for key in sorted(cands):
            dc = cands[key]
            try:
                pell = pell_fundamental(dc, F, eps_cap=pell_cap)
            except BudgetExceededError:
                # fundamental solution beyond 2x: class is out of range
                continue
            if pell.eps_d > x * (1.0 + 1e-12):
                continue
            rec = class_number(dc, F, height=height)
            t2 = rec.pell.t0.embed(2)
            classes.append(GeodesicClass(
                d=rec.d, norm=rec.pell.eps_d ** 2,
                angle=math.acos(t2 / 2.0),
                multiplicity=rec.class_number, record=rec))
    except BudgetExceededError as exc:
        exc.partial = tuple(sorted(classes, key=lambda c: (c.norm, c.d.a)))
        exc.incomplete = True
        raise
    classes.sort(key=lambda c: (c.norm, c.d.a, c.d.b))
    return classes


def _report(x: float, classes: Sequence[GeodesicClass],
            geodesic_scale: bool) -> CountReport:
    sub = [c for c in classes if c.norm <= x * x * (1.0 + 1e-12)]
    base = sum(c.multiplicity * math.log(c.norm) for c in sub)
    psi = base if geodesic_scale else 0.5 * base
    pi_sum = sum(c.multiplicity for c in sub)
    X = x * x
    li_main = 2.0 * li(X)
    psi_main = 2.0 * X if geodesic_scale else X
    residuals = {
        "psi_main": psi_main,
        "psi_resid": psi - psi_main,
        "psi_ratio": psi / psi_main,
        "pi_main": li_main,
        "pi_resid": pi_sum - li_main,
        "pi_ratio": pi_sum / li_main if li_main != 0.0 else math.inf,
    }
    return CountReport(x=x, psi_sum=psi, pi_sum=pi_sum,
                       main_terms=(X, li_main), residuals=residuals)


def pgt_report(F: FieldCtx, x_grid: Sequence[float],
               height: float = 8.0) -> List[CountReport]:
    """Geodesic-side counts on a grid: psi_sum = sum h(d) log N(p)
    over N(p) <= x^2, against main term 2x^2; pi_sum against 2 li(x^2)."""
    xs = sorted(float(x) for x in x_grid)
    if not xs:
        return []
    if xs[0] <= 1.0:
        raise ValidationError("report grid needs x > 1")
    classes = enumerate_geodesics(F, xs[-1], height=height)
    return [_report(x, classes, geodesic_scale=True) for x in xs]


def class_average_report(F: FieldCtx, x: float,
                         height: float = 8.0) -> CountReport:
    """Discriminant-side counts: psi_sum = sum h(d) log eps(d) over
    eps(d) <= x, against main term x^2; pi_sum against 2 li(x^2)."""
    if x <= 1.0:
        raise ValidationError("report cutoff needs x > 1")
    classes = enumerate_geodesics(F, x, height=height)
    return _report(x, classes, geodesic_scale=False)
