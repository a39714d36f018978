"""Binary quadratic forms over O_K, Pell equations, and class numbers.

A discriminant here is a totally mixed-sign element d of O_K (positive
at the first embedding, negative at the second) that is congruent to a
square mod 4.  For each such d the forms a x^2 + b xy + c y^2 with
b^2 - 4ac = d fall into finitely many SL(2, O_K)-orbits; the class
number h_K(d) is computed twice, by a direct orbit partition of the
forms and by counting matrix conjugacy classes through the stabilizer
generator map, and the two counts must agree.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .errors import BudgetExceededError, InvariantViolation, ValidationError
from .modgroup import GroupElem, Key, conjugation_orbit, _normalize_key
from .quadfield import (FieldCtx, QuadInt, canonical_disc, lattice_points,
                        _omega_trace_norm)

__all__ = [
    "FormOverOK", "PellSolution", "DiscriminantRecord", "content",
    "euclid_gcd", "in_Dpm", "pell_fundamental", "class_number",
    "form_to_matrix", "enumerate_forms",
]


# ------------------------------------------------------------ gcd helpers


def euclid_gcd(x: QuadInt, y: QuadInt, max_steps: int = 200) -> QuadInt:
    """gcd in O_K by nearest-lattice division with a neighbor rescue.

    Nearest rounding strictly shrinks |N(r)| in the norm-Euclidean
    fields; elsewhere a small offset scan usually rescues the step, and
    a budget error is raised if it cannot.
    """
    if x.D != y.D:
        raise ValidationError("gcd of elements from different fields")
    D = x.D
    for _ in range(max_steps):
        if y.is_zero():
            return x
        q = x.round_div(y)
        r = x - q * y
        if abs(r.norm()) >= abs(y.norm()):
            best = None
            for da in (-1, 0, 1):
                for db in (-1, 0, 1):
                    q2 = q + QuadInt(D, da, db)
                    r2 = x - q2 * y
                    if best is None or abs(r2.norm()) < abs(best.norm()):
                        best = r2
            r = best
            if abs(r.norm()) >= abs(y.norm()):
                raise BudgetExceededError(
                    f"euclidean step stalled for D={D}; "
                    "field may not admit nearest-lattice division")
        x, y = y, r
    raise BudgetExceededError("gcd iteration budget exhausted")


def content(a: QuadInt, b: QuadInt, c: QuadInt) -> QuadInt:
    """gcd of the three coefficients (any associate)."""
    g = euclid_gcd(a, b)
    return euclid_gcd(g, c)


def _is_unit(x: QuadInt) -> bool:
    return not x.is_zero() and abs(x.norm()) == 1


# ------------------------------------------------------------ form type


FormKey = Tuple[int, int, int, int, int, int]


@dataclass(frozen=True)
class FormOverOK:
    """Primitive binary quadratic form a x^2 + b xy + c y^2 over O_K."""

    a: QuadInt
    b: QuadInt
    c: QuadInt

    def __post_init__(self):
        if not (self.a.D == self.b.D == self.c.D):
            raise ValidationError("form coefficients from different fields")
        if not _is_unit(content(self.a, self.b, self.c)):
            raise ValidationError("form is not primitive")

    @property
    def disc(self) -> QuadInt:
        return self.b * self.b - 4 * (self.a * self.c)

    def key(self) -> FormKey:
        return (self.a.a, self.a.b, self.b.a, self.b.b, self.c.a, self.c.b)

    @staticmethod
    def from_key(key: FormKey, D: int) -> "FormOverOK":
        aa, ab, ba, bb, ca, cb = key
        return FormOverOK(QuadInt(D, aa, ab), QuadInt(D, ba, bb),
                          QuadInt(D, ca, cb))


@dataclass(frozen=True)
class PellSolution:
    """Fundamental solution of t^2 - d u^2 = 4 with eps_d > 1."""

    d: QuadInt
    t0: QuadInt
    u0: QuadInt

    @property
    def eps_d(self) -> float:
        return (self.t0.embed(1)
                + self.u0.embed(1) * math.sqrt(self.d.embed(1))) / 2.0

    def verify(self) -> None:
        lhs = self.t0 * self.t0 - self.d * (self.u0 * self.u0)
        if lhs != QuadInt(self.d.D, 4, 0):
            raise InvariantViolation("pell relation violated")
        if self.u0.is_zero() or self.eps_d <= 1.0:
            raise InvariantViolation("pell solution not fundamental-shaped")


@dataclass(frozen=True)
class DiscriminantRecord:
    """Canonical discriminant with its Pell data and class census."""

    d: QuadInt
    pell: PellSolution
    class_number: int
    forms: Tuple[FormOverOK, ...]

    def __post_init__(self):
        if self.class_number != len(self.forms) or self.class_number < 1:
            raise InvariantViolation("class count does not match reps")


# ------------------------------------------------------- membership test


def _square_in_OK(d: QuadInt) -> Optional[QuadInt]:
    """Exact square root of d in O_K if one exists."""
    e1, e2 = d.embed(1), d.embed(2)
    if e1 < 0 or e2 < 0:
        return None
    t, _ = _omega_trace_norm(d.D)
    sq = math.sqrt(d.D)
    r1 = math.sqrt(e1)
    for s2 in (math.sqrt(e2), -math.sqrt(e2)):
        bf = (r1 - s2) / sq
        af = r1 - bf * (t + sq) / 2.0
        for aa in (math.floor(af), math.ceil(af)):
            for bb in (math.floor(bf), math.ceil(bf)):
                x = QuadInt(d.D, int(aa), int(bb))
                if x * x == d:
                    return x
    return None


def in_Dpm(d: QuadInt, F: Optional[FieldCtx] = None) -> bool:
    """Membership in the mixed-sign discriminant set.

    Requires embed(d,1) > 0 > embed(d,2), d not a square, and a witness
    b with d = b^2 (mod 4).  Since b^2 mod 4 only depends on b mod 2,
    the witness search runs over the four residues of O_K / 2O_K; this
    is equivalent to scanning all sixteen residues mod 4.
    """
    if d.sign_embed(1) <= 0 or d.sign_embed(2) >= 0:
        return False
    # the sign pattern already excludes squares; keep the check explicit
    if _square_in_OK(d) is not None:
        return False
    D = d.D
    four = QuadInt(D, 4, 0)
    for ba in (0, 1):
        for bb in (0, 1):
            b = QuadInt(D, ba, bb)
            if four.divides(d - b * b):
                return True
    return False


def _witness_b(d: QuadInt) -> QuadInt:
    D = d.D
    four = QuadInt(D, 4, 0)
    for ba in (0, 1):
        for bb in (0, 1):
            b = QuadInt(D, ba, bb)
            if four.divides(d - b * b):
                return b
    raise ValidationError(f"{d} has no square residue witness mod 4")


# ---------------------------------------------------------- Pell solver


def pell_fundamental(d: QuadInt, F: FieldCtx,
                     eps_cap: float = 200.0) -> PellSolution:
    """Minimal solution of t^2 - d u^2 = 4 with (t + u sqrt d)/2 > 1.

    The second embedding forces t'^2 + |d'| u'^2 = 4, so |u'| lives in
    a fixed tiny interval; the first is bounded through the eps cap.
    """
    if not in_Dpm(d, F):
        raise ValidationError(f"{d} is not a mixed-sign discriminant")
    D = d.D
    d1, d2 = d.embed(1), d.embed(2)
    cap1 = 2.0 * eps_cap / math.sqrt(d1)
    cap2 = 2.0 / math.sqrt(-d2) + 1e-9
    four = QuadInt(D, 4, 0)
    t, _ = _omega_trace_norm(D)
    sq = math.sqrt(D)
    w1, w2 = (t + sq) / 2.0, (t - sq) / 2.0
    best: Optional[Tuple[float, QuadInt, QuadInt]] = None
    for u in lattice_points(D, cap1, cap2):
        if u.is_zero() or u.embed(1) <= 0:
            continue
        rhs = d * (u * u) + four
        e1, e2 = rhs.embed(1), rhs.embed(2)
        if e1 < 0 or e2 < 0:
            continue
        r1 = math.sqrt(e1)
        r2 = math.sqrt(e2)
        for s2 in (r2, -r2):
            bf = (r1 - s2) / sq
            af = r1 - bf * w1
            cand = QuadInt(D, round(af), round(bf))
            if cand * cand != rhs:
                continue
            t0 = cand if cand.sign_embed(1) > 0 else -cand
            eps = (t0.embed(1) + u.embed(1) * math.sqrt(d1)) / 2.0
            if eps <= 1.0 + 1e-12:
                continue
            if best is None or eps < best[0] - 1e-12:
                best = (eps, t0, u)
    if best is None:
        raise BudgetExceededError(
            f"no pell solution for {d} within eps <= {eps_cap}")
    sol = PellSolution(d=d, t0=best[1], u0=best[2])
    sol.verify()
    return sol


# --------------------------------------------------------- form orbits


def _form_neighbors(key: FormKey, D: int, t: int, n: int) -> List[FormKey]:
    """Images of the form under the translation and swap generators.

    (a, b, c) -> (a, b + 2 a mu, c + b mu + a mu^2)   [x -> x + mu y]
    (a, b, c) -> (c, -b, a)                            [x,y -> -y,x]
    """
    aa, ab, ba, bb, ca, cb = key

    def mul(xa, xb, ya, yb):
        bd = xb * yb
        return xa * ya - n * bd, xa * yb + xb * ya + t * bd

    out = [(ca, cb, -ba, -bb, aa, ab)]
    for ma, mb in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        m2a, m2b = mul(ma, mb, ma, mb)
        ta, tb = mul(2 * aa, 2 * ab, ma, mb)
        bma, bmb = mul(ba, bb, ma, mb)
        am2a, am2b = mul(aa, ab, m2a, m2b)
        out.append((aa, ab, ba + ta, bb + tb,
                    ca + bma + am2a, cb + bmb + am2b))
    return out


def _form_heights_ok(key: FormKey, w1: float, w2: float,
                     cap1: float, cap2: float) -> bool:
    for i in range(3):
        x, y = key[2 * i], key[2 * i + 1]
        if abs(x + y * w1) > cap1 or abs(x + y * w2) > cap2:
            return False
    return True


def form_orbit(seed: FormKey, D: int, cap1: float, cap2: float,
               max_states: int = 400000) -> Set[FormKey]:
    """Height-capped BFS orbit of the form under the generator action."""
    t, n = _omega_trace_norm(D)
    sq = math.sqrt(D)
    w1, w2 = (t + sq) / 2.0, (t - sq) / 2.0
    visited = {seed}
    frontier = [seed]
    while frontier:
        nxt: List[FormKey] = []
        for key in frontier:
            for nb in _form_neighbors(key, D, t, n):
                if nb in visited or \
                        not _form_heights_ok(nb, w1, w2, cap1, cap2):
                    continue
                visited.add(nb)
                nxt.append(nb)
                if len(visited) > max_states:
                    raise BudgetExceededError(
                        f"form orbit exceeded {max_states} states")
        frontier = nxt
    return visited


def _form_boxes(d: QuadInt, height: float) -> Tuple[float, float]:
    """Per-embedding coefficient boxes.  Every class owns a member with
    coefficients on the scale of sqrt(|d_j|) at slot j, so the boxes
    track the discriminant even when its embeddings are lopsided."""
    h1 = max(height, 3.0 + 1.5 * math.sqrt(abs(d.embed(1))))
    h2 = max(height, 3.0 + 1.5 * math.sqrt(abs(d.embed(2))))
    return h1, h2


def enumerate_forms(d: QuadInt, F: FieldCtx,
                    height: float = 8.0) -> List[FormOverOK]:
    """All primitive forms of discriminant d with coefficient heights
    inside the per-embedding boxes derived from d and `height`."""
    D = d.D
    t, n = _omega_trace_norm(D)
    h1, h2 = _form_boxes(d, height)
    pts = list(lattice_points(D, h1, h2))
    if not pts:
        return []
    xa = np.array([p.a for p in pts], dtype=np.int64)
    xb = np.array([p.b for p in pts], dtype=np.int64)
    sq = math.sqrt(D)
    w1, w2 = (t + sq) / 2.0, (t - sq) / 2.0
    # num = b^2 - d for the whole b-column at once
    numa = xa * xa - n * xb * xb - d.a
    numb = 2 * xa * xb + t * xb * xb - d.b
    out: List[FormOverOK] = []
    for a in pts:
        if a.is_zero():
            continue
        fa, fb = 4 * a.a, 4 * a.b
        nf = fa * fa + t * fa * fb + n * fb * fb
        # num * conj(4a), conj(x + y*w) = (x + t*y, -y)
        cx, cy = fa + t * fb, -fb
        pa = numa * cx - n * (numb * cy)
        pb = numa * cy + numb * cx + t * (numb * cy)
        ok = (pa % nf == 0) & (pb % nf == 0)
        idx = np.nonzero(ok)[0]
        if idx.size == 0:
            continue
        ca = pa[idx] // nf
        cb = pb[idx] // nf
        keep = (np.abs(ca + cb * w1) <= h1) & (np.abs(ca + cb * w2) <= h2)
        for j in np.nonzero(keep)[0]:
            i = idx[j]
            b = QuadInt(D, int(xa[i]), int(xb[i]))
            c = QuadInt(D, int(ca[j]), int(cb[j]))
            if _is_unit(content(a, b, c)):
                out.append(FormOverOK(a, b, c))
    return out


# ------------------------------------------------- matrix-count oracle


def _matrix_boxes(pell: PellSolution, height: float) -> Tuple[float, float]:
    """Entry boxes for the conjugacy-count oracle.  The stabilizer of a
    box-reduced form has entries of scale |t0_j| + sqrt|t0_j^2 - 4| at
    slot j (the Pell relation gives sqrt|d_j| * |u0_j| = sqrt|t0_j^2-4|)."""
    out = []
    for j in (1, 2):
        tj = abs(pell.t0.embed(j))
        ej = tj + math.sqrt(abs(tj * tj - 4.0))
        out.append(max(height, 2.0 + 1.25 * ej))
    return out[0], out[1]


def _matrix_class_count(dc: QuadInt, pell: PellSolution, F: FieldCtx,
                        m1: float, m2: float, cap1: float, cap2: float,
                        max_states: int) -> int:
    """Count HE conjugacy classes whose primitive form content matches dc.

    This walks the stabilizer-generator correspondence backwards:
    a matrix [[A, B], [C, E]] of trace t0 carries the form
    (C, E - A, -B); dividing out the content leaves a primitive form
    whose discriminant must canonicalize to dc.
    """
    from .modgroup import _matrices_with_trace
    D = F.D
    t, _ = _omega_trace_norm(D)
    keys: List[Key] = []
    tr = pell.t0
    for key in _matrices_with_trace(F, tr, m1, m2):
        aa, ab, ba, bb, ca, cb, da, db = key
        fa = QuadInt(D, ca, cb)
        fb = QuadInt(D, da - aa, db - ab)
        fc = QuadInt(D, -ba, -bb)
        if fa.is_zero() and fc.is_zero():
            continue
        k = content(fa, fb, fc)
        qa, qb, qc = fa.exact_div(k), fb.exact_div(k), fc.exact_div(k)
        disc = qb * qb - 4 * (qa * qc)
        if disc.sign_embed(1) <= 0 or disc.sign_embed(2) >= 0:
            continue
        if canonical_disc(disc, F) != dc:
            continue
        keys.append(_normalize_key(key, D, t))
    count = 0
    remaining = sorted(set(keys))
    while remaining:
        seed = remaining[0]
        orbit, _ = conjugation_orbit(seed, D, cap1, cap2,
                                     max_states=max_states)
        remaining = [k for k in remaining if k not in orbit and k != seed]
        count += 1
    return count


# ------------------------------------------------------- class numbers


def class_number(d: QuadInt, F: FieldCtx, height: float = 8.0,
                 bfs_factor: float = 3.0,
                 max_states: int = 400000) -> DiscriminantRecord:
    """Dual-route class count for the canonical associate of d.

    The orbit partition of height-bounded primitive forms is the
    primary algorithm; the conjugacy-class count through the stabilizer
    map is the oracle.  A mismatch raises instead of picking a side.
    """
    if not in_Dpm(d, F):
        raise ValidationError(f"{d} is not a mixed-sign discriminant")
    dc = canonical_disc(d, F)
    pell = pell_fundamental(dc, F)
    D = F.D
    h1, h2 = _form_boxes(dc, height)
    cap1, cap2 = bfs_factor * h1, bfs_factor * h2

    forms = enumerate_forms(dc, F, height=height)
    reps: List[FormKey] = []
    remaining = sorted(f.key() for f in forms)
    while remaining:
        seed = remaining[0]
        orbit = form_orbit(seed, D, cap1, cap2, max_states=max_states)
        reps.append(min(k for k in remaining if k in orbit))
        remaining = [k for k in remaining if k not in orbit]
    h_orbit = len(reps)

    m1, m2 = _matrix_boxes(pell, height)
    mcap1, mcap2 = max(cap1, 1.5 * m1), max(cap2, 1.5 * m2)
    h_matrix = _matrix_class_count(dc, pell, F, m1, m2, mcap1, mcap2,
                                   max_states)
    if h_orbit != h_matrix:
        raise InvariantViolation(
            f"ambiguous class count for d={dc}: form orbits give "
            f"{h_orbit}, matrix conjugacy gives {h_matrix}; "
            f"height={height}, bfs_factor={bfs_factor}")
    if h_orbit < 1:
        raise InvariantViolation(f"no forms found for d={dc}")
    return DiscriminantRecord(
        d=dc, pell=pell, class_number=h_orbit,
        forms=tuple(FormOverOK.from_key(k, D) for k in sorted(reps)))


def form_to_matrix(Q: FormOverOK, pell: PellSolution) -> GroupElem:
    """Stabilizer generator of the form:
    [[(t0 - b u0)/2, -c u0], [a u0, (t0 + b u0)/2]]."""
    D = Q.a.D
    two = QuadInt(D, 2, 0)
    t0, u0 = pell.t0, pell.u0
    bu = Q.b * u0
    if not (two.divides(t0 - bu) and two.divides(t0 + bu)):
        raise ValidationError(
            "t0 and b*u0 have mismatched parity; discriminant witness "
            "b^2 = d (mod 4) is inconsistent with this form")
    return GroupElem.make((t0 - bu).exact_div(two), -(Q.c * u0),
                          Q.a * u0, (t0 + bu).exact_div(two))
