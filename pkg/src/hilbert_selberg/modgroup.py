"""The Hilbert modular group: elements, classification, elliptic census.

Group elements are 2x2 matrices over O_K of determinant 1, acting on
H x H through the pair (gamma, gamma') of real embeddings.  Conjugacy
searches walk the Cayley graph of conjugation by a fixed generator set
(translations by +-1, +-w and the inversion S), with per-embedding
height caps; they therefore return "unknown" rather than "no" when a
cap is exhausted without a meeting point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceededError, InvariantViolation, ValidationError
from .quadfield import (FieldCtx, QuadInt, _omega_trace_norm, _sign_half,
                        lattice_points)

Key = Tuple[int, int, int, int, int, int, int, int]


@dataclass(frozen=True, slots=True)
class GroupElem:
    """Matrix [[a, b], [c, d]] over O_K with det 1, sign-normalized so the
    first nonzero entry of (a, b, c, d) has positive first embedding."""

    a: QuadInt
    b: QuadInt
    c: QuadInt
    d: QuadInt

    @staticmethod
    def make(a: QuadInt, b: QuadInt, c: QuadInt, d: QuadInt) -> "GroupElem":
        det = a * d - b * c
        if not det.is_one():
            raise ValidationError(f"determinant {det} != 1")
        for entry in (a, b, c, d):
            if not entry.is_zero():
                if entry.sign_embed(1) < 0:
                    a, b, c, d = -a, -b, -c, -d
                break
        return GroupElem(a, b, c, d)

    @staticmethod
    def identity(F: FieldCtx) -> "GroupElem":
        one, zero = F.one, F.zero
        return GroupElem(one, zero, zero, one)

    @property
    def D(self) -> int:
        return self.a.D

    def trace(self) -> QuadInt:
        return self.a + self.d

    def key(self) -> Key:
        return (self.a.a, self.a.b, self.b.a, self.b.b,
                self.c.a, self.c.b, self.d.a, self.d.b)

    @staticmethod
    def from_key(key: Key, D: int) -> "GroupElem":
        aa, ab, ba, bb, ca, cb, da, db = key
        return GroupElem.make(QuadInt(D, aa, ab), QuadInt(D, ba, bb),
                              QuadInt(D, ca, cb), QuadInt(D, da, db))

    def __mul__(self, other: "GroupElem") -> "GroupElem":
        return GroupElem.make(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "GroupElem":
        return GroupElem.make(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "GroupElem":
        base = self if k >= 0 else self.inverse()
        one, zero = QuadInt(self.D, 1, 0), QuadInt(self.D, 0, 0)
        out = GroupElem(one, zero, zero, one)
        for _ in range(abs(k)):
            out = out * base
        return out

    def is_identity_psl(self) -> bool:
        return (self.b.is_zero() and self.c.is_zero()
                and self.a == self.d and abs(self.a.a) == 1 and self.a.b == 0)

    def psl_order(self, cap: int = 14) -> Optional[int]:
        """Order in PSL(2, O_K), or None if it exceeds cap."""
        p = self
        for k in range(1, cap + 1):
            if p.is_identity_psl():
                return k
            p = p * self
        return None


@dataclass(frozen=True)
class ElementClass:
    """Classification of a group element by the exact signs of the two
    embeddings of trace^2 - 4, plus the standard invariants."""

    kind: str  # identity | parabolic | elliptic | hyperbolic
               # | hyperbolic-elliptic | elliptic-hyperbolic
    trace: QuadInt
    theta: Optional[Tuple[float, float]] = None  # elliptic rotation angles
    norm: Optional[float] = None                 # hyperbolic-slot norm
    omega: Optional[float] = None                # elliptic-slot angle


def classify(g: GroupElem) -> ElementClass:
    t = g.trace()
    disc = t * t - 4
    if disc.is_zero():
        if g.is_identity_psl():
            return ElementClass("identity", t)
        return ElementClass("parabolic", t)
    s1, s2 = disc.sign_embed(1), disc.sign_embed(2)
    t1, t2 = t.embed(1), t.embed(2)
    if s1 < 0 and s2 < 0:
        return ElementClass("elliptic", t,
                            theta=(math.acos(t1 / 2.0), math.acos(t2 / 2.0)))
    if s1 > 0 and s2 > 0:
        return ElementClass("hyperbolic", t)
    if s1 > 0 and s2 < 0:
        N = ((abs(t1) + math.sqrt(t1 * t1 - 4.0)) / 2.0) ** 2
        return ElementClass("hyperbolic-elliptic", t,
                            norm=N, omega=math.acos(t2 / 2.0))
    N = ((abs(t2) + math.sqrt(t2 * t2 - 4.0)) / 2.0) ** 2
    return ElementClass("elliptic-hyperbolic", t,
                        norm=N, omega=math.acos(t1 / 2.0))


# ---------------------------------------------------------------- BFS core


def _normalize_key(key: Key, D: int, t: int) -> Key:
    for i in range(4):
        x, y = key[2 * i], key[2 * i + 1]
        if x or y:
            if _sign_half(2 * x + t * y, y, D) < 0:
                return tuple(-v for v in key)  # type: ignore[return-value]
            return key
    raise ValidationError("zero matrix cannot be normalized")


def _conj_neighbors(key: Key, D: int, t: int, n: int) -> List[Key]:
    """Conjugates of the matrix by the five generators, sign-normalized.

    T_mu g T_mu^{-1} = [[a + mu c, b + mu(d - a) - mu^2 c], [c, d - mu c]]
    S g S^{-1} = [[d, -c], [-b, a]]
    """
    aa, ab, ba, bb, ca, cb, da, db = key

    def mul(xa, xb, ya, yb):
        bd = xb * yb
        return xa * ya - n * bd, xa * yb + xb * ya + t * bd

    out = [_normalize_key((da, db, -ca, -cb, -ba, -bb, aa, ab), D, t)]
    for ma, mb in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        mca, mcb = mul(ma, mb, ca, cb)
        m2a, m2b = mul(ma, mb, ma, mb)
        m2ca, m2cb = mul(m2a, m2b, ca, cb)
        mda, mdb = mul(ma, mb, da - aa, db - ab)
        out.append(_normalize_key(
            (aa + mca, ab + mcb,
             ba + mda - m2ca, bb + mdb - m2cb,
             ca, cb,
             da - mca, db - mcb), D, t))
    return out


def _heights_ok(key: Key, w1: float, w2: float,
                cap1: float, cap2: float) -> bool:
    for i in range(4):
        x, y = key[2 * i], key[2 * i + 1]
        if abs(x + y * w1) > cap1 or abs(x + y * w2) > cap2:
            return False
    return True


def _embed_consts(D: int) -> Tuple[float, float]:
    t, _ = _omega_trace_norm(D)
    sq = math.sqrt(D)
    return (t + sq) / 2.0, (t - sq) / 2.0


def conjugation_orbit(seed: Key, D: int, cap1: float, cap2: float,
                      max_states: int = 400000,
                      targets: Optional[set] = None) -> Tuple[set, bool]:
    """Height-capped BFS orbit of conjugation; returns (visited, hit_target).

    Stops early when any target key is reached.  Raises when the state
    budget is exhausted (the orbit is then reported incomplete).
    """
    t, n = _omega_trace_norm(D)
    w1, w2 = _embed_consts(D)
    seed = _normalize_key(seed, D, t)
    visited = {seed}
    frontier = [seed]
    while frontier:
        nxt: List[Key] = []
        for key in frontier:
            for nb in _conj_neighbors(key, D, t, n):
                if nb in visited:
                    continue
                if not _heights_ok(nb, w1, w2, cap1, cap2):
                    continue
                if targets is not None and nb in targets:
                    visited.add(nb)
                    return visited, True
                visited.add(nb)
                nxt.append(nb)
                if len(visited) > max_states:
                    raise BudgetExceededError(
                        f"conjugation orbit exceeded {max_states} states")
        frontier = nxt
    return visited, False


def is_conjugate(g: GroupElem, h: GroupElem, search_bound: float = 40.0,
                 max_states: int = 400000) -> str:
    """'yes' / 'no' / 'unknown' for PSL conjugacy of g and h.

    'no' is only returned on an exact invariant mismatch (trace up to
    sign); an exhausted height-capped search yields 'unknown'.
    """
    if g.D != h.D:
        raise ValidationError("elements of different fields")
    tg, th = g.trace(), h.trace()
    if tg != th and tg != -th:
        return "no"
    D = g.D
    t, _ = _omega_trace_norm(D)
    gk = _normalize_key(g.key(), D, t)
    hk = _normalize_key(h.key(), D, t)
    if gk == hk:
        return "yes"
    try:
        _, hit = conjugation_orbit(gk, D, search_bound, search_bound,
                                   max_states=max_states, targets={hk})
    except BudgetExceededError:
        return "unknown"
    return "yes" if hit else "unknown"


# ------------------------------------------------------- elliptic census


@dataclass(frozen=True)
class EllipticClass:
    """Primitive elliptic conjugacy class with rotation pair
    (pi/nu, t*pi/nu); rep is theta1-normalized (lower-left entry has
    positive first embedding)."""

    nu: int
    t: int
    rep: GroupElem
    theta1: float
    theta2: float


def _elliptic_traces(F: FieldCtx) -> List[QuadInt]:
    """All t in O_K with |embed(t, j)| < 2 exactly, j = 1, 2."""
    out = []
    for t in lattice_points(F.D, 2.0 + 1e-9, 2.0 + 1e-9):
        if (t - 2).sign_embed(1) < 0 and (t + 2).sign_embed(1) > 0 \
                and (t - 2).sign_embed(2) < 0 and (t + 2).sign_embed(2) > 0:
            out.append(t)
    return out


def _two_cos_table(F: FieldCtx) -> Dict[int, QuadInt]:
    """Exact 2cos(pi/nu) as elements of O_K, for the nu possible in K."""
    table = {2: F.elem(0), 3: F.elem(1)}
    if F.D == 5:
        table[5] = F.omega              # (1+sqrt5)/2
    elif F.D == 8:
        table[4] = F.omega              # sqrt2
    elif F.D == 12:
        table[6] = F.omega              # sqrt3
    return table


def _matrices_with_trace(F: FieldCtx, tr: QuadInt,
                         cap1: float, cap2: float) -> List[Key]:
    """All det-1 matrices with the given trace and per-embedding entry
    heights within (cap1, cap2); vectorized divisor scan over (a, b)."""
    D = F.D
    t, n = _omega_trace_norm(D)
    pts = list(lattice_points(D, cap1, cap2))
    if not pts:
        return []
    pa = np.array([p.a for p in pts], dtype=np.int64)
    pb = np.array([p.b for p in pts], dtype=np.int64)
    w1, w2 = _embed_consts(D)
    e1 = pa + pb * w1
    e2 = pa + pb * w2
    nonzero = (pa != 0) | (pb != 0)
    out: List[Key] = []
    for A in pts:
        da, db = tr.a - A.a, tr.b - A.b
        # P = A*(tr - A) - 1
        bd = A.b * db
        Pa = A.a * da - n * bd - 1
        Pb = A.a * db + A.b * da + t * bd
        if Pa == 0 and Pb == 0:
            continue  # b*c = 0: degenerate triangular family, c=0 or b=0
        # try every b in the box: c = P / b where divisible
        NB = pa * pa + t * pa * pb + n * pb * pb
        # P * conj(b) with conj(b) = (pa + t*pb, -pb)
        cba = pa + t * pb
        cbb = -pb
        numa = Pa * cba - n * (Pb * cbb)
        numb = Pa * cbb + Pb * cba + t * (Pb * cbb)
        ok = nonzero & (numa % np.where(NB == 0, 1, NB) == 0) \
            & (numb % np.where(NB == 0, 1, NB) == 0) & (NB != 0)
        idx = np.nonzero(ok)[0]
        if idx.size == 0:
            continue
        ca = numa[idx] // NB[idx]
        cb = numb[idx] // NB[idx]
        ce1 = ca + cb * w1
        ce2 = ca + cb * w2
        keep = (np.abs(ce1) <= cap1) & (np.abs(ce2) <= cap2)
        for j, cia, cib in zip(idx[keep], ca[keep], cb[keep]):
            out.append((A.a, A.b, int(pa[j]), int(pb[j]),
                        int(cia), int(cib), da, db))
    # triangular cases (b*c = 0) are never elliptic: a real matrix with
    # c = 0 has |trace| >= 2 in each embedding, likewise b = 0 after S.
    return out


def _signed_angle(tr_embed: float, c_sign: int) -> float:
    """Rotation angle in (-pi, pi) \\ {0} from trace embedding and sign of c."""
    theta = math.acos(max(-1.0, min(1.0, tr_embed / 2.0)))
    return theta if c_sign > 0 else -theta


def enumerate_elliptic(F: FieldCtx, height_bound: float = 10.0,
                       bfs_factor: float = 2.5,
                       max_states: int = 400000) -> Tuple[EllipticClass, ...]:
    """Primitive elliptic conjugacy classes (rotation pair (pi/nu, t*pi/nu)).

    Brute enumeration over admissible traces and height-bounded entries,
    then partition by conjugation BFS.  Candidates are elements whose
    theta1-normalized trace equals 2cos(pi/nu) exactly; a candidate class
    is kept only when its elements generate the full point stabilizer.
    Proper powers of a higher-order generator (the square of an order-4
    rotation is an order-2 rotation about the same point) carry the right
    trace but belong to a point of larger isotropy and are dropped.
    """
    D = F.D
    t, n = _omega_trace_norm(D)
    two_cos = _two_cos_table(F)
    cap_bfs = height_bound * bfs_factor
    w1, w2 = _embed_consts(D)

    # collect candidate matrices, bucketed by PSL trace
    buckets: Dict[Key, List[Key]] = {}
    meta: Dict[Key, Tuple[int, int, float, float]] = {}
    seen_traces = set()
    for tr in _elliptic_traces(F):
        psl_tr = min((tr.a, tr.b), (-tr.a, -tr.b))
        if psl_tr in seen_traces:
            continue
        seen_traces.add(psl_tr)
        # which nu (if any) makes this an admissible generator trace
        nu = None
        for cand_nu, ct in two_cos.items():
            if tr == ct or tr == -ct:
                nu = cand_nu
                break
        if nu is None:
            continue  # power-only trace values
        for key in _matrices_with_trace(F, tr, height_bound, height_bound):
            g = GroupElem.from_key(key, D)
            order = g.psl_order()
            if order != nu:
                raise InvariantViolation(
                    f"element with trace {tr} has PSL order {order}, "
                    f"expected {nu}")
            # theta1 normalization: representative with embed(c, 1) > 0
            ga = g if g.c.sign_embed(1) > 0 else \
                GroupElem(-g.a, -g.b, -g.c, -g.d)
            tr1 = ga.trace()
            if not (tr1 == two_cos[nu]):
                continue  # theta1 = pi - pi/nu variant; inverse class rep
            theta2 = _signed_angle(tr1.embed(2), ga.c.sign_embed(2)) \
                % (2.0 * math.pi)
            tj = round(theta2 * nu / math.pi)
            if abs(theta2 - tj * math.pi / nu) > 1e-9 or math.gcd(tj, nu) != 1 \
                    or tj % 2 == 0:
                raise InvariantViolation(
                    f"bad rotation angle {theta2} for nu={nu}")
            nk = _normalize_key(key, D, t)
            buckets.setdefault(psl_tr + (nu,), []).append(nk)
            meta[nk] = (nu, tj, math.acos(tr1.embed(1) / 2.0), theta2)

    # partition each bucket by conjugation BFS, keeping the orbit sets
    records: List[dict] = []
    for bucket in buckets.values():
        remaining = sorted(set(bucket))
        while remaining:
            seed = remaining[0]
            orbit, _ = conjugation_orbit(seed, D, cap_bfs, cap_bfs,
                                         max_states=max_states)
            members = [k for k in remaining if k in orbit]
            if seed not in members:
                members.insert(0, seed)
            remaining = [k for k in remaining if k not in orbit]
            nu, tj, th1, th2 = meta[seed]
            records.append({"nu": nu, "tj": tj, "th1": th1, "th2": th2,
                            "orbit": orbit, "members": members,
                            "primitive": True})

    # drop classes that are proper powers of a larger stabilizer generator
    for rec in sorted(records, key=lambda r: -r["nu"]):
        if not rec["primitive"]:
            continue
        nu = rec["nu"]
        rep = GroupElem.from_key(min(rec["members"]), D)
        for div in range(2, nu):
            if nu % div:
                continue
            power = rep ** (nu // div)
            pkey = _normalize_key(power.key(), D, t)
            sub = [r for r in records if r["nu"] == div]
            owner = next((r for r in sub if pkey in r["orbit"]), None)
            if owner is None:
                pcap = max(cap_bfs, 1.5 * max(
                    abs(pkey[2 * i] + pkey[2 * i + 1] * wj)
                    for i in range(4) for wj in (w1, w2)))
                tgt = {k for r in sub for k in r["members"]}
                porb, hit = conjugation_orbit(pkey, D, pcap, pcap,
                                              max_states=max_states,
                                              targets=tgt)
                if hit:
                    hk = next(iter(porb & tgt))
                    owner = next(r for r in sub if hk in r["members"])
            if owner is None:
                raise InvariantViolation(
                    f"order-{div} power of an order-{nu} class not located "
                    "among the enumerated classes")
            owner["primitive"] = False

    classes: List[EllipticClass] = []
    for rec in records:
        if not rec["primitive"]:
            continue
        rep = GroupElem.from_key(min(rec["members"]), D)
        classes.append(EllipticClass(nu=rec["nu"], t=rec["tj"] % rec["nu"],
                                     rep=rep, theta1=rec["th1"],
                                     theta2=rec["th2"]))
    classes.sort(key=lambda c: (c.nu, c.t, c.rep.key()))
    return tuple(classes)


# certified order multisets for the fully supported fields
_CENSUS_ORDERS = {
    5: (2, 2, 3, 3, 5, 5),
    8: (2, 2, 3, 3, 4, 4),
    12: (2, 2, 2, 3, 3, 6),
}

_DEFAULT_CENSUS_HEIGHT = {5: 8.0, 8: 8.0, 12: 8.0}

_census_memo: Dict[Tuple[int, float], Tuple[Tuple[int, int, int], ...]] = {}


def elliptic_census(F: FieldCtx, height_bound: Optional[float] = None
                    ) -> Tuple[Tuple[int, int, int], ...]:
    """(nu, t, count) census of primitive elliptic classes.

    For D in {5, 8, 12} the computed order multiset is checked against
    the certified one: too few classes raises BudgetExceededError (the
    height bound missed a representative), too many raises
    InvariantViolation (the BFS failed to merge equivalent elements).
    """
    if height_bound is None:
        height_bound = _DEFAULT_CENSUS_HEIGHT.get(F.D, 8.0)
    memo_key = (F.D, float(height_bound))
    if memo_key in _census_memo:
        return _census_memo[memo_key]
    classes = enumerate_elliptic(F, height_bound=height_bound)
    counts: Dict[Tuple[int, int], int] = {}
    for cl in classes:
        counts[(cl.nu, cl.t)] = counts.get((cl.nu, cl.t), 0) + 1
    census = tuple((nu, tj, c) for (nu, tj), c in sorted(counts.items()))
    if F.D in _CENSUS_ORDERS:
        got = tuple(sorted(cl.nu for cl in classes))
        want = _CENSUS_ORDERS[F.D]
        if got != want:
            if len(got) < len(want) or set(got) < set(want):
                raise BudgetExceededError(
                    f"census incomplete for D={F.D}: orders {got}, "
                    f"expected {want}; raise height_bound > {height_bound}")
            raise InvariantViolation(
                f"census mismatch for D={F.D}: orders {got}, expected {want}")
    _census_memo[memo_key] = census
    return census
