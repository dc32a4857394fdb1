"""Algebraic test functions built from inverse Zhukovskii maps.

A factor attached to a segment ``[alpha, beta]`` is

    f_seg(z) = prod_i (C_i - 1/phi(psi(z))) ** e_i,

with ``psi`` the affine map sending the segment to ``[-1, 1]`` and
``phi(w) = w + (w**2 - 1)**(1/2)`` the exterior branch (``|phi| >= 1``).  A
test function is a product of such factors over disjoint segments, optionally
times a rational function.  With all exponents equal to 1/2 and two constants
``1 < A < B`` per factor this is the classical fourth-order example whose
Stahl compact is the union of the segments.

Two branches are exposed: sheet 0, the branch holomorphic off the segments and
anchored at infinity, and sheet 1, the continuation across one segment.
"""
from __future__ import annotations

import cmath
import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bigseries import (
    DEFAULT_PREC,
    GermAtInfinity,
    SeriesError,
    constant_germ,
    germ,
    poly_from_inverse_powers,
    series_cpow,
    series_inv,
    series_mul,
    series_shift,
    series_sqrt,
    to_big,
)
from .potential import IntervalSystem


class SpecError(ValueError):
    pass


class NonRealSegmentError(SpecError):
    """Segments off the real line: no Stahl compact construction is available."""


class CutError(ValueError):
    """Point lies on a branch cut where the requested branch is undefined."""


class BranchTrackingError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# exact parameters

_UNSIGNED = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_COMPLEX_RE = re.compile(rf"^(?P<re>[+-]?{_UNSIGNED})?(?:(?P<im>[+-]?(?:{_UNSIGNED})?)j)?$")


def _frac(s: str) -> Fraction:
    if "/" in s:
        num, den = s.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(s)


@dataclass(frozen=True, order=True)
class Exact:
    """Complex number with exact rational parts (decimal input stays exact)."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def parse(cls, x) -> "Exact":
        if isinstance(x, Exact):
            return x
        if isinstance(x, bool):
            raise SpecError(f"not a number: {x!r}")
        if isinstance(x, (int, Fraction)):
            return cls(Fraction(x))
        if isinstance(x, float):
            if not math.isfinite(x):
                raise SpecError(f"non-finite value {x!r}")
            return cls(Fraction(x))
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, dict):
            return cls(cls.parse(x.get("re", 0)).re, cls.parse(x.get("im", 0)).re)
        if isinstance(x, str):
            s = x.strip().replace(" ", "").replace("J", "j").replace("I", "j").replace("i", "j")
            s = s.strip("()")
            m = _COMPLEX_RE.match(s)
            if not s or m is None:
                raise SpecError(f"cannot parse number {x!r}")
            re_part = _frac(m.group("re")) if m.group("re") else Fraction(0)
            im = m.group("im")
            if im is None:
                im_part = Fraction(0)
            elif im in ("", "+"):
                im_part = Fraction(1)
            elif im == "-":
                im_part = Fraction(-1)
            else:
                im_part = _frac(im)
            return cls(re_part, im_part)
        raise SpecError(f"cannot parse number {x!r}")

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def is_integer(self) -> bool:
        return self.im == 0 and self.re.denominator == 1

    def big(self, prec: int) -> mpmath.mpc:
        with mpmath.workprec(prec):
            return mpmath.mpc(
                mpmath.mpf(self.re.numerator) / self.re.denominator,
                mpmath.mpf(self.im.numerator) / self.im.denominator,
            )

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __add__(self, other):
        other = Exact.parse(other)
        return Exact(self.re + other.re, self.im + other.im)

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}j"


@dataclass(frozen=True)
class Segment:
    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        a, b = Exact.parse(self.alpha), Exact.parse(self.beta)
        if not (a.is_real and b.is_real):
            raise NonRealSegmentError(
                f"segment [{a}, {b}] is not real; only real Stahl compacts are supported"
            )
        if not a.re < b.re:
            raise SpecError(f"segment endpoints must increase strictly: [{a}, {b}]")
        object.__setattr__(self, "alpha", a.re)
        object.__setattr__(self, "beta", b.re)

    @property
    def midpoint(self) -> Fraction:
        return (self.alpha + self.beta) / 2

    @property
    def halfwidth(self) -> Fraction:
        return (self.beta - self.alpha) / 2

    def overlaps(self, other: "Segment") -> bool:
        return not (self.beta < other.alpha or other.beta < self.alpha)


@dataclass(frozen=True)
class FactorSpec:
    """``prod_i (C_i - 1/phi_seg)**e_i`` on one segment.

    Every ``|C_i| > 1`` so the factor is holomorphic off the segment.
    """

    segment: Segment
    constants: tuple  # of (C, exponent) Exact pairs

    def __post_init__(self):
        if not self.constants:
            raise SpecError("a factor needs at least one constant")
        cs = tuple((Exact.parse(c), Exact.parse(e)) for c, e in self.constants)
        for c, _ in cs:
            if abs(complex(c)) <= 1:
                raise SpecError(f"constant {c} must satisfy |C| > 1")
        object.__setattr__(self, "constants", cs)

    @property
    def exponents(self):
        return [e for _, e in self.constants]

    @classmethod
    def sqrt_product(cls, A, B, segment: Segment = None) -> "FactorSpec":
        """Two constants ``1 < A < B`` with exponent 1/2 each."""
        A, B = Exact.parse(A), Exact.parse(B)
        if not (A.is_real and B.is_real and 1 < A.re < B.re):
            raise SpecError("need real constants with 1 < A < B")
        seg = segment or Segment(Fraction(-1), Fraction(1))
        half = Exact(Fraction(1, 2))
        return cls(seg, ((A, half), (B, half)))


@dataclass(frozen=True)
class TestFunctionSpec:
    factors: tuple = ()
    rational: Optional[tuple] = None  # (numerator coeffs, denominator coeffs), ascending powers
    precision_bits: int = DEFAULT_PREC

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        segs = [f.segment for f in self.factors]
        for i in range(len(segs)):
            for j in range(i + 1, len(segs)):
                if segs[i].overlaps(segs[j]):
                    raise SpecError(f"segments {segs[i]} and {segs[j]} intersect")
        if self.rational is not None:
            num, den = self.rational
            num = _trim(tuple(Exact.parse(c) for c in num))
            den = _trim(tuple(Exact.parse(c) for c in den))
            if all(c == Exact() for c in den):
                raise SpecError("rational multiplier has zero denominator")
            if len(num) > len(den):
                raise SpecError("rational multiplier must be bounded at infinity (deg num <= deg den)")
            object.__setattr__(self, "rational", (num, den))
            self._check_denominator()
        if self.precision_bits < 64:
            raise SpecError("precision_bits must be >= 64")

    def _check_denominator(self, samples: int = 4001, tol: float = 1e-10):
        den = [complex(c) for c in self.rational[1]]
        for f in self.factors:
            a, b = float(f.segment.alpha), float(f.segment.beta)
            lo = min(abs(_horner_c(den, a + (b - a) * k / (samples - 1))) for k in range(samples))
            if lo < tol:
                raise SpecError(f"denominator of the rational multiplier vanishes on [{a}, {b}]")

    @property
    def segments(self) -> list:
        return [f.segment for f in self.factors]

    @property
    def mode(self) -> str:
        return validate_class(self).mode

    def q_m(self) -> tuple:
        """Denominator of the rational multiplier (poles of f off S), or ``(1,)``."""
        if self.rational is None:
            return (Exact(Fraction(1)),)
        return self.rational[1]

    # serialization -------------------------------------------------------

    def to_text(self) -> str:
        segs = ", ".join(f'["{s.alpha}", "{s.beta}"]' for s in self.segments)
        facs = ", ".join(
            "[" + ", ".join(f'{{C = "{c}", exp = "{e}"}}' for c, e in f.constants) + "]"
            for f in self.factors
        )
        lines = [f"segments = [{segs}]", f"factors = [{facs}]"]
        if self.rational is not None:
            num = ", ".join(f'"{c}"' for c in self.rational[0])
            den = ", ".join(f'"{c}"' for c in self.rational[1])
            lines.append(f"rational = {{num = [{num}], den = [{den}]}}")
        lines.append(f"precision_bits = {self.precision_bits}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, d: dict) -> "TestFunctionSpec":
        unknown = set(d) - {"segments", "factors", "rational", "precision_bits"}
        if unknown:
            raise SpecError(f"unknown spec keys: {', '.join(sorted(unknown))}")
        segs = d.get("segments", [])
        facs = d.get("factors", [])
        if len(segs) != len(facs):
            raise SpecError(f"{len(segs)} segments but {len(facs)} factor lists")
        factors = []
        for (a, b), consts in zip(segs, facs):
            if isinstance(consts, dict):
                consts = [consts]
            pairs = []
            for c in consts:
                try:
                    pairs.append((c["C"], c["exp"]))
                except (KeyError, TypeError):
                    raise SpecError(f"factor entries need keys C and exp, got {c!r}") from None
            factors.append(FactorSpec(Segment(Exact.parse(a), Exact.parse(b)), tuple(pairs)))
        rational = None
        if "rational" in d:
            r = d["rational"]
            rational = (tuple(r.get("num", [1])), tuple(r["den"]))
        return cls(tuple(factors), rational, int(d.get("precision_bits", DEFAULT_PREC)))

    @classmethod
    def from_text(cls, text: str) -> "TestFunctionSpec":
        return cls.from_mapping(tomllib.loads(text))

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # handy constructors ------------------------------------------------------

    @classmethod
    def sqrt_product(cls, A=2, B=3, segment: Segment = None, precision_bits: int = DEFAULT_PREC):
        return cls((FactorSpec.sqrt_product(A, B, segment),), None, precision_bits)

    @classmethod
    def rational_only(cls, num, den, precision_bits: int = DEFAULT_PREC):
        return cls((), (tuple(num), tuple(den)), precision_bits)


def _trim(cs: tuple) -> tuple:
    cs = list(cs)
    while len(cs) > 1 and cs[-1] == Exact():
        cs.pop()
    return tuple(cs)


def _horner_c(cs, z):
    acc = 0j
    for c in reversed(cs):
        acc = acc * z + c
    return acc


# --------------------------------------------------------------------------
# class membership


@dataclass
class ClassReport:
    in_F: bool
    in_thirds_extension: bool
    reasons: list = field(default_factory=list)

    @property
    def unsupported(self) -> bool:
        return not (self.in_F or self.in_thirds_extension)

    @property
    def mode(self) -> str:
        if self.in_F:
            return "F"
        return "thirds" if self.in_thirds_extension else "unsupported"


def validate_class(spec: TestFunctionSpec) -> ClassReport:
    """Report whether ``spec`` is in the square-root class or the exponent-sum extension.

    In the square-root class every exponent is +-1/2 and the off-segment branch
    points ``(C + 1/C)/2`` of one factor are distinct, so each segment carries
    exactly its two endpoints as sheet-0 branch points and every branch point
    is of square-root type.
    """
    reasons = []
    half = Fraction(1, 2)
    in_F = bool(spec.factors)
    if not spec.factors:
        reasons.append("no algebraic factors (rational function only)")
    for j, f in enumerate(spec.factors):
        exps = f.exponents
        if not all(e.is_real and abs(e.re) == half for e in exps):
            in_F = False
            reasons.append(f"factor {j}: exponents other than +-1/2")
        cs = [c for c, _ in f.constants]
        if len(set(cs)) != len(cs):
            in_F = False
            reasons.append(f"factor {j}: repeated constants merge branch points")
    ext = bool(spec.factors) and not in_F
    for j, f in enumerate(spec.factors):
        exps = f.exponents
        if any(e.is_integer() for e in exps):
            ext = False
            reasons.append(f"factor {j}: integer exponent")
        total = Exact()
        for e in exps:
            total = total + e
        if not total.is_integer():
            ext = False
            reasons.append(f"factor {j}: exponent sum {total} is not an integer")
    return ClassReport(in_F, ext, reasons)


def branch_points(spec: TestFunctionSpec, prec: int = None) -> list:
    """Segment endpoints plus the second-sheet points ``psi^-1((C + 1/C)/2)``."""
    prec = prec or spec.precision_bits
    pts = []
    with mpmath.workprec(prec):
        for f in spec.factors:
            s = f.segment
            m, h = _mpf(s.midpoint), _mpf(s.halfwidth)
            pts.append(mpmath.mpc(m - h))
            pts.append(mpmath.mpc(m + h))
            for c, _ in f.constants:
                C = c.big(prec)
                pts.append(m + h * (C + 1 / C) / 2)
    return pts


def stahl_compact(spec: TestFunctionSpec) -> IntervalSystem:
    """The union of the (real, disjoint) segments of a test-function spec."""
    if not spec.factors:
        raise SpecError("spec has no segments; its Stahl compact is empty")
    segs = sorted(spec.segments, key=lambda s: s.alpha)
    for a, b in zip(segs, segs[1:]):
        if a.overlaps(b):
            raise SpecError(f"segments {a} and {b} intersect")
    ends = []
    for s in segs:
        ends += [float(s.alpha), float(s.beta)]
    return IntervalSystem(tuple(ends))


# --------------------------------------------------------------------------
# evaluation


def _mpf(q: Fraction) -> mpmath.mpf:
    # caller sets the working precision
    return mpmath.mpf(q.numerator) / q.denominator


def _psi(z, seg: Segment, prec: int):
    with mpmath.workprec(prec):
        return (z - _mpf(seg.midpoint)) / _mpf(seg.halfwidth)


def _phi_of_psi(w):
    s = mpmath.sqrt(w * w - 1)
    p1, p2 = w + s, w - s
    return p1 if abs(p1) >= abs(p2) else p2


def inverse_zhukovskii(z, seg: Segment, sheet: int = 0, prec: int = DEFAULT_PREC) -> mpmath.mpc:
    """``phi(psi(z))`` on sheet 0 (``|phi| >= 1``) and its reciprocal on sheet 1."""
    if sheet not in (0, 1):
        raise ValueError("sheet must be 0 or 1")
    z = to_big(z, prec)
    with mpmath.workprec(prec):
        w = _psi(z, seg, prec)
        if w.imag == 0 and abs(w.real) < 1:
            raise CutError(f"z = {z} lies on the open segment [{seg.alpha}, {seg.beta}]")
        phi = _phi_of_psi(w)
        return phi if sheet == 0 else 1 / phi


def _factor_value(f: FactorSpec, u, prec: int, windings=None):
    # prod_i C^e (1 - u/C)^e with principal powers; ``windings`` adds 2*pi*i*k to log(C - u)
    out = mpmath.mpc(1)
    for i, (c, e) in enumerate(f.constants):
        C, E = c.big(prec), e.big(prec)
        if windings is None:
            out *= mpmath.power(C, E) * mpmath.power(1 - u / C, E)
        else:
            base = C - u
            if base == 0:
                if E.real > 0:
                    return mpmath.mpc(0)
                raise CutError("evaluation at a branch point of the second sheet")
            ell = mpmath.log(base) + 2j * mpmath.pi * windings[i]
            out *= mpmath.exp(E * ell)
    return out


def _rational_value(spec: TestFunctionSpec, z, prec: int):
    if spec.rational is None:
        return mpmath.mpc(1)
    num = [c.big(prec) for c in spec.rational[0]]
    den = [c.big(prec) for c in spec.rational[1]]
    d = mpmath.polyval(den[::-1], z)
    if d == 0:
        raise CutError(f"z = {z} is a pole of the rational multiplier")
    return mpmath.polyval(num[::-1], z) / d


def eval_sheet0(spec: TestFunctionSpec, z, prec: int = None) -> mpmath.mpc:
    prec = prec or spec.precision_bits
    z = to_big(z, prec)
    with mpmath.workprec(prec + 16):
        val = _rational_value(spec, z, prec + 16)
        for f in spec.factors:
            u = 1 / inverse_zhukovskii(z, f.segment, 0, prec + 16)
            val *= _factor_value(f, u, prec + 16)
    with mpmath.workprec(prec):
        return +val


def crossing_factor(spec: TestFunctionSpec, z) -> int:
    """Index of the factor whose segment a sheet-1 path to ``z`` crosses.

    Chosen as the segment nearest to ``z`` in its own elliptic coordinates
    (smallest ``|phi(psi(z))|``).
    """
    zc = complex(z)
    best, idx = math.inf, 0
    for j, f in enumerate(spec.factors):
        w = (zc - float(f.segment.midpoint)) / float(f.segment.halfwidth)
        r = abs(_phi_c(w))
        if r < best:
            best, idx = r, j
    return idx


def _phi_c(w: complex) -> complex:
    s = cmath.sqrt(w * w - 1)
    p1, p2 = w + s, w - s
    return p1 if abs(p1) >= abs(p2) else p2


@dataclass(frozen=True)
class SheetOneBranch:
    """Discrete branch data fixed by path continuation; enough to evaluate at any precision."""

    flipped: tuple  # per factor: True if 1/phi was continued to phi
    windings: tuple  # per factor, per constant: integer k added as 2*pi*i*k to log(C - u)
    steps: int


def track_sheet1(spec: TestFunctionSpec, z, h0: float = None, max_steps: int = 200000) -> SheetOneBranch:
    """Continue sheet-0 values across the nearest segment to ``z`` in double precision.

    Path: a short vertical leg through the segment midpoint (from the side
    opposite to ``z``), then a straight leg to ``z``.  At each step the value of
    ``1/phi`` closest to the previous one is kept and every ``log(C - u)`` is
    continued by choosing the ``2*pi*k`` shift nearest to the previous
    argument.  A step is halved whenever any tracked quantity jumps by more
    than half of its running modulus.
    """
    zc = complex(z)
    if not spec.factors:
        return SheetOneBranch((), (), 0)
    j0 = crossing_factor(spec, zc)
    seg = spec.factors[j0].segment
    m, L = float(seg.midpoint), float(seg.halfwidth)
    sigma = 1.0 if zc.imag >= 0 else -1.0
    delta = L / 4
    p0, p1 = complex(m, -sigma * delta), complex(m, sigma * delta)
    h0 = h0 or (2 * L) / 64
    hmin = 1e-14 * max(1.0, abs(zc), L)

    consts = [[(complex(c), complex(e)) for c, e in f.constants] for f in spec.factors]
    centers = [(float(f.segment.midpoint), float(f.segment.halfwidth)) for f in spec.factors]

    def candidates(j, x):
        w = (x - centers[j][0]) / centers[j][1]
        phi = _phi_c(w)
        return 1 / phi, phi

    # initial state on sheet 0 at p0
    us, logs = [], []
    for j in range(len(spec.factors)):
        u = candidates(j, p0)[0]
        us.append(u)
        logs.append([cmath.log(C) + cmath.log(1 - u / C) for C, _ in consts[j]])

    steps = 0
    for a, b in ((p0, p1), (p1, zc)):
        length = abs(b - a)
        if length == 0:
            continue
        t, h = 0.0, h0
        while t < length:
            hh = min(h, length - t)
            x = a + (b - a) * ((t + hh) / length)
            ok = True
            new_us, new_logs = [], []
            for j in range(len(spec.factors)):
                c0, c1 = candidates(j, x)
                u = c0 if abs(c0 - us[j]) <= abs(c1 - us[j]) else c1
                if abs(u - us[j]) > 0.5 * max(abs(us[j]), 1e-300):
                    ok = False
                    break
                row = []
                for (C, _), ell in zip(consts[j], logs[j]):
                    base = C - u
                    prev = C - us[j]
                    floor = 1e-10 * abs(C)
                    if abs(base) < floor or abs(prev) < floor:
                        # at a second-sheet branch point: the log is undefined, keep its winding
                        row.append(ell)
                        continue
                    if abs(base - prev) > 0.5 * abs(prev):
                        ok = False
                        break
                    lg = cmath.log(base)
                    k = round((ell.imag - lg.imag) / (2 * math.pi))
                    row.append(complex(lg.real, lg.imag + 2 * math.pi * k))
                if not ok:
                    break
                new_us.append(u)
                new_logs.append(row)
            steps += 1
            if steps > max_steps:
                raise BranchTrackingError(f"too many continuation steps towards z = {zc}")
            if not ok:
                h = hh / 2
                if h < hmin:
                    raise BranchTrackingError(f"step size underflow while continuing to z = {zc}")
                continue
            t += hh
            us, logs = new_us, new_logs
            h = min(2 * hh, h0)

    flipped = []
    windings = []
    for j in range(len(spec.factors)):
        c0, c1 = candidates(j, zc)
        flipped.append(abs(c1 - us[j]) < abs(c0 - us[j]))
        row = []
        for (C, _), ell in zip(consts[j], logs[j]):
            lg = cmath.log(C - us[j]) if C != us[j] else complex(0, ell.imag)
            row.append(round((ell.imag - lg.imag) / (2 * math.pi)))
        windings.append(tuple(row))
    return SheetOneBranch(tuple(flipped), tuple(windings), steps)


def eval_with_branch(spec: TestFunctionSpec, z, branch: SheetOneBranch, prec: int = None) -> mpmath.mpc:
    prec = prec or spec.precision_bits
    z = to_big(z, prec)
    wp = prec + 16
    with mpmath.workprec(wp):
        val = _rational_value(spec, z, wp)
        for f, flip, wind in zip(spec.factors, branch.flipped, branch.windings):
            w = _psi(z, f.segment, wp)
            if w.imag == 0 and abs(w.real) < 1:
                raise CutError(f"z = {z} lies on a segment")
            phi = _phi_of_psi(w)
            u = phi if flip else 1 / phi
            val *= _factor_value(f, u, wp, wind)
    with mpmath.workprec(prec):
        return +val


def eval_branch(spec: TestFunctionSpec, z, sheet: int = 0, prec: int = None) -> mpmath.mpc:
    """Value of the test function at ``z`` on sheet 0 or sheet 1.

    Sheet 1 is reached by path continuation (see :func:`track_sheet1`); the
    discrete branch data found in double precision is then evaluated at full
    precision.  Far from the segments the sheet-1 value depends on the path
    and is only meaningful inside the continuation region.
    """
    if sheet == 0:
        return eval_sheet0(spec, z, prec)
    if sheet != 1:
        raise ValueError("sheet must be 0 or 1")
    return eval_with_branch(spec, z, track_sheet1(spec, z), prec)


def eval_sheet1_closed(spec: TestFunctionSpec, z, j: int = None, prec: int = None) -> mpmath.mpc:
    """Sheet-1 value with factor ``j`` flipped and principal powers.

    Agrees with the continued branch while ``|phi_j(z)| < min_i |C_i|``; used as
    an independent check of the path continuation.
    """
    prec = prec or spec.precision_bits
    j = crossing_factor(spec, z) if j is None else j
    z = to_big(z, prec)
    with mpmath.workprec(prec + 16):
        val = _rational_value(spec, z, prec + 16)
        for i, f in enumerate(spec.factors):
            phi = inverse_zhukovskii(z, f.segment, 0, prec + 16)
            u = phi if i == j else 1 / phi
            val *= _factor_value(f, u, prec + 16)
    with mpmath.workprec(prec):
        return +val


# --------------------------------------------------------------------------
# germs


def inverse_phi_germ(seg: Segment, N: int, prec: int) -> GermAtInfinity:
    """Germ of ``1/phi(psi(z))`` at infinity.

    With ``psi = s z - t``: ``1/phi = s z [(1 - (t/s)/z) - sqrt(1 - 2(t/s)/z + ((t^2-1)/s^2)/z^2)]``.
    """
    with mpmath.workprec(prec):
        width = _mpf(seg.beta - seg.alpha)
        tot = _mpf(seg.alpha + seg.beta)
        s = 2 / width
        t = tot / width
        r = t / s
        g = [1, -2 * r, (t * t - 1) / (s * s)] + [0] * (N - 1)
        sq = series_sqrt(germ(g[: N + 2], prec), 1)
        lin = [1, -r] + [0] * N
        h = [lin[k] - sq[k] for k in range(N + 2)]
        return GermAtInfinity(tuple(s * h[k + 1] for k in range(N + 1)), prec)


def germ_at_infinity(spec: TestFunctionSpec, N: int, prec: int = None) -> GermAtInfinity:
    """Expansion of the sheet-0 branch at infinity to order ``N``."""
    prec = prec or spec.precision_bits
    if N < 2:
        raise SeriesError("germ order N must be >= 2")
    wp = prec + 32
    out = constant_germ(1, N, wp)
    for f in spec.factors:
        u = inverse_phi_germ(f.segment, N, wp)
        for c, e in f.constants:
            C, E = c.big(wp), e.big(wp)
            with mpmath.workprec(wp):
                branch = mpmath.power(C, E)
            out = series_mul(out, series_cpow(constant_germ(C, N, wp) - u, E, branch))
    if spec.rational is not None:
        num, dn = poly_from_inverse_powers([c.big(wp) for c in spec.rational[0]], N, wp)
        den, dd = poly_from_inverse_powers([c.big(wp) for c in spec.rational[1]], N, wp)
        ratio = series_mul(num, series_inv(den))
        out = series_mul(out, series_shift(ratio, dd - dn))
    with mpmath.workprec(prec):
        return GermAtInfinity(tuple(+c for c in out.coeffs), prec)
