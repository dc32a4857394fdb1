"""Arbitrary-precision complex scalars and truncated germs at infinity.

A germ ``c_0 + c_1/z + c_2/z**2 + ... + c_N/z**N`` is stored as its coefficient
tuple.  All arithmetic runs inside ``mpmath.workprec`` at the germ's precision,
so results never depend on whatever ``mpmath.mp.prec`` happens to be globally.
Because that setting is process-global, concurrent callers should use
processes rather than threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

BigComplex = mpmath.mpc

DEFAULT_PREC = 512
MIN_PREC = 64


class SeriesError(ValueError):
    pass


class PrecisionMismatchError(SeriesError):
    pass


def check_prec(prec: int) -> int:
    prec = int(prec)
    if prec < MIN_PREC:
        raise SeriesError(f"precision must be >= {MIN_PREC} bits, got {prec}")
    return prec


def to_big(x, prec: int = DEFAULT_PREC) -> mpmath.mpc:
    """Convert numbers, fractions or strings like ``"1/2"``, ``"1+2j"`` to mpc.

    Strings are parsed at the target precision so decimal input is not first
    rounded to a double.
    """
    with mpmath.workprec(prec):
        if isinstance(x, mpmath.mpc):
            out = +x
        elif isinstance(x, Fraction):
            out = mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
        elif isinstance(x, str):
            s = x.strip().replace(" ", "")
            if "/" in s:
                out = mpmath.mpc(to_big(Fraction(s), prec))
            else:
                out = mpmath.mpc(mpmath.mpmathify(s))
        else:
            out = mpmath.mpc(x)
        if not (mpmath.isfinite(out.real) and mpmath.isfinite(out.imag)):
            raise SeriesError(f"non-finite value {x!r}")
        return out


@dataclass(frozen=True)
class GermAtInfinity:
    """Truncated expansion ``sum_k coeffs[k] * z**(-k)`` at working precision ``prec``."""

    coeffs: tuple
    prec: int = DEFAULT_PREC

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise SeriesError("empty germ")
        check_prec(self.prec)
        with mpmath.workprec(self.prec):
            cs = tuple(mpmath.mpc(c) for c in self.coeffs)
        for c in cs:
            if not (mpmath.isfinite(c.real) and mpmath.isfinite(c.imag)):
                raise SeriesError("germ coefficient overflow / non-finite")
        object.__setattr__(self, "coeffs", cs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def truncate(self, N: int) -> "GermAtInfinity":
        return GermAtInfinity(self.coeffs[: N + 1], self.prec)

    def norm(self) -> mpmath.mpf:
        with mpmath.workprec(self.prec):
            return max(abs(c) for c in self.coeffs)

    def __add__(self, other):
        return series_add(self, _coerce(other, self))

    __radd__ = __add__

    def __neg__(self):
        return series_scale(self, -1)

    def __sub__(self, other):
        return series_add(self, -_coerce(other, self))

    def __rsub__(self, other):
        return series_add(_coerce(other, self), -self)

    def __mul__(self, other):
        if isinstance(other, GermAtInfinity):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__


def _coerce(x, like: GermAtInfinity) -> GermAtInfinity:
    if isinstance(x, GermAtInfinity):
        return x
    return constant_germ(x, like.order, like.prec)


def germ(coeffs: Iterable, prec: int = DEFAULT_PREC) -> GermAtInfinity:
    return GermAtInfinity(tuple(to_big(c, prec) for c in coeffs), prec)


def constant_germ(c, N: int, prec: int = DEFAULT_PREC) -> GermAtInfinity:
    zero = mpmath.mpc(0)
    return GermAtInfinity((to_big(c, prec),) + (zero,) * N, prec)


def zero_germ(N: int, prec: int = DEFAULT_PREC) -> GermAtInfinity:
    return constant_germ(0, N, prec)


def _common(a: GermAtInfinity, b: GermAtInfinity) -> tuple[int, int]:
    if a.prec != b.prec:
        raise PrecisionMismatchError(f"precision mismatch: {a.prec} vs {b.prec}")
    return min(a.order, b.order), a.prec


def series_add(a: GermAtInfinity, b: GermAtInfinity) -> GermAtInfinity:
    N, prec = _common(a, b)
    with mpmath.workprec(prec):
        return GermAtInfinity(tuple(a[k] + b[k] for k in range(N + 1)), prec)


def series_scale(a: GermAtInfinity, s) -> GermAtInfinity:
    s = to_big(s, a.prec)
    with mpmath.workprec(a.prec):
        return GermAtInfinity(tuple(s * c for c in a.coeffs), a.prec)


def series_shift(a: GermAtInfinity, k: int) -> GermAtInfinity:
    """Multiply by ``z**(-k)`` (k >= 0) or by ``z**|k|`` (k < 0, dropping the leading terms).

    Dropping requires the removed leading coefficients to be the caller's
    responsibility: they are discarded, not checked.
    """
    zero = mpmath.mpc(0)
    if k >= 0:
        return GermAtInfinity(((zero,) * k + a.coeffs)[: a.order + 1], a.prec)
    return GermAtInfinity(a.coeffs[-k:], a.prec)


def series_mul(a: GermAtInfinity, b: GermAtInfinity) -> GermAtInfinity:
    """Cauchy product truncated at ``min(N_a, N_b)``."""
    N, prec = _common(a, b)
    ac, bc = a.coeffs, b.coeffs
    with mpmath.workprec(prec):
        out = [mpmath.fsum(ac[i] * bc[k - i] for i in range(k + 1)) for k in range(N + 1)]
    return GermAtInfinity(tuple(out), prec)


def _log_unit(v: Sequence, N: int) -> list:
    # log(v) for v_0 == 1:  k L_k = k v_k - sum_{j=1}^{k-1} j L_j v_{k-j}
    L = [mpmath.mpc(0)] * (N + 1)
    for k in range(1, N + 1):
        s = k * v[k] - mpmath.fsum(j * L[j] * v[k - j] for j in range(1, k))
        L[k] = s / k
    return L


def _exp_nilpotent(E: Sequence, N: int) -> list:
    # exp(E) for E_0 == 0:  k e_k = sum_{j=1}^{k} j E_j e_{k-j}
    e = [mpmath.mpc(1)] + [mpmath.mpc(0)] * N
    for k in range(1, N + 1):
        e[k] = mpmath.fsum(j * E[j] * e[k - j] for j in range(1, k + 1)) / k
    return e


def series_log_unit(a: GermAtInfinity) -> GermAtInfinity:
    """``log(a / a_0)``, a germ with zero constant term."""
    with mpmath.workprec(a.prec):
        a0 = a[0]
        if a0 == 0:
            raise SeriesError("leading coefficient vanishes")
        v = [c / a0 for c in a.coeffs]
        return GermAtInfinity(tuple(_log_unit(v, a.order)), a.prec)


def series_exp(a: GermAtInfinity) -> GermAtInfinity:
    """``exp(a)`` for a germ; the constant term contributes the factor ``exp(a_0)``."""
    with mpmath.workprec(a.prec):
        e = _exp_nilpotent(a.coeffs, a.order)
        s = mpmath.exp(a[0])
        return GermAtInfinity(tuple(s * c for c in e), a.prec)


def series_cpow(a: GermAtInfinity, alpha, branch) -> GermAtInfinity:
    """Complex power ``branch * exp(alpha * log(a / a_0))``.

    ``branch`` selects the value of ``a_0**alpha``; the caller decides which
    one, since no branch is canonical once ``alpha`` is not an integer.
    """
    prec = a.prec
    alpha = to_big(alpha, prec)
    branch = to_big(branch, prec)
    with mpmath.workprec(prec):
        a0 = a[0]
        if a0 == 0:
            raise SeriesError("leading coefficient vanishes; the power would shift the expansion point")
        N = a.order
        v = [c / a0 for c in a.coeffs]
        L = _log_unit(v, N)
        e = _exp_nilpotent([alpha * x for x in L], N)
        return GermAtInfinity(tuple(branch * c for c in e), prec)


def series_sqrt(a: GermAtInfinity, branch) -> GermAtInfinity:
    prec = a.prec
    branch = to_big(branch, prec)
    with mpmath.workprec(prec):
        a0 = a[0]
        if a0 == 0:
            raise SeriesError("leading coefficient vanishes")
        if abs(branch * branch - a0) > mpmath.ldexp(abs(a0), -prec // 2):
            raise SeriesError(f"branch {branch} is not a square root of a_0 = {a0}")
    return series_cpow(a, mpmath.mpf(1) / 2, branch)


def series_inv(a: GermAtInfinity) -> GermAtInfinity:
    with mpmath.workprec(a.prec):
        b0 = 1 / a[0] if a[0] != 0 else None
    if b0 is None:
        raise SeriesError("leading coefficient vanishes")
    return series_cpow(a, -1, b0)


def series_eval(a: GermAtInfinity, z) -> tuple[mpmath.mpc, float]:
    """Horner evaluation in ``1/z``.

    Returns ``(value, tail_bound)`` where
    ``tail_bound = max(|c_{N-3}|, ..., |c_N|) |z|^-N / (1 - 1/|z|)`` is a
    heuristic gauge of the truncation remainder, not a certified bound.
    """
    z = to_big(z, a.prec)
    with mpmath.workprec(a.prec):
        if z == 0:
            raise SeriesError("cannot evaluate a germ at infinity at z = 0")
        w = 1 / z
        acc = mpmath.mpc(0)
        for c in reversed(a.coeffs):
            acc = acc * w + c
        N = a.order
        # last few coefficients, not just c_N: germs with parity structure have tiny c_N
        cN = max(abs(c) for c in a.coeffs[max(1, N - 3):]) if N > 0 else 0
        if N == 0 or cN == 0:
            tail = 0.0
        else:
            r = abs(w)
            tail = float(cN * r**N / (1 - r)) if r < 1 else math.inf
        return acc, tail


def poly_from_inverse_powers(coeffs_in_z: Sequence, N: int, prec: int) -> tuple[GermAtInfinity, int]:
    """Germ of ``p(z) / z**deg(p)`` for ``p = sum coeffs_in_z[i] z**i``; returns (germ, deg)."""
    cs = [to_big(c, prec) for c in coeffs_in_z]
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    d = len(cs) - 1
    zero = mpmath.mpc(0)
    out = [cs[d - k] if k <= d else zero for k in range(N + 1)]
    return GermAtInfinity(tuple(out), prec), d
