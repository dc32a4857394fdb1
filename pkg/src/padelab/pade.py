"""Diagonal Padé pairs at infinity.

For a germ ``f = sum_k c_k z**-k`` the pair ``(P, Q)`` of degree at most ``n``
is chosen so that ``Q f - P = O(z**-(n+1))``.  Writing
``Q = sum_j q_j z**j``, the coefficients of ``z**-i`` for ``i = 1..n`` give the
Hankel system

    sum_{j=0}^{n} q_j c_{i+j} = 0,        i = 1, ..., n,

and ``P`` is the polynomial part of ``Q f``: ``p_t = sum_j q_j c_{j-t}``.

Coefficient lists are ascending (``q[k]`` multiplies ``z**k``).  Q is always
monic of the smallest degree the system admits.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import mpmath

from .bigseries import DEFAULT_PREC, GermAtInfinity, to_big
from .roots import ZeroMultiset, polyval, roots

MAX_ESCALATIONS = 4


class PadeError(ArithmeticError):
    pass


class InsufficientCoefficientsError(PadeError):
    pass


class ZeroGermError(PadeError):
    pass


class PrecisionExhaustedError(PadeError):
    pass


@dataclass(frozen=True)
class PadePair:
    p_coeffs: tuple
    q_coeffs: tuple
    n: int
    k_n: int
    unique: bool = True
    prec: int = DEFAULT_PREC
    normalization: str = "monic-Q"
    germ_hash: str = ""

    def Q(self, z):
        with mpmath.workprec(self.prec):
            return polyval(self.q_coeffs, to_big(z, self.prec))

    def P(self, z):
        with mpmath.workprec(self.prec):
            return polyval(self.p_coeffs, to_big(z, self.prec))

    def approximant(self, z):
        """``[n/n](z) = P(z) / Q(z)``."""
        with mpmath.workprec(self.prec):
            z = to_big(z, self.prec)
            return polyval(self.p_coeffs, z) / polyval(self.q_coeffs, z)

    __call__ = approximant

    def zeros(self) -> ZeroMultiset:
        return roots(self.q_coeffs, self.prec)

    # --- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k_n": self.k_n,
            "unique": self.unique,
            "p_coeffs": [big_to_str(c, self.prec) for c in self.p_coeffs],
            "q_coeffs": [big_to_str(c, self.prec) for c in self.q_coeffs],
            "precision_bits": self.prec,
            "germ_hash": self.germ_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "PadePair":
        prec = int(d["precision_bits"])
        return cls(
            p_coeffs=tuple(str_to_big(s, prec) for s in d["p_coeffs"]),
            q_coeffs=tuple(str_to_big(s, prec) for s in d["q_coeffs"]),
            n=int(d["n"]),
            k_n=int(d["k_n"]),
            unique=bool(d["unique"]),
            prec=prec,
            germ_hash=d.get("germ_hash", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "PadePair":
        return cls.from_dict(json.loads(text))


def _digits(prec: int) -> int:
    # enough decimal digits for a correctly rounded read-back to hit the same binary value
    return int(math.ceil(prec * math.log10(2))) + 3


def big_to_str(z, prec: int) -> str:
    """Decimal string of a complex number, exact enough to round-trip at ``prec``."""
    d = _digits(prec)
    with mpmath.workprec(prec):
        z = mpmath.mpc(z)
        re = mpmath.nstr(z.real, d, strip_zeros=False, min_fixed=1, max_fixed=0)
        im = mpmath.nstr(z.imag, d, strip_zeros=False, min_fixed=1, max_fixed=0)
    if z.imag == 0:
        return re
    return f"{re}{'' if im.startswith('-') else '+'}{im}j"


def str_to_big(s: str, prec: int) -> mpmath.mpc:
    s = s.strip()
    if not s.endswith("j"):
        return to_big(s, prec)
    # split on the sign that starts the imaginary part (not an exponent sign)
    body = s[:-1]
    for i in range(len(body) - 1, 0, -1):
        if body[i] in "+-" and body[i - 1] not in "eE":
            with mpmath.workprec(prec):
                return mpmath.mpc(mpmath.mpf(body[:i]), mpmath.mpf(body[i:]))
    with mpmath.workprec(prec):
        return mpmath.mpc(0, mpmath.mpf(body))


def germ_hash(g: GermAtInfinity) -> str:
    h = hashlib.sha256(str(g.prec).encode())
    for c in g.coeffs:
        h.update(big_to_str(c, g.prec).encode())
        h.update(b";")
    return h.hexdigest()


# --- construction ---------------------------------------------------------

def _norm(cs) -> mpmath.mpf:
    return max((abs(c) for c in cs), default=mpmath.mpf(0))


def _hankel_nullvector(c, n: int, tol, band):
    """Column-ordered elimination of ``H[i][j] = c[i+1+j]``.

    Columns are processed left to right with row pivoting.  The first column
    that reduces to (numerically) zero gives the lowest-degree null vector.
    Returns ``(q, rank, inconclusive)`` where ``rank`` is the rank of the full
    ``n x (n+1)`` matrix and ``inconclusive`` reports pivots that fell in the
    grey band ``[tol, band)``.
    """
    H = [[c[i + 1 + j] for j in range(n + 1)] for i in range(n)]
    pivot_rows = []  # pivot_rows[k] = row used as pivot for the k-th independent column
    pivot_cols = []
    free_rows = list(range(n))
    q = None
    inconclusive = False
    for j in range(n + 1):
        if free_rows:
            best = max(free_rows, key=lambda r: abs(H[r][j]))
            mag = abs(H[best][j])
        else:
            mag = mpmath.mpf(0)
        if tol <= mag < band:
            inconclusive = True
        if mag < tol:
            if q is None:
                q = _back_substitute(H, pivot_rows, pivot_cols, j)
            continue
        r = best
        free_rows.remove(r)
        piv = H[r][j]
        for rr in free_rows:
            f = H[rr][j] / piv
            if f != 0:
                row, prow = H[rr], H[r]
                for jj in range(j, n + 1):
                    row[jj] -= f * prow[jj]
        pivot_rows.append(r)
        pivot_cols.append(j)
    return q, len(pivot_cols), inconclusive


def _back_substitute(H, pivot_rows, pivot_cols, k):
    # solve for q_0..q_{k-1} with q_k = 1; every earlier column carries a pivot
    q = [mpmath.mpc(0)] * (k + 1)
    q[k] = mpmath.mpc(1)
    for r, j in reversed(list(zip(pivot_rows, pivot_cols))):
        s = H[r][k] + mpmath.fsum(H[r][jj] * q[jj] for jj in range(j + 1, k))
        q[j] = -s / H[r][j]
    return q


def _solve(g: GermAtInfinity, n: int, wp: int):
    with mpmath.workprec(wp):
        c = g.coeffs
        scale = _norm(c[1 : 2 * n + 1])
        tol = mpmath.ldexp(scale, -wp // 2)
        band = mpmath.ldexp(tol, 16)
        if n == 0:
            return [mpmath.mpc(1)], True, False
        q, rank, inconclusive = _hankel_nullvector(c, n, tol, band)
        unique = (n + 1 - rank) == 1
        return q, unique, inconclusive


def pade_pair(g: GermAtInfinity, n: int, escalate: bool = True) -> PadePair:
    """Diagonal ``[n/n]`` pair with monic, minimal-degree Q.

    Raises
    ------
    InsufficientCoefficientsError
        if the germ has fewer than ``2n`` terms past the constant.
    ZeroGermError
        if every coefficient vanishes.
    PrecisionExhaustedError
        if the rank decision or the residual check still fails after
        ``MAX_ESCALATIONS`` doublings of the working precision.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    if g.order < 2 * n:
        raise InsufficientCoefficientsError(f"germ order {g.order} < 2n = {2 * n}")
    if _norm(g.coeffs) == 0:
        raise ZeroGermError("numerically zero germ")
    gh = germ_hash(g)
    wp = g.prec
    for attempt in range(MAX_ESCALATIONS + 1):
        q, unique, inconclusive = _solve(g, n, wp)
        if q is not None:
            with mpmath.workprec(wp):
                k = len(q) - 1
                c = g.coeffs
                p = [mpmath.fsum(q[j] * c[j - t] for j in range(t, k + 1)) for t in range(k + 1)]
            with mpmath.workprec(g.prec):
                pair = PadePair(
                    tuple(+x for x in p), tuple(+x for x in q), n, k, unique, g.prec, germ_hash=gh
                )
            order = residual_order(g, pair)
            if order >= n + 1 and not inconclusive:
                return pair
        if not escalate:
            break
        wp *= 2
    raise PrecisionExhaustedError(f"rank test inconclusive for n = {n} after {attempt} escalation(s)")


def _tolerance(g: GermAtInfinity, pair: PadePair):
    qn = mpmath.fsum(abs(x) for x in pair.q_coeffs)
    return mpmath.ldexp(_norm(g.coeffs) * max(qn, 1), -g.prec // 2)


def residual_coefficients(g: GermAtInfinity, pair: PadePair) -> list:
    """Coefficients ``r_m`` of ``z**-m`` in ``Q f - P`` for ``m = 1 .. N - k_n``."""
    q, c = pair.q_coeffs, g.coeffs
    k = len(q) - 1
    with mpmath.workprec(g.prec):
        return [mpmath.fsum(q[j] * c[j + m] for j in range(k + 1)) for m in range(1, g.order - k + 1)]


def residual_order(g: GermAtInfinity, pair: PadePair):
    """Index of the first non-vanishing coefficient of ``Q f - P`` at infinity.

    Returns ``m`` when ``Q f - P = r_m z**-m + ...`` with ``r_m`` above the
    tolerance ``2**(-P/2) * ||c|| * ||q||_1``, ``0`` when the polynomial part
    itself does not cancel, and ``math.inf`` when every computable tail
    coefficient vanishes.
    """
    tol = _tolerance(g, pair)
    q, c = pair.q_coeffs, g.coeffs
    k = len(q) - 1
    with mpmath.workprec(g.prec):
        for t in range(max(k, len(pair.p_coeffs) - 1) + 1):
            poly = mpmath.fsum(q[j] * c[j - t] for j in range(t, k + 1)) if t <= k else 0
            p_t = pair.p_coeffs[t] if t < len(pair.p_coeffs) else 0
            if abs(poly - p_t) > tol:
                return 0
        for m, r in enumerate(residual_coefficients(g, pair), start=1):
            if abs(r) > tol:
                return m
    return math.inf


def error_at(pair: PadePair, spec, z, sheet: int = 0, branch=None) -> mpmath.mpc:
    """``R_n = Q f - P`` at ``z`` on the given sheet, from closed-form branch values.

    ``branch`` may carry precomputed sheet-1 continuation data for ``z``.
    """
    from .testfn import eval_branch, eval_with_branch

    prec = pair.prec
    if sheet == 1 and branch is not None:
        fz = eval_with_branch(spec, z, branch, prec)
    else:
        fz = eval_branch(spec, z, sheet, prec)
    with mpmath.workprec(prec):
        z = to_big(z, prec)
        return polyval(pair.q_coeffs, z) * fz - polyval(pair.p_coeffs, z)


def froissart_scan(pair: PadePair, tol: float, S=None) -> list:
    """Near-coincident zero/pole doublets of ``P/Q``.

    A root of P and a root of Q closer than ``tol`` form a doublet when both
    lie farther than ``tol`` from ``S`` (an ``IntervalSystem``, optional).
    Each root is used in at most one doublet.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if pair.k_n == 0 or not any(c != 0 for c in pair.p_coeffs):
        return []
    pz = _trimmed(pair.p_coeffs)
    if len(pz) < 2:
        return []
    zeros = roots(pz, pair.prec).locations()
    poles = pair.zeros().locations()

    def off_s(w):
        return S is None or float(S.distance(complex(w))) > tol

    used = set()
    out = []
    for a in zeros:
        if not off_s(a):
            continue
        best, bd = None, tol
        for i, b in enumerate(poles):
            if i in used:
                continue
            d = float(abs(a - b))
            if d < bd and off_s(b):
                best, bd = i, d
        if best is not None:
            used.add(best)
            out.append((a, poles[best]))
    return out


def _trimmed(cs):
    cs = list(cs)
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    return cs


def cross_product(a: PadePair, b: PadePair) -> list:
    """Coefficients of ``P_a Q_b - P_b Q_a``; zero exactly when the approximants agree."""
    prec = max(a.prec, b.prec)

    def mul(x, y):
        out = [mpmath.mpc(0)] * (len(x) + len(y) - 1)
        for i, xi in enumerate(x):
            for j, yj in enumerate(y):
                out[i + j] += xi * yj
        return out

    with mpmath.workprec(prec):
        u = mul(a.p_coeffs, b.q_coeffs)
        v = mul(b.p_coeffs, a.q_coeffs)
        m = max(len(u), len(v))
        u += [0] * (m - len(u))
        v += [0] * (m - len(v))
        return [x - y for x, y in zip(u, v)]
