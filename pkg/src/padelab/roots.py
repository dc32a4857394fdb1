"""Simultaneous polynomial root finding (Aberth-Ehrlich) at arbitrary precision.

Coefficients are in ascending order: ``poly[k]`` multiplies ``z**k``.

A cheap double-precision Aberth pass from points on a perturbed circle gives
starting values; the full-precision pass then converges in a handful of
iterations.  Roots closer than ``2**(-prec/8)`` are merged into one root with
multiplicity, located at the cluster mean and polished by the
multiplicity-aware Newton step ``z - m p/p'``.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .bigseries import DEFAULT_PREC, to_big


class RootFindingError(RuntimeError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass
class ZeroMultiset:
    roots: list  # of (mpc location, multiplicity)
    prec: int = DEFAULT_PREC
    iterations: int = 0
    max_residual: float = 0.0

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.roots)

    def locations(self, with_multiplicity: bool = True) -> list:
        if not with_multiplicity:
            return [z for z, _ in self.roots]
        return [z for z, m in self.roots for _ in range(m)]

    def as_complex(self) -> np.ndarray:
        return np.array([complex(z) for z in self.locations()], dtype=complex)

    def multiplicities(self) -> list:
        return [m for _, m in self.roots]


def polyval(coeffs, z):
    """Horner evaluation, ascending coefficients; run inside the caller's precision."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _val_der(coeffs, z):
    p = coeffs[-1]
    dp = 0
    for c in reversed(coeffs[:-1]):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _val_der_abs(coeffs, z):
    # value, derivative and the Horner sum of |c_k| |z|^k (a rounding-error scale)
    p = coeffs[-1]
    dp = 0
    az = abs(z)
    pabs = abs(p)
    for c in reversed(coeffs[:-1]):
        dp = dp * z + p
        p = p * z + c
        pabs = pabs * az + abs(c)
    return p, dp, pabs


def _initial_circle(a: np.ndarray) -> np.ndarray:
    d = len(a) - 1
    lead = a[-1]
    center = -a[-2] / (d * lead)
    coeffs = np.abs(a[:-1] / lead)
    ks = [k for k in range(1, d + 1) if coeffs[d - k] > 0]
    r = max(coeffs[d - k] ** (1.0 / k) for k in ks) if ks else 1.0
    r = max(r, 1e-8)
    ang = 2 * np.pi * np.arange(d) / d + 0.4
    return center + r * np.exp(1j * ang)


def _aberth_double(a: np.ndarray, z: np.ndarray, max_iter: int = 300) -> np.ndarray:
    d = len(z)
    for _ in range(max_iter):
        with np.errstate(all="ignore"):
            p = np.full(d, a[-1], dtype=complex)
            dp = np.zeros(d, dtype=complex)
            for c in a[-2::-1]:
                dp = dp * z + p
                p = p * z + c
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            corr = ratio / (1 - ratio * inv.sum(axis=1))
        if not np.all(np.isfinite(corr)):
            break
        z = z - corr
        if np.max(np.abs(corr)) <= 1e-14 * max(1.0, np.max(np.abs(z))):
            break
    return z


def roots(poly, prec: int = DEFAULT_PREC, max_iter: int = 600, escalate: bool = True) -> ZeroMultiset:
    """All complex roots of ``sum poly[k] z**k`` with multiplicities."""
    cs = [to_big(c, prec) for c in poly]
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial has no finite root set")
    nzero = 0
    while cs[nzero] == 0:
        nzero += 1
    cs = cs[nzero:]
    out = [(mpmath.mpc(0), nzero)] if nzero else []
    d = len(cs) - 1
    if d == 0:
        return ZeroMultiset(out, prec)
    with mpmath.workprec(prec):
        lead = cs[-1]
        mon = [c / lead for c in cs]
    if d == 1:
        with mpmath.workprec(prec):
            out.append((-mon[0], 1))
        return ZeroMultiset(_merge(out), prec)

    a = np.array([complex(c) for c in mon])
    if not np.all(np.isfinite(a)):
        a = None
    start = _aberth_double(a, _initial_circle(a)) if a is not None else None
    if start is None or not np.all(np.isfinite(start)):
        start = _initial_circle(np.nan_to_num(a)) if a is not None else np.exp(2j * np.pi * np.arange(d) / d + 0.4j)

    try:
        found, its, res = _aberth_mp(mon, start, prec, max_iter)
    except RootFindingError:
        if not escalate:
            raise
        found, its, res = _aberth_mp(mon, start, 2 * prec, 2 * max_iter)
        with mpmath.workprec(prec):
            found = [(+z, m) for z, m in found]
    return ZeroMultiset(_merge(out + found), prec, its, res)


def _merge(pairs):
    return sorted(pairs, key=lambda zm: (float(zm[0].real), float(zm[0].imag)))


def _aberth_mp(mon, start, prec, max_iter):
    d = len(mon) - 1
    eps = mpmath.mpf(2) ** (-prec + 12)
    rnd = 4 * (d + 1) * mpmath.mpf(2) ** (-prec)
    with mpmath.workprec(prec):
        z = [mpmath.mpc(complex(s)) for s in start]
        active = [True] * d
        its = 0
        for its in range(1, max_iter + 1):
            moved = False
            for i in range(d):
                if not active[i]:
                    continue
                p, dp, pabs = _val_der_abs(mon, z[i])
                # once |p| is inside its own rounding error, further steps are noise
                if abs(p) <= rnd * pabs:
                    active[i] = False
                    continue
                ratio = p / dp if dp != 0 else mpmath.mpc(1)
                zi = z[i]
                s = mpmath.fsum(1 / (zi - z[j]) for j in range(d) if j != i and z[j] != zi)
                corr = ratio / (1 - ratio * s)
                z[i] = zi - corr
                if abs(corr) <= eps * max(1, abs(z[i])):
                    active[i] = False
                else:
                    moved = True
            if not moved:
                break

        clusters = _cluster(z, mpmath.mpf(2) ** (-prec / 8))
        found = []
        for group in clusters:
            m = len(group)
            zc = mpmath.fsum(group) / m
            for _ in range(8):
                # multiplicity-aware Newton on the (m-1)-th derivative keeps quadratic convergence
                p, dp = _val_der(_deriv(mon, m - 1), zc)
                if dp == 0:
                    break
                step = p / dp
                zc -= step
                if abs(step) <= eps * max(1, abs(zc)):
                    break
            found.append((zc, m))

        scale = max(abs(c) for c in mon)
        worst = 0.0
        bad = []
        for zc, m in found:
            r = abs(polyval(mon, zc))
            bound = mpmath.mpf(2) ** (-prec / 4) * scale * max(1, abs(zc)) ** d
            worst = max(worst, float(r / bound) if bound else 0.0)
            if r > bound:
                bad.append(zc)
        if bad:
            raise RootFindingError(
                f"{len(bad)} root(s) failed the residual certificate after {its} iterations", found
            )
        return found, its, worst


def _deriv(c, k):
    for _ in range(k):
        c = [j * c[j] for j in range(1, len(c))]
    return c


def _cluster(z, tol):
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= tol * max(1, abs(z[i])):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(z[i])
    return list(groups.values())


def poly_from_roots(zs: ZeroMultiset | list, prec: int = DEFAULT_PREC) -> list:
    """Monic polynomial (ascending) with the given roots."""
    locs = zs.locations() if isinstance(zs, ZeroMultiset) else list(zs)
    with mpmath.workprec(prec):
        c = [mpmath.mpc(1)]
        for r in locs:
            c = [(-r * c[0])] + [c[k - 1] - r * c[k] for k in range(1, len(c))] + [c[-1]]
        return c
