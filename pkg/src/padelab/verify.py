"""Limit-law diagnostics for computed Padé data.

Everything here measures how far finite-``n`` quantities are from their
predicted limits: zero distribution against the equilibrium measure, n-th
root rates of ``Q_n`` on ``S`` and on level curves, error-function and
approximant rates at probe points, degree saturation, spurious doublets, and
the two-sheet identity ``R(z0) - R(z1) = Q (f(z0) - f(z1))``.

Polynomial moduli ``|Q_n|`` are evaluated from the computed zeros,
``log|Q_n(z)| = sum_j m_j log|z - zeta_j|``, which stays accurate in double
precision where Horner's rule on monomial coefficients would not.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .pade import PadePair, error_at, froissart_scan
from .potential import (
    DiscreteMeasure,
    EquilibriumData,
    IntervalSystem,
    level_curve,
    potential_of_measure,
)
from .roots import ZeroMultiset, polyval, roots
from .testfn import (
    BranchTrackingError,
    CutError,
    TestFunctionSpec,
    eval_sheet0,
    eval_with_branch,
    track_sheet1,
)

WINDOW = 5
DEFAULT_PROBES = (2, -3, 1 + 1j, 0.2 + 0.9j)


class VerifyError(ValueError):
    pass


def probe_label(z: complex) -> str:
    z = complex(z)
    return f"{z.real:g}{z.imag:+g}j"


@dataclass
class ProbeSet:
    points: list
    labels: list = None

    def __post_init__(self):
        self.points = [complex(z) for z in self.points]
        if self.labels is None:
            self.labels = [probe_label(z) for z in self.points]
        if len(self.labels) != len(self.points):
            raise VerifyError("one label per probe point")

    def validate(self, S: IntervalSystem, spec: TestFunctionSpec = None) -> "ProbeSet":
        """Reject probes closer than ``0.1 diam(S)`` to ``S`` or at a pole of the multiplier."""
        for z, lab in zip(self.points, self.labels):
            if float(S.distance(z)) < 0.1 * S.diameter:
                raise VerifyError(f"probe {lab} lies within 0.1*diam(S) of S")
            if spec is not None and spec.rational is not None:
                den = [complex(c) for c in spec.rational[1]]
                if abs(np.polynomial.polynomial.polyval(z, den)) < 1e-12:
                    raise VerifyError(f"probe {lab} is a pole of the rational multiplier")
        return self

    @classmethod
    def default(cls, S: IntervalSystem, spec: TestFunctionSpec = None) -> "ProbeSet":
        """The unit-interval probes mapped affinely onto the geometry of ``S``.

        Candidates too close to ``S`` are dropped rather than rejected.
        """
        c, h = S.center, 0.5 * S.diameter
        pts = [c + h * z for z in DEFAULT_PROBES]
        pts = [z for z in pts if float(S.distance(z)) >= 0.1 * S.diameter]
        return cls(pts).validate(S, spec)

    def __iter__(self):
        return iter(zip(self.labels, self.points))

    def __len__(self):
        return len(self.points)


# --------------------------------------------------------------------------
# zero distribution


def _as_zeros(obj) -> ZeroMultiset:
    if isinstance(obj, ZeroMultiset):
        return obj
    if isinstance(obj, PadePair):
        return obj.zeros()
    return roots(obj)


def zero_measure(obj) -> DiscreteMeasure:
    """Normalized zero counting measure of ``Q`` (a pair, coefficient list or zero set)."""
    zs = _as_zeros(obj)
    k = zs.degree
    if k < 1:
        raise VerifyError("Q has no zeros (k_n = 0)")
    atoms = np.array([complex(z) for z, _ in zs.roots])
    w = np.array([m / k for _, m in zs.roots], dtype=float)
    return DiscreteMeasure(atoms, w)


def log_abs_poly(zs: ZeroMultiset, z) -> np.ndarray:
    """``log|Q(z)|`` for monic ``Q`` from its zeros (``-inf`` at a zero)."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape)
    with np.errstate(divide="ignore"):
        for zeta, m in zs.roots:
            out += m * np.log(np.abs(z - complex(zeta)))
    return out


def mass_near(mu: DiscreteMeasure, S: IntervalSystem, dist: float) -> float:
    return float(mu.weights[S.distance(mu.atoms) <= dist].sum())


def weak_star_discrepancy(
    mu: DiscreteMeasure, eq: EquilibriumData, probes: ProbeSet, discard: float = 0.1
) -> tuple[float, float]:
    """Potential gap at the probes and a Kolmogorov distance on the real line.

    ``pot_gap = max |U^mu(z) - V(z)|`` over probes.  For ``cdf_gap`` atoms
    farther than ``discard`` from ``S`` are dropped, the rest are projected to
    their real parts and renormalized, and the dropped mass is added to the
    Kolmogorov distance as a penalty.
    """
    pot_gap = 0.0
    for lab, z in probes:
        try:
            u = potential_of_measure(mu, z)
        except Exception as exc:
            raise VerifyError(f"probe {lab}: {exc}") from exc
        pot_gap = max(pot_gap, abs(u - float(eq.potential(z))))

    near = eq.S.distance(mu.atoms) <= discard
    dropped = float(mu.weights[~near].sum()) / max(mu.total, 1e-300)
    x = mu.atoms[near].real
    w = mu.weights[near]
    if w.sum() <= 0:
        return pot_gap, 1.0 + dropped
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order] / w.sum()
    F_after = np.cumsum(w)
    F_before = F_after - w
    F_lam = eq.cdf(x)
    ks = float(max(np.max(np.abs(F_after - F_lam)), np.max(np.abs(F_before - F_lam))))
    return pot_gap, ks + dropped


# --------------------------------------------------------------------------
# helpers for n-th root rates


def window_median(values, window: int = WINDOW) -> list:
    """Trailing-window median: entry ``i`` is the median of ``values[i-window+1 .. i]``."""
    vals = list(values)
    return [statistics.median(vals[max(0, i - window + 1) : i + 1]) for i in range(len(vals))]


def sample_S(S: IntervalSystem, per_interval: int = 1024) -> np.ndarray:
    """Chebyshev-extrema points on every interval, endpoints included."""
    th = np.linspace(0.0, np.pi, per_interval)
    out = []
    for a, b in S.intervals:
        out.append(0.5 * (a + b) - 0.5 * (b - a) * np.cos(th))
    return np.concatenate(out)


def _finite_log(x) -> float:
    x = abs(x)
    return float(mpmath.log(x)) if x > 0 else -math.inf


@dataclass
class CurveValues:
    """Branch values of ``f`` on a level curve, shared by all ``n``."""

    rho: float
    points: list
    f0: list
    f1: list  # None where continuation failed
    qm: list
    failures: int = 0

    @property
    def min_modulus(self) -> float:
        vals = [abs(q * (a - b)) for q, a, b in zip(self.qm, self.f0, self.f1) if b is not None]
        return float(min(vals)) if vals else math.nan


def _qm(spec: TestFunctionSpec, z, prec: int):
    if spec.rational is None:
        return mpmath.mpc(1)
    with mpmath.workprec(prec):
        return polyval([c.big(prec) for c in spec.rational[1]], mpmath.mpc(z))


def curve_values(spec: TestFunctionSpec, points, rho: float, prec: int = None) -> CurveValues:
    prec = prec or spec.precision_bits
    pts, f0, f1, qm = [], [], [], []
    fails = 0
    for z in points:
        z = complex(z)
        pts.append(z)
        f0.append(eval_sheet0(spec, z, prec))
        qm.append(_qm(spec, z, prec))
        try:
            f1.append(eval_with_branch(spec, z, track_sheet1(spec, z), prec))
        except (BranchTrackingError, CutError):
            f1.append(None)
            fails += 1
    return CurveValues(rho, pts, f0, f1, qm, fails)


def identity_residuals(pair: PadePair, cv: CurveValues) -> list:
    """Relative residual of ``R(z0) - R(z1) - Q (f0 - f1)`` at each point (``None`` if skipped)."""
    out = []
    with mpmath.workprec(pair.prec):
        for z, a, b in zip(cv.points, cv.f0, cv.f1):
            if b is None:
                out.append(None)
                continue
            zz = mpmath.mpc(z)
            q = polyval(pair.q_coeffs, zz)
            p = polyval(pair.p_coeffs, zz)
            r0, r1 = q * a - p, q * b - p
            rhs = q * (a - b)
            scale = max(abs(r0), abs(rhs))
            out.append(float(abs(r0 - r1 - rhs) / scale) if scale > 0 else 0.0)
    return out


def identity_check(spec: TestFunctionSpec, pair: PadePair, gamma_points, r1_override=None) -> float:
    """Largest relative two-sheet identity residual over ``gamma_points``.

    Sheet values come from :func:`error_at`.  ``r1_override`` maps the point
    index and the computed sheet-1 error value to a replacement (used for
    negative controls); the branch values of ``f`` stay untouched.
    """
    worst = 0.0
    with mpmath.workprec(pair.prec):
        for i, z in enumerate(gamma_points):
            try:
                branch = track_sheet1(spec, complex(z))
            except (BranchTrackingError, CutError) as exc:
                warnings.warn(f"skipping {z}: {exc}")
                continue
            r0 = error_at(pair, spec, z, 0)
            r1 = error_at(pair, spec, z, 1, branch=branch)
            if r1_override is not None:
                r1 = mpmath.mpc(r1_override(i, r1))
            f1 = eval_with_branch(spec, z, branch, pair.prec)
            f0 = eval_sheet0(spec, z, pair.prec)
            rhs = pair.Q(z) * (f0 - f1)
            scale = max(abs(r0), abs(rhs))
            if scale > 0:
                worst = max(worst, float(abs(r0 - r1 - rhs) / scale))
    return worst


# --------------------------------------------------------------------------
# the report


@dataclass
class ConvergenceReport:
    columns: list
    rows: list  # list of dicts keyed by column
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def smoothed(self, name: str, window: int = WINDOW) -> dict:
        """``n -> trailing window median`` of a column."""
        vals = window_median(self.column(name), window)
        return dict(zip(self.column("n"), vals))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": [{c: r[c] for c in self.columns} for r in self.rows],
        }
        return json.dumps(d, indent=1, allow_nan=False)

    def plot_series(self) -> dict:
        """Two-column ``n value`` text per numeric column (except ``n`` itself)."""
        out = {}
        ns = self.column("n")
        for c in self.columns[1:]:
            vals = self.column(c)
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                out[c] = "".join(f"{n} {_fmt(v)}\n" for n, v in zip(ns, vals))
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _check_finite(row: dict):
    for k, v in row.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise VerifyError(f"non-finite report field {k} = {v} at n = {row.get('n')}")


@dataclass
class _Context:
    spec: TestFunctionSpec
    eq: EquilibriumData
    probes: ProbeSet
    rhos: list
    curves: list  # CurveValues per rho
    identity: CurveValues
    s_points: np.ndarray
    froissart_tol: float
    f_probe: list


def _row(ctx: _Context, pair: PadePair, zs: ZeroMultiset = None) -> dict:
    n, k = pair.n, pair.k_n
    eq, S = ctx.eq, ctx.eq.S
    cap = eq.capacity
    zs = zs if zs is not None else pair.zeros()
    row = {"n": n, "k_n": k, "unique": bool(pair.unique), "k_ratio": k / n}

    row["sup_S_Q"] = math.exp(float(np.max(log_abs_poly(zs, ctx.s_points))) / n)

    with mpmath.workprec(pair.prec):
        for rho, cv in zip(ctx.rhos, ctx.curves):
            tag = f"{rho:g}"
            lq = log_abs_poly(zs, np.array(cv.points))
            row[f"m_n@{tag}"] = math.exp(float(np.max(lq)) / n)
            row[f"m_k@{tag}"] = math.exp(float(np.max(lq)) / k) if k else 0.0
            best = -math.inf
            for z, b, q in zip(cv.points, cv.f1, cv.qm):
                if b is None:
                    continue
                zz = mpmath.mpc(z)
                r1 = polyval(pair.q_coeffs, zz) * b - polyval(pair.p_coeffs, zz)
                best = max(best, _finite_log(r1 * q))
            row[f"M_n1@{tag}"] = math.exp(best / n) if math.isfinite(best) else 0.0

        consistency = 0.0
        for (lab, z), fz in zip(ctx.probes, ctx.f_probe):
            g = float(eq.green(z))
            zz = mpmath.mpc(z)
            q = polyval(pair.q_coeffs, zz)
            p = polyval(pair.p_coeffs, zz)
            lr = _finite_log(q * fz - p)
            le = _finite_log(fz - p / q) if q != 0 else math.inf
            lq = _finite_log(q)
            near_pole = bool(np.min(np.abs(complex(z) - np.array([complex(t) for t, _ in zs.roots]))) < 1e-8) if zs.roots else False
            ok = math.isfinite(lr) and math.isfinite(le) and not near_pole
            row[f"gapR@{lab}"] = abs(lr / n - (math.log(cap) - g)) if ok else -1.0
            row[f"gapF@{lab}"] = abs(le / n + 2 * g) if ok else -1.0
            row[f"flag@{lab}"] = 0 if ok else 1
            if ok:
                consistency = max(consistency, abs(le / n - lr / n + lq / n))
        row["rate_consistency"] = consistency

    mu = zero_measure(zs)
    try:
        pot, cdf = weak_star_discrepancy(mu, eq, ctx.probes)
    except VerifyError:
        pot, cdf = -1.0, -1.0
    row["pot_gap"] = pot
    row["cdf_gap"] = cdf
    row["mass_near_S"] = mass_near(mu, S, 0.05)
    if ctx.froissart_tol > 0:
        row["froissart"] = len(froissart_scan(pair, ctx.froissart_tol, S))
    else:
        row["froissart"] = 0
    res = [r for r in identity_residuals(pair, ctx.identity) if r is not None]
    row["identity_residual"] = max(res) if res else 0.0
    row["identity_skipped"] = sum(r is None for r in ctx.identity.f1)
    _check_finite(row)
    return row


def _columns(rhos, probes) -> list:
    cols = ["n", "k_n", "unique", "k_ratio", "sup_S_Q"]
    for rho in rhos:
        t = f"{rho:g}"
        cols += [f"m_n@{t}", f"m_k@{t}", f"M_n1@{t}"]
    for lab, _ in probes:
        cols += [f"gapR@{lab}", f"gapF@{lab}", f"flag@{lab}"]
    cols += ["rate_consistency", "pot_gap", "cdf_gap", "mass_near_S", "froissart", "identity_residual", "identity_skipped"]
    return cols


def eq_hash(eq: EquilibriumData) -> str:
    return hashlib.sha256(eq.to_json().encode()).hexdigest()


def rate_report(
    spec: TestFunctionSpec,
    eq: EquilibriumData,
    pairs: list,
    probes: ProbeSet,
    rhos=(1.2, 1.5, 2.0),
    *,
    curve_points: int = 128,
    identity_rho: float = 1.2,
    identity_points: int = 16,
    froissart_tol: float = 1e-8,
    zeros: dict = None,
    workers: int = 1,
) -> ConvergenceReport:
    """Per-``n`` table of every diagnostic, rows sorted by ``n``.

    ``zeros`` may map ``n`` to precomputed zero sets of ``Q_n``.  Columns (in
    order): ``n, k_n, unique, k_ratio, sup_S_Q``; per rho ``m_n@rho, m_k@rho,
    M_n1@rho``; per probe ``gapR@z, gapF@z, flag@z``; then ``rate_consistency,
    pot_gap, cdf_gap, mass_near_S, froissart, identity_residual,
    identity_skipped``.  A flagged probe (spurious pole nearby or a
    non-finite logarithm) has both gaps set to ``-1``.
    """
    rhos = [float(r) for r in rhos]
    if any(r <= 1 for r in rhos):
        raise VerifyError("every rho must exceed 1")
    prec = spec.precision_bits
    curves = []
    minmod = {}
    for rho in rhos:
        lc = level_curve(eq, rho, M=curve_points)
        cv = curve_values(spec, lc.points, rho, prec)
        curves.append(cv)
        minmod[f"{rho:g}"] = cv.min_modulus
        if cv.min_modulus < 1e-6:
            warnings.warn(f"|q_m (f0 - f1)| drops to {cv.min_modulus:.2e} on the level curve rho = {rho:g}")
    ident = curve_values(spec, level_curve(eq, identity_rho, M=identity_points).points, identity_rho, prec)
    f_probe = [eval_sheet0(spec, z, prec) for z in probes.points]
    ctx = _Context(spec, eq, probes, rhos, curves, ident, sample_S(eq.S), froissart_tol, f_probe)

    pairs = sorted(pairs, key=lambda p: p.n)
    zeros = zeros or {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row, [ctx] * len(pairs), pairs, [zeros.get(p.n) for p in pairs]))
    else:
        rows = [_row(ctx, p, zeros.get(p.n)) for p in pairs]

    meta = {
        "spec_hash": spec.hash(),
        "precision_bits": prec,
        "eq_hash": eq_hash(eq),
        "capacity": repr(eq.capacity),
        "rhos": [repr(r) for r in rhos],
        "probes": probes.labels,
        "min_modulus": {k: repr(v) for k, v in minmod.items()},
        "sheet1_failures": {f"{cv.rho:g}": cv.failures for cv in curves},
        "window": WINDOW,
    }
    return ConvergenceReport(_columns(rhos, probes), rows, meta)


def exactness_report(spec: TestFunctionSpec, germ, pairs: list, probes) -> ConvergenceReport:
    """Report for specs without algebraic factors: the approximants should be exact."""
    from .pade import residual_order

    rows = []
    for pair in sorted(pairs, key=lambda p: p.n):
        worst = 0.0
        with mpmath.workprec(pair.prec):
            for z in probes:
                worst = max(worst, float(abs(error_at(pair, spec, z, 0))))
        order = residual_order(germ, pair)
        rows.append(
            {
                "n": pair.n,
                "k_n": pair.k_n,
                "unique": bool(pair.unique),
                "residual_order": "inf" if order == math.inf else int(order),
                "max_abs_R": worst,
                "froissart": len(froissart_scan(pair, 1e-8)),
            }
        )
    cols = ["n", "k_n", "unique", "residual_order", "max_abs_R", "froissart"]
    meta = {"spec_hash": spec.hash(), "precision_bits": spec.precision_bits, "mode": "rational"}
    return ConvergenceReport(cols, rows, meta)
