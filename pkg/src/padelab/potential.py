"""Logarithmic potential theory on finite unions of real intervals.

The equilibrium measure of ``S = [a_1, a_2] u ... u [a_{2p-1}, a_{2p}]`` has density

    d lambda / dx = |h(x)| / (pi * sqrt|prod_i (x - a_i)|),

with ``h`` of degree ``p - 1`` fixed by one vanishing condition per gap and
unit total mass.  Every integral is taken in the angle variable
``x = c + L cos(theta)`` of its interval, which removes the inverse square
root at the endpoints.  The smooth remainder ``G(theta)`` is stored by its
cosine coefficients, so potentials, CDFs and the Green function are cheap
sums that stay accurate right up to ``S``.

Everything here runs in double precision.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalSystem:
    """Sorted endpoints ``a_1 < a_2 < ... < a_2p``."""

    endpoints: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.endpoints)
        if len(e) < 2 or len(e) % 2:
            raise PotentialError("need an even, nonzero number of endpoints")
        if any(not math.isfinite(x) for x in e) or any(b <= a for a, b in zip(e, e[1:])):
            raise PotentialError(f"endpoints must be finite and strictly increasing: {e}")
        object.__setattr__(self, "endpoints", e)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[float]]) -> "IntervalSystem":
        ivs = sorted((float(a), float(b)) for a, b in intervals)
        return cls(tuple(x for iv in ivs for x in iv))

    @property
    def p(self) -> int:
        return len(self.endpoints) // 2

    @property
    def intervals(self) -> list:
        e = self.endpoints
        return [(e[2 * j], e[2 * j + 1]) for j in range(self.p)]

    @property
    def gaps(self) -> list:
        e = self.endpoints
        return [(e[2 * j + 1], e[2 * j + 2]) for j in range(self.p - 1)]

    @property
    def diameter(self) -> float:
        return self.endpoints[-1] - self.endpoints[0]

    @property
    def center(self) -> float:
        return 0.5 * (self.endpoints[0] + self.endpoints[-1])

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        d = np.full(z.shape, np.inf)
        for a, b in self.intervals:
            x = np.clip(z.real, a, b)
            d = np.minimum(d, np.abs(z - x))
        return d

    def contains(self, z, tol: float = 0.0) -> np.ndarray:
        return self.distance(z) <= tol


@dataclass
class DiscreteMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=complex).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.atoms.shape != self.weights.shape:
            raise PotentialError("atoms and weights differ in length")
        if np.any(self.weights < 0):
            raise PotentialError("negative weight")

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def _cheb_angles(K: int) -> np.ndarray:
    return (2 * np.arange(1, K + 1) - 1) * np.pi / (2 * K)


def _phi(w: np.ndarray) -> np.ndarray:
    # exterior inverse Zhukovskii, |phi| >= 1
    s = np.sqrt(w * w - 1 + 0j)
    p1, p2 = w + s, w - s
    return np.where(np.abs(p1) >= np.abs(p2), p1, p2)


@dataclass
class EquilibriumData:
    S: IntervalSystem
    h_coeffs: np.ndarray  # ascending powers
    gamma: float
    K: int
    cos_coeffs: list  # per interval, cosine coefficients a_k of G(theta)
    masses: np.ndarray
    nodes: np.ndarray = field(repr=False)  # x-nodes on S, interval by interval
    weights: np.ndarray = field(repr=False)  # lambda_S quadrature weights at the nodes

    @property
    def capacity(self) -> float:
        return math.exp(-self.gamma)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.array(self.S.endpoints)
        prod = np.abs(np.prod(x[..., None] - e, axis=-1))
        h = np.abs(np.polynomial.polynomial.polyval(x, self.h_coeffs))
        inside = self.S.contains(x.astype(complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(inside & (prod > 0), h / (np.pi * np.sqrt(prod)), 0.0)
        return out

    def potential(self, z) -> np.ndarray:
        """``V(z) = integral log(1/|z - t|) d lambda_S(t)``, valid everywhere including on ``S``."""
        z = np.asarray(z, dtype=complex)
        V = np.zeros(z.shape)
        for (a, b), ak, mass in zip(self.S.intervals, self.cos_coeffs, self.masses):
            c, L = 0.5 * (a + b), 0.5 * (b - a)
            phi = _phi((z - c) / L)
            r = np.abs(phi)
            V += (-math.log(L) - np.log(r / 2)) * mass
            inv = 1 / phi
            pw = np.ones_like(inv)
            acc = np.zeros(z.shape)
            for k in range(1, len(ak)):
                pw = pw * inv
                acc += ak[k] * pw.real / k
            V += np.pi * acc
        return V

    def green(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.S.p == 1:
            a, b = self.S.endpoints
            r = np.abs(_phi((z - 0.5 * (a + b)) / (0.5 * (b - a))))
            g = np.log(r)
        else:
            g = self.gamma - self.potential(z)
        g = np.maximum(g, 0.0)
        return np.where(self.S.contains(z), 0.0, g)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        F = np.zeros(x.shape)
        for (a, b), ak, mass in zip(self.S.intervals, self.cos_coeffs, self.masses):
            c, L = 0.5 * (a + b), 0.5 * (b - a)
            th = np.arccos(np.clip((x - c) / L, -1, 1))
            part = 0.5 * ak[0] * (np.pi - th)
            for k in range(1, len(ak)):
                part -= ak[k] * np.sin(k * th) / k
            F += np.where(x >= b, mass, np.where(x <= a, 0.0, part))
        return F

    def frostman_deviation(self) -> float:
        return float(np.max(np.abs(self.potential(self.nodes.astype(complex)) - self.gamma)))

    def discretize(self, K: int = None) -> DiscreteMeasure:
        if K is None or K == self.K:
            return DiscreteMeasure(self.nodes.astype(complex), self.weights)
        return solve_equilibrium(self.S, K).discretize()

    def critical_points(self) -> list:
        """Zeros of ``h`` in the gaps (saddle points of the Green function)."""
        if self.S.p == 1:
            return []
        roots = np.polynomial.polynomial.polyroots(self.h_coeffs)
        out = []
        for lo, hi in self.S.gaps:
            inside = [r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-9 and lo < r.real < hi]
            out.append(inside[0] if inside else 0.5 * (lo + hi))
        return out

    def to_json(self) -> str:
        def s(x):
            return repr(float(x))

        d = {
            "endpoints": [s(x) for x in self.S.endpoints],
            "h_coeffs": [s(x) for x in self.h_coeffs],
            "gamma": s(self.gamma),
            "capacity": s(self.capacity),
            "masses": [s(x) for x in self.masses],
            "nodes": [s(x) for x in self.nodes],
            "weights": [s(x) for x in self.weights],
        }
        return json.dumps(d, indent=1)


def solve_equilibrium(S: IntervalSystem, K: int = 64) -> EquilibriumData:
    """Equilibrium measure, Robin constant and capacity of ``S``.

    ``gamma`` is the lambda-average of the potential over ``S`` (constant
    there); for a single interval the closed forms ``cap = (b - a)/4`` and the
    arcsine density are used directly.
    """
    if K < 32:
        raise PotentialError("need at least 32 quadrature nodes per interval")
    e = np.array(S.endpoints)
    p = S.p
    th = _cheb_angles(K)
    cos_th = np.cos(th)

    def others(x, exclude):
        keep = [i for i in range(2 * p) if i not in exclude]
        if not keep:
            return np.ones_like(x)
        return np.sqrt(np.abs(np.prod(x[:, None] - e[keep], axis=1)))

    if p == 1:
        h = np.array([1.0])
    else:
        A = np.zeros((p, p))
        rhs = np.zeros(p)
        for j, (lo, hi) in enumerate(S.gaps):
            c, L = 0.5 * (lo + hi), 0.5 * (hi - lo)
            x = c + L * cos_th
            base = (np.pi / K) / others(x, (2 * j + 1, 2 * j + 2))
            A[j] = [np.sum(base * x**k) for k in range(p)]
        for j, (lo, hi) in enumerate(S.intervals):
            c, L = 0.5 * (lo + hi), 0.5 * (hi - lo)
            x = c + L * cos_th
            sign = (-1.0) ** (p - 1 - j)
            base = (1 / K) / others(x, (2 * j, 2 * j + 1))
            A[p - 1] += sign * np.array([np.sum(base * x**k) for k in range(p)])
        rhs[p - 1] = 1.0
        try:
            h = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise PotentialError(f"degenerate interval geometry: {exc}") from None

    cos_coeffs, masses, nodes, weights = [], [], [], []
    k = np.arange(K)
    Cmat = np.cos(np.outer(k, th))
    for j, (lo, hi) in enumerate(S.intervals):
        c, L = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = c + L * cos_th
        hx = np.polynomial.polynomial.polyval(x, h)
        sign = (-1.0) ** (p - 1 - j)
        if np.any(sign * hx <= 0):
            raise PotentialError("equilibrium density changes sign on an interval")
        G = np.abs(hx) / (np.pi * others(x, (2 * j, 2 * j + 1)))
        ak = (2.0 / K) * (Cmat @ G)
        cos_coeffs.append(ak)
        masses.append(0.5 * np.pi * ak[0])
        order = np.argsort(x)
        nodes.append(x[order])
        weights.append((np.pi / K) * G[order])

    eq = EquilibriumData(
        S=S,
        h_coeffs=h,
        gamma=math.nan,
        K=K,
        cos_coeffs=cos_coeffs,
        masses=np.array(masses),
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
    )
    if p == 1:
        eq.gamma = math.log(4.0 / S.diameter)
    else:
        V = eq.potential(eq.nodes.astype(complex))
        eq.gamma = float(np.sum(eq.weights * V) / np.sum(eq.weights))
    if not abs(eq.masses.sum() - 1) < 1e-8:
        raise PotentialError(f"quadrature did not converge (mass {eq.masses.sum()!r}); increase K")
    return eq


def green(eq: EquilibriumData, z) -> float:
    return float(eq.green(complex(z)))


def potential_of_measure(mu: DiscreteMeasure, z, atol: float = 2.0**-26) -> float:
    """``sum_i w_i log(1/|z - x_i|)``."""
    z = complex(z)
    d = np.abs(z - mu.atoms)
    if d.size and d.min() <= atol * max(1.0, abs(z)):
        raise PotentialError(f"z = {z} coincides with an atom of the measure")
    return float(-np.sum(mu.weights * np.log(d)))


# --------------------------------------------------------------------------
# level curves


@dataclass
class LevelCurve:
    rho: float
    points: np.ndarray  # complex
    component: np.ndarray  # int index per point

    @property
    def n_components(self) -> int:
        return int(self.component.max()) + 1 if self.component.size else 0

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def level_components(eq: EquilibriumData, rho: float) -> list:
    """Groups of interval indices enclosed by one loop of ``{g = log rho}``."""
    level = math.log(rho)
    groups = [[0]]
    for j, c in enumerate(eq.critical_points()):
        if float(eq.green(complex(c))) < level:
            groups[-1].append(j + 1)
        else:
            groups.append([j + 1])
    return groups


def level_curve(eq: EquilibriumData, rho: float, M: int = 64, tol: float = 1e-8) -> LevelCurve:
    """``M`` points on ``{z : g(z) = log rho}``, arclength-uniform per component.

    Each component is traced by bracketing the level on rays from the centre
    of the intervals it encloses.
    """
    if not rho > 1:
        raise PotentialError("rho must exceed 1")
    level = math.log(rho)
    ivs = eq.S.intervals
    groups = level_components(eq, rho)

    def radius(center, angle):
        d = complex(math.cos(angle), math.sin(angle))
        f = lambda r: float(eq.green(center + r * d)) - level
        lo, hi = 0.0, 0.25 * eq.S.diameter + 1.0
        while f(hi) < 0:
            lo, hi = hi, 2 * hi
        return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)

    loops = []
    for grp in groups:
        center = complex(0.5 * (ivs[grp[0]][0] + ivs[grp[-1]][1]), 0.0)
        angles = np.linspace(0, 2 * np.pi, 4 * M, endpoint=False)
        pts = np.array([center + radius(center, a) * np.exp(1j * a) for a in angles])
        closed = np.append(pts, pts[0])
        seg = np.abs(np.diff(closed))
        s = np.concatenate([[0.0], np.cumsum(seg)])
        loops.append((center, angles, s))

    total = sum(s[-1] for _, _, s in loops)
    counts = [max(8, int(round(M * s[-1] / total))) for _, _, s in loops]
    counts[-1] = max(8, M - sum(counts[:-1])) if len(loops) > 1 else M

    points, comp = [], []
    for idx, ((center, angles, s), n) in enumerate(zip(loops, counts)):
        a_ext = np.append(angles, 2 * np.pi)
        targets = np.arange(n) * s[-1] / n
        new_angles = np.interp(targets, s, a_ext)
        for a in new_angles:
            points.append(center + radius(center, a) * np.exp(1j * a))
            comp.append(idx)
    points = np.array(points)
    err = np.max(np.abs(eq.green(points) - level))
    if err > tol:
        warnings.warn(f"level curve accuracy {err:.2e} exceeds {tol:.0e}")
    return LevelCurve(rho, points, np.array(comp, dtype=int))


# --------------------------------------------------------------------------
# brute-force oracle


def project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{w >= 0, sum w = z}`` (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - z
    ind = np.arange(1, len(v) + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass
class OracleResult:
    gamma_hat: float
    measure: DiscreteMeasure
    iterations: int
    converged: bool

    @property
    def capacity(self) -> float:
        return math.exp(-self.gamma_hat)

    def interval_masses(self, S: IntervalSystem) -> np.ndarray:
        x = self.measure.atoms.real
        return np.array([self.measure.weights[(x >= a) & (x <= b)].sum() for a, b in S.intervals])

    def __iter__(self):
        return iter((self.gamma_hat, self.measure))


def oracle_grid(S: IntervalSystem, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Arcsine-spaced points per interval and the lengths of their cells."""
    xs, cells = [], []
    total = sum(b - a for a, b in S.intervals)
    counts = [max(2, int(round(M * (b - a) / total))) for a, b in S.intervals]
    counts[-1] += M - sum(counts)
    for (a, b), n in zip(S.intervals, counts):
        c, L = 0.5 * (a + b), 0.5 * (b - a)
        x = c - L * np.cos(_cheb_angles(n))
        edges = np.concatenate([[a], 0.5 * (x[1:] + x[:-1]), [b]])
        xs.append(x)
        cells.append(np.diff(edges))
    return np.concatenate(xs), np.concatenate(cells)


def energy_oracle(
    S: IntervalSystem, M: int = 2000, max_iter: int = 5000, tol: float = 1e-13
) -> OracleResult:
    """Minimize discrete logarithmic energy over weights on a fixed grid.

    Off-diagonal interactions are ``log 1/|x_i - x_j|``; each atom also carries
    the self-energy ``log(1/l_i) + 3/2`` of a uniform charge on its cell of
    length ``l_i``.  Without that diagonal a single atom would have zero
    energy and the minimization would collapse.  Accelerated projected
    gradient with constant step ``1/L`` and adaptive restart.
    """
    if M < 100:
        raise PotentialError("oracle grid needs M >= 100")
    x, cells = oracle_grid(S, M)
    n = len(x)
    diff = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(diff, 1.0)
    Kmat = -np.log(diff)
    np.fill_diagonal(Kmat, -np.log(cells) + 1.5)
    Lf = 2 * float(np.max(np.abs(np.linalg.eigvalsh(Kmat))))
    step = 1.0 / Lf

    w = np.full(n, 1.0 / n)
    y, t = w.copy(), 1.0
    f_old = float(w @ Kmat @ w)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w_new = project_simplex(y - step * 2 * (Kmat @ y))
        f_new = float(w_new @ Kmat @ w_new)
        if f_new > f_old:
            y, t = w.copy(), 1.0  # restart momentum
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = w_new + ((t - 1) / t_new) * (w_new - w)
        moved = np.max(np.abs(w_new - w))
        w, t = w_new, t_new
        done = abs(f_old - f_new) <= tol * max(1.0, abs(f_new)) and moved < math.sqrt(tol)
        f_old = f_new
        if done:
            converged = True
            break
    if not converged:
        warnings.warn("energy oracle reached max_iter before converging; returning best iterate")
    return OracleResult(float(w @ Kmat @ w), DiscreteMeasure(x.astype(complex), w), it, converged)
