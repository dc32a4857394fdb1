"""Command-line experiment runner.

    padelab verify --config experiment.toml --out results/ [--assert]
    padelab pade --coeffs "0, 1, 1/2, 1/4, 1/8" --n 1
    padelab equilibrium --intervals "-1,1"
    padelab green --intervals "-1,1" --z 2
    padelab germ --A 2 --B 3 --N 10
    padelab oracle --intervals "-2,-1; 1,2" --M 2000

Exit codes: 0 success, 1 assertion failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import mpmath

from .bigseries import DEFAULT_PREC, GermAtInfinity, SeriesError, germ
from .pade import PadeError, PadePair, big_to_str, germ_hash, pade_pair, residual_order, str_to_big
from .potential import IntervalSystem, PotentialError, energy_oracle, solve_equilibrium
from .roots import RootFindingError
from .testfn import (
    BranchTrackingError,
    Exact,
    Segment,
    SpecError,
    TestFunctionSpec,
    germ_at_infinity,
    stahl_compact,
)
from .verify import ConvergenceReport, ProbeSet, VerifyError, exactness_report, rate_report, window_median

log = logging.getLogger("padelab")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
N_CEILING = 512
NUMERIC_ERRORS = (PadeError, RootFindingError, BranchTrackingError, PotentialError, SeriesError, VerifyError, ArithmeticError)


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    spec: TestFunctionSpec
    precision_bits: int = DEFAULT_PREC
    n_min: int = 5
    n_max: int = 60
    n_step: int = 1
    rhos: list = field(default_factory=lambda: [1.2, 1.5, 2.0])
    probes: list = None  # None: default probes scaled to S
    K: int = 64
    M: int = 2000
    out: str = "out"
    cache: str = ".padelab-cache"
    seed: int = 0
    workers: int = 1
    assert_scale: float = 1.0

    def __post_init__(self):
        if self.n_min < 1:
            raise ConfigError("n_min must be >= 1")
        if self.n_max > N_CEILING:
            raise ConfigError(f"n_max must be <= {N_CEILING}")
        if self.n_max < self.n_min or self.n_step < 1:
            raise ConfigError("need n_min <= n_max and n_step >= 1")
        if any(r <= 1 for r in self.rhos):
            raise ConfigError("every rho must exceed 1")

    @property
    def ns(self) -> list:
        return list(range(self.n_min, self.n_max + 1, self.n_step))

    def canonical(self) -> str:
        """Text covering every field that affects results (not ``out``, ``cache`` or ``workers``)."""
        d = {
            "spec": self.spec.to_text(),
            "precision_bits": self.precision_bits,
            "n": [self.n_min, self.n_max, self.n_step],
            "rhos": [repr(r) for r in self.rhos],
            "probes": None if self.probes is None else [repr(complex(z)) for z in self.probes],
            "K": self.K,
            "M": self.M,
            "seed": self.seed,
            "assert_scale": repr(self.assert_scale),
        }
        return json.dumps(d, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _line_of(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip().startswith(key):
            return i
    return None


def _real(x) -> float:
    if isinstance(x, str):
        x = x.strip()
        return float(Fraction(x)) if "/" in x else float(x)
    return float(x)


def _complex(x) -> complex:
    if isinstance(x, str):
        return complex(x.replace(" ", "").replace("i", "j"))
    return complex(x)


def parse_config(text: str) -> ExperimentConfig:
    """Parse TOML text; errors mention the offending line where one exists."""
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    def fail(key, msg):
        line = _line_of(text, key)
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}{key}: {msg}")

    if "spec" not in d:
        fail("[spec]", "missing spec table")
    prec = int(d.get("precision_bits", d["spec"].get("precision_bits", DEFAULT_PREC)))
    spec_d = dict(d["spec"])
    spec_d["precision_bits"] = prec
    try:
        spec = TestFunctionSpec.from_mapping(spec_d)
    except (SpecError, ValueError, KeyError, TypeError) as exc:
        fail("[spec]", str(exc))
    kw = {}
    for key, conv in (
        ("n_min", int),
        ("n_max", int),
        ("n_step", int),
        ("K", int),
        ("M", int),
        ("seed", int),
        ("workers", int),
        ("out", str),
        ("cache", str),
        ("assert_scale", _real),
    ):
        if key in d:
            try:
                kw[key] = conv(d[key])
            except (TypeError, ValueError) as exc:
                fail(key, str(exc))
    try:
        if "rhos" in d:
            kw["rhos"] = [_real(r) for r in d["rhos"]]
        if "probes" in d:
            kw["probes"] = [_complex(z) for z in d["probes"]]
    except (TypeError, ValueError) as exc:
        fail("rhos" if "probes" not in d else "probes", str(exc))
    unknown = set(d) - {"spec", "precision_bits", "rhos", "probes"} - {k for k in kw}
    for key in sorted(unknown):
        fail(key, "unknown key")
    try:
        return ExperimentConfig(spec=spec, precision_bits=prec, **kw)
    except ConfigError as exc:
        key = str(exc).split()[0]
        line = _line_of(text, key)
        raise ConfigError(f"line {line}: {exc}" if line else str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# --------------------------------------------------------------------------
# cache


class Cache:
    """Germs and pairs on disk as full-precision decimal JSON, keyed by hashes."""

    def __init__(self, root):
        self.root = Path(root) if root else None
        if self.root:
            (self.root / "germs").mkdir(parents=True, exist_ok=True)
            (self.root / "pairs").mkdir(parents=True, exist_ok=True)
        self.hits = 0

    def germ(self, spec: TestFunctionSpec, N: int) -> GermAtInfinity:
        prec = spec.precision_bits
        key = hashlib.sha256(f"{spec.hash()}|{N}|{prec}".encode()).hexdigest()
        path = self.root / "germs" / f"{key}.json" if self.root else None
        if path and path.exists():
            d = json.loads(path.read_text())
            self.hits += 1
            return GermAtInfinity(tuple(str_to_big(s, prec) for s in d["coeffs"]), prec)
        g = germ_at_infinity(spec, N, prec)
        if path:
            path.write_text(json.dumps({"precision_bits": prec, "coeffs": [big_to_str(c, prec) for c in g.coeffs]}))
        return g

    def pair(self, g: GermAtInfinity, n: int) -> PadePair:
        gh = germ_hash(g)
        path = self.root / "pairs" / f"{gh[:32]}-{n}.json" if self.root else None
        if path and path.exists():
            pr = PadePair.from_json(path.read_text())
            if pr.germ_hash == gh and pr.prec == g.prec:
                self.hits += 1
                return pr
        pr = pade_pair(g, n)
        if path:
            path.write_text(pr.to_json())
        return pr


# --------------------------------------------------------------------------
# acceptance-style checks on a report


def theorem_checks(report: ConvergenceReport, cap: float, scale: float = 1.0) -> list:
    """Threshold checks on an algebraic-spec report; returns ``(name, ok, detail)`` triples.

    ``scale`` relaxes every tolerance multiplicatively.
    """
    rows = report.rows
    ns = report.column("n")
    out = []
    kn = report.column("k_n")
    ok = all(k >= n - 1 for n, k in zip(ns, kn))
    frac = sum(k == n for n, k in zip(ns, kn)) / len(ns)
    out.append(("degree k_n >= n-1, k_n = n for 90%", ok and frac >= 1 - 0.1 * scale, f"fraction k_n=n: {frac:.3f}"))

    n_hi = max(ns)
    late = [n for n in ns if n >= n_hi - 10]
    early = [n for n in ns if 10 <= n <= 20]

    def sm(col):
        return dict(zip(ns, window_median(report.column(col))))

    gap_s = {n: abs(v - cap) for n, v in sm("sup_S_Q").items()}
    worst_late = max(gap_s[n] for n in late)
    ok = worst_late <= 0.1 * scale and (not early or worst_late < min(gap_s[n] for n in early))
    out.append(("sup_S |Q_n|^(1/n) -> cap", ok, f"late gap {worst_late:.4f}"))

    for c in report.columns:
        if c.startswith("m_n@"):
            rho = float(c[4:])
            s = sm(c)
            g = max(abs(s[n] - rho * cap) for n in late)
            lb = min(r[f"m_k@{c[4:]}"] for r in rows if r["n"] >= 10) if any(r["n"] >= 10 for r in rows) else math.inf
            ok = g <= 0.1 * scale and lb >= (1 - 0.02 * scale) * rho * cap
            out.append((f"m_n(rho={c[4:]}) -> rho cap; lower bound", ok, f"late gap {g:.4f}, min bound ratio {lb / (rho * cap):.4f}"))

    for c in report.columns:
        if c.startswith(("gapR@", "gapF@")):
            vals = [r[c] for r in rows]
            s = dict(zip(ns, window_median(vals)))
            g = max(s[n] for n in late)
            out.append((f"{c} <= 0.15", 0 <= g <= 0.15 * scale, f"late {g:.4f}"))

    pot = dict(zip(ns, report.column("pot_gap")))
    n_lo = 20 if 20 in pot else min(ns)
    ok = pot[n_hi] <= 0.1 * scale and pot[n_hi] <= 0.5 * scale * pot[n_lo]
    out.append(("potential discrepancy decays", ok, f"n={n_hi}: {pot[n_hi]:.4g}, n={n_lo}: {pot[n_lo]:.4g}"))
    mid = 40 if 40 in ns else n_hi
    mass = dict(zip(ns, report.column("mass_near_S")))[mid]
    out.append(("zero mass near S", mass >= 1 - 0.1 * scale, f"n={mid}: {mass:.3f}"))
    return out


def exactness_checks(report: ConvergenceReport) -> list:
    ok_r = all(v == "inf" for v in report.column("residual_order"))
    ok_f = all(v == 0 for v in report.column("froissart"))
    return [("full-tail vanishing", ok_r, ""), ("no Froissart doublets", ok_f, "")]


# --------------------------------------------------------------------------
# runner


def _write(path: Path, text: str, written: dict):
    path.write_text(text)
    written[path.name if path.parent.name != "plot" else f"plot/{path.name}"] = hashlib.sha256(text.encode()).hexdigest()


def run_experiment(cfg: ExperimentConfig, out=None, cache=None, workers=None, do_assert=False) -> tuple[int, list]:
    """Run the full sweep and write the artifacts; returns ``(exit code, checks)``."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plot").mkdir(exist_ok=True)
    store = Cache(cache if cache is not None else cfg.cache)
    workers = workers or cfg.workers
    spec = cfg.spec
    N = 2 * cfg.n_max + 8
    written = {}

    g = store.germ(spec, N)
    pairs = []
    for n in cfg.ns:
        try:
            pairs.append(store.pair(g, n))
        except PadeError as exc:
            raise PadeError(f"n = {n}: {exc}") from exc

    if not spec.factors:
        probes = cfg.probes or [complex(5), complex(-4), complex(1, 2)]
        report = exactness_report(spec, g, pairs, probes)
        checks = exactness_checks(report)
    else:
        eq = solve_equilibrium(stahl_compact(spec), cfg.K)
        _write(out / "equilibrium.json", eq.to_json(), written)
        probes = ProbeSet(cfg.probes).validate(eq.S, spec) if cfg.probes else ProbeSet.default(eq.S, spec)
        report = rate_report(spec, eq, pairs, probes, cfg.rhos, workers=workers)
        checks = theorem_checks(report, eq.capacity, cfg.assert_scale)

    report.metadata["config_hash"] = cfg.hash()
    report.metadata["germ_hash"] = germ_hash(g)
    _write(out / "report.csv", report.to_csv(), written)
    _write(out / "report.json", report.to_json(), written)
    for name, text in report.plot_series().items():
        safe = name.replace("@", "_at_").replace("+", "p").replace("-", "m")
        _write(out / "plot" / f"{safe}.dat", text, written)
    manifest = {
        "config_hash": cfg.hash(),
        "spec_hash": spec.hash(),
        "germ_hash": germ_hash(g),
        "precision_bits": cfg.precision_bits,
        "files": dict(sorted(written.items())),
    }
    (out / "MANIFEST").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    code = EXIT_OK
    if do_assert and not all(ok for _, ok, _ in checks):
        code = EXIT_ASSERT
    return code, checks


# --------------------------------------------------------------------------
# argument parsing


def _intervals(s: str) -> IntervalSystem:
    try:
        parts = [p for p in s.replace(";", " ; ").split(";") if p.strip()]
        return IntervalSystem.from_intervals([[_real(x) for x in p.split(",")] for p in parts])
    except (ValueError, PotentialError) as exc:
        raise ConfigError(f"bad --intervals {s!r}: {exc}") from None


def _spec_from_args(args) -> TestFunctionSpec:
    if getattr(args, "config", None):
        return load_config(args.config).spec
    prec = args.prec
    if getattr(args, "rational", None):
        num, den = args.rational.split("|")
        return TestFunctionSpec.rational_only(
            [s.strip() for s in num.split(",")], [s.strip() for s in den.split(",")], prec
        )
    a, b = (s.strip() for s in args.segment.split(","))
    try:
        return TestFunctionSpec.sqrt_product(args.A, args.B, Segment(Exact.parse(a), Exact.parse(b)), prec)
    except (SpecError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _fmt_big(z, digits=20) -> str:
    z = mpmath.mpc(z)
    if z.imag == 0:
        return mpmath.nstr(z.real, digits)
    return mpmath.nstr(z, digits)


def _poly_text(cs) -> str:
    terms = []
    for k in range(len(cs) - 1, -1, -1):
        c = mpmath.mpc(cs[k])
        if c == 0:
            continue
        mono = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
        if c == 1 and k > 0:
            terms.append(f"+ {mono}")
        elif c.imag == 0:
            v = float(c.real)
            sign = "-" if v < 0 else "+"
            body = mpmath.nstr(abs(c.real), 15)
            terms.append(f"{sign} {body}{'*' + mono if mono else ''}")
        else:
            terms.append(f"+ ({mpmath.nstr(c, 15)}){'*' + mono if mono else ''}")
    s = " ".join(terms) or "0"
    return s[2:] if s.startswith("+ ") else ("-" + s[2:] if s.startswith("- ") else s)


def cmd_germ(args) -> int:
    spec = _spec_from_args(args)
    g = germ_at_infinity(spec, args.N, spec.precision_bits)
    coeffs = [big_to_str(c, spec.precision_bits) for c in g.coeffs]
    if args.json:
        print(json.dumps({"spec_hash": spec.hash(), "coeffs": coeffs}, indent=1))
    else:
        for k, c in enumerate(g.coeffs):
            print(f"c_{k} = {_fmt_big(c, args.digits)}")
    return EXIT_OK


def cmd_pade(args) -> int:
    if args.coeffs:
        g = germ([s.strip() for s in args.coeffs.split(",")], args.prec)
    else:
        spec = _spec_from_args(args)
        g = germ_at_infinity(spec, max(2 * args.n + 8, 2), spec.precision_bits)
    store = Cache(args.cache)
    pr = store.pair(g, args.n)
    order = residual_order(g, pr)
    if args.json:
        d = pr.to_dict()
        d["residual_order"] = "inf" if order == math.inf else order
        print(json.dumps(d, indent=1))
    else:
        print(f"n = {pr.n}, k_n = {pr.k_n}, unique = {pr.unique}")
        print(f"Q = {_poly_text(pr.q_coeffs)}")
        print(f"P = {_poly_text(pr.p_coeffs)}")
        print(f"residual order = {'inf' if order == math.inf else order}")
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    S = _intervals(args.intervals) if args.intervals else stahl_compact(_spec_from_args(args))
    eq = solve_equilibrium(S, args.K)
    if args.json:
        print(eq.to_json())
    else:
        print(f"capacity = {eq.capacity!r}")
        print(f"gamma = {eq.gamma!r}")
        print("masses = " + ", ".join(repr(float(m)) for m in eq.masses))
        print(f"frostman deviation = {eq.frostman_deviation():.3e}")
    return EXIT_OK


def cmd_green(args) -> int:
    S = _intervals(args.intervals) if args.intervals else stahl_compact(_spec_from_args(args))
    eq = solve_equilibrium(S, args.K)
    vals = [(z.strip(), float(eq.green(_complex(z)))) for z in args.z]
    if args.json:
        print(json.dumps({z: repr(v) for z, v in vals}, indent=1))
    else:
        for z, v in vals:
            print(f"g({z}) = {v!r}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    S = _intervals(args.intervals) if args.intervals else stahl_compact(_spec_from_args(args))
    res = energy_oracle(S, args.M)
    eq = solve_equilibrium(S, args.K)
    d = {
        "capacity_oracle": repr(res.capacity),
        "capacity_analytic": repr(eq.capacity),
        "masses_oracle": [repr(float(m)) for m in res.interval_masses(S)],
        "masses_analytic": [repr(float(m)) for m in eq.masses],
        "iterations": res.iterations,
        "converged": res.converged,
    }
    if args.json:
        print(json.dumps(d, indent=1))
    else:
        for k, v in d.items():
            print(f"{k} = {v}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if not args.config:
        raise ConfigError("verify needs --config")
    cfg = load_config(args.config)
    code, checks = run_experiment(cfg, out=args.out, cache=args.cache, workers=args.workers, do_assert=args.do_assert)
    if args.json:
        print(json.dumps([{"check": n, "pass": ok, "detail": d} for n, ok, d in checks], indent=1))
    else:
        for name, ok, detail in checks:
            print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}".rstrip())
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment TOML file")
    common.add_argument("--assert", dest="do_assert", action="store_true", help="exit 1 if any check fails")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--cache", default=None, help="cache directory")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--prec", type=int, default=DEFAULT_PREC, help="working precision in bits")
    common.add_argument("-v", "--verbose", action="store_true")

    spec_opts = argparse.ArgumentParser(add_help=False)
    spec_opts.add_argument("--A", default="2")
    spec_opts.add_argument("--B", default="3")
    spec_opts.add_argument("--segment", default="-1,1")
    spec_opts.add_argument("--rational", help='"num coeffs | den coeffs", ascending, e.g. "1 | -3, 1"')

    geom = argparse.ArgumentParser(add_help=False)
    geom.add_argument("--intervals", help='e.g. "-1,1" or "-2,-1; 1,2"')
    geom.add_argument("--K", type=int, default=64, help="quadrature nodes per interval")

    p = argparse.ArgumentParser(prog="padelab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("germ", parents=[common, spec_opts], help="print germ coefficients")
    s.add_argument("--N", type=int, default=10)
    s.add_argument("--digits", type=int, default=20)
    s.set_defaults(func=cmd_germ)

    s = sub.add_parser("pade", parents=[common, spec_opts], help="compute one Padé pair")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--coeffs", help="explicit germ coefficients c_0, c_1, ... (fractions allowed)")
    s.set_defaults(func=cmd_pade)

    s = sub.add_parser("equilibrium", parents=[common, spec_opts, geom], help="equilibrium measure and capacity")
    s.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("green", parents=[common, spec_opts, geom], help="Green function values")
    s.add_argument("--z", nargs="+", required=True)
    s.set_defaults(func=cmd_green)

    s = sub.add_parser("verify", parents=[common], help="full convergence sweep from a config")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("oracle", parents=[common, spec_opts, geom], help="energy-minimization cross-check")
    s.add_argument("--M", type=int, default=2000)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    # a leading space keeps argparse from reading values such as "-1,1" or "-1+1j" as flags
    argv = [" " + a if re.match(r"^-[\d.]", a) else a for a in argv]
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
