"""Command-line front end: every computation as a subcommand emitting tables.

Output is CSV (RFC-4180 quoting, '.' decimal separator, 17-significant-digit
floats, metadata in leading '# key=value' lines) or JSON (metadata object plus
one object per row).  Every table records version, seed, method and wall time;
primary data columns are byte-identical across runs with the same RunConfig.

Exit codes: 0 success, 2 usage error, 3 numerical-contract violation,
4 statistical acceptance failure under --assert.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .connected import connected_correlation, decay_bound, moebius_reconstruct
from .correlations import (
    CorrelationRequest,
    Method,
    finite_correlation_cp1,
    limit_correlation,
    pair_correlation_closed,
)
from .covariance import PointConfiguration
from .errors import AcceptanceFailure, NumericalContractError
from .kernels import scaled_kernel_residual
from .montecarlo import empirical_pair_correlation, poisson_baseline, worker_count

__all__ = ["main", "RunConfig", "ResultTable", "read_points_file", "read_config_file"]

USAGE_EXIT = 2
CONTRACT_EXIT = 3
ACCEPT_EXIT = 4


@dataclass
class RunConfig:
    """Resolved parameters of one subcommand run (defaults recorded verbatim)."""

    command: str
    params: dict
    seed: int = 0
    threads: Optional[int] = None
    output: Optional[str] = None
    fmt: str = "csv"
    assert_bounds: bool = False


@dataclass
class ResultTable:
    columns: list          # (name, provenance) pairs
    rows: list
    metadata: dict = field(default_factory=dict)

    def _float_str(self, x) -> str:
        if isinstance(x, float):
            return format(x, ".17g")
        return str(x)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}={self.metadata[key]}\n")
        for name, prov in self.columns:
            buf.write(f"# column {name} provenance={prov}\n")
        writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow([name for name, _ in self.columns])
        for row in self.rows:
            writer.writerow([self._float_str(x) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        names = [name for name, _ in self.columns]
        return json.dumps(
            {
                "metadata": {
                    **self.metadata,
                    "columns": [
                        {"name": n, "provenance": p} for n, p in self.columns
                    ],
                },
                "rows": [dict(zip(names, row)) for row in self.rows],
            },
            indent=1,
            default=float,
        )

    def write(self, cfg: RunConfig):
        text = self.to_csv() if cfg.fmt == "csv" else self.to_json()
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def read_points_file(path: str, m: int) -> PointConfiguration:
    """Points file: one point per line, m complex numbers as 're,im' pairs
    separated by whitespace; '#' lines ignored."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != m:
                raise ValueError(
                    f"{path}:{lineno}: expected {m} coordinates, got {len(toks)}"
                )
            pt = []
            for tok in toks:
                re_s, _, im_s = tok.partition(",")
                try:
                    pt.append(complex(float(re_s), float(im_s or 0.0)))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad coordinate {tok!r}") from exc
            rows.append(pt)
    if not rows:
        raise ValueError(f"{path}: no points")
    return PointConfiguration(np.array(rows, dtype=complex))


def read_config_file(path: str) -> dict:
    """Flat key=value file; '#' lines ignored.  Command-line flags override."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = val.strip()
    return out


def _parse_grid(text: str) -> list[float]:
    vals = [float(tok) for tok in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty grid")
    return vals


def _meta(cfg: RunConfig, method: str, t0: float) -> dict:
    return {
        "version": __version__,
        "command": cfg.command,
        "seed": cfg.seed,
        "method": method,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        **{k: v for k, v in cfg.params.items() if not isinstance(v, PointConfiguration)},
    }


def cmd_pair_curve(cfg: RunConfig) -> ResultTable:
    """Closed-form vs Wick-route pair correlation over an r-grid."""
    t0 = time.perf_counter()
    m = cfg.params["m"]
    grid = cfg.params["r_grid"]
    if any(r <= 0 for r in grid):
        raise ValueError("r-grid must be positive")
    rows = []
    for r in grid:
        t = 0.5 * r * r
        closed = pair_correlation_closed(t, m)
        pts = np.zeros((2, m), dtype=complex)
        pts[1, 0] = r
        req = CorrelationRequest(2, 1, m, PointConfiguration(pts), Method.EXACT_WICK)
        wick = limit_correlation(req).normalized
        rows.append((r, t, closed, wick, abs(closed - wick)))
    if cfg.assert_bounds and any(row[4] > 1e-9 * abs(row[2]) for row in rows):
        raise AcceptanceFailure("closed-form and Wick routes disagree beyond 1e-9")
    return ResultTable(
        columns=[
            ("r", "input"),
            ("t", "input"),
            ("ktilde_closed", "analytic"),
            ("ktilde_wick", "wick"),
            ("abs_diff", "analytic"),
        ],
        rows=rows,
        metadata=_meta(cfg, "closed_form+exact_wick", t0),
    )


def cmd_limit_corr(cfg: RunConfig) -> ResultTable:
    """Limit correlation of an arbitrary configuration from a points file."""
    t0 = time.perf_counter()
    config: PointConfiguration = cfg.params["config"]
    n, k, m = config.n, cfg.params["k"], config.m
    method = cfg.params["method"]
    rows = []
    columns = [("n", "input"), ("k", "input"), ("m", "input"), ("raw", ""), ("normalized", "")]
    if method == "both":
        wick = limit_correlation(CorrelationRequest(n, k, m, config, Method.EXACT_WICK))
        mc = limit_correlation(
            CorrelationRequest(
                n, k, m, config, Method.MONTE_CARLO,
                mc_samples=cfg.params["samples"], mc_seed=cfg.seed,
            )
        )
        z = abs(wick.normalized - mc.normalized) / mc.std_error
        columns = [
            ("n", "input"), ("k", "input"), ("m", "input"),
            ("raw_wick", "wick"), ("normalized_wick", "wick"),
            ("normalized_mc", "mc"), ("std_error_mc", "mc"), ("z_disagreement", "mc"),
        ]
        rows.append((n, k, m, wick.raw, wick.normalized, mc.normalized, mc.std_error, z))
        if cfg.assert_bounds and z > 4.0:
            raise AcceptanceFailure(f"wick vs mc disagree at {z:.2f} standard errors")
        method_tag = "exact_wick+monte_carlo"
    else:
        meth = Method(method)
        val = limit_correlation(
            CorrelationRequest(
                n, k, m, config, meth,
                mc_samples=cfg.params["samples"], mc_seed=cfg.seed,
            )
        )
        prov = "mc" if meth == Method.MONTE_CARLO else (
            "analytic" if meth == Method.CLOSED_FORM else "wick"
        )
        columns = [
            ("n", "input"), ("k", "input"), ("m", "input"),
            ("raw", prov), ("normalized", prov),
        ]
        row = [n, k, m, val.raw, val.normalized]
        if val.std_error is not None:
            columns.append(("std_error", "mc"))
            row.append(val.std_error)
        rows.append(tuple(row))
        method_tag = method
    return ResultTable(columns=columns, rows=rows, metadata=_meta(cfg, method_tag, t0))


def cmd_finite_n(cfg: RunConfig) -> ResultTable:
    """Finite-degree vs limit pair correlation over an N-grid on CP^1."""
    t0 = time.perf_counter()
    r = cfg.params["r"]
    ns = [int(x) for x in cfg.params["n_grid"]]
    if r <= 0 or any(N < 1 for N in ns):
        raise ValueError("need r > 0 and N >= 1")
    config = PointConfiguration(np.array([[0.0], [r]], dtype=complex))
    limit = limit_correlation(CorrelationRequest(2, 1, 1, config, Method.EXACT_WICK))
    rows = []
    for N in ns:
        fin = finite_correlation_cp1(N, 2, config)
        rows.append((N, r, fin.raw, limit.raw, abs(fin.raw - limit.raw)))
    errs = np.array([row[4] for row in rows])
    slope = (
        float(np.polyfit(np.log(ns), np.log(errs), 1)[0]) if len(ns) >= 2 else np.nan
    )
    if cfg.assert_bounds and not (slope <= -0.45):
        raise AcceptanceFailure(f"finite-degree convergence slope {slope:.3f} > -0.45")
    meta = _meta(cfg, "exact_wick", t0)
    meta["loglog_slope"] = slope
    return ResultTable(
        columns=[
            ("N", "input"), ("r", "input"),
            ("finite_raw", "wick"), ("limit_raw", "wick"), ("abs_err", "wick"),
        ],
        rows=rows,
        metadata=meta,
    )


def cmd_connected(cfg: RunConfig) -> ResultTable:
    """Connected correlations with decay bounds over a scale family."""
    t0 = time.perf_counter()
    n, k, m = cfg.params["n"], cfg.params["k"], cfg.params["m"]
    scales = cfg.params["scales"]
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    rows = []
    for s in scales:
        # regular n-gon of side s (pairwise-distinct by construction)
        if n == 1:
            config = PointConfiguration(np.zeros((1, m), dtype=complex))
        else:
            ang = np.exp(2j * np.pi * np.arange(n) / n)
            radius = s / abs(ang[1] - ang[0])
            pts = np.zeros((n, m), dtype=complex)
            pts[:, 0] = radius * ang
            config = PointConfiguration(pts)
        tval = connected_correlation(n, k, m, config).value
        if n >= 2:
            dval = decay_bound(config)
            ratio = abs(tval) / dval
        else:
            dval, ratio = np.nan, np.nan
        # Moebius round trip through cached connected values
        cache: dict[tuple, float] = {}

        def tev(block, _cfg=config):
            if block not in cache:
                cache[block] = (
                    1.0
                    if len(block) == 1
                    else connected_correlation(len(block), k, m, _cfg.subset(block)).value
                )
            return cache[block]

        recon = moebius_reconstruct(n, tev, config)
        direct = (
            1.0
            if n == 1
            else limit_correlation(
                CorrelationRequest(n, k, m, config, Method.EXACT_WICK)
            ).normalized
        )
        rows.append((s, tval, dval, ratio, abs(recon - direct)))
    if cfg.assert_bounds and any(row[4] > 1e-10 for row in rows):
        raise AcceptanceFailure("Moebius round trip above 1e-10")
    return ResultTable(
        columns=[
            ("scale", "input"),
            ("t_connected", "wick"),
            ("decay_bound", "analytic"),
            ("ratio", "wick"),
            ("moebius_residual", "wick"),
        ],
        rows=rows,
        metadata=_meta(cfg, "exact_wick", t0),
    )


def cmd_mc_pair(cfg: RunConfig) -> ResultTable:
    """Empirical pair-correlation curve vs the analytic limit, with z-scores."""
    t0 = time.perf_counter()
    N = cfg.params["N"]
    samples = cfg.params["samples"]
    u_max = cfg.params["u_max"]
    bins = cfg.params["bins"]
    workers = worker_count(cfg.threads)
    hist, curve = empirical_pair_correlation(
        N, samples, u_max=u_max, bins=bins, seed=cfg.seed, workers=workers
    )
    analytic = np.array([pair_correlation_closed(u * u / 2, 1) for u in curve.u])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(curve.std_error > 0, (curve.value - analytic) / curve.std_error, np.inf)
    rows = [
        (float(u), int(c), float(v), float(se), float(a), float(zz))
        for u, c, v, se, a, zz in zip(
            curve.u, hist.counts, curve.value, curve.std_error, analytic, z
        )
    ]
    columns = [
        ("u", "input"),
        ("counts", "mc"),
        ("empirical", "mc"),
        ("std_error", "mc"),
        ("analytic", "analytic"),
        ("z_score", "mc"),
    ]
    meta = _meta(cfg, "mc", t0)
    if cfg.params["baseline"]:
        base = poisson_baseline(
            N, samples, u_max=u_max, bins=bins, seed=cfg.seed, workers=workers
        )
        zb = (base.value - (1.0 - 1.0 / N)) / base.std_error
        rows = [
            row + (float(bv), float(bz)) for row, bv, bz in zip(rows, base.value, zb)
        ]
        columns += [("baseline", "mc"), ("baseline_z", "mc")]
        if cfg.assert_bounds and np.abs(zb).max() > 3.0:
            raise AcceptanceFailure("Poisson baseline deviates from 1 - 1/N beyond 3 sigma")
    keep = np.abs(z[np.isfinite(z)]) <= 3.0
    meta["fraction_within_3sigma"] = round(float(keep.mean()), 4) if keep.size else 0.0
    if cfg.assert_bounds and (keep.size == 0 or keep.mean() < 0.95):
        raise AcceptanceFailure(
            f"only {100 * keep.mean():.1f}% of bins within 3 sigma of the limit curve"
        )
    return ResultTable(columns=columns, rows=rows, metadata=meta)


def cmd_kernel_check(cfg: RunConfig) -> ResultTable:
    """Scaled kernel residuals over (N, u, v) grids with per-N spread stats."""
    t0 = time.perf_counter()
    ns = [int(x) for x in cfg.params["n_grid"]]
    m = cfg.params["m"]
    offsets = cfg.params["u_grid"]
    rows = []
    ratios = {}
    for N in ns:
        vals = []
        for u in offsets:
            for v in offsets:
                uu = np.zeros(m, dtype=complex)
                vv = np.zeros(m, dtype=complex)
                uu[0], vv[0] = u, v
                res = scaled_kernel_residual(N, m, uu, vv)
                vals.append(res)
                rows.append((N, u, v, res, res * np.sqrt(N)))
        vals = np.asarray(vals)
        ratios[N] = float(vals.max() / np.median(vals))
    meta = _meta(cfg, "analytic", t0)
    for N, ratio in ratios.items():
        meta[f"max_over_median_N{N}"] = round(ratio, 4)
    if cfg.assert_bounds and any(rat > 2.0 for rat in ratios.values()):
        raise AcceptanceFailure("scaled residual spread exceeds 2x median on the grid")
    return ResultTable(
        columns=[
            ("N", "input"),
            ("u", "input"),
            ("v", "input"),
            ("residual", "analytic"),
            ("residual_sqrtN", "analytic"),
        ],
        rows=rows,
        metadata=meta,
    )


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zerocorr",
        description="Scaling-limit correlation functions of random polynomial zeros",
    )
    ap.add_argument("--config", help="key=value file; flags override its values")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--output", "-o", default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--assert", dest="assert_bounds", action="store_true",
                       help="exit 4 when a statistical acceptance bound fails")

    p = sub.add_parser("pair-curve", help="closed form vs Wick pair correlation")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--r-grid", default="0.5,1,2")
    common(p)

    p = sub.add_parser("limit-corr", help="limit correlation at a configuration")
    p.add_argument("--points", required=True, help="points file")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--method", choices=("exact_wick", "monte_carlo", "closed_form", "both"),
                   default="exact_wick")
    p.add_argument("--samples", type=int, default=200_000)
    common(p)

    p = sub.add_parser("finite-n", help="finite-degree vs limit on CP^1")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--n-grid", default="64,256,1024")
    common(p)

    p = sub.add_parser("connected", help="connected correlations and decay bounds")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--scales", default="1,2,3")
    common(p)

    p = sub.add_parser("mc-pair", help="Monte Carlo pair correlation of SU(2) zeros")
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--u-max", type=float, default=4.0)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--baseline", action="store_true")
    common(p)

    p = sub.add_parser("kernel-check", help="near-diagonal kernel residuals")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n-grid", default="16,64,256,1024")
    p.add_argument("--u-grid", default="0,0.5,1,1.5,2")
    common(p)

    return ap


_COMMANDS = {
    "pair-curve": cmd_pair_curve,
    "limit-corr": cmd_limit_corr,
    "finite-n": cmd_finite_n,
    "connected": cmd_connected,
    "mc-pair": cmd_mc_pair,
    "kernel-check": cmd_kernel_check,
}

# flags that config files may set (strings are coerced by the argparse types)
_CONFIG_KEYS = {
    "seed", "threads", "output", "format", "m", "k", "n", "N", "r",
    "r_grid", "n_grid", "u_grid", "scales", "samples", "bins", "u_max",
    "method", "points", "baseline",
}


def _apply_config_file(args: argparse.Namespace, path: str, argv: Sequence[str]):
    values = read_config_file(path)
    explicit = {tok.split("=")[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, val in values.items():
        attr = key.replace("-", "_")
        if attr not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if attr in explicit or not hasattr(args, attr if attr != "format" else "fmt"):
            continue  # flags override; ignore keys the subcommand lacks
        target = "fmt" if attr == "format" else attr
        current = getattr(args, target)
        if isinstance(current, bool):
            setattr(args, target, val.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, target, int(val))
        elif isinstance(current, float):
            setattr(args, target, float(val))
        else:
            setattr(args, target, val)


def _run(args: argparse.Namespace) -> ResultTable:
    params: dict
    if args.command == "pair-curve":
        params = {"m": args.m, "r_grid": _parse_grid(args.r_grid)}
    elif args.command == "limit-corr":
        config = read_points_file(args.points, args.m)
        params = {
            "config": config, "k": args.k, "m": args.m,
            "method": args.method, "samples": args.samples, "points": args.points,
        }
    elif args.command == "finite-n":
        params = {"r": args.r, "n_grid": _parse_grid(args.n_grid)}
    elif args.command == "connected":
        params = {"n": args.n, "k": args.k, "m": args.m, "scales": _parse_grid(args.scales)}
    elif args.command == "mc-pair":
        params = {
            "N": args.N, "samples": args.samples, "u_max": args.u_max,
            "bins": args.bins, "baseline": args.baseline,
        }
    elif args.command == "kernel-check":
        params = {
            "m": args.m, "n_grid": _parse_grid(args.n_grid),
            "u_grid": _parse_grid(args.u_grid),
        }
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(f"unknown command {args.command}")
    cfg = RunConfig(
        command=args.command,
        params=params,
        seed=args.seed,
        threads=args.threads,
        output=args.output,
        fmt=args.fmt,
        assert_bounds=args.assert_bounds,
    )
    return _COMMANDS[args.command](cfg), cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config_file(args, args.config, argv)
        table, cfg = _run(args)
        table.write(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except NumericalContractError as exc:
        print(f"numerical contract violated: {exc}", file=sys.stderr)
        return CONTRACT_EXIT
    except AcceptanceFailure as exc:
        print(f"acceptance failure: {exc}", file=sys.stderr)
        return ACCEPT_EXIT
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
