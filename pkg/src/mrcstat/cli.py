"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 verification
ran but the KS distance exceeded the threshold.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _backend, covariance, gqf, montecarlo, scenario_io
from .errors import InputError, MrcStatError, NumericalError, ScenarioError

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_VERIFY_FAILED = 0, 1, 2, 3
CSV_HEADER = "x,pdf,cdf,local_diversity,order_m"


def _fmt(value: float) -> str:
    return format(float(value), ".15g")


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:n`` with optional ``:log`` (default) or ``:lin``."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise InputError(f"grid must look like lo:hi:n[:log|lin], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"cannot parse grid {text!r}") from exc
    scale = parts[3] if len(parts) == 4 else "log"
    if scale not in ("log", "lin"):
        raise InputError("grid spacing must be 'log' or 'lin'")
    if not (0 < lo < hi and math.isfinite(hi)) or n < 1:
        raise InputError("grid needs 0 < lo < hi and n >= 1")
    if n == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, n) if scale == "log" else np.linspace(lo, hi, n)


def parse_order(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        m = int(text)
    except ValueError as exc:
        raise InputError(f"order must be 'auto' or an integer, got {text!r}") from exc
    if m < 2:
        raise InputError("order must be >= 2")
    return m


def _load(ref: str) -> scenario_io.ScenarioFile:
    """Scenario from a path, or a bundled scenario by name."""
    path = Path(ref)
    if not path.exists() and not ref.endswith(".json") and ref in scenario_io.bundled_names():
        path = scenario_io.bundled_path(ref)
    return scenario_io.load(path)


def _seed(args, sf: scenario_io.ScenarioFile) -> int:
    seed = sf.scenario.seed if args.seed is None else args.seed
    if not 0 <= seed < 2**64:
        raise InputError("seed must lie in [0, 2**64)")
    return seed


def _config(args) -> gqf.ApproxConfig:
    return gqf.ApproxConfig(
        order=parse_order(args.order), tolerance=args.tol, cap=args.cap,
        extrapolate=not args.no_extrapolate,
    )


def _write_text(target: str, text: str):
    if target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_meta(args, meta: dict):
    path = args.meta or (None if args.out == "-" else args.out + ".meta.json")
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def curve_csv(curve: gqf.DistributionCurve) -> str:
    rows = [CSV_HEADER]
    for x, f, F, d, m in zip(curve.x, curve.pdf, curve.cdf, curve.local_diversity, curve.order):
        rows.append(",".join([_fmt(x), _fmt(f), _fmt(F), _fmt(d), str(int(m))]))
    return "\n".join(rows) + "\n"


def ecdf_csv(samples: montecarlo.SampleSet) -> str:
    T = len(samples)
    rows = ["x,ecdf"]
    rows.extend(f"{_fmt(q)},{_fmt((i + 1) / T)}" for i, q in enumerate(samples.samples))
    return "\n".join(rows) + "\n"


def _base_meta(sf, seed, stats=None) -> dict:
    meta = {
        "version": __version__,
        "backend": _backend.name(),
        "scenario_digest": sf.scenario.digest(),
        "seed": seed,
    }
    if stats is not None:
        meta.update(trace_sigma=stats.trace, mean_power=stats.mean_power, expected_gain=stats.expected_gain)
    return meta


def _max_error(curve):
    if curve.error_estimate is None or not np.isfinite(curve.error_estimate).any():
        return None
    return float(np.nanmax(curve.error_estimate))


def cmd_analyze(args) -> int:
    sf = _load(args.scenario)
    seed = _seed(args, sf)
    cfg = _config(args)
    start = time.perf_counter()
    stats = covariance.assemble(sf.scenario)
    d = gqf.decompose(stats)
    grid = parse_grid(args.grid) if args.grid else gqf.auto_grid(d, args.points)
    curve = gqf.evaluate_curve(d, grid, cfg)
    _write_text(args.out, curve_csv(curve))
    meta = _base_meta(sf, seed, stats)
    meta.update(
        orders_used=sorted({int(m) for m in curve.order}),
        order_policy="auto" if cfg.adaptive else cfg.order,
        tolerance=cfg.tolerance,
        converged=curve.converged,
        max_error_estimate=_max_error(curve),
        extrapolated=curve.extrapolated,
        regularized=d.regularized,
        warnings=list(stats.warnings) + curve.warnings,
        wall_time_s=time.perf_counter() - start,
    )
    _write_meta(args, meta)
    for w in meta["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sf = _load(args.scenario)
    seed = _seed(args, sf)
    cfg = montecarlo.SimConfig(args.trials, args.waves, seed, args.mode)
    start = time.perf_counter()
    samples = montecarlo.run(sf.scenario, cfg)
    _write_text(args.out, ecdf_csv(samples))
    meta = _base_meta(sf, seed)
    meta.update(trials=cfg.trials, waves=cfg.waves, mode=cfg.mode,
                sample_mean=samples.mean, wall_time_s=time.perf_counter() - start)
    _write_meta(args, meta)
    return EXIT_OK


def verify_samples(scenario, samples, cfg: gqf.ApproxConfig, points: int = 400):
    """KS distance of samples against the analytic CDF of ``scenario``."""
    d = gqf.decompose(covariance.assemble(scenario))
    q = samples.samples
    lo = max(float(q[0]), 1e-300)
    hi = max(float(q[-1]), lo * (1 + 1e-9))
    grid = np.geomspace(lo, hi, points) if hi > lo * (1 + 1e-6) else np.array([lo])
    curve = gqf.evaluate_curve(d, grid, cfg)
    return montecarlo.ks_distance(samples, curve.cdf_function()), curve


def cmd_verify(args) -> int:
    sf = _load(args.scenario)
    sim = _load(args.sim_scenario) if args.sim_scenario else sf
    seed = _seed(args, sf)
    sim_cfg = montecarlo.SimConfig(args.trials, args.waves, seed, args.mode)
    start = time.perf_counter()
    samples = montecarlo.run(sim.scenario, sim_cfg)
    ks, curve = verify_samples(sf.scenario, samples, _config(args))
    passed = ks < args.threshold
    report = _base_meta(sf, seed)
    report.update(
        ks_distance=ks, threshold=args.threshold, passed=passed, trials=sim_cfg.trials,
        waves=sim_cfg.waves, mode=sim_cfg.mode, orders_used=sorted({int(m) for m in curve.order}),
        max_error_estimate=_max_error(curve), simulated_scenario_digest=sim.scenario.digest(),
        warnings=curve.warnings, wall_time_s=time.perf_counter() - start,
    )
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    print(f"{'PASS' if passed else 'FAIL'} ks={ks:.6f} threshold={args.threshold:g} "
          f"T={sim_cfg.trials} Z={sim_cfg.waves} seed={seed} orders={report['orders_used']} "
          f"time={report['wall_time_s']:.1f}s")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def info_text(sf: scenario_io.ScenarioFile) -> str:
    s = sf.scenario
    stats = covariance.assemble(s)
    M, N = s.num_elements, s.num_taps
    lines = [
        f"elements M = {M}",
        f"taps N = {N}",
        f"dimension = {stats.dimension}",
        f"local areas = {len(set(s.layout.local_areas))}",
        f"trace(Sigma) = {stats.trace:.12g}",
        f"|mu|^2 = {stats.mean_power:.12g}",
        f"E[Q] = {stats.expected_gain:.12g}",
    ]
    eig = np.linalg.eigvalsh(stats.covariance)
    lmax, lmin = float(eig[-1]), float(eig[0])
    cond = math.inf if lmin <= 1e-15 * max(lmax, 1e-300) else lmax / lmin
    lines.append(f"condition number = {cond:.6g}")
    rho = np.abs(stats.correlation_matrix())
    pairs = [(i, j) for i in range(stats.dimension) for j in range(i + 1, stats.dimension)
             if i // M == j // M and s.layout.elements[i % M].local_area == s.layout.elements[j % M].local_area]
    if pairs:
        vals = np.array([rho[i, j] for i, j in pairs])
        lines.append(f"pair |rho|: min = {vals.min():.6g}, max = {vals.max():.6g} over {len(pairs)} pairs")
        adj = [rho[i, i + 1] for i in range(stats.dimension - 1) if i // M == (i + 1) // M]
        if adj:
            lines.append(f"adjacent |rho|: max = {max(adj):.6g}")
    else:
        lines.append("pair |rho|: no pairs")
    if N > 1:
        off = 0.0
        for a in range(N):
            for b in range(N):
                if a != b:
                    off = max(off, float(np.max(np.abs(stats.covariance[a * M:(a + 1) * M, b * M:(b + 1) * M]))))
        lines.append("block-diagonal over taps: " + ("confirmed" if off == 0.0 else f"violated (max {off:.3g})"))
    for w in stats.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def cmd_info(args) -> int:
    sf = _load(args.scenario)
    sys.stdout.write(info_text(sf))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in scenario_io.bundled_names():
        print(name)
    return EXIT_OK


def _add_order_flags(p):
    p.add_argument("--order", default="auto", help="approximation order m or 'auto' (default)")
    p.add_argument("--tol", type=float, default=1e-6, help="adaptive convergence tolerance")
    p.add_argument("--cap", type=int, default=4096, help="adaptive order cap")
    p.add_argument("--no-extrapolate", action="store_true", help="use the raw order-m values")


def _add_sim_flags(p, trials):
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--waves", type=int, default=800)
    p.add_argument("--mode", choices=montecarlo.MODES, default="shared")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrcstat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="scenario JSON path or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="overrides the scenario seed (default 0)")
        return p

    p = common("analyze", "analytic pdf, cdf and local diversity as CSV")
    p.add_argument("--grid", help="lo:hi:n[:log|lin]; default spans the distribution")
    p.add_argument("--points", type=int, default=200, help="points of the default grid")
    _add_order_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--meta", help="metadata path (default OUT.meta.json)")
    p.set_defaults(func=cmd_analyze)

    p = common("simulate", "Monte Carlo ECDF as CSV")
    _add_sim_flags(p, 100_000)
    p.add_argument("--out", default="-")
    p.add_argument("--meta", help="metadata path (default OUT.meta.json)")
    p.set_defaults(func=cmd_simulate)

    p = common("verify", "KS distance between Monte Carlo and the analytic CDF")
    _add_sim_flags(p, 100_000)
    _add_order_flags(p)
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--sim-scenario", help="simulate this scenario instead (mismatch checks)")
    p.set_defaults(func=cmd_verify)

    p = common("info", "summary of the channel statistics")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("list", help="names of the bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def _report_error(kind: str, exc: Exception):
    if isinstance(exc, ScenarioError):
        print(f"error ({kind}): invalid scenario", file=sys.stderr)
        for path, msg in exc.violations:
            print(f"  {path}: {msg}", file=sys.stderr)
    else:
        print(f"error ({kind}): {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        _report_error("input", exc)
        return EXIT_INPUT
    except NumericalError as exc:
        _report_error("numerical", exc)
        return EXIT_NUMERICAL
    except MrcStatError as exc:
        _report_error("input", exc)
        return EXIT_INPUT
    except OSError as exc:
        _report_error("input", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
