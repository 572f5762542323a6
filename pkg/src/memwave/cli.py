"""Command-line entry point: ``memwave <command> --config cfg.json``.

Commands: validate, spectrum, sweep, simulate, fit, verdict.  Artifacts are
plot-ready CSV and UTF-8 JSON written under the output directory.  Exit
codes: 0 success, 1 computation/module error, 2 configuration error.  Errors
emit a machine-readable JSON object on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, resolvent, spectral, timedomain
from .config import ConfigError, RunConfig, load_config
from .model import ExponentialKernel, InvalidModelError, validate_params


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if not rows:
            return
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[key]) for key in header])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _require_exponential(cfg: RunConfig) -> ExponentialKernel:
    if not isinstance(cfg.kernel, ExponentialKernel):
        raise InvalidModelError("this command needs the exponential kernel")
    return cfg.kernel


def cmd_validate(cfg: RunConfig, out: Path, threads: int) -> int:
    report = validate_params(cfg.params, cfg.kernel, cfg.grid)
    payload = {
        "passed": report.passed,
        "kappa": report.kappa,
        "alpha1": cfg.params.alpha1,
        "checks": [
            {"name": c.name, "passed": c.passed, "detail": c.detail} for c in report.checks
        ],
    }
    _write_json(out / "validate.json", payload)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    return 0 if report.passed else 1


def cmd_spectrum(cfg: RunConfig, out: Path, threads: int) -> int:
    kernel = _require_exponential(cfg)
    n_modes = cfg.options.get("spectrum", {}).get("modes", cfg.grid.count)
    if n_modes > cfg.grid.count:
        raise InvalidModelError(f"spectrum wants {n_modes} modes but the grid has {cfg.grid.count}")
    sub = cfg.grid
    if n_modes < cfg.grid.count:
        from .model import ExplicitGrid

        sub = ExplicitGrid(values=cfg.grid.xi[:n_modes])
    rows = spectral.spectrum_rows(cfg.params, kernel.delta, sub)
    _write_csv(out / "spectrum.csv", rows)
    print(f"wrote {len(rows)} modes to {out / 'spectrum.csv'}")
    return 0


def cmd_sweep(cfg: RunConfig, out: Path, threads: int) -> int:
    kernel = _require_exponential(cfg)
    opts = cfg.options.get("sweep", {})
    m_list = opts.get("M", [40])
    tau_lo = opts.get("tau_lo", 10.0)
    tau_hi = opts.get("tau_hi", 1000.0)
    sups = {}
    for m_nodes in m_list:
        sweep = resolvent.scaled_sweep(
            cfg.params,
            kernel,
            cfg.grid,
            M=m_nodes,
            tau_lo=tau_lo,
            tau_hi=tau_hi,
            omega=opts.get("omega"),
            per_decade=opts.get("per_decade", 64),
            resonances_per_branch=opts.get("resonances_per_branch", 16),
            threads=threads,
        )
        rows = [
            {
                "tau": float(sweep.taus[i]),
                "norm": float(sweep.norms[i]),
                "scaled": float(sweep.scaled[i]),
                "argmax_mode": int(sweep.argmax_modes[i]),
                "cutoff": int(sweep.cutoffs[i]),
                "resonance": int(sweep.resonance_mask[i]),
                "margin": float("nan") if sweep.margins[i] is None else float(sweep.margins[i]),
                "M": m_nodes,
            }
            for i in range(sweep.taus.size)
        ]
        _write_csv(out / f"sweep_M{m_nodes}.csv", rows)
        sups[m_nodes] = sweep.sup_scaled
        print(
            f"M={m_nodes}: sup scaled {sweep.sup_scaled:.6g} at tau {sweep.argmax_tau:.6g} "
            f"({'resonance' if sweep.sup_at_resonance else 'grid'} sample, omega={sweep.omega:g})"
        )
    summary = {
        "omega": 2.0 - 2.0 * cfg.params.a if opts.get("omega") is None else opts["omega"],
        "sup_scaled": {str(m): s for m, s in sups.items()},
        "sup_at_resonance": sweep.sup_at_resonance,
    }
    if len(m_list) >= 2:
        vals = [sups[m] for m in m_list]
        summary["relative_spread"] = (max(vals) - min(vals)) / max(vals)
    _write_json(out / "sweep_summary.json", summary)
    return 0


def cmd_simulate(cfg: RunConfig, out: Path, threads: int) -> int:
    opts = cfg.options.get("simulate", {})
    integ = opts.get("integrator", "exact")
    if integ == "general":
        state = timedomain.single_mode_data(opts.get("k", 1), opts.get("v0", 1.0))
        trace = timedomain.evolve_general_kernel(
            state,
            cfg.params,
            cfg.kernel,
            cfg.grid,
            T=opts.get("t_hi", 10.0),
            dt=opts.get("dt", 1e-3),
            sample_every=opts.get("sample_every", 10),
        )
    else:
        kernel = _require_exponential(cfg)
        if opts.get("data", "single") == "marginal":
            states = timedomain.marginal_initial_data(cfg.grid, opts.get("n_modes", cfg.grid.count))
        else:
            states = [timedomain.single_mode_data(opts.get("k", 1), opts.get("v0", 1.0))]
        trajs = [
            timedomain.exact_modal_evolve(st, cfg.params, kernel.delta, cfg.grid) for st in states
        ]
        t_lo = opts.get("t_lo", 0.0)
        t_hi = opts.get("t_hi", 100.0)
        n_times = opts.get("n_times", 201)
        if opts.get("spacing", "linear") == "log":
            times = np.geomspace(max(t_lo, 1e-6), t_hi, n_times)
        else:
            times = np.linspace(t_lo, t_hi, n_times)
        trace = timedomain.energy_trace(trajs, cfg.params, kernel, times)
    rows = [
        {
            "t": float(trace.times[i]),
            "total": float(trace.total[i]),
            "stiffness": float(trace.stiffness[i]),
            "kinetic_v": float(trace.kinetic_v[i]),
            "coupling": float(trace.coupling[i]),
            "kinetic_p": float(trace.kinetic_p[i]),
            "memory": float(trace.memory[i]),
            "residual": float(trace.residual[i]),
        }
        for i in range(trace.times.size)
    ]
    _write_csv(out / "trace.csv", rows)
    print(f"wrote {len(rows)} samples to {out / 'trace.csv'}")
    return 0


def cmd_fit(cfg: RunConfig, out: Path, threads: int) -> int:
    opts = cfg.options.get("fit", {})
    trace_path = opts.get("trace")
    if trace_path is None:
        raise InvalidModelError("fit needs fit.trace pointing at a simulate CSV")
    with open(trace_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    times = np.array([float(r["t"]) for r in rows])
    norms = np.sqrt(np.array([float(r["total"]) for r in rows]))
    window = tuple(opts.get("window", (10.0, 1000.0)))
    fit = analysis.fit_decay_exponent(times, norms, window)
    payload = {
        "window": list(fit.window),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "target_exponent": analysis.target_exponent(cfg.params.a),
    }
    _write_json(out / "fit.json", payload)
    print(
        f"slope {fit.slope:.4f} (r^2 {fit.r_squared:.6f}); "
        f"worst-case exponent {payload['target_exponent']:.4f}"
    )
    return 0


def cmd_verdict(cfg: RunConfig, out: Path, threads: int) -> int:
    kernel = _require_exponential(cfg)
    opts = cfg.options.get("verdict", {})
    xi_probes = opts.get("xi_probes", list(np.geomspace(1e3, 1e6, 7)))
    branches = []
    for xi in xi_probes:
        poly = spectral.quintic_coeffs_at(float(xi), cfg.params, kernel.delta)
        branches.append(spectral.quintic_roots(poly, cfg.params))
    sweep = resolvent.scaled_sweep(
        cfg.params,
        kernel,
        cfg.grid,
        M=opts.get("M", 40),
        tau_lo=opts.get("tau_lo", 10.0),
        tau_hi=opts.get("tau_hi", 1000.0),
        per_decade=opts.get("per_decade", 16),
        resonances_per_branch=opts.get("resonances_per_branch", 12),
        threads=threads,
    )
    verdict = analysis.optimality_check(branches, sweep, cfg.params)
    payload = {
        "verdict": verdict.verdict,
        "decay_exponent": analysis.target_exponent(cfg.params.a),
        "legs": [
            {"name": leg.name, "passed": leg.passed, "detail": leg.detail}
            for leg in (verdict.sharpness, verdict.bounded, verdict.unbounded)
        ],
    }
    _write_json(out / "verdict.json", payload)
    lines = [
        "# Decay-order verdict",
        "",
        f"Claimed norm decay for smooth data: t^({analysis.target_exponent(cfg.params.a):.4g}).",
        f"Overall verdict: {'optimal' if verdict.verdict else 'inconclusive'}.",
        "",
    ]
    for leg in (verdict.sharpness, verdict.bounded, verdict.unbounded):
        lines.append(f"- **{leg.name}**: {'PASS' if leg.passed else 'FAIL'} - {leg.detail}")
    lines += ["", "Samples: see `sweep_M*.csv` / `spectrum.csv` emitted by the sweep and spectrum commands."]
    (out / "verdict.md").write_text("\n".join(lines) + "\n")
    print(f"verdict: {'optimal' if verdict.verdict else 'inconclusive'}")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "verdict": cmd_verdict,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="memwave", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default from config or ./memwave-out)")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="parallel width cap (default MEMWAVE_THREADS or 1)",
    )
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("MEMWAVE_THREADS", "1"))

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "config", "message": str(exc)}}))
        return 2

    out = Path(args.out or cfg.out or "memwave-out")
    out.mkdir(parents=True, exist_ok=True)

    try:
        return COMMANDS[args.command](cfg, out, threads)
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(payload))
        _write_json(out / "error.json", payload)
        return 1


if __name__ == "__main__":
    sys.exit(main())
