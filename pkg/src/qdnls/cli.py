"""Scenario-driven command line: check-null, decompose, simulate,
identities, decay, scatter, lifespan, contrast.

Exit codes: 0 success, 2 validation failure, 3 numerical-acceptance
failure, 4 run interrupted (blow-up or boundary contamination).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .diagnostics import (
    decay_fit,
    gamma_forcing_series,
    lifespan_scan,
    nonlinearity_decay_contrast,
    scattering_profile,
)
from .problem import NotNullError, decompose, is_null, null_polynomial
from .runio import load_trajectory, save_trajectory, write_data_block
from .scenario import Scenario, ScenarioError, load_scenario
from .solver import evolve
from .spectral import set_fft_workers
from .sweeps import (
    commutator_family,
    commutator_family_bounded,
    identity_sweep,
    residual_ceiling,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_INTERRUPTED = 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qdnls",
        description="Quadratic derivative Schrodinger system toolkit",
    )
    parser.add_argument("--config", type=Path, help="scenario file")
    parser.add_argument("--out", type=Path, help="output directory override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--threads", type=int, help="FFT worker count")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "check-null",
        "decompose",
        "simulate",
        "identities",
        "decay",
        "scatter",
        "lifespan",
        "contrast",
    ):
        sub.add_parser(name)
    args = parser.parse_args(argv)
    if args.threads is not None:
        set_fft_workers(args.threads)
    try:
        scenario = _load(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    handler = {
        "check-null": cmd_check_null,
        "decompose": cmd_decompose,
        "simulate": cmd_simulate,
        "identities": cmd_identities,
        "decay": cmd_decay,
        "scatter": cmd_scatter,
        "lifespan": cmd_lifespan,
        "contrast": cmd_contrast,
    }[args.command]
    try:
        return handler(scenario)
    except (ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _load(args) -> Scenario:
    if args.config is None:
        raise ScenarioError("--config is required")
    scenario = load_scenario(args.config)
    if args.out is not None:
        scenario = scenario.with_out(str(args.out))
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    return scenario


def _outdir(scenario: Scenario) -> Path:
    out = Path(scenario.out) if scenario.out else Path(f"qdnls-{scenario.name}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt_coeff(c) -> str:
    return f"{complex(c).real:+g}{complex(c).imag:+g}i"


def cmd_check_null(scenario: Scenario) -> int:
    cfg = scenario.config
    null = is_null(cfg.tensor, cfg.masses)
    print(f"masses: {cfg.masses.as_floats()} resonant={cfg.masses.resonant()}")
    for eq in (1, 2, 3):
        poly = null_polynomial(cfg.tensor, cfg.masses, eq)
        monos = poly.nonzero_monomials()
        if monos:
            body = " + ".join(
                f"{_fmt_coeff(c)}*xi^{''.join(map(str, p))}" for p, c in monos
            )
        else:
            body = "0"
        print(f"p_{eq}(xi) = {body}")
    print("verdict:", "NULL" if null else "NOT NULL")
    if null:
        _print_certificate(cfg)
    return EXIT_OK


def _print_certificate(cfg) -> None:
    dec = decompose(cfg.tensor, cfg.masses)
    print("certificate:")
    for eq in (1, 2, 3):
        for a in range(1, cfg.tensor.dim + 1):
            w = dec.gauge_weight(eq, a)
            if not w.is_zero():
                print(f"  gauge eq={eq} axis={a} weight={w!r}")
        for a, b in dec.axis_pairs():
            w = dec.strong_weight(eq, a, b)
            if not w.is_zero():
                print(f"  strong eq={eq} axes=({a},{b}) weight={w!r}")


def cmd_decompose(scenario: Scenario) -> int:
    cfg = scenario.config
    try:
        _print_certificate(cfg)
    except NotNullError as exc:
        print(f"NOT NULL: {exc}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_simulate(scenario: Scenario) -> int:
    out = _outdir(scenario)
    traj = evolve(scenario.config)
    save_trajectory(traj, scenario, out)
    status = "completed" if traj.completed else traj.interrupted
    print(f"run {scenario.name}: {status}, {len(traj.snapshots)} snapshots -> {out}")
    if not traj.completed:
        print(f"interrupted at t={traj.interruption_time}")
        return EXIT_INTERRUPTED
    return EXIT_OK


def cmd_identities(scenario: Scenario) -> int:
    out = _outdir(scenario)
    masses = scenario.config.masses
    if not scenario.identity_times:
        with open(out / "identities.csv", "w", newline="") as fh:
            csv.writer(fh).writerow(["identity", "t", "masses", "residual"])
        print("identities: empty sweep")
        return EXIT_OK
    residuals, ratios = identity_sweep(
        masses, times=scenario.identity_times, seed=scenario.seed
    )
    failures = []
    with open(out / "identities.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["identity", "t", "masses", "residual"])
        for res in residuals:
            writer.writerow(
                [
                    res.identity,
                    "" if res.time is None else repr(res.time),
                    "/".join(repr(m) for m in (res.masses or ())),
                    repr(res.residual),
                ]
            )
            if res.residual > residual_ceiling(res.identity):
                failures.append(res)
        for i, ratio in enumerate(ratios):
            writer.writerow([f"commutator_case{i:02d}", "", "", repr(ratio)])
    family_ok = commutator_family_bounded(ratios)
    print(
        f"identities: {len(residuals)} residuals, worst "
        f"{max((r.residual for r in residuals), default=0.0):.3e}; "
        f"commutator family max/median "
        f"{max(ratios) / float(np.median(ratios)):.2f}"
    )
    for res in failures:
        print(
            f"FAILED {res.identity}: residual {res.residual:.3e} "
            f"> {residual_ceiling(res.identity):.0e}"
        )
    if not family_ok:
        print("FAILED commutator family: max exceeds 10x median")
    return EXIT_NUMERICAL if failures or not family_ok else EXIT_OK


def _load_run(path_str: str | None, what: str):
    if not path_str:
        raise ScenarioError(f"scenario does not name a {what} run directory")
    traj, scen = load_trajectory(path_str)
    return traj, scen


def _reject_contaminated(traj) -> int | None:
    if traj.interrupted == "boundary" or any(
        r.boundary_flagged for r in traj.gamma_reports
    ):
        print("run is boundary-contaminated; fits suppressed", file=sys.stderr)
        return EXIT_INTERRUPTED
    if traj.interrupted is not None:
        print(f"run was interrupted ({traj.interrupted})", file=sys.stderr)
        return EXIT_INTERRUPTED
    return None


def cmd_decay(scenario: Scenario) -> int:
    out = _outdir(scenario)
    traj, run_scen = _load_run(scenario.run_dir or scenario.out, "decay")
    bad = _reject_contaminated(traj)
    if bad is not None:
        return bad
    cfg = run_scen.config
    window = (4.0, cfg.t_final)
    rows = []
    for j in (1, 2, 3):
        ts = [r.t for r in traj.step_rows if r.t > 0]
        vs = [r.linf[j - 1] for r in traj.step_rows if r.t > 0]
        fit = decay_fit(ts, vs, window, quantity=f"supnorm_eq{j}")
        rows.append(fit)
        write_data_block(out / f"decay_supnorm_eq{j}.dat", {"t": ts, "value": vs})
    if not cfg.tensor.is_zero():
        ts, vs = gamma_forcing_series(traj, cfg.masses, cfg.gamma_order - 1)
        if any(v > 0 for v in vs):
            fit = decay_fit(ts, vs, window, quantity="forcing_gamma")
            rows.append(fit)
            write_data_block(out / "decay_forcing.dat", {"t": ts, "value": vs})
    _write_fit_summary(out / "decay_summary.csv", rows)
    for fit in rows:
        print(f"{fit.quantity}: slope {fit.slope:+.4f} +- {fit.stderr:.4f}")
    return EXIT_OK


def _write_fit_summary(path, fits) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "slope", "stderr", "n_samples", "t_min", "t_max"])
        for f in fits:
            writer.writerow(
                [f.quantity, repr(f.slope), repr(f.stderr), f.n_samples,
                 repr(f.t_min), repr(f.t_max)]
            )


def cmd_scatter(scenario: Scenario) -> int:
    out = _outdir(scenario)
    traj, run_scen = _load_run(scenario.run_dir or scenario.out, "scatter")
    bad = _reject_contaminated(traj)
    if bad is not None:
        return bad
    cfg = run_scen.config
    report = scattering_profile(traj, cfg.masses, cfg.gamma_order + 1)
    write_data_block(
        out / "scatter_series.dat", {"t": report.times, "distance": report.series}
    )
    with open(out / "scatter_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["exponent", "stderr", "duhamel_tail"])
        writer.writerow(
            [
                "" if report.fit is None else repr(report.fit.slope),
                "" if report.fit is None else repr(report.fit.stderr),
                repr(report.duhamel_tail),
            ]
        )
    if max(report.series) <= 1e-300:
        print("convergence series is identically zero (free run)")
    elif report.fit is None:
        print("convergence series nonzero but the window supports no fit")
    else:
        print(
            f"convergence exponent {report.fit.slope:+.4f} +- {report.fit.stderr:.4f}, "
            f"duhamel tail {report.duhamel_tail:.3e}"
        )
    return EXIT_OK


def cmd_lifespan(scenario: Scenario) -> int:
    out = _outdir(scenario)
    if not scenario.lifespan_eps:
        raise ScenarioError("scenario does not set lifespan_eps")
    table = lifespan_scan(scenario.config, scenario.lifespan_eps)
    with open(out / "lifespan.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "t_reached", "cause"])
        for row in table.rows:
            writer.writerow([repr(row.epsilon), repr(row.t_reached), row.cause])
    write_data_block(
        out / "lifespan.dat",
        {
            "inv_epsilon": [1.0 / r.epsilon for r in table.rows],
            "t_reached": [r.t_reached for r in table.rows],
        },
    )
    for row in table.rows:
        print(f"eps {row.epsilon:g}: T_eff {row.t_reached:g} ({row.cause})")
    if table.omega_estimate is not None:
        print(f"omega estimate {table.omega_estimate:.4g}")
    return EXIT_OK


def cmd_contrast(scenario: Scenario) -> int:
    out = _outdir(scenario)
    traj_null, _ = _load_run(scenario.null_run, "null")
    traj_nonnull, _ = _load_run(scenario.nonnull_run, "non-null")
    for traj in (traj_null, traj_nonnull):
        bad = _reject_contaminated(traj)
        if bad is not None:
            return bad
    fit_null, fit_nonnull = nonlinearity_decay_contrast(
        traj_null, traj_nonnull, scenario.config.gamma_order
    )
    _write_fit_summary(out / "contrast_summary.csv", [fit_null, fit_nonnull])
    gap = fit_null.slope - fit_nonnull.slope
    print(
        f"null slope {fit_null.slope:+.4f} +- {fit_null.stderr:.4f}; "
        f"non-null slope {fit_nonnull.slope:+.4f} +- {fit_nonnull.stderr:.4f}; "
        f"gap {gap:+.4f}"
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
