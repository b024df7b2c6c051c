"""Run-directory layout: snapshots, CSV diagnostics, and the manifest.

A run directory is self-describing: the canonical scenario text plus the
binary field snapshots are enough to rebuild the in-memory trajectory,
and reruns overwrite deterministically.
"""

from __future__ import annotations

import csv
from pathlib import Path

from . import __version__
from .scenario import Scenario, load_scenario
from .solver import StepRecord, Trajectory
from .spectral import StateTriple, load_field, save_field
from .vectorfield import GammaNormReport, GammaNormRow

SNAPSHOT_DIR = "snapshots"


def save_trajectory(traj: Trajectory, scenario: Scenario, run_dir) -> Path:
    """Persist a trajectory; overwrites files already present."""
    root = Path(run_dir)
    (root / SNAPSHOT_DIR).mkdir(parents=True, exist_ok=True)
    (root / "scenario.txt").write_text(scenario.serialize())
    with open(root / "manifest.txt", "w") as fh:
        fh.write(f"code_version {__version__}\n")
        fh.write(f"scenario {scenario.name}\n")
        fh.write(f"status {'completed' if traj.completed else traj.interrupted}\n")
        if traj.interruption_time is not None:
            fh.write(f"interruption_time {traj.interruption_time!r}\n")
        fh.write(f"snapshots {len(traj.snapshots)}\n")
        fh.write(f"steps {len(traj.step_rows)}\n")
    with open(root / "steps.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "equation", "l2", "linf"])
        for row in traj.step_rows:
            for j in (1, 2, 3):
                writer.writerow([repr(row.t), j, repr(row.l2[j - 1]), repr(row.linf[j - 1])])
    with open(root / "gamma_norms.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "equation", "deriv_order", "j_order", "value"])
        for report in traj.gamma_reports:
            for row in report.rows:
                writer.writerow(
                    [
                        repr(report.time),
                        row.equation,
                        row.deriv_order,
                        row.j_order,
                        repr(row.value),
                    ]
                )
    with open(root / "gamma_aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "order", "aggregate", "boundary_flagged", "frac1", "frac2", "frac3"]
        )
        for report in traj.gamma_reports:
            writer.writerow(
                [
                    repr(report.time),
                    report.order,
                    repr(report.aggregate),
                    int(report.boundary_flagged),
                    *(repr(f) for f in report.boundary_fractions),
                ]
            )
    for idx, snap in enumerate(traj.snapshots):
        for j in (1, 2, 3):
            save_field(
                root / SNAPSHOT_DIR / f"{idx:06d}_u{j}.bin",
                snap.field(j),
                snap.time,
                j,
            )
    return root


def load_trajectory(run_dir) -> tuple[Trajectory, Scenario]:
    """Rebuild the trajectory and its scenario from a run directory."""
    root = Path(run_dir)
    if not (root / "scenario.txt").exists():
        raise FileNotFoundError(f"{root} is not a run directory (no scenario.txt)")
    scenario = load_scenario(root / "scenario.txt")
    manifest = {}
    for line in (root / "manifest.txt").read_text().splitlines():
        key, _, value = line.partition(" ")
        manifest[key] = value
    snap_paths = sorted((root / SNAPSHOT_DIR).glob("*_u1.bin"))
    snapshots = []
    for p1 in snap_paths:
        fields = []
        time = 0.0
        for j in (1, 2, 3):
            f, time, _ = load_field(str(p1).replace("_u1.bin", f"_u{j}.bin"))
            fields.append(f)
        snapshots.append(StateTriple(tuple(fields), time))
    reports = _load_gamma_reports(root)
    step_rows = _load_steps(root)
    status = manifest.get("status", "completed")
    traj = Trajectory(
        config=scenario.config,
        snapshots=snapshots,
        gamma_reports=reports,
        step_rows=step_rows,
        interrupted=None if status == "completed" else status,
        interruption_time=(
            float(manifest["interruption_time"])
            if "interruption_time" in manifest
            else None
        ),
    )
    return traj, scenario


def _load_gamma_reports(root: Path) -> list[GammaNormReport]:
    rows_by_time: dict[float, list[GammaNormRow]] = {}
    with open(root / "gamma_norms.csv", newline="") as fh:
        for rec in csv.DictReader(fh):
            t = float(rec["t"])
            rows_by_time.setdefault(t, []).append(
                GammaNormRow(
                    equation=int(rec["equation"]),
                    deriv_order=int(rec["deriv_order"]),
                    j_order=int(rec["j_order"]),
                    value=float(rec["value"]),
                )
            )
    reports = []
    with open(root / "gamma_aggregate.csv", newline="") as fh:
        for rec in csv.DictReader(fh):
            t = float(rec["t"])
            reports.append(
                GammaNormReport(
                    time=t,
                    order=int(rec["order"]),
                    rows=tuple(rows_by_time.get(t, ())),
                    aggregate=float(rec["aggregate"]),
                    boundary_fractions=(
                        float(rec["frac1"]),
                        float(rec["frac2"]),
                        float(rec["frac3"]),
                    ),
                    boundary_flagged=bool(int(rec["boundary_flagged"])),
                )
            )
    reports.sort(key=lambda r: r.time)
    return reports


def _load_steps(root: Path) -> list[StepRecord]:
    by_time: dict[float, dict[int, tuple[float, float]]] = {}
    with open(root / "steps.csv", newline="") as fh:
        for rec in csv.DictReader(fh):
            t = float(rec["t"])
            by_time.setdefault(t, {})[int(rec["equation"])] = (
                float(rec["l2"]),
                float(rec["linf"]),
            )
    rows = []
    for t in sorted(by_time):
        per_eq = by_time[t]
        rows.append(
            StepRecord(
                t=t,
                l2=tuple(per_eq[j][0] for j in (1, 2, 3)),
                linf=tuple(per_eq[j][1] for j in (1, 2, 3)),
            )
        )
    return rows


def write_data_block(path, columns: dict) -> None:
    """Two-or-more column plain-text block, gnuplot friendly."""
    names = list(columns)
    series = [columns[n] for n in names]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for values in zip(*series):
            fh.write(" ".join(repr(float(v)) for v in values) + "\n")
