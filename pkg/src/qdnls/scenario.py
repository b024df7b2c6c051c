"""Scenario files: a versioned key-value format driving every subcommand.

Masses and coefficient entries are parsed as exact rationals straight
from their decimal or p/q spellings (never through a float), so a
resolved scenario serializes back to an equivalent file.  Unknown keys
are errors, not warnings.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .problem import CoefficientTensor, MassTriple
from .solver import SolverConfig
from .spectral import Grid

SCENARIO_VERSION = 1

_SCALAR_KEYS = {
    "version",
    "name",
    "dim",
    "grid_n",
    "box_length",
    "mass1",
    "mass2",
    "mass3",
    "epsilon",
    "dt",
    "t_final",
    "nu",
    "dealias",
    "snapshot_every",
    "gamma_order",
    "norm_order",
    "family",
    "width",
    "seed",
    "out",
    "run_dir",
    "null_run",
    "nonnull_run",
}
_VECTOR_KEYS = {
    "weight1",
    "weight2",
    "weight3",
    "diagnostics",
    "lifespan_eps",
    "identity_times",
    "snapshot_files",
}


class ScenarioError(ValueError):
    """Malformed scenario file; message carries the offending line."""


@dataclass(frozen=True)
class Scenario:
    """One resolved scenario: solver config plus bookkeeping."""

    name: str
    config: SolverConfig
    seed: int = 0
    out: str | None = None
    diagnostics: tuple[str, ...] = ()
    run_dir: str | None = None
    null_run: str | None = None
    nonnull_run: str | None = None
    lifespan_eps: tuple[float, ...] = ()
    identity_times: tuple[float, ...] = (0.5, 1.0, 2.0)

    def serialize(self) -> str:
        cfg = self.config
        lines = [
            f"version {SCENARIO_VERSION}",
            f"name {self.name}",
            f"dim {cfg.grid.dim}",
            f"grid_n {cfg.grid.n}",
            f"box_length {cfg.grid.length!r}",
            f"mass1 {cfg.masses.m1}",
            f"mass2 {cfg.masses.m2}",
            f"mass3 {cfg.masses.m3}",
            f"epsilon {cfg.epsilon!r}",
            f"dt {cfg.dt!r}",
            f"t_final {cfg.t_final!r}",
            f"nu {cfg.nu!r}",
            f"dealias {'on' if cfg.use_dealias else 'off'}",
            f"snapshot_every {cfg.snapshot_every}",
            f"gamma_order {cfg.gamma_order}",
            f"norm_order {cfg.norm_order}",
            f"family {cfg.family}",
            f"width {cfg.width!r}",
        ]
        for j, w in enumerate(cfg.weights, start=1):
            w = complex(w)
            lines.append(f"weight{j} {w.real!r} {w.imag!r}")
        if cfg.snapshot_files is not None:
            lines.append("snapshot_files " + " ".join(cfg.snapshot_files))
        lines.append(f"seed {self.seed}")
        if self.out is not None:
            lines.append(f"out {self.out}")
        if self.diagnostics:
            lines.append("diagnostics " + " ".join(self.diagnostics))
        for key in ("run_dir", "null_run", "nonnull_run"):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key} {value}")
        if self.lifespan_eps:
            lines.append("lifespan_eps " + " ".join(repr(e) for e in self.lifespan_eps))
        lines.append("identity_times " + " ".join(repr(t) for t in self.identity_times))
        for eq, a, b, c in cfg.tensor.nonzero_entries():
            lines.append(f"coeff {eq} {a} {b} {c.re} {c.im}")
        return "\n".join(lines) + "\n"

    def with_out(self, out: str) -> "Scenario":
        return replace(self, out=out)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


def _parse_fraction(token: str, line_no: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"line {line_no}: bad rational {token!r}: {exc}") from exc


def parse_scenario(text: str) -> Scenario:
    """Parse and resolve a scenario; raises ScenarioError with line context."""
    scalars: dict[str, str] = {}
    vectors: dict[str, list[str]] = {}
    coeff_rows: list[tuple[int, int, int, Fraction, Fraction]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        if key == "coeff":
            if len(args) != 5:
                raise ScenarioError(
                    f"line {line_no}: coeff needs 'eq alpha beta re im'"
                )
            try:
                eq, alpha, beta = int(args[0]), int(args[1]), int(args[2])
            except ValueError as exc:
                raise ScenarioError(f"line {line_no}: bad coeff indices") from exc
            re = _parse_fraction(args[3], line_no)
            im = _parse_fraction(args[4], line_no)
            coeff_rows.append((eq, alpha, beta, re, im))
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ScenarioError(f"line {line_no}: duplicate key {key!r}")
            if len(args) != 1:
                raise ScenarioError(f"line {line_no}: {key} takes one value")
            scalars[key] = args[0]
        elif key in _VECTOR_KEYS:
            if key in vectors:
                raise ScenarioError(f"line {line_no}: duplicate key {key!r}")
            vectors[key] = args
        else:
            raise ScenarioError(f"line {line_no}: unknown key {key!r}")

    def need(key: str) -> str:
        if key not in scalars:
            raise ScenarioError(f"missing required key {key!r}")
        return scalars[key]

    def get_float(key: str, default=None) -> float:
        if key not in scalars:
            if default is None:
                raise ScenarioError(f"missing required key {key!r}")
            return default
        try:
            return float(scalars[key])
        except ValueError as exc:
            raise ScenarioError(f"bad numeric value for {key!r}") from exc

    def get_int(key: str, default=None) -> int:
        if key not in scalars:
            if default is None:
                raise ScenarioError(f"missing required key {key!r}")
            return default
        try:
            return int(scalars[key])
        except ValueError as exc:
            raise ScenarioError(f"bad integer value for {key!r}") from exc

    version = get_int("version")
    if version != SCENARIO_VERSION:
        raise ScenarioError(f"unsupported scenario version {version}")
    name = need("name")
    dim = get_int("dim")
    grid_n = get_int("grid_n")
    box_length = get_float("box_length", 64.0 * np.pi)
    try:
        grid = Grid(dim, grid_n, box_length)
    except ValueError as exc:
        raise ScenarioError(f"bad grid: {exc}") from exc
    masses = MassTriple(
        _parse_fraction(need("mass1"), 0),
        _parse_fraction(need("mass2"), 0),
        _parse_fraction(need("mass3"), 0),
    )
    for eq, alpha, beta, _, _ in coeff_rows:
        if eq not in (1, 2, 3) or not (0 <= alpha <= dim and 0 <= beta <= dim):
            raise ScenarioError(f"coeff indices ({eq},{alpha},{beta}) out of range")
    from .problem import ExactComplex

    tensor = CoefficientTensor.from_entries(
        dim,
        (
            (eq, alpha, beta, ExactComplex(re, im))
            for eq, alpha, beta, re, im in coeff_rows
        ),
    )
    weights = []
    for j in (1, 2, 3):
        key = f"weight{j}"
        if key in vectors:
            args = vectors[key]
            if len(args) != 2:
                raise ScenarioError(f"{key} takes 're im'")
            weights.append(complex(float(args[0]), float(args[1])))
        else:
            weights.append(1.0 + 0j)
    snapshot_files = None
    if "snapshot_files" in vectors:
        if len(vectors["snapshot_files"]) != 3:
            raise ScenarioError("snapshot_files takes three paths")
        snapshot_files = tuple(vectors["snapshot_files"])
    try:
        config = SolverConfig(
            masses=masses,
            tensor=tensor,
            grid=grid,
            epsilon=get_float("epsilon"),
            dt=get_float("dt"),
            t_final=get_float("t_final"),
            nu=get_float("nu", 0.0),
            use_dealias=_parse_switch(scalars.get("dealias", "on")),
            snapshot_every=get_int("snapshot_every", 100),
            family=scalars.get("family", "gaussian"),
            width=get_float("width", 2.0),
            weights=tuple(weights),
            snapshot_files=snapshot_files,
            gamma_order=get_int("gamma_order", 6),
            norm_order=get_int("norm_order", 7),
        )
    except ValueError as exc:
        raise ScenarioError(f"bad solver configuration: {exc}") from exc
    return Scenario(
        name=name,
        config=config,
        seed=get_int("seed", 0),
        out=scalars.get("out"),
        diagnostics=tuple(vectors.get("diagnostics", ())),
        run_dir=scalars.get("run_dir"),
        null_run=scalars.get("null_run"),
        nonnull_run=scalars.get("nonnull_run"),
        lifespan_eps=tuple(float(e) for e in vectors.get("lifespan_eps", ())),
        identity_times=tuple(
            float(t) for t in vectors.get("identity_times", ("0.5", "1.0", "2.0"))
        ),
    )


def _parse_switch(token: str) -> bool:
    if token in ("on", "true", "1"):
        return True
    if token in ("off", "false", "0"):
        return False
    raise ScenarioError(f"bad switch value {token!r} (want on/off)")


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(scenario.serialize())
