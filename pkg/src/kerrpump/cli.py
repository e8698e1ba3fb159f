"""Scenario driver: config parsing, runs, sweeps, CSV/JSON emission.

Five scenario kinds cover the standard analyses:

* ``closed``            lossless run, negativity and R traces
* ``analytic-compare``  lossless run against the three-state closed form
* ``open``              single damped run, negativity / border / R traces
* ``gamma-sweep``       damped runs over a damping grid
* ``nbar-sweep``        damped runs over a reservoir-occupation grid

Configs are flat ``key = value`` text files ('#' starts a comment); presets
fig1..fig8 ship with the package.  Outputs are a CSV per scenario plus a
JSON sidecar with parameters, diagnostics and event tables (and a boundary
CSV for gamma sweeps).  Runs are deterministic: re-running a scenario
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .closed import IntegratorConfig, evolve_closed
from .correlations import csi_parameter
from .entanglement import (
    QubitPairSpec,
    border_ratio,
    detect_events,
    negativity,
    project_qubit_pair,
)
from .fock import SystemParams, amplitudes_to_density, make_vacuum_state, vacuum_density
from .lindblad import PositivityError, evolve_open
from .series import TimeSeries, write_csv, write_sidecar
from .three_state import eval_three_state_grid, solve_three_state

SCENARIOS = ("closed", "analytic-compare", "open", "gamma-sweep", "nbar-sweep")


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the offending field."""


@dataclass
class ScenarioConfig:
    scenario: str
    name: str
    chi_a: float = 1.0
    chi_b: float = 1.0
    g: complex = 0.15
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    nbar_a: float = 0.0
    nbar_b: float = 0.0
    n_max: int = 10
    dt: float = 1e-3
    t_end: float = 50.0
    sample_every: int = 50
    pairs: list = field(default_factory=lambda: [QubitPairSpec(0, 1), QubitPairSpec(0, 2), QubitPairSpec(1, 2)])
    columns: list | None = None
    gammas: list = field(default_factory=list)  # [(label, value)]
    nbars: list = field(default_factory=list)
    track: list | None = None
    include_reference: bool = False
    reference_gamma: float = 0.01
    reference_nbar: float = 0.0
    min_dead_duration: float | None = None
    positivity_check_every: int = 1

    def system_params(self, gamma: float | None = None, nbar: float | None = None) -> SystemParams:
        return SystemParams(
            chi_a=self.chi_a, chi_b=self.chi_b, g=self.g,
            gamma_a=self.gamma_a if gamma is None else gamma,
            gamma_b=self.gamma_b if gamma is None else gamma,
            nbar_a=self.nbar_a if nbar is None else nbar,
            nbar_b=self.nbar_b if nbar is None else nbar,
            n_max=self.n_max,
        )

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(dt=self.dt, t_end=self.t_end, sample_every=self.sample_every)


def _parse_pairs(text: str) -> list:
    pairs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            i, j = tok.split("-")
            pairs.append(QubitPairSpec(int(i), int(j)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"pairs: cannot parse '{tok}' (expected like 0-1)") from exc
    if not pairs:
        raise ConfigError("pairs: empty list")
    return pairs


def _parse_grid(text: str, fieldname: str) -> list:
    grid = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            grid.append((tok, float(tok)))
        except ValueError as exc:
            raise ConfigError(f"{fieldname}: cannot parse '{tok}' as a number") from exc
    if not grid:
        raise ConfigError(f"{fieldname}: empty grid")
    values = [v for _, v in grid]
    if sorted(values) != values:
        raise ConfigError(f"{fieldname}: grid must be sorted ascending")
    return grid


def parse_config(text: str, name_fallback: str) -> ScenarioConfig:
    """Parse a flat key=value config; raises ConfigError with field context."""
    raw = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {ln}: duplicate key '{key}'")
        raw[key] = value

    if "scenario" not in raw:
        raise ConfigError("scenario: missing (one of %s)" % ", ".join(SCENARIOS))
    scenario = raw.pop("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown '{scenario}'")

    cfg = ScenarioConfig(scenario=scenario, name=raw.pop("name", name_fallback))

    def take_float(key, attr=None, minimum=None):
        if key in raw:
            try:
                value = float(raw.pop(key))
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number") from exc
            if minimum is not None and value < minimum:
                raise ConfigError(f"{key}: must be >= {minimum}")
            setattr(cfg, attr or key, value)

    if "g" in raw:
        try:
            cfg.g = complex(raw.pop("g").replace(" ", ""))
        except ValueError as exc:
            raise ConfigError("g: not a real or complex number") from exc
    take_float("chi_a")
    take_float("chi_b")
    if "gamma" in raw:
        try:
            value = float(raw.pop("gamma"))
        except ValueError as exc:
            raise ConfigError("gamma: not a number") from exc
        cfg.gamma_a = cfg.gamma_b = value
    take_float("gamma_a", minimum=0.0)
    take_float("gamma_b", minimum=0.0)
    if "nbar" in raw:
        try:
            value = float(raw.pop("nbar"))
        except ValueError as exc:
            raise ConfigError("nbar: not a number") from exc
        cfg.nbar_a = cfg.nbar_b = value
    take_float("nbar_a", minimum=0.0)
    take_float("nbar_b", minimum=0.0)
    if "n_max" in raw:
        try:
            cfg.n_max = int(raw.pop("n_max"))
        except ValueError as exc:
            raise ConfigError("n_max: not an integer") from exc
        if cfg.n_max < 2:
            raise ConfigError("n_max: must be >= 2")
    take_float("dt", minimum=1e-9)
    take_float("t_end", minimum=1e-9)
    if "sample_every" in raw:
        try:
            cfg.sample_every = int(raw.pop("sample_every"))
        except ValueError as exc:
            raise ConfigError("sample_every: not an integer") from exc
        if cfg.sample_every < 1:
            raise ConfigError("sample_every: must be >= 1")
    if "pairs" in raw:
        cfg.pairs = _parse_pairs(raw.pop("pairs"))
    for pair in cfg.pairs:
        if pair.j > cfg.n_max:
            raise ConfigError(f"pairs: level {pair.j} exceeds n_max={cfg.n_max}")
    if "columns" in raw:
        cfg.columns = [tok.strip() for tok in raw.pop("columns").split(",") if tok.strip()]
    if "gammas" in raw:
        cfg.gammas = _parse_grid(raw.pop("gammas"), "gammas")
    if "nbars" in raw:
        cfg.nbars = _parse_grid(raw.pop("nbars"), "nbars")
    if "track" in raw:
        cfg.track = [tok.strip() for tok in raw.pop("track").split(",") if tok.strip()]
    if "include_reference" in raw:
        value = raw.pop("include_reference").lower()
        if value not in ("true", "false"):
            raise ConfigError("include_reference: expected true or false")
        cfg.include_reference = value == "true"
    take_float("reference_gamma", minimum=0.0)
    take_float("reference_nbar", minimum=0.0)
    take_float("min_dead_duration", minimum=0.0)
    if "positivity_check_every" in raw:
        try:
            cfg.positivity_check_every = int(raw.pop("positivity_check_every"))
        except ValueError as exc:
            raise ConfigError("positivity_check_every: not an integer") from exc

    if scenario == "gamma-sweep" and not cfg.gammas:
        raise ConfigError("gammas: required for gamma-sweep")
    if scenario == "nbar-sweep" and not cfg.nbars:
        raise ConfigError("nbars: required for nbar-sweep")
    if raw:
        raise ConfigError("unknown keys: " + ", ".join(sorted(raw)))
    return cfg


def load_preset(name: str) -> str:
    path = resources.files("kerrpump").joinpath("presets", f"{name}.cfg")
    if not path.is_file():
        available = sorted(
            p.name[:-4] for p in resources.files("kerrpump").joinpath("presets").iterdir()
            if p.name.endswith(".cfg")
        )
        raise ConfigError(f"preset '{name}' not found (available: {', '.join(available)})")
    return path.read_text()


# ---------------------------------------------------------------------------
# observable construction

def _nan_if_none(value):
    return np.nan if value is None else value


def _open_observers(pairs):
    obs = {}
    for pair in pairs:
        label = pair.label
        obs[f"N_{label}"] = _NegativityObserver(pair)
        obs[f"F_{label}"] = _BorderObserver(pair, 0)
        obs[f"G_{label}"] = _BorderObserver(pair, 1)
    obs["R"] = _RObserver()
    return obs


class _NegativityObserver:
    def __init__(self, pair):
        self.pair = pair

    def __call__(self, rho):
        return negativity(project_qubit_pair(rho, self.pair).matrix)


class _BorderObserver:
    def __init__(self, pair, which):
        self.pair = pair
        self.which = which

    def __call__(self, rho):
        return border_ratio(rho, self.pair)[self.which]


class _RObserver:
    def __call__(self, rho):
        return _nan_if_none(csi_parameter(rho))


# ---------------------------------------------------------------------------
# scenario runners

def _meta(cfg: ScenarioConfig, extra: dict | None = None) -> dict:
    meta = {
        "scenario": cfg.scenario,
        "name": cfg.name,
        "params": {
            "chi_a": cfg.chi_a, "chi_b": cfg.chi_b,
            "g": {"re": complex(cfg.g).real, "im": complex(cfg.g).imag},
            "gamma_a": cfg.gamma_a, "gamma_b": cfg.gamma_b,
            "nbar_a": cfg.nbar_a, "nbar_b": cfg.nbar_b, "n_max": cfg.n_max,
        },
        "integrator": {"dt": cfg.dt, "t_end": cfg.t_end, "sample_every": cfg.sample_every, "method": "rk4"},
        "pairs": [p.label for p in cfg.pairs],
        "conventions": {
            "projection": "unnormalized",
            "negativity": "max(0, -2 min eigenvalue of the mode-b partial transpose)",
            "border": "F = corner-coherence product, G = off-population product; entangled iff F > G",
        },
        "tolerances": {
            "dead_threshold": 1e-6,
            "min_dead_duration": cfg.min_dead_duration,
            "norm_tol": 1e-8,
        },
    }
    if extra:
        meta.update(extra)
    return meta


def _select_columns(cfg, available: dict) -> dict:
    if cfg.columns is None:
        return available
    unknown = [c for c in cfg.columns if c != "t" and c not in available]
    if unknown:
        raise ConfigError(f"columns: unknown column(s) {', '.join(unknown)}")
    return {name: available[name] for name in cfg.columns if name != "t"}


def run_closed_scenario(cfg: ScenarioConfig) -> TimeSeries:
    params = cfg.system_params()
    traj = evolve_closed(make_vacuum_state(params), params, cfg.integrator())
    columns = {}
    for pair in cfg.pairs:
        columns[f"N_{pair.label}"] = []
    columns["R"] = []
    events_source = {pair.label: [] for pair in cfg.pairs}
    for state in traj.states:
        rho = amplitudes_to_density(state)
        for pair in cfg.pairs:
            value = negativity(project_qubit_pair(rho, pair).matrix)
            columns[f"N_{pair.label}"].append(value)
        columns["R"].append(_nan_if_none(csi_parameter(rho)))
    columns = {k: np.array(v) for k, v in columns.items()}
    events = {}
    for pair in cfg.pairs:
        events[pair.label] = detect_events(
            traj.times, columns[f"N_{pair.label}"], pair,
            min_dead_duration=cfg.min_dead_duration,
        )
    return TimeSeries(
        t=traj.times,
        columns=_select_columns(cfg, columns),
        events=events,
        diagnostics=traj.diagnostics,
        meta=_meta(cfg),
    )


def run_analytic_compare_scenario(cfg: ScenarioConfig) -> TimeSeries:
    params = cfg.system_params()
    sol = solve_three_state(params)
    traj = evolve_closed(make_vacuum_state(params), params, cfg.integrator())
    model = eval_three_state_grid(sol, traj.times)
    deficits = []
    for row, state in zip(model, traj.states):
        overlap = (
            np.conj(row[0]) * state.c[0, 0]
            + np.conj(row[1]) * state.c[1, 1]
            + np.conj(row[2]) * state.c[2, 2]
        )
        deficits.append(1.0 - min(1.0, abs(overlap) ** 2))
    deficits = np.array(deficits)
    columns = {"one_minus_fidelity": deficits}
    return TimeSeries(
        t=traj.times,
        columns=_select_columns(cfg, columns),
        diagnostics={**traj.diagnostics, "max_one_minus_fidelity": float(deficits.max())},
        meta=_meta(cfg, {"three_state_branch": sol.branch}),
    )


def run_open_scenario(cfg: ScenarioConfig) -> TimeSeries:
    params = cfg.system_params()
    traj = evolve_open(
        vacuum_density(params), params, cfg.integrator(),
        observers=_open_observers(cfg.pairs),
        check_positivity_every=cfg.positivity_check_every,
    )
    events = {}
    for pair in cfg.pairs:
        events[pair.label] = detect_events(
            traj.times, traj.observables[f"N_{pair.label}"], pair,
            min_dead_duration=cfg.min_dead_duration,
        )
    return TimeSeries(
        t=traj.times,
        columns=_select_columns(cfg, dict(traj.observables)),
        events=events,
        diagnostics=traj.diagnostics,
        meta=_meta(cfg),
    )


def _sweep_job(job):
    cfg, label, gamma, nbar = job
    params = cfg.system_params(gamma=gamma, nbar=nbar)
    observers = {}
    track = cfg.track or [f"N_{p.label}" for p in cfg.pairs]
    for pair in cfg.pairs:
        if f"N_{pair.label}" in track:
            observers[f"N_{pair.label}"] = _NegativityObserver(pair)
    if "R" in track:
        observers["R"] = _RObserver()
    traj = evolve_open(
        vacuum_density(params), params, cfg.integrator(),
        observers=observers,
        check_positivity_every=cfg.positivity_check_every,
    )
    return label, traj.times, dict(traj.observables), traj.diagnostics


def run_sweep_scenario(cfg: ScenarioConfig, workers: int = 1) -> tuple:
    """Shared driver for gamma-sweep and nbar-sweep; returns (series, boundary rows)."""
    sweep_gamma = cfg.scenario == "gamma-sweep"
    grid = cfg.gammas if sweep_gamma else cfg.nbars
    prefix = "g" if sweep_gamma else "n"
    jobs = []
    for label, value in grid:
        gamma = value if sweep_gamma else None
        nbar = None if sweep_gamma else value
        jobs.append((cfg, f"{prefix}{label}", gamma, nbar))
    if cfg.include_reference:
        jobs.append((cfg, "ref", cfg.reference_gamma, cfg.reference_nbar))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(job) for job in jobs]

    times = results[0][1]
    columns = {}
    events = {}
    diagnostics = {}
    boundary_rows = []
    for (label, run_times, observables, diag), (_, _, gamma, nbar) in zip(results, jobs):
        if len(run_times) != len(times) or not np.array_equal(run_times, times):
            raise RuntimeError("sweep runs produced mismatched sample grids")
        diagnostics[label] = diag
        row = {"value": gamma if sweep_gamma else nbar}
        for name, values in observables.items():
            columns[f"{name}_{label}"] = values
            if name.startswith("N_"):
                pair_label = name[2:]
                pair = next(p for p in cfg.pairs if p.label == pair_label)
                evs = detect_events(times, values, pair, min_dead_duration=cfg.min_dead_duration)
                events[f"{pair_label}_{label}"] = evs
                death = next((e for e in evs if e.kind == "sudden_death"), None)
                birth = None
                if death is not None:
                    birth = next((e for e in evs if e.kind == "sudden_birth" and e.t > death.t), None)
                row[f"t_death_{pair_label}"] = death.t if death else None
                row[f"t_birth_{pair_label}"] = birth.t if birth else None
        boundary_rows.append((label, row))

    series = TimeSeries(
        t=times,
        columns=_select_columns(cfg, columns),
        events=events,
        diagnostics=diagnostics,
        meta=_meta(cfg, {"grid": [label for label, _ in grid], "include_reference": cfg.include_reference}),
    )
    return series, boundary_rows


def _write_boundary_csv(cfg: ScenarioConfig, boundary_rows: list, path: Path) -> None:
    param_name = "gamma" if cfg.scenario == "gamma-sweep" else "nbar"
    names = [param_name]
    for pair in cfg.pairs:
        names.append(f"t_death_{pair.label}")
        names.append(f"t_birth_{pair.label}")
    lines = [",".join(names)]
    for label, row in boundary_rows:
        if label == "ref":
            continue
        cells = [f"{row['value']:.17g}"]
        for pair in cfg.pairs:
            for key in (f"t_death_{pair.label}", f"t_birth_{pair.label}"):
                value = row.get(key)
                cells.append("" if value is None else f"{value:.17g}")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def run_scenario(cfg: ScenarioConfig, out_dir: Path, workers: int = 1) -> list:
    """Execute a scenario and write its artifacts; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg.scenario == "closed":
        series = run_closed_scenario(cfg)
    elif cfg.scenario == "analytic-compare":
        series = run_analytic_compare_scenario(cfg)
    elif cfg.scenario == "open":
        series = run_open_scenario(cfg)
    elif cfg.scenario in ("gamma-sweep", "nbar-sweep"):
        series, boundary_rows = run_sweep_scenario(cfg, workers=workers)
        boundary_path = out_dir / f"{cfg.name}_boundaries.csv"
        _write_boundary_csv(cfg, boundary_rows, boundary_path)
        written.append(boundary_path)
    else:  # pragma: no cover - parse_config guards this
        raise ConfigError(f"scenario: unknown '{cfg.scenario}'")

    csv_path = out_dir / f"{cfg.name}.csv"
    json_path = out_dir / f"{cfg.name}.json"
    write_csv(series, csv_path)
    write_sidecar(series, json_path)
    written.extend([csv_path, json_path])
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kerrpump",
        description="Photon-pair entanglement simulator for pumped Kerr oscillators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for scenario in SCENARIOS:
        p = sub.add_parser(scenario, help=f"run a {scenario} scenario")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="path to a key=value config file")
        src.add_argument("--preset", help="name of a bundled preset (fig1..fig8)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")

    args = parser.parse_args(argv)
    try:
        if args.preset:
            text = load_preset(args.preset)
            fallback = args.preset
        else:
            if not args.config.is_file():
                print(f"error: config file not found: {args.config}", file=sys.stderr)
                return 2
            text = args.config.read_text()
            fallback = args.config.stem
        cfg = parse_config(text, fallback)
        if cfg.scenario != args.command:
            print(
                f"error: scenario: config declares '{cfg.scenario}' but subcommand is '{args.command}'",
                file=sys.stderr,
            )
            return 2
        written = run_scenario(cfg, args.out, workers=max(1, args.workers))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PositivityError as exc:
        print(f"error: positivity failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
