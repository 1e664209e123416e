"""Experiment runner for the convergence figures, the AM-vs-GD table and the
mismatch-set sweep. Every output is a CSV so plotting stays external."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .am import AmConfig, run_am
from .data import boundary_radius, perturbed_init, random_truth, sample_instance
from .errors import InsufficientPoints, InvalidSpec, MixedLRError
from .gd import GdConfig, run_gd, tune_step_size
from .io import write_csv, write_json
from .metrics import (DEFAULT_WINDOW_LO, RateFit, fit_convergence_exponent, loglog_pairs,
                      mismatch_set, optimization_error_seq)
from .spectral import GridSpec, spectral_init

__all__ = [
    "PANELS",
    "ExperimentSpec",
    "RunRecord",
    "PanelResult",
    "TableResult",
    "Lemma1Result",
    "panel_spec",
    "run_panel",
    "compare_table",
    "lemma1_sweep",
    "resolve_radius",
    "ZERO_TOL",
]

PANELS = ("fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "table1", "custom")

# iterates this close to the truth count as exact recovery
ZERO_TOL = 1e-10

_PANEL_DEFAULTS = {
    "fig3a": dict(d_list=(50, 100, 250, 500), rounds=10),
    "fig3b": dict(d_list=(250, 500), rounds=10),
    "fig3c": dict(d_list=(200, 250), n_over_d=15.0, K=3, rounds=15),
    "fig4a": dict(d_list=(250,), sigma_list=(0.1, 0.2, 0.25), rounds=50, reference="final"),
    "fig4b": dict(d_list=(50, 100, 250), solver="gd", rounds=50),
    "fig4c": dict(d_list=(50, 100), solver="gd", rounds=400, target_precision=ZERO_TOL),
    "table1": dict(d_list=(50, 100, 250), solver="both", rounds=1000, target_precision=1e-3),
    "custom": dict(),
}


@dataclass(frozen=True)
class ExperimentSpec:
    panel: str = "custom"
    d_list: tuple = (50,)
    n_over_d: float = 6.0
    K: int = 2
    sigma: float = 0.0
    trials: int = 20
    root_seed: int = 0
    init: str = "perturbed"
    # "boundary", "boundary*<factor>" or a plain number (absolute radius)
    init_radius_policy: str = "boundary"
    target_precision: Optional[float] = None
    solver: str = "am"
    rounds: int = 10
    sigma_list: tuple = ()
    # "truth": dist to the true regressors; "final": distance to the last iterate
    reference: str = "truth"
    window_lo: float = DEFAULT_WINDOW_LO
    grid_points: int = 21
    probe_rounds: int = 10
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "d_list", tuple(int(d) for d in np.atleast_1d(self.d_list)))
        object.__setattr__(self, "sigma_list", tuple(float(s) for s in np.atleast_1d(self.sigma_list)))
        self.validate()

    def validate(self):
        problems = []
        if self.panel not in PANELS:
            problems.append(f"unknown panel {self.panel!r}")
        if not self.d_list or min(self.d_list) < 1:
            problems.append("d_list must be non-empty with d >= 1")
        if not self.n_over_d >= 1:
            problems.append("n_over_d must be >= 1")
        if self.K < 1:
            problems.append("K must be >= 1")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if self.rounds < 1:
            problems.append("rounds must be >= 1")
        if any(s < 0 or not math.isfinite(s) for s in self.sigmas):
            problems.append("noise levels must be finite and >= 0")
        if self.init not in ("perturbed", "spectral"):
            problems.append(f"unknown init {self.init!r}")
        if self.init == "spectral" and self.K != 2:
            problems.append("spectral init supports K = 2 only")
        if self.solver not in ("am", "gd", "both"):
            problems.append(f"unknown solver {self.solver!r}")
        if self.reference not in ("truth", "final"):
            problems.append(f"unknown reference {self.reference!r}")
        if self.target_precision is not None and not self.target_precision >= 0:
            problems.append("target_precision must be >= 0")
        try:
            _parse_radius_policy(self.init_radius_policy)
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise InvalidSpec("; ".join(problems))

    @property
    def sigmas(self) -> tuple:
        return self.sigma_list if self.sigma_list else (float(self.sigma),)

    def n_for(self, d: int) -> int:
        return int(round(self.n_over_d * d))

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
        base = panel_spec(payload.get("panel", "custom"))
        try:
            return replace(base, **payload)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read spec {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise InvalidSpec("spec JSON must be an object")
        return cls.from_dict(payload)


def panel_spec(panel: str, **overrides) -> ExperimentSpec:
    """Default settings for a named panel, with optional overrides."""
    if panel not in _PANEL_DEFAULTS:
        raise InvalidSpec(f"unknown panel {panel!r}")
    kwargs = dict(_PANEL_DEFAULTS[panel], panel=panel)
    kwargs.update(overrides)
    try:
        return ExperimentSpec(**kwargs)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from exc


def _parse_radius_policy(policy):
    policy = str(policy).strip()
    if policy == "boundary":
        return ("boundary", 1.0)
    if policy.startswith("boundary*"):
        try:
            return ("boundary", float(policy.split("*", 1)[1]))
        except ValueError:
            pass
    else:
        try:
            value = float(policy)
            if value >= 0:
                return ("absolute", value)
        except ValueError:
            pass
    raise ValueError(f"bad init_radius_policy {policy!r}")


def resolve_radius(policy, truth, n) -> float:
    kind, value = _parse_radius_policy(policy)
    return value * boundary_radius(truth, n) if kind == "boundary" else value


@dataclass
class RunRecord:
    panel: str
    solver: str
    d: int
    n: int
    K: int
    sigma: float
    trial: int
    root_seed: int
    init: str
    init_radius: float
    gamma: Optional[float]
    rounds_run: int
    iterations_to_target: int
    final_dist: float
    fitted_slope: float
    error: str = ""
    wall_clock_s: float = 0.0

    @classmethod
    def header(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, name) for name in self.header()]


@dataclass
class PanelResult:
    spec: ExperimentSpec
    records: list
    curves: dict  # (d, sigma) -> mean error per iteration
    fits: dict  # (d, sigma) -> RateFit or None
    files: list = field(default_factory=list)


def _trial_seed(spec, d, trial):
    return (int(spec.root_seed), int(d), int(trial))


def _build_problem(spec, d, sigma, trial):
    seed = _trial_seed(spec, d, trial)
    n = spec.n_for(d)
    truth = random_truth(spec.K, d, seed, sigma=sigma)
    inst = sample_instance(truth, n, seed)
    if spec.init == "spectral":
        init = spectral_init(inst, GridSpec(spec.grid_points))
        radius = float("nan")
    else:
        radius = resolve_radius(spec.init_radius_policy, truth, n)
        init = perturbed_init(truth, radius, seed)
    return truth, inst, init, radius


def _first_hit(seq, target):
    for t, value in enumerate(seq):
        if value <= target:
            return t
    return -1


def _solve(spec, solver, inst, init):
    if solver == "am":
        cfg = AmConfig(max_rounds=spec.rounds, target_precision=spec.target_precision)
        return run_am(inst, init, cfg), None
    gamma = tune_step_size(inst, init, spec.probe_rounds)
    cfg = GdConfig(gamma=gamma, max_rounds=spec.rounds, target_precision=spec.target_precision)
    return run_gd(inst, init, cfg), gamma


def _run_trial(spec, solver, d, sigma, trial, problem=None):
    truth, inst, init, radius = problem or _build_problem(spec, d, sigma, trial)
    rec = RunRecord(panel=spec.panel, solver=solver, d=d, n=inst.n, K=spec.K, sigma=sigma,
                    trial=trial, root_seed=spec.root_seed, init=spec.init, init_radius=radius,
                    gamma=None, rounds_run=0, iterations_to_target=-1,
                    final_dist=float("nan"), fitted_slope=float("nan"))
    try:
        trace, rec.gamma = _solve(spec, solver, inst, init)
    except MixedLRError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        trace = getattr(exc, "trace", None)
        if trace is None:
            return rec, None
    seq = trace.dist_to_truth if spec.reference == "truth" else optimization_error_seq(trace)
    target = spec.target_precision if spec.target_precision is not None else ZERO_TOL
    rec.rounds_run = trace.rounds
    rec.iterations_to_target = _first_hit(trace.dist_to_truth, target)
    rec.final_dist = trace.dist_to_truth[-1]
    rec.wall_clock_s = trace.wall_clock_s
    try:
        rec.fitted_slope = fit_convergence_exponent(seq, (spec.window_lo, None)).slope
    except InsufficientPoints:
        pass
    return rec, np.asarray(seq, dtype=float)


def _pad(seq, length):
    out = np.empty(length)
    m = min(len(seq), length)
    out[:m] = seq[:m]
    out[m:] = seq[m - 1]
    return out


def _map(spec, fn, jobs):
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def _series_prefix(spec, sigma, out_dir):
    if len(spec.sigmas) > 1:
        return Path(out_dir) / f"{spec.panel}_sigma{sigma:g}"
    return Path(out_dir) / spec.panel


def _deviation_notes(spec):
    notes = []
    if spec.K > 2 and spec.init == "perturbed":
        notes.append("K > 2 runs start from a perturbed truth instead of a tensor-based initializer")
    if spec.init == "perturbed":
        notes.append(f"initial error set by radius policy {spec.init_radius_policy!r}")
    return notes


def run_panel(spec: ExperimentSpec, out_dir=None) -> PanelResult:
    """Run every (d, sigma, trial) of ``spec`` and aggregate per series.

    Curves are per-iteration means over trials (a stopped run is extended
    by its last value); the rate fit is taken on the mean curve. With
    ``out_dir`` the results are written as ``<panel>_runs.csv``,
    ``<panel>_curves.csv``, ``<panel>_loglog.csv``, ``<panel>_fits.csv`` and
    ``<panel>_meta.json``.
    """
    if spec.panel == "table1" or spec.solver == "both":
        raise InvalidSpec("use compare_table for two-solver comparisons")
    jobs = [(spec, spec.solver, d, s, t) for d in spec.d_list for s in spec.sigmas
            for t in range(spec.trials)]
    results = _map(spec, _run_trial, jobs)

    records = [rec for rec, _ in results]
    curves, fits = {}, {}
    length = spec.rounds + 1
    for key in [(d, s) for d in spec.d_list for s in spec.sigmas]:
        seqs = [_pad(seq, length) for (rec, seq) in results
                if seq is not None and (rec.d, rec.sigma) == key]
        if not seqs:
            fits[key] = None
            continue
        curves[key] = np.mean(seqs, axis=0)
        try:
            fits[key] = fit_convergence_exponent(curves[key], (spec.window_lo, None))
        except InsufficientPoints:
            fits[key] = None

    result = PanelResult(spec, records, curves, fits)
    if out_dir is not None:
        result.files = _write_panel(result, Path(out_dir))
    return result


def _write_panel(result, out_dir):
    spec = result.spec
    files = [write_csv(out_dir / f"{spec.panel}_runs.csv", RunRecord.header(),
                       (r.row() for r in result.records))]
    for sigma in spec.sigmas:
        prefix = _series_prefix(spec, sigma, out_dir)
        curve_rows, pair_rows = [], []
        for d in spec.d_list:
            curve = result.curves.get((d, sigma))
            if curve is None:
                continue
            curve_rows += [(d, t, v) for t, v in enumerate(curve)]
            x, y, _ = loglog_pairs(curve, (spec.window_lo, None))
            pair_rows += [(d, a, b) for a, b in zip(x, y)]
        files.append(write_csv(f"{prefix}_curves.csv", ["d", "iter", "mean_dist"], curve_rows))
        files.append(write_csv(f"{prefix}_loglog.csv", ["d", "log_dist_t", "log_dist_t1"], pair_rows))
    fit_rows = []
    for (d, sigma), fit in result.fits.items():
        if fit is None:
            fit_rows.append((d, sigma, None, None, None, 0))
        else:
            fit_rows.append((d, sigma, fit.slope, fit.intercept, fit.r_squared, fit.points_used))
    files.append(write_csv(out_dir / f"{spec.panel}_fits.csv",
                           ["d", "sigma", "slope", "intercept", "r_squared", "points_used"], fit_rows))
    meta = dict(spec=asdict(spec), deviations=_deviation_notes(spec))
    files.append(write_json(out_dir / f"{spec.panel}_meta.json", meta))
    return files


@dataclass
class TableResult:
    rows: list  # (d, algorithm, median iterations, median wall-clock seconds)
    records: list
    files: list = field(default_factory=list)

    def lookup(self, d, algorithm):
        for row in self.rows:
            if row[0] == d and row[1] == algorithm:
                return row
        raise KeyError((d, algorithm))


def _median_iterations(records):
    its = [r.iterations_to_target if r.iterations_to_target >= 0 else math.inf for r in records]
    med = float(np.median(its))
    return -1 if math.isinf(med) else med


def compare_table(spec: ExperimentSpec, out_dir=None) -> TableResult:
    """AM and tuned GD from the same init, each run to ``target_precision``.

    Reports the median iteration count and the median solver wall-clock
    (step-size tuning excluded) per dimension and algorithm; a run that
    misses the target counts as -1 and a median over misses is -1.
    """
    if spec.target_precision is None:
        spec = replace(spec, target_precision=1e-3)
    records, rows = [], []
    for d in spec.d_list:
        per_algo = {"AM": [], "GD": []}
        sigma = spec.sigmas[0]
        for trial in range(spec.trials):
            problem = _build_problem(spec, d, sigma, trial)
            for label, solver in (("AM", "am"), ("GD", "gd")):
                rec, _ = _run_trial(spec, solver, d, sigma, trial, problem)
                per_algo[label].append(rec)
        for label, recs in per_algo.items():
            records.extend(recs)
            ok = [r.wall_clock_s for r in recs if r.iterations_to_target >= 0]
            wall = float(np.median(ok)) if ok else float("nan")
            rows.append((d, label, _median_iterations(recs), wall))
    result = TableResult(rows, records)
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.files = [
            write_csv(out_dir / "table1.csv", ["d", "algorithm", "iterations", "wall_clock_s"], rows),
            write_csv(out_dir / "table1_runs.csv", RunRecord.header(), (r.row() for r in records)),
        ]
    return result


@dataclass
class Lemma1Result:
    dists: np.ndarray
    mean_fracs: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    files: list = field(default_factory=list)

    @property
    def relative_intercept(self) -> float:
        """``|intercept| / (slope * max dist)``."""
        return abs(self.intercept) / (abs(self.slope) * float(np.max(self.dists)))


def lemma1_sweep(d, n, radii, trials, seed, relative=True, out_dir=None) -> Lemma1Result:
    """Mean fraction of mismatched samples ``|S| / n`` against init error.

    With ``relative`` the radii are multiples of each trial's boundary
    radius. Within a trial every radius shares one perturbation direction,
    so only the step length changes. The fit is ordinary least squares of
    mean fraction on mean dist.
    """
    radii = [float(r) for r in np.atleast_1d(radii)]
    if not radii or min(radii) < 0 or trials < 1 or d < 1 or n < 1:
        raise InvalidSpec("need non-empty non-negative radii, trials >= 1, d >= 1, n >= 1")
    fracs = np.zeros((trials, len(radii)))
    dists = np.zeros((trials, len(radii)))
    for t in range(trials):
        tseed = (int(seed), int(d), int(t))
        truth = random_truth(2, d, tseed)
        inst = sample_instance(truth, n, tseed)
        scale = boundary_radius(truth, n) if relative else 1.0
        for k, r in enumerate(radii):
            init = perturbed_init(truth, r * scale, tseed)
            report = mismatch_set(inst, init)
            fracs[t, k] = report.size / n
            dists[t, k] = report.dist_at_eval
    mean_d, mean_f = dists.mean(axis=0), fracs.mean(axis=0)
    if len(radii) >= 2 and np.ptp(mean_d) > 0:
        slope, intercept = np.polyfit(mean_d, mean_f, 1)
        resid = mean_f - (intercept + slope * mean_d)
        ss_tot = float(np.sum((mean_f - mean_f.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    else:
        slope, intercept, r2 = float("nan"), float("nan"), float("nan")
    result = Lemma1Result(mean_d, mean_f, float(slope), float(intercept), float(r2))
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.files = [
            write_csv(out_dir / "lemma1.csv", ["dist", "mean_frac_mismatch"], zip(mean_d, mean_f)),
            write_csv(out_dir / "lemma1_fit.csv", ["slope", "intercept", "r_squared"],
                      [(result.slope, result.intercept, result.r_squared)]),
        ]
    return result
