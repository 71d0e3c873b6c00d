"""Monte Carlo experiment harness.

Every experiment is a sweep over a parameter grid.  Trials at each grid
point are split into fixed-size blocks; block ``b`` of grid point ``g``
draws from the random stream ``stream_id_for(g, b)``, so results do not
depend on how blocks are scheduled across worker processes.  Blocks are
reduced in index order.

Results go to ``<output_dir>/<experiment_id>/<timestamp>/results.csv``
with a ``manifest.json`` next to it.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import itertools
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import sinr as mimo
from .grassmann import pair_distances, sample_uniform_batch
from .rng import SeededRng, stream_id_for
from .volume import Metric, VolumeQuery, max_radius, volume

__all__ = [
    "ExperimentConfig",
    "ErrorStats",
    "CdfTable",
    "ExperimentResult",
    "ExperimentDefinition",
    "REGISTRY",
    "ConfigError",
    "list_experiments",
    "make_config",
    "run_experiment",
    "run_cdf_experiment",
    "run_estimator_error_experiment",
    "run_expectation_experiment",
    "run_gain_experiment",
    "ks_sup_deviation",
    "dkw_epsilon",
    "MAX_EXCLUSION_RATE",
]

CDF_BLOCK = 8192
SINR_BLOCK = 1024
DELTA_POINTS = 200
MAX_EXCLUSION_RATE = 1e-3
MIN_TRIALS = 100
DB_PER_NEPER = 10.0 / math.log(10.0)


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


# -- result types ----------------------------------------------------------

@dataclass(frozen=True)
class ErrorStats:
    """Mean/std (dB) of an estimation error over ``n_trials`` trials.

    ``extra`` holds auxiliary linear-scale columns for re-analysis.
    """

    grid_point: dict
    mean_db: float
    std_db: float
    n_trials: int
    n_excluded: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def std_error_db(self) -> float:
        return self.std_db / math.sqrt(self.n_trials)


@dataclass(frozen=True)
class CdfTable:
    grid_point: dict
    deltas: np.ndarray
    empirical: np.ndarray
    closed_form: np.ndarray
    n_trials: int

    @property
    def sup_deviation(self) -> float:
        return ks_sup_deviation(self.empirical, self.closed_form)


def ks_sup_deviation(empirical, closed_form, abscissae=None, closed_abscissae=None) -> float:
    """Largest pointwise gap between two CDF tables on a shared abscissa.

    Raises ``ValueError`` when the tables are not aligned.
    """
    e = np.asarray(empirical, dtype=float)
    c = np.asarray(closed_form, dtype=float)
    if e.shape != c.shape:
        raise ValueError(f"misaligned CDF tables: {e.shape} vs {c.shape}")
    if abscissae is not None and closed_abscissae is not None:
        a, b = np.asarray(abscissae, dtype=float), np.asarray(closed_abscissae, dtype=float)
        if a.shape != b.shape or not np.array_equal(a, b):
            raise ValueError("CDF tables use different abscissae")
    if e.size == 0:
        return 0.0
    return float(np.max(np.abs(e - c)))


def dkw_epsilon(n: int, confidence: float = 0.999) -> float:
    """Sup-norm radius that an n-sample empirical CDF stays within w.p. ``confidence``."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


# -- configuration ---------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment_id: str
    sweep: dict
    trials: int
    master_seed: int = 0x5EED
    output_dir: str | None = None
    workers: int = 1

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ExperimentDefinition:
    experiment_id: str
    kind: str            # cdf | error | expectation | gain
    quantity: str        # what is sampled per trial
    description: str
    default_sweep: dict
    default_trials: int
    check: Callable      # (rows, cfg) -> list of violation messages


def _grid(sweep: dict) -> list:
    """Expand a sweep into grid points.

    ``{"points": [{...}, ...]}`` lists points explicitly, optionally merged
    with scalar or list-valued keys; otherwise list-valued keys form a
    cartesian product.
    """
    sweep = dict(sweep)
    points = sweep.pop("points", None)
    list_keys = [k for k, v in sweep.items() if isinstance(v, (list, tuple)) and k != "deltas"]
    fixed = {k: v for k, v in sweep.items() if k not in list_keys}
    combos = [dict(zip(list_keys, vals))
              for vals in itertools.product(*(sweep[k] for k in list_keys))]
    if points is None:
        return [{**fixed, **c} for c in combos]
    return [{**fixed, **c, **p} for p in points for c in combos]


# tolerance checks; each returns human-readable violations

def _check_cdf(rows, cfg):
    out = []
    for t in rows:
        tol = max(0.01, dkw_epsilon(t.n_trials))
        if t.sup_deviation > tol:
            out.append(f"{t.grid_point}: sup deviation {t.sup_deviation:.4g} > {tol:.4g}")
    return out


def _check_abs_mean(limit):
    def check(rows, cfg):
        return [f"{r.grid_point}: |mean error| {abs(r.mean_db):.4g} dB > {limit}"
                for r in rows if not abs(r.mean_db) <= limit]
    return check


def _check_std_limit(limit):
    def check(rows, cfg):
        return [f"{r.grid_point}: std {r.std_db:.4g} dB > {limit}"
                for r in rows if not r.std_db <= limit]
    return check


def _check_gap(limit):
    def check(rows, cfg):
        return [f"{r.grid_point}: |gap| {abs(r.mean_db):.4g} dB > {limit}"
                for r in rows if not abs(r.mean_db) <= limit]
    return check


def _std_se(r):
    # standard error of a sample std, normal approximation
    return r.std_db / math.sqrt(2.0 * max(r.n_trials - 1, 1))


def _ordering_violations(rows, key, direction, slack=3.0):
    """Check std moves in ``direction`` (+1 up, -1 down) as ``key`` grows."""
    groups = {}
    for r in rows:
        rest = tuple(sorted((k, v) for k, v in r.grid_point.items() if k != key))
        groups.setdefault(rest, []).append(r)
    out = []
    for rest, grp in groups.items():
        grp.sort(key=lambda r: r.grid_point[key])
        for a, b in zip(grp, grp[1:]):
            diff = direction * (b.std_db - a.std_db)
            if diff < -slack * math.hypot(_std_se(a), _std_se(b)):
                out.append(f"std not {'increasing' if direction > 0 else 'decreasing'} in "
                           f"{key} at {dict(rest)}: {a.grid_point[key]}->{b.grid_point[key]} "
                           f"gives {a.std_db:.4g}->{b.std_db:.4g}")
    return out


def _check_cb_std(rows, cfg):
    # cross-term averaging: more users means a tighter CB error
    return (_ordering_violations(rows, "N", -1)
            + _ordering_violations(rows, "alpha", -1)
            + _ordering_violations(rows, "K", -1))


def _check_zf_std(rows, cfg):
    # neglected residual terms accumulate with K under ZF
    return (_ordering_violations(rows, "N", -1)
            + _ordering_violations(rows, "alpha", -1)
            + _ordering_violations(rows, "K", +1))


def _check_zf_bound(rows, cfg):
    out = []
    for r in rows:
        bound = r.extra["closed_form_linear"]
        mean, se = r.extra["empirical_mean_linear"], r.extra["empirical_se_linear"]
        if bound > mean + 2.0 * se:
            out.append(f"{r.grid_point}: bound {bound:.6g} exceeds empirical mean "
                       f"{mean:.6g} + 2 s.e.")
        if r.grid_point["sinr_su_db"] >= 15 and not abs(r.mean_db) <= 1.0:
            out.append(f"{r.grid_point}: high-SINR gap {r.mean_db:.4g} dB exceeds 1 dB")
    return out


def _check_gain_direction(rows, cfg):
    return [f"{r.grid_point}: mean(estimate - empirical) {r.mean_db:.4g} dB > 2 s.e. "
            f"({2 * r.std_error_db:.3g})"
            for r in rows if r.mean_db > 2.0 * r.std_error_db]


def _check_asymptotic_std(rows, cfg):
    high = [r for r in rows if r.grid_point["sinr_su_db"] >= 15]
    return _ordering_violations(high, "K", -1)


_SINR_GRID = {"N": [32, 64, 128], "K": [8, 16], "alpha": [0.7, 0.8, 0.9],
              "sinr_su_db": [0, 10, 20]}
_ZF_GRID = {"N": [64, 128], "K": [8, 12, 16, 20], "alpha": [0.8, 0.9],
            "sinr_su_db": [0, 5, 10, 15, 20]}
_GAIN_GRID = {"N": [64, 128], "K": [8, 16], "alpha": [0.8, 0.9, 0.99],
              "sinr_su_db": [0, 10, 20]}
_IDEAL_GRID = {"N": [64, 128], "K": [8, 16], "alpha": [1.0],
               "sinr_su_db": [0, 10, 20]}


def _defn(eid, kind, quantity, desc, sweep, trials, check):
    return ExperimentDefinition(eid, kind, quantity, desc, sweep, trials, check)


REGISTRY: dict = {d.experiment_id: d for d in [
    _defn("cdf-k1", "cdf", "distance", "distance CDF on G(1,n)",
          {"k": [1], "n": [2, 4, 8], "metric": "pf"}, 100_000, _check_cdf),
    _defn("cdf-k2-pf", "cdf", "distance", "projective-F distance CDF on G(2,n), both branches",
          {"k": [2], "n": [4, 6, 8], "metric": "pf"}, 100_000, _check_cdf),
    _defn("cdf-p2", "cdf", "distance", "projective-2 distance CDF",
          {"metric": "p2", "points": [{"k": 2, "n": 4}, {"k": 3, "n": 6},
                                      {"k": 3, "n": 8}, {"k": 5, "n": 8}]},
          100_000, _check_cdf),
    _defn("cdf-pf-general", "cdf", "distance", "projective-F distance CDF for delta <= 1",
          {"metric": "pf", "delta_max": 1.0,
           "points": [{"k": 2, "n": 5}, {"k": 3, "n": 6}, {"k": 3, "n": 8}]},
          100_000, _check_cdf),
    _defn("cb-error-mean", "error", "cb", "CB estimator error, mean",
          _SINR_GRID, 10_000, _check_abs_mean(0.2)),
    _defn("cb-error-std", "error", "cb", "CB estimator error, std ordering",
          _SINR_GRID, 10_000, _check_cb_std),
    _defn("cb-expectation", "expectation", "cb", "CB expected SINR vs empirical mean",
          _SINR_GRID, 10_000, _check_gap(0.5)),
    _defn("zf-error-mean", "error", "zf", "ZF estimator error, mean",
          _ZF_GRID, 10_000, lambda rows, cfg: []),
    _defn("zf-error-std", "error", "zf", "ZF estimator error, std",
          _ZF_GRID, 10_000, _check_zf_std),
    _defn("zf-expectation", "expectation", "zf", "ZF expected-SINR lower bound",
          _ZF_GRID, 10_000, _check_zf_bound),
    _defn("gain", "gain", "gain", "ZF over CB gain, per-draw estimate vs empirical",
          _GAIN_GRID, 10_000, _check_gain_direction),
    _defn("gain-asymptotic-std", "gain", "gain-asymptotic",
          "ZF over CB gain, asymptotic form error std vs K",
          {"N": [128], "K": [4, 8, 12, 16, 20], "alpha": [0.9], "sinr_su_db": [0, 10, 20]},
          10_000, _check_asymptotic_std),
    _defn("zf-ideal-error-mean", "error", "zf-ideal", "ideal-CSI ZF estimator error, mean",
          _IDEAL_GRID, 10_000, _check_abs_mean(0.1)),
    _defn("zf-ideal-error-std", "error", "zf-ideal", "ideal-CSI ZF estimator error, std",
          _IDEAL_GRID, 10_000, _check_std_limit(0.3)),
    _defn("zf-ideal-expectation", "expectation", "zf-ideal",
          "ideal-CSI ZF expected SINR vs empirical mean",
          _IDEAL_GRID, 10_000, _check_gap(0.3)),
]}


def list_experiments() -> list:
    return sorted(REGISTRY)


def make_config(experiment_id: str, sweep: dict | None = None, trials: int | None = None,
                master_seed: int = 0x5EED, output_dir=None, workers: int = 1) -> ExperimentConfig:
    """Config with registry defaults filled in; validates everything."""
    if experiment_id not in REGISTRY:
        raise ConfigError(f"unknown experiment id {experiment_id!r}; valid ids: "
                          + ", ".join(list_experiments()))
    d = REGISTRY[experiment_id]
    cfg = ExperimentConfig(experiment_id,
                           dict(d.default_sweep) if sweep is None else dict(sweep),
                           d.default_trials if trials is None else int(trials),
                           int(master_seed),
                           None if output_dir is None else str(output_dir),
                           int(workers))
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> list:
    """Raise ``ConfigError`` if the config is invalid; return its grid."""
    if cfg.experiment_id not in REGISTRY:
        raise ConfigError(f"unknown experiment id {cfg.experiment_id!r}; valid ids: "
                          + ", ".join(list_experiments()))
    if not isinstance(cfg.trials, int) or cfg.trials < MIN_TRIALS:
        raise ConfigError(f"trials must be an integer >= {MIN_TRIALS}, got {cfg.trials!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not isinstance(cfg.sweep, dict):
        raise ConfigError("sweep must be a mapping")
    kind = REGISTRY[cfg.experiment_id].kind
    try:
        grid = _grid(cfg.sweep)
    except TypeError as exc:
        raise ConfigError(f"malformed sweep: {exc}") from exc
    if not grid:
        raise ConfigError("sweep expands to an empty grid")
    for gp in grid:
        try:
            if kind == "cdf":
                _cdf_point(gp)
            else:
                _scenario(gp)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid grid point {gp}: {exc}") from exc
    return grid


def _cdf_point(gp):
    """Validated (k, n, metric, deltas) for a CDF grid point."""
    k, n = int(gp["k"]), int(gp["n"])
    metric = Metric.parse(gp.get("metric", "pf"))
    if "deltas" in gp:
        deltas = np.sort(np.asarray(gp["deltas"], dtype=float))
    else:
        top = min(max_radius(k, n, metric), float(gp.get("delta_max", math.inf)))
        deltas = np.linspace(top / DELTA_POINTS, top, DELTA_POINTS)
    for d in deltas:
        volume(VolumeQuery(k, n, float(d), metric))  # surfaces Unsupported early
    return k, n, metric, deltas


def _scenario(gp) -> mimo.MimoScenario:
    return mimo.MimoScenario.from_db(int(gp["N"]), int(gp["K"]), float(gp["alpha"]),
                                     float(gp["sinr_su_db"]))


# -- per-block workers (module level so they pickle) -----------------------

def _blocks(trials, size):
    return [(b, min(size, trials - b * size)) for b in range(-(-trials // size))]


def _cdf_block(k, n, metric, seed, g, b, size):
    rng = SeededRng(seed, stream_id_for(g, b))
    Q1 = sample_uniform_batch(n, k, size, rng)
    Q2 = sample_uniform_batch(n, k, size, rng)
    pf, p2 = pair_distances(Q1, Q2)
    return pf if metric is Metric.PROJECTIVE_F else p2


def _sinr_block(quantity, gp, seed, g, b, size):
    """Per-trial columns for user 0; NaN marks an excluded trial."""
    s = _scenario(gp)
    rng = SeededRng(seed, stream_id_for(g, b))
    U, V, _ = mimo.sample_channels_batch(size, s.N, s.K, s.alpha, rng)
    kg = s.k_gamma
    z = mimo.cross_power_sum(V)
    if quantity == "cb":
        real = mimo.user_sinr_batch(U, mimo.cb_directions(V), kg)
        est = s.alpha ** 2 / (z + kg)
        return np.stack([est, real], axis=1)
    Wz, bad = mimo.zf_full_directions(V)
    real_zf = mimo.user_sinr_batch(U, Wz, kg)
    real_zf[bad] = np.nan
    ok = z < 1.0
    zc = np.where(ok, z, 0.0)
    if quantity == "zf":
        est = np.where(ok, mimo.estimate_zf(zc, s), np.nan)
        return np.stack([est, real_zf], axis=1)
    if quantity == "zf-ideal":
        bracket = 1.0 - mimo.cross_power_sum(U)
        est = np.where(bracket > 0, bracket / kg, np.nan)
        return np.stack([est, real_zf], axis=1)
    # gain quantities
    real_cb = mimo.user_sinr_batch(U, mimo.cb_directions(V), kg)
    emp = real_zf / real_cb
    if quantity == "gain":
        est = np.where(ok, mimo.gain_zf_cb(zc, s), np.nan)
    else:
        est = np.full(size, mimo.gain_zf_cb_asymptotic(s))
    return np.stack([est, emp, real_zf, real_cb], axis=1)


def _call(args):
    fn, a = args
    return fn(*a)


def _run_tasks(tasks, workers):
    """Evaluate ``(fn, args)`` tasks, returning results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*a) for fn, a in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, tasks, chunksize=1))


def _sinr_samples(cfg, grid, quantity):
    tasks, index = [], []
    for g, gp in enumerate(grid):
        for b, size in _blocks(cfg.trials, SINR_BLOCK):
            tasks.append((_sinr_block, (quantity, gp, cfg.master_seed, g, b, size)))
            index.append(g)
    results = _run_tasks(tasks, cfg.workers)
    per_point = [[] for _ in grid]
    for g, r in zip(index, results):
        per_point[g].append(r)
    return [np.concatenate(p, axis=0) for p in per_point]


def _clean(samples):
    keep = np.all(np.isfinite(samples), axis=1) & np.all(samples > 0, axis=1)
    return samples[keep], int(samples.shape[0] - keep.sum())


def _grid_key(gp):
    return {k: gp[k] for k in ("N", "K", "alpha", "sinr_su_db")}


# -- experiment runners ----------------------------------------------------

def run_cdf_experiment(cfg: ExperimentConfig) -> list:
    """Empirical vs closed-form distance CDFs, one ``CdfTable`` per grid point."""
    grid = validate_config(cfg)
    specs = [_cdf_point(gp) for gp in grid]
    tasks, index = [], []
    for g, (k, n, metric, _) in enumerate(specs):
        for b, size in _blocks(cfg.trials, CDF_BLOCK):
            tasks.append((_cdf_block, (k, n, metric, cfg.master_seed, g, b, size)))
            index.append(g)
    results = _run_tasks(tasks, cfg.workers)
    per_point = [[] for _ in grid]
    for g, r in zip(index, results):
        per_point[g].append(r)
    tables = []
    for (k, n, metric, deltas), chunks in zip(specs, per_point):
        d = np.sort(np.concatenate(chunks))
        emp = np.searchsorted(d, deltas, side="right") / d.size
        cf = np.array([volume(VolumeQuery(k, n, float(x), metric)) for x in deltas])
        tables.append(CdfTable({"k": k, "n": n, "metric": metric.value}, deltas, emp, cf, d.size))
    return tables


def _error_row(gp, samples, excluded):
    est, real = samples[:, 0], samples[:, 1]
    err = mimo.db(est) - mimo.db(real)
    return ErrorStats(_grid_key(gp), float(err.mean()), float(err.std(ddof=1)),
                      int(err.size), excluded,
                      {"mean_estimate_linear": float(est.mean()),
                       "mean_real_linear": float(real.mean()),
                       "se_real_linear": float(real.std(ddof=1) / math.sqrt(real.size))})


def run_estimator_error_experiment(cfg: ExperimentConfig) -> list:
    """Per-trial error ``estimate dB - real dB`` for user 0, aggregated per point."""
    grid = validate_config(cfg)
    d = REGISTRY[cfg.experiment_id]
    rows = []
    for gp, samples in zip(grid, _sinr_samples(cfg, grid, d.quantity)):
        kept, excluded = _clean(samples)
        rows.append(_error_row(gp, kept, excluded))
    return rows


_EXPECTATION = {
    "cb": mimo.estimate_cb_expected,
    "zf": mimo.zf_expected_lower_bound,
    "zf-ideal": mimo.zf_ideal_expected,
}


def run_expectation_experiment(cfg: ExperimentConfig) -> list:
    """Closed-form mean SINR vs the empirical mean of the true SINR.

    ``mean_db`` is the gap ``closed form dB - empirical mean dB``;
    ``std_db`` is the dB-scale spread of the true SINR (linear std over
    mean, times 10/ln 10), so ``std_error_db`` is the standard error of the
    empirical mean in dB.
    """
    grid = validate_config(cfg)
    d = REGISTRY[cfg.experiment_id]
    rows = []
    for gp, samples in zip(grid, _sinr_samples(cfg, grid, d.quantity)):
        kept, excluded = _clean(samples)
        real = kept[:, 1]
        s = _scenario(gp)
        cf = float(_EXPECTATION[d.quantity](s))
        mean, std = float(real.mean()), float(real.std(ddof=1))
        rows.append(ErrorStats(
            _grid_key(gp), float(mimo.db(cf) - mimo.db(mean)), DB_PER_NEPER * std / mean,
            int(real.size), excluded,
            {"closed_form_linear": cf, "empirical_mean_linear": mean,
             "empirical_se_linear": std / math.sqrt(real.size)}))
    return rows


def run_gain_experiment(cfg: ExperimentConfig) -> list:
    """ZF/CB gain: per-draw (or asymptotic) estimate vs the empirical ratio.

    Both precoders act on the same channel draw; the error per trial is
    ``estimate dB - empirical dB``.
    """
    grid = validate_config(cfg)
    d = REGISTRY[cfg.experiment_id]
    rows = []
    for gp, samples in zip(grid, _sinr_samples(cfg, grid, d.quantity)):
        kept, excluded = _clean(samples)
        est, emp = kept[:, 0], kept[:, 1]
        err = mimo.db(est) - mimo.db(emp)
        s = _scenario(gp)
        rows.append(ErrorStats(
            _grid_key(gp), float(err.mean()), float(err.std(ddof=1)), int(err.size), excluded,
            {"mean_estimated_gain": float(est.mean()),
             "empirical_mean_gain": float(emp.mean()),
             "empirical_gain_of_means": float(kept[:, 2].mean() / kept[:, 3].mean()),
             "asymptotic_gain": float(mimo.gain_zf_cb_asymptotic(s))}))
    return rows


_RUNNERS = {
    "cdf": run_cdf_experiment,
    "error": run_estimator_error_experiment,
    "expectation": run_expectation_experiment,
    "gain": run_gain_experiment,
}


# -- output ----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def results_csv(rows) -> str:
    """Render result rows as CSV text (12 significant digits)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows and isinstance(rows[0], CdfTable):
        w.writerow(["k", "n", "metric", "delta", "empirical", "closed_form",
                    "abs_deviation", "sup_deviation", "n_trials"])
        for t in rows:
            sup = t.sup_deviation
            for x, e, c in zip(t.deltas, t.empirical, t.closed_form):
                w.writerow([_fmt(v) for v in (t.grid_point["k"], t.grid_point["n"],
                                               t.grid_point["metric"], x, e, c,
                                               abs(e - c), sup, t.n_trials)])
        return buf.getvalue()
    keys = list(rows[0].grid_point) if rows else []
    extra = list(rows[0].extra) if rows else []
    w.writerow(keys + ["n_trials", "n_excluded", "mean_db", "std_db", "std_error_db"] + extra)
    for r in rows:
        w.writerow([_fmt(r.grid_point[k]) for k in keys]
                   + [_fmt(v) for v in (r.n_trials, r.n_excluded, r.mean_db, r.std_db,
                                        r.std_error_db)]
                   + [_fmt(r.extra[k]) for k in extra])
    return buf.getvalue()


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    violations: list
    n_trials_total: int
    n_excluded_total: int
    wall_clock_s: float
    csv_path: Path | None = None
    manifest_path: Path | None = None

    @property
    def exclusion_rate(self) -> float:
        return self.n_excluded_total / max(1, self.n_trials_total + self.n_excluded_total)

    @property
    def passed(self) -> bool:
        return not self.violations


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run, check embedded tolerances, and (optionally) write CSV + manifest."""
    validate_config(cfg)
    d = REGISTRY[cfg.experiment_id]
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    rows = _RUNNERS[d.kind](cfg)
    wall = time.perf_counter() - t0
    violations = list(d.check(rows, cfg))
    n_kept = sum(r.n_trials for r in rows)
    n_excl = sum(getattr(r, "n_excluded", 0) for r in rows)
    result = ExperimentResult(cfg, rows, violations, n_kept, n_excl, wall)
    if result.exclusion_rate > MAX_EXCLUSION_RATE:
        violations.append(f"exclusion rate {result.exclusion_rate:.3g} exceeds "
                          f"{MAX_EXCLUSION_RATE:g}")
    if write and cfg.output_dir is not None:
        out = (Path(cfg.output_dir) / cfg.experiment_id
               / started.strftime("%Y%m%dT%H%M%S%fZ"))
        out.mkdir(parents=True, exist_ok=False)
        result.csv_path = out / "results.csv"
        result.csv_path.write_text(results_csv(rows))
        manifest = {
            "experiment_id": cfg.experiment_id,
            "description": d.description,
            "config": cfg.to_json(),
            "master_seed": cfg.master_seed,
            "version": version_string(),
            "started_utc": started.isoformat(),
            "wall_clock_seconds": wall,
            "trials_kept": n_kept,
            "trials_excluded": n_excl,
            "exclusion_rate": result.exclusion_rate,
            "passed": result.passed,
            "violations": violations,
        }
        result.manifest_path = out / "manifest.json"
        result.manifest_path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return result
