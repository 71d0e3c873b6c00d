"""Command-line interface: ``grassmimo <subcommand> ...``.

Exit codes: 0 success, 1 usage or invalid input, 2 unsupported case,
3 an experiment's embedded tolerance was violated.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import experiments as ex
from . import sinr as mimo
from .grassmann import dump_points_csv, pair_distances, sample_uniform_batch
from .rng import SeededRng
from .volume import Metric, Unsupported, VolumeQuery, max_radius, volume

EXIT_OK, EXIT_USAGE, EXIT_UNSUPPORTED, EXIT_TOLERANCE = 0, 1, 2, 3
DEFAULT_SEED = 0x5EED
SEED_ENV = "GRASSMIMO_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    return f"{float(x):.12g}"


def resolve_seed(flag) -> int:
    """``--seed`` beats ``$GRASSMIMO_SEED`` beats the fixed default."""
    raw = flag if flag is not None else os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(str(raw), 0)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {raw!r}") from None


def _seed_arg(p):
    p.add_argument("--seed", default=None,
                   help=f"master seed (decimal or 0x hex); default ${SEED_ENV} or {DEFAULT_SEED:#x}")


def _scenario_args(p, alpha_default=None):
    p.add_argument("--N", type=int, required=True, help="base-station antennas")
    p.add_argument("--K", type=int, required=True, help="co-scheduled users")
    p.add_argument("--alpha", type=float, default=alpha_default,
                   required=alpha_default is None, help="CSI correlation in (0, 1]")
    p.add_argument("--snr-db", type=float, required=True, help="single-user SINR in dB")
    p.add_argument("--trials", type=int, default=10_000, help="Monte Carlo trials (0 skips)")
    _seed_arg(p)


def _scenario(a) -> mimo.MimoScenario:
    try:
        return mimo.MimoScenario.from_db(a.N, a.K, a.alpha, a.snr_db)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _table(rows, out):
    for r in rows:
        print(",".join(r), file=out)


# -- subcommands -----------------------------------------------------------

def cmd_volume(a, out):
    q = VolumeQuery(a.k, a.n, a.delta, a.metric)
    print(fmt(volume(q)), file=out)


def cmd_cdf_sweep(a, out):
    metric = Metric.parse(a.metric)
    top = max_radius(a.k, a.n, metric) if a.delta_max is None else a.delta_max
    deltas = np.linspace(top / a.points, top, a.points)
    values = [volume(VolumeQuery(a.k, a.n, float(d), metric)) for d in deltas]
    header = ["delta", "closed_form"]
    emp = None
    if a.trials > 0:
        rng = SeededRng(resolve_seed(a.seed))
        d = pair_distances(sample_uniform_batch(a.n, a.k, a.trials, rng),
                           sample_uniform_batch(a.n, a.k, a.trials, rng))
        d = np.sort(d[0] if metric is Metric.PROJECTIVE_F else d[1])
        emp = np.searchsorted(d, deltas, side="right") / d.size
        header.append("empirical")
    rows = [header]
    for i, (x, v) in enumerate(zip(deltas, values)):
        rows.append([fmt(x), fmt(v)] + ([fmt(emp[i])] if emp is not None else []))
    _table(rows, out)


def cmd_sample(a, out):
    if not 1 <= a.k <= a.n:
        raise UsageError(f"need 1 <= k <= n, got k={a.k}, n={a.n}")
    if a.count < 1:
        raise UsageError("--count must be >= 1")
    pts = sample_uniform_batch(a.n, a.k, a.count, SeededRng(resolve_seed(a.seed)))
    if a.out:
        dump_points_csv(pts, a.out)
        print(a.out, file=out)
    else:
        dump_points_csv(pts, out)


def cmd_sinr(a, out):
    s = _scenario(a)
    kind = a.precoder
    if kind == "zf-ideal" and s.alpha != 1.0:
        raise UsageError("--precoder zf-ideal assumes perfect CSI (--alpha 1)")
    if a.trials < 0:
        raise UsageError("--trials must be >= 0")
    expectation = {"cb": mimo.estimate_cb_expected, "zf": mimo.zf_expected_lower_bound,
                   "zf-npa": mimo.zf_expected_lower_bound,
                   "zf-ideal": mimo.zf_ideal_expected}[kind](s)
    rows = [["quantity", "linear", "db"]]
    if a.trials > 0:
        rng = SeededRng(resolve_seed(a.seed))
        U, V, _ = mimo.sample_channels_batch(a.trials, s.N, s.K, s.alpha, rng)
        z = mimo.cross_powers(V)[:, 0].sum(axis=-1)
        if kind == "cb":
            W, bad = mimo.cb_directions(V), np.zeros(a.trials, bool)
            est = s.alpha ** 2 / (z + s.k_gamma)
        else:
            W, bad = (mimo.zf_npa_directions(V) if kind == "zf-npa"
                      else mimo.zf_full_directions(V))
            if kind == "zf-ideal":
                bracket = 1.0 - mimo.cross_powers(U)[:, 0].sum(axis=-1)
                est = np.where(bracket > 0, bracket / s.k_gamma, np.nan)
            else:
                est = np.where(z < 1, mimo.estimate_zf(np.where(z < 1, z, 0.0), s), np.nan)
        real = mimo.sinr_batch(U, W, s.k_gamma)[:, 0]
        keep = ~bad & np.isfinite(est) & (est > 0)
        m_est, m_real = float(est[keep].mean()), float(real[keep].mean())
        rows.append(["estimate_mean", fmt(m_est), fmt(mimo.db(m_est))])
        rows.append(["real_mean", fmt(m_real), fmt(mimo.db(m_real))])
        rows.append(["trials_used", str(int(keep.sum())), ""])
    rows.append(["expectation", fmt(expectation), fmt(mimo.db(expectation))])
    _table(rows, out)


def cmd_gain(a, out):
    s = _scenario(a)
    if a.trials < 0:
        raise UsageError("--trials must be >= 0")
    asym = mimo.gain_zf_cb_asymptotic(s)
    rows = [["quantity", "linear", "db"]]
    if a.trials > 0:
        rng = SeededRng(resolve_seed(a.seed))
        U, V, _ = mimo.sample_channels_batch(a.trials, s.N, s.K, s.alpha, rng)
        z = mimo.cross_powers(V)[:, 0].sum(axis=-1)
        Wz, bad = mimo.zf_full_directions(V)
        keep = ~bad & (z < 1)
        rz = mimo.sinr_batch(U[keep], Wz[keep], s.k_gamma)[:, 0]
        rc = mimo.sinr_batch(U[keep], mimo.cb_directions(V[keep]), s.k_gamma)[:, 0]
        est = float(np.mean(mimo.gain_zf_cb(z[keep], s)))
        emp = float(np.mean(rz / rc))
        rows.append(["estimate_mean", fmt(est), fmt(mimo.db(est))])
        rows.append(["empirical_mean", fmt(emp), fmt(mimo.db(emp))])
        rows.append(["trials_used", str(int(keep.sum())), ""])
    rows.append(["asymptotic", fmt(asym), fmt(mimo.db(asym))])
    _table(rows, out)


def _load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    allowed = {"experiment_id", "sweep", "trials", "master_seed", "output_dir", "workers"}
    unknown = set(data) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def cmd_experiment(a, out):
    data = _load_config(a.config) if a.config else {}
    eid = a.id or data.get("experiment_id")
    if eid is None:
        raise UsageError("--id is required (or experiment_id in the config)")
    if a.id and data.get("experiment_id") not in (None, a.id):
        raise UsageError(f"--id {a.id} disagrees with config id {data['experiment_id']}")
    if a.seed is not None or "master_seed" not in data:
        seed = resolve_seed(a.seed)
    else:
        seed = data["master_seed"]
    workers = a.workers or data.get("workers") or os.cpu_count() or 1
    try:
        cfg = ex.make_config(eid, sweep=data.get("sweep"),
                             trials=a.trials if a.trials is not None else data.get("trials"),
                             master_seed=seed,
                             output_dir=a.out or data.get("output_dir") or "results",
                             workers=workers)
    except ex.ConfigError as exc:
        raise UsageError(str(exc)) from None
    res = ex.run_experiment(cfg)
    print(f"results: {res.csv_path}", file=out)
    print(f"manifest: {res.manifest_path}", file=out)
    print(f"status: {'pass' if res.passed else 'FAIL'}", file=out)
    for v in res.violations:
        print(f"tolerance violated: {v}", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_TOLERANCE


def cmd_list(a, out):
    for eid in ex.list_experiments():
        print(f"{eid}\t{ex.REGISTRY[eid].description}", file=out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="grassmimo", description="Grassmann hyperball volumes and "
                "MU-MIMO SINR prediction under imperfect CSI.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    v = sub.add_parser("volume", help="normalized ball volume (distance CDF) on G(k, n)")
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--delta", type=float, required=True)
    v.add_argument("--metric", choices=["pf", "p2"], default="pf")
    v.set_defaults(func=cmd_volume)

    c = sub.add_parser("cdf-sweep", help="closed-form distance CDF on a radius grid")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--metric", choices=["pf", "p2"], default="pf")
    c.add_argument("--points", type=int, default=200)
    c.add_argument("--delta-max", type=float, default=None)
    c.add_argument("--trials", type=int, default=0, help="also print an empirical CDF")
    _seed_arg(c)
    c.set_defaults(func=cmd_cdf_sweep)

    s = sub.add_parser("sample", help="Haar-uniform points of G(k, n) as CSV")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out", default=None, help="write to this file instead of stdout")
    _seed_arg(s)
    s.set_defaults(func=cmd_sample)

    r = sub.add_parser("sinr", help="SINR estimate, empirical mean and expectation")
    r.add_argument("--precoder", choices=["cb", "zf", "zf-npa", "zf-ideal"], required=True)
    _scenario_args(r, alpha_default=1.0)
    r.set_defaults(func=cmd_sinr)

    g = sub.add_parser("gain", help="ZF over CB SINR gain")
    _scenario_args(g)
    g.set_defaults(func=cmd_gain)

    e = sub.add_parser("experiment", help="run a registered Monte Carlo experiment")
    e.add_argument("--id", default=None, help="experiment id (see list-experiments)")
    e.add_argument("--config", default=None, help="JSON config file")
    e.add_argument("--out", default=None, help="output root directory (default: results)")
    e.add_argument("--trials", type=int, default=None)
    e.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    _seed_arg(e)
    e.set_defaults(func=cmd_experiment)

    ls = sub.add_parser("list-experiments", help="list registered experiment ids")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args, sys.stdout)
    except UsageError as exc:
        print(f"grassmimo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Unsupported as exc:
        print(f"grassmimo: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (TypeError, ValueError) as exc:
        print(f"grassmimo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
