"""Command-line front end.

``chipsuq report`` reads a draw CSV (or simulates one with ``--synth``) and
writes ``report.json``, ``chips_curve.csv``, ``unit_uncertainty.csv`` and,
when parameters are supplied, ``theta_samples_<j>.csv`` per cluster.
``chipsuq synth`` writes the synthetic benchmark's data, draws and cluster
mean parameters to CSV.

Exit status: 0 on success, 1 for input errors, 2 when an internal invariant
check fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .chips import chips, default_starts, meets, stability_report
from .draws import DrawSet, cluster_count, consistency_bits, consistent_count
from .estimate import DEFAULT_RESTARTS, LossSpec, complete_partition, expected_loss
from .infer import cluster_regions
from .io import InputError, fmt, ingest_params, read_draws, write_csv, write_draws, write_params
from .metrics import chips_curve, unit_uncertainty
from .partition import is_consistent
from .synth import benchmark_spec, generate_data, sample_cluster_means, sample_z_labels

log = logging.getLogger("chipsuq")


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name: str):
    try:
        yield
    except (StageError, InvariantError):
        raise
    except Exception as exc:  # noqa: BLE001 - re-tagged with the module name
        raise StageError(name, exc) from exc


@dataclass
class RunConfig:
    out_dir: Path
    draws_path: Path | None = None
    params_path: Path | None = None
    gamma: float = 0.95
    alpha: float = 0.95
    n_runs: int | None = None
    seed: int = 0
    loss: str = "binder"
    threads: int = 1
    restarts: int = DEFAULT_RESTARTS
    stability_repeats: int = 0
    synth_sigma2: float | None = None
    synth_draws: int = 10_000
    synth_seed: int = 0

    def validate(self):
        if not 0 < self.gamma < 1:
            raise InputError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_runs is not None and self.n_runs < 1:
            raise InputError("n-runs must be at least 1")
        if self.threads < 1:
            raise InputError("threads must be at least 1")
        if self.stability_repeats != 0 and self.stability_repeats < 2:
            raise InputError("stability-repeats must be 0 (off) or at least 2")
        LossSpec(self.loss)
        if (self.draws_path is None) == (self.synth_sigma2 is None):
            raise InputError("give exactly one of a draws file or --synth")


def _subpartition_json(sub) -> dict:
    return {
        "items": [i + 1 for i in sub.order],
        "assignment": list(sub.assignment),
        "clusters": [[i + 1 for i in c] for c in sub.clusters()],
    }


def _load_inputs(cfg: RunConfig):
    """Return (DrawSet, ParamTable or None, raw label matrix)."""
    if cfg.synth_sigma2 is not None:
        with stage("synth"):
            spec = benchmark_spec(cfg.synth_sigma2)
            data = generate_data(spec, cfg.synth_seed)
            raw = sample_z_labels(data.data, spec, cfg.synth_draws, cfg.synth_seed + 1)
            ds = DrawSet(raw)
            params = sample_cluster_means(data.data, ds, spec.sigma2, cfg.synth_seed + 2)
        return ds, params, raw
    with stage("draws"):
        raw = read_draws(cfg.draws_path)
        ds = DrawSet(raw)
    params = None
    if cfg.params_path is not None:
        with stage("params"):
            params = ingest_params(cfg.params_path, raw)
    return ds, params, raw


def build_report(cfg: RunConfig) -> tuple[dict, dict]:
    """Compute everything; returns (report dict, extra tables keyed by file name)."""
    cfg.validate()
    ds, params, _ = _load_inputs(cfg)
    tables: dict[str, tuple[list[str], list]] = {}

    with stage("chips"):
        starts = default_starts(ds.n, cfg.seed, cfg.n_runs)
        region, traces = chips(ds, cfg.gamma, starts, cfg.seed, threads=cfg.threads)
    sub = region.subpartition
    if consistent_count(ds, sub) != region.count:
        raise InvariantError("region probability disagrees with a direct recount")
    if not meets(region.count, ds.M, Fraction(str(cfg.gamma))):
        raise InvariantError("selected region falls below gamma")

    with stage("metrics"):
        curve = chips_curve(traces)
        if np.any(np.diff(curve.counts) > 0):
            raise InvariantError("CHIPS curve is not nonincreasing")
        units = unit_uncertainty(ds, region)
        cluster_probs = [cluster_count(ds, c) / ds.M for c in sub.clusters()]
    tables["chips_curve.csv"] = (
        ["size", "p_max"],
        [[l, v] for l, v in enumerate(curve.values.tolist(), start=1)],
    )
    tables["unit_uncertainty.csv"] = (
        ["item", "q_max", "drop", "best_placement", "n_best"],
        [[u.item + 1, u.q_max, u.drop, u.best_placement, u.n_best] for u in units],
    )

    with stage("estimate"):
        point = complete_partition(ds, region, cfg.loss, cfg.restarts, cfg.seed)
        point_loss = expected_loss(ds, point, cfg.loss)
        if not is_consistent(point, sub):
            raise InvariantError("completed estimate changed the frozen subpartition")

    report = {
        "n": ds.n,
        "M": ds.M,
        "gamma": cfg.gamma,
        "n_runs": len(starts),
        "seed": cfg.seed,
        "n0": region.n0,
        "k0": region.k0,
        "probability": region.probability,
        "tied_regions": region.n_tied,
        "subpartition": _subpartition_json(sub),
        "auchips": curve.auchips,
        "cluster_probabilities": cluster_probs,
        "unit_uncertainty": [
            {
                "item": u.item + 1,
                "q_max": u.q_max,
                "drop": u.drop,
                "best_placement": u.best_placement,
                "n_best": u.n_best,
            }
            for u in units
        ],
        "point_estimate": {
            "loss": cfg.loss,
            "expected_loss": point_loss,
            "labels": list(point.labels),
        },
    }

    if params is not None:
        with stage("infer"):
            regions = cluster_regions(ds, params, region, cfg.alpha)
        report["alpha"] = cfg.alpha
        report["credible_regions"] = []
        draw_ids = (np.flatnonzero(consistency_bits(ds, sub)) + 1).tolist()
        for reg in regions:
            report["credible_regions"].append(
                {
                    "cluster": reg.cluster_index,
                    "n_samples": int(reg.samples.shape[0]),
                    "lower": reg.lower.tolist(),
                    "upper": reg.upper.tolist(),
                    "center": reg.center.tolist(),
                    "covariance": reg.covariance.tolist(),
                    "radius2": reg.radius2 if reg.ellipsoid_ok else None,
                    "ridge": reg.ridge,
                    "joint_bound": reg.joint_bound,
                }
            )
            d = reg.samples.shape[1]
            tables[f"theta_samples_{reg.cluster_index}.csv"] = (
                ["iteration"] + [f"theta_{c + 1}" for c in range(d)],
                [[m, *row] for m, row in zip(draw_ids, reg.samples.tolist())],
            )
            if reg.samples.shape[0] != region.count:
                raise InvariantError("conditional sample count differs from region count")

    if cfg.stability_repeats:
        with stage("stability"):
            stab = stability_report(
                ds,
                cfg.gamma,
                len(starts),
                cfg.stability_repeats,
                cfg.seed,
                threads=cfg.threads,
            )
        summary = stab.summary()
        summary["distinct_subpartitions"] = [_subpartition_json(s) for s in stab.distinct]
        report["stability"] = summary

    return report, tables


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def run_report(cfg: RunConfig) -> dict:
    """Compute the report and write all output files into ``cfg.out_dir``."""
    report, tables = build_report(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    (out / "report.json").write_text(text + "\n")
    for name, (header, rows) in tables.items():
        write_csv(out / name, header, rows)
    return report


def run_synth(sigma2: float, M: int, seed: int, out_dir) -> None:
    """Write data.csv, draws.csv and params.csv for the synthetic benchmark."""
    spec = benchmark_spec(sigma2)
    data = generate_data(spec, seed)
    raw = sample_z_labels(data.data, spec, M, seed + 1)
    ds = DrawSet(raw)
    params = sample_cluster_means(data.data, ds, spec.sigma2, seed + 2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "data.csv",
        [f"y_{c + 1}" for c in range(spec.d)] + ["true_label"],
        [[*row, int(lab)] for row, lab in zip(data.data.tolist(), data.true_labels)],
    )
    write_draws(out / "draws.csv", ds)
    write_params(out / "params.csv", params)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chipsuq",
        description="Credible subpartitions and clustering uncertainty from MCMC partition draws.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("report", help="analyse partition draws and write a report")
    rep.add_argument("draws", nargs="?", type=Path, help="CSV of draws (rows = iterations)")
    rep.add_argument("-o", "--out", type=Path, required=True, help="output directory")
    rep.add_argument("--params", type=Path, help="CSV of cluster parameters per draw")
    rep.add_argument("--gamma", type=float, default=0.95, help="credible probability threshold")
    rep.add_argument("--alpha", type=float, default=0.95, help="level of the per-cluster parameter regions")
    rep.add_argument("--n-runs", type=int, default=None, help="number of greedy starts (default min(n, 100))")
    rep.add_argument("--seed", type=int, default=0, help="master seed for all random choices")
    rep.add_argument("--loss", choices=["binder", "vi"], default="binder", help="loss for the completed point estimate")
    rep.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS, help="completion restarts")
    rep.add_argument("--threads", type=int, default=1, help="worker threads for greedy runs")
    rep.add_argument("--stability-repeats", type=int, default=0, help="rerun the search this many times and summarize (0 = off)")
    rep.add_argument("--synth", type=float, metavar="SIGMA2", help="simulate the benchmark with this variance instead of reading draws")
    rep.add_argument("--synth-draws", type=int, default=10_000)
    rep.add_argument("--synth-seed", type=int, default=0)

    syn = sub.add_parser("synth", help="write synthetic benchmark data, draws and parameters")
    syn.add_argument("--sigma2", type=float, required=True)
    syn.add_argument("--draws", type=int, default=10_000)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("-o", "--out", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "synth":
            with stage("synth"):
                run_synth(args.sigma2, args.draws, args.seed, args.out)
            return 0
        cfg = RunConfig(
            out_dir=args.out,
            draws_path=args.draws,
            params_path=args.params,
            gamma=args.gamma,
            alpha=args.alpha,
            n_runs=args.n_runs,
            seed=args.seed,
            loss=args.loss,
            threads=args.threads,
            restarts=args.restarts,
            stability_repeats=args.stability_repeats,
            synth_sigma2=args.synth,
            synth_draws=args.synth_draws,
            synth_seed=args.synth_seed,
        )
        report = run_report(cfg)
        log.info("n0=%d of n=%d, probability %s, AUChips %s", report["n0"], report["n"], fmt(report["probability"]), fmt(report["auchips"]))
        return 0
    except InvariantError as exc:
        print(f"chipsuq: internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except (StageError, InputError, OSError) as exc:
        print(f"chipsuq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
