"""Experiment scenarios writing CSV metrics and a JSON run manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

import ntnbeam
from ntnbeam import fft
from ntnbeam.bench import config as cfgmod
from ntnbeam.bench.complexity import complexity_estimate
from ntnbeam.learn.checkpoint import load_checkpoint, save_checkpoint
from ntnbeam.learn.evaluate import evaluate, evaluate_baseline
from ntnbeam.learn.train import config_document, fno_parameter_names, init_actors, train
from ntnbeam.learn.transfer import transfer_layers

CSV_COLUMNS = ("scenario", "method", "xi", "param", "value_bpshz", "ci95", "wall_s")
MANIFEST_VERSION = 1

DEFAULT_VALUES = {
    "sweep_l": [2.0, 3.0, 4.0, 5.0, 6.0],  # km
    "sweep_B": [4, 9, 12, 16],
    "sweep_K": [2, 4, 6, 8],
    "sweep_lrd": [1, 2, 3],
    "sweep_velocity": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],  # m/s
}
NEEDS_CHECKPOINT = {"rate_vs_slot", "sweep_l", "sweep_B", "sweep_velocity", "transfer_compare"}


class MissingCheckpoint(FileNotFoundError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass
class Run:
    config: dict
    out: Path
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    transactions: dict = field(default_factory=dict)

    @property
    def scenario(self) -> str:
        return self.config["scenario"]

    @property
    def ckpt_dir(self) -> Path:
        p = Path(self.config["checkpoint_dir"])
        return p if p.is_absolute() else self.out / p

    def add(self, method, xi, param, value, ci95=0.0, wall=0.0):
        self.rows.append((self.scenario, method, float(xi), param, float(value), float(ci95), float(wall)))

    # -- helpers ---------------------------------------------------------------

    def system(self, xi=1.0, **changes):
        csi = "additive" if self.config["system"]["csi"] == "perfect" else self.config["system"]["csi"]
        return cfgmod.system_config(self.config, csi=csi, xi=float(xi), **changes)

    def train_cfg(self, method, xi=1.0, system=None, **changes):
        return cfgmod.train_config(self.config, system=system or self.system(xi), backbone=method, **changes)

    def policy_path(self, method, xi) -> Path:
        return self.ckpt_dir / f"{method}_xi{float(xi):g}.json"

    def load_policy(self, method, xi):
        path = self.policy_path(method, xi)
        if not path.exists():
            raise MissingCheckpoint(
                f"missing checkpoint {path}; run scenario 'train_curve' first with the same "
                f"--out directory, methods and xi values"
            )
        actors, _, _ = load_checkpoint(path)
        return actors

    def eval_args(self):
        e = self.config["eval"]
        return e["episodes"], e["T"], self.config["seed"]

    def learned(self):
        return [m for m in self.config["methods"] if m in cfgmod.LEARNED]

    def classical(self):
        return [m for m in self.config["methods"] if m in cfgmod.CLASSICAL]

    def values(self):
        return self.config["values"] or DEFAULT_VALUES[self.scenario]

    def baseline(self, method, system):
        """Baseline evaluation, or ``None`` (with a manifest note) when the
        precoder is infeasible for ``system``."""
        try:
            return evaluate_baseline(method, system, *self.eval_args())
        except ValueError as exc:
            self.notes.append(f"{method} (B={system.B}, K={system.K}): {exc}")
            return None

    def add_baseline(self, method, param, system):
        res, wall = _timed(self.baseline, method, system)
        if res is None:
            self.add(method, 1.0, param, np.nan, np.nan, wall)
        else:
            self.add(method, 1.0, param, res.mean, res.ci95(), wall)
        return res


def _timed(fn, *a, **kw):
    t = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t


# -- scenarios ----------------------------------------------------------------------


def _train_curve(run: Run):
    for m in run.learned():
        for xi in run.config["xi"]:
            tc = run.train_cfg(m, xi)
            res, wall = _timed(train, tc, run.ckpt_dir / f"{m}_xi{float(xi):g}")
            path = save_checkpoint(run.policy_path(m, xi), res.actors, config_document(tc), tc.episodes,
                                   res.optimizers)
            run.checkpoints.append(str(path.relative_to(run.out)) if path.is_relative_to(run.out) else str(path))
            run.transactions[f"{m}_xi{float(xi):g}"] = {k: b.transactions for k, b in res.buffers.items()}
            for e, v in enumerate(res.sum_rates):
                run.add(m, xi, e + 1, v, 0.0, wall / max(len(res.sum_rates), 1))


def _per_slot_rows(run, method, xi, res, wall):
    T = res.sum_rate.shape[1]
    n = res.sum_rate.shape[0]
    for t in range(T):
        col = res.sum_rate[:, t]
        ci = 1.96 * col.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
        run.add(method, xi, t + 1, col.mean(), ci, wall / T)


def _rate_vs_slot(run: Run):
    for xi in run.config["xi"]:
        for m in run.learned():
            actors = run.load_policy(m, xi)
            res, wall = _timed(evaluate, actors, run.system(xi), *run.eval_args())
            _per_slot_rows(run, m, xi, res, wall)
    for m in run.classical():
        res, wall = _timed(run.baseline, m, run.system(1.0))
        if res is None:
            for t in range(run.config["eval"]["T"]):
                run.add(m, 1.0, t + 1, np.nan, np.nan, 0.0)
        else:
            _per_slot_rows(run, m, 1.0, res, wall)


def _eval_sweep(run: Run, field_name, scale=1.0):
    """Frozen policies and baselines evaluated over one system parameter."""
    values = run.values()
    for xi in run.config["xi"]:
        for m in run.learned():
            actors = run.load_policy(m, xi)
            for v in values:
                res, wall = _timed(evaluate, actors, run.system(xi, **{field_name: v * scale}), *run.eval_args())
                run.add(m, xi, v, res.mean, res.ci95(), wall)
    for m in run.classical():
        for v in values:
            run.add_baseline(m, v, run.system(1.0, **{field_name: v * scale}))


def _sweep_l(run: Run):
    _eval_sweep(run, "l", 1000.0)


def _sweep_velocity(run: Run):
    _eval_sweep(run, "velocity")


def _sweep_B(run: Run):
    """LAPS policy reused; HAPS policy retrained for each cluster count."""
    for xi in run.config["xi"]:
        for m in run.learned():
            laps = run.load_policy(m, xi)["laps"]
            for v in run.values():
                sysc = run.system(xi, B=int(v))
                tc = run.train_cfg(m, xi, system=sysc)
                t0 = time.perf_counter()
                res = train(tc, actors={"laps": laps}, trainable={"laps": []})
                ev = evaluate(res.actors, sysc, *run.eval_args())
                run.add(m, xi, v, ev.mean, ev.ci95(), time.perf_counter() - t0)
    for m in run.classical():
        for v in run.values():
            run.add_baseline(m, v, run.system(1.0, B=int(v)))


def _sweep_K(run: Run):
    for xi in run.config["xi"]:
        for m in run.learned():
            for v in run.values():
                sysc = run.system(xi, K=int(v))
                t0 = time.perf_counter()
                res = train(run.train_cfg(m, xi, system=sysc))
                ev = evaluate(res.actors, sysc, *run.eval_args())
                run.add(m, xi, v, ev.mean, ev.ci95(), time.perf_counter() - t0)
    for m in run.classical():
        for v in run.values():
            run.add_baseline(m, v, run.system(1.0, K=int(v)))


def _sweep_lrd(run: Run):
    """HAPS actor with rank-j heads; LAPS actor keeps full-rank output."""
    values = run.values()
    for xi in run.config["xi"]:
        for m in run.learned():
            for v in values:
                sysc = run.system(xi)
                t0 = time.perf_counter()
                res = train(run.train_cfg(m, xi, system=sysc, rank_haps=int(v)))
                ev = evaluate(res.actors, sysc, *run.eval_args())
                run.add(m, xi, v, ev.mean, ev.ci95(), time.perf_counter() - t0)
    for m in run.classical():
        for v in values:
            run.add_baseline(m, v, run.system(1.0))


def _buffer_vs_regen(run: Run):
    for xi in run.config["xi"]:
        for m in run.learned():
            for mode in ("buffer", "regenerate"):
                res, wall = _timed(train, run.train_cfg(m, xi, mode=mode))
                run.transactions[f"{m}-{mode}_xi{float(xi):g}"] = {k: b.transactions for k, b in res.buffers.items()}
                for e, v in enumerate(res.sum_rates):
                    run.add(f"{m}-{mode}", xi, e + 1, v, 0.0, wall / max(len(res.sum_rates), 1))


def transfer_train(tc, laps_actor, beta, seed_offset=0):
    """Fresh HAPS actor, layer moments set from ``laps_actor``, then only
    its backbone trained (LAPS actor frozen)."""
    rng = np.random.default_rng(np.random.SeedSequence([tc.seed, 0x7F, seed_offset]))
    haps = init_actors(tc, rng)["haps"]
    transfer_layers(laps_actor, haps, beta)
    return train(tc, actors={"laps": laps_actor, "haps": haps},
                 trainable={"laps": [], "haps": fno_parameter_names(haps)})


def _transfer_compare(run: Run):
    beta = run.config["transfer"]["beta"]
    for xi in run.config["xi"]:
        for m in run.learned():
            full = run.load_policy(m, xi)
            sysc = run.system(xi)
            tc = run.train_cfg(m, xi, system=sysc)
            res, wall = _timed(transfer_train, tc, full["laps"], beta)
            for label, actors, w in (("full", full, 0.0), ("transfer", res.actors, wall)):
                ev = evaluate(actors, sysc, *run.eval_args())
                run.add(f"{m}-{label}", xi, "network", ev.mean, ev.ci95(), w)
                haps = ev.haps_rate.mean(axis=1)
                ci = 1.96 * haps.std(ddof=1) / np.sqrt(haps.size) if haps.size > 1 else 0.0
                run.add(f"{m}-{label}", xi, "haps", haps.mean(), ci, w)


def _baseline_only(run: Run):
    for m in run.classical():
        run.add_baseline(m, "mean", run.system(1.0))


def _complexity(run: Run):
    s = run.config["system"]
    t = run.config["train"]
    U, N = s["B"] * s["K"], s["N_haps"]
    est = complexity_estimate(U, N, tuple(t["modes_haps"]), t["width"], hidden=t["hidden"])
    for k, v in est.items():
        run.add(k, 1.0, f"U={U};N={N}", v)


RUNNERS = {
    "train_curve": _train_curve,
    "rate_vs_slot": _rate_vs_slot,
    "sweep_l": _sweep_l,
    "sweep_B": _sweep_B,
    "sweep_K": _sweep_K,
    "sweep_lrd": _sweep_lrd,
    "sweep_velocity": _sweep_velocity,
    "buffer_vs_regen": _buffer_vs_regen,
    "transfer_compare": _transfer_compare,
    "baseline_only": _baseline_only,
    "complexity": _complexity,
}


def render_csv(rows, timing: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        r = list(r)
        if not timing:
            r[-1] = 0.0
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def versions() -> dict:
    return {
        "ntnbeam": ntnbeam.__version__, "numpy": np.__version__, "scipy": scipy.__version__,
        "python": platform.python_version(), "fft_backend": fft.BACKEND,
    }


def run_scenario(config: dict, out_dir) -> dict:
    """Run ``config["scenario"]``; write ``<scenario>.csv`` and
    ``<scenario>.manifest.json`` under ``out_dir``; return the manifest."""
    config = cfgmod.validate(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(config, out)
    t0 = time.perf_counter()
    RUNNERS[run.scenario](run)
    total = time.perf_counter() - t0
    text = render_csv(run.rows, config["timing"])
    csv_path = out / f"{run.scenario}.csv"
    csv_path.write_text(text)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "scenario": run.scenario,
        "seed": config["seed"],
        "config": config,
        "versions": versions(),
        "csv": csv_path.name,
        "csv_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "rows": len(run.rows),
        "wall_s": total,
        "row_wall_s": [r[-1] for r in run.rows],
        "checkpoints": run.checkpoints,
        "buffer_transactions": run.transactions,
        "notes": run.notes,
    }
    (out / f"{run.scenario}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
