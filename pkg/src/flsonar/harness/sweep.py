"""Monte Carlo sweeps with paired single/three-beam episodes."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .. import __version__
from ..errors import ConfigurationError
from ..worldsim import Obstacle, World, run_episode, write_episode_log
from .config import UNITS, ExperimentConfig
from .stats import clopper_pearson

CSV_HEADER = ("sweep_value", "beam_mode", "runs", "collisions", "ci_lower", "ci_upper")


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    beam_mode: int
    runs: int
    collisions: int
    ci_lower: float
    ci_upper: float

    @property
    def rate(self) -> float:
        return self.collisions / self.runs


@dataclass(frozen=True)
class SweepResult:
    kind: str
    rows: tuple
    config_hash: str = ""
    version: str = __version__

    def row(self, value: float, beam_mode: int) -> SweepRow:
        for r in self.rows:
            if r.sweep_value == float(value) and r.beam_mode == beam_mode:
                return r
        raise KeyError((value, beam_mode))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# kind={self.kind} config_hash={self.config_hash} version={self.version}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([repr(r.sweep_value), r.beam_mode, r.runs, r.collisions, repr(r.ci_lower), repr(r.ci_upper)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ConfigurationError("sweep CSV must start with a '#' provenance row")
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        reader = csv.reader(lines[1:])
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ConfigurationError(f"unexpected CSV header {header}")
        rows = tuple(
            SweepRow(float(v), int(b), int(n), int(k), float(lo), float(hi)) for v, b, n, k, lo, hi in reader
        )
        return cls(meta.get("kind", ""), rows, meta.get("config_hash", ""), meta.get("version", ""))

    def summary(self) -> str:
        unit = UNITS.get(self.kind, "")
        lines = [f"{self.kind} sweep (config {self.config_hash}, version {self.version})"]
        lines.append(f"{'value':>10} {'beams':>5} {'collisions':>12} {'rate':>7}   95% CI")
        for r in self.rows:
            lines.append(
                f"{r.sweep_value:>8g}{unit[:2]:>2} {r.beam_mode:>5} {r.collisions:>5d}/{r.runs:<6d} "
                f"{r.rate:7.3f}   [{r.ci_lower:.4f}, {r.ci_upper:.4f}]"
            )
        return "\n".join(lines) + "\n"


def scenario_world(config: ExperimentConfig, value: float) -> World | None:
    """Fixed world for the single-scenario experiment: one obstacle dead ahead."""
    if config.kind != "single_scenario":
        return None
    sim = config.sim
    wp = sim.world
    obstacle = Obstacle(float(value), wp.extent / 2.0, wp.obstacle_radius, wp.ts_min)
    return World((obstacle,), sim.acoustics.environment, wp.extent)


def episode_seed(config: ExperimentConfig, episode: int) -> tuple:
    # Every sweep point and beam mode of episode i shares one seed, so worlds
    # and dynamics noise are paired across modes (and across points when the
    # sweep value does not change the world generator).
    return (int(config.seed), int(episode))


def _run_one(args):
    config, value, episode, beams, log_dir, dump_dir = args
    sim = config.point_config(value)
    world = scenario_world(config, value)
    out = {}
    for nb in beams:
        tag = f"{config.kind}_{value:g}_{episode:05d}_b{nb}"
        dump = Path(dump_dir) / tag if dump_dir else None
        outcome = run_episode(sim, episode_seed(config, episode), nb, world=world, map_dump_dir=dump, keep_log=bool(log_dir))
        if log_dir:
            write_episode_log(Path(log_dir) / f"{tag}.csv", outcome)
        out[nb] = (bool(outcome.collided), outcome.world_hash)
    return value, episode, out


def run_sweep(config: ExperimentConfig, episode_log_dir=None, map_dump_dir=None, progress=None) -> SweepResult:
    """Run every (sweep value, episode) pair in all configured beam modes.

    Results are keyed by (value, episode, mode) before being reduced, so the
    output does not depend on how work is scheduled across processes.
    """
    for d in (episode_log_dir, map_dump_dir):
        if d:
            Path(d).mkdir(parents=True, exist_ok=True)
    jobs = [
        (config, v, i, config.beams, episode_log_dir, map_dump_dir)
        for v in config.values
        for i in range(config.runs)
    ]
    results = {}
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for value, episode, out in pool.map(_run_one, jobs, chunksize=8):
                results[(value, episode)] = out
                if progress:
                    progress(len(results), len(jobs))
    else:
        for job in jobs:
            value, episode, out = _run_one(job)
            results[(value, episode)] = out
            if progress:
                progress(len(results), len(jobs))

    rows = []
    for v in config.values:
        for nb in config.beams:
            k = sum(results[(v, i)][nb][0] for i in range(config.runs))
            lo, hi = clopper_pearson(k, config.runs, 0.95)
            rows.append(SweepRow(float(v), nb, config.runs, k, lo, hi))
    return SweepResult(config.kind, tuple(rows), config.digest())


def write_results(result: SweepResult, out_dir) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.kind}.csv"
    csv_path.write_text(result.to_csv())
    summary_path = out / "summary.txt"
    summary_path.write_text(result.summary())
    return csv_path, summary_path
