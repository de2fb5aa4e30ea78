"""Randomised schedulability / robustness sweeps.

Every grid point sharing ``(n, U, systems, seed, periods)`` sees the same
generated systems; the defect marks of a system are also fixed, so the
algorithms and the P_e values are compared on identical inputs.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from ..ets import finalize
from ..model import TaskSet, expand_hyperperiod
from ..schedule import ScheduleSolution, schedule_proposed
from ..sim import SimConfig, run, servers_from_program, servers_from_solution
from .baselines import schedule_binpack, schedule_fifo
from .generate import DEFAULT_PERIODS, defect_plan, generate_system
from .metrics import compute_metrics

log = logging.getLogger(__name__)

ALGORITHMS = ("proposed", "fifo", "binpack")
#: Literal variants kept for comparison; never part of a default grid.
VARIANTS = ("proposed-argmax", "fifo-release")
CSV_COLUMNS = ("algorithm", "n", "U", "P_r", "P_e", "systems", "schedulable_ratio",
               "acceptance", "exact_fraction", "norm_quality")
DEFAULT_SEED = 20240917


@dataclass(frozen=True)
class ExperimentConfig:
    U: float
    n: int | None = None
    P_r: float = 0.0
    P_e: float = 0.0
    systems: int = 1000
    seed: int = DEFAULT_SEED
    periods: tuple[int, ...] = DEFAULT_PERIODS
    algorithm: str = "proposed"

    def __post_init__(self) -> None:
        for name in ("U", "P_r", "P_e"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.n is None:
            object.__setattr__(self, "n", max(1, round(self.U / 0.05)))
        if self.algorithm not in ALGORITHMS + VARIANTS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if 1440 % math.lcm(*self.periods):
            raise ValueError("every period must divide 1440")

    @property
    def population(self) -> tuple:
        return (self.n, self.U, self.systems, self.seed, self.periods)


def schedule_with(algorithm: str, tasks: TaskSet) -> ScheduleSolution:
    jobs = expand_hyperperiod(tasks)
    if algorithm == "proposed":
        return schedule_proposed(tasks)
    if algorithm == "proposed-argmax":
        return schedule_proposed(tasks, fit_check=False)
    if algorithm == "fifo":
        return schedule_fifo(jobs)
    if algorithm == "fifo-release":
        return schedule_fifo(jobs, arrival="release")
    if algorithm == "binpack":
        return schedule_binpack(jobs)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def sim_servers(algorithm: str, sol: ScheduleSolution):
    if algorithm.startswith("proposed"):
        return servers_from_program(finalize(sol))
    return servers_from_solution(sol)


def system_seed(cfg: ExperimentConfig, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed, cfg.n, round(cfg.U * 1_000_000), index])


def evaluate_system(configs: Sequence[ExperimentConfig], index: int) -> list[tuple | None]:
    """Per-config outcome for one generated system: None when not schedulable
    by the algorithm, else (all deadlines met, acceptance, exact, quality)."""
    head = configs[0]
    gen_seed, defect_seed = system_seed(head, index).spawn(2)
    try:
        tasks = generate_system(head.n, head.U, gen_seed, head.periods)
        jobs = expand_hyperperiod(tasks)
    except Exception as exc:  # recorded, never fatal for the sweep
        log.warning("system %d of %s: generation failed: %s", index, head.population, exc)
        return [None] * len(configs)
    draws = defect_seed.generate_state(1)[0]
    out: list[tuple | None] = []
    cache: dict[str, tuple] = {}
    for cfg in configs:
        try:
            if cfg.algorithm not in cache:
                sol = schedule_with(cfg.algorithm, tasks)
                cache[cfg.algorithm] = (sol, sim_servers(cfg.algorithm, sol) if sol.feasible else None)
            sol, servers = cache[cfg.algorithm]
            if not sol.feasible:
                out.append(None)
                continue
            plan = defect_plan(jobs, cfg.P_r, cfg.P_e, int(draws))
            trace = run(SimConfig(servers, tasks, sol.hyperperiod, plan))
            m = compute_metrics(trace, tasks, sol)
            out.append((m.all_met, m.acceptance, m.exact_fraction, m.norm_quality))
        except Exception as exc:
            log.warning("system %d, %s: evaluation failed: %s", index, cfg, exc)
            out.append(None)
    return out


def _evaluate_chunk(args) -> list[list[tuple | None]]:
    configs, indices = args
    return [evaluate_system(configs, i) for i in indices]


@dataclass
class _Acc:
    systems: int = 0
    schedulable: int = 0
    feasible: int = 0
    sums: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])

    def add(self, outcome: tuple | None) -> None:
        self.systems += 1
        if outcome is None:
            return
        self.feasible += 1
        self.schedulable += outcome[0]
        for k in range(3):
            self.sums[k] += outcome[k + 1]

    def row(self, cfg: ExperimentConfig) -> dict:
        mean = [s / self.feasible if self.feasible else float("nan") for s in self.sums]
        return {"algorithm": cfg.algorithm, "n": cfg.n, "U": cfg.U, "P_r": cfg.P_r, "P_e": cfg.P_e,
                "systems": self.systems, "schedulable_ratio": self.schedulable / self.systems,
                "acceptance": mean[0], "exact_fraction": mean[1], "norm_quality": mean[2]}


def run_sweep(grid: Iterable[ExperimentConfig], workers: int = 1, chunk: int = 50) -> list[dict]:
    grid = list(grid)
    accs = {cfg: _Acc() for cfg in grid}
    names = ALGORITHMS + VARIANTS
    ordered = sorted(set(grid), key=lambda c: (c.population, names.index(c.algorithm),
                                               c.P_r, c.P_e))
    jobs = []
    for _, members in groupby(ordered, key=lambda c: c.population):
        configs = list(members)
        systems = configs[0].systems
        for lo in range(0, systems, chunk):
            jobs.append((configs, range(lo, min(lo + chunk, systems))))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_evaluate_chunk, jobs))
    else:
        results = [_evaluate_chunk(j) for j in jobs]
    for (configs, _), block in zip(jobs, results):
        for outcomes in block:
            for cfg, outcome in zip(configs, outcomes):
                accs[cfg].add(outcome)
    return [accs[cfg].row(cfg) for cfg in grid]


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6f}"
    return str(value)


def to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def make_grid(utilizations: Sequence[float], algorithms: Sequence[str] = ALGORITHMS,
              pr: Sequence[float] = (0.0,), pe: Sequence[float] = (0.0,),
              systems: int = 1000, seed: int = DEFAULT_SEED, n: int | None = None) -> list[ExperimentConfig]:
    return [ExperimentConfig(U=u, n=n, P_r=r, P_e=e, systems=systems, seed=seed, algorithm=a)
            for a in algorithms for u in utilizations for r in pr for e in pe]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def read_grid(text: str) -> list[ExperimentConfig]:
    """Grid from an INI-style file; every section is one sub-grid.

    Keys: ``U``, ``P_r``, ``P_e`` (space/comma separated lists), ``n``,
    ``systems``, ``seed``, ``periods``, ``algorithm`` (list or ``all``).
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    grid = []
    for name in parser.sections():
        sec = parser[name]
        algos = sec.get("algorithm", "all")
        algos = list(ALGORITHMS) if algos.strip() == "all" else algos.replace(",", " ").split()
        for a in algos:
            if a not in ALGORITHMS + VARIANTS:
                raise ValueError(f"section [{name}]: unknown algorithm {a!r}")
        periods = tuple(int(p) for p in _floats(sec["periods"])) if "periods" in sec else DEFAULT_PERIODS
        n = sec.getint("n") if "n" in sec else None
        for a in algos:
            for u in _floats(sec["U"]):
                for r in _floats(sec.get("P_r", "0")):
                    for e in _floats(sec.get("P_e", "0")):
                        grid.append(ExperimentConfig(
                            U=u, n=n, P_r=r, P_e=e, systems=sec.getint("systems", 1000),
                            seed=sec.getint("seed", DEFAULT_SEED), periods=periods, algorithm=a))
    return grid
