"""Random task systems and timing-defect plans."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..model import JobInstance, Shape, TaskSet, TaskSpec, TimingAccuracyModel

#: Divisors of 1440, so every generated system has a 1440-tick hyperperiod.
DEFAULT_PERIODS = (120, 144, 160, 180, 240, 288, 360, 480, 720, 1440)
SHAPES = tuple(Shape)


class GenerationError(RuntimeError):
    pass


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def uunifast(n: int, utilization: float, seed) -> list[float]:
    """``n`` positive utilisations summing to ``utilization`` (Bini & Buttazzo)."""
    if n < 1 or not 0 < utilization <= n:
        raise ValueError("need n >= 1 and 0 < U <= n")
    rng = _rng(seed)
    while True:
        out = []
        remaining = utilization
        for i in range(1, n):
            nxt = remaining * (1.0 - rng.random()) ** (1.0 / (n - i))
            out.append(remaining - nxt)
            remaining = nxt
        out.append(remaining)
        if all(u > 0 for u in out):
            return out


def random_model(rng: np.random.Generator, deadline: int) -> TimingAccuracyModel:
    shape = SHAPES[rng.integers(len(SHAPES))]
    v_max = int(rng.integers(1, 101))
    v_min = int(rng.integers(0, v_max + 1))
    w, w_l, w_r = (int(x) for x in rng.integers(1, deadline + 1, size=3))
    # widths the shape never reads stay at their defaults
    if shape is Shape.SYMMETRIC:
        return TimingAccuracyModel(shape, v_max, v_min, w=w)
    if shape is Shape.RIGHT_SIDED:
        return TimingAccuracyModel(shape, v_max, v_min, w_r=w_r)
    if shape is Shape.ASYMMETRIC:
        return TimingAccuracyModel(shape, v_max, v_min, w_l=w_l, w_r=w_r)
    return TimingAccuracyModel(shape, v_max, v_min)


def generate_system(n: int, utilization: float, seed,
                    periods: Sequence[int] = DEFAULT_PERIODS, retries: int = 20) -> TaskSet:
    rng = _rng(seed)
    tasks = []
    for tid, u in enumerate(uunifast(n, utilization, rng)):
        for _ in range(retries):
            period = int(periods[rng.integers(len(periods))])
            wcet = max(1, round(u * period))
            if wcet <= period:
                break
        else:
            raise GenerationError(f"task {tid}: no period accommodates u={u:.3f}")
        ideal = int(rng.integers(0, period - wcet + 1))
        tasks.append(TaskSpec(tid, wcet, period, ideal, random_model(rng, period)))
    return TaskSet(tasks)


def generate_tiny(seed, max_jobs: int = 6, max_hyperperiod: int = 64) -> TaskSet:
    """Small multi-task systems the exhaustive oracle can handle."""
    rng = _rng(seed)
    menu = (4, 6, 8, 12, 16, 24, 32)
    while True:
        n = int(rng.integers(2, 5))
        periods = [int(menu[rng.integers(len(menu))]) for _ in range(n)]
        hp = math.lcm(*periods)
        if hp > max_hyperperiod or sum(hp // p for p in periods) > max_jobs:
            continue
        utils = uunifast(n, float(rng.uniform(0.2, 1.0)), rng)
        tasks = []
        for tid, (u, p) in enumerate(zip(utils, periods)):
            wcet = min(p, max(1, round(u * p)))
            tasks.append(TaskSpec(tid, wcet, p, int(rng.integers(0, p - wcet + 1)),
                                  random_model(rng, p)))
        return TaskSet(tasks)


def inflate(wcet: int, pe: float) -> int:
    """ceil(C * (1 + P_e)) without binary floating-point surprises."""
    return math.ceil(wcet * (1 + Fraction(str(pe))))


def defect_plan(jobs: Sequence[JobInstance], pr: float, pe: float, seed) -> dict[tuple[int, int], int]:
    """Actual duration for every job.

    Marks are drawn once per job from ``seed``, independent of ``pr`` and
    ``pe``, so the defective set only grows with ``pr`` and the same jobs
    stay defective across a ``pe`` sweep.
    """
    if not 0 <= pr <= 1 or pe < 0:
        raise ValueError("need 0 <= P_r <= 1 and P_e >= 0")
    rng = _rng(seed)
    ordered = sorted(jobs, key=lambda j: j.key)
    draws = rng.random(len(ordered))
    return {job.key: inflate(job.wcet, pe) if u < pr else job.wcet
            for job, u in zip(ordered, draws)}


def defective(plan: Mapping[tuple[int, int], int], jobs: Sequence[JobInstance]) -> set[tuple[int, int]]:
    return {j.key for j in jobs if plan[j.key] > j.wcet}
