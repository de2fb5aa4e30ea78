"""Discrete-event model of the two-level co-processor scheduler.

Each server owns a wall-clock window ``[alpha, window_end)``: its budget
starts draining at ``alpha`` whether or not it runs, and whatever it still
holds when the window closes is terminated.  The global level picks the
highest-priority server that has something runnable; the local level
dispatches that server's highest-priority job once ``max(release, theta)``
has passed.  A dispatched job runs to completion or termination.

State only changes at integer event times (window edges, eligibility
times, completions), so the loop jumps between them; the outcome is the
same as stepping every tick.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from . import isa
from .ets import EtsProgram
from .model import TaskSet
from .schedule import ScheduleSolution

JobKey = tuple[int, int]


class LoadError(ValueError):
    pass


class PrivilegeError(LoadError):
    pass


@dataclass(frozen=True)
class SimJob:
    task: int
    j: int
    release: int
    deadline: int
    wcet: int
    ideal: int
    theta: int
    prio: int

    @property
    def key(self) -> JobKey:
        return (self.task, self.j)

    @property
    def eligible(self) -> int:
        return max(self.release, self.theta)


@dataclass(frozen=True)
class SimServer:
    index: int
    alpha: int
    window_end: int
    priority: int
    jobs: tuple[SimJob, ...]

    def shifted(self, delta: int) -> "SimServer":
        """Same server with its window and every job's eligibility moved by ``delta``."""
        jobs = tuple(replace(j, theta=j.theta + delta) for j in self.jobs)
        return replace(self, alpha=self.alpha + delta, window_end=self.window_end + delta,
                       jobs=jobs)


@dataclass(frozen=True)
class SimConfig:
    servers: tuple[SimServer, ...]
    tasks: TaskSet
    hyperperiod: int
    durations: Mapping[JobKey, int] = field(default_factory=dict)
    horizon: int | None = None

    def __post_init__(self) -> None:
        keys = {j.key for s in self.servers for j in s.jobs}
        for key, d in self.durations.items():
            if key not in keys:
                raise LoadError(f"defect plan names unknown job {key}")
            if d < 1:
                raise LoadError(f"duration of {key} must be >= 1")


@dataclass
class JobRecord:
    task: int
    j: int
    server: int
    release: int
    deadline: int
    ideal: int
    duration: int
    dispatch: int | None = None
    finish: int | None = None
    terminated: int | None = None
    met: bool = False
    quality: float = 0.0

    def as_dict(self) -> dict:
        out = {"task": self.task, "j": self.j, "server": self.server, "dispatch": self.dispatch}
        if self.terminated is not None:
            out["terminated"] = self.terminated
        else:
            out["finish"] = self.finish
        out["met"] = self.met
        out["quality"] = self.quality
        return out


@dataclass
class SimTrace:
    records: list[JobRecord]
    busy: dict[int, list[tuple[int, int, JobKey]]]
    horizon: int

    @property
    def met(self) -> int:
        return sum(r.met for r in self.records)

    def misses(self, servers: Iterable[int] | None = None) -> int:
        pool = set(servers) if servers is not None else None
        return sum(not r.met for r in self.records if pool is None or r.server in pool)

    def jsonl(self) -> str:
        return "".join(json.dumps(r.as_dict(), sort_keys=True) + "\n" for r in self.records)

    def timeline(self) -> str:
        slots: dict[int, str] = {}
        for server, spans in self.busy.items():
            for start, end, (task, j) in spans:
                for t in range(start, end):
                    slots[t] = f"S{server} tau{task}^{j}"
        return "".join(f"{t}\t{slots.get(t, 'idle')}\n" for t in range(self.horizon))


# ---------------------------------------------------------------- loaders

def _sim_job(job, theta: int, prio: int) -> SimJob:
    return SimJob(job.task, job.j, job.release, job.deadline, job.wcet, job.ideal, theta, prio)


def servers_from_program(prog: EtsProgram) -> tuple[SimServer, ...]:
    out = []
    for s in prog.servers:
        ordered = sorted(s.placements, key=lambda p: p.theta)
        jobs = tuple(_sim_job(p.job, p.theta, rank) for rank, p in enumerate(ordered))
        out.append(SimServer(s.index, s.alpha, s.window_end, s.priority, jobs))
    return tuple(out)


def servers_from_solution(sol: ScheduleSolution) -> tuple[SimServer, ...]:
    """Unextended draft windows; used for the baseline list schedules."""
    out = []
    drafts = [d for d in sol.servers if d.placements]
    for k, d in enumerate(sorted(drafts, key=lambda d: d.alpha)):
        ordered = sorted(d.placements, key=lambda p: p.theta)
        jobs = tuple(_sim_job(p.job, p.theta, rank) for rank, p in enumerate(ordered))
        out.append(SimServer(k, d.alpha, d.end, k, jobs))
    return tuple(out)


def load_program(words: Sequence[int] | Sequence[isa.Instruction], sidecar: Sequence[Mapping],
                 tasks: TaskSet, kernel: bool = False) -> tuple[SimServer, ...]:
    """Configure servers from an instruction stream and its start-offset sidecar."""
    ins = [isa.decode(w) if isinstance(w, int) else w for w in words]
    budget: dict[int, int] = {}
    start: dict[int, int] = {}
    loads: dict[int, list[tuple[int, isa.PLd, Mapping]]] = {}
    side = iter(sidecar)
    for pos, i in enumerate(ins):
        if i.kernel and not kernel:
            raise PrivilegeError(f"instruction {pos} ({isa.to_asm(i)}) requires kernel mode")
        if isinstance(i, isa.CSet):
            budget[i.ets] = i.budget
        elif isinstance(i, isa.CEnr):
            start[i.ets] = i.start
        elif isinstance(i, isa.PLd):
            if i.ets not in budget or i.ets not in start:
                raise LoadError(f"instruction {pos}: p.ld to unconfigured server S{i.ets}")
            entry = next(side, None)
            if entry is None:
                raise LoadError(f"instruction {pos}: sidecar has no entry for this load")
            if entry["tid"] != i.tid or entry["server"] != i.ets:
                raise LoadError(f"instruction {pos}: sidecar entry {dict(entry)} does not match")
            loads.setdefault(i.ets, []).append((i.prio, i, entry))
        else:
            raise LoadError(f"instruction {pos}: {isa.to_asm(i)} is not supported at load time")
    if next(side, None) is not None:
        raise LoadError("sidecar has more entries than the stream has loads")

    configured = sorted(set(budget) & set(start), key=lambda k: (start[k], k))
    servers = []
    for rank, k in enumerate(configured):
        jobs = []
        for prio, _, entry in sorted(loads.get(k, []), key=lambda x: x[0]):
            task = tasks[entry["tid"]]
            r = task.period * (entry["j"] - 1)
            jobs.append(SimJob(task.id, entry["j"], r, r + task.deadline, task.wcet,
                               r + task.ideal_offset, entry["theta"], prio))
        servers.append(SimServer(k, start[k], start[k] + budget[k], rank, tuple(jobs)))
    return tuple(servers)


# ---------------------------------------------------------------- engine

@dataclass
class _Running:
    job: SimJob
    server: int
    start: int
    finish: int


class Coprocessor:
    """Mutable simulation state; one instance per run."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.horizon = cfg.horizon or cfg.hyperperiod
        reps = -(-self.horizon // cfg.hyperperiod)
        self.servers: list[SimServer] = []
        for h in range(reps):
            off = h * cfg.hyperperiod
            for s in sorted(cfg.servers, key=lambda s: s.priority):
                self.servers.append(SimServer(
                    index=s.index, alpha=s.alpha + off, window_end=s.window_end + off,
                    priority=len(self.servers),
                    jobs=tuple(replace(j, release=j.release + off, deadline=j.deadline + off,
                                       ideal=j.ideal + off, theta=j.theta + off,
                                       j=j.j + h * (cfg.hyperperiod // cfg.tasks[j.task].period))
                               for j in s.jobs)))
        self.pending: list[list[SimJob]] = [sorted(s.jobs, key=lambda j: (j.prio, j.theta))
                                            for s in self.servers]
        self.running: _Running | None = None
        self.records: dict[tuple[int, JobKey], JobRecord] = {}
        self.busy: dict[int, list[tuple[int, int, JobKey]]] = {}
        for pos, s in enumerate(self.servers):
            for j in s.jobs:
                base = (j.task, (j.j - 1) % (cfg.hyperperiod // cfg.tasks[j.task].period) + 1)
                dur = cfg.durations.get(base, j.wcet)
                self.records[(pos, j.key)] = JobRecord(j.task, j.j, s.index, j.release, j.deadline,
                                                       j.ideal, dur)

    def open(self, pos: int, t: int) -> bool:
        s = self.servers[pos]
        return s.alpha <= t < s.window_end

    def gse_select(self, t: int) -> int | None:
        """Position of the server that owns the device at ``t`` (None when idle)."""
        if self.running is not None:
            return self.running.server
        for pos in range(len(self.servers)):
            if self.open(pos, t) and any(j.eligible <= t for j in self.pending[pos]):
                return pos
        return None

    def lse_select(self, pos: int, t: int) -> SimJob | None:
        if self.running is not None and self.running.server == pos:
            return self.running.job
        for job in self.pending[pos]:
            if job.eligible <= t:
                return job
        return None

    def _dispatch(self, pos: int, job: SimJob, t: int) -> None:
        self.pending[pos].remove(job)
        rec = self.records[(pos, job.key)]
        rec.dispatch = t
        self.running = _Running(job, pos, t, t + rec.duration)

    def _complete(self, t: int) -> None:
        run = self.running
        rec = self.records[(run.server, run.job.key)]
        rec.finish = t
        rec.met = t <= run.job.deadline
        if rec.met:
            task = self.cfg.tasks[run.job.task]
            rec.quality = task.quality(run.start - run.job.release, wcet=rec.duration)
        self._busy(run, t)
        self.running = None

    def _busy(self, run: _Running, end: int) -> None:
        self.busy.setdefault(self.servers[run.server].index, []).append(
            (run.start, end, run.job.key))

    def _terminate(self, pos: int, t: int) -> None:
        if self.running is not None and self.running.server == pos:
            self.records[(pos, self.running.job.key)].terminated = t
            self._busy(self.running, t)
            self.running = None
        for job in self.pending[pos]:
            self.records[(pos, job.key)].terminated = t
        self.pending[pos] = []

    def run(self) -> SimTrace:
        events = sorted({x for s in self.servers for x in (s.alpha, s.window_end)}
                        | {j.eligible for s in self.servers for j in s.jobs})
        closing: dict[int, list[int]] = {}
        for pos, s in enumerate(self.servers):
            closing.setdefault(s.window_end, []).append(pos)
        t = 0
        while t < self.horizon:
            if self.running is not None and self.running.finish == t:
                self._complete(t)
            for pos in closing.get(t, ()):
                self._terminate(pos, t)
            pos = self.gse_select(t)
            if pos is not None and self.running is None:
                self._dispatch(pos, self.lse_select(pos, t), t)
            i = bisect.bisect_right(events, t)
            nxt = events[i] if i < len(events) else self.horizon
            if self.running is not None:
                nxt = min(nxt, self.running.finish)
            t = min(nxt, self.horizon)
        if self.running is not None and self.running.finish == t:
            self._complete(t)
        for pos in range(len(self.servers)):
            self._terminate(pos, t)
        records = [self.records[(pos, j.key)]
                   for pos, s in enumerate(self.servers) for j in sorted(s.jobs, key=lambda j: j.prio)]
        return SimTrace(records, self.busy, self.horizon)


def run(cfg: SimConfig) -> SimTrace:
    return Coprocessor(cfg).run()


def simulate_program(prog: EtsProgram, tasks: TaskSet,
                     durations: Mapping[JobKey, int] | None = None,
                     horizon: int | None = None) -> SimTrace:
    cfg = SimConfig(servers_from_program(prog), tasks, prog.hyperperiod, durations or {}, horizon)
    return run(cfg)


def simulate_solution(sol: ScheduleSolution, tasks: TaskSet,
                      durations: Mapping[JobKey, int] | None = None,
                      horizon: int | None = None) -> SimTrace:
    cfg = SimConfig(servers_from_solution(sol), tasks, sol.hyperperiod, durations or {}, horizon)
    return run(cfg)
