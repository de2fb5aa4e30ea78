"""ETS-based allocation and list scheduling of the jobs in one hyperperiod.

Pipeline: conflict graph over ideal-start intervals -> greedy decomposition
(highest affected quality removed first) -> one dedicated server per
surviving job -> gap servers filled earliest-deadline-first -> per-job
start-offset postponement for quality.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .model import JobInstance, TaskSet, expand_hyperperiod

EXACT = "exact"
QUALITY = "quality"

JobKey = tuple[int, int]


def _tie_key(job: JobInstance) -> tuple[int, int, int]:
    return (job.ideal, job.task, job.j)


@dataclass(frozen=True)
class Placement:
    job: JobInstance
    theta: int

    @property
    def finish(self) -> int:
        return self.theta + self.job.wcet


@dataclass
class ServerDraft:
    kind: str
    alpha: int
    lam: int
    placements: list[Placement] = field(default_factory=list)

    @property
    def end(self) -> int:
        return self.alpha + self.lam

    @property
    def busy_until(self) -> int:
        return self.placements[-1].finish if self.placements else self.alpha


@dataclass
class ScheduleSolution:
    """Servers ordered by ``alpha`` with their placed jobs.

    ``unplaced`` carries the first job that could not be placed when the
    solution is infeasible.
    """

    servers: list[ServerDraft]
    hyperperiod: int
    feasible: bool = True
    unplaced: JobInstance | None = None
    algorithm: str = "proposed"

    def placements(self) -> list[Placement]:
        return [p for s in self.servers for p in s.placements]

    def assignment(self) -> dict[JobKey, tuple[int, int]]:
        """job key -> (server index, theta)."""
        return {p.job.key: (k, p.theta)
                for k, s in enumerate(self.servers) for p in s.placements}


class ConflictGraph:
    """Jobs whose ideal execution intervals overlap are adjacent."""

    def __init__(self, jobs: Iterable[JobInstance], weights: Mapping[JobKey, float]):
        self.jobs = {job.key: job for job in jobs}
        self.weights = dict(weights)
        self.adj: dict[JobKey, set[JobKey]] = {k: set() for k in self.jobs}

    def add_edge(self, a: JobKey, b: JobKey) -> None:
        if a == b:
            raise ValueError("self-edge")
        self.adj[a].add(b)
        self.adj[b].add(a)

    def copy(self) -> "ConflictGraph":
        out = ConflictGraph(self.jobs.values(), self.weights)
        out.adj = {k: set(ns) for k, ns in self.adj.items()}
        return out

    def remove(self, key: JobKey) -> None:
        for other in self.adj.pop(key):
            self.adj[other].discard(key)
        del self.jobs[key]

    @property
    def edge_count(self) -> int:
        return sum(len(n) for n in self.adj.values()) // 2

    def edges(self) -> set[frozenset[JobKey]]:
        return {frozenset((a, b)) for a, ns in self.adj.items() for b in ns}


def build_conflict_graph(jobs: Sequence[JobInstance], vmax: Mapping[int, float]) -> ConflictGraph:
    """``vmax`` maps task id to that task's maximum quality (the vertex weight)."""
    g = ConflictGraph(jobs, {job.key: vmax[job.task] for job in jobs})
    active: list[JobInstance] = []
    for job in sorted(jobs, key=_tie_key):
        active = [a for a in active if a.ideal + a.wcet > job.ideal]
        for a in active:
            g.add_edge(a.key, job.key)
        active.append(job)
    return g


def zeta(g: ConflictGraph, job: JobInstance | JobKey) -> float:
    """Total maximum quality of the jobs a given job conflicts with."""
    key = job.key if isinstance(job, JobInstance) else job
    return sum(g.weights[n] for n in g.adj[key])


FitCheck = Callable[[JobKey, Sequence[JobKey], Sequence[JobInstance]], bool]


def decompose(g: ConflictGraph, fits: FitCheck | None = None) -> tuple[list[JobInstance], list[JobInstance]]:
    """Split into (exact-accurate, demoted) jobs.

    Repeatedly removes the vertex with the highest zeta (recomputed after
    every removal) until no edge remains.  Ties go to the earliest ideal
    start, then lowest task id, then lowest job index.  ``g`` is left
    untouched.

    With ``fits``, the highest-ranked vertex that passes
    ``fits(key, kept_keys, demoted_so_far)`` is removed instead; when no
    vertex passes, the plain highest-zeta vertex goes.
    """
    g = g.copy()
    z = {k: zeta(g, k) for k in g.adj}
    demoted: list[JobInstance] = []

    def rank(k: JobKey):
        return (-z[k], *_tie_key(g.jobs[k]))

    while g.edge_count:
        live = [k for k in g.adj if g.adj[k]]
        if fits is None:
            victim = min(live, key=rank)
        else:
            live.sort(key=rank)
            victim = next((k for k in live
                           if fits(k, [o for o in g.jobs if o != k], demoted)), live[0])
        job = g.jobs[victim]
        for n in g.adj[victim]:
            z[n] -= g.weights[victim]
        g.remove(victim)
        del z[victim]
        demoted.append(job)
    exact = sorted(g.jobs.values(), key=_tie_key)
    return exact, demoted


def feasibility_test(server: ServerDraft, job: JobInstance) -> int | None:
    """Place ``job`` at its earliest feasible start in ``server``.

    Returns the start offset (and appends the job) or None on rejection.
    """
    theta = max(job.release, server.alpha, server.busy_until)
    if theta + job.wcet > min(job.deadline, server.end):
        return None
    server.placements.append(Placement(job, theta))
    return theta


def free_intervals(busy: Iterable[tuple[int, int]], horizon: int) -> list[tuple[int, int]]:
    out = []
    cursor = 0
    for start, end in sorted(busy):
        if start > cursor:
            out.append((cursor, start))
        cursor = max(cursor, end)
    if cursor < horizon:
        out.append((cursor, horizon))
    return out


def _gap_servers(exact: Iterable[JobInstance], hyperperiod: int) -> list[ServerDraft]:
    windows = ((job.ideal, job.ideal + job.wcet) for job in exact)
    return [ServerDraft(QUALITY, a, b - a) for a, b in free_intervals(windows, hyperperiod)]


def _edf(job: JobInstance) -> tuple[int, int, int, int]:
    return (job.deadline, job.release, job.task, job.j)


def _fill(servers: Sequence[ServerDraft], demoted: Iterable[JobInstance],
          give_up: bool = False) -> list[JobInstance]:
    """Earliest-deadline-first filling of the quality servers.

    Returns the jobs left over, EDF-ordered.  ``give_up`` stops at the first
    server that starts after some leftover job's deadline.
    """
    # Jobs enter ``active`` once released before the server's end and leave
    # for ``dead`` once their deadline has passed its start; neither kind can
    # go in the current server, so only ``active`` needs scanning.
    future = sorted(demoted, key=lambda j: (j.release, *_edf(j)))
    nxt = 0
    active: list[JobInstance] = []
    dead: list[JobInstance] = []
    for server in servers:
        if server.kind != QUALITY:
            continue
        alpha, end = server.alpha, server.end
        if nxt < len(future) and future[nxt].release < end:
            while nxt < len(future) and future[nxt].release < end:
                active.append(future[nxt])
                nxt += 1
            active.sort(key=_edf)
        cut = 0
        while cut < len(active) and active[cut].deadline <= alpha:
            cut += 1
        dead += active[:cut]
        del active[:cut]
        if give_up and dead:
            break
        if not active:
            if nxt == len(future):
                break
            continue
        # same rule as feasibility_test, inlined: this loop dominates run time
        cursor = server.busy_until
        left = []
        for i, job in enumerate(active):
            if cursor >= end:
                left += active[i:]
                break
            theta = max(job.release, cursor)
            if theta + job.wcet > min(job.deadline, end):
                left.append(job)
                continue
            server.placements.append(Placement(job, theta))
            cursor = theta + job.wcet
        active = left
    return sorted(dead + active + future[nxt:], key=_edf)


def placeable_check(jobs: Sequence[JobInstance], hyperperiod: int) -> FitCheck:
    """Fit test for :func:`decompose`: can the demoted jobs plus the candidate
    still be allocated around the jobs currently kept at their ideal start?"""
    by_key = {job.key: job for job in jobs}

    def fits(key: JobKey, kept: Sequence[JobKey], demoted: Sequence[JobInstance]) -> bool:
        servers = _gap_servers((by_key[k] for k in kept), hyperperiod)
        return not _fill(servers, [*demoted, by_key[key]], give_up=True)

    return fits


def allocate_and_schedule(jobs: Sequence[JobInstance], tasks: TaskSet,
                          fit_check: bool = True) -> ScheduleSolution:
    """``fit_check=False`` demotes by zeta alone and leaves fitting to the
    allocation phase."""
    hp = tasks.hyperperiod
    g = build_conflict_graph(jobs, {t.id: t.v_max for t in tasks})
    exact, demoted = decompose(g, placeable_check(jobs, hp) if fit_check else None)

    servers = [ServerDraft(EXACT, job.ideal, job.wcet, [Placement(job, job.ideal)])
               for job in exact]
    servers += _gap_servers(exact, hp)
    servers.sort(key=lambda s: s.alpha)

    pending = _fill(servers, demoted)
    if pending:
        return ScheduleSolution(servers, hp, feasible=False, unplaced=pending[0])
    return optimize_offsets(ScheduleSolution(servers, hp), tasks)


def optimize_offsets(sol: ScheduleSolution, tasks: TaskSet) -> ScheduleSolution:
    """Postpone quality-server jobs when a later start gives higher quality.

    Within each quality server, the latest job moves first; a job may move up
    to the (already moved) start of its successor, the server end and its own
    latest feasible start.  The smallest best offset is kept.
    """
    sol = copy.deepcopy(sol)
    for server in sol.servers:
        if server.kind != QUALITY or not server.placements:
            continue
        placed = sorted(server.placements, key=lambda p: p.theta)
        limit = server.end
        for idx in range(len(placed) - 1, -1, -1):
            p = placed[idx]
            job = p.job
            task = tasks[job.task]
            upper = min(limit, job.deadline) - job.wcet
            # single-peak curves never improve past the ideal start
            upper = min(upper, max(p.theta, job.ideal))
            best_theta, best_q = p.theta, task.quality(p.theta - job.release)
            for cand in range(p.theta + 1, upper + 1):
                q = task.quality(cand - job.release)
                if q > best_q:
                    best_theta, best_q = cand, q
            placed[idx] = Placement(job, best_theta)
            limit = best_theta
        server.placements = placed
    return sol


def schedule_proposed(tasks: TaskSet, fit_check: bool = True) -> ScheduleSolution:
    return allocate_and_schedule(expand_hyperperiod(tasks), tasks, fit_check)


def planned_quality(sol: ScheduleSolution, tasks: TaskSet) -> float:
    return sum(tasks[p.job.task].quality(p.theta - p.job.release) for p in sol.placements())


def check_solution(sol: ScheduleSolution, jobs: Sequence[JobInstance]) -> list[str]:
    """Structural problems of a feasible solution (empty when sound)."""
    problems = []
    placed = sol.placements()
    keys = [p.job.key for p in placed]
    if sorted(keys) != sorted(j.key for j in jobs):
        problems.append("job set mismatch")
    for p in placed:
        if p.theta < p.job.release or p.finish > p.job.deadline:
            problems.append(f"{p.job} outside [r, d]")
    ordered = sorted(placed, key=lambda p: p.theta)
    for a, b in zip(ordered, ordered[1:]):
        if a.finish > b.theta:
            problems.append(f"{a.job} overlaps {b.job}")
    for s in sol.servers:
        for p in s.placements:
            if s.kind == EXACT and p.theta != p.job.ideal:
                problems.append(f"exact {p.job} not at ideal")
            if p.theta < s.alpha or p.finish > s.end:
                problems.append(f"{p.job} outside its server")
    return problems
