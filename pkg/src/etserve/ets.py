"""Server parameters derived from a feasible schedule.

For every non-empty server (sorted by start time) this computes the
initial capacity, the largest start delay it tolerates, the slack towards
its successor, the extra capacity it may use, and the final execution
window.  Everything is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .schedule import Placement, ScheduleSolution


@dataclass(frozen=True)
class EtsServer:
    index: int
    kind: str
    alpha: int
    lambda_init: int
    upsilon: int
    psi: int
    omega: int
    lambda_final: int
    window_end: int
    priority: int
    period: int
    placements: tuple[Placement, ...]


@dataclass(frozen=True)
class EtsProgram:
    servers: tuple[EtsServer, ...]
    hyperperiod: int
    robustness: int


def initial_capacity(placements: Sequence[Placement], alpha: int | None = None) -> int:
    if not placements:
        raise ValueError("server has no jobs")
    if alpha is None:
        alpha = min(p.theta for p in placements)
    return max(p.finish for p in placements) - alpha


def max_delay(placements: Sequence[Placement]) -> int:
    """Largest uniform start delay that keeps every job within its deadline."""
    if not placements:
        raise ValueError("server has no jobs")
    return min(p.job.deadline - p.finish for p in placements)


def slacks(alpha: Sequence[int], lam: Sequence[int], upsilon: Sequence[int],
           hyperperiod: int) -> list[int]:
    """Slack between each server's nominal end and its successor's latest safe start."""
    n = len(alpha)
    psi = [0] * n
    for k in range(n - 1, -1, -1):
        if k == n - 1:
            psi[k] = hyperperiod - alpha[k] - lam[k]
        else:
            psi[k] = alpha[k + 1] + min(upsilon[k + 1], psi[k + 1]) - alpha[k] - lam[k]
    return psi


def extra_capacities(alpha: Sequence[int], lam: Sequence[int], upsilon: Sequence[int],
                     psi: Sequence[int], hyperperiod: int) -> list[int]:
    """Additional capacity per server.

    The last server is bounded by the first server of the next hyperperiod.
    """
    n = len(alpha)
    omega = [min(upsilon[k + 1], psi[k + 1]) for k in range(n - 1)]
    if n:
        omega.append(min(upsilon[0], hyperperiod + alpha[0] - alpha[-1] - lam[-1]))
    return omega


def robustness_bound(omega: Sequence[int]) -> int:
    return min(omega)


def finalize(sol: ScheduleSolution) -> EtsProgram:
    if not sol.feasible:
        raise ValueError("cannot configure an infeasible schedule")
    drafts = [s for s in sol.servers if s.placements]
    drafts.sort(key=lambda s: min(p.theta for p in s.placements))
    hp = sol.hyperperiod

    alpha = [min(p.theta for p in s.placements) for s in drafts]
    lam = [initial_capacity(s.placements, a) for s, a in zip(drafts, alpha)]
    ups = [max_delay(s.placements) for s in drafts]
    psi = slacks(alpha, lam, ups, hp)
    omega = extra_capacities(alpha, lam, ups, psi, hp)

    servers = []
    n = len(drafts)
    for k, s in enumerate(drafts):
        if k < n - 1:
            end = alpha[k + 1] + omega[k]
        else:
            end = alpha[k] + lam[k] + omega[k]
        servers.append(EtsServer(
            index=k, kind=s.kind, alpha=alpha[k], lambda_init=lam[k], upsilon=ups[k],
            psi=psi[k], omega=omega[k], lambda_final=end - alpha[k], window_end=end,
            priority=k, period=hp,
            placements=tuple(sorted(s.placements, key=lambda p: p.theta)),
        ))
    return EtsProgram(tuple(servers), hp, robustness_bound(omega) if omega else 0)
