"""Node allocation: FCFS, SJF, and exact replay of recorded placements.

One scheduler instance belongs to one simulation run; nothing here is
shared across runs. Allocation is deterministic: free nodes are handed out
lowest-numbered first so repeated runs place jobs identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import FCFS, REPLAY, SJF
from .workload import Job

FREE = -1


class SchedulerError(RuntimeError):
    pass


class NodePool:
    """Ownership map over the machine's nodes.

    owner[i] is FREE or the job_id holding node i; a node belongs to at
    most one job at a time. A parallel free-set keeps the hot replay check
    (are these exact nodes free?) off the numpy fancy-indexing path.
    """

    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes
        self.owner = np.full(n_nodes, FREE, dtype=np.int64)
        self.free_count = n_nodes
        self._free: set[int] = set(range(n_nodes))
        self._job_nodes: dict[int, np.ndarray] = {}

    def nodes_of(self, job_id: int) -> np.ndarray:
        return self._job_nodes[job_id]

    def all_free(self, node_ids) -> bool:
        return self._free.issuperset(node_ids)

    def allocate_lowest(self, job_id: int, count: int) -> np.ndarray:
        if count > self.free_count:
            raise SchedulerError(f"job {job_id}: requested {count} nodes, {self.free_count} free")
        ids = np.flatnonzero(self.owner == FREE)[:count]
        self._take(job_id, ids)
        return ids

    def allocate_exact(self, job_id: int, node_ids) -> np.ndarray:
        ids = np.asarray(node_ids, dtype=np.int64)
        if not self.all_free(node_ids):
            raise SchedulerError(f"job {job_id}: requested nodes are not all free")
        self._take(job_id, ids)
        return ids

    def _take(self, job_id: int, ids: np.ndarray) -> None:
        if job_id in self._job_nodes:
            raise SchedulerError(f"job {job_id} already holds nodes")
        self.owner[ids] = job_id
        self._job_nodes[job_id] = ids
        self._free.difference_update(ids.tolist())
        self.free_count -= ids.size

    def release(self, job_id: int) -> int:
        if job_id not in self._job_nodes:
            raise SchedulerError(f"release of unknown job {job_id}")
        ids = self._job_nodes.pop(job_id)
        self.owner[ids] = FREE
        self._free.update(ids.tolist())
        self.free_count += ids.size
        return ids.size


def release(pool: NodePool, job_id: int) -> int:
    """Free every node a job holds; returns how many were released."""
    return pool.release(job_id)


@dataclass
class PendingQueue:
    """Jobs awaiting allocation, kept in arrival order; the active policy
    decides the visit order at each scheduling pass."""

    entries: list[tuple[float, int, Job]] = field(default_factory=list)
    _seq: int = 0

    def push(self, job: Job, now: float) -> None:
        self.entries.append((now, self._seq, job))
        self._seq += 1

    def __len__(self) -> int:
        return len(self.entries)

    def jobs(self) -> list[Job]:
        return [j for _, _, j in self.entries]


@dataclass(frozen=True)
class Allocation:
    job: Job
    node_ids: np.ndarray
    time_s: float


def _ordered(queue: PendingQueue, policy: str) -> list[tuple[float, int, Job]]:
    if policy == SJF:
        return sorted(queue.entries, key=lambda e: (e[2].wall_time_s, e[2].job_id, e[1]))
    # FCFS and REPLAY visit in arrival order.
    return list(queue.entries)


def schedule_jobs(
    queue: PendingQueue,
    pool: NodePool,
    policy: str,
    now: float,
    nodes_total: int | None = None,
) -> tuple[list[Allocation], list[dict]]:
    """One scheduling pass in policy order.

    FCFS never skips its head: the first job that does not fit blocks the
    pass. SJF visits shortest-first and may skip jobs that do not fit.
    REPLAY allocates a job exactly on its pinned nodes and only when all of
    them are free; unpinned replay jobs fall back to lowest-free placement.

    Jobs asking for more nodes than the machine has are rejected permanently
    so they can never block the queue. Returns (allocations, rejections).
    """
    limit = nodes_total if nodes_total is not None else pool.n_nodes
    allocations: list[Allocation] = []
    rejections: list[dict] = []
    remaining: list[tuple[float, int, Job]] = []
    blocked = False

    for entry in _ordered(queue, policy):
        _, _, job = entry
        if job.node_count > limit:
            rejections.append({
                "job_id": job.job_id,
                "time_s": now,
                "reason": f"requested {job.node_count} nodes, machine has {limit}",
            })
            continue
        if blocked:
            remaining.append(entry)
            continue
        if policy == REPLAY and job.pinned_nodes is not None:
            fits = pool.all_free(job.pinned_nodes)
            if fits:
                ids = pool.allocate_exact(job.job_id, job.pinned_nodes)
                allocations.append(Allocation(job, ids, now))
            else:
                remaining.append(entry)
            continue
        if job.node_count <= pool.free_count:
            ids = pool.allocate_lowest(job.job_id, job.node_count)
            allocations.append(Allocation(job, ids, now))
        else:
            remaining.append(entry)
            if policy == FCFS:
                blocked = True

    if policy == SJF:
        # Keep arrival order as the stored representation.
        remaining.sort(key=lambda e: e[1])
    queue.entries = remaining
    return allocations, rejections
