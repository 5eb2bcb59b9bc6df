"""Discrete-event simulation oracles.

Two entry points share one deterministic machinery: ``simulate_ctmc`` runs a
single continuous-time chain and reports empirical state occupancy;
``simulate_blocking_network`` runs the whole network with
blocking-after-service semantics and reports per-node occupancy, blocking,
drops, and source-to-sink response times.

Blocking semantics: a job finishing service samples its destination from the
routing row.  If the sampled target is full but another routable target has
room, the job diverts to the lowest-id free target.  If every routable
target is full the job stays on its server, which blocks, until any target
frees a slot; contending blocked jobs release in the order they blocked
(ties broken by lower node id), and releases cascade until no blocked job
can move.  External arrivals to a full node are dropped and counted.

Determinism: every replication draws from its own stream derived from
``SeedSequence(seed).spawn``-style keys, events are ordered by
``(time, insertion sequence)``, and all iteration orders are fixed, so a
given (spec, config) pair reproduces results bit for bit.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ctmc import Generator, is_irreducible
from .errors import ReducibleChainError, ZeroHorizonError
from .model import NetworkSpec, validate_network

_ARRIVAL = 0
_COMPLETE = 1

# job record layout
_ENTRY = 0
_HOPS = 1
_IN_WINDOW = 2


@dataclass(frozen=True)
class SimConfig:
    """Simulation run parameters.

    Args:
        seed: root seed; replication r uses the substream (seed, r).
        horizon: run length, in model time units or in events depending on
            ``unit``.
        unit: "time" or "events".
        replications: independent replications to merge.
        warmup_fraction: leading fraction of the horizon excluded from all
            time-averaged statistics.
    """

    seed: int
    horizon: float
    unit: str = "time"
    replications: int = 1
    warmup_fraction: float = 0.2

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not self.horizon > 0:
            raise ZeroHorizonError(self.horizon)
        if self.unit not in ("time", "events"):
            raise ValueError(f"unit must be 'time' or 'events', got {self.unit!r}")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ValueError(f"replications must be a positive integer, got {self.replications!r}")
        if not 0.0 <= self.warmup_fraction <= 0.5:
            raise ValueError(f"warmup_fraction must be in [0, 0.5], got {self.warmup_fraction!r}")


@dataclass(frozen=True)
class NodeStats:
    """Windowed per-node statistics from a network run."""

    node: int
    occupancy: tuple[float, ...]
    blocked_fraction: float
    mean_jobs: float


@dataclass(frozen=True)
class SimResult:
    """Merged statistics of one simulation (either mode).

    CTMC mode fills ``states``/``occupancy``; network mode fills the node
    and job-flow fields.  ``duration`` is the total measured (post-warmup)
    time across replications; the whole-run job counters satisfy
    arrivals == completed + dropped + in_flight exactly.
    """

    mode: str
    events: int
    duration: float
    replications: int
    states: tuple | None = None
    occupancy: tuple[float, ...] | None = None
    nodes: tuple[NodeStats, ...] | None = None
    mean_jobs: float | None = None
    arrivals: int = 0
    completed: int = 0
    dropped: int = 0
    in_flight: int = 0
    drop_fraction: float | None = None
    response_mean: float | None = None
    response_stderr: float | None = None
    mean_hops: float | None = None

    def to_jsonable(self) -> dict:
        out: dict = {
            "mode": self.mode,
            "events": self.events,
            "duration": self.duration,
            "replications": self.replications,
        }
        if self.mode == "ctmc":
            out["states"] = [list(s) if isinstance(s, tuple) else s
                             for s in self.states]
            out["occupancy"] = list(self.occupancy)
        else:
            out["nodes"] = [
                {
                    "node": ns.node,
                    "occupancy": list(ns.occupancy),
                    "blocked_fraction": ns.blocked_fraction,
                    "mean_jobs": ns.mean_jobs,
                }
                for ns in self.nodes
            ]
            out["mean_jobs"] = self.mean_jobs
            out["arrivals"] = self.arrivals
            out["completed"] = self.completed
            out["dropped"] = self.dropped
            out["in_flight"] = self.in_flight
            out["drop_fraction"] = self.drop_fraction
            out["response_mean"] = self.response_mean
            out["response_stderr"] = self.response_stderr
            out["mean_hops"] = self.mean_hops
        return out


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))


class _Draws:
    """Buffered scalar draws; consumption order is part of the contract."""

    def __init__(self, rng: np.random.Generator, chunk: int = 8192):
        self._rng = rng
        self._chunk = chunk
        self._exp = rng.exponential(size=chunk)
        self._ei = 0
        self._uni = rng.random(size=chunk)
        self._ui = 0

    def exponential(self, rate: float) -> float:
        if self._ei == self._chunk:
            self._exp = self._rng.exponential(size=self._chunk)
            self._ei = 0
        v = float(self._exp[self._ei])
        self._ei += 1
        return v / rate

    def uniform(self) -> float:
        if self._ui == self._chunk:
            self._uni = self._rng.random(size=self._chunk)
            self._ui = 0
        v = float(self._uni[self._ui])
        self._ui += 1
        return v


# -- single-chain trajectories ------------------------------------------------

def _ctmc_rep(gen: Generator, rng, unit: str, horizon: float,
              warmup: float) -> tuple[list[float], float, int]:
    q = gen.rates
    n = q.shape[0]
    hold = [float(1.0 / -q[l, l]) for l in range(n)]  # mean holding times
    cum_rows: list[list[float]] = []
    tgt_rows: list[list[int]] = []
    for l in range(n):
        targets = [m for m in range(n) if m != l and q[l, m] > 0]
        acc, cums = 0.0, []
        for m in targets:
            acc += float(q[l, m] / -q[l, l])
            cums.append(acc)
        cum_rows.append(cums)
        tgt_rows.append(targets)
    draws = _Draws(rng)

    occ = [0.0] * n
    state = 0
    window = 0.0
    events = 0
    if unit == "events":
        budget = int(round(horizon))
        if budget < 1:
            raise ZeroHorizonError(horizon)
        warm = int(budget * warmup)
        for k in range(budget):
            dt = draws.exponential(1.0) * hold[state]
            if k >= warm:
                occ[state] += dt
                window += dt
            u = draws.uniform()
            cum = cum_rows[state]
            pos = bisect_right(cum, u)
            if pos >= len(cum):
                pos = len(cum) - 1
            state = tgt_rows[state][pos]
        events = budget
    else:
        total = horizon
        t_warm = warmup * total
        t = 0.0
        while t < total:
            dt = draws.exponential(1.0) * hold[state]
            t_next = t + dt
            lo = t_warm if t_warm > t else t
            hi = total if total < t_next else t_next
            if hi > lo:
                occ[state] += hi - lo
            if t_next > total:
                break
            t = t_next
            events += 1
            u = draws.uniform()
            cum = cum_rows[state]
            pos = bisect_right(cum, u)
            if pos >= len(cum):
                pos = len(cum) - 1
            state = tgt_rows[state][pos]
        window = total - t_warm
    return occ, window, events


def simulate_ctmc(gen: Generator, config: SimConfig) -> SimResult:
    """Empirical state occupancy of an irreducible chain.

    Raises:
        ReducibleChainError: the chain is not irreducible.
    """
    n = len(gen.states)
    if n == 1:
        duration = config.horizon * (1 - config.warmup_fraction) \
            if config.unit == "time" else 0.0
        return SimResult(mode="ctmc", events=0, duration=duration,
                         replications=config.replications,
                         states=gen.states.labels, occupancy=(1.0,))
    if not is_irreducible(gen):
        raise ReducibleChainError("trajectory simulation needs an irreducible chain")

    occ_total = np.zeros(n)
    window_total = 0.0
    events_total = 0
    for rep in range(config.replications):
        rng = _rep_rng(config.seed, rep)
        occ, window, events = _ctmc_rep(
            gen, rng, config.unit, config.horizon, config.warmup_fraction)
        occ_total += occ
        window_total += window
        events_total += events
    return SimResult(
        mode="ctmc",
        events=events_total,
        duration=float(window_total),
        replications=config.replications,
        states=gen.states.labels,
        occupancy=tuple(float(x) for x in occ_total / window_total),
    )


# -- full network -------------------------------------------------------------

class _NetworkRun:
    """One replication of the blocking network."""

    def __init__(self, spec: NetworkSpec, rng, unit: str, horizon: float,
                 warmup: float):
        self.unit = unit
        self.horizon = horizon
        self.draws = _Draws(rng)

        self.ids = list(spec.ids())
        idx = {i: k for k, i in enumerate(self.ids)}
        n = len(self.ids)
        self.cap = [spec.node(i).capacity for i in self.ids]
        self.mu = [spec.node(i).service_rate for i in self.ids]
        self.tgt: list[list[int]] = []
        self.cum: list[list[float]] = []
        for i in self.ids:
            row = sorted((j, p) for j, p in spec.routing.row(i).items() if p > 0)
            self.tgt.append([idx[j] for j, _ in row])
            acc, cums = 0.0, []
            for _, p in row:
                acc += p
                cums.append(acc)
            self.cum.append(cums)
        self.streams = [(idx[i], r) for i, r in sorted(spec.external_arrivals.items())
                        if r > 0]

        self.queue: list[deque] = [deque() for _ in range(n)]
        self.srv_job: list[list | None] = [None] * n
        self.srv_blocked = [False] * n
        self.block_time = [0.0] * n
        self.blocked_set: set[int] = set()

        self.occ_time = [[0.0] * (self.cap[k] + 1) for k in range(n)]
        self.blocked_t = [0.0] * n
        self.last = [0.0] * n

        self.t = 0.0
        self.seq = 0
        self.heap: list = []
        self.arrivals = self.completed = self.dropped = 0
        self.arrivals_w = self.dropped_w = 0
        self.resp_n = 0
        self.resp_sum = self.resp_sq = 0.0
        self.hop_sum = 0

        if unit == "events":
            self.budget = int(round(horizon))
            if self.budget < 1:
                raise ZeroHorizonError(horizon)
            self.warm_events = int(self.budget * warmup)
            self.t_warm = 0.0 if self.warm_events == 0 else math.inf
        else:
            self.budget = None
            self.warm_events = None
            self.t_warm = warmup * horizon

    # -- plumbing --

    def _push(self, time: float, kind: int, node: int):
        heapq.heappush(self.heap, (time, self.seq, kind, node))
        self.seq += 1

    def _count(self, k: int) -> int:
        return len(self.queue[k]) + (1 if self.srv_job[k] is not None else 0)

    def _has_room(self, k: int) -> bool:
        return self._count(k) < self.cap[k]

    def _close(self, k: int):
        lo = self.last[k]
        if self.t_warm > lo:
            lo = self.t_warm
        if self.t > lo:
            self.occ_time[k][self._count(k)] += self.t - lo
            if self.srv_blocked[k]:
                self.blocked_t[k] += self.t - lo
        self.last[k] = self.t

    def _try_start(self, k: int):
        if self.srv_job[k] is None and self.queue[k]:
            self.srv_job[k] = self.queue[k].popleft()
            self._push(self.t + self.draws.exponential(self.mu[k]), _COMPLETE, k)

    def _transfer(self, k: int, j: int):
        """Move the job on node k's server into node j's buffer."""
        job = self.srv_job[k]
        self._close(k)
        self._close(j)
        self.srv_job[k] = None
        if self.srv_blocked[k]:
            self.srv_blocked[k] = False
            self.blocked_set.discard(k)
        job[_HOPS] += 1
        self.queue[j].append(job)
        self._try_start(j)
        self._try_start(k)

    def _depart(self, k: int, job: list):
        self._close(k)
        self.srv_job[k] = None
        self.completed += 1
        if job[_IN_WINDOW]:
            r = self.t - job[_ENTRY]
            self.resp_n += 1
            self.resp_sum += r
            self.resp_sq += r * r
            self.hop_sum += job[_HOPS]
        self._try_start(k)

    def _cascade(self):
        """Release blocked jobs, oldest block first, until nothing moves."""
        while self.blocked_set:
            best = None
            for m in sorted(self.blocked_set):
                dest = next((d for d in self.tgt[m] if self._has_room(d)), None)
                if dest is None:
                    continue
                key = (self.block_time[m], m)
                if best is None or key < best[0]:
                    best = (key, m, dest)
            if best is None:
                return
            _, m, dest = best
            self._transfer(m, dest)

    # -- event handlers --

    def _on_arrival(self, k: int, in_window: bool):
        self.arrivals += 1
        if in_window:
            self.arrivals_w += 1
        if self._has_room(k):
            self._close(k)
            self.queue[k].append([self.t, 0, in_window])
            self._try_start(k)
        else:
            self.dropped += 1
            if in_window:
                self.dropped_w += 1

    def _on_complete(self, k: int):
        job = self.srv_job[k]
        u = self.draws.uniform()
        cum = self.cum[k]
        if cum and u < cum[-1]:
            j = self.tgt[k][bisect_right(cum, u)]
            if self._has_room(j):
                self._transfer(k, j)
            else:
                divert = next((d for d in self.tgt[k] if self._has_room(d)), None)
                if divert is not None:
                    self._transfer(k, divert)
                else:
                    self._close(k)
                    self.srv_blocked[k] = True
                    self.block_time[k] = self.t
                    self.blocked_set.add(k)
                    return  # nothing freed, nothing to cascade
        else:
            self._depart(k, job)
        self._cascade()

    # -- main loop --

    def run(self) -> dict:
        for k, rate in self.streams:
            self._push(self.draws.exponential(rate), _ARRIVAL, k)

        processed = 0
        while True:
            if self.budget is not None and processed == self.budget:
                break
            time, _, kind, node = self.heap[0]
            if self.budget is None and time > self.horizon:
                break
            heapq.heappop(self.heap)
            if self.warm_events is not None and processed == self.warm_events \
                    and math.isinf(self.t_warm):
                self.t_warm = time
            self.t = time
            if self.budget is not None:
                in_window = processed >= self.warm_events
            else:
                in_window = time >= self.t_warm
            if kind == _ARRIVAL:
                self._on_arrival(node, in_window)
                stream_rate = next(r for s, r in self.streams if s == node)
                self._push(self.t + self.draws.exponential(stream_rate), _ARRIVAL, node)
            else:
                self._on_complete(node)
            processed += 1

        t_end = self.horizon if self.budget is None else self.t
        self.t = t_end
        for k in range(len(self.ids)):
            self._close(k)
        window = t_end - min(self.t_warm, t_end)

        in_flight = sum(self._count(k) for k in range(len(self.ids)))
        assert in_flight == self.arrivals - self.completed - self.dropped

        return {
            "occ_time": self.occ_time,
            "blocked_t": self.blocked_t,
            "window": window,
            "events": processed,
            "arrivals": self.arrivals,
            "completed": self.completed,
            "dropped": self.dropped,
            "in_flight": in_flight,
            "arrivals_w": self.arrivals_w,
            "dropped_w": self.dropped_w,
            "resp": (self.resp_n, self.resp_sum, self.resp_sq),
            "hop_sum": self.hop_sum,
        }


def simulate_blocking_network(spec: NetworkSpec, config: SimConfig) -> SimResult:
    """Simulate the network under blocking-after-service semantics.

    Returns a SimResult in network mode; see the module docstring for the
    blocking, diversion, and drop rules.  Identical (spec, config) pairs
    produce identical results.
    """
    if not spec.is_validated:
        spec = validate_network(spec)

    reps = []
    for rep in range(config.replications):
        run = _NetworkRun(spec, _rep_rng(config.seed, rep), config.unit,
                          config.horizon, config.warmup_fraction)
        reps.append(run.run())

    ids = list(spec.ids())
    window = sum(r["window"] for r in reps)
    if window <= 0:
        raise ZeroHorizonError(config.horizon)

    nodes = []
    mean_jobs_total = 0.0
    for k, i in enumerate(ids):
        cap = spec.node(i).capacity
        occ = [0.0] * (cap + 1)
        blocked = 0.0
        for r in reps:
            for n_jobs in range(cap + 1):
                occ[n_jobs] += r["occ_time"][k][n_jobs]
            blocked += r["blocked_t"][k]
        fractions = tuple(x / window for x in occ)
        mean_jobs = sum(n_jobs * f for n_jobs, f in enumerate(fractions))
        mean_jobs_total += mean_jobs
        nodes.append(NodeStats(
            node=i,
            occupancy=fractions,
            blocked_fraction=blocked / window,
            mean_jobs=mean_jobs,
        ))

    resp_n = sum(r["resp"][0] for r in reps)
    resp_sum = sum(r["resp"][1] for r in reps)
    resp_sq = sum(r["resp"][2] for r in reps)
    response_mean = resp_sum / resp_n if resp_n else None
    response_stderr = None
    if resp_n > 1:
        var = max(0.0, (resp_sq - resp_n * (resp_sum / resp_n) ** 2) / (resp_n - 1))
        response_stderr = math.sqrt(var / resp_n)
    hop_sum = sum(r["hop_sum"] for r in reps)
    mean_hops = hop_sum / resp_n if resp_n else None

    arrivals_w = sum(r["arrivals_w"] for r in reps)
    dropped_w = sum(r["dropped_w"] for r in reps)

    return SimResult(
        mode="network",
        events=sum(r["events"] for r in reps),
        duration=window,
        replications=config.replications,
        nodes=tuple(nodes),
        mean_jobs=mean_jobs_total,
        arrivals=sum(r["arrivals"] for r in reps),
        completed=sum(r["completed"] for r in reps),
        dropped=sum(r["dropped"] for r in reps),
        in_flight=sum(r["in_flight"] for r in reps),
        drop_fraction=dropped_w / arrivals_w if arrivals_w else None,
        response_mean=response_mean,
        response_stderr=response_stderr,
        mean_hops=mean_hops,
    )
