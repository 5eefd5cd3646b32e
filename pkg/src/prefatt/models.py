"""Discrete-time preferential-attachment growth processes.

Time is 1-based: state 1 is the initial vertex, and the event at time t
transforms state t-1 into state t. Every elementary event adds exactly one
unit of attachment weight, so for the in-degree processes (Simon, II-PA,
Price) the total in-degree at time t equals t, and for the single-edge
Barabasi-Albert process the total degree at time t equals 2t.

Degree bookkeeping follows the usual conventions: a loop counts twice
toward the degree, a directed loop counts once toward the in-degree.

Fast runs go through the numba kernels in `_kernels`; the `*_step`
functions implement the same transitions one event at a time on a plain
GraphState and consume the random stream in exactly the same order, so a
step-by-step run and a kernel run with the same generator produce identical
trajectories.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .rng import make_rng

__all__ = [
    "ModelSpec",
    "GraphState",
    "EventKind",
    "EventRecord",
    "EventLog",
    "Checkpoints",
    "RunResult",
    "ResourceCapError",
    "simon_init",
    "simon_step",
    "simon_run",
    "simon_run_with_genealogy",
    "iipa_run",
    "price_init",
    "price_step",
    "price_run",
    "ba_init",
    "ba_step_single",
    "ba_run_single",
    "ba_run_identified",
    "ba_run_rescaled",
    "run_coupled_m1",
    "check_state_invariants",
]

MODEL_TAGS = ("simon", "iipa", "price", "ba", "ba-rescaled", "yule")


class ResourceCapError(RuntimeError):
    """A configured resource cap (growth bound) would be exceeded."""


@dataclass
class ModelSpec:
    """Parameters of one growth model.

    Only the fields relevant to `model` are validated; the rest stay None.
    For Price, `out_degree_law` picks the law of the per-vertex out-degree:
    "constant" (requires integer m) or "geometric" (support {0,1,2,...},
    success 1/(m+1), mean exactly m).
    """

    model: str
    alpha: float | None = None
    m: float | None = None
    k0: int = 1
    out_degree_law: str = "constant"
    beta: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "simon":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("simon requires alpha in (0, 1)")
        if self.model in ("iipa", "ba", "ba-rescaled"):
            if self.m is None or self.m < 1 or int(self.m) != self.m:
                raise ValueError(f"{self.model} requires integer m >= 1")
        if self.model == "price":
            if self.m is None or self.m <= 0:
                raise ValueError("price requires mean out-degree m > 0")
            if self.k0 < 1:
                raise ValueError("price requires k0 >= 1")
            if self.out_degree_law not in ("constant", "geometric"):
                raise ValueError(f"unknown out-degree law {self.out_degree_law!r}")
            if self.out_degree_law == "constant" and int(self.m) != self.m:
                raise ValueError("constant out-degree law requires integer m")
        if self.model == "yule":
            if self.beta is None or self.beta <= 0:
                raise ValueError("yule requires beta > 0")
            if self.lam is None or self.lam <= 0:
                raise ValueError("yule requires lambda > 0")


@dataclass
class GraphState:
    """Mutable growth-process state.

    `endpoint_pool` is the append-only weight multiset: vertex j occurs once
    per unit of attachment weight (in-degree, or degree for BA runs).
    """

    t: int
    n_vertices: int
    in_degree: list | np.ndarray
    endpoint_pool: list | np.ndarray
    last_vertex: int
    birth_time: list | np.ndarray
    degree: list | np.ndarray | None = None


class EventKind(enum.Enum):
    NEW_VERTEX = "new-vertex"
    EDGE = "edge"
    LOOP = "loop"


@dataclass(frozen=True)
class EventRecord:
    t: int
    kind: EventKind
    source: int
    target: int


@dataclass
class EventLog:
    """Per-event arrays, one entry per elementary step.

    Row i is the event at time i+1. For vertex-creation events `actor` is
    the new vertex id; for edge events it is the edge target.
    """

    model: str
    is_new: np.ndarray
    actor: np.ndarray

    def __len__(self) -> int:
        return len(self.is_new)

    def __iter__(self) -> Iterator[EventRecord]:
        last = 0
        for i in range(len(self.is_new)):
            t = i + 1
            a = int(self.actor[i])
            if self.model == "ba":
                # one vertex plus one edge per step; actor is the edge target
                yield EventRecord(t, EventKind.NEW_VERTEX, i, a)
            elif self.is_new[i]:
                last = a
                yield EventRecord(t, EventKind.NEW_VERTEX, a, a)
            else:
                src = last
                kind = EventKind.LOOP if a == src else EventKind.EDGE
                yield EventRecord(t, kind, src, a)


@dataclass
class Checkpoints:
    """Snapshots of the weight histogram at requested times.

    counts[i, k] is the number of vertices with weight k (1 <= k <= k_limit)
    at times[i]; counts[i, k_limit+1] counts vertices beyond k_limit.
    """

    times: np.ndarray
    counts: np.ndarray
    vcounts: np.ndarray

    @property
    def k_limit(self) -> int:
        return self.counts.shape[1] - 2


@dataclass
class RunResult:
    model: str
    params: dict
    kind: str  # "in-degree" or "degree"
    state: GraphState
    events: EventLog | None = None
    checkpoints: Checkpoints | None = None
    parent: np.ndarray | None = None
    truncated_batches: int = 0


def _prep_checkpoints(times: Sequence[int], k_limit: int, upper: int):
    ts = np.asarray(sorted(set(int(t) for t in times)), dtype=np.int64)
    if len(ts) and (ts[0] < 1 or ts[-1] > upper):
        raise ValueError(f"checkpoints must lie in [1, {upper}]")
    counts = np.zeros((len(ts), k_limit + 2), dtype=np.int64)
    vcounts = np.zeros(len(ts), dtype=np.int64)
    return ts, counts, vcounts


# ---------------------------------------------------------------------------
# Simon model
# ---------------------------------------------------------------------------


def simon_init() -> GraphState:
    """State at time 1: a single vertex with a directed loop."""
    return GraphState(t=1, n_vertices=1, in_degree=[1], endpoint_pool=[0],
                      last_vertex=0, birth_time=[1])


def simon_step(state: GraphState, alpha: float, rng: np.random.Generator) -> GraphState:
    """One Simon event: with probability alpha a new vertex with a directed
    loop, otherwise a directed edge from the last added vertex to a target
    drawn proportional to in-degree (the last vertex itself included)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    t = state.t
    if rng.random() < alpha:
        v = state.n_vertices
        state.n_vertices += 1
        state.in_degree.append(1)
        state.birth_time.append(t + 1)
        state.endpoint_pool.append(v)
        state.last_vertex = v
    else:
        idx = min(int(rng.random() * t), t - 1)
        j = state.endpoint_pool[idx]
        state.in_degree[j] += 1
        state.endpoint_pool.append(j)
    state.t = t + 1
    return state


def simon_run(t_target: int, alpha: float, rng: np.random.Generator,
              checkpoint_times: Sequence[int] = (), k_limit: int = 512) -> RunResult:
    """Run the Simon process to time t_target.

    Args:
        t_target: number of elementary events (>= 1).
        alpha: new-vertex probability, in (0, 1).
        rng: seeded generator; consumed in documented order.
        checkpoint_times: times at which to snapshot the in-degree histogram.
        k_limit: histogram resolution of the snapshots.

    Returns:
        RunResult with final state, the event log, and any checkpoints.
    """
    if t_target < 1:
        raise ValueError("t_target must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    pool = np.empty(t_target, dtype=np.int32)
    indeg = np.zeros(t_target, dtype=np.int32)
    birth = np.zeros(t_target, dtype=np.int32)
    is_new = np.empty(t_target, dtype=np.uint8)
    actor = np.empty(t_target, dtype=np.int32)
    cp_ts, cp_counts, cp_v = _prep_checkpoints(checkpoint_times, k_limit, t_target)
    n, last = _kernels.simon_kernel(rng, t_target, alpha, pool, indeg, birth,
                                    is_new, actor, cp_ts, cp_counts, cp_v)
    state = GraphState(t=t_target, n_vertices=n, in_degree=indeg[:n],
                       endpoint_pool=pool, last_vertex=last, birth_time=birth[:n])
    cps = Checkpoints(cp_ts, cp_counts, cp_v) if len(cp_ts) else None
    return RunResult(model="simon", params={"alpha": alpha, "t": t_target},
                     kind="in-degree", state=state,
                     events=EventLog("simon", is_new, actor), checkpoints=cps)


def simon_run_with_genealogy(t_target: int, alpha: float,
                             rng: np.random.Generator) -> RunResult:
    """Simon process in its duplication form.

    Each event first picks a uniformly random existing vertex; with
    probability alpha that vertex spawns the new vertex (and is recorded as
    its parent), otherwise the ordinary preferential edge event occurs. The
    marginal law of the graph is the same as `simon_run`; the parent map
    supports descendant counting.
    """
    if t_target < 1:
        raise ValueError("t_target must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    pool = np.empty(t_target, dtype=np.int32)
    indeg = np.zeros(t_target, dtype=np.int32)
    birth = np.zeros(t_target, dtype=np.int32)
    is_new = np.empty(t_target, dtype=np.uint8)
    actor = np.empty(t_target, dtype=np.int32)
    parent = np.full(t_target, -1, dtype=np.int32)
    n, last = _kernels.simon_genealogy_kernel(rng, t_target, alpha, pool, indeg,
                                              birth, is_new, actor, parent)
    state = GraphState(t=t_target, n_vertices=n, in_degree=indeg[:n],
                       endpoint_pool=pool, last_vertex=last, birth_time=birth[:n])
    return RunResult(model="simon", params={"alpha": alpha, "t": t_target,
                                            "genealogy": True},
                     kind="in-degree", state=state,
                     events=EventLog("simon", is_new, actor), parent=parent[:n])


# ---------------------------------------------------------------------------
# II-PA model
# ---------------------------------------------------------------------------


def iipa_run(n_target: int, m: int, rng: np.random.Generator,
             checkpoint_nverts: Sequence[int] = (), k_limit: int = 512) -> RunResult:
    """Run the II-PA process to n_target complete vertices.

    Each vertex arrives with a directed loop and then emits m directed
    edges, the target of each drawn proportional to current in-degree over
    all existing vertices (itself included). Checkpoints are taken at
    complete-vertex counts.
    """
    if n_target < 1 or m < 1:
        raise ValueError("n_target and m must be >= 1")
    t_total = n_target * (m + 1)
    pool = np.empty(t_total, dtype=np.int32)
    indeg = np.zeros(n_target, dtype=np.int32)
    birth = np.zeros(n_target, dtype=np.int32)
    is_new = np.empty(t_total, dtype=np.uint8)
    actor = np.empty(t_total, dtype=np.int32)
    cp_ns, cp_counts, cp_v = _prep_checkpoints(checkpoint_nverts, k_limit, n_target)
    n = _kernels.iipa_kernel(rng, n_target, m, pool, indeg, birth, is_new,
                             actor, cp_ns, cp_counts, cp_v)
    state = GraphState(t=t_total, n_vertices=n, in_degree=indeg[:n],
                       endpoint_pool=pool, last_vertex=n - 1, birth_time=birth[:n])
    cps = Checkpoints(cp_ns, cp_counts, cp_v) if len(cp_ns) else None
    return RunResult(model="iipa", params={"m": m, "n": n_target},
                     kind="in-degree", state=state,
                     events=EventLog("iipa", is_new, actor), checkpoints=cps)


# ---------------------------------------------------------------------------
# Price model
# ---------------------------------------------------------------------------


def _draw_out_degrees(spec: ModelSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    if spec.out_degree_law == "constant":
        return np.full(count, int(spec.m), dtype=np.int64)
    # geometric on {0,1,2,...} with mean m: success probability 1/(m+1)
    return rng.geometric(1.0 / (spec.m + 1.0), size=count).astype(np.int64) - 1


def price_init(spec: ModelSpec, rng: np.random.Generator) -> GraphState:
    """State at n=1: a single vertex with M_1 + k0 directed loops."""
    m1 = int(_draw_out_degrees(spec, 1, rng)[0])
    w = m1 + spec.k0
    return GraphState(t=1, n_vertices=1, in_degree=[w], endpoint_pool=[0] * w,
                      last_vertex=0, birth_time=[1])


def price_step(state: GraphState, spec: ModelSpec, rng: np.random.Generator) -> GraphState:
    """Add one Price vertex: k0 directed loops plus M ~ out_degree_law edges
    to distinct old vertices, drawn proportional to in-degrees frozen at the
    start of the batch (duplicate draws rejected). If M exceeds the number
    of old vertices the batch is truncated."""
    n = state.n_vertices
    mu = int(_draw_out_degrees(spec, 1, rng)[0])
    take = min(mu, n)
    frozen = len(state.endpoint_pool)
    batch: list[int] = []
    chosen: set[int] = set()
    while len(batch) < take:
        idx = min(int(rng.random() * frozen), frozen - 1)
        j = state.endpoint_pool[idx]
        if j not in chosen:
            chosen.add(j)
            batch.append(j)
    v = n
    state.n_vertices += 1
    state.in_degree.append(spec.k0)
    state.birth_time.append(state.t + 1)
    state.endpoint_pool.extend([v] * spec.k0)
    for j in batch:  # draw order, matching the kernel's pool layout
        state.in_degree[j] += 1
        state.endpoint_pool.append(j)
    state.last_vertex = v
    state.t += 1
    return state


def price_run(n_target: int, spec: ModelSpec, rng: np.random.Generator) -> RunResult:
    """Run the Price process to n_target vertices."""
    if spec.model != "price":
        raise ValueError("spec.model must be 'price'")
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    m_values = _draw_out_degrees(spec, n_target, rng)
    cap = int(n_target * spec.k0 + m_values.sum())
    pool = np.empty(cap, dtype=np.int32)
    indeg = np.zeros(n_target, dtype=np.int32)
    birth = np.zeros(n_target, dtype=np.int32)
    taken = np.zeros(n_target, dtype=np.uint8)
    batch = np.empty(max(int(m_values.max()), 1), dtype=np.int32)
    psize, truncated = _kernels.price_kernel(rng, n_target, spec.k0, m_values,
                                             pool, indeg, birth, taken, batch)
    state = GraphState(t=n_target, n_vertices=n_target, in_degree=indeg,
                       endpoint_pool=pool[:psize], last_vertex=n_target - 1,
                       birth_time=birth)
    return RunResult(model="price",
                     params={"m": spec.m, "k0": spec.k0,
                             "out_degree_law": spec.out_degree_law, "n": n_target},
                     kind="in-degree", state=state, truncated_batches=int(truncated))


# ---------------------------------------------------------------------------
# Barabasi-Albert model, both constructions
# ---------------------------------------------------------------------------


def ba_init() -> GraphState:
    """State at t=1: one vertex with one loop (degree 2)."""
    return GraphState(t=1, n_vertices=1, in_degree=[], endpoint_pool=[0, 0],
                      last_vertex=0, birth_time=[1], degree=[2])


def ba_step_single(state: GraphState, rng: np.random.Generator) -> GraphState:
    """One single-edge BA step: add vertex v and one edge whose endpoint is
    v_j with probability d(v_j,t)/(2t+1), or v itself with 1/(2t+1)."""
    t = state.t
    v = state.n_vertices
    state.endpoint_pool.append(v)  # the newborn's unit share
    size = 2 * t + 1
    idx = min(int(rng.random() * size), size - 1)
    j = state.endpoint_pool[idx]
    state.endpoint_pool.append(j)
    state.degree.append(0)
    if j == v:
        state.degree[v] += 2
    else:
        state.degree[v] += 1
        state.degree[j] += 1
    state.n_vertices += 1
    state.birth_time.append(t + 1)
    state.last_vertex = v
    state.t = t + 1
    return state


def ba_run_single(n_target: int, rng: np.random.Generator,
                  checkpoint_times: Sequence[int] = (), k_limit: int = 512) -> RunResult:
    """Run the single-edge BA process to n_target vertices (= n_target steps)."""
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    pool = np.empty(2 * n_target, dtype=np.int32)
    deg = np.zeros(n_target, dtype=np.int32)
    birth = np.zeros(n_target, dtype=np.int32)
    target = np.empty(n_target, dtype=np.int32)
    cp_ts, cp_counts, cp_v = _prep_checkpoints(checkpoint_times, k_limit, n_target)
    n = _kernels.ba_single_kernel(rng, n_target, pool, deg, birth, target,
                                  cp_ts, cp_counts, cp_v)
    state = GraphState(t=n_target, n_vertices=n, in_degree=[],
                       endpoint_pool=pool, last_vertex=n - 1,
                       birth_time=birth[:n], degree=deg[:n])
    cps = Checkpoints(cp_ts, cp_counts, cp_v) if len(cp_ts) else None
    return RunResult(model="ba", params={"m": 1, "n": n_target}, kind="degree",
                     state=state,
                     events=EventLog("ba", np.ones(n_target, dtype=np.uint8), target),
                     checkpoints=cps)


def ba_run_identified(n_target: int, m: int, rng: np.random.Generator) -> RunResult:
    """BA with m >= 1 via vertex identification: run the single-edge process
    for m*n_target steps, then merge consecutive blocks of m imaginary
    vertices, summing degrees."""
    if n_target < 1 or m < 1:
        raise ValueError("n_target and m must be >= 1")
    single = ba_run_single(m * n_target, rng)
    fine = np.asarray(single.state.degree, dtype=np.int64)
    deg = fine.reshape(n_target, m).sum(axis=1)
    birth = np.asarray(single.state.birth_time)[::m].copy()
    pool = np.asarray(single.state.endpoint_pool) // m  # imaginary -> merged id
    state = GraphState(t=m * n_target, n_vertices=n_target, in_degree=[],
                       endpoint_pool=pool,
                       last_vertex=n_target - 1, birth_time=birth, degree=deg)
    return RunResult(model="ba", params={"m": m, "n": n_target, "identified": True},
                     kind="degree", state=state)


def ba_run_rescaled(n_target: int, m: int, rng: np.random.Generator,
                    checkpoint_nverts: Sequence[int] = (), k_limit: int = 512) -> RunResult:
    """Run the per-edge BA construction to n_target vertices.

    Vertex n arrives bare at t = (n-1)(m+1)+1 and emits m edges at the
    following sub-steps; at each edge the self numerator is degree+1. The
    kernel verifies at every edge that the endpoint pool size equals the
    closed-form denominator and aborts on mismatch.
    """
    if n_target < 1 or m < 1:
        raise ValueError("n_target and m must be >= 1")
    t_total = n_target * (m + 1)
    pool = np.empty(2 * m * n_target, dtype=np.int32)
    deg = np.zeros(n_target, dtype=np.int32)
    birth = np.zeros(n_target, dtype=np.int32)
    is_new = np.empty(t_total, dtype=np.uint8)
    actor = np.empty(t_total, dtype=np.int32)
    cp_ns, cp_counts, cp_v = _prep_checkpoints(checkpoint_nverts, k_limit, n_target)
    n, status = _kernels.ba_rescaled_kernel(rng, n_target, m, pool, deg, birth,
                                            is_new, actor, cp_ns, cp_counts, cp_v)
    if status != _kernels.STATUS_OK:
        raise AssertionError("attachment probabilities failed to normalize: "
                             "pool size disagreed with the denominator")
    state = GraphState(t=t_total, n_vertices=n, in_degree=[],
                       endpoint_pool=pool, last_vertex=n - 1,
                       birth_time=birth[:n], degree=deg[:n])
    cps = Checkpoints(cp_ns, cp_counts, cp_v) if len(cp_ns) else None
    return RunResult(model="ba-rescaled", params={"m": m, "n": n_target},
                     kind="degree", state=state,
                     events=EventLog("ba-rescaled", is_new, actor), checkpoints=cps)


def run_coupled_m1(n_target: int, seed: int,
                   checkpoint_nverts: Sequence[int] = (),
                   k_limit: int = 4096) -> tuple[RunResult, RunResult]:
    """Drive iipa_run(m=1) and ba_run_rescaled(m=1) from the same uniform
    stream. Both consume exactly one uniform per edge event and their
    endpoint pools have identical layouts, so the runs agree pathwise: the
    II-PA in-degree histogram equals the BA degree histogram at every
    complete-vertex checkpoint."""
    a = iipa_run(n_target, 1, make_rng(seed, purpose="couple"),
                 checkpoint_nverts, k_limit)
    b = ba_run_rescaled(n_target, 1, make_rng(seed, purpose="couple"),
                        checkpoint_nverts, k_limit)
    return a, b


def check_state_invariants(result: RunResult) -> None:
    """Assert the conservation and pool-consistency invariants of a run."""
    state = result.state
    pool = np.asarray(state.endpoint_pool)
    if result.kind == "in-degree":
        weights = np.asarray(state.in_degree, dtype=np.int64)
        if result.model in ("simon", "iipa"):
            if weights.sum() != state.t:
                raise AssertionError("in-degree sum != t")
        if np.any(weights < 1):
            raise AssertionError("in-degree below 1")
    else:
        weights = np.asarray(state.degree, dtype=np.int64)
        if result.model == "ba-rescaled":
            m, n = result.params["m"], result.params["n"]
            if weights.sum() != 2 * m * n:
                raise AssertionError("degree sum != 2mn")
        elif weights.sum() != 2 * state.t:
            raise AssertionError("degree sum != 2t")
    counts = np.bincount(pool, minlength=len(weights))
    if not np.array_equal(counts[: len(weights)], weights):
        raise AssertionError("endpoint pool multiplicities disagree with weights")
