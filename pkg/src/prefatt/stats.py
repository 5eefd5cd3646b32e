"""Statistics over simulation output: histograms, distribution distances,
tail fits, waiting-time extraction, and concentration measurements.

The waiting-time transform is the log-time change of clock
z = ln(1 + x / (epoch - 1)): measured from a late epoch, the transformed
wait between in-degree k and k+1 in the Simon model is approximately
exponential with rate (1-alpha)k, and the transformed wait between
successive descendants of a tracked vertex is approximately exponential
with rate k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .models import ModelSpec, RunResult, simon_run
from .rng import make_rng
from .theory import TheoryPmf

__all__ = [
    "DegreeHistogram",
    "FitReport",
    "WAITING_TIME_DTYPE",
    "histogram",
    "histogram_from_sizes",
    "histogram_from_checkpoint",
    "total_variation",
    "tail_slope",
    "collect_waiting_times",
    "collect_descendant_waiting_times",
    "ks_statistic",
    "fit_exponential_rate",
    "concentration_scan",
]

WAITING_TIME_DTYPE = np.dtype([
    ("vertex", np.int64),
    ("k", np.int64),
    ("x", np.int64),
    ("epoch", np.int64),
    ("z", np.float64),
    ("rate", np.float64),
])


@dataclass
class DegreeHistogram:
    """Sparse-in-spirit weight histogram stored as a dense count array.

    counts[k] is the number of vertices with weight k; `beyond` counts
    vertices whose weight exceeded the array (only possible for snapshots
    taken with a k_limit).
    """

    counts: np.ndarray
    n_vertices: int
    t: float | None
    kind: str  # in-degree | degree | size
    beyond: int = 0

    def as_dict(self) -> dict:
        return {int(k): int(self.counts[k])
                for k in np.flatnonzero(self.counts)}

    def probabilities(self, k_cap: int) -> tuple[np.ndarray, float]:
        """(p_hat[1..k_cap], tail fraction beyond k_cap)."""
        if self.n_vertices < 1:
            raise ValueError("empty histogram")
        p = np.zeros(k_cap + 1)
        upto = min(k_cap, len(self.counts) - 1)
        p[1:upto + 1] = self.counts[1:upto + 1] / self.n_vertices
        tail = 1.0 - p.sum()
        return p, max(tail, 0.0)

    def check_totals(self) -> None:
        total = int(self.counts.sum()) + self.beyond
        if total != self.n_vertices:
            raise AssertionError("histogram counts do not sum to the vertex count")


def histogram(run: RunResult) -> DegreeHistogram:
    """Exact weight histogram of a completed run."""
    state = run.state
    weights = state.in_degree if run.kind == "in-degree" else state.degree
    weights = np.asarray(weights, dtype=np.int64)
    counts = np.bincount(weights)
    return DegreeHistogram(counts.astype(np.int64), int(len(weights)),
                           float(state.t), run.kind)


def histogram_from_sizes(sizes: np.ndarray, horizon: float | None = None) -> DegreeHistogram:
    """Histogram of genus sizes from a Yule run."""
    sizes = np.asarray(sizes, dtype=np.int64)
    counts = np.bincount(sizes)
    return DegreeHistogram(counts, int(len(sizes)), horizon, "size")


def histogram_from_checkpoint(run: RunResult, index: int) -> DegreeHistogram:
    """Histogram snapshot recorded during a run (resolution-limited)."""
    cp = run.checkpoints
    if cp is None:
        raise ValueError("run has no checkpoints")
    row = cp.counts[index]
    k_limit = cp.k_limit
    return DegreeHistogram(row[:k_limit + 1].copy(), int(cp.vcounts[index]),
                           float(cp.times[index]), run.kind,
                           beyond=int(row[k_limit + 1]))


@dataclass
class FitReport:
    """One computed statistic with its threshold decision."""

    statistic: str  # TV | KS | slope
    value: float
    sample_size: int
    threshold: object = None
    passed: bool | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "value": self.value,
                "sample_size": self.sample_size,
                "threshold": self.threshold, "passed": self.passed,
                "detail": self.detail}


def _distribution_head(obj, k_cap: int):
    """(p[0..k_cap], tail mass, sample size) of a histogram or a pmf."""
    if isinstance(obj, DegreeHistogram):
        p, tail = obj.probabilities(k_cap)
        return p, tail, obj.n_vertices
    ks = np.arange(1, k_cap + 1)
    q = np.zeros(k_cap + 1)
    mask = ks >= obj.k_min
    q[1:][mask] = obj.pmf(ks[mask])
    return q, obj.tail_mass(k_cap), 0


def total_variation(empirical: "DegreeHistogram | TheoryPmf",
                    reference: "TheoryPmf | DegreeHistogram",
                    k_cap: int = 200,
                    threshold: float | None = None) -> FitReport:
    """Total variation distance on classes {1..k_cap, beyond}.

    Half the L1 difference over k <= k_cap plus the tail-mass discrepancy,
    the latter also reported separately as `remainder`. Either side may be
    an empirical histogram or a closed-form pmf; the distance is symmetric
    in its two distribution arguments.
    """
    if k_cap < 1:
        raise ValueError("k_cap must be >= 1")
    p, p_tail, n_emp = _distribution_head(empirical, k_cap)
    q, q_tail, n_ref = _distribution_head(reference, k_cap)
    rem = 0.5 * abs(p_tail - q_tail)
    value = 0.5 * float(np.abs(p - q).sum()) + rem
    passed = None if threshold is None else bool(value <= threshold)
    return FitReport("TV", value, n_emp or n_ref, threshold, passed,
                     detail={"remainder": rem, "k_cap": k_cap})


def tail_slope(hist: DegreeHistogram, k_lo: int, k_hi: int,
               bounds: tuple[float, float] | None = None) -> FitReport:
    """Least-squares slope of log frequency against log k over the occupied
    bins in [k_lo, k_hi]. Fewer than 5 occupied bins is an error."""
    if not 1 <= k_lo < k_hi:
        raise ValueError("need 1 <= k_lo < k_hi")
    hi = min(k_hi, len(hist.counts) - 1)
    ks = np.arange(k_lo, hi + 1)
    counts = hist.counts[k_lo:hi + 1].astype(np.float64)
    occupied = counts > 0
    if int(occupied.sum()) < 5:
        raise ValueError("fewer than 5 occupied bins in the fit range")
    x = np.log(ks[occupied])
    y = np.log(counts[occupied] / hist.n_vertices)
    slope, _ = np.polyfit(x, y, 1)
    passed = None if bounds is None else bool(bounds[0] <= slope <= bounds[1])
    return FitReport("slope", float(slope), int(occupied.sum()),
                     list(bounds) if bounds else None, passed,
                     detail={"k_lo": k_lo, "k_hi": k_hi})


def _group_waits(ids: np.ndarray, times: np.ndarray, first_epoch: np.ndarray):
    """Per-id consecutive waits. `ids`/`times` sorted by (id, time);
    first_epoch[i] is the level-0 epoch of ids[i]."""
    n = len(ids)
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]]) if n else np.array([], np.int64)
    prev = np.empty(n, dtype=np.int64)
    if n:
        prev[1:] = times[:-1]
        prev[starts] = first_epoch[starts]
    lengths = np.diff(np.r_[starts, n])
    k = np.arange(n, dtype=np.int64) - np.repeat(starts, lengths) + 1
    return k, prev


def collect_waiting_times(run: RunResult, alpha: float, t_star: int) -> np.ndarray:
    """Waiting-time samples of in-degree growth for vertices born at or
    after t_star.

    For each observed increment from in-degree k to k+1 of such a vertex,
    emits (vertex, k, raw wait x, epoch t at which level k was reached,
    z = ln(1 + x/(epoch-1)), rate (1-alpha)k). Possibly empty.
    """
    if t_star < 2:
        raise ValueError("t_star must be >= 2")
    if run.events is None:
        raise ValueError("run carries no event log")
    is_new = run.events.is_new.astype(bool)
    actor = run.events.actor.astype(np.int64)
    birth = np.asarray(run.state.birth_time, dtype=np.int64)
    times = np.arange(1, len(actor) + 1, dtype=np.int64)
    tgt = actor[~is_new]
    ets = times[~is_new]
    order = np.argsort(tgt, kind="stable")
    tgt, ets = tgt[order], ets[order]
    k, prev = _group_waits(tgt, ets, birth[tgt])
    keep = birth[tgt] >= t_star
    out = np.empty(int(keep.sum()), dtype=WAITING_TIME_DTYPE)
    out["vertex"] = tgt[keep]
    out["k"] = k[keep]
    out["epoch"] = prev[keep]
    out["x"] = ets[keep] - prev[keep]
    out["z"] = np.log1p(out["x"] / (out["epoch"] - 1.0))
    out["rate"] = (1.0 - alpha) * out["k"]
    return out


def collect_descendant_waiting_times(run: RunResult, t_star: int) -> np.ndarray:
    """Waiting-time samples of the descendant processes of a genealogy run.

    Roots are the vertices alive at time t_star; their level-0 epoch is
    t_star itself. For root j, the wait between the k-th and (k+1)-th
    descendant is transformed with z = ln(1 + y/(epoch-1)); the target rate
    is k, independent of alpha.
    """
    if run.parent is None:
        raise ValueError("run has no genealogy (use simon_run_with_genealogy)")
    if t_star < 2:
        raise ValueError("t_star must be >= 2")
    parent = np.asarray(run.parent, dtype=np.int32)
    birth = np.asarray(run.state.birth_time, dtype=np.int64)
    root = np.empty(len(parent), dtype=np.int32)
    _kernels.resolve_roots_kernel(parent, birth, t_star, root)
    mask = birth > t_star
    d_root = root[mask].astype(np.int64)
    d_birth = birth[mask]
    order = np.lexsort((d_birth, d_root))
    d_root, d_birth = d_root[order], d_birth[order]
    k, prev = _group_waits(d_root, d_birth,
                           np.full(len(d_root), t_star, dtype=np.int64))
    out = np.empty(len(d_root), dtype=WAITING_TIME_DTYPE)
    out["vertex"] = d_root
    out["k"] = k
    out["epoch"] = prev
    out["x"] = d_birth - prev
    out["z"] = np.log1p(out["x"] / (out["epoch"] - 1.0))
    out["rate"] = out["k"]
    return out


def ks_statistic(z_samples, rate: float, threshold: float | None = None) -> FitReport:
    """One-sample Kolmogorov-Smirnov distance of the samples against the
    Exponential(rate) CDF. Requires at least 100 samples."""
    z = np.sort(np.asarray(z_samples, dtype=np.float64))
    n = len(z)
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    if rate <= 0:
        raise ValueError("rate must be positive")
    cdf = -np.expm1(-rate * z)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - cdf)), float(np.max(cdf - (i - 1) / n)))
    passed = None if threshold is None else bool(d <= threshold)
    return FitReport("KS", d, n, threshold, passed, detail={"rate": rate})


def fit_exponential_rate(z_samples) -> float:
    """Maximum-likelihood exponential rate, 1/mean."""
    z = np.asarray(z_samples, dtype=np.float64)
    if len(z) == 0 or z.mean() <= 0:
        raise ValueError("need positive samples")
    return float(1.0 / z.mean())


def concentration_scan(spec: ModelSpec, k: int, t_list, n_seeds: int,
                       seed: int = 0) -> list[tuple[int, float]]:
    """Across-seed standard deviation of N_k(t)/t at each t in t_list.

    Each seed runs one Simon trajectory to max(t_list) with checkpoint
    snapshots, so the values at different t come from the same path, as in
    a concentration experiment.
    """
    if spec.model != "simon":
        raise ValueError("concentration scan is defined for the simon model")
    if n_seeds < 50:
        raise ValueError("need at least 50 seeds")
    t_list = sorted(int(t) for t in t_list)
    k_limit = max(k + 1, 8)
    vals = np.zeros((n_seeds, len(t_list)))
    for r in range(n_seeds):
        rng = make_rng(seed, replica=r, purpose="concentration")
        res = simon_run(max(t_list), spec.alpha, rng,
                        checkpoint_times=t_list, k_limit=k_limit)
        for i, t in enumerate(t_list):
            vals[r, i] = res.checkpoints.counts[i, k] / t
    return [(t, float(np.std(vals[:, i], ddof=1)))
            for i, t in enumerate(t_list)]
