"""Closed-form limit distributions, exact finite-time expectation
recurrences, and a brute-force trajectory enumerator for tiny instances.

All four discrete models share the Yule-Simon limit family
rho * B(k, 1+rho): Simon with rho = 1/(1-alpha), II-PA and Price with
rho = 1 + 1/m, and the Yule genus-size limit with rho = beta/lambda. The
Barabasi-Albert degree limit is 2m(m+1)/(k(k+1)(k+2)) on k >= m.

Everything here is deterministic; the enumerator and the recurrences are
two independent exact routes to the same finite-time expectations and are
cross-checked in the tests.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .models import ResourceCapError

__all__ = [
    "TheoryPmf",
    "simon_limit_pmf",
    "iipa_limit_pmf",
    "price_limit_pmf",
    "ba_limit_pmf",
    "yule_limit_pmf",
    "yule_fixed_genus_pmf",
    "theory_pmf",
    "ExpectationTable",
    "simon_expected",
    "iipa_expected",
    "price_expected",
    "ba_expected",
    "ExactDistribution",
    "enumerate_exact",
    "product_asymptotic_check",
    "pack_multiset",
]

ENUMERATION_STEP_CAP = 12


# ---------------------------------------------------------------------------
# Limit distributions
# ---------------------------------------------------------------------------


def _yule_simon(k, rho: float):
    k = np.asarray(k, dtype=np.float64)
    return rho * np.exp(gammaln(k) + gammaln(1.0 + rho) - gammaln(k + 1.0 + rho))


def _check_k(k, k_min: int):
    k = np.asarray(k)
    if not np.issubdtype(k.dtype, np.number) or np.any(k < k_min):
        raise ValueError(f"k must be >= {k_min}")
    return k


def simon_limit_pmf(k, alpha: float):
    """Limit in-degree pmf of the Simon model: (1/(1-alpha)) B(k, 1+1/(1-alpha))."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    _check_k(k, 1)
    out = _yule_simon(k, 1.0 / (1.0 - alpha))
    return float(out) if np.ndim(k) == 0 else out


def iipa_limit_pmf(k, m: int):
    """Limit in-degree pmf of the II-PA model: (1+1/m) B(k, 2+1/m)."""
    if m < 1 or int(m) != m:
        raise ValueError("m must be an integer >= 1")
    _check_k(k, 1)
    out = _yule_simon(k, 1.0 + 1.0 / m)
    return float(out) if np.ndim(k) == 0 else out


def price_limit_pmf(k, m: float):
    """Limit in-degree pmf of the Price model; m is the mean out-degree
    (any positive rational)."""
    if m <= 0:
        raise ValueError("m must be positive")
    _check_k(k, 1)
    out = _yule_simon(k, 1.0 + 1.0 / m)
    return float(out) if np.ndim(k) == 0 else out


def ba_limit_pmf(k, m: int):
    """Limit degree pmf of the Barabasi-Albert model:
    2m(m+1)/(k(k+1)(k+2)) on support k >= m."""
    if m < 1 or int(m) != m:
        raise ValueError("m must be an integer >= 1")
    k = np.asarray(_check_k(k, m), dtype=np.float64)
    out = 2.0 * m * (m + 1) / (k * (k + 1.0) * (k + 2.0))
    return float(out) if np.ndim(k) == 0 else out


def yule_limit_pmf(k, rho: float):
    """Limit pmf of the size of a uniformly chosen genus: rho B(k, 1+rho),
    with rho = beta/lambda."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    _check_k(k, 1)
    out = _yule_simon(k, rho)
    return float(out) if np.ndim(k) == 0 else out


def yule_fixed_genus_pmf(k, lam: float, elapsed: float):
    """Size law of one genus a fixed duration after its birth:
    geometric, e^(-lam*s) (1 - e^(-lam*s))^(k-1)."""
    if lam <= 0 or elapsed < 0:
        raise ValueError("need lam > 0 and elapsed >= 0")
    k = np.asarray(_check_k(k, 1), dtype=np.float64)
    p = np.exp(-lam * elapsed)
    out = p * (1.0 - p) ** (k - 1.0)
    return float(out) if np.ndim(k) == 0 else out


@dataclass
class TheoryPmf:
    """Evaluated closed-form limit pmf for one model."""

    model: str
    params: dict
    k_min: int
    kind: str  # in-degree | degree | size

    def pmf(self, k):
        if self.model == "simon":
            return simon_limit_pmf(k, self.params["alpha"])
        if self.model == "iipa":
            return iipa_limit_pmf(k, self.params["m"])
        if self.model == "price":
            return price_limit_pmf(k, self.params["m"])
        if self.model in ("ba", "ba-rescaled"):
            return ba_limit_pmf(k, self.params["m"])
        if self.model == "yule":
            return yule_limit_pmf(k, self.params["rho"])
        raise ValueError(f"no closed form for {self.model!r}")

    def tail_mass(self, k_cap: int) -> float:
        """Probability mass beyond k_cap (exact complement of the partial sum)."""
        ks = np.arange(self.k_min, k_cap + 1)
        return float(max(0.0, 1.0 - self.pmf(ks).sum()))

    @property
    def tail_exponent(self) -> float:
        """Power-law exponent gamma of the pmf tail, pmf(k) ~ C k^-gamma."""
        if self.model in ("ba", "ba-rescaled"):
            return 3.0
        if self.model == "simon":
            return 1.0 + 1.0 / (1.0 - self.params["alpha"])
        if self.model in ("iipa", "price"):
            return 2.0 + 1.0 / self.params["m"]
        return 1.0 + self.params["rho"]


def theory_pmf(model: str, *, alpha: float | None = None, m: float | None = None,
               rho: float | None = None) -> TheoryPmf:
    """Factory used by the CLI and tests."""
    if model == "simon":
        simon_limit_pmf(1, alpha)
        return TheoryPmf("simon", {"alpha": alpha}, 1, "in-degree")
    if model == "iipa":
        iipa_limit_pmf(1, m)
        return TheoryPmf("iipa", {"m": int(m)}, 1, "in-degree")
    if model == "price":
        price_limit_pmf(1, m)
        return TheoryPmf("price", {"m": m}, 1, "in-degree")
    if model in ("ba", "ba-rescaled"):
        ba_limit_pmf(int(m), m)
        return TheoryPmf("ba", {"m": int(m)}, int(m), "degree")
    if model == "yule":
        yule_limit_pmf(1, rho)
        return TheoryPmf("yule", {"rho": rho}, 1, "size")
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Exact expectation recurrences (master equations iterated step by step)
# ---------------------------------------------------------------------------


@dataclass
class ExpectationTable:
    """Expected class counts E N_k on a dense grid k <= k_max.

    Mass beyond k_max is tracked exactly in two spill accumulators (vertex
    count and weight mass), so the conservation identities hold on the full
    table: sum_k k E N_k + spill_mass equals the total attachment weight.
    """

    model: str
    params: dict
    index_name: str
    index: np.ndarray
    values: np.ndarray      # [len(index), k_max+1]; column 0 unused
    spill_count: np.ndarray
    spill_mass: np.ndarray
    k_max: int

    def row(self, at: int) -> np.ndarray:
        pos = np.searchsorted(self.index, at)
        if pos >= len(self.index) or self.index[pos] != at:
            raise KeyError(f"{self.index_name}={at} was not recorded")
        return self.values[pos]

    def expectation(self, k: int, at: int) -> float:
        if k > self.k_max:
            raise KeyError(f"k={k} beyond dense range {self.k_max}")
        return float(self.row(at)[k])


def _record_grid(index_request, upper: int) -> np.ndarray:
    if index_request is None:
        if upper > 8192:
            raise ValueError("full grid beyond 8192 rows; pass record_at")
        return np.arange(1, upper + 1, dtype=np.int64)
    idx = np.asarray(sorted(set(int(i) for i in index_request)), dtype=np.int64)
    if len(idx) == 0 or idx[0] < 1 or idx[-1] > upper:
        raise ValueError(f"record_at must lie in [1, {upper}]")
    return idx


class _Expectations:
    """Shared state for step-by-step master-equation iteration."""

    def __init__(self, k_max: int):
        self.k_max = k_max
        self.n = np.zeros(k_max + 1)
        self.karr = np.arange(k_max + 1, dtype=np.float64)
        self.spill_count = 0.0
        self.spill_mass = 0.0

    def edge_event(self, coeff: float):
        """One attachment drawn proportional to weight: flux coeff*k*N_k
        out of every class k (promotion k -> k+1)."""
        flux = coeff * self.karr * self.n
        spill_in = flux[self.k_max]
        self.spill_mass += spill_in * (self.k_max + 1) + coeff * self.spill_mass
        self.spill_count += spill_in
        self.n -= flux
        self.n[2:] += flux[1:-1]

    def totals(self):
        count = self.n[1:].sum() + self.spill_count
        mass = (self.karr * self.n).sum() + self.spill_mass
        return count, mass


def simon_expected(t_max: int, k_max: int, alpha: float,
                   record_at=None) -> ExpectationTable:
    """Exact iteration of the Simon master equations:
    E N_1,t+1 = alpha + (1 - (1-alpha)/t) E N_1,t and
    E N_k,t+1 = ((1-alpha)/t)[(k-1)E N_{k-1,t} - k E N_k,t] + E N_k,t.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if t_max < 1 or k_max < 1:
        raise ValueError("t_max and k_max must be >= 1")
    idx = _record_grid(record_at, t_max)
    st = _Expectations(k_max)
    st.n[1] = 1.0
    rows = np.zeros((len(idx), k_max + 1))
    sc = np.zeros(len(idx))
    sm = np.zeros(len(idx))
    pos = 0
    if idx[0] == 1:
        rows[0] = st.n
        pos = 1
    for t in range(1, t_max):
        st.edge_event((1.0 - alpha) / t)
        st.n[1] += alpha
        if pos < len(idx) and idx[pos] == t + 1:
            rows[pos] = st.n
            sc[pos], sm[pos] = st.spill_count, st.spill_mass
            pos += 1
    return ExpectationTable("simon", {"alpha": alpha}, "t", idx, rows, sc, sm, k_max)


def iipa_expected(n_max: int, k_max: int, m: int, record_at=None) -> ExpectationTable:
    """Exact II-PA expectations iterated at sub-step granularity.

    Vertex creation adds one unit to class 1 deterministically; each edge
    event at time tau promotes class k with flux k E N_k / (tau - 1). Rows
    are recorded at complete-vertex counts n (time n(m+1)).
    """
    if n_max < 1 or k_max < 1 or m < 1:
        raise ValueError("n_max, k_max and m must be >= 1")
    idx = _record_grid(record_at, n_max)
    period = m + 1
    st = _Expectations(k_max)
    st.n[1] = 1.0
    rows = np.zeros((len(idx), k_max + 1))
    sc = np.zeros(len(idx))
    sm = np.zeros(len(idx))
    pos = 0
    for tau in range(2, n_max * period + 1):
        if (tau - 1) % period == 0:
            st.n[1] += 1.0
        else:
            st.edge_event(1.0 / (tau - 1))
        if tau % period == 0 and pos < len(idx) and idx[pos] == tau // period:
            rows[pos] = st.n
            sc[pos], sm[pos] = st.spill_count, st.spill_mass
            pos += 1
    return ExpectationTable("iipa", {"m": m}, "n", idx, rows, sc, sm, k_max)


def price_expected(n_max: int, k_max: int, m: int, k0: int = 1,
                   out_degree_law: str = "constant",
                   record_at=None) -> ExpectationTable:
    """Iterate the Price expectation equations with constant out-degree m
    and k0 = 1: per batch, class k loses flux m k E N_k / (n(1+m)) and the
    newborn adds one unit to class 1.

    These equations treat the batch linearly, so they are exact only for
    m = 1; for m > 1 they carry the asymptotically vanishing batch
    correction and can even leave [0, 1]-feasible ranges at very small n
    (the brute-force enumerator is the exact oracle there).
    """
    if k0 != 1:
        raise ValueError("the expectation recurrence covers k0 = 1 only")
    if out_degree_law != "constant":
        raise ValueError("exact iteration requires the constant out-degree law "
                         "(random laws with infinite support are rejected)")
    if m < 1 or int(m) != m:
        raise ValueError("constant out-degree law requires integer m >= 1")
    idx = _record_grid(record_at, n_max)
    st = _Expectations(k_max)
    if m + 1 <= k_max:
        st.n[m + 1] = 1.0
    rows = np.zeros((len(idx), k_max + 1))
    sc = np.zeros(len(idx))
    sm = np.zeros(len(idx))
    pos = 0
    if idx[0] == 1:
        rows[0] = st.n
        pos = 1
    for n in range(1, n_max):
        st.edge_event(float(m) / (n * (1.0 + m)))
        st.n[1] += 1.0
        if pos < len(idx) and idx[pos] == n + 1:
            rows[pos] = st.n
            sc[pos], sm[pos] = st.spill_count, st.spill_mass
            pos += 1
    return ExpectationTable("price", {"m": m, "k0": k0}, "n", idx, rows, sc, sm, k_max)


def ba_expected(t_max: int, k_max: int, record_at=None) -> ExpectationTable:
    """Exact degree-class expectations for the single-edge BA process.

    Step t -> t+1: old class k loses flux k E N_k / (2t+1); the newborn
    lands in class 1 with probability 1 - 1/(2t+1) and in class 2 (its own
    loop) with probability 1/(2t+1).
    """
    if t_max < 1 or k_max < 2:
        raise ValueError("t_max must be >= 1 and k_max >= 2")
    idx = _record_grid(record_at, t_max)
    st = _Expectations(k_max)
    st.n[2] = 1.0
    rows = np.zeros((len(idx), k_max + 1))
    sc = np.zeros(len(idx))
    sm = np.zeros(len(idx))
    pos = 0
    if idx[0] == 1:
        rows[0] = st.n
        pos = 1
    for t in range(1, t_max):
        c = 1.0 / (2.0 * t + 1.0)
        st.edge_event(c)
        st.n[1] += 1.0 - c
        st.n[2] += c
        if pos < len(idx) and idx[pos] == t + 1:
            rows[pos] = st.n
            sc[pos], sm[pos] = st.spill_count, st.spill_mass
            pos += 1
    return ExpectationTable("ba", {"m": 1}, "t", idx, rows, sc, sm, k_max)


# ---------------------------------------------------------------------------
# Brute-force exact enumeration of tiny instances
# ---------------------------------------------------------------------------


def pack_multiset(values) -> int:
    """Pack a weight multiset into the same 5-bit key the Monte Carlo
    kernels emit (values must be <= 31, count <= 12)."""
    key = 0
    for v in sorted(values):
        key = (key << 5) | int(v)
    return key


def _promote(ms: tuple, k: int) -> tuple:
    out = list(ms)
    out[out.index(k)] = k + 1
    return tuple(sorted(out))


def _check_branch_sum(total: float):
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"branch probabilities sum to {total!r}")


@dataclass
class ExactDistribution:
    """Exact terminal law of the weight histogram of a tiny run."""

    model: str
    params: dict
    outcomes: dict  # sorted multiset tuple -> probability

    def packed(self) -> dict:
        return {pack_multiset(ms): p for ms, p in self.outcomes.items()}

    def expectation(self, k: int) -> float:
        """Exact E N_k at the terminal time."""
        return sum(p * ms.count(k) for ms, p in self.outcomes.items())

    def expectations(self, k_max: int) -> np.ndarray:
        out = np.zeros(k_max + 1)
        for k in range(1, k_max + 1):
            out[k] = self.expectation(k)
        return out

    def total_probability(self) -> float:
        return sum(self.outcomes.values())


def _enum_simon(t_target: int, alpha: float) -> dict:
    states = {(1,): 1.0}
    for t in range(1, t_target):
        nxt: dict = defaultdict(float)
        for ms, p in states.items():
            total = alpha
            nxt[tuple(sorted(ms + (1,)))] += p * alpha
            for k, cnt in Counter(ms).items():
                q = (1.0 - alpha) * k * cnt / t
                total += q
                nxt[_promote(ms, k)] += p * q
            _check_branch_sum(total)
        states = dict(nxt)
    return states


def _enum_iipa(n_target: int, m: int) -> dict:
    period = m + 1
    states = {(1,): 1.0}
    for tau in range(2, n_target * period + 1):
        nxt: dict = defaultdict(float)
        if (tau - 1) % period == 0:
            for ms, p in states.items():
                nxt[tuple(sorted(ms + (1,)))] += p
        else:
            denom = tau - 1
            for ms, p in states.items():
                total = 0.0
                for k, cnt in Counter(ms).items():
                    q = k * cnt / denom
                    total += q
                    nxt[_promote(ms, k)] += p * q
                _check_branch_sum(total)
        states = dict(nxt)
    return states


def _enum_ba_single(t_target: int) -> dict:
    states = {(2,): 1.0}
    for t in range(1, t_target):
        denom = 2 * t + 1
        nxt: dict = defaultdict(float)
        for ms, p in states.items():
            total = 1.0 / denom
            nxt[tuple(sorted(ms + (2,)))] += p / denom  # newborn self-loop
            for k, cnt in Counter(ms).items():
                q = k * cnt / denom
                total += q
                nxt[tuple(sorted(_promote(ms, k) + (1,)))] += p * q
            _check_branch_sum(total)
        states = dict(nxt)
    return states


def _enum_ba_rescaled(n_target: int, m: int) -> dict:
    # state: (multiset of earlier vertices' degrees, degree of the vertex
    # currently emitting edges)
    period = m + 1
    states = {((), 0): 1.0}
    for tau in range(2, n_target * period + 1):
        nxt: dict = defaultdict(float)
        if (tau - 1) % period == 0:
            for (ms, d), p in states.items():
                nxt[(tuple(sorted(ms + (d,))), 0)] += p
        else:
            for (ms, d), p in states.items():
                denom = sum(ms) + d + 1
                total = (d + 1.0) / denom
                nxt[(ms, d + 2)] += p * (d + 1.0) / denom
                for k, cnt in Counter(ms).items():
                    q = k * cnt / denom
                    total += q
                    nxt[(_promote(ms, k), d + 1)] += p * q
                _check_branch_sum(total)
        states = dict(nxt)
    folded: dict = defaultdict(float)
    for (ms, d), p in states.items():
        folded[tuple(sorted(ms + (d,)))] += p
    return dict(folded)


def _price_batch_laws(ms: tuple, take: int) -> dict:
    """Law of the multiset of classes promoted by one batch of `take`
    distinct draws proportional to frozen weights (duplicate draws rejected,
    which renormalizes each successive draw over the unchosen vertices)."""
    out: dict = defaultdict(float)

    def rec(avail: Counter, w_left: float, picked: tuple, prob: float, depth: int):
        if depth == take:
            out[tuple(sorted(picked))] += prob
            return
        total = 0.0
        for k in sorted(avail):
            cnt = avail[k]
            if cnt == 0:
                continue
            q = k * cnt / w_left
            total += q
            avail[k] -= 1
            rec(avail, w_left - k, picked + (k,), prob * q, depth + 1)
            avail[k] += 1
        _check_branch_sum(total)

    rec(Counter(ms), float(sum(ms)), (), 1.0, 0)
    return out


def _enum_price(n_target: int, m: int, k0: int) -> dict:
    states = {(m + k0,): 1.0}
    for n in range(1, n_target):
        nxt: dict = defaultdict(float)
        for ms, p in states.items():
            take = min(m, len(ms))
            for picked, q in _price_batch_laws(ms, take).items():
                new_ms = ms
                for k in sorted(picked, reverse=True):
                    new_ms = _promote(new_ms, k)
                nxt[tuple(sorted(new_ms + (k0,)))] += p * q
        states = dict(nxt)
    return states


def enumerate_exact(model: str, *, t_target: int | None = None,
                    n_target: int | None = None, alpha: float | None = None,
                    m: int | None = None, k0: int = 1) -> ExactDistribution:
    """Depth-complete enumeration of every trajectory of a tiny instance.

    Returns the exact distribution of the terminal weight histogram. The
    total number of elementary events is capped at ENUMERATION_STEP_CAP.
    """
    if model == "simon":
        events, params = t_target, {"alpha": alpha, "t": t_target}
    elif model == "ba":
        events, params = t_target, {"m": 1, "t": t_target}
    elif model in ("iipa", "ba-rescaled"):
        events, params = n_target * (m + 1), {"m": m, "n": n_target}
    elif model == "price":
        events, params = n_target * (k0 + m), {"m": m, "k0": k0, "n": n_target}
    else:
        raise ValueError(f"unknown model {model!r}")
    if events > ENUMERATION_STEP_CAP:
        raise ResourceCapError(
            f"{events} elementary events exceed the enumeration cap "
            f"({ENUMERATION_STEP_CAP})")
    if model == "simon":
        outcomes = _enum_simon(t_target, alpha)
    elif model == "iipa":
        outcomes = _enum_iipa(n_target, m)
    elif model == "ba":
        outcomes = _enum_ba_single(t_target)
    elif model == "ba-rescaled":
        outcomes = _enum_ba_rescaled(n_target, m)
    else:
        outcomes = _enum_price(n_target, m, k0)
    dist = ExactDistribution(model, params, dict(outcomes))
    if abs(dist.total_probability() - 1.0) > 1e-12:
        raise AssertionError("outcome probabilities do not sum to 1")
    return dist


# ---------------------------------------------------------------------------
# Product asymptotics
# ---------------------------------------------------------------------------


def product_asymptotic_check(s: int, t: int, b: float):
    """Compare prod_{r=s+1}^{t} (1 - b/r) with (s/t)^b.

    Returns (exact, approximation, relative_error). Requires |b|/r < 1 over
    the whole range, i.e. |b| < s + 1.
    """
    if s < 1 or t < s:
        raise ValueError("need 1 <= s <= t")
    if abs(b) >= s + 1:
        raise ValueError("need |b/r| < 1 for all r in (s, t]")
    exact = 1.0
    for r in range(s + 1, t + 1):
        exact *= 1.0 - b / r
    approx = (s / t) ** b
    rel = abs(exact - approx) / approx
    return exact, approx, rel
