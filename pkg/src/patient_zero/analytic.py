"""Closed-form success probabilities and path-length distributions.

Covers the red-blue tree path counts (total and by household class), the
LS and LS+ success formulas given a path-length distribution, the expected
profile of the random exponential tree (RET), the stopped deterministic
exponential tree (DET) path-length law, and the back-of-the-envelope
estimate.  Monte Carlo RET samplers are included as oracles for the
profile and path-length formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .network import ParameterError

TAIL_TOL = 1e-9


def p_cond(p_a: float, p_h: float) -> float:
    """Probability that an infected node is asymptomatic given it is not
    hospitalized."""
    denom = p_a + (1.0 - p_a) * (1.0 - p_h)
    if denom <= 0:
        raise ParameterError("conditional probability undefined for p_a=0, p_h=1")
    return p_a / denom


# --- red-blue path counting ----------------------------------------------

class _Surd:
    """Exact ``a + b*sqrt(m)`` with rational ``a, b`` and squarefree-ish ``m``
    that is not a perfect square."""

    __slots__ = ("a", "b", "m")

    def __init__(self, a, b, m):
        self.a, self.b, self.m = Fraction(a), Fraction(b), m

    def _coerce(self, other):
        return other if isinstance(other, _Surd) else _Surd(other, 0, self.m)

    def __add__(self, other):
        o = self._coerce(other)
        return _Surd(self.a + o.a, self.b + o.b, self.m)

    __radd__ = __add__

    def __neg__(self):
        return _Surd(-self.a, -self.b, self.m)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return _Surd(self.a * o.a + self.b * o.b * self.m, self.a * o.b + self.b * o.a, self.m)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        norm = o.a * o.a - o.b * o.b * self.m
        return self * _Surd(o.a / norm, -o.b / norm, self.m)

    def __pow__(self, n: int):
        out, base = _Surd(1, 0, self.m), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


@dataclass(frozen=True)
class RBTreeParams:
    d_c: int
    d_h: int

    def __post_init__(self):
        if self.d_c < 1 or self.d_h < 0:
            raise ParameterError(f"invalid red-blue tree parameters d_c={self.d_c}, d_h={self.d_h}")

    @property
    def D(self) -> float:
        return math.sqrt((self.d_c - 1) ** 2 + 4 * self.d_c * self.d_h)

    @property
    def t1(self) -> float:
        return (self.d_c - 1 + self.D) / 2

    @property
    def t2(self) -> float:
        return (self.d_c - 1 - self.D) / 2

    @property
    def lam1(self) -> float:
        d_c, d_h, D = self.d_c, self.d_h, self.D
        return (d_c + 1 + D) * (2 * d_h + d_c - 1 + D) / (2 * D * (d_c - 1 + D))

    @property
    def lam2(self) -> float:
        d_c, d_h, D = self.d_c, self.d_h, self.D
        return (D - d_c - 1) * (2 * d_h + d_c - 1 - D) / (2 * D * (d_c - 1 - D))

    def _exact_terms(self):
        d_c, d_h = self.d_c, self.d_h
        m = (d_c - 1) ** 2 + 4 * d_c * d_h
        r = math.isqrt(m)
        D = Fraction(r) if r * r == m else _Surd(0, 1, m)
        lam1 = (d_c + 1 + D) * (2 * d_h + d_c - 1 + D) / (2 * D * (d_c - 1 + D))
        lam2 = (D - d_c - 1) * (2 * d_h + d_c - 1 - D) / (2 * D * (d_c - 1 - D))
        return lam1, (d_c - 1 + D) / 2, lam2, (d_c - 1 - D) / 2


def _rb(params) -> RBTreeParams:
    return params if isinstance(params, RBTreeParams) else RBTreeParams(params.d_c, params.d_h)


def rb_path_count(n: int, params, exact: bool = False):
    """Number of downward red-blue paths of length ``n`` from the root,
    by the two-root closed form.

    ``exact=True`` evaluates the closed form in exact arithmetic over
    Q(sqrt(D^2)) and returns an ``int``.
    """
    if n < 0:
        raise ValueError("path length must be nonnegative")
    rb = _rb(params)
    if n == 0:
        return 1
    if rb.d_h == 0:
        # the second root collapses; every path is a chain of red nodes
        return rb.d_c * (rb.d_c - 1) ** (n - 1)
    if not exact:
        return rb.lam1 * rb.t1 ** n + rb.lam2 * rb.t2 ** n
    lam1, t1, lam2, t2 = rb._exact_terms()
    value = lam1 * t1 ** n + lam2 * t2 ** n
    if isinstance(value, _Surd):
        if value.b != 0:
            raise ArithmeticError("closed form did not reduce to a rational")
        value = value.a
    if value.denominator != 1:
        raise ArithmeticError(f"closed form gave the non-integer {value}")
    return int(value)


def rb_path_count_recurrence(n: int, params) -> int:
    """Oracle for :func:`rb_path_count`: ``r_n`` paths ending red and
    ``b_n`` ending blue, with ``r_n = (d_c-1) r_{n-1} + d_c b_{n-1}`` and
    ``b_n = d_h r_{n-1}`` (the root has one extra red child)."""
    rb = _rb(params)
    if n == 0:
        return 1
    r, b = rb.d_c, rb.d_h
    for _ in range(n - 1):
        r, b = (rb.d_c - 1) * r + rb.d_c * b, rb.d_h * r
    return r + b


def class_condition(n: int, k: int, alpha: int, beta: int) -> bool:
    """Admissible single-household counts ``k`` for paths of length n >= 2."""
    return (n >= 2 and (n - k) % 2 == 1
            and n + 1 - 2 * (alpha + beta) >= k >= 2 - (alpha + beta))


def rb_path_class_count(n: int, k: int, alpha: int, beta: int, params) -> int:
    """Paths of length ``n`` with ``k`` nodes in households visited once,
    ``alpha``/``beta`` flagging a shared source/last household."""
    rb = _rb(params)
    if n == 0:
        return 1 if (k, alpha, beta) == (1, 0, 0) else 0
    if n == 1:
        return {(0, 1, 1): rb.d_h, (2, 0, 0): rb.d_c}.get((k, alpha, beta), 0)
    if not class_condition(n, k, alpha, beta):
        return 0
    s = alpha + beta
    return (math.comb((n + k - 3) // 2, k - 2 + s) * rb.d_h ** ((n - k + 1) // 2)
            * rb.d_c ** ((n - k + 3) // 2 - s) * (rb.d_c - 1) ** (k + s - 2))


def path_classes(n: int):
    """Every (k, alpha, beta) that can carry paths of length ``n``."""
    for alpha in (0, 1):
        for beta in (0, 1):
            for k in range(n + 2):
                if (n >= 2 and class_condition(n, k, alpha, beta)) or \
                        (n == 0 and (k, alpha, beta) == (1, 0, 0)) or \
                        (n == 1 and (k, alpha, beta) in ((0, 1, 1), (2, 0, 0))):
                    yield k, alpha, beta


def classify_path(tree, path) -> tuple[int, int, int]:
    """(k, alpha, beta) of a concrete root path on a red-blue tree."""
    counts: dict = {}
    for v in path:
        hid = tree.household_id(v)
        counts[hid] = counts.get(hid, 0) + 1
    k = sum(1 for v in path if counts[tree.household_id(v)] == 1)
    return k, int(counts[tree.household_id(path[0])] > 1), int(counts[tree.household_id(path[-1])] > 1)


def class_success_bound(n: int, k: int, alpha: int, beta: int, p: float) -> float:
    """Lower bound on the LS+ success probability given the path class."""
    if n == 0:
        return 1.0
    if n == 1:
        return 1.0 - p
    return (1.0 - p) ** ((n + k - 1) // 2) * (1.0 + p) ** ((n - k + 1) // 2 - alpha - beta)


# --- path length distributions ----------------------------------------------

@dataclass
class PathLengthDist:
    """Probability mass function over transmission path lengths 0, 1, ..."""

    pmf: np.ndarray
    truncated_at: int | None = None

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=float)
        if np.any(self.pmf < 0):
            raise ValueError("negative probability mass")

    @classmethod
    def point(cls, n: int) -> "PathLengthDist":
        pmf = np.zeros(n + 1)
        pmf[n] = 1.0
        return cls(pmf)

    @classmethod
    def from_samples(cls, lengths) -> "PathLengthDist":
        lengths = np.asarray(lengths, dtype=np.int64)
        if lengths.size == 0:
            raise ValueError("no samples")
        return cls(np.bincount(lengths) / lengths.size)

    @property
    def total(self) -> float:
        return float(self.pmf.sum())

    def __len__(self):
        return len(self.pmf)

    def __getitem__(self, n):
        return float(self.pmf[n]) if 0 <= n < len(self.pmf) else 0.0

    def mean(self) -> float:
        return float(np.arange(len(self.pmf)) @ self.pmf)

    def total_variation(self, other: "PathLengthDist") -> float:
        size = max(len(self), len(other))
        a = np.pad(self.pmf, (0, size - len(self)))
        b = np.pad(other.pmf, (0, size - len(other)))
        return 0.5 * float(np.abs(a - b).sum())


def ls_success(dist: PathLengthDist, p: float) -> float:
    """LS success on the red-blue tree: every path node must be symptomatic."""
    n = np.arange(len(dist.pmf))
    return float(((1.0 - p) ** n) @ dist.pmf)


def ls_plus_success_lb(dist: PathLengthDist, p: float, params, swapped: bool = False) -> float:
    """Lower bound on LS+ success, averaging the per-class bound over the
    path classes weighted by their share of all paths of each length.

    ``swapped=True`` evaluates the alternative form in which the household
    factor carries the exponent (n+k-1)/2 instead of (n-k+1)/2; it is kept
    only to show how far the two disagree.
    """
    rb = _rb(params)
    total = dist[0] + (1.0 - p) * dist[1]
    for n in range(2, len(dist.pmf)):
        if dist[n] == 0:
            continue
        acc = 0.0
        for k, alpha, beta in path_classes(n):
            if swapped:
                s = alpha + beta
                weight = (math.comb((n + k - 3) // 2, k - 2 + s)
                          * (rb.d_h * (1 - p)) ** ((n + k - 1) // 2)
                          * (rb.d_c * (1 + p)) ** ((n - k + 1) // 2 - s)
                          * rb.d_c * (rb.d_c - 1) ** (k + s - 2))
            else:
                weight = rb_path_class_count(n, k, alpha, beta, rb) * class_success_bound(n, k, alpha, beta, p)
            acc += weight
        total += acc / rb_path_count_recurrence(n, rb) * dist[n]
    return float(total)


# --- random and deterministic exponential trees ------------------------------

@dataclass(frozen=True)
class RETParams:
    """(d_r, d)-RET: the root has ``d_r`` slots and every other node ``d``
    child slots, each filled with probability ``p_i`` per time step."""

    d_r: int
    d: float
    p_i: float
    p_a: float = 0.5
    p_h: float = 0.2

    def __post_init__(self):
        if self.d_r < 1 or self.d < 1:
            raise ParameterError("RET degrees must be at least 1")
        for name in ("p_i", "p_a", "p_h"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")

    @property
    def q(self) -> float:
        """Per-node hospitalization probability."""
        return (1.0 - self.p_a) * self.p_h

    @classmethod
    def from_model(cls, d_c: int, d_h: int, p_i: float, T_E: int, p_a: float, p_h: float,
                   d: float | None = None) -> "RETParams":
        """Rescale a red-blue tree outbreak to one time step per latency
        period.  ``d`` defaults to the mean red-blue degree rounded to an
        integer."""
        if d is None:
            d = round(((d_c + d_h) + d_h * (d_c + 1)) / (d_h + 1))
        return cls(d_c + d_h, d, 1.0 - (1.0 - p_i) ** T_E, p_a, p_h)


def ret_expected_profile(t: int, l: int, ret: RETParams) -> float:
    """Expected number of RET nodes at depth ``l`` after ``t`` steps."""
    if l == 0:
        return 1.0
    if l > t:
        return 0.0
    p, d = ret.p_i, ret.d
    return ret.d_r * p * sum(math.comb(m, l - 1) * (1 - p) ** (m - l + 1) * (d * p) ** (l - 1)
                             for m in range(l - 1, t))


def ret_expected_size(t: int, ret: RETParams) -> float:
    """Expected RET size after ``t`` steps."""
    p, d = ret.p_i, ret.d
    if d == 1:
        return 1.0 + ret.d_r * p * t
    return 1.0 + ret.d_r * ((1 - p + d * p) ** t - 1) / (d - 1)


def ret_profile_matrix(horizon: int, ret: RETParams) -> np.ndarray:
    """``a[t, l]`` for ``0 <= t, l <= horizon``, built from per-step
    increments so long horizons stay numerically stable."""
    p, d = ret.p_i, ret.d
    a = np.zeros((horizon + 1, horizon + 1))
    a[:, 0] = 1.0
    growth = 1 - p + d * p
    q = d * p / growth if growth > 0 else 0.0
    for t in range(1, horizon + 1):
        # nodes born at step t sit at depth 1 + Binomial(t-1, q)
        born = ret.d_r * p * growth ** (t - 1)
        a[t, 1:t + 1] = a[t - 1, 1:t + 1] + born * stats.binom.pmf(np.arange(t), t - 1, q)
    return a


@dataclass
class DETProfile:
    """Node counts ``c[t, l]`` of a deterministic exponential tree."""

    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.ndim != 2 or self.c[0, 0] != 1 or np.any(self.c[0, 1:] != 0):
            raise ValueError("profile must start from a single root at t=0")
        if np.any(np.diff(self.c, axis=0) < -1e-12):
            raise ValueError("profile levels must not shrink over time")
        if np.any(np.diff(self.totals) <= 0):
            raise ValueError("profile must grow at every step")

    @property
    def totals(self) -> np.ndarray:
        return self.c.sum(axis=1)

    @classmethod
    def from_ret(cls, ret: RETParams, horizon: int) -> "DETProfile":
        return cls(ret_profile_matrix(horizon, ret))


def det_path_length_dist(profile: DETProfile, p_a: float, p_h: float, tol: float = TAIL_TOL) -> PathLengthDist:
    """Depth of the first hospitalized node in the stopped DET.

    Nodes added at step ``t`` are hospitalized in a random order, so the
    stopping node is a uniform pick among that step's newcomers.  Summation
    stops once the probability of no hospitalization so far drops below
    ``tol``; ``truncated_at`` records the last step used.
    """
    c = profile.c
    totals = profile.totals
    s = 1.0 - (1.0 - p_a) * p_h
    pmf = np.zeros(c.shape[1])
    prev_row = np.zeros(c.shape[1])
    prev_total = 0.0
    last = c.shape[0] - 1
    for t in range(c.shape[0]):
        survive = s ** prev_total
        if survive < tol:
            last = t - 1
            break
        new = totals[t] - prev_total
        pmf += (c[t] - prev_row) / new * survive * (1.0 - s ** new)
        prev_row, prev_total = c[t], totals[t]
    return PathLengthDist(np.clip(pmf, 0.0, None), truncated_at=last)


def ret_path_length_approx(ret: RETParams, tol: float = TAIL_TOL, max_horizon: int = 2000) -> PathLengthDist:
    """Stopped-DET path-length law with the RET expected profile plugged in.

    The caller is responsible for having rescaled ``p_i`` to one step per
    latency period (see :meth:`RETParams.from_model`).
    """
    s = 1.0 - ret.q
    if s <= 0:
        return PathLengthDist.point(0)
    horizon = 8
    while horizon < max_horizon and s ** ret_expected_size(horizon, ret) >= tol:
        horizon *= 2
    horizon = min(horizon, max_horizon) + 1
    dist = det_path_length_dist(DETProfile.from_ret(ret, horizon), ret.p_a, ret.p_h, tol)
    pmf = np.trim_zeros(dist.pmf, "b")
    return PathLengthDist(pmf if pmf.size else np.zeros(1), dist.truncated_at)


def simulate_ret_profiles(ret: RETParams, horizon: int, reps: int, rng) -> np.ndarray:
    """Sample ``A[r, t, l]``: RET level counts for ``reps`` independent trees."""
    rng = np.random.default_rng(rng)
    if int(ret.d) != ret.d:
        raise ParameterError("simulation needs an integer child count")
    d = int(ret.d)
    A = np.zeros((reps, horizon + 1, horizon + 2), dtype=np.int64)
    A[:, :, 0] = 1
    for t in range(1, horizon + 1):
        cur = A[:, t - 1]
        slots = np.empty_like(cur)
        slots[:, 0] = ret.d_r - cur[:, 1]
        slots[:, 1:-1] = d * cur[:, 1:-1] - cur[:, 2:]
        slots[:, -1] = 0
        A[:, t] = cur
        A[:, t, 1:] += rng.binomial(slots[:, :-1], ret.p_i)
    return A[:, :, :horizon + 1]


def simulate_stopped_ret(ret: RETParams, reps: int, rng, max_steps: int = 500) -> np.ndarray:
    """Depth of the first hospitalized node in ``reps`` stopped RETs.

    Tracks only per-level counts: newcomers at each level are hospitalized
    independently and the stopping node is a uniform pick among that step's
    hospitalized newcomers.  Replicates still running after ``max_steps``
    get depth -1.
    """
    rng = np.random.default_rng(rng)
    if int(ret.d) != ret.d:
        raise ParameterError("simulation needs an integer child count")
    d = int(ret.d)
    q = ret.q
    depth = np.full(reps, -1, dtype=np.int64)
    root_hit = rng.random(reps) < q
    depth[root_hit] = 0
    live = np.flatnonzero(~root_hit)
    width = 16
    counts = np.zeros((live.size, width), dtype=np.int64)
    counts[:, 0] = 1
    for _ in range(max_steps):
        if live.size == 0:
            break
        if counts[:, -1].any():
            counts = np.pad(counts, ((0, 0), (0, width)))
            width *= 2
        slots = np.empty_like(counts)
        slots[:, 0] = ret.d_r - counts[:, 1]
        slots[:, 1:-1] = d * counts[:, 1:-1] - counts[:, 2:]
        slots[:, -1] = 0
        new = np.zeros_like(counts)
        new[:, 1:] = rng.binomial(slots[:, :-1], ret.p_i)
        hosp = rng.binomial(new, q)
        n_hosp = hosp.sum(axis=1)
        done = n_hosp > 0
        if done.any():
            h = hosp[done]
            pick = (rng.random(h.shape[0]) * n_hosp[done]).astype(np.int64)
            depth[live[done]] = (np.cumsum(h, axis=1) > pick[:, None]).argmax(axis=1)
        counts = (counts + new)[~done]
        live = live[~done]
    return depth


def boe_success(d: float, p_i: float, p_a: float, p_h: float) -> float:
    """Back-of-the-envelope LS success estimate on a d-regular tree."""
    if p_a >= 1:
        return 0.0
    q = d * p_i / (1 + d * p_i)
    hosp = (1 - p_a) * p_h
    if hosp <= 0:
        raise ParameterError("no hospitalizations: the estimate is undefined")
    exponent = math.log(1 + 1 / hosp) / math.log(1 + d * p_i)
    return (1 - p_a) * (p_h + (1 - p_h) * ((1 - p_a) * q + 1 - q) ** exponent)
