"""Square-free counting: short-interval constants, the M-to-R decomposition
and closed-form bounds on R(x) = Q(x) - 6x/pi^2 built from bounds on M.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numba
import numpy as np

from .errors import HypothesisViolationError, InvalidParameterError, RangeError
from .sieve import SIX_OVER_PI2, MertensOracle, default_workers

SMALL_PRIMES = (2, 3, 5, 7, 11, 13)
INV_2ZETA2 = 3 / math.pi**2

# short-interval pairs (c1, c2) as published, keyed by the largest sieved prime
PUBLISHED_PAIRS = {
    2: (Fraction(3, 4), Fraction(3, 2)),
    3: (Fraction(2, 3), Fraction(8, 3)),
    5: (Fraction(16, 25), Fraction(114, 25)),
    7: (Fraction(768, 1225), Fraction(9458, 1225)),
    11: (Fraction(18432, 29645), Fraction(361192, 29645)),
    13: (Fraction(442368, 715715), Fraction(14328304, 715715)),
}


# ---------------------------------------------------------------- short intervals

@dataclass(frozen=True)
class ShortIntervalConstants:
    q: int
    c1: Fraction
    c2_star: Fraction
    period: int

    @property
    def published_c2(self) -> Fraction:
        return PUBLISHED_PAIRS[self.q][1]


def _primes_to(q: int):
    if q not in SMALL_PRIMES:
        raise InvalidParameterError(f"q must be one of {SMALL_PRIMES}, got {q}")
    return SMALL_PRIMES[: SMALL_PRIMES.index(q) + 1]


def q_free_count(n: int, primes) -> int:
    """Number of ``1 <= k <= n`` not divisible by ``p^2`` for any listed ``p``."""
    n = int(n)
    if n <= 0:
        return 0
    total = 0
    for r in range(len(primes) + 1):
        for combo in combinations(primes, r):
            d = math.prod(combo)
            total += (-1) ** r * (n // (d * d))
    return total


@numba.njit(cache=True, nogil=True)
def _deviation_extrema(lo, hi, count, squares, R, c1R):
    """Max of ``R*Q_q(n) - c1R*n`` and min of its left limits for ``n`` in ``[lo, hi)``.

    ``count`` is ``Q_q(lo - 1)``.
    """
    k = squares.shape[0]
    res = np.empty(k, dtype=np.int64)
    for i in range(k):
        res[i] = lo % squares[i]
    hi_val = -(1 << 62)
    lo_val = 1 << 62
    for n in range(lo, hi):
        if n > 0:
            left = R * count - c1R * n
            if left < lo_val:
                lo_val = left
        free = n > 0
        for i in range(k):
            if res[i] == 0:
                free = False
            res[i] += 1
            if res[i] == squares[i]:
                res[i] = 0
        if free:
            count += 1
        val = R * count - c1R * n
        if val > hi_val:
            hi_val = val
    return hi_val, lo_val


def short_interval_constants(q: int, workers: int | None = None, window: int = 1 << 24) -> ShortIntervalConstants:
    """Optimal ``c2`` with ``|Q_q(t2) - Q_q(t1)| <= c1 |t2 - t1| + c2`` for all real ``t``.

    ``c2`` is the oscillation ``sup - inf`` of ``Q_q(t) - c1 t`` over one period,
    computed in exact integer arithmetic.  Windows of the period are scanned
    independently and merged by max/min.
    """
    primes = _primes_to(q)
    R = math.prod(p * p for p in primes)
    c1R = math.prod(p * p - 1 for p in primes)
    squares = np.array([p * p for p in primes], dtype=np.int64)
    bounds = list(range(0, R, window)) + [R]
    jobs = list(zip(bounds[:-1], bounds[1:]))

    def run(job):
        a, b = job
        return _deviation_extrema(a, b, q_free_count(a - 1, primes), squares, R, c1R)

    workers = workers or default_workers()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    top = max(p[0] for p in parts)
    # the left limit at t = R repeats t = 0, where the deviation is 0
    bottom = min(min(p[1] for p in parts), 0)
    return ShortIntervalConstants(q, Fraction(c1R, R), Fraction(top - bottom, R), R)


def short_interval_holds(t1, t2, c1, c2, counter) -> bool:
    """Check the short-interval inequality for one pair, with ``counter(t)`` the counting function."""
    lhs = abs(counter(math.floor(t2)) - counter(math.floor(t1)))
    return lhs <= float(c1) * abs(t2 - t1) + float(c2) + 1e-9


def squarefree_count(x, mu: np.ndarray) -> int:
    """``Q(x) = sum_{d <= sqrt x} mu(d) floor(x/d^2)``, with ``mu`` tabulated to ``sqrt x``."""
    n = int(math.floor(x))
    if n < 1:
        return 0
    r = math.isqrt(n)
    if mu.shape[0] <= r:
        raise RangeError(f"Moebius table ends below sqrt(x) = {r}")
    d = np.arange(1, r + 1, dtype=np.int64)
    return int(np.sum(mu[1 : r + 1] * (n // (d * d))))


# ---------------------------------------------------------------- hypotheses and certificates

@dataclass(frozen=True)
class BoundHypothesis:
    """``|M(v)| <= epsilon v + kappa sqrt(v)`` plus a short-interval pair for ``Q``.

    ``kappa_minus`` with ``v0 < v1`` describes an optional mid range on which
    ``|M(v)| <= kappa_minus sqrt(v)``.
    """

    epsilon: float
    kappa: float
    c1: Fraction | float
    c2: Fraction | float
    kappa_minus: float | None = None
    v0: float | None = None
    v1: float | None = None

    def __post_init__(self):
        if self.epsilon < 0 or self.kappa < 0:
            raise InvalidParameterError("epsilon and kappa must be nonnegative")
        if not 0 < self.c1 <= 1:
            raise InvalidParameterError("c1 must lie in (0, 1]")
        if not self.c2 > 0:
            raise InvalidParameterError("c2 must be positive")
        if self.kappa_minus is not None:
            if self.kappa_minus < 0 or self.v0 is None or self.v1 is None or not 0 < self.v0 < self.v1:
                raise InvalidParameterError("mid range needs kappa_minus >= 0 and 0 < v0 < v1")

    @property
    def c3(self) -> float:
        return 0.5 * (INV_2ZETA2 - float(self.c1) / 4)


@dataclass(frozen=True)
class BoundCertificate:
    """``|R(x)| <= sum coefficient * x^exponent`` for ``x`` in the validity window."""

    terms: tuple
    valid_from: float
    valid_to: float = math.inf
    open_left: bool = True
    label: str = ""

    def __post_init__(self):
        exps = [e for e, _ in self.terms]
        if any(a <= b for a, b in zip(exps, exps[1:])):
            raise InvalidParameterError("exponents must be strictly decreasing")
        if any(c < 0 for _, c in self.terms):
            raise InvalidParameterError("coefficients must be nonnegative")

    def contains(self, x: float) -> bool:
        above = x > self.valid_from if self.open_left else x >= self.valid_from
        return above and x <= self.valid_to

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = sum(c * x ** float(e) for e, c in self.terms)
        return float(out) if out.ndim == 0 else out

    def coefficient(self, exponent) -> float:
        for e, c in self.terms:
            if e == Fraction(exponent):
                return c
        return 0.0

    def __str__(self):
        return " + ".join(f"{c:.6g} x^{e}" for e, c in self.terms)


def _short_term(h: BoundHypothesis):
    c2, c3 = float(h.c2), h.c3
    return 3 * c2 ** (1 / 3) * c3 ** (2 / 3), 0.5 * (c2 / c3) ** (1 / 6)


def _gould_a_floor(kappa, h):
    r = kappa / float(h.c1)
    return 64e5 * r**4, (float(h.c2) / h.c3) ** 5 / (16 * r) ** 6


def r_bound_gould(h: BoundHypothesis, x: float, branch: str = "a") -> BoundCertificate:
    """Bound on ``|R(x)|`` from a global bound on ``M``; branch ``a`` or ``b``."""
    c1 = float(h.c1)
    eps, kappa = h.epsilon, h.kappa
    third, sixth = _short_term(h)
    if branch == "a":
        if not kappa > 0:
            raise InvalidParameterError("branch a needs kappa > 0")
        a1, a2 = _gould_a_floor(kappa, h)
        if not x > max(a1, a2):
            which = "x > 6.4e6 (kappa/c1)^4" if a1 >= a2 else "x > (c2/c3)^5 / (16 kappa/c1)^6"
            raise InvalidParameterError(f"branch a needs {which} = {max(a1, a2):.6g}, got x={x}")
        r = 16 * kappa / c1
        drop_at = max(4.25e12 * (kappa / c1) ** 4, a2)
        terms = [(Fraction(3, 5), 4 * eps / r**0.4),
                 (Fraction(2, 5), 5 * c1**0.6 / 3 * (kappa / 2) ** 0.4),
                 (Fraction(1, 3), third)]
        if x > drop_at:
            start = drop_at
        else:
            terms.append((Fraction(1, 4), 5 * kappa / 7))
            start = max(a1, a2)
        terms.append((Fraction(1, 6), sixth))
        return BoundCertificate(tuple(terms), start, math.inf, True, "a")
    if branch == "b":
        if not 0 < eps < c1 / 584:
            raise InvalidParameterError(f"branch b needs 0 < epsilon < c1/584 = {c1 / 584:.6g}")
        start = (float(h.c2) / h.c3) ** 2 * (c1 / (16 * eps)) ** 3
        if not x >= start:
            raise InvalidParameterError(f"branch b needs x >= (c2/c3)^2 (c1/(16 epsilon))^3 = {start:.6g}, got x={x}")
        terms = ((Fraction(1, 2), 2 * math.sqrt(eps * c1)),
                 (Fraction(1, 3), third),
                 (Fraction(1, 4), kappa / 3 * (c1 / eps) ** 0.75),
                 (Fraction(1, 6), sixth))
        return BoundCertificate(terms, start, math.inf, False, "b")
    raise InvalidParameterError(f"branch must be 'a' or 'b', got {branch!r}")


def r_bound_qmediano(h: BoundHypothesis, x: float) -> BoundCertificate:
    """Bound on ``|R(x)|`` using the mid-range bound ``|M(v)| <= kappa_minus sqrt(v)`` on ``[v0, v1]``."""
    if h.kappa_minus is None or not h.kappa_minus > 0:
        raise InvalidParameterError("needs kappa_minus > 0 with a window [v0, v1]")
    c1 = float(h.c1)
    km = h.kappa_minus
    r = 16 * km / c1
    a1, a2 = _gould_a_floor(km, h)
    floors = {
        "x > 6.4e6 (kappa_minus/c1)^4": a1,
        "x > (c2/c3)^5 / (16 kappa_minus/c1)^6": a2,
        "x > (2 v0^2)^(5/4) / (16 kappa_minus/c1)": (2 * h.v0**2) ** 1.25 / r,
        "x > 2 v0^2": 2 * h.v0**2,
    }
    name, start = max(floors.items(), key=lambda kv: kv[1])
    if not x > start:
        raise InvalidParameterError(f"needs {name} = {start:.6g}, got x={x}")
    if not x <= h.v1**2:
        raise InvalidParameterError(f"needs x <= v1^2 = {h.v1**2:.6g}, got x={x}")
    third, sixth = _short_term(h)
    terms = ((Fraction(1, 2), 2 * h.epsilon),
             (Fraction(2, 5), 5 * c1**0.6 / 3 * (km / 2) ** 0.4),
             (Fraction(1, 3), third),
             (Fraction(1, 4), 4 / 3 * h.kappa),
             (Fraction(1, 6), sixth))
    return BoundCertificate(terms, start, h.v1**2, True, "mid")


# ---------------------------------------------------------------- decomposition

@dataclass(frozen=True)
class Decomposition:
    x: float
    K: int
    K_prime: int
    R_exact: float
    head_sum: int
    head_integral: float
    error_cap: float

    @property
    def residual(self) -> float:
        return self.R_exact - self.head_sum + self.head_integral

    @property
    def holds(self) -> bool:
        # float rounding of the two real-valued pieces is far below 1e-6 at this scale
        return abs(self.residual) <= self.error_cap + 1e-6 * (1 + abs(self.head_integral))


def _isqrt_floor(x, k) -> int:
    q = x // k if isinstance(x, int) else math.floor(x / k)
    return math.isqrt(int(q))


def _isqrt_floors(x, kmax: int) -> np.ndarray:
    """``floor(sqrt(x/k))`` for ``k = 1..kmax``."""
    k = np.arange(1, kmax + 1, dtype=np.int64)
    q = int(x) // k if isinstance(x, (int, np.integer)) else np.floor(float(x) / k).astype(np.int64)
    r = np.floor(np.sqrt(q.astype(float))).astype(np.int64)
    r -= (r * r > q).astype(np.int64)
    r += ((r + 1) * (r + 1) <= q).astype(np.int64)
    return r


def integral_of_M(x, U, oracle: MertensOracle) -> float:
    """``int_0^U M(sqrt(x/u)) du`` evaluated exactly as a step-function sum."""
    N = _isqrt_floor(x, U) if U > 0 else None
    if U <= 0:
        return 0.0
    if N > oracle.limit:
        raise RangeError(f"needs M up to {N}, table ends at {oracle.limit}")
    # pieces with x/n^2 <= U contribute mu(n) x/n^2; the rest contribute mu(n) U
    n = np.arange(1, N + 1, dtype=np.float64)
    partial = math.fsum(oracle.mu[1 : N + 1] / (n * n))
    return U * oracle.M(N) + float(x) * (SIX_OVER_PI2 - partial)


def andalas_decompose(x, K: int, K_prime: int, h: BoundHypothesis, oracle: MertensOracle,
                      strict: bool = True) -> Decomposition:
    """Split ``R(x)`` into a head sum minus a head integral plus a bounded remainder.

    With ``strict`` a remainder exceeding its cap raises
    :class:`HypothesisViolationError`.
    """
    if not x > 0:
        raise InvalidParameterError("x must be positive")
    if not 0 <= K <= K_prime:
        raise InvalidParameterError("needs integers K' >= K >= 0")
    need = max(_isqrt_floor(x, K + 0.5), math.isqrt(int(math.floor(x))))
    if need > oracle.limit:
        raise RangeError(f"needs M up to {need}, table ends at {oracle.limit}")
    R_exact = squarefree_count(x, oracle.mu) - SIX_OVER_PI2 * float(x)
    kmax = min(K, int(math.floor(x)))
    head = int(oracle.M(_isqrt_floors(x, kmax)).sum()) if kmax else 0
    integral = integral_of_M(x, K + 0.5, oracle)
    tail_q = oracle.Q(_isqrt_floor(x, K_prime + 0.5))
    cap = (float(h.c1) * math.sqrt(x) / 4 * (1 / math.sqrt(K + 0.5) - 1 / math.sqrt(K_prime + 0.5))
           + float(h.c2) * (K_prime - K) + 0.5 * abs(tail_q))
    out = Decomposition(x, K, K_prime, R_exact, int(head), integral, cap)
    if strict and not out.holds:
        raise HypothesisViolationError(f"remainder {out.residual:.6g} exceeds cap {cap:.6g} at x={x}")
    return out


def legolas_cap(h, x: float, K: int) -> float:
    """Cap on ``|sum_{k<=K} F(sqrt(x/k))| + |int_0^{K+1/2} F(sqrt(x/u)) du|`` for ``|F(v)| <= eps v + kappa sqrt(v)``."""
    if K < 3:
        raise InvalidParameterError("needs K >= 3")
    k = K - 0.5
    lin = 4 * math.sqrt(k) * h.epsilon * math.sqrt(x)
    quarter = 8 / 3 * k**0.75 + (5 / 7 if K < 37 else 0.0)
    return lin + quarter * h.kappa * x**0.25


@dataclass
class RamandoReport:
    rows: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if min(m for m in r[1:] if m is not None) < 0]

    @property
    def ok(self) -> bool:
        return not self.violations


def ramando_check(N_values) -> RamandoReport:
    """Margins (right side minus left side) of the two partial-sum inequalities.

    Each row is ``(N, sqrt_margin, quarter_margin_with_5/7, quarter_margin_plain)``;
    a margin is ``None`` where that inequality is not claimed.
    """
    N_values = sorted(int(n) for n in N_values)
    if N_values and N_values[0] < 2:
        raise InvalidParameterError("N must be >= 2")
    report = RamandoReport()
    if not N_values:
        return report
    top = N_values[-1]
    n = np.arange(1, top + 1, dtype=np.float64)
    inv_sqrt = n**-0.5
    inv_qtr = n**-0.25
    for N in N_values:
        s2 = math.fsum(inv_sqrt[:N])
        s4 = math.fsum(inv_qtr[:N])
        m1 = 4 * math.sqrt(N - 0.5) - 2 * math.sqrt(N + 0.5) - s2
        quarter = 8 / 3 * (N - 0.5) ** 0.75 - 4 / 3 * (N + 0.5) ** 0.75 - s4
        m2 = quarter + 5 / 7 if N >= 3 else None
        m3 = quarter if N >= 37 else None
        report.rows.append((N, m1, m2, m3))
    return report


# ---------------------------------------------------------------- presets

@dataclass(frozen=True)
class Preset:
    name: str
    hypothesis: BoundHypothesis
    method: str


PRESETS = {
    "nopgik": Preset("nopgik", BoundHypothesis(math.pi / 2e7, 6.738093, Fraction(16, 25), Fraction(114, 25),
                                               kappa_minus=0.570591, v0=33.0, v1=1e16), "mid"),
    "gopnik": Preset("gopnik", BoundHypothesis(math.pi / 2e10, 11.350514, Fraction(768, 1225), Fraction(9458, 1225)), "global"),
    "coda": Preset("coda", BoundHypothesis(3 / (math.pi * 1e10), 11.39, Fraction(442368, 715715), Fraction(14328304, 715715)), "global"),
}


def preset_bounds(name: str, x: float) -> list:
    """Every certificate the preset supports at ``x``; raises if none applies."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if preset.method == "mid":
        return [r_bound_qmediano(preset.hypothesis, x)]
    out, errors = [], []
    for branch in ("a", "b"):
        try:
            out.append(r_bound_gould(preset.hypothesis, x, branch))
        except InvalidParameterError as exc:
            errors.append(str(exc))
    if not out:
        raise InvalidParameterError("; ".join(errors))
    return out


__all__ = [
    "BoundCertificate", "BoundHypothesis", "Decomposition", "PRESETS", "PUBLISHED_PAIRS", "Preset",
    "RamandoReport", "ShortIntervalConstants", "andalas_decompose", "integral_of_M", "legolas_cap",
    "preset_bounds", "q_free_count", "r_bound_gould", "r_bound_qmediano", "ramando_check",
    "short_interval_constants", "short_interval_holds", "squarefree_count",
]
