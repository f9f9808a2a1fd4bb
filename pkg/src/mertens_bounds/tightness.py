"""Sharpness of the tanh(pi/2T) leading constant.

The coefficients ``a_n = sigma_K(T log n)`` come from the K-th Fejer sum of the
square wave ``sgn cos t``.  Their Dirichlet series is a finite combination of
shifted zeta functions with no pole near the real axis, yet
``(1/x) sum_{n<=x} a_n`` approaches ``tanh(pi/2T)`` along ``x_N = exp((2 pi N + pi/2)/T)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import zeta as Z
from ._numerics import atomic_write, fmt
from .errors import AccuracyError, InvalidParameterError, RangeError
from .sieve import default_workers

EPS = np.finfo(float).eps
RANGE_CAP = 10**9
TABLE_BITS = 20
BLOCK = 1 << 24


@dataclass(frozen=True)
class FejerParams:
    K: int
    T_plus: float
    c: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError("K must be a positive integer")
        if not self.T_plus > 0:
            raise InvalidParameterError("T_plus must be positive")
        k = np.arange(self.K + 1)
        # Fourier series of sgn cos t with Fejer weights 1 - k/(K+1); odd k only
        sign = np.where((k // 2) % 2 == 0, 1.0, -1.0)
        c = np.where(k % 2 == 1, sign * 4 / math.pi * (1 / np.maximum(k, 1) - 1 / (self.K + 1)), 0.0)
        object.__setattr__(self, "c", c)

    @property
    def total_variation(self) -> float:
        """Upper bound ``sum 4k|c_k|`` on the variation of ``sigma_K`` over one period."""
        k = np.arange(self.K + 1)
        return float(np.sum(4 * k * np.abs(self.c)))

    def derivative_bound(self, order: int) -> float:
        k = np.arange(self.K + 1, dtype=float)
        return float(np.sum(k**order * np.abs(self.c)))


def _odd(params: FejerParams):
    k = np.arange(1, params.K + 1, 2)
    return k, params.c[k]


def sigma_k(params: FejerParams, t):
    """Fejer sum ``sum_k c_k cos(k t)``; scalar or array ``t``."""
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k, ck = _odd(params)
    out = np.empty_like(t)
    for i in range(0, t.size, 4096):
        chunk = np.remainder(t[i : i + 4096], 2 * math.pi)
        out[i : i + 4096] = np.cos(np.outer(chunk, k)) @ ck
    if np.max(np.abs(out)) > 1 + 1e-12:
        raise AccuracyError(f"|sigma_K| = {np.max(np.abs(out)):.17g} exceeds 1")
    return float(out[0]) if scalar else out


def l1_distance(params: FejerParams, panels_per_unit: int = 4, nodes: int = 12) -> float:
    """``int_0^{2 pi} |sigma_K(t) - sgn cos t| dt`` by composite Gauss-Legendre.

    Panels break at the jumps ``pi/2`` and ``3 pi/2`` of the square wave.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    cuts = [0.0, math.pi / 2, 3 * math.pi / 2, 2 * math.pi]
    total = []
    for a, b in zip(cuts, cuts[1:]):
        sub = max(1, int(math.ceil(panels_per_unit * params.K * (b - a) / math.pi)))
        edges = np.linspace(a, b, sub + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        g = 1.0 if a != math.pi / 2 else -1.0
        vals = np.abs(sigma_k(params, t) - g).reshape(sub, nodes)
        total.append(math.fsum((half[:, None] * w[None, :] * vals).ravel()))
    return math.fsum(total)


def square_wave_sum_main(x: float, T: float) -> float:
    """``int_1^x sgn cos(T log y) dy`` when ``T log x = 2 pi N + pi/2``."""
    a = math.pi / (2 * T)
    return x * math.tanh(a) - 1 + 1 / math.cosh(a)


# ---------------------------------------------------------------- fast direct sums

def _taylor_table(params: FejerParams, bits: int = TABLE_BITS):
    """``sigma_K`` and its first three derivatives (scaled by 1/j!) on a uniform grid."""
    M = 1 << bits
    k = np.arange(params.K + 1)
    c = params.c
    spectra = (c, 1j * k * c, -(k**2) * c / 2, -1j * k**3 * c / 6)
    rows = []
    for spec in spectra:
        X = np.zeros(M // 2 + 1, dtype=complex)
        X[: params.K + 1] = spec * (M / 2)
        rows.append(np.fft.irfft(X, n=M))
    return np.ascontiguousarray(np.stack(rows)), 2 * math.pi / M


@numba.njit(cache=True, nogil=True)
def _block_sums(lo, hi, T, table, h):
    """Neumaier sums of ``a_n`` and ``a_n / n`` for ``n`` in ``[lo, hi)``."""
    M = table.shape[1]
    two_pi = 2 * math.pi
    s0 = 0.0
    e0 = 0.0
    s1 = 0.0
    e1 = 0.0
    for n in range(lo, hi):
        th = np.fmod(T * math.log(n), two_pi)
        j = int(th / h + 0.5)
        d = th - j * h
        if j >= M:
            j -= M
        v = table[0, j] + d * (table[1, j] + d * (table[2, j] + d * table[3, j]))
        t = s0 + v
        if abs(s0) >= abs(v):
            e0 += (s0 - t) + v
        else:
            e0 += (v - t) + s0
        s0 = t
        u = v / n
        t = s1 + u
        if abs(s1) >= abs(u):
            e1 += (s1 - t) + u
        else:
            e1 += (u - t) + s1
        s1 = t
    return s0 + e0, s1 + e1


def fejer_sums(params: FejerParams, stops, workers: int | None = None, bits: int = TABLE_BITS):
    """``(sum_{n<=X} a_n, sum_{n<=X} a_n/n, error_bound)`` for each integer ``X`` in ``stops``.

    Blocks have fixed boundaries and are merged in order, so the result does
    not depend on the worker count.
    """
    stops = sorted({int(s) for s in stops})
    if not stops:
        return []
    if stops[0] < 1:
        raise InvalidParameterError("stops must be positive")
    top = stops[-1]
    table, h = _taylor_table(params, bits)
    edges = sorted(set(range(1, top + 1, BLOCK)) | {s + 1 for s in stops})
    jobs = list(zip(edges[:-1], edges[1:]))
    workers = workers or default_workers()
    run = lambda job: _block_sums(job[0], job[1], params.T_plus, table, h)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    # remainder of the cubic Taylor step plus phase rounding, per term
    taylor = (h / 2) ** 4 / 24 * params.derivative_bound(4)
    out = []
    for stop in stops:
        use = [p for (a, b), p in zip(jobs, parts) if b <= stop + 1]
        phase = 4 * EPS * params.T_plus * math.log(stop + 1) + 2 * EPS * math.pi
        per_term = taylor + phase * params.derivative_bound(1) + 8 * EPS
        err0 = stop * per_term + 4 * EPS * stop
        err1 = per_term * (math.log(stop) + 1) + 4 * EPS * (math.log(stop) + 1)
        out.append((math.fsum(p[0] for p in use), math.fsum(p[1] for p in use), max(err0, err1)))
    return out


# ---------------------------------------------------------------- experiment

def x_of(N: int, T: float) -> float:
    return math.exp((2 * math.pi * N + math.pi / 2) / T)


def admissible_N(T: float, count: int = 3, cap: float = RANGE_CAP) -> list:
    """The ``count`` largest ``N >= 1`` with ``x_N <= cap``, ascending."""
    top = math.floor((T * math.log(cap) - math.pi / 2) / (2 * math.pi))
    while top >= 1 and x_of(top, T) > cap:
        top -= 1
    return [n for n in range(max(1, top - count + 1), top + 1)]


def dirichlet_value_at_one(params: FejerParams) -> tuple:
    """``A(1) = sum_k c_k Re zeta(1 + i k T)`` with its error bound."""
    k, ck = _odd(params)
    vals, errs = Z.zeta_with_error(1 + 1j * k * params.T_plus)
    return math.fsum(ck * vals.real), math.fsum(np.abs(ck) * errs)


@dataclass(frozen=True)
class TightnessRow:
    N: int
    x: float
    S: float
    target: float
    envelope: float
    harmonic: float
    harmonic_target: float
    harmonic_envelope: float
    numerical_error: float

    @property
    def ratio(self) -> float:
        return self.S / self.x

    @property
    def within(self) -> bool:
        return abs(self.ratio - self.target) <= self.envelope + self.numerical_error / self.x

    @property
    def harmonic_within(self) -> bool:
        return abs(self.harmonic - self.harmonic_target) <= self.harmonic_envelope + self.numerical_error


@dataclass
class TightnessReport:
    params: FejerParams
    l1: float
    total_variation: float
    A1: float
    rows: list = field(default_factory=list)

    @property
    def envelope_shrinking(self) -> bool:
        env = [r.envelope for r in self.rows]
        return all(b < a for a, b in zip(env, env[1:]))

    @property
    def ok(self) -> bool:
        return all(r.within and r.harmonic_within for r in self.rows)


def tightness_experiment(params: FejerParams, N_list, cap: float = RANGE_CAP, workers: int | None = None) -> TightnessReport:
    """Measure ``S(x_N)/x_N`` and ``sum_{n<=x_N} a_n/n - A(1)`` against their predicted limits.

    The envelope for ``S/x`` is ``(5/4)||sigma_K - g||_1 / T`` plus variation
    terms of order ``T ||sigma_K||_TV log x / x``; for the harmonic sum only the
    ``O(1/x)`` variation terms remain, since the ``L^1`` part is known exactly.
    """
    T = params.T_plus
    N_list = sorted(int(n) for n in N_list)
    if not N_list or N_list[0] < 1:
        raise InvalidParameterError("N values must be positive integers")
    xs = [x_of(N, T) for N in N_list]
    if xs[-1] > cap:
        raise RangeError(f"x_N = {xs[-1]:.6g} for N = {N_list[-1]} exceeds the cap {cap:.6g}")
    l1 = l1_distance(params)
    tv = params.total_variation
    A1, A1_err = dirichlet_value_at_one(params)
    a = math.pi / (2 * T)
    sums = dict(zip(sorted({math.floor(x) for x in xs}), fejer_sums(params, [math.floor(x) for x in xs], workers)))
    report = TightnessReport(params, l1, tv, A1)
    for N, x in zip(N_list, xs):
        S, H, err = sums[math.floor(x)]
        variation = tv * (T * math.log(x + 1) / (2 * math.pi) + 1) + 1 + (1 - 1 / math.cosh(a))
        envelope = 1.25 * l1 / T + variation / x
        h_env = (tv / (1 - math.exp(-2 * math.pi / T)) + 2) / x
        report.rows.append(TightnessRow(N, x, S, math.tanh(a), envelope, H - A1, a - l1 / (4 * T), h_env, err + A1_err))
    return report


def write_report(path, report: TightnessReport) -> None:
    header = "N,x,S,ratio,target,envelope,harmonic,harmonic_target,harmonic_envelope"
    with atomic_write(path) as fh:
        fh.write(header + "\n")
        for r in report.rows:
            vals = (r.N, r.x, r.S, r.ratio, r.target, r.envelope, r.harmonic, r.harmonic_target, r.harmonic_envelope)
            fh.write(",".join(fmt(v) for v in vals) + "\n")


# ---------------------------------------------------------------- Dirichlet series identity

@dataclass(frozen=True)
class DirichletCheck:
    s: complex
    direct: complex
    via_zeta: complex
    tail_bound: float
    error_bound: float

    @property
    def difference(self) -> float:
        return abs(self.direct - self.via_zeta)

    @property
    def ok(self) -> bool:
        return self.difference <= self.tail_bound + self.error_bound


def dirichlet_rep_check(params: FejerParams, s: complex, terms: int = 100_000) -> DirichletCheck:
    """Compare ``sum_{n<=terms} a_n n^-s`` with ``sum_k (c_k/2)(zeta(s - ikT) + zeta(s + ikT))``."""
    s = complex(s)
    if not s.real > 1.2:
        raise InvalidParameterError("needs Re s > 1.2")
    n = np.arange(1, terms + 1, dtype=float)
    a = sigma_k(params, params.T_plus * np.log(n))
    direct = complex(np.sum(a * np.exp(-s * np.log(n))))
    k, ck = _odd(params)
    zp, ep = Z.zeta_with_error(s + 1j * k * params.T_plus)
    zm, em = Z.zeta_with_error(s - 1j * k * params.T_plus)
    via = complex(np.sum(ck / 2 * (zp + zm)))
    tail = terms ** (1 - s.real) / (s.real - 1)
    err = float(np.sum(np.abs(ck) / 2 * (ep + em))) + 8 * EPS * terms * (1 + abs(s))
    return DirichletCheck(s, direct, via, tail, err)


__all__ = [
    "DirichletCheck", "FejerParams", "TightnessReport", "TightnessRow", "admissible_N", "dirichlet_rep_check",
    "dirichlet_value_at_one", "fejer_sums", "l1_distance", "sigma_k", "square_wave_sum_main",
    "tightness_experiment", "write_report", "x_of",
]
