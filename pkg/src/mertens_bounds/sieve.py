"""Segmented Moebius sieve with running M(x), m(x), Q(x), R(x).

A single pass over ``[1, limit]`` produces checkpoints, exact suprema of the
ratios |M|/sqrt(x), |m|*sqrt(x), |R|/x^(1/4) and |R|/sqrt(x) over real x, and
optionally persists progress so an interrupted run can resume.

Moebius values for a segment are computed by marking each prime ``p <= sqrt(hi)``
(flip sign, accumulate the product of marked primes) and zeroing multiples of
``p^2``.  A square-free entry whose marked product falls short of ``n`` has
exactly one prime factor above ``sqrt(hi)`` and gets one extra sign flip.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from ._numerics import atomic_write, fmt
from .errors import FormatError, InvalidParameterError, SegmentationError

SIX_OVER_PI2 = 6 / math.pi**2
DEFAULT_SEGMENT = 1 << 22
MAX_SEGMENT = 1 << 26
KINDS = ("M_over_sqrt", "m_times_sqrt", "R_over_qtr", "R_over_sqrt")
CSV_HEADER = ("x", "M", "m", "Q", "R")
WORKERS_ENV = "MERTENS_BOUNDS_WORKERS"


@dataclass(frozen=True)
class MertensCheckpoint:
    x: int
    M: int
    m: float
    Q: int
    R: float

    def row(self):
        return (self.x, self.M, self.m, self.Q, self.R)


@dataclass(frozen=True)
class SieveSegment:
    lo: int
    hi: int
    mu: np.ndarray

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(n)
        return int(self.mu[n - self.lo])


@dataclass(frozen=True)
class SupRecord:
    """Supremum of a ratio over real ``x`` in ``[lo, hi]``.

    ``left_limit`` marks a supremum approached as ``x -> argmax`` from below
    rather than attained at ``argmax``.
    """

    kind: str
    lo: int
    hi: int
    sup: float
    argmax: int
    left_limit: bool


@dataclass
class SieveRun:
    limit: int
    checkpoints: list = field(default_factory=list)
    sups: list = field(default_factory=list)
    m_error: float = 0.0

    def at(self, x: int) -> MertensCheckpoint:
        for c in self.checkpoints:
            if c.x == x:
                return c
        raise KeyError(x)

    def sup(self, kind, lo, hi) -> SupRecord:
        for s in self.sups:
            if (s.kind, s.lo, s.hi) == (kind, lo, hi):
                return s
        raise KeyError((kind, lo, hi))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


@numba.njit(nogil=True, cache=True)
def _mu_kernel(lo, hi, primes):
    size = hi - lo + 1
    mu = np.ones(size, dtype=np.int8)
    prod = np.ones(size, dtype=np.int64)
    for p in primes:
        if p * p > hi:
            break
        start = ((lo + p - 1) // p) * p - lo
        for j in range(start, size, p):
            mu[j] = -mu[j]
            prod[j] *= p
        sq = p * p
        start = ((lo + sq - 1) // sq) * sq - lo
        for j in range(start, size, sq):
            mu[j] = 0
    for j in range(size):
        if mu[j] != 0 and prod[j] != lo + j:
            mu[j] = -mu[j]
    return mu


def mobius_segment(lo: int, hi: int, primes=None, max_len: int = MAX_SEGMENT) -> SieveSegment:
    """Exact mu(n) for ``lo <= n <= hi``."""
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise InvalidParameterError("need 1 <= lo <= hi")
    if hi - lo + 1 > max_len:
        raise SegmentationError(f"segment of {hi - lo + 1} entries exceeds budget {max_len}; split the range")
    if primes is None:
        primes = primes_up_to(math.isqrt(hi))
    return SieveSegment(lo, hi, _mu_kernel(lo, hi, primes))


def mobius_range(n: int) -> np.ndarray:
    """``mu`` as an int8 array indexed ``0..n`` with ``mu[0] = 0``."""
    out = np.zeros(n + 1, dtype=np.int8)
    if n >= 1:
        out[1:] = mobius_segment(1, n, max_len=n).mu
    return out


# ---------------------------------------------------------------- streaming pass

# int state: M, Q, next mark index; float state: Neumaier sum and compensation of mu(n)/n
@numba.njit(nogil=True, cache=True)
def _accumulate(mu, lo, ist, fst, marks, out_M, out_m, out_Q, kinds, slo, shi, sup, arg, left):
    M = ist[0]
    Q = ist[1]
    k = ist[2]
    s = fst[0]
    c = fst[1]
    nmarks = marks.shape[0]
    nscan = kinds.shape[0]
    for j in range(mu.shape[0]):
        n = lo + j
        v = mu[j]
        if v != 0:
            M += v
            Q += 1
            x = v / n
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
        m = s + c
        # ratios are compared in powered form (r^2 or r^4) so roots are taken only on a new maximum
        for i in range(nscan):
            if n < slo[i] or n > shi[i]:
                continue
            kind = kinds[i]
            nxt = n + 1 <= shi[i]
            if kind == 0:
                if M * M > sup[i] * n:
                    sup[i] = M * M / n
                    arg[i] = n
                    left[i] = False
            elif kind == 1:
                # m is constant on [n, n+1) and sqrt grows: sup is the left limit at n+1
                y = n + 1.0 if nxt else float(n)
                if m * m * y > sup[i]:
                    sup[i] = m * m * y
                    arg[i] = n + 1 if nxt else n
                    left[i] = nxt
            else:
                # R is linear on [n, n+1); the ratio is extremal at an end
                r0 = Q - SIX_OVER_PI2 * n
                r1 = r0 - SIX_OVER_PI2
                if kind == 2:
                    r0 *= r0
                    r1 *= r1
                v0 = r0 * r0 / n
                if v0 > sup[i]:
                    sup[i] = v0
                    arg[i] = n
                    left[i] = False
                if nxt:
                    v1 = r1 * r1 / (n + 1.0)
                    if v1 > sup[i]:
                        sup[i] = v1
                        arg[i] = n + 1
                        left[i] = True
        while k < nmarks and marks[k] == n:
            out_M[k] = M
            out_m[k] = m
            out_Q[k] = Q
            k += 1
    ist[0] = M
    ist[1] = Q
    ist[2] = k
    fst[0] = s
    fst[1] = c




def _normalize_scans(scans, limit):
    out = []
    for kind, lo, hi in scans:
        if kind not in KINDS:
            raise InvalidParameterError(f"unknown ratio kind {kind!r}; expected one of {KINDS}")
        lo, hi = int(lo), int(hi)
        if not 1 <= lo <= hi <= limit:
            raise InvalidParameterError(f"scan range [{lo}, {hi}] must satisfy 1 <= lo <= hi <= {limit}")
        out.append((kind, lo, hi))
    return out


def _unpower(kind, v):
    v = float(v)
    return v ** 0.25 if kind == "R_over_qtr" else math.sqrt(v)


def _m_error(limit: int) -> float:
    # Neumaier: |error| <= 2u|S| + O(n u^2) sum|x_i|, with sum |mu(n)/n| <= log n + 1 and |S| <= 1
    u = np.finfo(float).eps / 2
    return 2 * u + 2 * limit * u * u * (math.log(limit) + 1) + u


def _checkpoint(x, M, m, Q) -> MertensCheckpoint:
    return MertensCheckpoint(int(x), int(M), float(m), int(Q), float(Q - SIX_OVER_PI2 * x))


class _Progress:
    """Append-only checkpoint CSV plus a sidecar holding the exact running state."""

    def __init__(self, csv_path, resume):
        self.final = os.fspath(csv_path)
        self.partial = self.final + ".partial"
        self.state_path = self.final + ".state.json"
        self.state = None
        if resume and os.path.exists(self.state_path) and os.path.exists(self.partial):
            with open(self.state_path, encoding="utf-8") as fh:
                self.state = json.load(fh)
            keep = []
            with open(self.partial, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
            for line in lines[1:]:
                parts = line.split(",")
                if len(parts) == 5 and parts[0].isdigit() and int(parts[0]) <= self.state["done"]:
                    keep.append(line)
            with atomic_write(self.partial) as fh:
                fh.write(",".join(CSV_HEADER) + "\n")
                fh.writelines(row + "\n" for row in keep)
        else:
            with atomic_write(self.partial) as fh:
                fh.write(",".join(CSV_HEADER) + "\n")

    def append(self, checkpoints):
        with open(self.partial, "a", encoding="utf-8", newline="") as fh:
            for c in checkpoints:
                fh.write(",".join(fmt(v) for v in c.row()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def save(self, state):
        with atomic_write(self.state_path) as fh:
            json.dump(state, fh)

    def finish(self):
        os.replace(self.partial, self.final)
        os.unlink(self.state_path)


def sieve_pass(limit: int, stride: int | None = None, points=(), scans=(), segment: int = DEFAULT_SEGMENT,
               workers: int | None = None, out_path=None, resume: bool = False, progress=None) -> SieveRun:
    """Stream ``mu(1..limit)`` once.

    Checkpoints are taken at multiples of ``stride``, at ``limit`` and at every
    integer in ``points``.  ``scans`` is a list of ``(kind, lo, hi)``.  With
    ``out_path`` the checkpoints go to a CSV; ``resume`` continues a run that was
    interrupted while writing that file.  Results do not depend on ``workers``.
    """
    limit = int(limit)
    if limit < 1:
        raise InvalidParameterError("limit must be >= 1")
    if stride is not None and int(stride) < 1:
        raise InvalidParameterError("stride must be >= 1")
    if not 1 <= segment <= MAX_SEGMENT:
        raise SegmentationError(f"segment size {segment} outside [1, {MAX_SEGMENT}]")
    workers = default_workers() if workers is None else max(1, int(workers))
    mark_set = {limit}
    if stride:
        mark_set.update(range(int(stride), limit + 1, int(stride)))
    for p in points:
        p = int(p)
        if not 1 <= p <= limit:
            raise InvalidParameterError(f"checkpoint {p} outside [1, {limit}]")
        mark_set.add(p)
    marks = np.array(sorted(mark_set), dtype=np.int64)
    scans = _normalize_scans(scans, limit)

    ist = np.zeros(3, dtype=np.int64)
    fst = np.zeros(2, dtype=np.float64)
    out_M = np.zeros(marks.size, dtype=np.int64)
    out_m = np.zeros(marks.size, dtype=np.float64)
    out_Q = np.zeros(marks.size, dtype=np.int64)
    kinds = np.array([KINDS.index(k) for k, _, _ in scans], dtype=np.int64)
    slo = np.array([lo for _, lo, _ in scans], dtype=np.int64)
    shi = np.array([hi for _, _, hi in scans], dtype=np.int64)
    sup = np.full(len(scans), -1.0)
    arg = np.zeros(len(scans), dtype=np.int64)
    left = np.zeros(len(scans), dtype=np.bool_)
    start = 1

    store = _Progress(out_path, resume) if out_path is not None else None
    if store is not None and store.state is not None:
        st = store.state
        if st["limit"] != limit or st["marks"] != len(marks) or st["scans"] != [list(s) for s in scans]:
            raise InvalidParameterError("resume state was written for a different run configuration")
        ist[:] = st["ist"]
        fst[:] = [float.fromhex(v) for v in st["fst"]]
        sup[:] = [float.fromhex(v) for v in st["sup"]]
        arg[:] = st["arg"]
        left[:] = st["left"]
        k = int(ist[2])
        out_M[:k] = st["M"]
        out_m[:k] = [float.fromhex(v) for v in st["m"]]
        out_Q[:k] = st["Q"]
        start = st["done"] + 1

    primes = primes_up_to(math.isqrt(limit))
    bounds = [(lo, min(lo + segment - 1, limit)) for lo in range(start, limit + 1, segment)]
    batch = max(1, 2 * workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for b in range(0, len(bounds), batch):
            chunk = bounds[b : b + batch]
            mus = pool.map(lambda lh: _mu_kernel(lh[0], lh[1], primes), chunk)
            for (lo, hi), mu in zip(chunk, mus):
                k0 = int(ist[2])
                _accumulate(mu, lo, ist, fst, marks, out_M, out_m, out_Q, kinds, slo, shi, sup, arg, left)
                k1 = int(ist[2])
                if store is not None:
                    store.append(_checkpoint(marks[i], out_M[i], out_m[i], out_Q[i]) for i in range(k0, k1))
                    store.save({
                        "limit": limit, "done": hi, "marks": len(marks), "scans": [list(s) for s in scans],
                        "ist": ist.tolist(), "fst": [float(v).hex() for v in fst],
                        "sup": [float(v).hex() for v in sup], "arg": arg.tolist(), "left": left.tolist(),
                        "M": out_M[:k1].tolist(), "m": [float(v).hex() for v in out_m[:k1]], "Q": out_Q[:k1].tolist(),
                    })
                if progress is not None:
                    progress(hi, limit)
    if store is not None:
        store.finish()

    run = SieveRun(limit, m_error=_m_error(limit))
    run.checkpoints = [_checkpoint(marks[i], out_M[i], out_m[i], out_Q[i]) for i in range(marks.size)]
    run.sups = [SupRecord(k, lo, hi, _unpower(k, sup[i]), int(arg[i]), bool(left[i])) for i, (k, lo, hi) in enumerate(scans)]
    return run


def mertens_table(limit: int, stride: int, points=(), **kwargs) -> list:
    """Checkpoints at multiples of ``stride``, at ``limit`` and at ``points``."""
    return sieve_pass(limit, stride=stride, points=points, **kwargs).checkpoints


def sup_ratio_scan(kind: str, lo: int, hi: int, **kwargs) -> SupRecord:
    """Exact supremum of the chosen ratio over real ``x`` in ``[lo, hi]``."""
    return sieve_pass(int(hi), scans=[(kind, lo, hi)], **kwargs).sups[0]


# ---------------------------------------------------------------- small exact tables

class MertensOracle:
    """In-memory exact ``mu``, ``M``, ``Q`` and compensated ``m`` for ``n <= limit``."""

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.mu = mobius_range(self.limit)
        self._M = np.cumsum(self.mu, dtype=np.int64)
        self._Q = np.cumsum(self.mu != 0, dtype=np.int64)
        self._m = None

    def _check(self, n):
        n = np.asarray(n, dtype=np.int64)
        if np.any(n < 0) or np.any(n > self.limit):
            raise InvalidParameterError(f"argument outside table range [0, {self.limit}]")
        return n

    def M(self, n):
        out = self._M[self._check(n)]
        return int(out) if np.ndim(out) == 0 else out

    def Q(self, n):
        out = self._Q[self._check(n)]
        return int(out) if np.ndim(out) == 0 else out

    def R(self, x):
        return self.Q(np.floor(x).astype(np.int64) if np.ndim(x) else int(math.floor(x))) - SIX_OVER_PI2 * np.asarray(x, dtype=float)

    def m(self, n):
        if self._m is None:
            self._m = _prefix_m(self.mu)
        out = self._m[self._check(n)]
        return float(out) if np.ndim(out) == 0 else out


@numba.njit(cache=True)
def _prefix_m(mu):
    out = np.zeros(mu.shape[0])
    s = 0.0
    c = 0.0
    for n in range(1, mu.shape[0]):
        if mu[n] != 0:
            x = mu[n] / n
            t = s + x
            if abs(s) >= abs(x):
                c += (s - t) + x
            else:
                c += (x - t) + s
            s = t
        out[n] = s + c
    return out


def verify_difintsq(x: int, oracle: MertensOracle | None = None) -> bool:
    """Check ``Q(x) = sum_{k<=x} M(floor(sqrt(x/k)))`` in exact integers."""
    x = int(x)
    if x < 1:
        raise InvalidParameterError("x must be >= 1")
    if oracle is None or oracle.limit < x:
        oracle = MertensOracle(x)
    k = np.arange(1, x + 1, dtype=np.int64)
    q = x // k
    r = np.floor(np.sqrt(q.astype(float))).astype(np.int64)
    r -= (r * r > q).astype(np.int64)
    r += ((r + 1) * (r + 1) <= q).astype(np.int64)
    return int(oracle.Q(x)) == int(oracle.M(r).sum())


# ---------------------------------------------------------------- checkpoint files

def write_checkpoints(path, checkpoints) -> None:
    with atomic_write(path) as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for c in checkpoints:
            fh.write(",".join(fmt(v) for v in c.row()) + "\n")


def read_checkpoints(path) -> dict:
    """Parse a checkpoint CSV into ``{x: MertensCheckpoint}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if lineno == 1 and line.replace(" ", "") == ",".join(CSV_HEADER):
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise FormatError(f"expected 5 fields, got {len(parts)}", line=lineno)
            try:
                c = MertensCheckpoint(int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3]), float(parts[4]))
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from None
            out[c.x] = c
    return out


__all__ = [
    "KINDS", "MertensCheckpoint", "MertensOracle", "SieveRun", "SieveSegment", "SupRecord",
    "default_workers", "mertens_table", "mobius_range", "mobius_segment", "primes_up_to",
    "read_checkpoints", "sieve_pass", "sup_ratio_scan", "verify_difintsq", "write_checkpoints",
]
