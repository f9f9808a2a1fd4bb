"""Riemann zeta evaluation with explicit remainders, critical-line zeros and residues.

Values come from Euler-Maclaurin summation with cutoff ``N`` and a Bernoulli
correction of order ``m``.  Every evaluator returns or records an absolute error
estimate made of the Euler-Maclaurin remainder bound plus a rounding allowance.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numba
import numpy as np

from ._numerics import atomic_write, fmt
from .errors import (
    AccuracyError,
    FormatError,
    IncompleteTableError,
    InvalidParameterError,
    NearMultipleZeroError,
    PoleProximityError,
    PotentialZeroError,
    RangeError,
)

EPS = np.finfo(float).eps
MAX_ORDER = 100
SIMPLICITY_FLOOR = 1e-6

_B_OVER_FACT = [0.0] + [float(mpmath.bernoulli(2 * k) / mpmath.factorial(2 * k)) for k in range(1, MAX_ORDER + 2)]
_B_ABS = [0.0] + [abs(float(mpmath.bernoulli(2 * k))) for k in range(1, 12)]
_TWO_PI_LD = np.longdouble("6.28318530717958647692528676655900576839")
_LONG_PHASE = np.finfo(np.longdouble).eps < EPS


@dataclass(frozen=True)
class EvalAccuracy:
    """Euler-Maclaurin settings.

    ``em_terms=None`` selects ``max(2*ceil(|t|/2pi), 30)``, or ``max(2*ceil(|t|/2pi) + 4, 12)`` when ``Re s < 0``;
    ``bernoulli_order=None`` raises the order until the remainder bound meets ``target_abs_err``.
    """

    em_terms: int | None = None
    bernoulli_order: int | None = None
    target_abs_err: float = 1e-12

    def cutoff(self, t: float, sigma: float = 0.5) -> int:
        need = math.ceil(abs(t) / (2 * math.pi))
        if self.em_terms is None:
            # left of the line a short head keeps |n^{-s}| and its rounding small
            return max(2 * need + 4, 12) if sigma < 0 else max(2 * need, 30)
        if self.em_terms < need:
            raise AccuracyError(f"em_terms={self.em_terms} below admissible ceil(|t|/2pi)={need}")
        return self.em_terms


DEFAULT_ACCURACY = EvalAccuracy()


# ---------------------------------------------------------------- Dirichlet heads

@numba.njit(cache=True)
def _heads_kernel(sigma, ts, ns, logs, want_deriv):
    m = ts.shape[0]
    val = np.empty(m, dtype=np.complex128)
    der = np.empty(m, dtype=np.complex128)
    mag_sum = np.empty(m, dtype=np.float64)
    for i in range(m):
        sr = 0.0
        si = 0.0
        dr = 0.0
        di = 0.0
        ms = 0.0
        t = ts[i]
        for n in range(1, ns[i]):
            ln = logs[n]
            mag = math.exp(-sigma[i] * ln)
            ph = t * ln
            c = mag * math.cos(ph)
            s = -mag * math.sin(ph)
            sr += c
            si += s
            ms += mag
            if want_deriv:
                dr -= ln * c
                di -= ln * s
        val[i] = complex(sr, si)
        der[i] = complex(dr, di)
        mag_sum[i] = ms
    return val, der, mag_sum


_LOG_TABLE = np.zeros(2)


def _log_table(nmax):
    global _LOG_TABLE
    if _LOG_TABLE.shape[0] <= nmax:
        size = max(nmax + 1, 2 * _LOG_TABLE.shape[0])
        table = np.zeros(size)
        table[1:] = np.log(np.arange(1, size, dtype=float))
        _LOG_TABLE = table
    return _LOG_TABLE


@functools.lru_cache(maxsize=8)
def _phase_cache(t: float, n: int):
    """``(log k, exp(-i t log k))`` for ``1 <= k < n`` with the phase reduced in long double."""
    k = np.arange(1, n, dtype=np.longdouble)
    logk = np.log(k)
    ph = np.fmod(np.longdouble(t) * logk, _TWO_PI_LD).astype(float)
    rot = np.exp(-1j * ph)
    rot.setflags(write=False)
    lg = logk.astype(float)
    lg.setflags(write=False)
    return lg, rot


def _phase_error(t: float, n: int) -> float:
    if _LONG_PHASE:
        return 4 * float(np.finfo(np.longdouble).eps) * (abs(t) * math.log(max(n, 2)) + 2 * math.pi) + 2 * EPS
    return 2 * EPS * (abs(t) * math.log(max(n, 2)) + 2 * math.pi)


def _heads(s: np.ndarray, ns: np.ndarray, want_deriv: bool):
    """Head sums for an array of points; large heights use the cached long-double phases."""
    s = np.asarray(s, dtype=complex)
    val = np.empty(s.shape, dtype=complex)
    der = np.empty(s.shape, dtype=complex)
    rnd = np.empty(s.shape, dtype=float)
    big = np.abs(s.imag) * np.log(np.maximum(ns, 2)) > 1e5
    small = ~big
    if small.any():
        logs = _log_table(int(ns[small].max()))
        v, d, ms = _heads_kernel(s.real[small], s.imag[small], ns[small].astype(np.int64), logs, want_deriv)
        val[small], der[small] = v, d
        tl = np.abs(s.imag[small]) * np.log(np.maximum(ns[small], 2))
        rnd[small] = (4 * EPS + 2 * EPS * (tl + 2 * np.pi)) * ms * (1 + want_deriv * np.log(np.maximum(ns[small], 2)))
    for i in np.nonzero(big)[0]:
        lg, rot = _phase_cache(float(s.imag[i]), int(ns[i]))
        mag = np.exp(-s.real[i] * lg)
        terms = mag * rot
        val[i] = terms.sum()
        if want_deriv:
            der[i] = -(lg * terms).sum()
        ms = mag.sum()
        rnd[i] = (4 * EPS + _phase_error(s.imag[i], int(ns[i]))) * ms * (1 + want_deriv * lg[-1])
    return val, der, rnd


# ---------------------------------------------------------------- Euler-Maclaurin tail

def _em_tail(s, ns, target, order, want_deriv):
    """Correction terms after the head, with remainder bounds for value and derivative."""
    s = np.asarray(s, dtype=complex)
    n = ns.astype(float)
    logn = np.log(n)
    sigma = s.real
    ns_pow = np.exp(-s * logn)  # N^{-s}
    val = n * ns_pow / (s - 1) + ns_pow / 2
    der = -logn * n * ns_pow / (s - 1) - n * ns_pow / (s - 1) ** 2 - logn * ns_pow / 2
    # r = prod_{j=0}^{2k-2}(s+j) * N^{1-2k} stays bounded because |s|/N is O(1)
    r = s / n
    dr = 1 / n
    n2 = n * n
    mag = np.abs(ns_pow)  # N^{-sigma}
    fixed = order is not None
    kmax = order if fixed else MAX_ORDER
    err = np.full(s.shape, np.inf)
    derr = np.full(s.shape, np.inf)
    for k in range(1, kmax + 1):
        val = val + _B_OVER_FACT[k] * r * ns_pow
        if want_deriv:
            der = der + _B_OVER_FACT[k] * (dr - r * logn) * ns_pow
        # remainder after k terms: |prod_{j=0}^{2k+1}(s+j)| |B_{2k+2}|/(2k+2)! N^{-sigma-2k-1}/(sigma+2k+1)
        q, dq = r, dr
        for j in (2 * k - 1, 2 * k, 2 * k + 1):
            q, dq = q * (s + j), dq * (s + j) + q
        q, dq = q / n2, dq / n2
        a = sigma + 2 * k + 1
        bk = abs(_B_OVER_FACT[k + 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            err = np.where(a > 0, np.abs(q) * bk * mag / a, np.inf)
            derr = np.where(a > 0, bk * mag * (np.abs(dq) / a + np.abs(q) * (logn / a + 1 / a**2)), np.inf)
        for j in (2 * k - 1, 2 * k):
            r, dr = r * (s + j), dr * (s + j) + r
        r, dr = r / n2, dr / n2
        done = err <= target if not want_deriv else (err <= target) & (derr <= target)
        if not fixed and done.all():
            break
    return val, der, err, derr


def _prepare(s, acc):
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(s == 1):
        raise PoleProximityError("zeta has a pole at s = 1", pole=1 + 0j)
    ns = np.array([acc.cutoff(z.imag, z.real) for z in s], dtype=np.int64)
    return s, ns


def zeta_with_error(s, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """Return ``(zeta(s), abs_error_bound)``; ``s`` may be a scalar or an array."""
    scalar = np.ndim(s) == 0
    s_arr, ns = _prepare(s, acc)
    head, _, rnd = _heads(s_arr, ns, False)
    tail, _, err, _ = _em_tail(s_arr, ns, acc.target_abs_err, acc.bernoulli_order, False)
    value = head + tail
    total_err = err + rnd + 4 * EPS * np.abs(tail)
    if np.any(err > acc.target_abs_err):
        raise AccuracyError(f"Euler-Maclaurin remainder {float(err.max()):.3g} exceeds target {acc.target_abs_err:.3g}")
    if scalar:
        return complex(value[0]), float(total_err[0])
    return value, total_err


def zeta(s, acc: EvalAccuracy = DEFAULT_ACCURACY):
    return zeta_with_error(s, acc)[0]


def zeta_prime_with_error(s, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """Return ``(zeta'(s), abs_error_bound)`` from the termwise-differentiated expansion."""
    scalar = np.ndim(s) == 0
    s_arr, ns = _prepare(s, acc)
    _, head, rnd = _heads(s_arr, ns, True)
    _, tail, _, derr = _em_tail(s_arr, ns, acc.target_abs_err, acc.bernoulli_order, True)
    value = head + tail
    total_err = derr + rnd + 4 * EPS * np.abs(tail)
    if np.any(derr > acc.target_abs_err):
        raise AccuracyError(f"derivative remainder {float(derr.max()):.3g} exceeds target {acc.target_abs_err:.3g}")
    if scalar:
        return complex(value[0]), float(total_err[0])
    return value, total_err


def zeta_prime(s, acc: EvalAccuracy = DEFAULT_ACCURACY):
    return zeta_prime_with_error(s, acc)[0]


# ---------------------------------------------------------------- log-gamma, theta, Z

_STIRLING_TERMS = 8
_STIRLING_COEF = [float(mpmath.bernoulli(2 * k)) / (2 * k * (2 * k - 1)) for k in range(1, _STIRLING_TERMS + 1)]


def loggamma(z):
    """Principal log-Gamma by upward shift to ``Re z >= 15`` and Stirling's series."""
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))):
        raise PoleProximityError("Gamma has a pole at a nonpositive integer")
    shift = np.zeros(z.shape, dtype=complex)
    w = z.copy()
    while True:
        low = w.real < 15
        if not low.any():
            break
        shift = shift + np.where(low, np.log(np.where(low, w, 1)), 0)
        w = np.where(low, w + 1, w)
    out = (w - 0.5) * np.log(w) - w + 0.5 * math.log(2 * math.pi)
    inv = 1 / w
    inv2 = inv * inv
    powk = inv
    for c in _STIRLING_COEF:
        out = out + c * powk
        powk = powk * inv2
    out = out - shift
    return complex(out) if out.ndim == 0 else out


def loggamma_remainder(z, m: int = 1) -> float:
    """Bound on Stirling's series remainder after ``m`` correction terms."""
    z = complex(z)
    k = m + 1
    b = abs(float(mpmath.bernoulli(2 * k)))
    sec = 1 / math.cos(abs(np.angle(z)) / 2)
    return b / ((2 * k) * (2 * k - 1) * abs(z) ** (2 * k - 1)) * sec ** (2 * k)


def theta(t):
    """Riemann-Siegel theta ``Im log Gamma(1/4 + it/2) - (t/2) log pi``."""
    t_arr = np.asarray(t, dtype=float)
    out = loggamma(0.25 + 0.5j * t_arr).imag - 0.5 * t_arr * math.log(math.pi)
    return float(out) if np.ndim(t) == 0 else out


def theta_asymptotic(t: float) -> float:
    """Large-t expansion of theta, good to ~1e-12 for t >= 20."""
    return (
        t / 2 * math.log(t / (2 * math.pi)) - t / 2 - math.pi / 8
        + 1 / (48 * t) + 7 / (5760 * t**3) + 31 / (80640 * t**5) + 127 / (430080 * t**7)
    )


def hardy_z(t, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """Hardy's Z function; returns a float (or array) after checking the discarded imaginary part."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise InvalidParameterError("hardy_z needs t > 0")
    val, err = zeta_with_error(0.5 + 1j * t_arr, acc)
    prod = np.exp(1j * theta(t_arr)) * val
    tol = 1e-6 + 1e3 * (err + EPS * np.abs(val) * (1 + np.abs(t_arr) * np.log(np.maximum(t_arr, 2))))
    if np.any(np.abs(prod.imag) > tol):
        raise AccuracyError("imaginary residue of e^{i theta} zeta is not negligible")
    out = prod.real
    return float(out[0]) if np.ndim(t) == 0 else out


def expected_zero_count(T: float) -> int:
    """Nearest integer to ``theta(T)/pi + 1``."""
    return int(math.floor(theta(T) / math.pi + 1 + 0.5))


def arg_zeta_s(T: float, acc: EvalAccuracy = DEFAULT_ACCURACY, points: int = 512) -> float:
    """``S(T) = arg zeta(1/2 + iT) / pi`` by continuous variation from ``3 + iT``.

    The grid is doubled until no step changes the phase by more than 0.5 rad.
    """
    for _ in range(8):
        sig = np.linspace(3.0, 0.5, points)
        vals = zeta(sig + 1j * T, acc)
        if np.any(np.abs(vals) < 1e-8):
            raise PotentialZeroError(f"zeta nearly vanishes on the path at height {T}")
        steps = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(steps)) < 0.5:
            return float((np.angle(vals[0]) + steps.sum()) / math.pi)
        points *= 2
    raise AccuracyError(f"argument tracking did not resolve at height {T}")


def exact_zero_count(T: float, acc: EvalAccuracy = DEFAULT_ACCURACY) -> int:
    """``N(T) = theta(T)/pi + 1 + S(T)`` rounded; the unrounded value sits within 1e-6 of an integer."""
    value = theta(T) / math.pi + 1 + arg_zeta_s(T, acc)
    n = round(value)
    if abs(value - n) > 1e-6:
        raise AccuracyError(f"zero count {value} at height {T} is not near an integer")
    return int(n)


# ---------------------------------------------------------------- zero tables

@dataclass(frozen=True)
class ZetaZero:
    gamma: float
    inv_zeta_prime: complex | None = None
    err: float = 0.0


@dataclass(frozen=True)
class ZeroTable:
    height_T: float
    zeros: tuple = ()
    complete: bool = False

    def __post_init__(self):
        g = [z.gamma for z in self.zeros]
        if any(b <= a for a, b in zip(g, g[1:])):
            raise InvalidParameterError("zero ordinates must be strictly increasing")
        if g and (g[0] <= 0 or g[-1] > self.height_T):
            raise InvalidParameterError("zero ordinates must lie in (0, height_T]")

    @property
    def gammas(self) -> np.ndarray:
        return np.array([z.gamma for z in self.zeros], dtype=float)

    @property
    def has_residues(self) -> bool:
        return all(z.inv_zeta_prime is not None for z in self.zeros)

    def residue_array(self) -> np.ndarray:
        return np.array([z.inv_zeta_prime for z in self.zeros], dtype=complex)

    def truncated(self, T: float) -> "ZeroTable":
        """Zeros with ``gamma <= T``; complete when this table is complete up to at least ``T``."""
        kept = tuple(z for z in self.zeros if z.gamma <= T)
        complete = self.complete and T <= self.height_T
        return ZeroTable(T, kept, complete)


def _scan_sign_changes(lo, hi, step, acc, block=4096):
    grid = np.arange(lo, hi + step / 2, step)
    grid[-1] = min(grid[-1], hi)
    vals = np.empty_like(grid)
    for i in range(0, len(grid), block):
        vals[i : i + block] = hardy_z(grid[i : i + block], acc)
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    return [(grid[i], grid[i + 1]) for i in change], grid, vals


def find_zeros(T: float, acc: EvalAccuracy = DEFAULT_ACCURACY, step: float = 0.05, max_halvings: int = 4) -> ZeroTable:
    """Zeros of Z(t) on (0, T] by sign changes, refined to ~1e-12 with Brent's method.

    The grid is halved until the number of sign changes equals the zero count
    ``theta(T)/pi + 1 + S(T)``; where ``|S(T)| < 1/2`` this is ``round(theta(T)/pi + 1)``.
    """
    if T < 15:
        raise InvalidParameterError("find_zeros needs T >= 15")
    expected = exact_zero_count(T, acc)
    lo = 10.0  # no zeros below 14.13
    brackets = []
    for _ in range(max_halvings + 1):
        brackets, grid, vals = _scan_sign_changes(lo, T, step, acc)
        if len(brackets) == expected:
            break
        step /= 2
    else:
        gap = _largest_gap(brackets, lo, T)
        raise IncompleteTableError(
            f"found {len(brackets)} sign changes, expected {expected} at T={T}", gap=gap
        )
    a = np.array([br[0] for br in brackets])
    b = np.array([br[1] for br in brackets])
    roots = _refine_roots(lambda t: hardy_z(t, acc), a, b)
    zeros = [ZetaZero(float(g)) for g in roots]
    return ZeroTable(float(T), tuple(zeros), True)


def _refine_roots(f, a, b, xtol=1e-13, max_iter=200):
    """Vectorised Illinois regula falsi on sign-changing brackets ``[a, b]``."""
    a, b = a.astype(float).copy(), b.astype(float).copy()
    if a.size == 0:
        return a
    fa, fb = f(a), f(b)
    side = np.zeros(a.shape, dtype=int)
    for _ in range(max_iter):
        active = (b - a) > xtol * np.maximum(1.0, np.abs(a))
        active &= (fa != 0) & (fb != 0)
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        ai, bi, fai, fbi = a[idx], b[idx], fa[idx], fb[idx]
        c = bi - fbi * (bi - ai) / (fbi - fai)
        bad = ~((c > ai) & (c < bi))
        c = np.where(bad, 0.5 * (ai + bi), c)
        fc = f(c)
        left = np.sign(fc) == np.sign(fai)
        # c replaces a where f(c) has the sign of f(a), else replaces b
        s_old = side[idx]
        new_a = np.where(left, c, ai)
        new_fa = np.where(left, fc, np.where(s_old == -1, fai / 2, fai))
        new_b = np.where(left, bi, c)
        new_fb = np.where(left, np.where(s_old == 1, fbi / 2, fbi), fc)
        side[idx] = np.where(left, 1, -1)
        a[idx], fa[idx], b[idx], fb[idx] = new_a, new_fa, new_b, new_fb
        # guarantee progress: fall back to bisection where the bracket barely shrank
        width = b[idx] - a[idx]
        slow = width > 0.5 * (bi - ai)
        if slow.any():
            j = idx[slow]
            m = 0.5 * (a[j] + b[j])
            fm = f(m)
            lft = np.sign(fm) == np.sign(fa[j])
            a[j] = np.where(lft, m, a[j])
            fa[j] = np.where(lft, fm, fa[j])
            b[j] = np.where(lft, b[j], m)
            fb[j] = np.where(lft, fb[j], fm)
            side[j] = 0
    exact_a = fa == 0
    out = np.where(exact_a, a, np.where(fb == 0, b, a - fa * (b - a) / (fb - fa)))
    return out


def _largest_gap(brackets, lo, hi):
    pts = [lo] + [0.5 * (a + b) for a, b in brackets] + [hi]
    widths = [(pts[i + 1] - pts[i], pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    _, a, b = max(widths)
    return (a, b)


def residues(table: ZeroTable, acc: EvalAccuracy = DEFAULT_ACCURACY, floor: float = SIMPLICITY_FLOOR) -> ZeroTable:
    """Attach ``1/zeta'(rho)`` and an error estimate to every zero."""
    if not table.zeros:
        return table
    g = table.gammas
    rho = 0.5 + 1j * g
    dz, derr = zeta_prime_with_error(rho, acc)
    if np.any(np.abs(dz) < floor):
        bad = float(g[np.argmin(np.abs(dz))])
        raise NearMultipleZeroError(f"|zeta'(rho)| below {floor} at gamma={bad}")
    h = 1e-4
    d2 = (zeta_prime(rho + h, acc) - zeta_prime(rho - h, acc)) / (2 * h)
    zerr = zeta_with_error(rho, acc)[1]
    loc = np.maximum(1e-12, (zerr + 1e-13 * np.abs(dz)) / np.abs(dz))
    abs_dz = np.abs(dz)
    err = (derr + np.abs(d2) * loc) / abs_dz**2 * (1 + 1e-6)
    zeros = tuple(ZetaZero(z.gamma, complex(1 / d), float(e)) for z, d, e in zip(table.zeros, dz, err))
    return ZeroTable(table.height_T, zeros, table.complete)


# ---------------------------------------------------------------- persistence

def export_table(table: ZeroTable, path) -> None:
    """Write ordinates (plain list) or, when residues are present, the residue CSV."""
    with atomic_write(path) as fh:
        fh.write(f"# height_T={fmt(table.height_T)} complete={int(table.complete)}\n")
        if table.has_residues and table.zeros:
            fh.write("gamma,re_inv_zp,im_inv_zp,err\n")
            for z in table.zeros:
                r = z.inv_zeta_prime
                fh.write(f"{fmt(z.gamma)},{fmt(r.real)},{fmt(r.imag)},{fmt(z.err)}\n")
        else:
            for z in table.zeros:
                fh.write(f"{fmt(z.gamma)}\n")


def import_zeros(path, height_T: float | None = None) -> ZeroTable:
    """Read a zero list or residue CSV; completeness is recomputed from the zero count."""
    zeros = []
    header_T = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("height_T="):
                        try:
                            header_T = float(token.split("=", 1)[1])
                        except ValueError as exc:
                            raise FormatError("bad height_T", line=lineno) from exc
                continue
            if line.startswith("gamma"):
                continue
            parts = line.split(",")
            try:
                if len(parts) == 1:
                    zeros.append(ZetaZero(float(parts[0])))
                elif len(parts) == 4:
                    g, re, im, err = map(float, parts)
                    zeros.append(ZetaZero(g, complex(re, im), err))
                else:
                    raise ValueError("expected 1 or 4 fields")
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from exc
            if len(zeros) > 1 and zeros[-1].gamma <= zeros[-2].gamma:
                raise FormatError("ordinates must be strictly increasing", line=lineno)
    T = height_T if height_T is not None else header_T
    if T is None:
        T = zeros[-1].gamma if zeros else 0.0
        complete = False
    else:
        complete = len(zeros) == exact_zero_count(T) if T >= 14 else not zeros
    if T <= 0 and not zeros:
        T = 1.0
    return ZeroTable(float(T), tuple(zeros), complete)


# ---------------------------------------------------------------- functional equation

def functional_equation_rhs(s, acc: EvalAccuracy = DEFAULT_ACCURACY) -> complex:
    """``(2pi)^{s-1} 2 sin(pi s/2) Gamma(1-s) zeta(1-s)``."""
    s = complex(s)
    if s.imag == 0 and s.real >= 1 and s.real == round(s.real):
        raise PoleProximityError("Gamma(1-s) has a pole", pole=s)
    if s.imag == 0 and s.real <= 0 and s.real % 2 == 0:
        return 0j
    lg = loggamma(1 - s)
    z1 = zeta(1 - s, acc)
    return complex(np.exp((s - 1) * math.log(2 * math.pi) + lg) * 2 * np.sin(np.pi * s / 2) * z1)


# ---------------------------------------------------------------- left half-plane

def inv_zeta_left_bound(s, acc: EvalAccuracy = DEFAULT_ACCURACY) -> float:
    """Upper bound for ``1/|zeta(s)|`` valid for ``Re s <= 0`` and ``|Im s| >= 1``."""
    s = complex(s)
    if s.real > 0 or abs(s.imag) < 1:
        raise InvalidParameterError("needs Re s <= 0 and |Im s| >= 1")
    return (2 * math.pi * math.e / abs(s.imag)) ** (0.5 - s.real) * math.sqrt(math.e) / abs(zeta(1 - s, acc))


def inv_zeta_left_bound_general(s, acc: EvalAccuracy = DEFAULT_ACCURACY) -> float:
    """Upper bound for ``1/|zeta(s)|`` valid for ``Re s <= 1/2``, ``s`` not a trivial zero."""
    s = complex(s)
    if s.real > 0.5:
        raise InvalidParameterError("needs Re s <= 1/2")
    sig, t = s.real, abs(s.imag)
    e = math.exp(-math.pi * t / 2)
    # e^{pi|t|/2} / (2|sin(pi s/2)|) without overflow
    denom = math.sqrt((2 * math.sin(math.pi * sig / 2) * e) ** 2 + (1 - e * e) ** 2)
    if denom == 0:
        raise PoleProximityError("s is a trivial zero", pole=s)
    return (2 * math.pi * math.e / abs(1 - s)) ** (0.5 - sig) / denom * math.sqrt(math.e) / abs(zeta(1 - s, acc))


def left_region_sup(T: float, r0: float = -1 / 64) -> float:
    """Sup of ``1/|zeta(r + iT)|`` over ``r <= r0 < 0`` for ``T >= 2 pi e``."""
    if T < 2 * math.pi * math.e:
        raise InvalidParameterError("needs T >= 2 pi e")
    a = 1 - r0
    return (2 * math.pi * math.e / T) ** (0.5 - r0) * math.sqrt(math.e) * zeta(a).real / zeta(2 * a).real


def _zeta_odd(k: int, terms: int = 2000) -> float:
    """``zeta(k)`` for integer ``k >= 2``: compensated partial sum plus a three-term tail."""
    head = math.fsum(float(m) ** -k for m in range(terms, 0, -1))
    N = float(terms)
    tail = N ** (1 - k) / (k - 1) - N**-k / 2 + k * N ** (-k - 1) / 12
    return head + tail


def zeta_prime_trivial(n: int) -> float:
    """``1/zeta'(-2n) = (-1)^n (2pi)^{2n+1} / (pi (2n)! zeta(2n+1))``, assembled in logs."""
    if int(n) != n or n < 1:
        raise InvalidParameterError("n must be a positive integer")
    n = int(n)
    log_mag = (2 * n + 1) * math.log(2 * math.pi) - math.log(math.pi) - math.lgamma(2 * n + 1) - math.log(_zeta_odd(2 * n + 1))
    if log_mag < -744:
        raise RangeError(f"1/zeta'(-{2 * n}) underflows double precision")
    return (-1) ** n * math.exp(log_mag)


# ---------------------------------------------------------------- min |zeta| scan

@dataclass
class ScanReport:
    T: float
    sigma_lo: float
    sigma_hi: float
    value: float
    argmax: float
    surrogate_error: float
    survivors: int
    direct_error: float


def _cheb_fit(f, lo, hi, n):
    k = np.arange(n)
    x = np.cos(np.pi * (k + 0.5) / n)
    vals = f(0.5 * (hi + lo) + 0.5 * (hi - lo) * x)
    j = np.arange(n)[:, None]
    coef = (2.0 / n) * (np.cos(np.pi * j * (k[None, :] + 0.5) / n) @ vals)
    coef[0] /= 2
    return coef


def scan_report(T: float, sigma_lo: float, sigma_hi: float, acc: EvalAccuracy = DEFAULT_ACCURACY,
                nodes: int = 96, start_level: int = 16, end_level: int = 22, refine: int = 23) -> ScanReport:
    """Maximise ``1/|zeta(sigma + iT)|`` over ``sigma`` in ``[sigma_lo, sigma_hi]``.

    A Chebyshev interpolant of zeta along the segment replaces direct evaluation
    during the search; its error is measured at separate check points and the final
    argmax is re-evaluated directly.  Subintervals of width 2^-16 are discarded when a
    Lipschitz lower bound exceeds the running minimum, survivors are bisected to
    width 2^-22, and stationary points of |zeta|^2 are located with 23 more bisections.
    """
    if sigma_lo > sigma_hi:
        raise InvalidParameterError("sigma_lo must not exceed sigma_hi")
    if sigma_lo == sigma_hi:
        v, e = zeta_with_error(complex(sigma_lo, T), acc)
        return ScanReport(T, sigma_lo, sigma_hi, 1 / abs(v), sigma_lo, 0.0, 1, e)
    lo, hi = float(sigma_lo), float(sigma_hi)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    zf = lambda sig: zeta(np.asarray(sig) + 1j * T, acc)  # noqa: E731
    coef = _cheb_fit(zf, lo, hi, nodes)
    cheb = np.polynomial.chebyshev
    dcoef = cheb.chebder(coef) / half
    check = mid + half * np.cos(np.pi * (np.arange(31) + 0.25) / 31)
    sur_err = float(np.max(np.abs(cheb.chebval((check - mid) / half, coef) - zf(check))))
    sur_err += float(np.sum(np.abs(coef[-8:])))
    d2coef = cheb.chebder(dcoef) / half
    curv = float(np.sum(np.abs(d2coef)))  # sup |p''| on the segment

    p = lambda sig: cheb.chebval((sig - mid) / half, coef)  # noqa: E731
    dp = lambda sig: cheb.chebval((sig - mid) / half, dcoef)  # noqa: E731

    width = (hi - lo) / 2**start_level
    a = lo + width * np.arange(2**start_level)
    b = a + width
    b[-1] = hi
    best = np.inf
    for level in range(start_level, end_level + 1):
        pa, pb = np.abs(p(a)), np.abs(p(b))
        slope = np.maximum(np.abs(dp(a)), np.abs(dp(b)))
        best = min(best, float(pa.min()), float(pb.min()))
        h = b - a
        lower = np.minimum(pa, pb) - 0.5 * h * (slope + 0.5 * h * curv)
        if np.any(lower <= sur_err):
            i = int(np.argmin(lower))
            raise PotentialZeroError(f"cannot exclude a zero of zeta near sigma={a[i]:.9g}+i{T}")
        keep = lower <= best
        a, b = a[keep], b[keep]
        if level < end_level:
            m = 0.5 * (a + b)
            a, b = np.concatenate([a, m]), np.concatenate([m, b])
            order = np.argsort(a)
            a, b = a[order], b[order]
    survivors = len(a)
    g = lambda sig: (dp(sig) * np.conj(p(sig))).real  # noqa: E731
    ga, gb = g(a), g(b)
    cand = [lo, hi, *a, *b]
    sel = ga * gb <= 0
    sa, sb, fa = a[sel], b[sel], ga[sel]
    for _ in range(refine):
        m = 0.5 * (sa + sb)
        fm = g(m)
        left = fa * fm <= 0
        sb = np.where(left, m, sb)
        sa = np.where(left, sa, m)
        fa = np.where(left, fa, fm)
    cand.extend(0.5 * (sa + sb))
    cand = np.array(cand)
    vals = np.abs(p(cand))
    arg = float(cand[np.argmin(vals)])
    direct, derr = zeta_with_error(complex(arg, T), acc)
    return ScanReport(T, lo, hi, 1 / abs(direct), arg, sur_err, survivors, derr)


def min_inv_zeta_scan(T: float, sigma_lo: float, sigma_hi: float, acc: EvalAccuracy = DEFAULT_ACCURACY) -> float:
    return scan_report(T, sigma_lo, sigma_hi, acc).value


def zeta_line_max(T: float, acc: EvalAccuracy = DEFAULT_ACCURACY) -> float:
    """Upper estimate of ``max_{r <= 1} 1/|zeta(r + iT)|``: scan on [-1/64, 1] plus the left bound."""
    return max(min_inv_zeta_scan(T, -1 / 64, 1.0, acc), left_region_sup(T))


__all__ = [
    "EvalAccuracy",
    "ZetaZero",
    "ZeroTable",
    "ScanReport",
    "zeta",
    "zeta_with_error",
    "zeta_prime",
    "zeta_prime_with_error",
    "functional_equation_rhs",
    "loggamma",
    "loggamma_remainder",
    "theta",
    "theta_asymptotic",
    "hardy_z",
    "expected_zero_count",
    "exact_zero_count",
    "arg_zeta_s",
    "find_zeros",
    "residues",
    "min_inv_zeta_scan",
    "scan_report",
    "zeta_line_max",
    "left_region_sup",
    "inv_zeta_left_bound",
    "inv_zeta_left_bound_general",
    "zeta_prime_trivial",
    "import_zeros",
    "export_table",
]
