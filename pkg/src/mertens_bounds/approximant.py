"""Truncated exponentials, their optimal entire L1 approximants, and the explicit-formula weight.

Notation: ``I_lam(y) = exp(-lam*y)`` on the half-line where ``sign(lam)*y >= 0`` and zero
elsewhere.  ``K_nu`` is the entire function of exponential type pi interpolating
``exp(-nu*n)`` at positive integers, 0 at negative integers and ``1/(e^nu+1)`` at 0; its
rescaling ``phi_hat_lam(z) = K_{|lam|/2}(2 sign(lam) z)`` is the best L1 approximation to
``I_lam`` among entire functions of type 2 pi, and ``Phi_lam`` is its inverse Fourier
transform, supported on [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from ._numerics import coth, sinpi
from .errors import InvalidParameterError, PoleProximityError, TruncationError

POLE_RADIUS = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    abs_tol: float = 1e-15
    max_terms: int = 1_000_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise InvalidParameterError("abs_tol must be positive")
        if self.max_terms < 1:
            raise InvalidParameterError("max_terms must be a positive integer")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class ApproximantParams:
    lam: float

    def __post_init__(self):
        if self.lam == 0 or not math.isfinite(self.lam):
            raise InvalidParameterError("lambda must be a nonzero finite real")

    @property
    def nu(self) -> float:
        return abs(self.lam) / 2


@dataclass(frozen=True)
class WeightParams:
    """Spectral height ``T`` and shift ``sigma``; ``delta = pi/(2T)`` is always derived."""

    T: float
    sigma: float

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidParameterError("T must be positive")

    @property
    def delta(self) -> float:
        return math.pi / (2 * self.T)


def _check_lambda(lam):
    if lam == 0 or not math.isfinite(lam):
        raise InvalidParameterError("lambda must be a nonzero finite real")


def truncated_exponential(lam, y):
    _check_lambda(lam)
    y_arr = np.asarray(y, dtype=float)
    on = np.sign(lam) * y_arr >= 0
    with np.errstate(over="ignore"):
        out = np.where(on, np.exp(-lam * np.where(on, y_arr, 0.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def tanhc(x):
    x_arr = np.asarray(x, dtype=float)
    small = np.abs(x_arr) < 1e-2
    x2 = x_arr * x_arr
    series = 1 - x2 / 3 + 2 * x2**2 / 15 - 17 * x2**3 / 315
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.tanh(x_arr) / x_arr
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def l1_min(lam) -> float:
    """``tanh(lam/4)/lam``, the minimal L1 distance from ``I_lam``."""
    _check_lambda(lam)
    return tanhc(lam / 4) / 4


# ---------------------------------------------------------------- K_nu

def _sinc(w):
    small = np.abs(w) < 1e-4
    safe = np.where(small, 1.0, w)
    pw2 = (np.pi * w) ** 2
    return np.where(small, 1 - pw2 / 6 + pw2 * pw2 / 120, sinpi(safe) / (np.pi * safe))


def _integer_values(nu, n):
    return np.where(n > 0, np.exp(-nu * np.maximum(n, 0)), np.where(n == 0, 1 / (math.exp(nu) + 1), 0.0))


def _k_nu_array(nu, z, policy):
    z = np.asarray(z)
    complex_input = np.iscomplexobj(z)
    zc = z.astype(complex)
    nearest = np.round(zc.real)
    is_int = (zc.imag == 0) & (zc.real == nearest)
    out = np.zeros(zc.shape, dtype=complex)
    if is_int.any():
        out[is_int] = _integer_values(nu, nearest[is_int])
    mask = ~is_int
    if mask.any():
        w = zc[mask] if complex_input else zc[mask].real
        dist = np.abs(zc[mask] - nearest[mask])
        s = sinpi(w) / np.pi
        factor = float(np.max(np.abs(s) / dist))
        q = math.exp(-nu)
        # tail after N terms: q^(N+1)/(1-q) * 2/dist(z,Z) * |sin(pi z)/pi|
        need = math.log(policy.abs_tol * (1 - q) / (2 * factor)) / (-nu) - 1
        n_terms = max(1, math.ceil(need))
        if n_terms > policy.max_terms:
            achieved = q ** (policy.max_terms + 1) / (1 - q) * 2 * factor
            raise TruncationError(
                f"K_nu series needs {n_terms} terms (max_terms={policy.max_terms})", achieved=achieved
            )
        acc = np.zeros_like(w)
        coef = 1.0
        for n in range(1, n_terms + 1):
            coef *= -q
            acc = acc + coef / (w - n)
        out[mask] = s * acc + _sinc(w) / (math.exp(nu) + 1)
    return out if complex_input else out.real


def _scalarize(arr, was_scalar):
    return complex(arr) if was_scalar else arr


def k_nu(nu, z, policy: TruncationPolicy = DEFAULT_POLICY):
    """Evaluate ``K_nu(z)`` by its partial-fraction series with a geometric tail bound."""
    if not nu > 0:
        raise InvalidParameterError("nu must be positive")
    was_scalar = np.ndim(z) == 0
    out = _k_nu_array(nu, np.asarray(z, dtype=complex), policy)
    return _scalarize(out, was_scalar)


def approximant_hat(lam, z, policy: TruncationPolicy = DEFAULT_POLICY):
    _check_lambda(lam)
    was_scalar = np.ndim(z) == 0
    w = 2 * math.copysign(1.0, lam) * np.asarray(z, dtype=complex)
    return _scalarize(_k_nu_array(abs(lam) / 2, w, policy), was_scalar)


def approximant_hat_real(lam, u, policy: TruncationPolicy = DEFAULT_POLICY):
    """Real-axis evaluation returning a float array."""
    _check_lambda(lam)
    w = 2 * math.copysign(1.0, lam) * np.asarray(u, dtype=float)
    return _k_nu_array(abs(lam) / 2, w, policy)


def k_nu_lerch(nu, z) -> complex:
    """``K_nu`` through the Lerch transcendent; integer points use the limiting values."""
    if not nu > 0:
        raise InvalidParameterError("nu must be positive")
    z = complex(z)
    if z.imag == 0 and z.real == round(z.real):
        return complex(_integer_values(nu, np.array(round(z.real))))
    q = mpmath.exp(-nu)
    zz = mpmath.mpc(z.real, z.imag)
    try:
        lerch = mpmath.lerchphi(-q, 1, -zz)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameterError(f"Lerch series failed at z={z}: {exc}") from exc
    val = -(mpmath.sinpi(zz) / mpmath.pi) * (lerch + (1 / zz) / (1 + q))
    return complex(val)


# ---------------------------------------------------------------- Phi_lambda

def phi_lambda(lam, z, radius: float = POLE_RADIUS) -> complex:
    """Inverse transform ``(sgn lam/4)(coth(-i pi z/2 + lam/4) - tanh(lam/4))``."""
    _check_lambda(lam)
    z = complex(z)
    shift = -lam / (2 * math.pi)
    n = round((z.real) / 2)
    pole = complex(2 * n, shift)
    if abs(z - pole) < radius:
        raise PoleProximityError(f"z={z} is within {radius} of the pole {pole}", pole=pole)
    sgn = math.copysign(1.0, lam)
    w = -1j * math.pi * z / 2 + lam / 4
    return complex(sgn / 4 * (coth(w) - math.tanh(lam / 4)))


def phi_lambda_quotient(lam, z) -> complex:
    """Equivalent cosine/sine quotient form of :func:`phi_lambda`."""
    _check_lambda(lam)
    z = complex(z)
    sgn = math.copysign(1.0, lam)
    a = np.pi * z / 2
    return complex(1j * sgn / (4 * math.cosh(lam / 4)) * np.cos(a) / np.sin(a + 1j * lam / 4))


# ---------------------------------------------------------------- weight

def _weight_pole_check(params: WeightParams, s, radius):
    s = np.asarray(s, dtype=complex)
    period = math.pi / params.delta
    n = np.round(s.imag / period)
    pole = params.sigma + 1j * period * n
    bad = np.abs(s - pole) < radius
    if np.any(bad):
        first = complex(np.asarray(pole)[bad].flat[0]) if np.ndim(pole) else complex(pole)
        raise PoleProximityError(f"s is within {radius} of the weight pole {first}", pole=first)


def weight_w(params: WeightParams, s, radius: float = POLE_RADIUS):
    """``coth(delta(s - sigma)) - tanh(delta(1 - sigma))``."""
    _weight_pole_check(params, s, radius)
    d = params.delta
    out = coth(d * (np.asarray(s, dtype=complex) - params.sigma)) - math.tanh(d * (1 - params.sigma))
    return complex(out) if np.ndim(s) == 0 else out


def weight_w_product(params: WeightParams, s, radius: float = POLE_RADIUS):
    """``cosh(delta(s-1)) / (cosh(delta(1-sigma)) sinh(delta(s-sigma)))``."""
    _weight_pole_check(params, s, radius)
    d = params.delta
    s = np.asarray(s, dtype=complex)
    out = np.cosh(d * (s - 1)) / (math.cosh(d * (1 - params.sigma)) * np.sinh(d * (s - params.sigma)))
    return complex(out) if np.ndim(s) == 0 else out


# ---------------------------------------------------------------- Ei and decay constants

def expint_ei(x: float, max_terms: int = 400) -> float:
    """Exponential integral Ei(x) by its convergent power series (x != 0, |x| <= 40)."""
    if x == 0 or abs(x) > 40:
        raise InvalidParameterError("Ei series is used for 0 < |x| <= 40")
    total = 0.0
    term = 1.0
    parts = []
    for k in range(1, max_terms + 1):
        term *= x / k
        parts.append(term / k)
        if abs(term / k) < 1e-17 * abs(total + sum(parts[-4:])) and k > abs(x):
            break
    total = math.fsum(parts)
    return float(np.euler_gamma) + math.log(abs(x)) + total


@dataclass(frozen=True)
class DecayConstants:
    kappa_alpha: float
    c0: float
    c1: float
    c2: float


def decay_constants(alpha: float) -> DecayConstants:
    """Decay constants of the approximant's Fourier-side error for rate ``alpha``."""
    if not alpha > 0:
        raise InvalidParameterError("alpha must be positive")
    ea = math.exp(alpha / 2)
    kappa = 2 * ea - alpha * expint_ei(alpha / 2) + 2.525 * alpha
    c0 = ea / 2 + 1 / (ea * 8 * math.pi) + kappa / (16 * math.pi)
    c1 = 2 * ea + (alpha / (8 * math.pi) + 3 / 11) / ea + (alpha / (16 * math.pi) + 3 / 22) * kappa
    c2 = 16 / 11 * (alpha / (16 * math.pi) + 3 / 22)
    return DecayConstants(kappa, c0, c1, c2)


def approximant_error(lam, u, policy: TruncationPolicy = DEFAULT_POLICY):
    """``phi_hat_lam(u) - I_lam(u)`` on real ``u``; at u = 0 the right limit is not taken."""
    u = np.asarray(u, dtype=float)
    return approximant_hat_real(lam, u, policy) - truncated_exponential(lam, u)


@dataclass
class DecayReport:
    ok: bool
    worst_value_slack: float
    worst_derivative_slack: float
    violations: list


def decay_check(lam, u_grid, h: float = 1e-5, margin: float = 1e-8) -> DecayReport:
    """Check ``|f(u)| <= 1/(16 pi u^2)`` and ``|f'(u)| <= 3/(22 u^2)`` for ``f = phi_hat - I``.

    The derivative is a central difference; ``margin`` absorbs its O(h^2) and rounding error.
    Slack is ``bound - observed`` (negative means a violation).
    """
    _check_lambda(lam)
    u = np.asarray(u_grid, dtype=float)
    if np.any(np.abs(u) < 0.5):
        raise InvalidParameterError("decay grid must satisfy |u| >= 1/2")
    f = approximant_error(lam, u)
    df = (approximant_error(lam, u + h) - approximant_error(lam, u - h)) / (2 * h)
    val_slack = 1 / (16 * math.pi * u**2) - np.abs(f)
    der_slack = 3 / (22 * u**2) - np.abs(df)
    violations = []
    for i in np.nonzero((val_slack < -margin) | (der_slack < -margin))[0]:
        violations.append((float(u[i]), float(f[i]), float(df[i])))
    return DecayReport(
        ok=not violations,
        worst_value_slack=float(val_slack.min()),
        worst_derivative_slack=float(der_slack.min()),
        violations=violations,
    )


# ---------------------------------------------------------------- L1 distance

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def l1_distance(lam, U: float = 2000.0, policy: TruncationPolicy = DEFAULT_POLICY):
    """Quadrature of ``||phi_hat_lam - I_lam||_1``.

    The error changes sign only at half-integers (and jumps at 0), so each half-unit
    panel gets its own Gauss-Legendre rule.  Beyond ``|u| > U`` the error behaves like
    ``sin(2 pi u) b1 / (4 pi u^2)`` with ``b1 = -q/(1+q)^2``, ``q = exp(-|lam|/2)``; the
    two tails together contribute ``|b1|/(pi^2 U)`` up to O(U^-3).

    Returns ``(value, tail)`` where ``value`` already includes ``tail``.
    """
    _check_lambda(lam)
    U = math.floor(2 * U) / 2
    edges = np.arange(-U, U + 0.25, 0.5)
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2
    pts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = np.abs(approximant_error(lam, pts, policy)).reshape(len(a), -1)
    panels = (vals @ _GL_WEIGHTS) * half
    q = math.exp(-abs(lam) / 2)
    tail = q / (1 + q) ** 2 / (math.pi**2 * U)
    return math.fsum(panels) + tail, tail


def plot_rows(lam, lo: float, hi: float, count: int):
    """Rows ``(u, approx, target, diff)`` on an even grid."""
    u = np.linspace(lo, hi, count)
    approx = approximant_hat_real(lam, u)
    target = truncated_exponential(lam, u)
    return [(float(a), float(b), float(c), float(b - c)) for a, b, c in zip(u, approx, target)]
