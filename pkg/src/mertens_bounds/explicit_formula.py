"""Truncated explicit formula for sums of mu(n)/n^sigma.

For ``delta = pi/(2T)`` the prediction is

    delta * sum_{|gamma| <= T} w(rho)/zeta'(rho) * x^(rho - sigma) + 1/zeta(sigma)

with ``w(s) = coth(delta(s - sigma)) - tanh(delta(1 - sigma))``.  Two envelopes
bound the deviation of the true sum from it: a generic one, and a sharper one
that uses an estimate |R(w)| <= c sqrt(w) on square-free counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import zeta as Z
from ._numerics import KahanSum, write_csv
from .approximant import WeightParams, tanhc, weight_w
from .errors import HypothesisViolationError, IncompleteTableError, InvalidParameterError

ZETA3 = 1.2020569031595942
MIN_T = 4 * math.pi
SQUAREFREE_MIN_T = 50.0
_TWO_PI_LD = np.longdouble("6.28318530717958647692528676655900576839")

CERTIFICATE_HEADER = ("x", "sigma", "T", "zero_sum", "sigma_term", "envelope", "observed", "slack")


@dataclass(frozen=True)
class Variant:
    """``Variant()`` is the generic envelope; ``Variant(c)`` uses |R(w)| <= c sqrt(w)."""

    c: float | None = None

    @property
    def squarefree(self) -> bool:
        return self.c is not None

    def __post_init__(self):
        if self.c is not None and not self.c > 0:
            raise InvalidParameterError("square-free constant c must be positive")


GENERIC = Variant()


@dataclass(frozen=True)
class ErrorBudget:
    a_inf: float
    L: float
    I: float
    iota_bound: float
    eps_total: float


@dataclass(frozen=True)
class FormulaEvaluation:
    x: float
    sigma: float
    T: float
    zero_sum: complex
    trivial_term: float
    sigma_term: float
    envelope: float
    numerical_error: float

    @property
    def predicted(self) -> float:
        return self.zero_sum.real + self.sigma_term

    def slack(self, observed: float) -> float:
        """Envelope minus the observed deviation and the numerical error of the prediction."""
        return self.envelope - abs(observed - self.predicted) - self.numerical_error


# ---------------------------------------------------------------- sums over zeros

def _checked_zeros(params: WeightParams, table: Z.ZeroTable):
    if not table.complete or table.height_T < params.T:
        raise IncompleteTableError(f"table (height {table.height_T}, complete={table.complete}) does not cover T={params.T}")
    sub = table.truncated(params.T)
    if sub.zeros and not sub.has_residues:
        raise InvalidParameterError("table lacks residues")
    return sub


def _phases(gammas: np.ndarray, logx: float) -> np.ndarray:
    """``exp(i * gamma * log x)`` with the phase reduced mod 2 pi in extended precision."""
    ph = np.fmod(gammas.astype(np.longdouble) * np.longdouble(logx), _TWO_PI_LD).astype(float)
    return np.exp(1j * ph)


def zero_sum_with_error(x: float, sigma: float, params: WeightParams, table: Z.ZeroTable):
    """``(delta * sum_rho w(rho)/zeta'(rho) x^(rho - sigma), error)`` over both signs of gamma."""
    if not x > 1:
        raise InvalidParameterError("x must exceed 1")
    if sigma != params.sigma:
        params = WeightParams(params.T, sigma)
    sub = _checked_zeros(params, table)
    if not sub.zeros:
        return 0j, 0.0
    g = sub.gammas
    res = sub.residue_array()
    errs = np.array([z.err for z in sub.zeros])
    rho = 0.5 + 1j * g
    w = weight_w(params, rho)
    scale = x ** (0.5 - sigma)
    terms = w * res * _phases(g, math.log(x)) * scale
    total = 2 * params.delta * math.fsum(terms.real)
    # residue errors plus a phase error of ~gamma*log(x)*2^-64 per term
    phase_err = g * math.log(x) * 2.0**-63
    err = 2 * params.delta * scale * float(np.sum(np.abs(w) * (errs + np.abs(res) * phase_err))) + 4 * np.finfo(float).eps * abs(total)
    return complex(total, 0.0), err


def zero_sum(x: float, sigma: float, params: WeightParams, table: Z.ZeroTable) -> complex:
    return zero_sum_with_error(x, sigma, params, table)[0]


def coth_terms(params: WeightParams, table: Z.ZeroTable) -> np.ndarray:
    """``delta |coth(delta rho)| / |zeta'(rho)|`` for each stored zero (gamma > 0)."""
    if table.zeros and not table.has_residues:
        raise InvalidParameterError("table lacks residues")
    if not table.zeros:
        return np.zeros(0)
    rho = 0.5 + 1j * table.gammas
    d = params.delta
    return d * np.abs(1 / np.tanh(d * rho)) * np.abs(table.residue_array())


def coth_partial_sums(params: WeightParams, table: Z.ZeroTable) -> np.ndarray:
    acc = KahanSum()
    out = np.empty(len(table.zeros))
    for i, t in enumerate(coth_terms(params, table)):
        acc.add(float(t))
        out[i] = acc.value
    return out


def coth_constant(params: WeightParams, table: Z.ZeroTable) -> float:
    """``delta * sum_{gamma > 0} |coth(delta rho)| / |zeta'(rho)|`` over the whole table."""
    return math.fsum(coth_terms(params, table))


# ---------------------------------------------------------------- trivial zeros

@dataclass(frozen=True)
class TrivialZeroTerm:
    value: float
    bound: float
    terms: tuple


def trivial_zero_bound(x: float, sigma: float, delta: float) -> float:
    return (1 / (2 + sigma) + 2 * delta) * (2 * math.pi) ** 2 / ZETA3 * float(x) ** -3


def trivial_zero_term(x: float, sigma: float, params: WeightParams, n_max: int = 30) -> TrivialZeroTerm:
    """``delta * sum_{n <= n_max} w(-2n) x^(-2n-1) / zeta'(-2n)`` and its closed-form bound."""
    x = float(x)
    if not x >= 2:
        raise InvalidParameterError("needs x >= 2")
    if not sigma > -2:
        raise InvalidParameterError("needs sigma > -2")
    if n_max < 1:
        raise InvalidParameterError("n_max must be positive")
    if sigma != params.sigma:
        params = WeightParams(params.T, sigma)
    d = params.delta
    logx = math.log(x)
    terms = []
    for n in range(1, n_max + 1):
        log_size = -(2 * n + 1) * logx
        if log_size < -700:
            break
        w = math.cosh(d * (-2 * n - 1)) / (math.cosh(d * (1 - sigma)) * math.sinh(d * (-2 * n - sigma)))
        terms.append(d * w * math.exp(log_size) * Z.zeta_prime_trivial(n))
    return TrivialZeroTerm(math.fsum(terms), trivial_zero_bound(x, sigma, d), tuple(terms))


# ---------------------------------------------------------------- error budgets

def _domain(x, T, variant: Variant):
    if T < MIN_T:
        raise InvalidParameterError(f"needs T >= 4 pi, got T={T}")
    if variant.squarefree:
        if T < SQUAREFREE_MIN_T:
            raise InvalidParameterError(f"square-free variant needs T >= 50, got T={T}")
        lo = (math.e * variant.c * T) ** 2
        if x < lo:
            raise InvalidParameterError(f"square-free variant needs x >= (e c T)^2 = {lo:.6g}, got x={x}")
    elif x < math.e**2 * T:
        raise InvalidParameterError(f"needs x >= e^2 T = {math.e**2 * T:.6g}, got x={x}")


def iota_bound(params: WeightParams, variant: Variant = GENERIC) -> float:
    d = params.delta
    shrink = tanhc((params.sigma - 1) * d)
    if variant.squarefree:
        return 3 / (math.pi * params.T) * shrink
    return d * shrink


def error_budget(x: float, params: WeightParams, a_inf: float, zeta_line_max: float, variant: Variant = GENERIC) -> ErrorBudget:
    """Bound on the error term, normalised by ``x^(1-sigma)``.

    ``I`` is bounded by ``zeta_line_max / (log x)^2``, where ``zeta_line_max``
    bounds ``1/|zeta(r +- iT)|`` for all ``r <= 1``.
    """
    T = params.T
    _domain(x, T, variant)
    if a_inf < 0 or zeta_line_max < 0:
        raise InvalidParameterError("a_inf and zeta_line_max must be nonnegative")
    I = zeta_line_max / math.log(x) ** 2
    if variant.squarefree:
        L = math.log(x / (variant.c * T) ** 2)
        eps = math.pi / 4 * (I + a_inf * (1 / L + 4 / L**2)) / T**2 + 2.9 * variant.c * a_inf / math.sqrt(x)
    else:
        L = math.log(x / T)
        eps = math.pi / 4 * (a_inf / L + a_inf / L**2 + I) / T**2 + 2 * a_inf / x
    return ErrorBudget(a_inf, L, I, iota_bound(params, variant), eps)


def tail_integral(x: float, T: float):
    """Quadrature of ``int_0^inf t |1/zeta(1 - t + iT)| x^-t dt`` as ``(value, tail_bound)``.

    Diagnostic only.  The integral runs over ``[0, U]`` with ``U = 40/log x + 1``;
    beyond ``U`` the analytic left-region bound caps ``1/|zeta|``.
    """
    logx = math.log(x)
    U = 40 / logx + 1
    f = lambda t: t / abs(Z.zeta(complex(1 - t, T))) * math.exp(-t * logx)
    value, qerr = integrate.quad(f, 0, U, limit=200, epsabs=1e-14, epsrel=1e-10)
    sup = Z.left_region_sup(T, r0=1 - U)
    tail = sup * math.exp(-U * logx) * (U / logx + 1 / logx**2)
    return value, tail + qerr


# ---------------------------------------------------------------- corollary envelopes

def corollary_envelope(x: float, sigma: float, T: float, variant: Variant = GENERIC) -> float:
    if variant.squarefree:
        return (3 / math.pi) / (T - 1) * x ** (1 - sigma) + 2.9 * variant.c * x ** (0.5 - sigma)
    return (math.pi / 2) / (T - 1) * x ** (1 - sigma) + 2 / x**sigma


def hypothesis_threshold(x: float, variant: Variant = GENERIC) -> float:
    """Largest admissible ``max_{r <= 1} 1/|zeta(r +- iT)|`` at ``x``."""
    return math.log(x) ** 2 / (3 if variant.squarefree else 1)


def corollary_domain(T: float, variant: Variant = GENERIC) -> float:
    """Smallest ``x`` covered by the corollary at height ``T``."""
    if variant.squarefree:
        return max(math.e**3 * (variant.c * T) ** 2, 4 * T)
    return math.e**2 * T


def sigma_term(sigma: float) -> float:
    """``1/zeta(sigma)``, taken as 0 at the pole ``sigma = 1``."""
    if sigma == 1:
        return 0.0
    return 1 / Z.zeta(sigma).real


def evaluate_formula(x: float, sigma: float, params: WeightParams, table: Z.ZeroTable, variant: Variant = GENERIC,
                     line_max: float | None = None) -> FormulaEvaluation:
    """Prediction and envelope for ``sum_{n <= x} mu(n)/n^sigma``.

    ``line_max`` bounds ``1/|zeta(r +- iT)|`` for ``r <= 1``; it is computed when
    omitted.  A value above the admissible threshold raises
    ``HypothesisViolationError``.
    """
    T = params.T
    if sigma < -1:
        raise InvalidParameterError("needs sigma >= -1")
    if T < (SQUAREFREE_MIN_T if variant.squarefree else MIN_T):
        raise InvalidParameterError(f"T={T} below the minimum height for this envelope")
    lo = corollary_domain(T, variant)
    if x < lo:
        raise InvalidParameterError(f"x={x} below the envelope's domain start {lo:.6g}")
    if line_max is None:
        line_max = Z.zeta_line_max(T)
    if line_max > hypothesis_threshold(x, variant):
        raise HypothesisViolationError(f"max 1/|zeta(r +- iT)| = {line_max:.6g} exceeds {hypothesis_threshold(x, variant):.6g} at x={x}")
    p = WeightParams(T, sigma)
    zs, zerr = zero_sum_with_error(x, sigma, p, table)
    triv = trivial_zero_term(x, sigma, p)
    st = sigma_term(sigma)
    return FormulaEvaluation(
        x=float(x), sigma=float(sigma), T=float(T), zero_sum=zs,
        trivial_term=triv.value * x ** (1 - sigma), sigma_term=st,
        envelope=corollary_envelope(x, sigma, T, variant),
        numerical_error=zerr + 1e-12 * abs(st),
    )


def theorem_envelope(x: float, sigma: float, params: WeightParams, line_max: float, variant: Variant = GENERIC) -> float:
    """Envelope assembled from the error budget and the trivial-zero bound, before simplification."""
    p = WeightParams(params.T, sigma)
    b = error_budget(x, p, 1.0, line_max, variant)
    return (b.iota_bound + b.eps_total) * x ** (1 - sigma) + trivial_zero_bound(x, sigma, p.delta) * x ** (1 - sigma)


@dataclass(frozen=True)
class CertificateRow:
    evaluation: FormulaEvaluation
    observed: float

    @property
    def slack(self) -> float:
        return self.evaluation.slack(self.observed)

    @property
    def ok(self) -> bool:
        return self.slack >= 0

    def row(self):
        e = self.evaluation
        return (e.x, e.sigma, e.T, e.zero_sum.real, e.sigma_term, e.envelope, self.observed, self.slack)


def certify(xs, sigma: float, T: float, table: Z.ZeroTable, observed, variant: Variant = GENERIC,
            line_max: float | None = None) -> list:
    """Check the envelope at each ``x`` against ``observed[i]`` (the true sum at ``xs[i]``)."""
    if line_max is None:
        line_max = Z.zeta_line_max(T)
    params = WeightParams(T, sigma)
    return [CertificateRow(evaluate_formula(x, sigma, params, table, variant, line_max), float(o)) for x, o in zip(xs, observed)]


def write_certificate(path, rows) -> None:
    write_csv(path, CERTIFICATE_HEADER, (r.row() for r in rows))


# ---------------------------------------------------------------- clean bounds

@dataclass(frozen=True)
class CleanInputs:
    """``|M(x)| <= lead*x + C*sqrt(x)`` and ``|m(x)| <= lead + C/sqrt(x)``."""

    T: float
    C: float
    lead: float


PUBLISHED_CLEAN = {
    "T=1e10+1": CleanInputs(1e10 + 1, 11.350514, math.pi / (2 * 1e10)),
    "T=1e9": CleanInputs(1e9, 9.758736, math.pi / (2 * (1e9 - 1))),
    "T=1e7+1": CleanInputs(1e7 + 1, 6.738093, math.pi / (2 * 1e7)),
}
SQUAREFREE_CLEAN = CleanInputs(1e10 + 1, 11.39, 3 / (math.pi * 1e10))
SQUAREFREE_CROSSOVER = 3.61e17


def clean_bound(x: float, inputs: CleanInputs, which: str = "M") -> float:
    if which == "M":
        return inputs.lead * x + inputs.C * math.sqrt(x)
    if which == "m":
        return inputs.lead + inputs.C / math.sqrt(x)
    raise InvalidParameterError("which must be 'M' or 'm'")


def mertens_clean_bound(x: float, which: str = "M") -> float:
    """Piecewise bound: the square-free triple above the crossover, the ``T = 1e9`` triple below."""
    if x < 1:
        raise InvalidParameterError("needs x >= 1")
    inputs = SQUAREFREE_CLEAN if x >= SQUAREFREE_CROSSOVER else PUBLISHED_CLEAN["T=1e9"]
    return clean_bound(x, inputs, which)


def crossover_margin() -> float:
    """Difference of the ``m`` bounds (T = 1e9 triple minus square-free triple) at the crossover; negative means the switch is seamless."""
    a, b = PUBLISHED_CLEAN["T=1e9"], SQUAREFREE_CLEAN
    return a.lead - b.lead - (b.C - a.C) / math.sqrt(SQUAREFREE_CROSSOVER)


def desk_clean_inputs(T: float, coth_sum: float) -> CleanInputs:
    """Clean-bound triple from a coth constant computed at height ``T``.

    The zero sum contributes ``2 * coth_sum * sqrt(x)``; the constants 2 from
    ``1/zeta(0)`` and ``2/x^sigma`` are absorbed as ``4/sqrt(e^2 T)``.  Below
    ``e^2 T`` the bound relies on ``|M(x)| <= sqrt(x)``, which needs ``C >= 1``.
    """
    C = 2 * coth_sum + 4 / math.sqrt(math.e**2 * T)
    return CleanInputs(T, max(C, 1.0), (math.pi / 2) / (T - 1))


__all__ = [
    "CERTIFICATE_HEADER", "CertificateRow", "CleanInputs", "ErrorBudget", "FormulaEvaluation", "GENERIC",
    "PUBLISHED_CLEAN", "SQUAREFREE_CLEAN", "SQUAREFREE_CROSSOVER", "TrivialZeroTerm", "Variant",
    "certify", "clean_bound", "corollary_domain", "corollary_envelope", "coth_constant", "coth_partial_sums",
    "coth_terms", "crossover_margin", "desk_clean_inputs", "error_budget", "evaluate_formula",
    "hypothesis_threshold", "iota_bound", "mertens_clean_bound", "sigma_term", "tail_integral",
    "theorem_envelope", "trivial_zero_bound", "trivial_zero_term", "write_certificate", "zero_sum",
    "zero_sum_with_error",
]
