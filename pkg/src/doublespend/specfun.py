"""Scalar special-function kernel.

Log-gamma, the regularized incomplete beta function I_x(a, b), the
regularized upper incomplete gamma function Q(s, x), and log-space
binomial coefficients.  Everything is double precision; the beta and
gamma evaluations are hand-rolled (continued fraction / series splits,
prefactors assembled in log space) so the probability formulas built on
top of them stay accurate far into the tails, where naive evaluation
underflows.

Log-space variants (``log_reg_inc_beta`` etc.) are provided for callers
that need tail values below the smallest positive double.
"""

import math
from dataclasses import dataclass

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "ConvergenceError",
    "log_gamma",
    "log_binomial",
    "reg_inc_beta",
    "log_reg_inc_beta",
    "reg_upper_gamma_q",
    "log_reg_upper_gamma_q",
    "log_reg_lower_gamma_p",
]

_TINY = 1e-300


class ConvergenceError(ArithmeticError):
    """Iteration cap reached before the requested tolerance."""


@dataclass(frozen=True)
class Tolerance:
    """Relative tolerance and iteration cap for the iterative evaluations."""

    rel_eps: float = 1e-14
    max_iter: int = 500

    def __post_init__(self):
        if not self.rel_eps > 0.0:
            raise ValueError(f"rel_eps must be positive, got {self.rel_eps}")
        if self.max_iter < 100:
            raise ValueError(f"max_iter must be >= 100, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


def _clamp01(x):
    # absorb last-ulp excursions; downstream invariants assume [0, 1]
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if x <= 0.0:
        raise ValueError(f"log_gamma requires x > 0, got x={x}")
    return math.lgamma(x)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) for 0 <= k <= n, via log-gamma."""
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"log_binomial requires 0 <= k <= n, got n={n}, k={k}")
    return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0)


# --------------------------------------------------------------------------
# Regularized incomplete beta
# --------------------------------------------------------------------------

def _beta_cf(a, b, x, tol):
    """Continued fraction for I_x(a,b), modified Lentz recurrence.

    Converges fast for x < (a+1)/(a+b+2); the caller is responsible for
    picking the branch.  Returns the continued-fraction factor, i.e.
    I_x(a,b) * a / (x^a (1-x)^b / B(a,b)).
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, tol.max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol.rel_eps:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge "
        f"(a={a}, b={b}, x={x}, max_iter={tol.max_iter})"
    )


def _log_beta_prefactor(a, b, x):
    # ln( x^a (1-x)^b / B(a,b) )
    return (
        log_gamma(a + b) - log_gamma(a) - log_gamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )


def reg_inc_beta(x: float, a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Regularized incomplete beta function I_x(a, b) in [0, 1].

    Direct continued fraction for x below the (a+1)/(a+b+2) crossover,
    the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) above it.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"reg_inc_beta requires a > 0 and b > 0, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got x={x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        v = math.exp(_log_beta_prefactor(a, b, x)) * _beta_cf(a, b, x, tol) / a
        return _clamp01(v)
    v = math.exp(_log_beta_prefactor(b, a, 1.0 - x)) * _beta_cf(b, a, 1.0 - x, tol) / b
    return _clamp01(1.0 - v)


def log_reg_inc_beta(x: float, a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """ln I_x(a, b); stays finite where I_x underflows to zero."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"log_reg_inc_beta requires a > 0 and b > 0, got a={a}, b={b}")
    if x <= 0.0 or x > 1.0:
        raise ValueError(f"log_reg_inc_beta requires 0 < x <= 1, got x={x}")
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return (
            _log_beta_prefactor(a, b, x)
            + math.log(_beta_cf(a, b, x, tol))
            - math.log(a)
        )
    other = math.exp(_log_beta_prefactor(b, a, 1.0 - x)) * _beta_cf(b, a, 1.0 - x, tol) / b
    return math.log1p(-other)


# --------------------------------------------------------------------------
# Regularized incomplete gamma
# --------------------------------------------------------------------------

def _log_lower_gamma_series(s, x, tol):
    """ln P(s, x) by the lower series; requires x < s + 1."""
    term = 1.0
    total = 1.0
    ap = s
    for _ in range(tol.max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * tol.rel_eps:
            return s * math.log(x) - x - log_gamma(s + 1.0) + math.log(total)
    raise ConvergenceError(
        f"lower incomplete gamma series did not converge "
        f"(s={s}, x={x}, max_iter={tol.max_iter})"
    )


def _log_upper_gamma_cf(s, x, tol):
    """ln Q(s, x) by the continued fraction; requires x >= s + 1."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, tol.max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol.rel_eps:
            return s * math.log(x) - x - log_gamma(s) + math.log(h)
    raise ConvergenceError(
        f"upper incomplete gamma continued fraction did not converge "
        f"(s={s}, x={x}, max_iter={tol.max_iter})"
    )


def reg_upper_gamma_q(s: float, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).

    For integer s this is the Poisson CDF partial sum
    sum_{k<s} x^k/k! e^{-x}.  Lower series below x = s + 1, continued
    fraction above; both assembled in log space.
    """
    if s <= 0.0:
        raise ValueError(f"reg_upper_gamma_q requires s > 0, got s={s}")
    if x < 0.0:
        raise ValueError(f"reg_upper_gamma_q requires x >= 0, got x={x}")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        return _clamp01(1.0 - math.exp(_log_lower_gamma_series(s, x, tol)))
    return _clamp01(math.exp(_log_upper_gamma_cf(s, x, tol)))


def log_reg_upper_gamma_q(s: float, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """ln Q(s, x); finite for x far above s where Q underflows."""
    if s <= 0.0:
        raise ValueError(f"log_reg_upper_gamma_q requires s > 0, got s={s}")
    if x < 0.0:
        raise ValueError(f"log_reg_upper_gamma_q requires x >= 0, got x={x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return math.log1p(-math.exp(_log_lower_gamma_series(s, x, tol)))
    return _log_upper_gamma_cf(s, x, tol)


def log_reg_lower_gamma_p(s: float, x: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """ln P(s, x) = ln(1 - Q(s, x)); finite for x far below s."""
    if s <= 0.0:
        raise ValueError(f"log_reg_lower_gamma_p requires s > 0, got s={s}")
    if x <= 0.0:
        raise ValueError(f"log_reg_lower_gamma_p requires x > 0, got x={x}")
    if x < s + 1.0:
        return _log_lower_gamma_series(s, x, tol)
    return math.log1p(-math.exp(_log_upper_gamma_cf(s, x, tol)))
