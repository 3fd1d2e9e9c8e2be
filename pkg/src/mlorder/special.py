r"""Gamma, digamma and Mittag-Leffler functions of a real argument.

The two-parameter Mittag-Leffler function is

.. math::

    E_{\rho,\mu}(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\rho k + \mu)},

and :math:`E_\rho = E_{\rho,1}`. Evaluation switches between the power series
(small :math:`|z|^{1/\rho}`), the algebraic asymptotic series (large negative
:math:`z`), a real-line integral representation (the range in between) and
closed forms (:math:`\rho = 1` and :math:`\rho = 1/2` with :math:`\mu = 1`).

The derivatives in the order :math:`\rho` of :math:`E_\rho(-\lambda t^\rho)` and
:math:`t^{\rho-1}E_{\rho,\rho}(-\lambda t^\rho)` are summed term by term where
the alternating series is well conditioned.
"""

from __future__ import annotations

import enum
import logging
import math
import sys
from dataclasses import dataclass

from scipy.special import erfcx

from mlorder._laplace import dml_laplace, ml_laplace
from mlorder.exceptions import AccuracyError, DomainError, MLOverflowError

logger = logging.getLogger(__name__)

EPS = sys.float_info.epsilon
#: Largest argument ``t`` accepted by the order derivatives.
T_MAX = 1e3
#: Maximum number of series terms.
MAX_TERMS = 10_000
#: Maximum number of asymptotic terms.
MAX_ASYMPTOTIC_TERMS = 20
#: Default relative tolerance for :func:`ml`.
DEFAULT_RTOL = 1e-12

_LOG_MAX = math.log(sys.float_info.max)
# |z|^{1/rho} above which the series cannot reach ~1e-12 on the negative axis
_SERIES_NEG_LIMIT = 12.0
# |z|^{1/rho} below which the positive series uses direct products
_SERIES_DIRECT_LIMIT = 50.0


class Method(enum.Enum):
    """Evaluation route used by :func:`ml`."""

    Series = "series"
    AsymptoticNeg = "asymptotic-neg"
    AsymptoticPos = "asymptotic-pos"
    ClosedForm = "closed-form"
    Integral = "integral"


@dataclass(frozen=True)
class MLQuery:
    """One evaluation of :math:`E_{\\rho,\\mu}(z)` with a relative accuracy target."""

    rho: float
    mu: float
    z: float
    rel_tol: float = DEFAULT_RTOL

    def __post_init__(self) -> None:
        if not 0.0 < self.rho <= 1.0:
            raise DomainError(f"rho must lie in (0, 1]: {self.rho}")
        if not self.mu > 0.0:
            raise DomainError(f"mu must be positive: {self.mu}")
        if not math.isfinite(self.z):
            raise DomainError(f"z must be finite: {self.z}")
        if not 0.0 < self.rel_tol <= 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3]: {self.rel_tol}")


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_error_bound: float
    method: Method
    terms_used: int = 0


@dataclass(frozen=True)
class DerivativeSeriesTerm:
    r"""One term :math:`y_n` of the order-derivative series of :math:`E_\rho(-t^\rho)`.

    ``y_n`` may underflow to zero for tiny ``t``; ``log_abs_y`` and ``sign``
    always carry the exact magnitude and sign.
    """

    n: int
    y_n: float
    ln_t: float
    phi_val: float
    log_abs_y: float
    sign: int


# {{{ gamma and digamma


def gamma(x: float) -> float:
    """Gamma function for positive arguments."""
    if not x > 0.0:
        raise DomainError(f"gamma is evaluated for x > 0 only: {x}")
    return math.gamma(x)


def digamma(x: float) -> float:
    r"""Logarithmic derivative :math:`\Gamma'(x)/\Gamma(x)` for ``x > 0``.

    Uses the recurrence :math:`\Phi(x) = \Phi(x + 1) - 1/x` until ``x >= 8``
    and then the Stirling-type expansion in :math:`1/x^2`.
    """
    if not x > 0.0:
        raise DomainError(f"digamma is evaluated for x > 0 only: {x}")

    shift = []
    while x < 8.0:
        shift.append(-1.0 / x)
        x += 1.0

    h = 1.0 / (x * x)
    tail = h * (1 / 12 - h * (1 / 120 - h * (1 / 252 - h * (
        1 / 240 - h * (1 / 132 - h * (691 / 32760 - h / 12))))))
    shift.extend((math.log(x), -0.5 / x, -tail))
    return math.fsum(shift)


def _sinpi(a: float) -> float:
    n = round(a)
    s = math.sin(math.pi * (a - n))
    return -s if n % 2 else s


def _cospi(a: float) -> float:
    n = round(a)
    c = math.cos(math.pi * (a - n))
    return -c if n % 2 else c


def rgamma(a: float) -> float:
    r"""Reciprocal gamma :math:`1/\Gamma(a)`, entire, exactly zero at the poles."""
    if a >= 0.5:
        if a > 171.0:
            return math.exp(-math.lgamma(a))
        return 1.0 / math.gamma(a)
    if a == round(a):
        return 0.0
    # reflection: 1/Gamma(a) = Gamma(1 - a) sin(pi a) / pi
    return math.exp(math.lgamma(1.0 - a)) * _sinpi(a) / math.pi


def rgamma_deriv(a: float) -> float:
    r"""Derivative :math:`\frac{d}{da} 1/\Gamma(a)`, finite at the poles of :math:`\Gamma`."""
    if a >= 0.5:
        return -digamma(a) * rgamma(a)
    g = math.exp(math.lgamma(1.0 - a))
    return g * (math.pi * _cospi(a) - digamma(1.0 - a) * _sinpi(a)) / math.pi


# }}}


# {{{ Mittag-Leffler


def _power_over_gamma(z: float, k: int, a: float) -> tuple[float, float]:
    """Return ``z**k / Gamma(a)`` and a bound on its relative rounding error."""
    # rounding of a = rho*k + mu is amplified by a*digamma(a) inside Gamma
    arg_err = EPS * a * max(1.0, math.log(a)) if a > 1.0 else 0.0
    if k == 0:
        return rgamma(a), 4 * EPS + arg_err
    logz = math.log(abs(z))
    if a < 170.0 and abs(k * logz) < 700.0:
        return z**k / math.gamma(a), 4 * EPS + arg_err

    exponent = k * logz - math.lgamma(a)
    sign = -1.0 if (z < 0 and k % 2) else 1.0
    value = sign * math.exp(exponent) if exponent > -745.0 else 0.0
    return value, 4 * EPS + arg_err + EPS * (abs(k * logz) + abs(math.lgamma(a)))


def _ml_series(rho: float, mu: float, z: float, rel_tol: float) -> EvalResult:
    """Direct power series with compensated summation and a ratio-test tail."""
    terms = []
    rounding = 0.0
    prev_ratio = math.inf
    prev = None
    for k in range(MAX_TERMS):
        term, rel = _power_over_gamma(z, k, rho * k + mu)
        terms.append(term)
        rounding += abs(term) * rel
        if prev is not None and prev != 0.0 and k * rho + mu > 2.0:
            ratio = abs(term / prev)
            if ratio < 1.0 and ratio <= prev_ratio:
                nxt = abs(term) * ratio
                tail = nxt / (1.0 - ratio)
                total = math.fsum(terms)
                if tail <= 0.01 * rel_tol * abs(total) or tail < 1e-300:
                    return EvalResult(total, rounding + tail + EPS * abs(total),
                                      Method.Series, k + 1)
            prev_ratio = ratio
        if term == 0.0 and k * rho + mu > 2.0:
            total = math.fsum(terms)
            return EvalResult(total, rounding + EPS * abs(total), Method.Series, k + 1)
        prev = term

    raise AccuracyError(f"series for E_({rho}, {mu})({z}) did not converge in {MAX_TERMS} terms")


def _ml_series_log(rho: float, mu: float, z: float) -> tuple[float, float, int]:
    """Positive-argument series in log space: ``(log value, rel error, terms)``."""
    logz = math.log(z)
    logs = []
    lmax = -math.inf
    k = 0
    while k < MAX_TERMS:
        lk = k * logz - math.lgamma(rho * k + mu)
        logs.append(lk)
        lmax = max(lmax, lk)
        # terms are log-concave in k once past the peak
        if k > 0 and lk < logs[-2] and lk < lmax + math.log(EPS) - 10.0:
            break
        k += 1
    else:
        raise AccuracyError(f"series for E_({rho}, {mu})({z}) did not converge in {MAX_TERMS} terms")

    s = math.fsum(math.exp(lk - lmax) for lk in logs)
    a_max = rho * len(logs) + mu
    rel = 4 * EPS + EPS * max(abs(lk) for lk in logs) + EPS * a_max * math.log(a_max)
    return lmax + math.log(s), rel, len(logs)


def _ml_positive(rho: float, mu: float, z: float, rel_tol: float) -> EvalResult:
    big = z ** (1.0 / rho)
    if big <= _SERIES_DIRECT_LIMIT:
        return _ml_series(rho, mu, z, rel_tol)

    needed = (big + 10.0 * math.sqrt(big) + 50.0) / rho
    if needed < MAX_TERMS:
        logv, rel, n = _ml_series_log(rho, mu, z)
        method = Method.Series
    else:
        # leading exponential term; the algebraic remainder is O(1/z)
        logv = big + (1.0 - mu) / rho * math.log(z) - math.log(rho)
        rel, n, method = 1.0 / z, 1, Method.AsymptoticPos

    if logv > _LOG_MAX:
        raise MLOverflowError(f"E_({rho}, {mu})({z}) overflows; log value {logv:.17g}", logv)
    value = math.exp(logv)
    return EvalResult(value, (rel + EPS * abs(logv)) * value, method, n)


def _asymptotic_terms(rho: float, mu: float, z: float, count: int):
    r"""Yield nonzero terms :math:`-z^{-k}/\Gamma(\mu - \rho k)`, ``k = 1, 2, ...``."""
    produced = 0
    k = 1
    while produced < count and k <= 10 * (count + 2):
        rg = rgamma(mu - rho * k)
        if rg != 0.0:
            yield -rg * z ** (-k)
            produced += 1
        k += 1


def ml_asymptotic_neg(rho: float, mu: float, r: float, K: int) -> EvalResult:
    r"""Algebraic asymptotic expansion of :math:`E_{\rho,\mu}(-r)`.

    Sums the first ``K`` nonzero terms of :math:`-\sum_k (-r)^{-k}/\Gamma(\mu-\rho k)`;
    terms at poles of :math:`\Gamma` vanish and are skipped. The error bound is
    the magnitude of the first omitted nonzero term.
    """
    if not r > 1.0:
        raise DomainError(f"asymptotic expansion needs r > 1: {r}")
    if K < 1:
        raise DomainError(f"need at least one term: K={K}")
    terms = list(_asymptotic_terms(rho, mu, -r, K + 1))
    used = terms[:K]
    omitted = abs(terms[K]) if len(terms) > K else 0.0
    return EvalResult(math.fsum(used), omitted, Method.AsymptoticNeg, len(used))


def _exp_remainder(rho: float, mu: float, x: float) -> float:
    """Size of the exponentially small part not captured by the algebraic series."""
    big = x ** (1.0 / rho)
    c = -math.cos(math.pi / rho) if rho > 2.0 / 3.0 else 1.0
    c = max(c, 0.05)
    return 2.0 / rho * max(1.0, x ** ((1.0 - mu) / rho)) * math.exp(-c * big)


def _asymptotic_envelope(rho: float, mu: float, x: float, k: int) -> float:
    """Upper bound on the k-th asymptotic term that ignores the sine factor.

    Near-poles of :math:`1/\Gamma` make individual terms spuriously small, so
    stopping decisions use this envelope instead of the raw term.
    """
    a = 1.0 - mu + rho * k
    if a <= 0.0:
        return abs(rgamma(mu - rho * k)) * x ** (-k)
    return math.exp(math.lgamma(a) - k * math.log(x)) / math.pi


def _ml_asymptotic_adaptive(rho: float, mu: float, x: float, rel_tol: float) -> EvalResult | None:
    guard = _exp_remainder(rho, mu, x)
    terms = []
    best = None
    prev_env = math.inf
    for k in range(1, 3 * MAX_ASYMPTOTIC_TERMS + 1):
        terms.append(-rgamma(mu - rho * k) * (-x) ** (-k))
        env = _asymptotic_envelope(rho, mu, x, k + 1)
        value = math.fsum(terms)
        bound = 2.0 * env + guard + 8 * EPS * abs(value)
        if best is None or bound < best.abs_error_bound:
            best = EvalResult(value, bound, Method.AsymptoticNeg, k)
        # more terms are nearly free, so stop only once they stop mattering
        if env <= 0.01 * EPS * abs(value):
            break
        if env > prev_env and 1.0 - mu + rho * k > 2.0:
            # divergent from here on
            break
        prev_env = env
    return best


def _ml_integral(rho: float, mu: float, x: float) -> EvalResult:
    # the integrand's endpoint singularity degrades as mu approaches 1 + rho
    if mu <= 1.0:
        v, e = ml_laplace(rho, mu, x)
        return EvalResult(v, e + 8 * EPS * abs(v), Method.Integral, 0)
    # E_{rho,mu}(z) = (E_{rho,mu-rho}(z) - 1/Gamma(mu-rho)) / z
    inner = _ml_integral(rho, mu - rho, x)
    v = (inner.value - rgamma(mu - rho)) / (-x)
    return EvalResult(v, (inner.abs_error_bound + 4 * EPS) / x + 4 * EPS * abs(v),
                      Method.Integral, 0)


def _ml_negative(rho: float, mu: float, x: float, rel_tol: float) -> EvalResult:
    big = x ** (1.0 / rho)
    candidates = []

    def good(res: EvalResult) -> bool:
        return res.abs_error_bound <= rel_tol * abs(res.value) or abs(res.value) < 1e-300

    if big <= _SERIES_NEG_LIMIT:
        res = _ml_series(rho, mu, -x, rel_tol)
        if good(res):
            return res
        candidates.append(res)

    if x > 2.0:
        res = _ml_asymptotic_adaptive(rho, mu, x, rel_tol)
        if res is not None:
            if good(res):
                return res
            candidates.append(res)

    if rho < 1.0:
        res = _ml_integral(rho, mu, x)
        if good(res):
            return res
        candidates.append(res)

    if not candidates:
        res = _ml_series(rho, mu, -x, rel_tol)
        candidates.append(res)

    best = min(candidates, key=lambda r: r.abs_error_bound)
    logger.debug("E_(%g, %g)(%g): tolerance %g not met, best bound %g",
                 rho, mu, -x, rel_tol, best.abs_error_bound)
    return best


def ml(q: MLQuery) -> EvalResult:
    r"""Evaluate :math:`E_{\rho,\mu}(z)` for real ``z``.

    :raises MLOverflowError: if the value exceeds the double range; the
        exception carries the logarithm of the value.
    """
    rho, mu, z = q.rho, q.mu, q.z

    if rho == 1.0 and mu == 1.0:
        if z > _LOG_MAX:
            raise MLOverflowError(f"exp({z}) overflows", z)
        v = math.exp(z)
        return EvalResult(v, 2 * EPS * v, Method.ClosedForm, 0)

    if rho == 0.5 and mu == 1.0:
        # E_{1/2}(z) = exp(z^2) erfc(-z)
        if z > 26.0:
            logv = math.log(2.0) + z * z
            if logv > _LOG_MAX:
                raise MLOverflowError(f"E_0.5({z}) overflows", logv)
        v = float(erfcx(-z))
        return EvalResult(v, 8 * EPS * abs(v), Method.ClosedForm, 0)

    if z == 0.0:
        v = rgamma(mu)
        return EvalResult(v, EPS * abs(v), Method.Series, 1)
    if z > 0.0:
        return _ml_positive(rho, mu, z, q.rel_tol)
    return _ml_negative(rho, mu, -z, q.rel_tol)


def mittag_leffler(rho: float, mu: float, z: float, rel_tol: float = DEFAULT_RTOL) -> float:
    r"""Shorthand for ``ml(MLQuery(rho, mu, z, rel_tol)).value``."""
    return ml(MLQuery(rho, mu, z, rel_tol)).value


def log_ml_pos(rho: float, z: float) -> float:
    r"""Natural logarithm of :math:`E_{\rho,\rho}(z)` for ``z > 1``.

    Exact (through :func:`ml`) while :math:`z^{1/\rho} < 700`; beyond that the
    leading exponential term :math:`\rho^{-1} z^{1/\rho - 1} e^{z^{1/\rho}}` is used.
    """
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"rho must lie in (0, 1]: {rho}")
    if not z > 1.0:
        raise DomainError(f"log_ml_pos needs z > 1: {z}")
    big = z ** (1.0 / rho)
    if big < 700.0:
        return math.log(ml(MLQuery(rho, rho, z)).value)
    return big + (1.0 / rho - 1.0) * math.log(z) - math.log(rho)


# }}}


# {{{ derivatives in the order


def _check_order_args(rho: float, t: float) -> None:
    if not 0.0 < rho < 1.0:
        raise DomainError(f"the order derivative needs rho in (0, 1): {rho}")
    if not 0.0 < t <= T_MAX:
        raise DomainError(f"t must lie in (0, {T_MAX:g}]: {t}")


def derivative_term(rho: float, t: float, n: int) -> DerivativeSeriesTerm:
    r"""Term :math:`y_n = n t^{\rho n}(\ln t - \Phi(\rho n + 1))/\Gamma(\rho n + 1)`."""
    if n < 1:
        raise DomainError(f"n must be >= 1: {n}")
    ln_t = math.log(t)
    phi = digamma(rho * n + 1.0)
    diff = ln_t - phi
    sign = 1 if diff > 0 else (-1 if diff < 0 else 0)
    if sign == 0:
        return DerivativeSeriesTerm(n, 0.0, ln_t, phi, -math.inf, 0)
    log_abs = math.log(n) + rho * n * ln_t + math.log(abs(diff)) - math.lgamma(rho * n + 1.0)
    y = sign * math.exp(log_abs) if log_abs > -745.0 else 0.0
    return DerivativeSeriesTerm(n, y, ln_t, phi, log_abs, sign)


def derivative_terms(rho: float, t: float, n_max: int) -> list[DerivativeSeriesTerm]:
    """Terms ``y_1, ..., y_{n_max}`` of the order-derivative series."""
    return [derivative_term(rho, t, n) for n in range(1, n_max + 1)]


def _series_term(rho: float, lam: float, t: float, n: int, kind: str) -> float:
    """Signed n-th term of the order-derivative series (n >= 1 for caputo, >= 0 for rl)."""
    ln_t = math.log(t)
    if kind == "caputo":
        a, mult, tpow = rho * n + 1.0, n, rho * n
    else:
        a, mult, tpow = rho * (n + 1), n + 1, rho * (n + 1) - 1.0
    diff = ln_t - digamma(a)
    if diff == 0.0:
        return 0.0
    log_abs = (math.log(mult) + tpow * ln_t + n * math.log(lam)
               + math.log(abs(diff)) - math.lgamma(a))
    if log_abs < -745.0:
        return 0.0
    sign = (-1.0) ** n * (1.0 if diff > 0 else -1.0)
    return sign * math.exp(log_abs)


def _dml_series(rho: float, lam: float, t: float, kind: str, rel_tol: float) -> tuple[float, float]:
    """Sum the order-derivative series; returns ``(value, error estimate)``."""
    start = 1 if kind == "caputo" else 0
    terms = []
    prev_ratio = math.inf
    n = start
    while True:
        if n - start >= MAX_TERMS:
            raise AccuracyError(
                f"order-derivative series did not converge in {MAX_TERMS} terms "
                f"({rho=}, {lam=}, {t=})")
        terms.append(_series_term(rho, lam, t, n, kind))
        if len(terms) >= 2 and terms[-2] != 0.0:
            ratio = abs(terms[-1] / terms[-2])
            if ratio < 1.0 and ratio <= prev_ratio and rho * n > 1.0:
                tail = abs(terms[-1]) * ratio / (1.0 - ratio)
                partial = math.fsum(terms)
                if tail <= 0.01 * rel_tol * abs(partial) or tail < 1e-300:
                    break
            prev_ratio = ratio
        elif len(terms) >= 2 and terms[-1] == 0.0 and rho * n > 2.0:
            tail = 0.0
            break
        n += 1

    if lam == 1.0 and t <= 1.0 and kind == "caputo":
        # -(y_1 - y_2) - (y_3 - y_4) - ...: every bracket has the sign of the sum
        pairs = [terms[i] + (terms[i + 1] if i + 1 < len(terms) else 0.0)
                 for i in range(0, len(terms), 2)]
        value = math.fsum(pairs)
    else:
        value = math.fsum(terms)
    rounding = 16 * EPS * math.fsum(abs(x) for x in terms)
    return value, rounding + tail


def _dml_asymptotic(rho: float, lam: float, t: float, kind: str) -> tuple[float, float] | None:
    """Chain rule on the algebraic asymptotic series of the Mittag-Leffler function."""
    x = lam * t**rho
    if x <= 2.0:
        return None
    ln_t = math.log(t)
    z = -x
    mu = 1.0 if kind == "caputo" else rho
    partial_rho, deriv_z, value_terms = [], [], []
    k = 1
    nonzero = 0
    last = math.inf
    err = math.inf
    while nonzero < MAX_ASYMPTOTIC_TERMS and k < 10 * MAX_ASYMPTOTIC_TERMS:
        a = mu - rho * k
        da = -k if kind == "caputo" else 1 - k
        rg = rgamma(a)
        drg = rgamma_deriv(a)
        zk = z ** (-k)
        # d/drho (at fixed z) and d/dz of -z^{-k}/Gamma(a)
        p_rho = -zk * drg * da
        p_z = k * z ** (-k - 1) * rg
        size = abs(p_rho) + abs(p_z * x * ln_t) + abs(rg * zk)
        if size == 0.0:
            k += 1
            continue
        if size > last:
            break
        err = size
        partial_rho.append(p_rho)
        deriv_z.append(p_z)
        value_terms.append(-rg * zk)
        nonzero += 1
        last = size
        k += 1
    if not partial_rho:
        return None

    # drop the last term: its size is the truncation estimate
    err = abs(partial_rho[-1]) + abs(deriv_z[-1] * x * ln_t) + abs(value_terms[-1])
    d_rho = math.fsum(partial_rho[:-1])
    d_z = math.fsum(deriv_z[:-1])
    e_val = math.fsum(value_terms[:-1])
    err += _exp_remainder(rho, mu, x) * (1.0 + abs(x * ln_t) + 1.0 / rho)

    # d/drho E(-x(rho)) = partial_rho E - x ln t * dE/dz, with x = lam t^rho
    core = d_rho - x * ln_t * d_z
    if kind == "caputo":
        return core, err
    scale = t ** (rho - 1.0)
    return scale * (ln_t * e_val + core), scale * err * (1.0 + abs(ln_t))


def dml_drho_scaled(rho: float, lam: float, t: float, kind: str = "caputo",
                    rel_tol: float = 1e-10) -> float:
    r"""Derivative in :math:`\rho` of :math:`E_\rho(-\lambda t^\rho)` (``kind="caputo"``)
    or of :math:`t^{\rho-1}E_{\rho,\rho}(-\lambda t^\rho)` (``kind="rl"``), ``lam > 0``.
    """
    _check_order_args(rho, t)
    if not lam > 0.0:
        raise DomainError(f"lam must be positive: {lam}")
    if kind not in ("caputo", "rl"):
        raise DomainError(f"unknown kind: {kind!r}")

    big = lam ** (1.0 / rho) * t
    candidates = []
    if big <= 30.0:
        value, err = _dml_series(rho, lam, t, kind, rel_tol)
        if err <= rel_tol * abs(value):
            return value
        candidates.append((err, value))

    res = _dml_asymptotic(rho, lam, t, kind)
    if res is not None:
        value, err = res
        if err <= rel_tol * abs(value):
            return value
        candidates.append((err, value))

    value, err = dml_laplace(rho, lam, t, kind)
    candidates.append((err + 8 * EPS * abs(value), value))
    return min(candidates)[1]


def dml_drho(rho: float, t: float, rel_tol: float = 1e-10) -> float:
    r"""Derivative :math:`\frac{d}{d\rho}E_\rho(-t^\rho) = \sum_{n\ge1}(-1)^n y_n`."""
    return dml_drho_scaled(rho, 1.0, t, "caputo", rel_tol)


def dml_rl_drho(rho: float, t: float, rel_tol: float = 1e-10) -> float:
    r"""Derivative :math:`\frac{d}{d\rho}\left[t^{\rho-1}E_{\rho,\rho}(-t^\rho)\right]`."""
    return dml_drho_scaled(rho, 1.0, t, "rl", rel_tol)


# }}}
