r"""Extended-precision references for testing.

Everything here runs on :mod:`mpmath` and shares no code with the double
precision evaluators in :mod:`mlorder.special`. The Mittag-Leffler reference
sums the defining series with enough guard digits to absorb the cancellation
on the negative axis; when that would need an absurd number of digits it falls
back to quadrature of the Laplace-inversion integral at extended precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath as mp

from mlorder.exceptions import DomainError

#: Largest number of guard digits the series reference will spend.
MAX_GUARD_DIGITS = 200


class OracleFailure(RuntimeError):
    """The reference computation itself failed (test infrastructure error)."""


class PrecisionWarning(UserWarning):
    """A finite-difference step is too small for the working precision."""


@dataclass(frozen=True)
class PrecisionConfig:
    working_digits: int = 40
    max_terms: int = 200_000
    fd_step: float = 1e-6

    def __post_init__(self) -> None:
        if self.working_digits < 32:
            raise DomainError(f"working_digits must be >= 32: {self.working_digits}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be positive: {self.max_terms}")
        if not self.fd_step > 0:
            raise DomainError(f"fd_step must be positive: {self.fd_step}")


DEFAULT_CONFIG = PrecisionConfig()


def _series(rho, mu, z, digits: int, max_terms: int):
    tol = mp.mpf(10) ** (-digits - 5)
    total = mp.mpf(0)
    zk = mp.mpf(1)
    for k in range(max_terms):
        a = rho * k + mu
        term = zk / mp.gamma(a)
        total += term
        # terms decrease monotonically once Gamma outgrows |z|^k
        if a > 2 and abs(term) <= tol * max(abs(total), mp.mpf(10) ** (-300)):
            if abs(z) ** (1 / rho) < a:
                return total
        zk *= z
    raise OracleFailure(f"series oracle exhausted {max_terms} terms")


def _laplace(rho, mu, x):
    # t^{mu-1} E_{rho,mu}(-x t^rho) at t = 1, u = r^rho substitution
    sb = mp.sinpi(mu)
    sba = mp.sinpi(mu - rho)
    c = mp.cospi(rho)
    e = (1 - mu) / rho

    def f(u):
        return u**e * (u * sb + x * sba) / (u * u + 2 * x * u * c + x * x) * mp.exp(-u ** (1 / rho))

    pts = [mp.mpf(0), x * (1 - min(mp.mpf(0.5), 10 * mp.pi * (1 - rho))), x,
           x * (1 + min(mp.mpf(0.5), 10 * mp.pi * (1 - rho))), 2 * x + 10, mp.inf]
    pts = sorted(set(pts))
    return mp.quad(f, pts) / (mp.pi * rho)


def ml_reference_mp(rho, mu, z, cfg: PrecisionConfig = DEFAULT_CONFIG):
    """Extended-precision :math:`E_{\\rho,\\mu}(z)` as an ``mpf`` at ``cfg.working_digits``."""
    if abs(z) > 100:
        raise DomainError(f"oracle range is |z| <= 100: {z}")
    rho = mp.mpf(rho)
    mu = mp.mpf(mu)
    z = mp.mpf(z)
    if z == 0:
        with mp.workdps(cfg.working_digits):
            return 1 / mp.gamma(mu)

    growth = float(abs(z)) ** (1.0 / float(rho))
    guard = int(growth / math.log(10.0)) + 10
    if guard <= MAX_GUARD_DIGITS or z > 0:
        with mp.workdps(cfg.working_digits + guard):
            v = _series(rho, mu, z, cfg.working_digits + 2, cfg.max_terms)
        with mp.workdps(cfg.working_digits):
            return +v

    if not rho < 1:
        raise OracleFailure(f"no reference route for E_({rho}, {mu})({z})")
    with mp.workdps(cfg.working_digits + 10):
        v = _laplace_shifted(rho, mu, -z)
    with mp.workdps(cfg.working_digits):
        return +v


def _laplace_shifted(rho, mu, x):
    if mu <= 1:
        return _laplace(rho, mu, x)
    # E_{rho,mu}(z) = (E_{rho,mu-rho}(z) - 1/Gamma(mu-rho)) / z
    return (_laplace_shifted(rho, mu - rho, x) - mp.rgamma(mu - rho)) / (-x)


def ml_reference(rho: float, mu: float, z: float, cfg: PrecisionConfig = DEFAULT_CONFIG) -> float:
    r"""Reference :math:`E_{\rho,\mu}(z)` rounded to the nearest double."""
    return float(ml_reference_mp(rho, mu, z, cfg))


def ml_half_closed_form(z: float, digits: int = 40) -> float:
    r""":math:`E_{1/2}(z) = e^{z^2}\operatorname{erfc}(-z)` at extended precision."""
    with mp.workdps(digits):
        z = mp.mpf(z)
        return float(mp.exp(z * z) * mp.erfc(-z))


def _fd(f, rho: float, step: float, cfg: PrecisionConfig) -> float:
    if not (0.0 < rho - step and rho + step < 1.0):
        raise DomainError(f"rho +/- step must stay in (0, 1): {rho=}, {step=}")
    if step < 10.0 ** (-cfg.working_digits / 3):
        warnings.warn(f"step {step:g} is too small for {cfg.working_digits} digits",
                      PrecisionWarning, stacklevel=3)
    with mp.workdps(cfg.working_digits + 10):
        h = mp.mpf(step)
        r = mp.mpf(rho)
        return float((f(r + h) - f(r - h)) / (2 * h))


def dml_fd(rho: float, t: float, step: float | None = None, lam: float = 1.0,
           cfg: PrecisionConfig = DEFAULT_CONFIG) -> float:
    r"""Central difference of :math:`\rho \mapsto E_\rho(-\lambda t^\rho)`."""
    if not t > 0:
        raise DomainError(f"t must be positive: {t}")
    step = cfg.fd_step if step is None else step
    tt, ll = mp.mpf(t), mp.mpf(lam)
    inner = PrecisionConfig(cfg.working_digits + 10, cfg.max_terms, cfg.fd_step)
    return _fd(lambda r: ml_reference_mp(r, 1, -ll * tt**r, inner), rho, step, cfg)


def dml_rl_fd(rho: float, t: float, step: float | None = None, lam: float = 1.0,
              cfg: PrecisionConfig = DEFAULT_CONFIG) -> float:
    r"""Central difference of :math:`\rho \mapsto t^{\rho-1}E_{\rho,\rho}(-\lambda t^\rho)`."""
    if not t > 0:
        raise DomainError(f"t must be positive: {t}")
    step = cfg.fd_step if step is None else step
    tt, ll = mp.mpf(t), mp.mpf(lam)
    inner = PrecisionConfig(cfg.working_digits + 10, cfg.max_terms, cfg.fd_step)
    return _fd(lambda r: tt ** (r - 1) * ml_reference_mp(r, r, -ll * tt**r, inner),
               rho, step, cfg)


def derivative_term_reference(rho: float, t: float, n: int, digits: int = 40) -> float:
    r"""Extended-precision :math:`y_n = n t^{\rho n}(\ln t - \Phi(\rho n+1))/\Gamma(\rho n+1)`."""
    with mp.workdps(digits):
        r, tt = mp.mpf(rho), mp.mpf(t)
        a = r * n + 1
        return float(n * tt ** (r * n) * (mp.log(tt) - mp.digamma(a)) / mp.gamma(a))


def derivative_series_reference(rho: float, t: float, digits: int = 40) -> float:
    r"""Term-by-term sum :math:`\sum_{n\ge1}(-1)^n y_n` at extended precision."""
    with mp.workdps(digits + int(float(t) / math.log(10.0)) + 10):
        r, tt = mp.mpf(rho), mp.mpf(t)
        lt = mp.log(tt)
        total = mp.mpf(0)
        tol = mp.mpf(10) ** (-digits - 5)
        n = 1
        while True:
            a = r * n + 1
            term = (-1) ** n * n * tt ** (r * n) * (lt - mp.digamma(a)) / mp.gamma(a)
            total += term
            if a > 2 and tt < a and abs(term) <= tol * abs(total):
                break
            n += 1
            if n > 200_000:
                raise OracleFailure("derivative series oracle did not converge")
        return float(total)


def gamma_reference(x: float, digits: int = 40) -> float:
    with mp.workdps(digits):
        return float(mp.gamma(mp.mpf(x)))


def digamma_reference(x: float, digits: int = 40) -> float:
    with mp.workdps(digits):
        return float(mp.digamma(mp.mpf(x)))
