r"""Time thresholds for monotonicity in the order and numerical verifiers.

Two claims are checked here:

* :math:`E_\rho(-t^\rho)` increases in :math:`\rho \in [\rho_0, 1]` for
  :math:`t \le \min(2^{-1/\rho_0}, e^{-7/2})`;
* :math:`t^{\rho-1}E_{\rho,\rho}(-t^\rho)` decreases in :math:`\rho \in [\rho_0, 1]`
  for :math:`t \le \min(2^{-1/\rho_0}, e^{-13/6})`.

The verifiers evaluate derivatives and series terms and report what they find,
including outside the regimes above.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

from mlorder.exceptions import DomainError
from mlorder.special import derivative_terms, digamma, dml_drho, dml_rl_drho

#: Exponent in the threshold for increase of :math:`E_\rho(-t^\rho)`.
INCREASING_LOG_T = -7.0 / 2.0
#: Exponent in the threshold for decrease of :math:`t^{\rho-1}E_{\rho,\rho}(-t^\rho)`.
DECREASING_LOG_T = -13.0 / 6.0


class Kind(enum.Enum):
    Caputo1Param = "caputo"
    RL2Param = "rl"


def _check_rho0(rho0: float) -> None:
    if not 0.0 < rho0 < 1.0:
        raise DomainError(f"rho0 must lie in (0, 1): {rho0}")


def threshold_increasing(rho0: float) -> float:
    r""":math:`\min(2^{-1/\rho_0}, e^{-7/2})`."""
    _check_rho0(rho0)
    return min(2.0 ** (-1.0 / rho0), math.exp(INCREASING_LOG_T))


def threshold_decreasing(rho0: float) -> float:
    r""":math:`\min(2^{-1/\rho_0}, e^{-13/6})`."""
    _check_rho0(rho0)
    return min(2.0 ** (-1.0 / rho0), math.exp(DECREASING_LOG_T))


@dataclass(frozen=True)
class ThresholdSpec:
    rho0: float
    t_star_increasing: float
    t_star_decreasing: float

    @classmethod
    def from_rho0(cls, rho0: float) -> ThresholdSpec:
        return cls(rho0, threshold_increasing(rho0), threshold_decreasing(rho0))


@dataclass(frozen=True)
class MonotonicityReport:
    """Signs of an order derivative on a grid of orders at fixed ``t``."""

    rho_grid: list[float]
    t: float
    derivative_values: list[float]
    all_positive: bool
    all_negative: bool
    first_violation: tuple[float, float] | None = None
    kind: Kind = Kind.Caputo1Param
    #: ``t`` is within the guaranteed regime for every grid point
    in_regime: bool = True


@dataclass(frozen=True)
class TermMonotonicityReport:
    """Result of checking :math:`y_{n+1} > y_n` for ``n = 1..n_max-1``."""

    rho: float
    t: float
    n_max: int
    in_regime: bool
    violations: list[int] = field(default_factory=list)
    log_abs_terms: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> int | None:
        return self.violations[0] if self.violations else None


def _greater(a, b) -> bool:
    """``a.y_n > b.y_n`` compared through sign and log magnitude."""
    if a.sign != b.sign:
        return a.sign > b.sign
    if a.sign == 0:
        return False
    if a.sign > 0:
        return a.log_abs_y > b.log_abs_y
    return a.log_abs_y < b.log_abs_y


def verify_term_monotonicity(rho: float, t: float, n_max: int) -> TermMonotonicityReport:
    """Check that the derivative-series terms increase, ``y_{n+1} > y_n``.

    Terms are compared in log space, so underflow of ``t**(rho*n)`` does not
    produce spurious ties.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1): {rho}")
    if not t > 0.0:
        raise DomainError(f"t must be positive: {t}")
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2: {n_max}")

    terms = derivative_terms(rho, t, n_max)
    violations = [a.n for a, b in zip(terms[:-1], terms[1:]) if not _greater(b, a)]
    return TermMonotonicityReport(
        rho=rho,
        t=t,
        n_max=n_max,
        in_regime=t <= threshold_increasing(rho),
        violations=violations,
        log_abs_terms=[term.log_abs_y for term in terms],
    )


def _digamma_brackets(a: float) -> tuple[float, float]:
    """Lower and upper bounds ``ln a - 1/a <= digamma(a) <= ln a - 1/(2a)``."""
    la = math.log(a)
    return la - 1.0 / a, la - 0.5 / a


def verify_case_bound(rho: float, t: float, n: int, case_id: int) -> float:
    r"""Bracketed version of :math:`|\Phi(\rho n+1)-\Phi(\rho n+\rho+1)| / |\ln t-\Phi(\rho n+1)|`.

    Each case replaces the two digamma values in the numerator by one side of
    their bracket; the denominator always uses the lower bracket of
    :math:`\Phi(\rho n+1)`. The result is below one whenever
    :math:`\ln t < -7/2`.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1: {n}")
    if case_id not in (1, 2, 3, 4):
        raise DomainError(f"case_id must be 1, 2, 3 or 4: {case_id}")
    if not t > 0.0:
        raise DomainError(f"t must be positive: {t}")

    lo1, hi1 = _digamma_brackets(rho * n + 1.0)
    lo2, hi2 = _digamma_brackets(rho * n + rho + 1.0)
    first, second = {
        1: (hi1, lo2),
        2: (lo1, hi2),
        3: (hi1, hi2),
        4: (lo1, lo2),
    }[case_id]
    denom = abs(math.log(t) - lo1)
    return abs(first - second) / denom if denom > 0.0 else math.inf


def case_bound_ceiling(case_id: int, t: float) -> float:
    r"""Closed-form ceiling :math:`c/(|\ln t| - 1)` of each case, ``c`` in (3/2, 5/2, 3/2, 2)."""
    c = {1: 1.5, 2: 2.5, 3: 1.5, 4: 2.0}[case_id]
    denom = abs(math.log(t)) - 1.0
    return math.inf if denom <= 0 else c / denom


def exact_digamma_ratio(rho: float, t: float, n: int) -> float:
    """The unbracketed ratio, with exact digamma values."""
    p1 = digamma(rho * n + 1.0)
    p2 = digamma(rho * n + rho + 1.0)
    return abs(p1 - p2) / abs(math.log(t) - p1)


def scan_derivative_sign(rho_grid: Iterable[float], t: float,
                         kind: Kind | str = Kind.Caputo1Param) -> MonotonicityReport:
    r"""Evaluate the order derivative on ``rho_grid`` and summarise its sign.

    ``kind`` selects :math:`E_\rho(-t^\rho)` (``Caputo1Param``) or
    :math:`t^{\rho-1}E_{\rho,\rho}(-t^\rho)` (``RL2Param``). A violation is a
    nonpositive value for the first kind and a nonnegative value for the
    second.
    """
    kind = Kind(kind) if isinstance(kind, str) else kind
    grid = [float(r) for r in rho_grid]
    for r in grid:
        if not 0.0 < r < 1.0:
            raise DomainError(f"grid points must lie in (0, 1): {r}")

    deriv = dml_drho if kind is Kind.Caputo1Param else dml_rl_drho
    values = [deriv(r, t) for r in grid]

    all_pos = bool(grid) and all(v > 0.0 for v in values)
    all_neg = bool(grid) and all(v < 0.0 for v in values)
    if kind is Kind.Caputo1Param:
        bad = [(r, v) for r, v in zip(grid, values) if not v > 0.0]
        threshold = threshold_increasing
    else:
        bad = [(r, v) for r, v in zip(grid, values) if not v < 0.0]
        threshold = threshold_decreasing
    in_regime = bool(grid) and t <= threshold(min(grid))

    return MonotonicityReport(
        rho_grid=grid,
        t=t,
        derivative_values=values,
        all_positive=all_pos,
        all_negative=all_neg,
        first_violation=bad[0] if bad else None,
        kind=kind,
        in_regime=in_regime,
    )
