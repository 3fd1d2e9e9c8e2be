r"""Recovery of the order :math:`\rho` from one extra measurement.

Each solver builds a scalar map :math:`\rho \mapsto` (predicted measurement),
checks on a grid that the map is monotone on the search bracket and bisects.
The theorems behind the solvers give sufficient conditions only, so a solver
still runs when its hypotheses cannot be verified and says so in the status.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from mlorder.exceptions import DomainError, InconsistencyError, MLOverflowError
from mlorder.monotonicity import threshold_decreasing, threshold_increasing
from mlorder.special import MLQuery, dml_drho_scaled, log_ml_pos, ml
from mlorder.spectral import (
    DerivativeKind,
    InitialField,
    Point,
    SpectralDomain,
    forward_eval_log,
    mode_factors,
    solve_forward,
)

logger = logging.getLogger(__name__)

#: Default :math:`\varepsilon` of the inverse theorem.
DEFAULT_EPSILON = 1e-6
#: Bisection iteration cap.
MAX_ITER = 200
#: Number of orders sampled when estimating :math:`M_k` and derivative sups.
M_GRID_POINTS = 32
#: Safety factor on sampled derivative sups.
SAFETY = 2.0
#: Points of the monotonicity check grid.
CHECK_POINTS = 33
#: Upper end of the derivative grid; the series derivative needs rho < 1.
RHO_MAX_DERIV = 1.0 - 1e-3

_LOG_MAX = math.log(np.finfo(float).max)
#: Default lower end of the Alimov bracket.
ALIMOV_RHO_LO = 0.05


class Status(enum.Enum):
    Unique = "Unique"
    NoSolutionBelowRange = "NoSolutionBelowRange"
    NoSolutionAboveRange = "NoSolutionAboveRange"
    HypothesesUnverified = "HypothesesUnverified"


@dataclass(frozen=True)
class PointObservation:
    x0: Point
    t0: float
    d0: float

    def __post_init__(self) -> None:
        if not self.t0 > 0:
            raise DomainError(f"t0 must be positive: {self.t0}")


@dataclass(frozen=True)
class PskhuProblem:
    phi: float
    lam: float
    x0: float
    u0: float

    def __post_init__(self) -> None:
        if self.phi == 0:
            raise DomainError("phi must be nonzero")
        if not 0.0 < self.x0 <= 1.0:
            raise DomainError(f"x0 must lie in (0, 1]: {self.x0}")
        if not self.u0 / self.phi > 0:
            raise DomainError(f"u0/phi must be positive: {self.u0 / self.phi}")


@dataclass(frozen=True)
class HypothesisCheck:
    epsilon: float
    n0: int
    per_mode_sign_ok: bool
    margin_ok: bool
    M_values: list[float]
    #: t0 is at or below the small-time threshold
    in_regime: bool = True
    margin: float = math.nan

    @property
    def verified(self) -> bool:
        return self.per_mode_sign_ok and self.margin_ok and self.in_regime


@dataclass(frozen=True)
class InverseResult:
    rho_hat: float
    bracket_lo: float
    bracket_hi: float
    iterations: int
    residual: float
    status: Status
    #: every root found when the sampled map is not monotone
    candidates: list[float] = field(default_factory=list)
    #: "increasing" or "decreasing", as sampled
    direction: str = ""
    hypotheses: HypothesisCheck | None = None

    def to_dict(self) -> dict:
        d = {
            "rho_hat": self.rho_hat,
            "status": self.status.value,
            "iterations": self.iterations,
            "residual": self.residual,
            "bracket": [self.bracket_lo, self.bracket_hi],
            "candidates": list(self.candidates),
            "direction": self.direction,
        }
        if self.hypotheses is not None:
            d["hypotheses"] = asdict(self.hypotheses)
        return d


# {{{ shared bisection


def _bisect(f: Callable[[float], float], lo: float, hi: float, flo: float, fhi: float,
            tol: float, ftol: float) -> tuple[float, float, float, float, int]:
    """Bisection on a sign change of ``f`` over ``[lo, hi]``.

    Returns ``(root, residual, lo, hi, iterations)``; the returned bracket still
    holds the sign change.
    """
    if flo == 0.0:
        return lo, 0.0, lo, lo, 0
    if fhi == 0.0:
        return hi, 0.0, hi, hi, 0
    if (flo > 0) == (fhi > 0):
        raise DomainError("bracket does not hold a sign change")
    it = 0
    best, best_res = (lo, abs(flo)) if abs(flo) <= abs(fhi) else (hi, abs(fhi))
    while it < MAX_ITER and hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        it += 1
        if abs(fm) < best_res:
            best, best_res = mid, abs(fm)
        if fm == 0.0:
            return mid, 0.0, mid, mid, it
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    root = 0.5 * (lo + hi)
    res = abs(f(root))
    if res > best_res and best_res <= ftol:
        root, res = best, best_res
    return root, res, lo, hi, it


def _monotone_direction(values: Sequence[float]) -> str | None:
    d = np.diff(np.asarray(values, dtype=float))
    if np.all(d > 0):
        return "increasing"
    if np.all(d < 0):
        return "decreasing"
    return None


def _all_roots(f: Callable[[float], float], grid: np.ndarray, sgn: Sequence[float],
               tol: float, ftol: Callable[..., float]) -> list[float]:
    """Every root of ``f`` seen on the sampled grid, sorted.

    Sign changes between samples are bisected. Each interior sampled extremum
    is refined first, since a hump between two samples can cross zero without
    a sampled sign change.
    """
    xs = [float(r) for r in grid]
    fs = list(sgn)
    for i in range(1, len(grid) - 1):
        if (fs[i] - fs[i - 1]) * (fs[i + 1] - fs[i]) < 0:
            s = 1.0 if fs[i] > fs[i - 1] else -1.0
            opt = minimize_scalar(lambda r: -s * f(r), bounds=(xs[i - 1], xs[i + 1]),
                                  method="bounded", options={"xatol": tol})
            xs.append(float(opt.x))
            fs.append(-s * float(opt.fun))
    order = np.argsort(xs)
    xs = [xs[j] for j in order]
    fs = [fs[j] for j in order]
    roots = [x for x, v in zip(xs, fs) if abs(v) <= ftol(v)]
    for i in range(len(xs) - 1):
        a, b = fs[i], fs[i + 1]
        ft = ftol(a, b)
        if abs(a) > ft and abs(b) > ft and (a > 0) != (b > 0):
            r, *_ = _bisect(f, xs[i], xs[i + 1], a, b, tol, ft)
            roots.append(r)
    return sorted(roots)


def _solve_scalar(g: Callable[[float], float], target: float, lo: float, hi: float,
                  tol: float, ftol: float | None, verified: bool, strict: bool,
                  expected: str | None = None,
                  hypotheses: HypothesisCheck | None = None) -> InverseResult:
    """Solve ``g(rho) = target`` on ``[lo, hi]``.

    ``strict`` turns a non-monotone sample under verified hypotheses into an
    :class:`InconsistencyError`; otherwise the solver falls back to bracketing
    every sign change and reports the candidates.
    """
    grid = np.linspace(lo, hi, CHECK_POINTS)
    vals = [g(float(r)) for r in grid]
    fixed = ftol

    def tol_near(*vs: float) -> float:
        # relative to the map values being compared, never to far-away samples
        if fixed is not None:
            return fixed
        return 1e-10 * max(abs(target), *(abs(v) for v in vs), 1e-300)
    direction = _monotone_direction(vals)
    if direction is not None and expected is not None and direction != expected:
        direction_ok = False
    else:
        direction_ok = direction is not None

    def f(r: float) -> float:
        return g(r) - target

    status_ok = Status.Unique if verified and direction_ok else Status.HypothesesUnverified

    if direction is None:
        if verified and strict:
            raise InconsistencyError(
                "sampled map is not monotone although the hypotheses hold")
        logger.info("sampled map is not monotone on [%g, %g]", lo, hi)
        roots = _all_roots(f, grid, [v - target for v in vals], tol,
                           lambda *d: tol_near(*(x + target for x in d)))
        if not roots:
            below = target < min(vals)
            return InverseResult(math.nan, lo, hi, 0, math.nan,
                                 Status.NoSolutionBelowRange if below
                                 else Status.NoSolutionAboveRange, [], "", hypotheses)
        r0 = roots[0]
        return InverseResult(r0, r0, r0, 0, abs(f(r0)), Status.HypothesesUnverified,
                             roots, "", hypotheses)

    vmin, vmax = min(vals[0], vals[-1]), max(vals[0], vals[-1])
    if target < vmin - tol_near(vmin):
        return InverseResult(math.nan, lo, hi, 0, vmin - target, Status.NoSolutionBelowRange,
                             [], direction, hypotheses)
    if target > vmax + tol_near(vmax):
        return InverseResult(math.nan, lo, hi, 0, target - vmax, Status.NoSolutionAboveRange,
                             [], direction, hypotheses)
    # endpoints within tolerance are returned exactly
    for r, v in ((hi, vals[-1]), (lo, vals[0])):
        if abs(v - target) <= tol_near(v):
            return InverseResult(r, r, r, 0, abs(v - target), status_ok, [r], direction,
                                 hypotheses)

    # locate the sampled cell, then bisect inside it
    sgn = [v - target for v in vals]
    i = next(i for i in range(len(grid) - 1) if (sgn[i] > 0) != (sgn[i + 1] > 0))
    ft = tol_near(vals[i], vals[i + 1])
    root, res, blo, bhi, it = _bisect(f, float(grid[i]), float(grid[i + 1]),
                                      sgn[i], sgn[i + 1], tol, ft)
    status = status_ok if res <= ft else Status.HypothesesUnverified
    return InverseResult(root, blo, bhi, it, res, status, [root], direction, hypotheses)


# }}}


# {{{ single-point observation


def G(rho: float, domain: SpectralDomain, field: InitialField, x0: Point, t0: float,
      N: int | None = None) -> float:
    r""":math:`G(\rho) = \sum_{k\le N}\varphi_k E_\rho(-\lambda_k t_0^\rho) v_k(x_0)`."""
    n = min(len(field), domain.mode_count_available) if N is None else N
    if not 1 <= n <= min(len(field), domain.mode_count_available):
        raise DomainError(f"N out of range: {n}")
    e = mode_factors(rho, domain.eigenvalues[:n], t0)
    v = domain.eigenfunction_values(x0, n)
    return math.fsum(field.coefficients[:n] * e * v)


def _rho_grid(rho0: float) -> np.ndarray:
    if not 0.0 < rho0 < RHO_MAX_DERIV:
        raise DomainError(f"rho0 must lie in (0, {RHO_MAX_DERIV}): {rho0}")
    return np.linspace(rho0, RHO_MAX_DERIV, M_GRID_POINTS)


def _derivative_samples(lam: float, t0: float, grid: np.ndarray) -> np.ndarray:
    if not lam > 0:
        raise DomainError(f"order derivatives need positive eigenvalues: {lam}")
    return np.array([dml_drho_scaled(float(r), lam, t0) for r in grid])


def compute_n0(epsilon: float, rho0: float, t0: float, domain: SpectralDomain,
               field: InitialField, x0: Point | None = None) -> int:
    r"""Smallest :math:`n_0` whose derivative tail is below ``epsilon``.

    The tail is :math:`\sum_{k>n_0}|\varphi_k v_k(x_0)|\,\sup_\rho|\partial_\rho
    E_\rho(-\lambda_k t_0^\rho)|` with the sup sampled on 32 orders in
    :math:`[\rho_0, 1-10^{-3}]` and doubled. Without ``x0`` the bound
    :math:`\sup_x|v_k(x)|` is used.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive: {epsilon}")
    if not t0 > 0:
        raise DomainError(f"t0 must be positive: {t0}")
    grid = _rho_grid(rho0)
    n = min(len(field), domain.mode_count_available)
    phi = field.coefficients[:n]
    if x0 is None:
        v = np.array([domain.sup_norm(k) for k in range(1, n + 1)])
    else:
        v = np.abs(domain.eigenfunction_values(x0, n))
    w = np.zeros(n)
    for k in range(n):
        if phi[k] != 0.0 and v[k] != 0.0:
            d = _derivative_samples(float(domain.eigenvalues[k]), t0, grid)
            w[k] = abs(phi[k]) * v[k] * SAFETY * float(np.max(np.abs(d)))
    # tails[j] = sum_{k >= j} w_k (0-based), tails[n] = 0
    tails = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    for n0 in range(1, n + 1):
        if tails[n0] < epsilon:
            if n0 == n and not field.complete:
                raise DomainError(
                    "derivative tail is not below epsilon within the available modes; "
                    "supply more modes or a larger epsilon")
            return n0
    raise DomainError("derivative tail is not below epsilon; supply more modes or a larger epsilon")


def check_hypotheses(epsilon: float, rho0: float, obs: PointObservation,
                     domain: SpectralDomain, field: InitialField) -> HypothesisCheck:
    r"""Check the sign conditions and the margin condition of the inverse theorem.

    :math:`M_k` is the smallest sampled value of
    :math:`\partial_\rho E_\rho(-\lambda_k t_0^\rho)` over the order grid, and the
    margin condition is :math:`\sum_{k\le n_0}\varphi_k v_k(x_0) > \varepsilon/M_{k_0}`
    with :math:`M_{k_0} = \min_k M_k`.
    """
    n0 = compute_n0(epsilon, rho0, obs.t0, domain, field, obs.x0)
    grid = _rho_grid(rho0)
    phi = field.coefficients[:n0]
    v = domain.eigenfunction_values(obs.x0, n0)
    sign_ok = bool(np.all(phi >= 0) and np.all(v >= 0))
    M = [float(np.min(_derivative_samples(float(lam), obs.t0, grid)))
         for lam in domain.eigenvalues[:n0]]
    mk0 = min(M)
    s = math.fsum(phi * v)
    margin_ok = bool(mk0 > 0 and s > epsilon / mk0)
    return HypothesisCheck(epsilon, n0, sign_ok, margin_ok, M,
                           obs.t0 <= threshold_increasing(rho0), s - epsilon / mk0 if mk0 > 0
                           else -math.inf)


def solve_point(obs: PointObservation, domain: SpectralDomain, field: InitialField,
                rho0: float, tol: float = 1e-12, epsilon: float = DEFAULT_EPSILON,
                ftol: float | None = None) -> InverseResult:
    r"""Solve :math:`G(\rho) = d_0` on :math:`[\rho_0, 1]`."""
    hyp = check_hypotheses(epsilon, rho0, obs, domain, field)
    if not hyp.verified:
        logger.info("point observation: hypotheses not verified (%s)", hyp)
    return _solve_scalar(lambda r: G(r, domain, field, obs.x0, obs.t0), obs.d0, rho0, 1.0,
                         tol, ftol, hyp.verified, strict=True, expected="increasing",
                         hypotheses=hyp)


# }}}


# {{{ norm observation


def norm_map(rho: float, t0: float, domain: SpectralDomain, field: InitialField) -> float:
    r""":math:`\sum_k\varphi_k^2 E_\rho(-\lambda_k t_0^\rho)^2`."""
    sol = solve_forward(domain, field, rho)
    n = sol.truncation
    e = mode_factors(rho, domain.eigenvalues[:n], t0)
    return math.fsum((field.coefficients[:n] * e) ** 2)


def solve_norm(t0: float, d0: float, domain: SpectralDomain, field: InitialField,
               rho0: float, tol: float = 1e-12, ftol: float | None = None,
               large_time: bool = False) -> InverseResult:
    r"""Solve :math:`\|u(\cdot,t_0)\|^2 = d_0` on :math:`[\rho_0, 1]`.

    In the small-time regime each factor :math:`E_\rho(-\lambda_k t_0^\rho)` is
    positive and increasing, so is the sum of their squares. The increase is
    checked per mode on the derivative grid; ``large_time=True`` skips the
    regime requirement and relies on the sampled monotonicity alone.
    """
    if not t0 > 0:
        raise DomainError(f"t0 must be positive: {t0}")
    n = min(len(field), domain.mode_count_available)
    if not np.any(field.coefficients[:n] != 0):
        raise DomainError("the initial field vanishes")
    grid = _rho_grid(rho0)
    increasing = all(
        float(np.min(_derivative_samples(float(lam), t0, grid))) > 0
        for lam, c in zip(domain.eigenvalues[:n], field.coefficients[:n]) if c != 0
    )
    in_regime = large_time or t0 <= threshold_increasing(rho0)
    verified = increasing and in_regime
    return _solve_scalar(lambda r: norm_map(r, t0, domain, field), d0, rho0, 1.0, tol, ftol,
                         verified, strict=False, expected="increasing")


# }}}


# {{{ Alimov large-time observation


def solve_alimov(obs: PointObservation, domain: SpectralDomain, field: InitialField,
                 tol: float = 1e-12, rho_lo: float = ALIMOV_RHO_LO,
                 ftol: float | None = None) -> InverseResult:
    r"""Solve :math:`U(\rho; t_0) = d_0` for a Riemann-Liouville problem with :math:`\lambda_1 < 0`.

    :math:`U` is dominated by its first mode, which grows like
    :math:`e^{t_0|\lambda_1|^{1/\rho}}`, so the bisection runs on
    :math:`\ln|U|`. :math:`U` decreases in :math:`\rho` when :math:`\varphi_1 > 0`
    and increases when :math:`\varphi_1 < 0`.
    """
    lam = domain.eigenvalues
    if lam.size < 2 or not (lam[0] < 0 < lam[1]):
        raise DomainError("need l1 < 0 < l2")
    phi1 = float(field.coefficients[0])
    if phi1 == 0.0:
        raise DomainError("the first Fourier coefficient must be nonzero")
    if not 0.0 < rho_lo < 1.0:
        raise DomainError(f"rho_lo must lie in (0, 1): {rho_lo}")
    lam_star = float(np.min(np.abs(lam[np.abs(lam) > 0])))
    t0 = obs.t0
    # t0^rho lam* over the bracket is smallest at one of the ends
    if min(t0**rho_lo, t0) * lam_star <= 1.0:
        raise DomainError(f"t0 too small: need t0^rho * {lam_star:g} > 1 on [{rho_lo}, 1]")

    v1 = domain.v(1, obs.x0)
    sign = math.copysign(1.0, phi1 * v1)
    expected = "increasing" if phi1 < 0 else "decreasing"

    def log_abs_u(r: float) -> float:
        sol = solve_forward(domain, field, r, DerivativeKind.RiemannLiouville)
        lv, s = forward_eval_log(sol, obs.x0, t0)
        if s != sign:
            raise InconsistencyError("U changed sign inside the bracket")
        return lv

    if obs.d0 == 0 or math.copysign(1.0, obs.d0) != sign:
        # U keeps the sign of phi_1 v_1(x0) throughout
        st = Status.NoSolutionBelowRange if sign > 0 else Status.NoSolutionAboveRange
        return InverseResult(math.nan, rho_lo, 1.0, 0, math.nan, st, [], expected)

    res = _solve_scalar(log_abs_u, math.log(abs(obs.d0)), rho_lo, 1.0, tol, ftol,
                        verified=v1 > 0, strict=False, expected="decreasing")
    # |U| decreases in rho; translate statuses back to U itself
    status = res.status
    if sign < 0 and status is Status.NoSolutionBelowRange:
        status = Status.NoSolutionAboveRange
    elif sign < 0 and status is Status.NoSolutionAboveRange:
        status = Status.NoSolutionBelowRange
    direction = res.direction
    if direction and sign < 0:
        direction = "increasing" if direction == "decreasing" else "decreasing"
    return InverseResult(res.rho_hat, res.bracket_lo, res.bracket_hi, res.iterations,
                         res.residual, status, res.candidates, direction)


def alimov_U(rho: float, domain: SpectralDomain, field: InitialField, x0: Point,
             t0: float) -> float:
    r""":math:`U(\rho; t_0) = \sum_m t_0^{\rho-1}E_{\rho,\rho}(-\lambda_m t_0^\rho)\varphi_m v_m(x_0)`."""
    from mlorder.spectral import forward_eval
    return forward_eval(solve_forward(domain, field, rho, DerivativeKind.RiemannLiouville), x0, t0)


# }}}


# {{{ Pskhu single-point problem


def pskhu_log_map(rho: float, lam: float, x0: float) -> float:
    r""":math:`\ln f(\rho)` with :math:`f(\rho) = x_0^{\rho-1}E_{\rho,\rho}(\lambda x_0^\rho) > 0`."""
    z = lam * x0**rho
    pre = (rho - 1.0) * math.log(x0)
    if z > 1.0 and rho < 1.0:
        return pre + log_ml_pos(rho, z)
    if rho == 1.0:
        return pre + z
    return pre + math.log(ml(MLQuery(rho, rho, z)).value)


def pskhu_map(rho: float, lam: float, x0: float) -> float:
    r""":math:`f(\rho) = x_0^{\rho-1}E_{\rho,\rho}(\lambda x_0^\rho)`."""
    lv = pskhu_log_map(rho, lam, x0)
    if lv > _LOG_MAX:
        raise MLOverflowError(f"map value overflows; log value {lv:.17g}", lv)
    return math.exp(lv)


def pskhu_forward(rho: float, phi: float, lam: float, x0: float) -> float:
    r"""Solution value :math:`u(x_0) = \varphi x_0^{\rho-1}E_{\rho,\rho}(\lambda x_0^\rho)`."""
    return phi * pskhu_map(rho, lam, x0)


def solve_pskhu(p: PskhuProblem, rho0: float = 0.1, tol: float = 1e-12,
                ftol: float | None = None) -> InverseResult:
    r"""Solve :math:`\varphi x_0^{\rho-1}E_{\rho,\rho}(\lambda x_0^\rho) = u_0` on :math:`[\rho_0, 1]`.

    For :math:`\lambda < 0` the decrease of the map is guaranteed when
    :math:`x_0 \le \min(2^{-1/\rho_0}, e^{-13/6})`. A non-monotone sample is
    reported as ``HypothesesUnverified`` with every root found.
    """
    if not 0.0 < rho0 < 1.0:
        raise DomainError(f"rho0 must lie in (0, 1): {rho0}")
    target = p.u0 / p.phi
    if p.lam < 0:
        in_regime = p.x0 <= threshold_decreasing(rho0)
    else:
        in_regime = True
    # f > 0, and log f keeps large-lambda problems in range
    return _solve_scalar(lambda r: pskhu_log_map(r, p.lam, p.x0), math.log(target), rho0, 1.0,
                         tol, ftol, verified=in_regime, strict=False, expected="decreasing")


# }}}
