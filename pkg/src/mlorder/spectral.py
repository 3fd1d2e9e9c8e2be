r"""Spectral solutions of subdiffusion problems on separable domains.

A forward problem is a list of Laplacian eigenpairs :math:`(\lambda_k, v_k)`,
Fourier coefficients :math:`\varphi_k` of the initial datum and an order
:math:`\rho`. With the Caputo derivative each mode relaxes as
:math:`E_\rho(-\lambda_k t^\rho)`; with the Riemann-Liouville derivative as
:math:`t^{\rho-1}E_{\rho,\rho}(-\lambda_k t^\rho)`.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from mlorder.exceptions import AccuracyError, DomainError, MLOverflowError
from mlorder.special import MLQuery, gamma, log_ml_pos, ml

#: Times below this are reported as near-singular for the Riemann-Liouville solution.
RL_NEAR_SINGULAR_T = 1e-8
_GL_NODES = 8
_MAX_DOUBLINGS = 10


class AccuracyWarning(UserWarning):
    """A quadrature did not settle when refined."""


class DomainKind(enum.Enum):
    Interval = "interval"
    Rectangle = "rectangle"
    Custom = "custom"


class DerivativeKind(enum.Enum):
    Caputo = "caputo"
    RiemannLiouville = "rl"


class FieldSource(enum.Enum):
    Given = "given"
    ProjectedFromFunction = "projected"


Point = float | Sequence[float]


def _as_point(x: Point) -> tuple[float, ...]:
    if np.ndim(x) == 0:
        return (float(x),)
    return tuple(float(c) for c in x)


class PointValues:
    """Eigenfunction known only through its values at a few points."""

    def __init__(self, values: dict[tuple[float, ...], Sequence[float]]):
        self._values = {_as_point(k): np.asarray(v, dtype=float) for k, v in values.items()}

    def __call__(self, k: int, x: Point) -> float:
        key = _as_point(x)
        if key not in self._values:
            raise DomainError(f"no eigenfunction values stored at {key}")
        return float(self._values[key][k - 1])

    @property
    def points(self) -> list[tuple[float, ...]]:
        return list(self._values)

    def values_at(self, x: Point) -> np.ndarray:
        return self._values[_as_point(x)]


@dataclass(frozen=True)
class SpectralDomain:
    """Ordered eigenvalues with an eigenfunction evaluator ``(k, x) -> v_k(x)``.

    Modes are numbered from 1. Use :meth:`interval`, :meth:`rectangle` or
    :meth:`custom` to build one.
    """

    kind: DomainKind
    params: dict[str, Any]
    eigenvalues: np.ndarray
    eigenfunction: Callable[[int, Point], float] | None = field(default=None, repr=False)
    sup_norms: np.ndarray | None = field(default=None, repr=False)
    # (m, n) index pairs of the rectangle modes
    _pairs: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise DomainError("need a nonempty list of eigenvalues")
        if not np.all(np.isfinite(lam)):
            raise DomainError("eigenvalues must be finite")
        if lam.size > 1 and not (lam[0] < lam[1] and np.all(np.diff(lam[1:]) >= 0)):
            raise DomainError("eigenvalues must satisfy l1 < l2 <= l3 <= ...")
        object.__setattr__(self, "eigenvalues", lam)
        if self.sup_norms is not None:
            sup = np.asarray(self.sup_norms, dtype=float)
            if sup.shape != lam.shape:
                raise DomainError("sup_norms must match eigenvalues")
            object.__setattr__(self, "sup_norms", sup)

    @classmethod
    def interval(cls, length: float = 1.0, n_modes: int = 100) -> SpectralDomain:
        """Dirichlet Laplacian on ``(0, length)``."""
        if not length > 0:
            raise DomainError(f"length must be positive: {length}")
        if n_modes < 1:
            raise DomainError(f"n_modes must be positive: {n_modes}")
        k = np.arange(1, n_modes + 1)
        lam = (k * math.pi / length) ** 2
        sup = np.full(n_modes, math.sqrt(2.0 / length))
        return cls(DomainKind.Interval, {"L": float(length)}, lam, None, sup)

    @classmethod
    def rectangle(cls, lx: float = 1.0, ly: float = 1.0, n_modes: int = 100) -> SpectralDomain:
        """Dirichlet Laplacian on ``(0, lx) x (0, ly)``, modes sorted by eigenvalue."""
        if not (lx > 0 and ly > 0):
            raise DomainError(f"side lengths must be positive: {lx}, {ly}")
        if n_modes < 1:
            raise DomainError(f"n_modes must be positive: {n_modes}")
        pairs = [(m, n) for m in range(1, n_modes + 1) for n in range(1, n_modes + 1)]
        lam_of = {p: (p[0] * math.pi / lx) ** 2 + (p[1] * math.pi / ly) ** 2 for p in pairs}
        pairs.sort(key=lambda p: (lam_of[p], p))
        pairs = pairs[:n_modes]
        lam = np.array([lam_of[p] for p in pairs])
        sup = np.full(n_modes, 2.0 / math.sqrt(lx * ly))
        return cls(DomainKind.Rectangle, {"Lx": float(lx), "Ly": float(ly)}, lam, None, sup,
                   tuple(pairs))

    @classmethod
    def custom(cls, eigenvalues: Sequence[float],
               eigenfunction: Callable[[int, Point], float] | None = None,
               sup_norms: Sequence[float] | None = None,
               point_values: dict[Any, Sequence[float]] | None = None) -> SpectralDomain:
        """Abstract spectrum, e.g. with a negative first eigenvalue.

        Eigenfunctions come either from ``eigenfunction(k, x)`` or, when only
        a few observation points matter, from ``point_values`` mapping a point
        to the list ``[v_1(x), v_2(x), ...]``.
        """
        if eigenfunction is not None and point_values is not None:
            raise DomainError("give either eigenfunction or point_values, not both")
        if point_values is not None:
            eigenfunction = PointValues(point_values)
            for v in eigenfunction._values.values():
                if len(v) != len(eigenvalues):
                    raise DomainError("point_values must list one value per eigenvalue")
        return cls(DomainKind.Custom, {}, np.asarray(eigenvalues, dtype=float),
                   eigenfunction, None if sup_norms is None else np.asarray(sup_norms))

    @property
    def mode_count_available(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def dimension(self) -> int:
        return 2 if self.kind is DomainKind.Rectangle else 1

    def eigenfunction_values(self, x: Point, n: int | None = None) -> np.ndarray:
        """``[v_1(x), ..., v_n(x)]``."""
        n = self.mode_count_available if n is None else n
        if n > self.mode_count_available:
            raise DomainError(f"only {self.mode_count_available} modes available, asked for {n}")
        p = _as_point(x)
        if self.kind is DomainKind.Interval:
            L = self.params["L"]
            k = np.arange(1, n + 1)
            return math.sqrt(2.0 / L) * np.sin(k * math.pi * p[0] / L)
        if self.kind is DomainKind.Rectangle:
            lx, ly = self.params["Lx"], self.params["Ly"]
            if len(p) != 2:
                raise DomainError(f"rectangle points have two coordinates: {p}")
            mn = np.array(self._pairs[:n])
            return (2.0 / math.sqrt(lx * ly) * np.sin(mn[:, 0] * math.pi * p[0] / lx)
                    * np.sin(mn[:, 1] * math.pi * p[1] / ly))
        if self.eigenfunction is None:
            raise DomainError("this custom domain has no eigenfunctions")
        return np.array([self.eigenfunction(k, x) for k in range(1, n + 1)], dtype=float)

    def v(self, k: int, x: Point) -> float:
        if not 1 <= k <= self.mode_count_available:
            raise DomainError(f"mode index out of range: {k}")
        return float(self.eigenfunction_values(x, k)[k - 1])

    def sup_norm(self, k: int) -> float:
        """``sup_x |v_k(x)|``; infinite when unknown."""
        if self.sup_norms is None:
            return math.inf
        return float(self.sup_norms[k - 1])

    # quadrature on the geometry ----------------------------------------

    def _quad_rule(self, panels: int) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre nodes (shape ``(m, dim)``) and weights."""
        g, w = np.polynomial.legendre.leggauss(_GL_NODES)

        def rule_1d(length: float) -> tuple[np.ndarray, np.ndarray]:
            edges = np.linspace(0.0, length, panels + 1)
            half = np.diff(edges) / 2.0
            mid = (edges[:-1] + edges[1:]) / 2.0
            nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
            weights = (half[:, None] * w[None, :]).ravel()
            return nodes, weights

        if self.kind is DomainKind.Interval:
            x, wx = rule_1d(self.params["L"])
            return x[:, None], wx
        if self.kind is DomainKind.Rectangle:
            x, wx = rule_1d(self.params["Lx"])
            y, wy = rule_1d(self.params["Ly"])
            X, Y = np.meshgrid(x, y, indexing="ij")
            W = np.outer(wx, wy)
            return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()
        raise DomainError("quadrature needs an interval or rectangle domain")

    def _basis_on(self, nodes: np.ndarray, n: int) -> np.ndarray:
        """Matrix ``B[k, j] = v_{k+1}(node_j)``."""
        if self.kind is DomainKind.Interval:
            L = self.params["L"]
            k = np.arange(1, n + 1)[:, None]
            return math.sqrt(2.0 / L) * np.sin(k * math.pi * nodes[None, :, 0] / L)
        lx, ly = self.params["Lx"], self.params["Ly"]
        mn = np.array(self._pairs[:n])
        return (2.0 / math.sqrt(lx * ly)
                * np.sin(mn[:, 0:1] * math.pi * nodes[None, :, 0] / lx)
                * np.sin(mn[:, 1:2] * math.pi * nodes[None, :, 1] / ly))

    def gram_matrix(self, n: int = 10, panels: int = 64) -> np.ndarray:
        """Quadrature of :math:`(v_j, v_k)` for ``j, k <= n``."""
        nodes, w = self._quad_rule(panels)
        B = self._basis_on(nodes, n)
        return (B * w) @ B.T

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value, "params": dict(self.params),
                             "eigenvalues": self.eigenvalues.tolist()}
        if isinstance(self.eigenfunction, PointValues):
            d["params"]["point_values"] = [
                {"x": list(p), "values": self.eigenfunction.values_at(p).tolist()}
                for p in self.eigenfunction.points
            ]
        if self.kind is DomainKind.Custom and self.sup_norms is not None:
            d["params"]["sup_norms"] = self.sup_norms.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SpectralDomain:
        kind = DomainKind(d["kind"])
        params = d.get("params", {})
        lam = d.get("eigenvalues")
        if kind is DomainKind.Interval:
            n = len(lam) if lam else params.get("n_modes", 100)
            return cls.interval(params.get("L", 1.0), n)
        if kind is DomainKind.Rectangle:
            n = len(lam) if lam else params.get("n_modes", 100)
            return cls.rectangle(params.get("Lx", 1.0), params.get("Ly", 1.0), n)
        pv = params.get("point_values")
        values = None if pv is None else {tuple(e["x"]): e["values"] for e in pv}
        return cls.custom(lam, sup_norms=params.get("sup_norms"), point_values=values)


@dataclass(frozen=True)
class InitialField:
    """Fourier coefficients :math:`\\varphi_k` of an initial datum."""

    coefficients: np.ndarray
    source: FieldSource = FieldSource.Given
    decay_exponent_estimate: float | None = None
    parseval_defect: float | None = None
    #: the listed coefficients are the whole field (all later ones vanish)
    complete: bool = True

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("need a nonempty list of coefficients")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def given(cls, coefficients: Sequence[float], eigenvalues: Sequence[float] | None = None,
              complete: bool = True) -> InitialField:
        c = np.asarray(coefficients, dtype=float)
        p = None if eigenvalues is None else estimate_decay_exponent(c, eigenvalues)
        return cls(c, FieldSource.Given, p, None, complete)

    def __len__(self) -> int:
        return int(self.coefficients.size)

    @property
    def norm_sq(self) -> float:
        return math.fsum(self.coefficients**2)

    def to_dict(self) -> dict[str, Any]:
        return {"coefficients": self.coefficients.tolist(), "source": self.source.value,
                "complete": self.complete}


def estimate_decay_exponent(coefficients: Sequence[float], eigenvalues: Sequence[float]) -> float | None:
    r"""Fit :math:`|\varphi_k| \approx c\,\lambda_k^{-(p+1)/2}` and return ``p``.

    Only modes with positive eigenvalue and nonzero coefficient enter the
    least-squares fit of :math:`\ln|\varphi_k|` against :math:`\ln\lambda_k`.
    Returns ``None`` with fewer than three usable modes.
    """
    c = np.abs(np.asarray(coefficients, dtype=float))
    lam = np.asarray(eigenvalues, dtype=float)[: c.size]
    c = c[: lam.size]
    scale = c.max() if c.size else 0.0
    use = (lam > 0) & (c > 1e-14 * scale)
    if use.sum() < 3:
        return None
    slope, _ = np.polyfit(np.log(lam[use]), np.log(c[use]), 1)
    return float(-2.0 * slope - 1.0)


def _call_vectorized(f: Callable, nodes: np.ndarray) -> np.ndarray:
    args = [nodes[:, i] for i in range(nodes.shape[1])]
    try:
        out = np.asarray(f(*args), dtype=float)
        if out.shape == (nodes.shape[0],):
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(*row)) for row in nodes])


def project_initial(domain: SpectralDomain, f: Callable, n_modes: int,
                    quad_points: int | None = None) -> InitialField:
    """Fourier coefficients ``(f, v_k)``, ``k = 1..n_modes``, by composite Gauss-Legendre.

    ``f`` takes one argument per coordinate and may be vectorized. The panel
    count doubles until the coefficients stop changing; the Parseval defect
    :math:`\\|f\\|^2 - \\sum\\varphi_k^2` of the final rule is stored on the
    result.
    """
    if n_modes < 1:
        raise DomainError(f"n_modes must be positive: {n_modes}")
    if n_modes > domain.mode_count_available:
        raise DomainError(f"domain has only {domain.mode_count_available} modes")
    quad_points = 4 * n_modes if quad_points is None else quad_points
    if quad_points < 4 * n_modes:
        raise DomainError(f"quad_points must be >= 4 * n_modes: {quad_points}")

    panels = max(1, math.ceil(quad_points / _GL_NODES))
    prev = None
    defects = []
    for _ in range(_MAX_DOUBLINGS):
        nodes, w = domain._quad_rule(panels)
        fv = _call_vectorized(f, nodes)
        coef = domain._basis_on(nodes, n_modes) @ (w * fv)
        norm_sq = float(np.dot(w, fv * fv))
        defects.append(norm_sq - math.fsum(coef**2))
        if prev is not None:
            change = float(np.max(np.abs(coef - prev)))
            if change <= 1e-14 * max(1.0, math.sqrt(norm_sq)):
                break
        prev = coef
        panels *= 2
    else:
        warnings.warn("projection quadrature did not settle; coefficients may be inaccurate",
                      AccuracyWarning, stacklevel=2)

    return InitialField(coef, FieldSource.ProjectedFromFunction,
                        estimate_decay_exponent(coef, domain.eigenvalues), defects[-1],
                        complete=False)


def envelope_constant(rho: float) -> float:
    r"""Constant :math:`C = 1 + 1/\Gamma(1-\rho)` with :math:`|E_{\rho,\mu}(-t)| \le C/(1+t)`."""
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"rho must lie in (0, 1]: {rho}")
    return 1.0 if rho == 1.0 else 1.0 + 1.0 / gamma(1.0 - rho)


def _mode_factor(rho: float, lam: float, t: float, kind: DerivativeKind) -> tuple[float, float]:
    """``(log |T_k(t)|, sign)`` of the time factor of one mode."""
    mu = 1.0 if kind is DerivativeKind.Caputo else rho
    pre = 0.0 if kind is DerivativeKind.Caputo else (rho - 1.0) * math.log(t)
    z = -lam * t**rho
    if z > 1.0 and mu == rho:
        return pre + log_ml_pos(rho, z), 1.0
    try:
        v = ml(MLQuery(rho, mu, z)).value
    except MLOverflowError as exc:
        return pre + exc.log_value, exc.sign
    if v == 0.0:
        return -math.inf, 0.0
    return pre + math.log(abs(v)), math.copysign(1.0, v)


def mode_factors(rho: float, eigenvalues: Sequence[float], t: float,
                 kind: DerivativeKind = DerivativeKind.Caputo) -> np.ndarray:
    """Time factors ``T_k(t)`` as plain floats; raises on overflow."""
    out = np.empty(len(eigenvalues))
    for i, lam in enumerate(eigenvalues):
        lv, s = _mode_factor(rho, float(lam), t, kind)
        if lv > math.log(np.finfo(float).max):
            raise MLOverflowError(f"mode {i + 1} factor overflows; log value {lv:.17g}", lv, s)
        out[i] = s * math.exp(lv) if s else 0.0
    return out


@dataclass(frozen=True)
class ForwardSolution:
    """Truncated spectral solution; immutable once built by :func:`solve_forward`."""

    domain: SpectralDomain
    coefficients: np.ndarray
    rho: float
    derivative_kind: DerivativeKind
    truncation: int
    tail_bound: float
    #: time at which ``tail_bound`` was computed
    t_ref: float = 1.0
    decay_exponent_estimate: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.rho <= 1.0:
            raise DomainError(f"rho must lie in (0, 1]: {self.rho}")
        if not 1 <= self.truncation <= min(len(self.coefficients),
                                           self.domain.mode_count_available):
            raise DomainError(f"truncation out of range: {self.truncation}")


def solve_forward(domain: SpectralDomain, field: InitialField, rho: float,
                  kind: DerivativeKind | str = DerivativeKind.Caputo,
                  n_modes: int | None = None, t_ref: float = 1.0) -> ForwardSolution:
    kind = DerivativeKind(kind) if isinstance(kind, str) else kind
    avail = min(len(field), domain.mode_count_available)
    n = avail if n_modes is None else n_modes
    if not 1 <= n <= avail:
        raise DomainError(f"n_modes must lie in [1, {avail}]: {n}")
    if not 0.0 < rho <= 1.0:
        raise DomainError(f"rho must lie in (0, 1]: {rho}")
    tail = truncation_bound(domain, field, rho, t_ref, n) \
        if n == avail or domain.eigenvalues[n] > 0 else math.nan
    return ForwardSolution(domain, field.coefficients.copy(), float(rho), kind, n, tail,
                           t_ref, field.decay_exponent_estimate)


def forward_eval_log(sol: ForwardSolution, x: Point, t: float) -> tuple[float, float]:
    """``(log|u(x, t)|, sign)`` of the truncated series; sign 0 for an exact zero."""
    if not t > 0.0:
        raise DomainError(f"t must be positive: {t}")
    if sol.derivative_kind is DerivativeKind.RiemannLiouville and t < RL_NEAR_SINGULAR_T:
        warnings.warn(f"t={t:g} is near the t^(rho-1) singularity", AccuracyWarning, stacklevel=3)
    n = sol.truncation
    vx = sol.domain.eigenfunction_values(x, n)
    phi = sol.coefficients[:n]
    logs = []
    signs = []
    for k in range(n):
        c = phi[k] * vx[k]
        if c == 0.0:
            continue
        lv, s = _mode_factor(sol.rho, float(sol.domain.eigenvalues[k]), t, sol.derivative_kind)
        if s == 0.0:
            continue
        logs.append(lv + math.log(abs(c)))
        signs.append(s * math.copysign(1.0, c))
    if not logs:
        return -math.inf, 0.0
    top = max(logs)
    scaled = math.fsum(s * math.exp(lv - top) for lv, s in zip(logs, signs))
    if scaled == 0.0:
        return -math.inf, 0.0
    return top + math.log(abs(scaled)), math.copysign(1.0, scaled)


def forward_eval(sol: ForwardSolution, x: Point, t: float) -> float:
    r"""Truncated series :math:`\sum_{k\le N}\varphi_k T_k(t) v_k(x)`.

    Mode factors are combined in log space so that a growing first mode
    (negative eigenvalue) does not overflow before the other modes are added.
    """
    lv, s = forward_eval_log(sol, x, t)
    if s == 0.0:
        return 0.0
    if lv > math.log(np.finfo(float).max):
        raise MLOverflowError(f"u(x, t) overflows; log value {lv:.17g}", lv, s)
    return s * math.exp(lv)


def truncation_bound(domain: SpectralDomain, field: InitialField, rho: float, t: float,
                     N: int) -> float:
    r"""Bound on :math:`\sum_{k>N}|\varphi_k|\,\sup|v_k|\,C/(1+\lambda_k t^\rho)`.

    Available modes beyond ``N`` are summed directly. The modes the field does
    not list are extrapolated with :math:`|\varphi_k| \propto \lambda_k^{-(p+1)/2}`
    (``p`` from the decay estimate) and Weyl growth of the eigenvalues fitted to
    the listed ones. For an incomplete field without a decay estimate the
    result is ``inf``, the conservative answer.
    """
    if not t > 0:
        raise DomainError(f"t must be positive: {t}")
    avail = min(len(field), domain.mode_count_available)
    if not 1 <= N <= avail:
        raise DomainError(f"N must lie in [1, {avail}]: {N}")
    lam = domain.eigenvalues[:avail]
    if N < avail and lam[N] <= 0:
        raise DomainError("the tail must start at a positive eigenvalue")
    C = envelope_constant(rho)
    tr = t**rho
    phi = np.abs(field.coefficients[:avail])
    sup = np.array([domain.sup_norm(k) for k in range(1, avail + 1)])
    listed = phi[N:] * sup[N:] * C / (1.0 + lam[N:] * tr)
    listed_sum = math.fsum(np.where(phi[N:] == 0.0, 0.0, listed))
    if field.complete and len(field) <= domain.mode_count_available:
        return listed_sum
    return listed_sum + _extrapolated_tail(domain, field, C, tr, avail)


def _extrapolated_tail(domain: SpectralDomain, field: InitialField, C: float, tr: float,
                       avail: int) -> float:
    p = field.decay_exponent_estimate
    lam = domain.eigenvalues[:avail]
    phi = np.abs(field.coefficients[:avail])
    use = (lam > 0) & (phi > 0)
    if p is None or use.sum() < 3:
        return math.inf
    k = np.arange(1, avail + 1)
    # lambda_k ~ a k^q and |phi_k| ~ b lambda_k^{-(p+1)/2}
    q, loga = np.polyfit(np.log(k[lam > 0]), np.log(lam[lam > 0]), 1)
    e = (p + 1.0) / 2.0
    logb = float(np.max(np.log(phi[use]) + e * np.log(lam[use])))
    # term ~ b S a^{-e-1} t^{-rho} k^{-q(e+1)} for large k
    s = q * (e + 1.0)
    if s <= 1.0:
        return math.inf
    sup = domain.sup_norm(avail) if domain.sup_norms is not None else math.inf
    K = avail
    coef = math.exp(logb) * sup * C * math.exp(-(e + 1.0) * loga) / tr
    # integral test: sum_{k>K} k^{-s} <= K^{1-s}/(s-1)
    return coef * K ** (1.0 - s) / (s - 1.0)


def alimov_first_eigenvalue(h: float, H: float, tol: float = 1e-12) -> float:
    r"""First eigenvalue :math:`-\mu^2` where :math:`\mu\tanh\mu = hH`, :math:`\mu > 0`."""
    if not (h > 0 and H > 0):
        raise DomainError(f"h and H must be positive: {h}, {H}")
    c = h * H
    lo, hi = 0.0, max(2.0, c + 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.tanh(mid) < c:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    mu = 0.5 * (lo + hi)
    return -mu * mu


def l2_norm_sq(sol: ForwardSolution, t0: float) -> float:
    r""":math:`\|u(\cdot,t_0)\|^2 = \sum_{k\le N}\varphi_k^2 E_\rho(-\lambda_k t_0^\rho)^2`."""
    if sol.derivative_kind is not DerivativeKind.Caputo:
        raise DomainError("l2_norm_sq is defined for the Caputo solution")
    if not t0 > 0:
        raise DomainError(f"t0 must be positive: {t0}")
    n = sol.truncation
    e = mode_factors(sol.rho, sol.domain.eigenvalues[:n], t0)
    return math.fsum((sol.coefficients[:n] * e) ** 2)


def heat_series(domain: SpectralDomain, field: InitialField, x: Point, t: float,
                n_modes: int | None = None) -> float:
    r"""Classical heat solution :math:`\sum\varphi_k e^{-\lambda_k t}v_k(x)`."""
    n = min(len(field), domain.mode_count_available) if n_modes is None else n_modes
    vx = domain.eigenfunction_values(x, n)
    return math.fsum(field.coefficients[:n] * np.exp(-domain.eigenvalues[:n] * t) * vx)


def problem_to_json(domain: SpectralDomain, field: InitialField) -> str:
    """``{kind, params, eigenvalues, coefficients}`` document."""
    d = domain.to_dict()
    d["coefficients"] = field.coefficients.tolist()
    return json.dumps(d)


def problem_from_dict(d: dict[str, Any]) -> tuple[SpectralDomain, InitialField]:
    domain = SpectralDomain.from_dict(d)
    coef = d.get("coefficients")
    if coef is None:
        raise DomainError("document has no coefficients")
    if len(coef) > domain.mode_count_available:
        raise DomainError("more coefficients than eigenvalues")
    c = np.asarray(coef, dtype=float)
    complete = bool(d.get("complete", True))
    field = InitialField(c, FieldSource.Given, estimate_decay_exponent(c, domain.eigenvalues),
                         None, complete)
    return domain, field


__all__ = [
    "AccuracyError",
    "AccuracyWarning",
    "DerivativeKind",
    "DomainKind",
    "FieldSource",
    "ForwardSolution",
    "InitialField",
    "PointValues",
    "SpectralDomain",
    "alimov_first_eigenvalue",
    "envelope_constant",
    "estimate_decay_exponent",
    "forward_eval",
    "forward_eval_log",
    "heat_series",
    "l2_norm_sq",
    "mode_factors",
    "problem_from_dict",
    "problem_to_json",
    "project_initial",
    "solve_forward",
    "truncation_bound",
]
