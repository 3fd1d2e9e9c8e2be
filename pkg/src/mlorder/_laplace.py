r"""Real-line integral representations of Mittag-Leffler kernels.

For :math:`0 < \alpha < 1`, :math:`0 < \beta < 1 + \alpha` and :math:`\lambda > 0`,
inverting the Laplace transform :math:`s^{\alpha-\beta} / (s^\alpha + \lambda)`
along the branch cut and substituting :math:`r = u^{1/\alpha}` gives

.. math::

    t^{\beta - 1} E_{\alpha,\beta}(-\lambda t^\alpha) =
        \frac{1}{\pi\alpha} \int_0^\infty
        u^{(1-\beta)/\alpha}
        \frac{u \sin\pi\beta + \lambda \sin\pi(\beta - \alpha)}
             {u^2 + 2\lambda u \cos\pi\alpha + \lambda^2}
        e^{-t u^{1/\alpha}} \,\mathrm{d}u.

There is no cancellation in the integrand, so this is used in the range where
the power series loses digits and the asymptotic series is not yet accurate.
The order derivative is obtained by differentiating under the integral sign.
"""

from __future__ import annotations

import math
import warnings

from scipy.integrate import IntegrationWarning, quad

# e^{-t u^{1/alpha}} is below 2e-22 past this point
_EXP_CUTOFF = 50.0
_QUAD_RTOL = 1e-13


def _edges(alpha: float, lam: float, t: float) -> list[float]:
    umax = (_EXP_CUTOFF / t) ** alpha
    edges = [0.0]
    # near alpha = 1 the denominator has a narrow peak at u = lam
    if lam < umax:
        width = min(0.5, 10.0 * math.pi * (1.0 - alpha))
        for p in (lam * (1.0 - width), lam, lam * (1.0 + width)):
            if edges[-1] < p < umax:
                edges.append(p)
    edges.append(umax)
    return edges


def _integrate(f, edges: list[float], singular_power: float) -> tuple[float, float]:
    total = []
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            if i == 0 and singular_power != 0.0:
                v, e = quad(
                    f, a, b, weight="alg", wvar=(singular_power, 0.0),
                    epsabs=0.0, epsrel=_QUAD_RTOL, limit=200,
                )
            else:
                if singular_power != 0.0:
                    g = (lambda u, f=f: u**singular_power * f(u))
                else:
                    g = f
                v, e = quad(g, a, b, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
            total.append(v)
            err += e
    return math.fsum(total), err


def ml_laplace(alpha: float, beta: float, lam: float, t: float = 1.0) -> tuple[float, float]:
    r"""Return ``(value, abserr)`` for :math:`t^{\beta-1}E_{\alpha,\beta}(-\lambda t^\alpha)`."""
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0 + alpha and lam > 0.0 and t > 0.0):
        raise ValueError(f"unsupported parameters: {alpha=}, {beta=}, {lam=}, {t=}")

    sb = math.sin(math.pi * beta)
    sba = math.sin(math.pi * (beta - alpha))
    c = math.cos(math.pi * alpha)
    ia = 1.0 / alpha

    def f(u: float) -> float:
        return (u * sb + lam * sba) / (u * u + 2.0 * lam * u * c + lam * lam) \
            * math.exp(-t * u**ia)

    v, e = _integrate(f, _edges(alpha, lam, t), (1.0 - beta) / alpha)
    scale = 1.0 / (math.pi * alpha)
    return v * scale, e * scale


def dml_laplace(alpha: float, lam: float, t: float, kind: str) -> tuple[float, float]:
    r"""Return ``(value, abserr)`` for the derivative in :math:`\alpha` of
    :math:`E_\alpha(-\lambda t^\alpha)` (``kind="caputo"``) or of
    :math:`t^{\alpha-1}E_{\alpha,\alpha}(-\lambda t^\alpha)` (``kind="rl"``).
    """
    if not (0.0 < alpha < 1.0 and lam > 0.0 and t > 0.0):
        raise ValueError(f"unsupported parameters: {alpha=}, {lam=}, {t=}")
    if kind not in ("caputo", "rl"):
        raise ValueError(f"unknown kind: {kind!r}")

    s = math.sin(math.pi * alpha)
    c = math.cos(math.pi * alpha)
    ia = 1.0 / alpha
    ia2 = ia * ia
    rl = kind == "rl"

    def f(u: float) -> float:
        d = u * u + 2.0 * lam * u * c + lam * lam
        if u == 0.0:
            return 0.0 if rl else lam * (math.pi * c - s * ia) / d
        ua = u**ia
        lu = math.log(u)
        ex = math.exp(-t * ua)
        dlog = t * ua * lu * ia2 + 2.0 * lam * u * math.pi * s / d
        if rl:
            dlog -= lu * ia2
            return ua * ex / d * (math.pi * c - s * ia + s * dlog)
        return lam * ex / d * (math.pi * c - s * ia + s * dlog)

    v, e = _integrate(f, _edges(alpha, lam, t), 0.0)
    scale = 1.0 / (math.pi * alpha)
    return v * scale, e * scale
