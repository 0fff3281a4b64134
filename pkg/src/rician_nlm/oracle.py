"""Independent numerical ground truth for the closed-form machinery.

Everything here deliberately avoids the package's own Bessel code: quadrature
integrands use scipy's exponentially scaled ``i0e`` and the reference Bessel
values come from mpmath at >= 30 significant digits.  That keeps these
routines valid as oracles for the closed forms in :mod:`rician_nlm.similarity`.

Contents:

* adaptive quadrature of the subtractive-measure integral
  ``int_0^inf p(g_s|f) p(g_t|f) df``  (checks snl1),
* adaptive quadrature of the weighted rational-measure integral
  ``int_0^inf a p(m_s|a) p(m_t|a) da``  (checks snl2),
* their normalized (correlation) versions (check snl3 / snl4),
* a residual check of the Weber-Schafheitlin-type identity
  ``int_0^inf y exp(-y^2) I0(a y) I0(b y) dy = (1/2) exp((a^2+b^2)/4) I0(a b / 2)``
  that both appendix derivations rest on,
* the histogram experiment comparing how often the two bias-removal
  estimators go non-positive on empty background, with its analytic
  regularized-gamma / normal-approximation cross-checks,
* an arbitrary-precision I0 reference.

All integrals are recast with exponentially scaled Bessels so the integrand
is bounded by a unit Gaussian envelope; the integration interval is truncated
where that envelope falls below ``abs_tol / 100``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gammainc, i0e

from .noise import normal_pairs, substream

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "quad_ssm_nccs",
    "quad_rsm_rice",
    "quad_csm",
    "lawrence_identity_check",
    "bessel_reference",
    "HistExperimentResult",
    "hist_experiment",
    "analytic_p1",
    "analytic_p2",
    "hist_csv",
]


class QuadratureError(RuntimeError):
    """The adaptive integrator could not meet the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and subdivision budget for the adaptive integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 10**6

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


_DEFAULT_CFG = QuadratureConfig()


def _quad(fn, lo, hi, cfg: QuadratureConfig, peak: float | None = None) -> float:
    points = None
    if peak is not None and lo < peak < hi:
        points = [peak]
    limit = int(min(cfg.max_subdivisions, 50_000))
    out = integrate.quad(
        fn,
        lo,
        hi,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=limit,
        points=points,
        full_output=1,
    )
    if len(out) > 3:
        raise QuadratureError(f"quadrature did not converge: {out[3]}")
    value, abserr = out[0], out[1]
    if abserr > max(cfg.abs_tol, cfg.rel_tol * abs(value)) * 10.0:
        raise QuadratureError(
            f"quadrature error estimate {abserr:g} exceeds requested tolerance"
        )
    return value


def _tail(cfg: QuadratureConfig) -> float:
    # unit-Gaussian envelope drops below abs_tol/100 at this many half-widths
    return math.sqrt(math.log(100.0 / cfg.abs_tol)) + 1.0


def _gauss_bessel_integral(alpha: float, beta: float, cfg: QuadratureConfig) -> float:
    """``int_0^inf y i0e(alpha y) i0e(beta y) exp(-(y - c)^2) dy``, c = (alpha+beta)/2.

    This is the exponentially rescaled core of both appendix integrals: the
    raw integrand ``y exp(-y^2) I0(alpha y) I0(beta y)`` equals this one times
    ``exp(c^2)`` with the scaled integrand bounded by ``y exp(-(y-c)^2)``.
    """
    c = 0.5 * (alpha + beta)

    def fn(y):
        return y * i0e(alpha * y) * i0e(beta * y) * math.exp(-((y - c) ** 2))

    return _quad(fn, 0.0, c + _tail(cfg), cfg, peak=c)


def quad_ssm_nccs(g_s: float, g_t: float, cfg: QuadratureConfig | None = None) -> float:
    """Subtractive measure for squared-normalized data, by quadrature.

    Integrates ``p(g_s | f) p(g_t | f)`` over all non-centralities f; the
    closed form under test is snl1.
    """
    cfg = cfg or _DEFAULT_CFG
    if g_s < 0 or g_t < 0:
        raise ValueError("g_s and g_t must be >= 0")
    # substituting f = y^2:  (1/2) e^{-(gs+gt)/2} int 2 y e^{-y^2} I0(sqrt(gs) y) I0(sqrt(gt) y) dy
    a = math.sqrt(g_s)
    b = math.sqrt(g_t)
    core = _gauss_bessel_integral(a, b, cfg)
    return 0.5 * math.exp(-0.25 * (a - b) ** 2) * core


def quad_rsm_rice(
    m_s: float, m_t: float, sigma: float, cfg: QuadratureConfig | None = None
) -> float:
    """Rational measure for magnitude data, by quadrature.

    Integrates ``a p(m_s | a) p(m_t | a)`` over all amplitudes a; the closed
    form under test is snl2.
    """
    cfg = cfg or _DEFAULT_CFG
    if m_s < 0 or m_t < 0:
        raise ValueError("m_s and m_t must be >= 0")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    # substituting a = sigma y reduces to the same Gaussian-Bessel core
    alpha = m_s / sigma
    beta = m_t / sigma
    core = _gauss_bessel_integral(alpha, beta, cfg)
    return alpha * beta * math.exp(-0.25 * (alpha - beta) ** 2) * core


def quad_csm(
    v_s: float,
    v_t: float,
    kind: str = "nccs",
    sigma: float | None = None,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Correlation-normalized measure by quadrature.

    ``kind='nccs'`` treats the inputs as squared-normalized values and checks
    snl3; ``kind='rice'`` treats them as magnitudes (requires ``sigma``) and
    checks snl4.  Numerator and both norms are integrated independently.
    """
    cfg = cfg or _DEFAULT_CFG
    kind = kind.lower()
    if kind == "nccs":
        num = quad_ssm_nccs(v_s, v_t, cfg)
        n_s = quad_ssm_nccs(v_s, v_s, cfg)
        n_t = quad_ssm_nccs(v_t, v_t, cfg)
    elif kind == "rice":
        if sigma is None:
            raise ValueError("kind='rice' requires sigma")
        num = quad_rsm_rice(v_s, v_t, sigma, cfg)
        n_s = quad_rsm_rice(v_s, v_s, sigma, cfg)
        n_t = quad_rsm_rice(v_t, v_t, sigma, cfg)
    else:
        raise ValueError("kind must be 'nccs' or 'rice'")
    denom = math.sqrt(n_s * n_t)
    if denom == 0.0:
        raise QuadratureError("zero norm in correlation measure (degenerate input)")
    return num / denom


def lawrence_identity_check(
    a: float, b: float, cfg: QuadratureConfig | None = None
) -> float:
    """Relative residual of the product-of-Bessels Gaussian integral identity.

    Both sides are evaluated in exponentially rescaled form (so arguments up
    to ~20 stay in range) and the result is
    ``|quadrature - closed_form| / closed_form``.
    """
    cfg = cfg or _DEFAULT_CFG
    if a < 0 or b < 0:
        raise ValueError("a and b must be >= 0")
    if max(a, b) > 20.0:
        raise ValueError("a and b must lie in the quadrature-stable range [0, 20]")
    lhs = _gauss_bessel_integral(a, b, cfg)  # scaled by exp(-((a+b)/2)^2)
    rhs = 0.5 * i0e(0.5 * a * b)  # same scaling applied to (1/2) e^{(a^2+b^2)/4} I0(ab/2)
    return abs(lhs - rhs) / rhs


def bessel_reference(x: float, precision_digits: int = 30):
    """I0(x) from mpmath at >= 30 significant digits (range [0, 1e8]).

    Returns an ``mpmath.mpf``; take ``mpmath.log`` of it inside an
    ``mpmath.workdps`` block for reference log values.
    """
    if not 0.0 <= x <= 1e8:
        raise ValueError("x must lie in [0, 1e8]")
    with mpmath.workdps(max(int(precision_digits), 30)):
        return mpmath.besseli(0, mpmath.mpf(x))


# ---------------------------------------------------------------------------
# Histogram experiment: distribution of the two pre-clamp squared estimates
# when averaging n_avg independent observations of a constant amplitude.
# ---------------------------------------------------------------------------

_HIST_BLOCK = 1 << 14  # trials per substream block; part of the fixed algorithm


@dataclass(frozen=True)
class HistExperimentResult:
    """Signed pre-clamp estimator statistics over many trials.

    ``p1_nonpos``/``p2_nonpos`` are the fractions of trials in which the
    squared-domain / magnitude-domain estimate (before the max with zero and
    the square root) came out non-positive.  Histograms share ``bin_edges``.
    """

    p1_nonpos: float
    p2_nonpos: float
    histogram1: np.ndarray
    histogram2: np.ndarray
    bin_edges: np.ndarray
    trials: int
    n_avg: int
    a: float
    sigma: float
    seed: int


def hist_experiment(
    trials: int,
    n_avg: int,
    a: float,
    sigma: float,
    seed: int = 0,
    bins: int = 101,
) -> HistExperimentResult:
    """Monte-Carlo histograms of the signed pre-clamp estimates.

    Per trial, ``n_avg`` magnitude samples of amplitude ``a`` are drawn and
    both estimators are formed from the same draws, uniformly weighted:

        h1 = mean(g) - 2              (squared domain, g = (m/sigma)^2)
        h2 = mean(m)^2 / sigma^2 - 2  (magnitude domain, normalized)

    Trials are processed in fixed-size blocks, block ``b`` drawing from the
    substream ``(seed, b)``; results are bit-reproducible for a given seed.
    """
    trials = int(trials)
    n_avg = int(n_avg)
    if trials < 1 or n_avg < 1:
        raise ValueError("trials and n_avg must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if a < 0:
        raise ValueError("a must be >= 0")
    h1_parts = []
    h2_parts = []
    n_blocks = (trials + _HIST_BLOCK - 1) // _HIST_BLOCK
    s2 = sigma * sigma
    for b in range(n_blocks):
        count = min(_HIST_BLOCK, trials - b * _HIST_BLOCK)
        rng = substream(seed, b)
        z0, z1 = normal_pairs(rng, n_avg * count)
        re = a + sigma * z0.reshape(n_avg, count)
        im = sigma * z1.reshape(n_avg, count)
        msq = re * re + im * im
        g = msq / s2
        m = np.sqrt(msq)
        h1_parts.append(g.mean(axis=0) - 2.0)
        mbar = m.mean(axis=0)
        h2_parts.append((mbar * mbar) / s2 - 2.0)
    h1 = np.concatenate(h1_parts)
    h2 = np.concatenate(h2_parts)
    p1 = float(np.count_nonzero(h1 <= 0.0)) / trials
    p2 = float(np.count_nonzero(h2 <= 0.0)) / trials
    lo = min(h1.min(), h2.min())
    hi = max(h1.max(), h2.max())
    edges = np.linspace(lo, hi, int(bins) + 1)
    hist1, _ = np.histogram(h1, bins=edges)
    hist2, _ = np.histogram(h2, bins=edges)
    return HistExperimentResult(
        p1_nonpos=p1,
        p2_nonpos=p2,
        histogram1=hist1,
        histogram2=hist2,
        bin_edges=edges,
        trials=trials,
        n_avg=n_avg,
        a=float(a),
        sigma=float(sigma),
        seed=int(seed),
    )


def analytic_p1(n_avg: int) -> float:
    """Exact P(h1 <= 0) for zero amplitude, by the regularized lower gamma.

    With a = 0 the per-sample g are central chi-square with 2 dof, so
    ``mean(g) <= 2`` is a chi-square(2 n) event at its own mean:
    ``P = gammainc(n, n)``.
    """
    n = int(n_avg)
    if n < 1:
        raise ValueError("n_avg must be >= 1")
    return float(gammainc(n, n))


def analytic_p2(n_avg: int) -> float:
    """Normal-approximation P(h2 <= 0) for zero amplitude.

    ``mean(m) <= sqrt(2) sigma`` under Rayleigh noise: the sample mean is
    approximately normal with mean ``sigma sqrt(pi/2)`` and variance
    ``sigma^2 (2 - pi/2) / n``.
    """
    n = int(n_avg)
    if n < 1:
        raise ValueError("n_avg must be >= 1")
    z = (math.sqrt(2.0) - math.sqrt(math.pi / 2.0)) / math.sqrt((2.0 - math.pi / 2.0) / n)
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def hist_csv(result: HistExperimentResult) -> str:
    """CSV rendering of the two histograms over their common bins."""
    lines = ["bin_left,bin_right,count1,count2"]
    edges = result.bin_edges
    for i in range(len(edges) - 1):
        lines.append(
            f"{format(float(edges[i]), '.9g')},{format(float(edges[i + 1]), '.9g')},"
            f"{int(result.histogram1[i])},{int(result.histogram2[i])}"
        )
    return "\n".join(lines) + "\n"
