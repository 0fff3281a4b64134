"""Rician / non-central chi-square noise model: densities, moments, samplers.

The measurement model is a complex signal of amplitude ``a`` perturbed by two
independent zero-mean Gaussians of standard deviation ``sigma`` in the real
and imaginary channels; only the magnitude ``m`` is observed.  The magnitude
is Rician, and the normalized square ``g = (m/sigma)^2`` follows a
non-central chi-square law with two degrees of freedom and non-centrality
``f = (a/sigma)^2``.  The squared observation decomposes as

    g = f + 2 sqrt(f) xi + eta

with ``xi`` standard normal and ``eta`` exponential of mean 2 (variance 4),
hence the exact bias relation  E{g} = f + 2  that the squared-domain
estimator later subtracts.

Sampling is fully deterministic and reproducible: all randomness comes from
the counter-based Philox generator, with normal variates produced by a
Box-Muller transform of uniforms (fixed stream consumption: one uniform pair
per normal pair, never rejection).  Parallel simulation splits work across
independently derived substreams ``(seed, stream_index)``; the scheme is
identified by :data:`GENERATOR_ID` and recorded in run manifests.

All density/moment functions are pure and thread-safe; a ``Generator`` is
single-owner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Domain, Image
from .similarity import log_bessel_i0, log_bessel_i0e, log_bessel_i1e

__all__ = [
    "GENERATOR_ID",
    "NoiseParams",
    "NoiseDecomposition",
    "substream",
    "normal_pairs",
    "rician_pdf",
    "nccs_pdf",
    "rician_mean",
    "sample_rician",
    "sample_decomposition",
    "m_to_g",
    "g_to_m",
    "g_to_a",
]

#: Identifier of the pseudo-random scheme, recorded in output manifests so
#: experiments can be replayed bit-exactly across platforms.
GENERATOR_ID = "philox4x64-10/box-muller/v1"

_SQRT_HALF_PI = float(np.sqrt(np.pi / 2.0))
_LOG_HALF = float(np.log(0.5))


def _check_sigma(sigma) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise ValueError("sigma must be a finite positive real")
    return sigma


@dataclass(frozen=True)
class NoiseParams:
    """Noise level of the complex-channel Gaussians (sigma > 0)."""

    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))


@dataclass(frozen=True)
class NoiseDecomposition:
    """Additive-plus-multiplicative split of a squared observation.

    ``g`` reconstructs as ``f + 2 sqrt(f) xi + eta`` where ``f`` is the
    non-centrality, ``xi`` the standard-normal component and ``eta`` the
    exponential component of mean 2.
    """

    f: float | np.ndarray
    xi: float | np.ndarray
    eta: float | np.ndarray

    @property
    def g(self):
        return self.f + 2.0 * np.sqrt(self.f) * self.xi + self.eta


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent deterministic random stream ``(seed, index)``.

    Streams with different indices are statistically independent, so
    parallel simulation can hand one stream to each worker and still be
    bit-reproducible regardless of scheduling.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def normal_pairs(rng: np.random.Generator, n: int):
    """Draw ``n`` pairs of independent N(0, 1) variates by Box-Muller.

    Consumes exactly ``2 n`` uniforms from ``rng`` -- no rejection -- so the
    stream position after the call is independent of the values drawn.

    Returns
    -------
    (z0, z1) : tuple of np.ndarray
        Two length-``n`` arrays of standard normal variates.
    """
    u1 = rng.random(n)
    u2 = rng.random(n)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], no log(0)
    angle = (2.0 * np.pi) * u2
    return radius * np.cos(angle), radius * np.sin(angle)


def rician_pdf(m, a, sigma):
    """Rician density of the observed magnitude given true amplitude ``a``.

    ``p(m | a) = (m / sigma^2) exp(-(a^2 + m^2) / 2 sigma^2) I0(a m / sigma^2)``
    for m >= 0, zero otherwise.  Evaluated through the log-domain Bessel, so
    large ``a m / sigma^2`` does not overflow.  For ``a = 0`` this is the
    Rayleigh density.
    """
    sigma = _check_sigma(sigma)
    a = float(a)
    if not np.isfinite(a) or a < 0:
        raise ValueError("amplitude a must be finite and >= 0")
    m = np.asarray(m, dtype=np.float64)
    scalar = m.ndim == 0
    m = np.atleast_1d(m)
    out = np.zeros_like(m)
    pos = m > 0
    if pos.any():
        mp = m[pos]
        s2 = sigma * sigma
        logp = (
            np.log(mp)
            - np.log(s2)
            - (a * a + mp * mp) / (2.0 * s2)
            + log_bessel_i0(a * mp / s2)
        )
        out[pos] = np.exp(logp)
    return out[0] if scalar else out


def nccs_pdf(g, f):
    """Non-central chi-square density (2 dof) of ``g`` given non-centrality ``f``.

    ``p(g | f) = (1/2) exp(-(g + f)/2) I0(sqrt(f g))`` for g >= 0, zero
    otherwise.
    """
    f = float(f)
    if not np.isfinite(f) or f < 0:
        raise ValueError("non-centrality f must be finite and >= 0")
    g = np.asarray(g, dtype=np.float64)
    scalar = g.ndim == 0
    g = np.atleast_1d(g)
    out = np.zeros_like(g)
    ok = g >= 0
    if ok.any():
        gv = g[ok]
        out[ok] = np.exp(_LOG_HALF - (gv + f) * 0.5 + log_bessel_i0(np.sqrt(f * gv)))
    return out[0] if scalar else out


def rician_mean(a, sigma):
    """Exact mean of the Rician law: ``sigma sqrt(pi/2) L_{1/2}(-a^2/2 sigma^2)``.

    The half-order Laguerre value is expanded through modified Bessel
    functions; with ``u = a^2 / 2 sigma^2``:

        E{m} = sigma sqrt(pi/2) exp(-u/2) [ (1+u) I0(u/2) + u I1(u/2) ]

    computed with exponentially scaled Bessels, so it is overflow-safe for
    any SNR.  At a = 0 this is the Rayleigh mean ``sigma sqrt(pi/2)``.
    """
    sigma = _check_sigma(sigma)
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("amplitude a must be finite and >= 0")
    u = (a * a) / (2.0 * sigma * sigma)
    half_u = 0.5 * u
    term = (1.0 + u) * np.exp(log_bessel_i0e(half_u)) + u * np.exp(
        log_bessel_i1e(half_u)
    )
    return sigma * _SQRT_HALF_PI * term


def sample_rician(a, sigma, rng: np.random.Generator, size: int | None = None):
    """Draw magnitude samples ``sqrt((a + n_r)^2 + n_i^2)``.

    ``n_r, n_i`` are independent N(0, sigma^2); the arbitrary global phase is
    fixed to zero, which leaves the magnitude law unchanged.  Each sample
    consumes exactly two uniforms from ``rng``.

    Parameters
    ----------
    a : float or array_like
        True amplitude(s); an array requests one sample per entry (``size``
        must then be None).
    sigma : float
        Noise standard deviation, > 0.
    rng : np.random.Generator
        Stream to consume, e.g. from :func:`substream`.
    size : int, optional
        Number of samples for scalar ``a``; None returns a scalar.
    """
    sigma = _check_sigma(sigma)
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("amplitude a must be finite and >= 0")
    if a.ndim == 0:
        n = 1 if size is None else int(size)
    else:
        if size is not None:
            raise ValueError("size is only valid with scalar a")
        n = a.size
    z0, z1 = normal_pairs(rng, n)
    if a.ndim > 0:
        z0 = z0.reshape(a.shape)
        z1 = z1.reshape(a.shape)
    re = a + sigma * z0
    im = sigma * z1
    m = np.sqrt(re * re + im * im)
    if a.ndim == 0 and size is None:
        return m[0]
    return m


def sample_decomposition(a, sigma, rng: np.random.Generator, size: int | None = None):
    """Draw magnitudes together with the matching (f, xi, eta) split.

    Both outputs are built from the same underlying Gaussian pair, so
    ``decomposition.g`` agrees with ``(m / sigma)^2`` up to round-off.

    Returns
    -------
    (m, decomposition) : tuple
        Magnitude sample(s) and the :class:`NoiseDecomposition` carrying
        ``f = (a/sigma)^2``, ``xi = n_r / sigma``, ``eta = (n_r^2+n_i^2)/sigma^2``.
    """
    sigma = _check_sigma(sigma)
    a = float(a)
    if not np.isfinite(a) or a < 0:
        raise ValueError("amplitude a must be finite and >= 0")
    n = 1 if size is None else int(size)
    z0, z1 = normal_pairs(rng, n)
    nr = sigma * z0
    ni = sigma * z1
    re = a + nr
    m = np.sqrt(re * re + ni * ni)
    s2 = sigma * sigma
    f = (a / sigma) ** 2
    xi = nr / sigma
    eta = (nr * nr + ni * ni) / s2
    if size is None:
        return m[0], NoiseDecomposition(f=f, xi=xi[0], eta=eta[0])
    return m, NoiseDecomposition(f=np.full(n, f), xi=xi, eta=eta)


def m_to_g(image: Image, sigma) -> Image:
    """Convert a magnitude image to its squared-normalized version g = (m/sigma)^2."""
    sigma = _check_sigma(sigma)
    image.require_domain(Domain.MAGNITUDE_M, "m_to_g")
    g = (image.data / sigma) ** 2
    return Image(g, Domain.SQUARED_G)


def g_to_m(image: Image, sigma) -> Image:
    """Convert a squared-normalized image back to magnitudes m = sigma sqrt(g)."""
    sigma = _check_sigma(sigma)
    image.require_domain(Domain.SQUARED_G, "g_to_m")
    return Image(sigma * np.sqrt(image.data), Domain.MAGNITUDE_M)


def g_to_a(g, sigma):
    """Amplitude corresponding to a squared-normalized value: a = sigma sqrt(g)."""
    sigma = _check_sigma(sigma)
    g = np.asarray(g, dtype=np.float64)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("g must be finite and >= 0")
    return sigma * np.sqrt(g)
