"""Quantitative evaluation: RMSE and centred RMSE in dB, SSIM mean and map.

RMSE is ``20 log10 sqrt(mean |e_k|^2)`` with ``e_k = ref_k - est_k``; the
centred variant applies the same formula to ``e_k - mean(e)``.  Their gap
diagnoses a constant estimation bias: adding a constant to the estimate
changes RMSE but leaves cRMSE untouched.  Exact agreement (zero mean square)
is reported as a finite sentinel of -300 dB plus a machine-readable flag
instead of -inf, so the values stay JSON-safe.

SSIM follows the canonical parameterization: 11x11 Gaussian window of
standard deviation 1.5 px, stabilizers C1 = (0.01 L)^2 and C2 = (0.03 L)^2
with L the dynamic range (default: max of the reference image).  The map is
full-size, computed with mirror-reflected local statistics, clipped to
[-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .image import Image

__all__ = [
    "DB_FLOOR",
    "SsimParams",
    "MetricsReport",
    "rmse_db",
    "crmse_db",
    "ssim",
    "evaluate",
    "metrics_json",
    "format_float",
]

#: Sentinel returned instead of -inf when the mean-square residual is zero.
DB_FLOOR = -300.0


def _as_array(img) -> np.ndarray:
    if isinstance(img, Image):
        return img.data
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D image")
    return arr


def _pair(ref, est):
    a = _as_array(ref)
    b = _as_array(est)
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def _to_db(ms: float) -> float:
    if ms <= 0.0:
        return DB_FLOOR
    return float(20.0 * np.log10(np.sqrt(ms)))


def rmse_db(ref, est) -> float:
    """Root-mean-square error in dB (lower is better); -300 when exact."""
    a, b = _pair(ref, est)
    e = a - b
    return _to_db(float(np.mean(e * e)))


def crmse_db(ref, est) -> float:
    """Centred RMSE in dB: the error field is mean-subtracted first."""
    a, b = _pair(ref, est)
    e = a - b
    e = e - e.mean()
    return _to_db(float(np.mean(e * e)))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized 2-D Gaussian window (the canonical SSIM default)."""
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


@dataclass(frozen=True)
class SsimParams:
    """SSIM stabilizer constants and local window."""

    k1: float = 0.01
    k2: float = 0.03
    window: np.ndarray = field(default_factory=gaussian_window)
    dynamic_range: float | None = None  # None: max of the reference image

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        w = np.asarray(self.window, dtype=np.float64)
        object.__setattr__(self, "window", w / w.sum())


def ssim(ref, est, params: SsimParams | None = None):
    """Mean SSIM and the full-size SSIM map.

    Returns
    -------
    (mean, map) : tuple of float and Image
        Map values lie in [-1, 1]; brighter means stronger local resemblance.
    """
    if params is None:
        params = SsimParams()
    a, b = _pair(ref, est)
    dr = params.dynamic_range
    if dr is None:
        dr = float(a.max())
    if not np.isfinite(dr) or dr <= 0:
        raise ValueError("dynamic range must be a positive real")
    c1 = (params.k1 * dr) ** 2
    c2 = (params.k2 * dr) ** 2

    def local(img):
        return ndimage.correlate(img, params.window, mode="reflect")

    mu1 = local(a)
    mu2 = local(b)
    s11 = local(a * a) - mu1 * mu1
    s22 = local(b * b) - mu2 * mu2
    s12 = local(a * b) - mu1 * mu2
    smap = ((2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)) / (
        (mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2)
    )
    smap = np.clip(smap, -1.0, 1.0)
    # returned as a plain array: maps are legitimately negative, which the
    # Image container (non-negative intensities) does not admit
    return float(smap.mean()), smap


@dataclass(frozen=True)
class MetricsReport:
    """Evaluation results plus flags marking sentinel dB values."""

    rmse_db: float
    crmse_db: float
    ssim_mean: float
    ssim_map: np.ndarray | None = None
    flags: tuple[str, ...] = ()


def evaluate(ref, est, ssim_params: SsimParams | None = None, with_map: bool = False) -> MetricsReport:
    """Compute the full metrics report for an estimate against a reference."""
    r_db = rmse_db(ref, est)
    c_db = crmse_db(ref, est)
    flags = []
    if r_db == DB_FLOOR:
        flags.append("exact")
    if c_db == DB_FLOOR and r_db != DB_FLOOR:
        flags.append("exact-after-centering")
    mean, smap = ssim(ref, est, ssim_params)
    return MetricsReport(
        rmse_db=r_db,
        crmse_db=c_db,
        ssim_mean=mean,
        ssim_map=smap if with_map else None,
        flags=tuple(flags),
    )


def format_float(x: float) -> str:
    """Fixed 9-significant-digit rendering used by all JSON outputs."""
    return format(float(x), ".9g")


def metrics_json(report: MetricsReport) -> str:
    """Stable-key-order JSON record of a metrics report."""
    flags = ", ".join(f'"{f}"' for f in report.flags)
    return (
        "{"
        f'"rmse_db": {format_float(report.rmse_db)}, '
        f'"crmse_db": {format_float(report.crmse_db)}, '
        f'"ssim": {format_float(report.ssim_mean)}, '
        f'"flags": [{flags}]'
        "}"
    )
