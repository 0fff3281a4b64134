"""Image container with an explicit intensity-domain tag.

Every 2-D array of pixel data in this package travels together with a tag
saying which physical quantity the values represent:

* ``AMPLITUDE_A`` -- noise-free signal amplitude A,
* ``MAGNITUDE_M`` -- measured (Rician-distributed) magnitude M,
* ``SQUARED_G``   -- normalized squared magnitude G = (M / sigma)^2.

Filters, estimators and converters check the tag, so a magnitude image can
never be fed by accident into a pipeline stage that expects squared data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = ["Domain", "Image"]


class Domain(Enum):
    """Physical meaning of the pixel values."""

    AMPLITUDE_A = "amplitude"
    MAGNITUDE_M = "magnitude"
    SQUARED_G = "squared"


@dataclass(frozen=True)
class Image:
    """A 2-D grid of non-negative real intensities plus its domain tag.

    Parameters
    ----------
    data : np.ndarray
        2-D array, row-major, converted to float64 on construction.
        All values must be finite and >= 0.
    domain : Domain
        Which quantity the values represent.
    """

    data: np.ndarray
    domain: Domain = field(default=Domain.AMPLITUDE_A)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"image data must be a nonempty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite pixel values")
        if np.any(arr < 0):
            raise ValueError("image contains negative pixel values")
        if not isinstance(self.domain, Domain):
            raise ValueError(f"invalid domain tag: {self.domain!r}")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def pixels(self) -> np.ndarray:
        """Row-major flat view of the pixel values."""
        return self.data.ravel()

    def with_data(self, data: np.ndarray, domain: Domain | None = None) -> "Image":
        """New image with replaced pixel data (and optionally a new tag)."""
        return Image(data, self.domain if domain is None else domain)

    def require_domain(self, domain: Domain, what: str = "operation") -> None:
        """Raise if the image is not tagged with the expected domain."""
        if self.domain is not domain:
            raise ValueError(
                f"{what} expects a {domain.value!s}-domain image, got {self.domain.value!s}"
            )
