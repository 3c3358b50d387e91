"""Forward image-formation model: blur, gain/offset, dose-limited noise.

A clean image x in [0, 1] is degraded as

    y = N( a * (x (*) h) + b )

where h is the Airy kernel from :mod:`sembench.psf`, (*) is convolution
with mirror-reflected boundaries, a is a detector gain, b a brightness
offset, and N applies shot plus readout noise.  The affine stage and the
noise operate on the 0-255 code scale of the original detector: the [0, 1]
image is multiplied by 255 first, and the noisy result is divided by 255
and clamped back to [0, 1].

Noise model, applied to a code-scale intensity z >= 0:

    N(z) = Poisson(z * dose) / dose + Normal(0, sigma^2)

``dose`` converts intensity to an expected electron count per pixel, so
small doses give strong shot noise; ``sigma`` is additive Gaussian readout
noise in code units.  The Poisson field is drawn first, then the Gaussian
field, from the one generator of the supplied :class:`Seed`, which pins
the output bit-for-bit for a given (image, params, seed) triple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .psf import PsfParams, build_kernel
from .seeding import Seed

__all__ = [
    "Seed",
    "ParamRanges",
    "DegradeParams",
    "DEFAULT_RANGES",
    "convolve_reflect",
    "apply_forward_model",
    "sample_params",
    "midpoint_params",
]

_CODE_PEAK = 255.0


@dataclass(frozen=True)
class DegradeParams:
    """One concrete degradation: spot shape plus gain, offset, noise levels."""

    psf: PsfParams
    a: float = 1.0
    b: float = 0.0
    sigma: float = 0.0
    dose: float = 25.5

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("gain a must be positive")
        if self.b < 0:
            raise ValueError("offset b must be non-negative")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.dose <= 0:
            raise ValueError("dose must be positive")

    def to_dict(self) -> dict:
        d = self.psf.to_dict()
        d.update(a=self.a, b=self.b, sigma=self.sigma, dose=self.dose)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DegradeParams":
        return cls(
            psf=PsfParams.from_dict(d),
            a=float(d["a"]),
            b=float(d["b"]),
            sigma=float(d["sigma"]),
            dose=float(d["dose"]),
        )


def _check_range(name, lo, hi):
    if not np.isfinite(lo) or not np.isfinite(hi) or lo > hi:
        raise ValueError(f"bad range for {name}: ({lo}, {hi})")


@dataclass(frozen=True)
class ParamRanges:
    """Uniform sampling intervals for each degradation parameter.

    Defaults span the regimes seen on real tools: spot radii 1-30 px,
    near-quadratic tails, any in-plane rotation, mild gain and offset
    drift, and doses from starved (1) to comfortable (50).
    """

    r_x: tuple = (1.0, 30.0)
    r_y: tuple = (1.0, 30.0)
    beta: tuple = (1.9, 2.0)
    theta: tuple = (0.0, 3.14)
    a: tuple = (0.99, 1.1)
    b: tuple = (1.0, 25.0)
    sigma: tuple = (1.0, 10.0)
    dose: tuple = (1.0, 50.0)

    def __post_init__(self):
        for name in self.field_names():
            lo, hi = getattr(self, name)
            _check_range(name, lo, hi)

    @staticmethod
    def field_names():
        # sampling order is part of the determinism contract
        return ("r_x", "r_y", "beta", "theta", "a", "b", "sigma", "dose")

    def to_dict(self) -> dict:
        return {n: list(getattr(self, n)) for n in self.field_names()}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamRanges":
        kw = {}
        for n in cls.field_names():
            if n in d:
                lo, hi = d[n]
                kw[n] = (float(lo), float(hi))
        return cls(**kw)


DEFAULT_RANGES = ParamRanges()


def convolve_reflect(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve with mirror-reflected boundaries, output size == input size.

    The image is padded by half the kernel width on every side with its
    mirror reflection (edge row not repeated: pad of [a b c ...] starts
    with b), then convolved in the strict convolution sense (kernel
    flipped relative to correlation) keeping only the valid region.  For
    symmetric kernels the distinction is invisible; deconvolution code
    relies on it.
    """
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if img.ndim != 2 or kernel.ndim != 2:
        raise ValueError("image and kernel must be 2-D")
    k = kernel.shape[0]
    if kernel.shape[1] != k or k % 2 == 0:
        raise ValueError(f"kernel must be odd and square, got {kernel.shape}")
    if k >= 2 * min(img.shape):
        raise ValueError(
            f"kernel width {k} too large for image {img.shape}; "
            "need k < 2 * min(H, W)"
        )
    pad = k // 2
    padded = np.pad(img, pad, mode="reflect") if pad else img
    return signal.convolve(padded, kernel, mode="valid")


def apply_forward_model(
    img: np.ndarray,
    params: DegradeParams,
    seed: Seed,
    noiseless: bool = False,
) -> np.ndarray:
    """Degrade a clean [0, 1] image; returns a [0, 1] image of equal shape."""
    img = np.asarray(img, dtype=np.float64)
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("input image must lie in [0, 1]")
    kernel = build_kernel(params.psf)
    blurred = convolve_reflect(img, kernel)
    z = params.a * (_CODE_PEAK * blurred) + params.b
    np.clip(z, 0.0, None, out=z)  # guard tiny negative fp residue for Poisson
    if noiseless:
        y = z
    else:
        rng = seed.generator()
        counts = rng.poisson(z * params.dose).astype(np.float64)
        y = counts / params.dose + rng.normal(0.0, params.sigma, size=z.shape)
    return np.clip(y / _CODE_PEAK, 0.0, 1.0)


def sample_params(ranges: ParamRanges, seed: Seed) -> DegradeParams:
    """Draw one parameter set, each field uniform over its range.

    Fields are drawn in the fixed order r_x, r_y, beta, theta, a, b,
    sigma, dose so a given seed always yields the same set.  A degenerate
    range (lo == hi) pins that field exactly.
    """
    rng = seed.generator()
    vals = {n: float(rng.uniform(*getattr(ranges, n))) for n in ranges.field_names()}
    return DegradeParams(
        psf=PsfParams(vals["r_x"], vals["r_y"], vals["beta"], vals["theta"]),
        a=vals["a"],
        b=vals["b"],
        sigma=vals["sigma"],
        dose=vals["dose"],
    )


def midpoint_params(ranges: ParamRanges = DEFAULT_RANGES) -> DegradeParams:
    """The center of each range; the canonical fixed operating point."""
    mid = {n: 0.5 * (getattr(ranges, n)[0] + getattr(ranges, n)[1]) for n in ranges.field_names()}
    return DegradeParams(
        psf=PsfParams(mid["r_x"], mid["r_y"], mid["beta"], mid["theta"]),
        a=mid["a"],
        b=mid["b"],
        sigma=mid["sigma"],
        dose=mid["dose"],
    )
