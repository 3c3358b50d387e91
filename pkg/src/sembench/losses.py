"""Training objectives: masked, pixel, edge, and frequency-domain losses.

Pixel losses return ``(value, gradient)`` pairs where the gradient is
d(value)/d(pred) with the same shape as the prediction, so optimizers and
finite-difference checks can consume them directly.  Frequency losses
return plain floats.

Conventions pinned here and relied on by the tests:

* the 2-D DFT is the unnormalized forward transform (numpy default), and
  ``fft_loss`` divides the summed modulus by H*W;
* masks select *patches* on a grid (as in masked-autoencoder pretraining);
  a mask weights pixels with {0, 1} and masked losses normalize by the
  number of selected pixels;
* gradients of absolute values use sign(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import Seed

__all__ = [
    "MaskSpec",
    "LossWeights",
    "sample_mask",
    "masked_l1",
    "kd_loss",
    "charbonnier",
    "edge_loss",
    "tv_loss",
    "total_restoration_loss",
    "fft_loss",
    "radial_psd",
    "psd_loss",
    "stage2_objective",
    "stage3_objective",
]


@dataclass(frozen=True)
class MaskSpec:
    """A patch-grid mask: which patches of an image are hidden.

    The image is tiled by non-overlapping square patches of side
    ``patch_size`` (which must divide both dimensions); patches are
    indexed row-major.  ``masked`` holds the hidden patch indices.  At
    least one patch must be masked (the losses divide by the masked-pixel
    count); a mask covering every patch is legal and turns the masked
    losses into their global versions.
    """

    height: int
    width: int
    patch_size: int
    masked: tuple

    def __post_init__(self):
        h, w, s = self.height, self.width, self.patch_size
        if s <= 0 or h <= 0 or w <= 0:
            raise ValueError("dimensions and patch size must be positive")
        if h % s or w % s:
            raise ValueError(f"patch size {s} must divide image shape ({h}, {w})")
        n = self.num_patches
        idx = tuple(int(i) for i in self.masked)
        if len(idx) != len(set(idx)):
            raise ValueError("duplicate patch indices in mask")
        if any(i < 0 or i >= n for i in idx):
            raise ValueError("patch index out of range")
        if not idx:
            raise ValueError("mask must hide at least one patch")
        object.__setattr__(self, "masked", tuple(sorted(idx)))

    @property
    def grid_shape(self) -> tuple:
        return (self.height // self.patch_size, self.width // self.patch_size)

    @property
    def num_patches(self) -> int:
        gh, gw = self.grid_shape
        return gh * gw

    def pixel_mask(self) -> np.ndarray:
        """{0, 1} float image, 1 on masked patches."""
        gh, gw = self.grid_shape
        flat = np.zeros(gh * gw, dtype=np.float64)
        flat[list(self.masked)] = 1.0
        return np.kron(
            flat.reshape(gh, gw), np.ones((self.patch_size, self.patch_size))
        )

    @classmethod
    def full(cls, height: int, width: int, patch_size: int = 16):
        """Mask covering every patch: masked losses become global ones."""
        n = (height // patch_size) * (width // patch_size)
        return cls(height, width, patch_size, tuple(range(n)))


def sample_mask(
    height: int, width: int, patch_size: int, ratio: float, seed: Seed
) -> MaskSpec:
    """Hide a uniformly random subset of patches.

    The count is ``round(ratio * num_patches)`` with exact halves rounding
    up, e.g. a 224x224 image at patch 16 and ratio 0.75 hides 147 of 196.
    Ratios that would hide zero patches or all of them are rejected.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"mask ratio must be in (0, 1), got {ratio}")
    if height % patch_size or width % patch_size:
        raise ValueError("patch size must divide both image dimensions")
    n = (height // patch_size) * (width // patch_size)
    m = int(np.floor(ratio * n + 0.5))
    if not 0 < m < n:
        raise ValueError(
            f"ratio {ratio} selects {m} of {n} patches; need at least one "
            "masked and one visible"
        )
    rng = seed.generator()
    idx = rng.choice(n, size=m, replace=False)
    return MaskSpec(height, width, patch_size, tuple(int(i) for i in np.sort(idx)))


def _check_pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return pred, target


def masked_l1(pred: np.ndarray, target: np.ndarray, mask: MaskSpec):
    """Mean absolute error over masked pixels only.

    value = sum(M |pred - target|) / sum(M); the gradient is
    sign(pred - target) * M / sum(M), zero off the mask and at exact ties.
    """
    pred, target = _check_pair(pred, target)
    if pred.shape != (mask.height, mask.width):
        raise ValueError(f"mask is {mask.height}x{mask.width}, image {pred.shape}")
    m = mask.pixel_mask()
    norm = m.sum()
    diff = pred - target
    value = float((m * np.abs(diff)).sum() / norm)
    grad = np.sign(diff) * m / norm
    return value, grad


def kd_loss(student: np.ndarray, teacher: np.ndarray, mask: MaskSpec):
    """Distillation against a teacher's prediction: masked L1, same math."""
    return masked_l1(student, teacher, mask)


def charbonnier(pred: np.ndarray, target: np.ndarray, epsilon: float = 1e-3):
    """Smooth-L1 data term ``sum sqrt(d^2 + eps^2)``, summed over pixels.

    Behaves like L2 for |d| << eps and like L1 beyond, with an everywhere
    smooth gradient d / sqrt(d^2 + eps^2).  The floor contributes eps per
    pixel even at d = 0, which only offsets the objective by a constant.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pred, target = _check_pair(pred, target)
    d = pred - target
    s = np.sqrt(d * d + epsilon * epsilon)
    return float(s.sum()), d / s


def _abs_diff_terms(pred, target):
    # forward differences along both axes, shared by edge_loss / tv_loss
    dh_p = pred[:, 1:] - pred[:, :-1]
    dv_p = pred[1:, :] - pred[:-1, :]
    dh_t = target[:, 1:] - target[:, :-1]
    dv_t = target[1:, :] - target[:-1, :]
    return dh_p - dh_t, dv_p - dv_t


def _fold_diff_grad(sh, sv, shape):
    # adjoint of the forward-difference operators applied to sign fields
    g = np.zeros(shape, dtype=np.float64)
    g[:, 1:] += sh
    g[:, :-1] -= sh
    g[1:, :] += sv
    g[:-1, :] -= sv
    return g


def edge_loss(pred: np.ndarray, target: np.ndarray):
    """L1 distance between the forward-difference gradients of two images.

    value = sum |D_h pred - D_h target| + sum |D_v pred - D_v target|.
    Invariant to adding a constant to either image.  Needs at least a
    2x2 image so both difference fields are non-empty.
    """
    pred, target = _check_pair(pred, target)
    if pred.shape[0] < 2 or pred.shape[1] < 2:
        raise ValueError("edge loss needs at least a 2x2 image")
    eh, ev = _abs_diff_terms(pred, target)
    value = float(np.abs(eh).sum() + np.abs(ev).sum())
    grad = _fold_diff_grad(np.sign(eh), np.sign(ev), pred.shape)
    return value, grad


def tv_loss(pred: np.ndarray):
    """Anisotropic total variation: sum of |forward differences|, both axes."""
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 2 or pred.shape[0] < 2 or pred.shape[1] < 2:
        raise ValueError("tv loss needs at least a 2x2 image")
    dh = pred[:, 1:] - pred[:, :-1]
    dv = pred[1:, :] - pred[:-1, :]
    value = float(np.abs(dh).sum() + np.abs(dv).sum())
    grad = _fold_diff_grad(np.sign(dh), np.sign(dv), pred.shape)
    return value, grad


@dataclass(frozen=True)
class LossWeights:
    """Weights for the composite objectives.

    lambda_e / lambda_tv / epsilon parameterize the restoration objective
    charbonnier + lambda_e * edge + lambda_tv * tv.  lambda_kd and mu_lb
    weight distillation and router load-balance in the stage-2 objective.
    nu_freq scales the whole frequency block in stage 3 and eta_psd the
    radial-PSD part inside it.
    """

    lambda_e: float = 3.0
    lambda_tv: float = 10.0
    epsilon: float = 1e-3
    lambda_kd: float = 1.0
    mu_lb: float = 0.01
    nu_freq: float = 0.1
    eta_psd: float = 1.0

    def __post_init__(self):
        for name in ("lambda_e", "lambda_tv", "lambda_kd", "mu_lb", "nu_freq", "eta_psd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def to_dict(self) -> dict:
        return {
            "lambda_e": self.lambda_e,
            "lambda_tv": self.lambda_tv,
            "epsilon": self.epsilon,
            "lambda_kd": self.lambda_kd,
            "mu_lb": self.mu_lb,
            "nu_freq": self.nu_freq,
            "eta_psd": self.eta_psd,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        return cls(**{k: float(v) for k, v in d.items()})


def total_restoration_loss(
    pred: np.ndarray, target: np.ndarray, weights: LossWeights = LossWeights()
):
    """charbonnier + lambda_e * edge + lambda_tv * tv, with its gradient."""
    cv, cg = charbonnier(pred, target, weights.epsilon)
    ev, eg = edge_loss(pred, target)
    tv, tg = tv_loss(pred)
    value = cv + weights.lambda_e * ev + weights.lambda_tv * tv
    grad = cg + weights.lambda_e * eg + weights.lambda_tv * tg
    return value, grad


def fft_loss(pred: np.ndarray, target: np.ndarray, mask: MaskSpec) -> float:
    """Mean spectral magnitude of the masked residual.

    value = sum |DFT(M * (pred - target))| / (H * W) with the unnormalized
    forward DFT.  Zero iff the masked residual vanishes.
    """
    pred, target = _check_pair(pred, target)
    if pred.shape != (mask.height, mask.width):
        raise ValueError(f"mask is {mask.height}x{mask.width}, image {pred.shape}")
    e = mask.pixel_mask() * (pred - target)
    return float(np.abs(np.fft.fft2(e)).sum() / e.size)


def radial_psd(img: np.ndarray, num_rings: int):
    """Ring-averaged power spectrum.

    The power |DFT(img)|^2 is binned by radial frequency
    rho = hypot(f_u, f_v), where f_u, f_v are the signed normalized
    frequencies (cycles per pixel, as from fftfreq).  Rings are
    ``num_rings`` equal-width annuli covering [0, rho_max]; the last ring
    is closed so rho_max itself lands in ring num_rings - 1.

    Returns (power, count): mean power per ring and the number of
    frequency samples in each.  Rings that received no samples report
    power 0 with count 0 -- check count before trusting a ring.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    if num_rings < 1:
        raise ValueError("need at least one ring")
    spec = np.abs(np.fft.fft2(img)) ** 2
    fu = np.fft.fftfreq(img.shape[0])[:, None]
    fv = np.fft.fftfreq(img.shape[1])[None, :]
    rho = np.hypot(fu, fv)
    rho_max = rho.max()
    if rho_max == 0.0:
        ring = np.zeros(img.shape, dtype=np.intp)
    else:
        ring = np.minimum(
            (rho / rho_max * num_rings).astype(np.intp), num_rings - 1
        )
    count = np.bincount(ring.ravel(), minlength=num_rings)
    total = np.bincount(ring.ravel(), weights=spec.ravel(), minlength=num_rings)
    power = np.divide(
        total, count, out=np.zeros(num_rings, dtype=np.float64), where=count > 0
    )
    return power, count


def psd_loss(
    pred: np.ndarray, target: np.ndarray, mask: MaskSpec, num_rings: int = 16
) -> float:
    """Mean absolute difference of ring-averaged spectra of masked images."""
    pred, target = _check_pair(pred, target)
    if pred.shape != (mask.height, mask.width):
        raise ValueError(f"mask is {mask.height}x{mask.width}, image {pred.shape}")
    m = mask.pixel_mask()
    pa, _ = radial_psd(m * pred, num_rings)
    pb, _ = radial_psd(m * target, num_rings)
    return float(np.abs(pa - pb).mean())


def _finite(name, x):
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x}")
    return float(x)


def stage2_objective(
    mae: float, kd: float, lb: float, weights: LossWeights = LossWeights()
) -> float:
    """Distillation-stage scalar: mae + lambda_kd * kd + mu_lb * lb."""
    mae = _finite("mae", mae)
    kd = _finite("kd", kd)
    lb = _finite("lb", lb)
    return mae + weights.lambda_kd * kd + weights.mu_lb * lb


def stage3_objective(
    joint: float, fft: float, psd: float, weights: LossWeights = LossWeights()
) -> float:
    """Fine-tuning scalar: joint + nu_freq * (fft + eta_psd * psd)."""
    joint = _finite("joint", joint)
    fft = _finite("fft", fft)
    psd = _finite("psd", psd)
    return joint + weights.nu_freq * (fft + weights.eta_psd * psd)
