"""
Simulating defocused SEM images
===============================

Walk through the forward model: build rotated elliptical Airy kernels,
blur a line pattern, then add dose-dependent Poisson shot noise and
Gaussian read noise on the 8-bit code scale.  Everything is keyed by an
explicit seed, so each figure here is bit-reproducible.
"""

from pathlib import Path

import numpy as np

from sembench import (
    DEFAULT_RANGES,
    DegradeParams,
    PsfParams,
    Seed,
    apply_forward_model,
    bessel_j1,
    build_kernel,
    kernel_size,
    midpoint_params,
    sample_params,
    save_image,
)

out_dir = Path(__file__).parent / "output" / "01_defocus"
out_dir.mkdir(parents=True, exist_ok=True)

# --- 1. the Airy point spread function -------------------------------------
# The blur profile is [2 J1(pi r) / (pi r)]^beta on an elliptical, rotated
# radius.  J1 is evaluated by the package itself; its first positive root
# should sit at the textbook 3.8317 (so the first dark ring of the
# unscaled pattern lands at r = 3.8317 / pi).

xs = np.linspace(3.8, 3.9, 10001)
root = xs[np.argmin(np.abs(bessel_j1(xs)))]
print(f"first positive root of J1: {root:.4f} (expected 3.8317)")

for params in (
    PsfParams(r_x=2.0, r_y=2.0, beta=2.0, theta=0.0),
    PsfParams(r_x=6.0, r_y=2.5, beta=1.95, theta=0.6),
    PsfParams(r_x=15.5, r_y=15.5, beta=1.95, theta=0.0),
):
    kernel = build_kernel(params)
    print(
        f"PSF r_x={params.r_x:5.1f} r_y={params.r_y:4.1f} theta={params.theta:.2f}"
        f" -> kernel {kernel.shape[0]}x{kernel.shape[1]}, sum {kernel.sum():.6f}"
    )
    # size rule: six radii across, forced odd so the center is a pixel
    assert kernel.shape[0] == kernel_size(params.r_x, params.r_y)

# Save a stretched view of the anisotropic kernel; the long axis is
# rotated by theta.
kernel = build_kernel(PsfParams(r_x=6.0, r_y=2.5, beta=1.95, theta=0.6))
save_image(kernel / kernel.max(), out_dir / "psf_anisotropic.png")

# --- 2. a clean line pattern ------------------------------------------------
# Bright vertical lines, 12 px wide on a 40 px pitch: a stand-in for a
# patterned wafer shot.

height, width = 256, 256
clean = np.full((height, width), 0.15)
for center in range(20, width, 40):
    clean[:, center - 6 : center + 6] = 0.85
save_image(clean, out_dir / "clean.png")

# --- 3. fixed degradations --------------------------------------------------
# DegradeParams bundles the PSF with the intensity transform
# y = a * (255 * blur) + b and the two noise strengths.  dose scales the
# Poisson counts, sigma is the Gaussian term, both on the code scale.

seed = Seed(2024)
settings = {
    "mild": dict(r_x=2.0, r_y=2.0, beta=2.0, theta=0.0, a=1.0, b=5.0, sigma=2.0, dose=40.0),
    "heavy_blur": dict(r_x=12.0, r_y=4.0, beta=1.95, theta=0.8, a=1.0, b=5.0, sigma=2.0, dose=40.0),
    "low_dose": dict(r_x=2.0, r_y=2.0, beta=2.0, theta=0.0, a=1.0, b=5.0, sigma=8.0, dose=3.0),
}
for i, (name, raw) in enumerate(settings.items()):
    params = DegradeParams.from_dict(raw)
    degraded = apply_forward_model(clean, params, seed.substream(i, "noise"))
    save_image(degraded, out_dir / f"degraded_{name}.png")
    print(f"{name:11s}: output mean {degraded.mean():.3f}, std {degraded.std():.3f}")

# The noiseless path applies only the blur and the affine transform,
# which is what restoration oracles compare against.
params = DegradeParams.from_dict(settings["mild"])
noiseless = apply_forward_model(clean, params, seed.substream(0, "noise"), noiseless=True)
save_image(noiseless, out_dir / "degraded_mild_noiseless.png")

# --- 4. sampling whole parameter sets --------------------------------------
# For benchmark sets each image gets an independent substream, so image
# k's parameters never depend on how many images came before it.

print("\nsampled degradations (one substream per image):")
print("  idx   r_x   r_y   beta  theta     a      b   sigma  dose")
for idx in range(5):
    p = sample_params(DEFAULT_RANGES, seed.substream(idx, "params"))
    print(
        f"  {idx:3d} {p.psf.r_x:6.2f} {p.psf.r_y:5.2f} {p.psf.beta:6.3f}"
        f" {p.psf.theta:6.2f} {p.a:6.3f} {p.b:6.2f} {p.sigma:6.2f} {p.dose:5.1f}"
    )

mid = midpoint_params()
print(f"\nrange midpoints: r_x={mid.psf.r_x}, beta={mid.psf.beta}, dose={mid.dose}")
print(f"outputs in {out_dir}")
