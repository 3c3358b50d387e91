"""
Training objectives for masked reconstruction
=============================================

The loss zoo in one sitting: patch masking with its exact 147-of-196
arithmetic, the masked L1 / distillation pair, the smooth pixel and edge
terms, total variation, and the frequency-domain penalties built on a
radially averaged power spectrum.  Closing out, the staged composites
that bolt these together.
"""

from pathlib import Path

import numpy as np

from sembench import (
    LossWeights,
    MaskSpec,
    Seed,
    charbonnier,
    edge_loss,
    fft_loss,
    kd_loss,
    load_balance_loss,
    masked_l1,
    psd_loss,
    radial_psd,
    sample_mask,
    save_image,
    stage2_objective,
    stage3_objective,
    total_restoration_loss,
    tv_loss,
)

out_dir = Path(__file__).parent / "output" / "03_losses"
out_dir.mkdir(parents=True, exist_ok=True)

# --- 1. patch masking ---------------------------------------------------------
# A 224x224 image tiles into 14x14 = 196 patches of 16 px.  At ratio 0.75
# the sampler hides round(147.0) = 147 of them, exact halves rounding up.

mask = sample_mask(224, 224, patch_size=16, ratio=0.75, seed=Seed(5))
print(f"patches: {mask.num_patches}, hidden: {len(mask.masked)}")
save_image(mask.pixel_mask(), out_dir / "mask.png")

# --- 2. reconstruction losses on the hidden pixels ------------------------------
# The target is a smooth two-tone pattern, the reconstruction is off by a
# slow ramp plus faint noise.  masked_l1 only reads the hidden patches; a
# perfect fill of the visible region cannot lower it.

rng = np.random.default_rng(3)
yy, xx = np.mgrid[0:224, 0:224]
target = 0.5 + 0.25 * np.cos(2 * np.pi * xx / 56) * np.cos(2 * np.pi * yy / 112)
pred = target + np.linspace(0.0, 0.1, 224)[None, :] + 0.01 * rng.standard_normal((224, 224))

value, grad = masked_l1(pred, target, mask)
print(f"masked_l1: {value:.5f}  (gradient support = {int((grad != 0).sum())} px)")

teacher = target + 0.03
kd_value, _ = kd_loss(pred, teacher, mask)
print(f"kd_loss vs teacher: {kd_value:.5f}")

# --- 3. pixel, edge, and smoothness terms ---------------------------------------
value, _ = charbonnier(pred, target)
print(f"charbonnier: {value:.4f}")
value, _ = edge_loss(pred, target)
print(f"edge_loss:   {value:.4f}  (zero when both share gradients)")
value, _ = tv_loss(pred)
print(f"tv_loss:     {value:.4f}")

weights = LossWeights()
total, _ = total_restoration_loss(pred, target, weights)
print(f"total_restoration_loss (lambda_e={weights.lambda_e}, lambda_tv={weights.lambda_tv}): {total:.4f}")

# --- 4. frequency-domain penalties ----------------------------------------------
# radial_psd bins |DFT|^2 into annuli of equal radial-frequency width.
# A pure tone at 28 cycles / 224 px concentrates all its energy in a
# single ring, which is what psd_loss compares between two images.

tone = 0.4 * np.cos(2 * np.pi * 28 * np.arange(224) / 224) * np.ones((224, 1))
power, count = radial_psd(tone, num_rings=12)
print("\nring  count      mean power")
for ring in range(12):
    marker = "  <- tone" if power[ring] > 1e-6 else ""
    print(f"  {ring:2d} {count[ring]:6d}  {power[ring]:14.2f}{marker}")

print(f"\nfft_loss(pred, target): {fft_loss(pred, target, mask):.6f}")
print(f"psd_loss(pred, target): {psd_loss(pred, target, mask):.6f}")

# --- 5. staged composites --------------------------------------------------------
# The staged objectives fold already-computed scalars.  Stage 2 distills
# a teacher while keeping expert routing balanced; stage 3 adds the two
# frequency terms on top of the joint restoration loss.

alpha = np.full((4, 49, 8), 1.0 / 8.0)  # perfectly balanced routing
lb = load_balance_loss(alpha)
mae_value, _ = masked_l1(pred, target, mask)
s2 = stage2_objective(mae_value, kd_value, lb, weights)
joint, _ = total_restoration_loss(pred, target, weights)
s3 = stage3_objective(
    joint, fft_loss(pred, target, mask), psd_loss(pred, target, mask), weights
)
print(f"\nload balance: {lb:.3f} (1.0 is uniform)")
print(f"stage2_objective: {s2:.5f}")
print(f"stage3_objective: {s3:.5f}")
print(f"outputs in {out_dir}")
