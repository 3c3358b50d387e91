import numpy as np
import pytest

from sembench import (
    LossWeights,
    NumericError,
    PsfParams,
    RestoreConfig,
    TileSpec,
    build_kernel,
    convolve_reflect,
    estimate_noise_sigma,
    kernel_size,
    psnr,
    richardson_lucy,
    ssim,
    tile_grid,
    tiled_apply,
    variational_restore,
    wiener,
)
from sembench.restore import _conv_adjoint

from conftest import sinusoid_grating


def blurred_grating(size=96, cycles=16, radius=2.0):
    clean = sinusoid_grating(size, size, cycles)
    kernel = build_kernel(PsfParams(radius, radius, 2.0, 0.0))
    return clean, kernel, convolve_reflect(clean, kernel)


# ------------------------------------------------------------------- configs


def test_restore_config_defaults():
    c = RestoreConfig()
    assert c.rl_iterations == 30
    assert c.wiener_balance == 0.01
    assert c.fixed_psf == PsfParams(15.5, 15.5, 1.95, 0.0)
    assert kernel_size(c.fixed_psf.r_x, c.fixed_psf.r_y) == 93


def test_restore_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        RestoreConfig(rl_iterations=0)
    with pytest.raises(ValueError):
        RestoreConfig(wiener_balance=0.0)
    c = RestoreConfig(rl_iterations=5, wiener_balance=0.1, fixed_psf=PsfParams(2, 3, 1.9, 0.2))
    assert RestoreConfig.from_dict(c.to_dict()) == c


def test_tile_spec_defaults_and_validation():
    s = TileSpec()
    assert (s.tile, s.overlap) == (224, 8)
    with pytest.raises(ValueError):
        TileSpec(tile=16, overlap=16)
    with pytest.raises(ValueError):
        TileSpec(tile=16, overlap=0)
    assert TileSpec.from_dict({"tile": 64, "overlap": 4}) == TileSpec(64, 4)


# ------------------------------------------------------------ richardson_lucy


def test_rl_constant_is_fixed_point():
    kernel = build_kernel(PsfParams(2.0, 2.0, 2.0, 0.0))
    y = np.full((32, 32), 0.5)
    out = richardson_lucy(y, kernel, iterations=5)
    np.testing.assert_allclose(out, 0.5, atol=1e-10)


def test_rl_delta_kernel_is_identity():
    rng = np.random.default_rng(0)
    y = rng.uniform(0.1, 0.9, size=(24, 24))
    delta = np.zeros((5, 5))
    delta[2, 2] = 1.0
    out = richardson_lucy(y, delta, iterations=3)
    np.testing.assert_allclose(out, y, atol=1e-9)


def test_rl_sharpens_blurred_grating():
    clean, kernel, blurred = blurred_grating()
    out = richardson_lucy(blurred, kernel, iterations=20)
    assert psnr(out, clean) > psnr(blurred, clean) + 10
    assert ssim(out, clean) > ssim(blurred, clean)
    assert out.min() >= 0.0


def test_rl_rejects_bad_inputs():
    kernel = np.ones((3, 3)) / 9
    with pytest.raises(ValueError):
        richardson_lucy(np.array([[-0.1, 0.2], [0.3, 0.4]]), kernel)
    with pytest.raises(ValueError):
        richardson_lucy(np.zeros((4, 4)), kernel, iterations=0)


# -------------------------------------------------------------------- wiener


def test_wiener_delta_kernel_closed_form():
    # H == 1 everywhere, so X = Y / (1 + balance) exactly
    rng = np.random.default_rng(1)
    y = rng.uniform(size=(16, 16))
    delta = np.zeros((5, 5))
    delta[2, 2] = 1.0
    out = wiener(y, delta, balance=0.5)
    np.testing.assert_allclose(out, y / 1.5, atol=1e-12)


def test_wiener_small_balance_inverts_blur():
    clean, kernel, blurred = blurred_grating(size=128, cycles=8)
    out = wiener(blurred, kernel, balance=1e-6)
    assert psnr(out, clean) > 40.0


def test_wiener_is_linear_in_the_image():
    rng = np.random.default_rng(2)
    y1, y2 = rng.uniform(size=(20, 20)), rng.uniform(size=(20, 20))
    kernel = build_kernel(PsfParams(1.5, 1.5, 2.0, 0.0))
    lhs = wiener(2.0 * y1 + 0.3 * y2, kernel)
    rhs = 2.0 * wiener(y1, kernel) + 0.3 * wiener(y2, kernel)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_wiener_rejects_nonpositive_balance():
    with pytest.raises(ValueError):
        wiener(np.zeros((8, 8)), np.ones((1, 1)), balance=0.0)


# -------------------------------------------------------- variational_restore


def test_variational_improves_blurred_grating():
    clean, kernel, blurred = blurred_grating()
    weights = LossWeights(lambda_tv=0.05)
    out, trace = variational_restore(
        blurred, kernel, weights=weights, steps=150, step_size=0.5, return_trace=True
    )
    assert ssim(out, clean) > ssim(blurred, clean) + 0.005
    assert psnr(out, clean) > psnr(blurred, clean) + 10
    assert np.all(np.diff(trace) <= 1e-12)  # non-increasing objective


def test_variational_zero_steps_returns_input():
    _, kernel, blurred = blurred_grating(size=48, cycles=8)
    out = variational_restore(blurred, kernel, steps=0)
    np.testing.assert_array_equal(out, blurred)


def test_variational_trace_shape_and_flag():
    _, kernel, blurred = blurred_grating(size=48, cycles=8)
    out = variational_restore(blurred, kernel, steps=3)
    assert isinstance(out, np.ndarray)
    out2, trace = variational_restore(blurred, kernel, steps=3, return_trace=True)
    assert len(trace) <= 4 and trace[0] >= trace[-1]


def test_variational_nonfinite_input_raises():
    kernel = np.ones((3, 3)) / 9
    y = np.full((16, 16), 0.5)
    y[3, 3] = np.nan
    with pytest.raises(NumericError):
        variational_restore(y, kernel, steps=1)


def test_variational_rejects_bad_hyperparams():
    y = np.zeros((8, 8))
    kernel = np.ones((1, 1))
    with pytest.raises(ValueError):
        variational_restore(y, kernel, step_size=0.0)
    with pytest.raises(ValueError):
        variational_restore(y, kernel, steps=-1)


def test_conv_adjoint_identity():
    # <K * x, r> == <x, K^T r> for the reflect-boundary operator
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(9, 11))
    r = rng.uniform(size=(9, 11))
    kernel = rng.uniform(size=(5, 5))
    lhs = float(np.sum(convolve_reflect(x, kernel) * r))
    rhs = float(np.sum(x * _conv_adjoint(r, kernel)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


# -------------------------------------------------------- estimate_noise_sigma


def test_noise_sigma_recovers_gaussian_level():
    rng = np.random.default_rng(4)
    img = 0.5 + rng.normal(0.0, 0.05, size=(256, 256))
    est = estimate_noise_sigma(img)
    assert abs(est - 0.05) / 0.05 < 0.2


def test_noise_sigma_zero_for_constant():
    assert estimate_noise_sigma(np.full((16, 16), 0.3)) == 0.0


def test_noise_sigma_scales_linearly():
    rng = np.random.default_rng(5)
    img = rng.uniform(size=(64, 64))
    assert estimate_noise_sigma(3.0 * img) == pytest.approx(
        3.0 * estimate_noise_sigma(img), rel=1e-12
    )


def test_noise_sigma_rejects_tiny_images():
    with pytest.raises(ValueError):
        estimate_noise_sigma(np.zeros((2, 5)))


# -------------------------------------------------------------- tiled_apply


def test_tile_grid_single_tile_case():
    ys, xs, ph, pw = tile_grid(100, 50, TileSpec(tile=128, overlap=8))
    assert ys == [0] and xs == [0]
    assert (ph, pw) == (128, 128)


def test_tile_grid_stride_and_coverage():
    spec = TileSpec(tile=224, overlap=8)
    ys, xs, ph, pw = tile_grid(512, 512, spec)
    assert ys == [0, 216, 432] and xs == ys
    assert ph == 432 + 224 == 656
    # every pixel of the padded frame is covered
    assert ys[-1] + spec.tile == ph and ph >= 512


def test_tiled_apply_identity_roundtrip():
    rng = np.random.default_rng(6)
    img = rng.uniform(size=(100, 73))
    out = tiled_apply(img, TileSpec(tile=48, overlap=8), lambda t: t)
    np.testing.assert_allclose(out, img, atol=1e-12)


def test_tiled_apply_commutes_with_pixelwise_ops():
    rng = np.random.default_rng(7)
    img = rng.uniform(size=(70, 90))
    out = tiled_apply(img, TileSpec(tile=32, overlap=6), lambda t: t + 0.1)
    np.testing.assert_allclose(out, img + 0.1, atol=1e-12)


def test_tiled_apply_passes_full_tiles_to_op():
    seen = []

    def op(t):
        seen.append(t.shape)
        return t

    tiled_apply(np.zeros((40, 40)), TileSpec(tile=32, overlap=4), op)
    assert set(seen) == {(32, 32)}
    assert len(seen) == 4


def test_tiled_apply_rejects_bad_op_shape():
    with pytest.raises(ValueError):
        tiled_apply(
            np.zeros((40, 40)), TileSpec(tile=32, overlap=4), lambda t: t[:-1]
        )


def test_tiled_apply_rejects_oversized_tile():
    with pytest.raises(ValueError):
        tiled_apply(np.zeros((16, 100)), TileSpec(tile=32, overlap=4), lambda t: t)
