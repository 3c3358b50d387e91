import numpy as np
import pytest

from sembench import (
    NumericError,
    calinski_harabasz,
    davies_bouldin,
    load_embeddings_csv,
    psnr,
    save_embeddings_csv,
    silhouette_cosine,
    ssim,
)


# --------------------------------------------------------------------- psnr


def test_psnr_known_values():
    a = np.zeros((8, 8))
    assert psnr(a + 0.1, a) == pytest.approx(20.0, abs=1e-12)
    assert psnr(a + 0.01, a) == pytest.approx(40.0, abs=1e-12)


def test_psnr_identical_is_inf():
    a = np.random.default_rng(0).uniform(size=(8, 8))
    assert psnr(a, a) == np.inf


def test_psnr_peak_rescaling():
    a = np.zeros((4, 4))
    # constant error of peak/10 is 20 dB at any peak
    assert psnr(a + 25.5, a, peak=255.0) == pytest.approx(20.0, abs=1e-12)


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.zeros((2, 3)))


# --------------------------------------------------------------------- ssim


def test_ssim_identical_is_exactly_one():
    a = np.random.default_rng(1).uniform(size=(16, 16))
    assert ssim(a, a) == 1.0


def test_ssim_constant_images_hand_value():
    a = np.full((12, 12), 0.3)
    b = np.full((12, 12), 0.5)
    # zero variance: luminance term only, (2*0.15 + 1e-4)/(0.34 + 1e-4)
    assert ssim(a, b) == pytest.approx(0.3001 / 0.3401, rel=1e-12)


def test_ssim_symmetry():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(size=(20, 20)), rng.uniform(size=(20, 20))
    assert ssim(a, b) == pytest.approx(ssim(b, a), rel=1e-12)


def _brute_ssim(a, b, peak=1.0):
    # direct windowed computation from the definition
    x = np.arange(11.0) - 5.0
    g = np.exp(-(x * x) / (2 * 1.5 * 1.5))
    win = np.outer(g, g)
    win /= win.sum()
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - 10):
        for j in range(w - 10):
            pa = a[i : i + 11, j : j + 11][::-1, ::-1]  # convolution flip
            pb = b[i : i + 11, j : j + 11][::-1, ::-1]
            mu_a = (win * pa).sum()
            mu_b = (win * pb).sum()
            va = (win * pa * pa).sum() - mu_a**2
            vb = (win * pb * pb).sum() - mu_b**2
            cov = (win * pa * pb).sum() - mu_a * mu_b
            vals.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2))
            )
    return float(np.mean(vals))


def test_ssim_brute_force_oracle():
    rng = np.random.default_rng(3)
    a = rng.uniform(size=(16, 18))
    b = np.clip(a + rng.normal(0, 0.1, size=(16, 18)), 0, 1)
    assert ssim(a, b) == pytest.approx(_brute_ssim(a, b), abs=1e-9)


def test_ssim_of_degraded_image_lower():
    rng = np.random.default_rng(4)
    a = rng.uniform(size=(32, 32))
    noisy = np.clip(a + rng.normal(0, 0.2, size=a.shape), 0, 1)
    assert ssim(a, noisy) < ssim(a, a)


def test_ssim_requires_window_sized_image():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


# ------------------------------------------------------------- silhouette


def test_silhouette_separated_direction_clusters_score_one():
    vectors = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 3.0]])
    assert silhouette_cosine(vectors, [0, 0, 1, 1]) == pytest.approx(1.0, abs=1e-12)


def test_silhouette_swapped_labels_negative():
    vectors = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    assert silhouette_cosine(vectors, [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-12)


def test_silhouette_singletons_score_zero():
    vectors = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    assert silhouette_cosine(vectors, [0, 0, 1]) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_silhouette_brute_force_oracle():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(20, 4))
    y = rng.integers(0, 3, size=20)
    y[:3] = [0, 1, 2]  # every cluster present

    unit = x / np.linalg.norm(x, axis=1, keepdims=True)
    scores = []
    for i in range(20):
        d = lambda j: max(0.0, 1.0 - float(unit[i] @ unit[j]))
        own = [d(j) for j in range(20) if y[j] == y[i] and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = np.mean(own)
        b = min(
            np.mean([d(j) for j in range(20) if y[j] == k])
            for k in range(3)
            if k != y[i]
        )
        scores.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    assert silhouette_cosine(x, y) == pytest.approx(np.mean(scores), abs=1e-12)


def test_silhouette_scale_invariance_per_vector():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(12, 3))
    y = rng.integers(0, 2, size=12)
    y[:2] = [0, 1]
    scales = rng.uniform(0.5, 4.0, size=(12, 1))
    assert silhouette_cosine(x * scales, y) == pytest.approx(
        silhouette_cosine(x, y), abs=1e-12
    )


def test_silhouette_rejects_zero_vectors_and_bad_labels():
    with pytest.raises(ValueError):
        silhouette_cosine(np.array([[0.0, 0.0], [1.0, 0.0]]), [0, 1])
    with pytest.raises(ValueError):
        silhouette_cosine(np.eye(3), [0, 0, 2])  # label 1 missing
    with pytest.raises(ValueError):
        silhouette_cosine(np.eye(3), [0, 0, 0])  # single cluster


# ---------------------------------------------------------- davies_bouldin


def test_davies_bouldin_hand_value():
    vectors = np.array([[-0.05, 0.0], [0.05, 0.0], [0.95, 0.0], [1.05, 0.0]])
    assert davies_bouldin(vectors, [0, 0, 1, 1]) == pytest.approx(0.1, abs=1e-12)


def test_davies_bouldin_brute_force_oracle():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(18, 3))
    y = rng.integers(0, 3, size=18)
    y[:3] = [0, 1, 2]
    cents = [x[y == k].mean(axis=0) for k in range(3)]
    scat = [np.linalg.norm(x[y == k] - cents[k], axis=1).mean() for k in range(3)]
    worst = []
    for i in range(3):
        worst.append(
            max(
                (scat[i] + scat[j]) / np.linalg.norm(cents[i] - cents[j])
                for j in range(3)
                if j != i
            )
        )
    assert davies_bouldin(x, y) == pytest.approx(np.mean(worst), rel=1e-12)


def test_davies_bouldin_translation_invariance():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(10, 2))
    y = rng.integers(0, 2, size=10)
    y[:2] = [0, 1]
    assert davies_bouldin(x + 5.0, y) == pytest.approx(davies_bouldin(x, y), rel=1e-12)


def test_davies_bouldin_coincident_centroids_raise():
    vectors = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    with pytest.raises(NumericError):
        davies_bouldin(vectors, [0, 0, 1, 1])  # both centroids at origin


# ------------------------------------------------------- calinski_harabasz


def test_calinski_harabasz_hand_value():
    vectors = np.array([[0.0, 0.0], [0.2, 0.0], [1.0, 0.0], [1.2, 0.0]])
    assert calinski_harabasz(vectors, [0, 0, 1, 1]) == pytest.approx(50.0, rel=1e-12)


def test_calinski_harabasz_point_mass_clusters_inf():
    vectors = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    assert calinski_harabasz(vectors, [0, 0, 1, 1]) == np.inf


def test_calinski_harabasz_brute_force_oracle():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(25, 4))
    y = rng.integers(0, 4, size=25)
    y[:4] = [0, 1, 2, 3]
    grand = x.mean(axis=0)
    between = sum(
        (y == k).sum() * np.sum((x[y == k].mean(axis=0) - grand) ** 2)
        for k in range(4)
    )
    within = sum(
        np.sum((x[y == k] - x[y == k].mean(axis=0)) ** 2) for k in range(4)
    )
    expect = (between / 3) / (within / (25 - 4))
    assert calinski_harabasz(x, y) == pytest.approx(expect, rel=1e-12)


def test_calinski_harabasz_label_permutation_invariance():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(12, 3))
    y = rng.integers(0, 3, size=12)
    y[:3] = [0, 1, 2]
    swapped = np.choose(y, [1, 0, 2])
    assert calinski_harabasz(x, swapped) == pytest.approx(
        calinski_harabasz(x, y), rel=1e-12
    )


def test_calinski_harabasz_needs_more_samples_than_clusters():
    with pytest.raises(ValueError):
        calinski_harabasz(np.eye(3), [0, 1, 2])


# ------------------------------------------------------------- CSV storage


def test_embeddings_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    vectors = rng.normal(size=(6, 5))
    labels = np.array([0, 1, 2, 0, 1, 2])
    p = tmp_path / "emb.csv"
    save_embeddings_csv(p, vectors, labels)
    back_v, back_y = load_embeddings_csv(p)
    np.testing.assert_array_equal(back_v, vectors)  # repr() is lossless
    np.testing.assert_array_equal(back_y, labels)


def test_embeddings_csv_rejects_ragged_rows(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,1.0,2.0\n1,3.0\n")
    with pytest.raises(ValueError):
        load_embeddings_csv(p)


def test_embeddings_csv_rejects_empty(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ValueError):
        load_embeddings_csv(p)
