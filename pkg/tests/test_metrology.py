import numpy as np
import pytest

from sembench import (
    DEFAULT_PSD_BAND,
    DetectionOptions,
    EdgeSet,
    MetrologyError,
    MetrologyReport,
    aggregate_errors,
    compare_reports,
    detect_edges,
    lwr_psd,
    measure,
    psd_summary,
)

from conftest import binary_grating, even_phase, render_lines


def analytic_edges(widths, left0=10.0, pixel_size=1.0, poly_degree=1):
    """EdgeSet with straight left edges and prescribed width trajectories."""
    widths = np.atleast_2d(np.asarray(widths, dtype=np.float64))
    left = np.full_like(widths, left0)
    return EdgeSet(left, left + widths, pixel_size=pixel_size, poly_degree=poly_degree)


# ---------------------------------------------------------------- detection


def test_binary_grating_measured_exactly():
    # hard edges at half-integer columns, bimodal histogram: threshold is
    # the exact midpoint and every crossing interpolates to the true edge
    img = binary_grating(64, 100, line_width=10, pitch=25)
    report = measure(detect_edges(img))
    assert report.cd == pytest.approx(10.0, abs=1e-9)
    assert report.cd_std == pytest.approx(0.0, abs=1e-9)
    assert report.lwr == pytest.approx(0.0, abs=1e-9)
    assert report.ler == pytest.approx(0.0, abs=1e-9)


def test_subpixel_shift_recovered():
    base = render_lines(64, 120, lambda r: [35.15, 85.15], lambda r: 12.0)
    shifted = render_lines(64, 120, lambda r: [35.45, 85.45], lambda r: 12.0)
    e0 = detect_edges(base)
    e1 = detect_edges(shifted)
    d = e1.left_edges.mean() - e0.left_edges.mean()
    assert d == pytest.approx(0.3, abs=1e-9)
    assert measure(e1).cd == pytest.approx(measure(e0).cd, abs=1e-9)


def test_edge_sinusoid_ler():
    # both edges displaced together: LWR ~ 0, LER = 3 * A / sqrt(2);
    # the even phase makes the linear detrend a no-op
    disp = 1.2 * even_phase(64, 2)
    img = render_lines(
        64, 220, lambda r: [c + disp[r] for c in (40, 90, 140, 190)], lambda r: 12.0
    )
    report = measure(detect_edges(img))
    target = 3.0 * 1.2 / np.sqrt(2.0)
    assert abs(report.ler - target) / target < 0.01
    assert report.lwr < 1e-9


def test_width_sinusoid_lwr():
    # width oscillates by A: LWR = 3 A / sqrt(2), each edge moves by A/2
    wid = 12.0 + 1.2 * even_phase(64, 2)
    img = render_lines(64, 220, lambda r: [40.0, 90.0, 140.0, 190.0], lambda r: wid[r])
    report = measure(detect_edges(img))
    lwr_target = 3.0 * 1.2 / np.sqrt(2.0)
    ler_target = 3.0 * 0.6 / np.sqrt(2.0)
    assert abs(report.lwr - lwr_target) / lwr_target < 0.01
    assert abs(report.ler - ler_target) / ler_target < 0.01


def test_detect_edges_sorts_lines_left_to_right():
    img = render_lines(32, 160, lambda r: [120.2, 30.2, 75.2], lambda r: 10.0)
    edges = detect_edges(img)
    assert edges.lines == 3
    means = edges.left_edges.mean(axis=1)
    assert means[0] < means[1] < means[2]


def test_detect_edges_drops_low_coverage_lines():
    img = render_lines(50, 120, lambda r: [30.2], lambda r: 10.0)
    partial = render_lines(50, 120, lambda r: [80.2], lambda r: 10.0)
    img = np.maximum(img, np.where(np.arange(50)[:, None] < 20, partial, 0.1))
    edges = detect_edges(img)  # second line spans 40% < 50% default
    assert edges.lines == 1
    assert edges.rows == 50
    loose = detect_edges(img, DetectionOptions(min_coverage=0.3))
    assert loose.lines == 2
    assert loose.rows == 20  # only rows where both lines exist


def test_detect_edges_track_jump_splits_line():
    # an 8 px jump at mid-height exceeds max_gap: two half-height tracks
    # with no common rows
    centers = lambda r: [40.2 if r < 25 else 48.2]
    img = render_lines(50, 100, centers, lambda r: 10.0)
    with pytest.raises(MetrologyError):
        detect_edges(img)
    edges = detect_edges(img, DetectionOptions(max_gap=10.0))
    assert edges.lines == 1 and edges.rows == 50


def test_detect_edges_flat_image_raises():
    with pytest.raises(MetrologyError):
        detect_edges(np.full((32, 32), 0.4))


def test_detection_options_validation():
    with pytest.raises(ValueError):
        DetectionOptions(max_gap=0.0)
    with pytest.raises(ValueError):
        DetectionOptions(min_coverage=0.0)
    with pytest.raises(ValueError):
        DetectionOptions(pixel_size=-1.0)
    with pytest.raises(ValueError):
        DetectionOptions(poly_degree=-1)


# ------------------------------------------------------------------ measure


def test_measure_cd_std_over_lines():
    widths = np.stack(
        [np.full(16, 10.0), np.full(16, 12.0), np.full(16, 14.0)]
    )
    left = np.stack([np.full(16, 10.0), np.full(16, 40.0), np.full(16, 70.0)])
    report = measure(EdgeSet(left, left + widths))
    assert report.cd == pytest.approx(12.0)
    assert report.cd_std == pytest.approx(2.0)  # ddof=1 over [10, 12, 14]
    assert report.lwr == pytest.approx(0.0, abs=1e-12)
    assert report.ler == pytest.approx(0.0, abs=1e-12)


def test_measure_single_line_cd_std_zero():
    report = measure(analytic_edges(np.full(12, 9.0)))
    assert report.cd_std == 0.0


def test_measure_requires_eight_rows():
    with pytest.raises(MetrologyError):
        measure(analytic_edges(np.full(7, 9.0)))


def test_measure_linear_trend_excluded_from_roughness():
    # a perfectly linear width drift detrends to nothing at degree 1
    widths = 10.0 + 0.05 * np.arange(32)
    report = measure(analytic_edges(widths))
    assert report.lwr == pytest.approx(0.0, abs=1e-10)
    report0 = measure(analytic_edges(widths, poly_degree=0))
    assert report0.lwr > 0.1  # mean removal alone leaves the ramp


def test_measure_pixel_size_scaling():
    rng = np.random.default_rng(0)
    widths = 10.0 + rng.normal(0, 0.4, size=(2, 24))
    left = np.tile(np.linspace(5.0, 5.5, 24), (2, 1)) + np.array([[0.0], [30.0]])
    e1 = EdgeSet(left, left + widths, pixel_size=1.0)
    e2 = EdgeSet(left, left + widths, pixel_size=2.0)
    r1, r2 = measure(e1), measure(e2)
    assert r2.cd == pytest.approx(2 * r1.cd, rel=1e-12)
    assert r2.cd_std == pytest.approx(2 * r1.cd_std, rel=1e-12)
    assert r2.lwr == pytest.approx(2 * r1.lwr, rel=1e-12)
    assert r2.ler == pytest.approx(2 * r1.ler, rel=1e-12)
    np.testing.assert_allclose(r2.psd_freq, r1.psd_freq / 2.0, rtol=1e-12)
    # physical power scales as px^3: width^2 * delta
    np.testing.assert_allclose(r2.psd_power, 8.0 * r1.psd_power, rtol=1e-12)


def test_edge_set_validation():
    with pytest.raises(ValueError):
        EdgeSet(np.zeros((2, 8)), np.zeros((2, 8)))  # left == right
    with pytest.raises(ValueError):
        EdgeSet(np.zeros((2, 8)), np.ones((3, 8)))
    with pytest.raises(ValueError):
        EdgeSet(np.zeros((2, 8)), np.ones((2, 8)), pixel_size=0.0)


# ------------------------------------------------------------------ lwr_psd


def test_lwr_psd_pure_tone_peak():
    n, amp, cyc = 128, 1.2, 4
    widths = 16.0 + amp * even_phase(n, cyc)
    freq, power = lwr_psd(analytic_edges(widths))
    peak = int(np.argmax(power))
    assert freq[peak] == pytest.approx(cyc / n, rel=1e-12)
    # one-sided tone power: 2 * (n A / 2)^2 * delta / n = n A^2 / 2
    assert power[peak] == pytest.approx(n * amp**2 / 2.0, rel=1e-9)
    others = np.delete(power, peak)
    assert others.max() < 1e-18 * power[peak] + 1e-12


def test_lwr_psd_parseval_exact():
    rng = np.random.default_rng(1)
    widths = 10.0 + rng.normal(0, 0.5, size=24)
    freq, power = lwr_psd(analytic_edges(widths))
    # sum(P) = population variance * n * delta, exactly (one-sided fold)
    assert power.sum() == pytest.approx(widths.var() * 24, rel=1e-12)
    assert freq.shape == power.shape == (12,)
    np.testing.assert_allclose(freq, np.arange(1, 13) / 24.0, rtol=1e-15)


def test_lwr_psd_nyquist_bin_not_doubled():
    n, amp = 16, 0.7
    widths = 10.0 + amp * np.cos(np.pi * np.arange(n))  # pure Nyquist tone
    _, power = lwr_psd(analytic_edges(widths))
    # |DFT|^2 = (n amp)^2 at the Nyquist bin, scale c = 1
    assert power[-1] == pytest.approx((n * amp) ** 2 / n, rel=1e-12)
    assert power.sum() == pytest.approx(widths.var() * n, rel=1e-12)


def test_lwr_psd_averages_over_lines():
    rng = np.random.default_rng(2)
    w1 = 10.0 + rng.normal(0, 0.3, size=20)
    w2 = 10.0 + rng.normal(0, 0.3, size=20)
    _, p1 = lwr_psd(analytic_edges(w1))
    _, p2 = lwr_psd(analytic_edges(w2))
    left = np.stack([np.full(20, 5.0), np.full(20, 30.0)])
    both = EdgeSet(left, left + np.stack([w1, w2]))
    _, p = lwr_psd(both)
    np.testing.assert_allclose(p, 0.5 * (p1 + p2), rtol=1e-12)


def test_lwr_psd_requires_eight_rows():
    with pytest.raises(MetrologyError):
        lwr_psd(analytic_edges(np.full(6, 9.0)))


# -------------------------------------------------------------- psd_summary


def _report_with_psd(freq, power, pixel_size=1.0):
    return MetrologyReport(
        cd=10.0,
        cd_std=0.0,
        lwr=0.0,
        ler=0.0,
        psd_freq=np.asarray(freq, dtype=np.float64),
        psd_power=np.asarray(power, dtype=np.float64),
        pixel_size=pixel_size,
    )


def test_psd_summary_band_selection_hand_value():
    rep = _report_with_psd([0.005, 0.1, 0.3], [1.0, 100.0, 1.0])
    assert psd_summary(rep) == pytest.approx(2.0, abs=1e-12)


def test_psd_summary_floors_zero_power():
    rep = _report_with_psd([0.1], [0.0])
    assert psd_summary(rep) == pytest.approx(-30.0, abs=1e-12)


def test_psd_summary_band_in_sample_units():
    # physical freq 0.05 * pixel_size 2.0 = 0.1 cycles/sample: inside band
    rep = _report_with_psd([0.05], [10.0], pixel_size=2.0)
    assert psd_summary(rep) == pytest.approx(1.0, abs=1e-12)
    rep_out = _report_with_psd([0.05], [10.0], pixel_size=0.1)
    with pytest.raises(MetrologyError):
        psd_summary(rep_out)  # 0.005 cycles/sample: below the band


def test_default_band():
    assert DEFAULT_PSD_BAND == (0.01, 0.25)


# --------------------------------------------------- comparison, aggregation


def test_compare_reports_absolute_errors():
    a = _report_with_psd([0.1], [100.0])
    a = MetrologyReport(16.9, 1.0, 3.0, 2.0, a.psd_freq, a.psd_power)
    b = _report_with_psd([0.1], [10.0])
    b = MetrologyReport(16.3, 1.5, 2.0, 3.5, b.psd_freq, b.psd_power)
    err = compare_reports(a, b)
    assert err == {
        "cd": pytest.approx(0.6),
        "cd_std": pytest.approx(0.5),
        "lwr": pytest.approx(1.0),
        "ler": pytest.approx(1.5),
        "psd": pytest.approx(1.0),
    }


def test_roundtrip_report_dict():
    rep = _report_with_psd([0.1, 0.2], [1.0, 2.0], pixel_size=1.5)
    back = MetrologyReport.from_dict(rep.to_dict())
    assert back.cd == rep.cd and back.pixel_size == 1.5
    np.testing.assert_array_equal(back.psd_power, rep.psd_power)


def test_aggregate_errors_means_and_counts():
    s1 = {"cd": 0.6, "cd_std": 0.1, "lwr": 0.2, "ler": 0.3, "psd": 0.4}
    s2 = {"cd": 0.7, "cd_std": 0.3, "lwr": 0.4, "ler": 0.5, "psd": 0.6}
    out = aggregate_errors([s1, None, s2])
    assert out["cd_mae"] == pytest.approx(0.65)
    assert out["avg_mae"] == pytest.approx(np.mean([0.6, 0.1, 0.2, 0.3, 0.4, 0.7, 0.3, 0.4, 0.5, 0.6]))
    assert out["images"] == 3
    assert out["measured"] == 2
    assert out["unmeasurable"] == 1


def test_aggregate_errors_all_unmeasurable_raises():
    with pytest.raises(MetrologyError):
        aggregate_errors([None, None])
