"""Shared synthetic-image builders plus the acceptance-gate reporter."""

import numpy as np
import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance gate")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sinusoid_grating(height, width, cycles, mean=0.5, amplitude=0.3, vertical=True):
    """Mirror-even cosine grating: cos(pi * m * u / (n-1)) stripes.

    The mirror symmetry makes the pattern consistent with reflect-padded
    convolution, so deconvolution oracles see no boundary surprises.
    """
    n = width if vertical else height
    u = np.arange(n)
    wave = mean + amplitude * np.cos(np.pi * cycles * u / (n - 1))
    if vertical:
        return np.tile(wave, (height, 1))
    return np.tile(wave[:, None], (1, width))


def binary_grating(height, width, line_width, pitch, lo=0.1, hi=0.9, first_center=None):
    """Bright vertical lines with hard edges at half-integer columns."""
    img = np.full((height, width), lo)
    c = (pitch // 2) if first_center is None else first_center
    while c + line_width / 2 < width:
        left = int(np.ceil(c - line_width / 2))
        img[:, left : left + line_width] = hi
        c += pitch
    return img


def render_lines(height, width, centers_fn, width_fn, ramp=2.0, lo=0.1, hi=0.9):
    """Vertical bright lines whose edges ramp linearly over ``ramp`` px.

    centers_fn(row) -> iterable of line centers; width_fn(row) -> width.
    Intensity crosses the (lo+hi)/2 midpoint exactly at the geometric edge,
    so sub-pixel edge oracles are exact wherever the threshold is the
    midpoint.
    """
    img = np.full((height, width), lo)
    u = np.arange(width)
    for r in range(height):
        row = np.full(width, lo)
        wd = width_fn(r)
        for c in centers_fn(r):
            left, right = c - wd / 2.0, c + wd / 2.0
            prof = np.clip((u - left) / ramp + 0.5, 0, 1) * np.clip(
                (right - u) / ramp + 0.5, 0, 1
            )
            row = np.maximum(row, lo + (hi - lo) * prof)
        img[r] = row
    return img


def even_phase(n_rows, cycles):
    """Cosine even about the row center: invisible to linear detrending."""
    r = np.arange(n_rows)
    return np.cos(2 * np.pi * cycles * (r - (n_rows - 1) / 2) / n_rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
