import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowmotion.errors import InsufficientSamples, SingularDesign
from flowmotion.model import PixelCoord, QuadraticFlowModel, SamplePoint
from flowmotion.regression import lsre_fit, lsre_fit_linear, residual, sum_squared_residuals

from helpers import planted_samples, random_pixels

W, H = 854, 480


def test_six_points_interpolate_exactly(rng):
    planted = rng.normal(0, 10, (2, 6))
    xs, ys = random_pixels(rng, 6, W, H)
    pts = planted_samples(planted, W, H, xs, ys)
    m = lsre_fit(pts, (W, H))
    assert max(residual(m, p) for p in pts) <= 1e-9
    np.testing.assert_allclose(m.H, planted, rtol=1e-6)


def test_constant_flow_gives_constant_model(rng):
    xs, ys = random_pixels(rng, 20, W, H)
    pts = [SamplePoint(PixelCoord(int(x), int(y)), (2.5, -1.25)) for x, y in zip(xs, ys)]
    m = lsre_fit(pts, (W, H))
    assert m.H[:, 5] == pytest.approx([2.5, -1.25], abs=1e-9)
    assert np.abs(m.H[:, :5]).max() <= 1e-9


def test_noisy_fit_within_standard_error():
    """Monte-Carlo: every coefficient lands within 5 standard errors, 100 seeds."""
    sigma = 0.1
    for seed in range(100):
        rng = np.random.default_rng(seed)
        planted = rng.normal(0, 10, (2, 6))
        xs, ys = random_pixels(rng, 40, W, H)
        noise = rng.normal(0, sigma, (40, 2))
        pts = planted_samples(planted, W, H, xs, ys, offsets=noise)
        m = lsre_fit(pts, (W, H))
        # standard errors from the normalized design, computed independently of the solver
        xn = 2 * xs / (W - 1) - 1
        yn = 2 * ys / (H - 1) - 1
        A = np.column_stack([xn**2, yn**2, xn * yn, xn, yn, np.ones_like(xn)])
        se = sigma * np.sqrt(np.diag(np.linalg.inv(A.T @ A)))
        assert np.all(np.abs(m.H - planted) <= 5 * se[None, :]), seed


def test_collinear_points_are_singular():
    pts = [SamplePoint(PixelCoord(x, 2 * x), (1.0, 0.0)) for x in range(10)]
    with pytest.raises(SingularDesign):
        lsre_fit(pts, (W, H))


def test_too_few_points():
    pts = [SamplePoint(PixelCoord(x, x * x % 7), (0.0, 0.0)) for x in range(5)]
    with pytest.raises(InsufficientSamples):
        lsre_fit(pts, (W, H))
    with pytest.raises(InsufficientSamples):
        lsre_fit_linear(pts[:2], (W, H))


def test_linear_three_points_exact(rng):
    A = rng.normal(0, 4, (2, 3))
    coords = [(10, 20), (500, 40), (300, 400)]
    pts = []
    for x, y in coords:
        xn, yn = 2 * x / (W - 1) - 1, 2 * y / (H - 1) - 1
        u, v = A @ np.array([xn, yn, 1.0])
        pts.append(SamplePoint(PixelCoord(x, y), (u, v)))
    m = lsre_fit_linear(pts, (W, H))
    np.testing.assert_allclose(m.H, A, rtol=1e-9, atol=1e-12)
    assert max(residual(m, p) for p in pts) <= 1e-9


def test_linear_constant_flow(rng):
    xs, ys = random_pixels(rng, 10, W, H)
    pts = [SamplePoint(PixelCoord(int(x), int(y)), (-3.0, 8.0)) for x, y in zip(xs, ys)]
    m = lsre_fit_linear(pts, (W, H))
    np.testing.assert_allclose(m.H, [[0, 0, -3.0], [0, 0, 8.0]], atol=1e-9)


def test_linear_fit_worse_on_quadratic_field(rng):
    planted = np.zeros((2, 6))
    planted[0, 0] = 12.0
    planted[1, 1] = -7.0
    xs, ys = random_pixels(rng, 30, W, H)
    pts = planted_samples(planted, W, H, xs, ys)
    lin = sum_squared_residuals(lsre_fit_linear(pts, (W, H)), pts)
    quad = sum_squared_residuals(lsre_fit(pts, (W, H)), pts)
    assert lin > 0
    assert lin > quad


def test_residual_examples(rng):
    m0 = QuadraticFlowModel.zero(W, H)
    assert residual(m0, SamplePoint(PixelCoord(3, 3), (3.0, 4.0))) == 5.0
    planted = rng.normal(0, 10, (2, 6))
    xs, ys = random_pixels(rng, 12, W, H)
    pts = planted_samples(planted, W, H, xs, ys)
    m = lsre_fit(pts, (W, H))
    p = pts[0]
    assert residual(m, p) == pytest.approx(0.0, abs=1e-9)
    shifted = SamplePoint(p.coord, (p.flow[0] + 1.0, p.flow[1]))
    assert residual(m, shifted) == pytest.approx(1.0, abs=1e-9)


def test_fit_is_local_minimum(rng):
    planted = rng.normal(0, 10, (2, 6))
    xs, ys = random_pixels(rng, 40, W, H)
    pts = planted_samples(planted, W, H, xs, ys, offsets=rng.normal(0, 0.5, (40, 2)))
    m = lsre_fit(pts, (W, H))
    best = sum_squared_residuals(m, pts)
    for i in range(2):
        for j in range(6):
            for delta in (-1e-3, 1e-3):
                Hp = m.H.copy()
                Hp[i, j] += delta
                assert sum_squared_residuals(QuadraticFlowModel(Hp, m.norm), pts) >= best


def test_quadratic_objective_not_above_linear(rng):
    for _ in range(20):
        xs, ys = random_pixels(rng, 25, W, H)
        flows = rng.normal(0, 5, (25, 2))
        pts = [SamplePoint(PixelCoord(int(x), int(y)), tuple(f)) for x, y, f in zip(xs, ys, flows)]
        q = sum_squared_residuals(lsre_fit(pts, (W, H)), pts)
        lin = sum_squared_residuals(lsre_fit_linear(pts, (W, H)), pts)
        assert q <= lin * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-200, 200), st.integers(-100, 100))
def test_translation_invariance(seed, dx, dy):
    rng = np.random.default_rng(seed)
    xs, ys = random_pixels(rng, 20, 400, 300)
    xs = xs + 250
    ys = ys + 150
    flows = rng.normal(0, 5, (20, 2))
    pts = [SamplePoint(PixelCoord(int(x), int(y)), tuple(f)) for x, y, f in zip(xs, ys, flows)]
    moved = [SamplePoint(PixelCoord(p.coord.x + dx, p.coord.y + dy), p.flow) for p in pts]
    a = lsre_fit(pts, (W, H))
    b = lsre_fit(moved, (W, H))
    qx, qy = rng.uniform(250, 650, 10), rng.uniform(150, 450, 10)
    ua, va = a.evaluate(qx, qy)
    ub, vb = b.evaluate(qx + dx, qy + dy)
    scale = np.abs(np.concatenate([ua, va])).max() + 1
    np.testing.assert_allclose(ub, ua, rtol=1e-7, atol=1e-7 * scale)
    np.testing.assert_allclose(vb, va, rtol=1e-7, atol=1e-7 * scale)


def test_normalization_transparent_on_small_inputs(rng):
    """Fit in normalized coordinates vs a plain raw-pixel least-squares fit."""
    w, h = 12, 9
    xs, ys = random_pixels(rng, 15, w, h)
    flows = rng.normal(0, 3, (15, 2))
    pts = [SamplePoint(PixelCoord(int(x), int(y)), tuple(f)) for x, y, f in zip(xs, ys, flows)]
    m = lsre_fit(pts, (w, h))
    A = np.column_stack([xs**2, ys**2, xs * ys, xs, ys, np.ones(len(xs))]).astype(float)
    raw, *_ = np.linalg.lstsq(A, flows, rcond=None)
    yy, xx = np.mgrid[0:h, 0:w]
    Q = np.stack([xx**2, yy**2, xx * yy, xx, yy, np.ones_like(xx)], axis=-1).astype(float)
    want = Q @ raw
    gu, gv = m.evaluate_grid(w, h)
    np.testing.assert_allclose(gu, want[..., 0], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(gv, want[..., 1], rtol=1e-9, atol=1e-9)
