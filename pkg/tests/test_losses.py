"""Loss and metric tests: SSIM reference values, analytic-gradient FD
oracles, PSNR closed forms, and Adam behavior."""
import numpy as np
import pytest

from procsplat.losses import ImageShapeError, loss, psnr, ssim, ssim_with_grad
from procsplat.optim import Adam, exponential_lr


def test_ssim_of_identical_images_is_one():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, size=(32, 32, 3))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_is_symmetric():
    rng = np.random.default_rng(1)
    a = rng.uniform(0, 1, size=(24, 24))
    b = rng.uniform(0, 1, size=(24, 24))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_constant_images_closed_form():
    # constant images have zero variance, so only the luminance term remains
    p, q = 0.5, 0.25
    a = np.full((20, 20), p)
    b = np.full((20, 20), q)
    c1 = 0.01 ** 2
    expected = (2 * p * q + c1) / (p * p + q * q + c1)
    assert ssim(a, b) == pytest.approx(expected, abs=1e-12)


def test_ssim_in_range_and_penalizes_noise():
    rng = np.random.default_rng(2)
    x = rng.uniform(0.2, 0.8, size=(32, 32))
    noisy = np.clip(x + rng.normal(0, 0.2, size=x.shape), 0, 1)
    v = ssim(x, noisy)
    assert -1.0 <= v <= 1.0
    assert v < ssim(x, x)


def test_ssim_rejects_mismatched_or_tiny_images():
    with pytest.raises(ImageShapeError):
        ssim(np.zeros((16, 16)), np.zeros((16, 17)))
    with pytest.raises(ImageShapeError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


@pytest.mark.parametrize("shape", [(18, 22), (16, 16, 3)])
def test_ssim_gradient_matches_finite_differences(shape):
    rng = np.random.default_rng(3)
    a = rng.uniform(0.1, 0.9, size=shape)
    b = rng.uniform(0.1, 0.9, size=shape)
    _, grad = ssim_with_grad(a, b)
    h = 1e-6
    flat = a.reshape(-1)
    for k in rng.choice(flat.size, size=24, replace=False):
        orig = flat[k]
        flat[k] = orig + h
        up = ssim(a, b)
        flat[k] = orig - h
        dn = ssim(a, b)
        flat[k] = orig
        fd = (up - dn) / (2 * h)
        assert grad.reshape(-1)[k] == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_loss_identical_images_is_zero_with_zero_gradient():
    x = np.random.default_rng(4).uniform(0, 1, size=(16, 16, 3))
    value, grad = loss(x, x.copy())
    assert value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


def test_loss_l1_term_reads_mean_absolute_error():
    x = np.full((16, 16, 3), 0.4)
    value, _ = loss(x + 0.1, x, lambda_ssim=0.0)
    assert value == pytest.approx(0.1, abs=1e-12)


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    rendered = rng.uniform(0.1, 0.9, size=(16, 16, 3))
    target = rng.uniform(0.1, 0.9, size=(16, 16, 3))
    _, grad = loss(rendered, target, lambda_ssim=0.2)
    h = 1e-6
    flat = rendered.reshape(-1)
    for k in rng.choice(flat.size, size=24, replace=False):
        orig = flat[k]
        flat[k] = orig + h
        up, _ = loss(rendered, target, lambda_ssim=0.2)
        flat[k] = orig - h
        dn, _ = loss(rendered, target, lambda_ssim=0.2)
        flat[k] = orig
        fd = (up - dn) / (2 * h)
        assert grad.reshape(-1)[k] == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_psnr_closed_forms():
    a = np.zeros((10, 10))
    assert psnr(a, a) == float("inf")
    b = np.full((10, 10), 0.1)  # MSE exactly 0.01
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 1, size=(12, 12, 3))
    y = rng.uniform(0, 1, size=(12, 12, 3))
    assert psnr(x, y) == pytest.approx(-10 * np.log10(np.mean((x - y) ** 2)), abs=1e-12)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def test_adam_first_step_moves_by_learning_rate():
    opt = Adam()
    p = np.array([1.0, -2.0, 0.5])
    g = np.array([0.3, -0.7, 0.0])
    opt.step("p", p, g, lr=0.1)
    # after bias correction the first step is lr * sign(grad) (eps aside)
    np.testing.assert_allclose(p, [1.0 - 0.1, -2.0 + 0.1, 0.5], atol=1e-6)


def test_adam_descends_a_quadratic():
    opt = Adam()
    p = np.array([4.0, -3.0])
    for _ in range(300):
        opt.step("p", p, 2.0 * p, lr=0.05)
    assert np.abs(p).max() < 1e-2


def test_adam_resize_tracks_prune_and_append():
    opt = Adam()
    p = np.ones((4, 3))
    opt.step("p", p, np.ones((4, 3)), lr=0.01)
    keep = np.array([True, False, True, True])
    p = np.concatenate([p[keep], np.zeros((2, 3))])
    opt.resize("p", keep=keep, extra=2)
    opt.step("p", p, np.ones((5, 3)), lr=0.01)  # shape accepted after resize
    st = opt.state["p"]
    assert st.m.shape == (5, 3)
    np.testing.assert_array_equal(st.m[3:] != 0, True)  # fresh rows got grads


def test_adam_rejects_stale_state_shape():
    opt = Adam()
    p = np.ones((4, 3))
    opt.step("p", p, np.ones((4, 3)), lr=0.01)
    with pytest.raises(ValueError, match="resize"):
        opt.step("p", np.ones((5, 3)), np.ones((5, 3)), lr=0.01)


def test_exponential_lr_endpoints_and_monotonicity():
    assert exponential_lr(0, 1e-2, 1e-4, 100) == pytest.approx(1e-2)
    assert exponential_lr(100, 1e-2, 1e-4, 100) == pytest.approx(1e-4)
    assert exponential_lr(50, 1e-2, 1e-4, 100) == pytest.approx(1e-3)
    vals = [exponential_lr(t, 1e-2, 1e-4, 100) for t in range(0, 101, 10)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
