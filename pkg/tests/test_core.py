"""Oracles and property tests for Gaussian math, SH and projection."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procsplat.core import (
    Camera,
    Gaussian3D,
    InvalidParameterError,
    covariance3d,
    eval_density,
    normalize_vjp,
    project,
    quat_left_matrix,
    quat_multiply,
    quat_normalize,
    quat_to_rotmat,
    rotmat_to_quat,
    rotmat_vjp,
    sh_basis,
    sh_basis_dir_grad,
    sh_coeff_count,
    sh_color,
    sigmoid,
)


def unit_quats():
    return (
        st.tuples(*([st.floats(-1, 1)] * 4))
        .map(np.array)
        .filter(lambda q: np.linalg.norm(q) > 1e-3)
        .map(lambda q: q / np.linalg.norm(q))
    )


def make_gaussian(position=(0, 0, 0), rotation=(1, 0, 0, 0), log_scale=(0, 0, 0),
                  opacity_logit=0.0, sh=None):
    if sh is None:
        sh = np.zeros((1, 3))
    return Gaussian3D(np.array(position, dtype=float), np.array(rotation, dtype=float),
                      np.array(log_scale, dtype=float), opacity_logit, np.asarray(sh, dtype=float))


# ---------------------------------------------------------------------------
# covariance
# ---------------------------------------------------------------------------

def test_covariance_identity():
    assert np.allclose(covariance3d(np.array([1.0, 0, 0, 0]), np.ones(3)), np.eye(3))


def test_covariance_axis_aligned_scales():
    s = np.array([0.5, 2.0, 3.0])
    assert np.allclose(covariance3d(np.array([1.0, 0, 0, 0]), s), np.diag(s**2))


def test_covariance_z_rotation_swaps_xy():
    # 90 degrees about z maps the x scale axis onto y
    q = np.array([np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)])
    s = np.array([0.5, 2.0, 3.0])
    expected = np.diag([s[1] ** 2, s[0] ** 2, s[2] ** 2])
    assert np.allclose(covariance3d(q, s), expected, atol=1e-12)


@given(q=unit_quats(),
       ls=st.tuples(*([st.floats(-3, 3)] * 3)).map(np.array))
def test_covariance_symmetric_psd(q, ls):
    cov = covariance3d(q, np.exp(ls))
    assert np.allclose(cov, cov.T)
    eig = np.linalg.eigvalsh(cov)
    assert np.all(eig >= -1e-12 * max(1.0, eig.max()))


@given(q=unit_quats(), scale=st.floats(0.1, 4.0))
def test_covariance_quaternion_sign_and_norm_invariance(q, scale):
    s = np.array([0.3, 1.0, 2.0])
    base = covariance3d(q, s)
    assert np.allclose(covariance3d(-q, s), base, atol=1e-12)
    assert np.allclose(covariance3d(q * scale, s), base, atol=1e-10)


def test_covariance_rejects_nonpositive_scale():
    with pytest.raises(InvalidParameterError):
        covariance3d(np.array([1.0, 0, 0, 0]), np.array([1.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def test_density_center_is_one():
    g = make_gaussian(position=(1, 2, 3), log_scale=np.log([0.2, 0.5, 1.5]))
    assert eval_density(g, np.array([1.0, 2.0, 3.0])) == pytest.approx(1.0)


def test_density_at_unit_mahalanobis():
    s = np.array([0.2, 0.5, 1.5])
    g = make_gaussian(log_scale=np.log(s))
    for axis in range(3):
        x = np.zeros(3)
        x[axis] = s[axis]
        assert eval_density(g, x) == pytest.approx(np.exp(-0.5), rel=1e-12)


@given(q=unit_quats())
def test_density_frame_equivariance(q):
    # rotating Gaussian and query point together leaves the density unchanged
    s = np.array([0.2, 0.5, 1.5])
    x = np.array([0.1, -0.3, 0.7])
    g0 = make_gaussian(log_scale=np.log(s))
    g1 = make_gaussian(rotation=q, log_scale=np.log(s))
    R = quat_to_rotmat(q)
    assert eval_density(g1, R @ x) == pytest.approx(eval_density(g0, x), rel=1e-9)


# ---------------------------------------------------------------------------
# quaternion utilities
# ---------------------------------------------------------------------------

@given(a=unit_quats(), b=unit_quats())
def test_quat_multiply_matches_rotation_composition(a, b):
    assert np.allclose(quat_to_rotmat(quat_multiply(a, b)),
                       quat_to_rotmat(a) @ quat_to_rotmat(b), atol=1e-10)


@given(a=unit_quats(), b=unit_quats())
def test_quat_left_matrix(a, b):
    assert np.allclose(quat_left_matrix(a) @ b, quat_multiply(a, b), atol=1e-12)


@given(q=unit_quats())
def test_rotmat_quat_round_trip(q):
    q2 = rotmat_to_quat(quat_to_rotmat(q))
    # round trip is up to sign
    assert np.allclose(q2, q, atol=1e-9) or np.allclose(q2, -q, atol=1e-9)


def test_rotation_vjp_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(10):
        q = rng.normal(size=4)
        G = rng.normal(size=(3, 3))
        qh = q / np.linalg.norm(q)
        analytic = normalize_vjp(q, rotmat_vjp(qh, G))
        eps = 1e-6
        fd = np.zeros(4)
        for k in range(4):
            dq = np.zeros(4)
            dq[k] = eps
            fp = np.sum(G * quat_to_rotmat(q + dq))
            fm = np.sum(G * quat_to_rotmat(q - dq))
            fd[k] = (fp - fm) / (2 * eps)
        assert np.allclose(analytic, fd, atol=1e-6)


def test_normalize_vjp_matches_finite_differences():
    rng = np.random.default_rng(11)
    v = rng.normal(size=3) * 2
    g = rng.normal(size=3)
    analytic = normalize_vjp(v, g)
    eps = 1e-7
    fd = np.zeros(3)
    for k in range(3):
        dv = np.zeros(3)
        dv[k] = eps
        fd[k] = (g @ ((v + dv) / np.linalg.norm(v + dv))
                 - g @ ((v - dv) / np.linalg.norm(v - dv))) / (2 * eps)
    assert np.allclose(analytic, fd, atol=1e-6)


def test_quat_normalize_rejects_zero():
    with pytest.raises(InvalidParameterError):
        quat_normalize(np.zeros(4))


# ---------------------------------------------------------------------------
# spherical harmonics
# ---------------------------------------------------------------------------

def scipy_real_sh(l, m, d):
    """Independent real-SH oracle built on scipy's complex harmonics."""
    az = np.arctan2(d[1], d[0])
    pol = np.arccos(np.clip(d[2], -1, 1))
    try:
        from scipy.special import sph_harm_y
        Y = sph_harm_y(l, abs(m), pol, az)
    except ImportError:
        from scipy.special import sph_harm
        Y = sph_harm(abs(m), l, az, pol)
    if m == 0:
        return float(np.real(Y))
    if m > 0:
        return float(np.sqrt(2) * (-1) ** m * np.real(Y))
    return float(np.sqrt(2) * (-1) ** m * np.imag(Y))


SH_INDEX_TO_LM = [(0, 0), (1, -1), (1, 0), (1, 1), (2, -2), (2, -1), (2, 0), (2, 1), (2, 2)]


def test_sh_basis_matches_scipy_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        basis = sh_basis(d, 2)
        for idx, (l, m) in enumerate(SH_INDEX_TO_LM):
            assert basis[idx] == pytest.approx(scipy_real_sh(l, m, d), abs=1e-10)


def test_sh_degree0_is_view_independent_gray():
    g = np.zeros((1, 3))
    for d in (np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), np.array([0, -1.0, 0])):
        assert np.allclose(sh_color(g, d), 0.5)


def test_sh_dc_recovers_target_color():
    # coefficient c/C0 with the 0.5 offset convention reproduces color c
    target = np.array([0.8, 0.3, 0.1])
    coeffs = ((target - 0.5) / sh_basis(np.array([0, 0, 1.0]), 0)[0])[None, :]
    assert np.allclose(sh_color(coeffs, np.array([0.0, 1.0, 0.0])), target)


def test_sh_color_varies_with_view_for_degree1():
    sh = np.zeros((4, 3))
    sh[3, 0] = 1.0  # x-linear band on red
    cx = sh_color(sh, np.array([1.0, 0, 0]))
    cz = sh_color(sh, np.array([0, 0, 1.0]))
    assert cx[0] != pytest.approx(cz[0])
    assert cx[1] == pytest.approx(cz[1])


def test_sh_color_rejects_non_unit_direction():
    with pytest.raises(InvalidParameterError):
        sh_color(np.zeros((1, 3)), np.array([1.0, 1.0, 0.0]))


def test_sh_basis_dir_grad_matches_fd():
    rng = np.random.default_rng(5)
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    G = sh_basis_dir_grad(d, 2)
    eps = 1e-6
    for k in range(3):
        dd = np.zeros(3)
        dd[k] = eps
        fd = (sh_basis(d + dd, 2) - sh_basis(d - dd, 2)) / (2 * eps)
        assert np.allclose(G[:, k], fd, atol=1e-8)


def test_sh_coeff_counts():
    assert [sh_coeff_count(d) for d in range(3)] == [1, 4, 9]


# ---------------------------------------------------------------------------
# camera and projection
# ---------------------------------------------------------------------------

def front_camera(fx=100.0, fy=100.0, cx=50.0, cy=50.0, w=100, h=100):
    return Camera(np.eye(4), fx, fy, cx, cy, w, h)


def test_camera_rejects_sheared_rotation():
    m = np.eye(4)
    m[0, 1] = 0.01
    with pytest.raises(InvalidParameterError):
        Camera(m, 100, 100, 50, 50, 100, 100)


def test_camera_center():
    R = quat_to_rotmat(np.array([np.cos(0.3), 0, np.sin(0.3), 0]))
    c = np.array([1.0, -2.0, 3.0])
    m = np.eye(4)
    m[:3, :3] = R
    m[:3, 3] = -R @ c
    cam = Camera(m, 100, 100, 50, 50, 100, 100)
    assert np.allclose(cam.center(), c, atol=1e-12)


def test_project_on_axis_hits_principal_point():
    g = make_gaussian(position=(0, 0, 5.0), log_scale=np.log([0.1, 0.1, 0.1]))
    out = project(g, front_camera())
    assert out is not None
    assert np.allclose(out.mean2d, [50.0, 50.0])
    assert out.depth == pytest.approx(5.0)


def test_project_isotropic_cov2d():
    # on axis, an isotropic splat lands as (f*sigma/z)^2 plus the low-pass floor
    sigma, z, f = 0.1, 5.0, 100.0
    g = make_gaussian(position=(0, 0, z), log_scale=np.log([sigma] * 3))
    out = project(g, front_camera(fx=f, fy=f))
    expected = (f * sigma / z) ** 2
    assert np.allclose(out.cov2d, np.diag([expected + 0.3, expected + 0.3]), atol=1e-9)


def test_project_culls_behind_camera():
    g = make_gaussian(position=(0, 0, -1.0))
    assert project(g, front_camera()) is None
    g_near = make_gaussian(position=(0, 0, 0.5e-2))
    assert project(g_near, front_camera()) is None


def test_project_off_axis_pinhole_mean():
    g = make_gaussian(position=(1.0, -2.0, 4.0))
    out = project(g, front_camera())
    assert np.allclose(out.mean2d, [100 * 1.0 / 4.0 + 50, 100 * -2.0 / 4.0 + 50])


def test_project_alpha_is_sigmoid_of_logit():
    g = make_gaussian(position=(0, 0, 5.0), opacity_logit=0.7)
    out = project(g, front_camera())
    assert out.alpha == pytest.approx(sigmoid(0.7))


def test_project_color_clamped_to_unit_range():
    sh = np.zeros((1, 3))
    sh[0, 0] = 10.0  # drives red far above 1 before the clamp
    sh[0, 2] = -10.0
    g = make_gaussian(position=(0, 0, 5.0), sh=sh)
    out = project(g, front_camera())
    assert out.color[0] == pytest.approx(1.0)
    assert out.color[2] == pytest.approx(0.0)


@settings(max_examples=30)
@given(q=unit_quats())
def test_project_world_rotation_equivariance(q):
    # rotating the world and the camera together leaves the image unchanged
    R = quat_to_rotmat(q)
    g = make_gaussian(position=(0.3, -0.2, 5.0), rotation=(0.9, 0.1, 0.3, -0.2),
                      log_scale=np.log([0.1, 0.2, 0.3]))
    m = np.eye(4)
    m[:3, :3] = R.T
    cam_rot = Camera(m, 100, 100, 50, 50, 100, 100)
    g_rot = Gaussian3D(R @ g.position, quat_multiply(rotmat_to_quat(R), g.rotation),
                       g.log_scale, g.opacity_logit, g.sh)
    a = project(g, front_camera())
    b = project(g_rot, cam_rot)
    assert np.allclose(a.mean2d, b.mean2d, atol=1e-8)
    assert np.allclose(a.cov2d, b.cov2d, atol=1e-8)
    assert a.depth == pytest.approx(b.depth)


def test_gaussian3d_rejects_nan():
    with pytest.raises(InvalidParameterError):
        make_gaussian(position=(np.nan, 0, 0))
