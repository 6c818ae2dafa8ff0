"""Value types and math for 3D Gaussians, cameras, spherical harmonics and projection.

Everything here is pure and operates on float64 numpy arrays. Batched helpers
(the ``*_batch`` functions) are the workhorses of the renderer; the scalar
entry points mirror them one Gaussian at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    1.0925484305920792,
    0.31539156525252005,
    1.0925484305920792,
    0.5462742152960396,
)

MAX_SH_DEGREE = 2


class InvalidParameterError(ValueError):
    """Raised when a numeric argument violates an operation's preconditions."""


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def sh_coeff_count(degree: int) -> int:
    if not 0 <= degree <= MAX_SH_DEGREE:
        raise InvalidParameterError(f"SH degree must be in [0, {MAX_SH_DEGREE}], got {degree}")
    return (degree + 1) ** 2


def degree_for_coeff_count(n_coeffs: int) -> int:
    for deg in range(MAX_SH_DEGREE + 1):
        if (deg + 1) ** 2 == n_coeffs:
            return deg
    raise InvalidParameterError(f"{n_coeffs} is not a valid SH coefficient count")


# ---------------------------------------------------------------------------
# quaternions (w, x, y, z)
# ---------------------------------------------------------------------------

def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n == 0) or not np.all(np.isfinite(n)):
        raise InvalidParameterError("cannot normalize zero or non-finite quaternion")
    return q / n


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion. Batched over leading dims."""
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - w * z)
    R[..., 0, 2] = 2 * (x * z + w * y)
    R[..., 1, 0] = 2 * (x * y + w * z)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - w * x)
    R[..., 2, 0] = 2 * (x * z - w * y)
    R[..., 2, 1] = 2 * (y * z + w * x)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b, batched over leading dims."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_left_matrix(q: np.ndarray) -> np.ndarray:
    """Matrix L(q) with L(q) @ p == quat_multiply(q, p)."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def rotmat_to_quat(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w>=0) for a rotation matrix. Shepperd's method."""
    R = np.asarray(R, dtype=np.float64)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def rotmat_vjp(q_unit: np.ndarray, grad_R: np.ndarray) -> np.ndarray:
    """d<grad_R, R(q)> / dq for unit quaternions, batched over leading dims."""
    q = np.asarray(q_unit, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    G = grad_R
    zero = np.zeros_like(w)
    # dR/dw etc. contracted against grad_R entry by entry
    dw = 2 * (
        -z * G[..., 0, 1] + y * G[..., 0, 2]
        + z * G[..., 1, 0] - x * G[..., 1, 2]
        - y * G[..., 2, 0] + x * G[..., 2, 1]
    )
    dx = 2 * (
        y * G[..., 0, 1] + z * G[..., 0, 2]
        + y * G[..., 1, 0] - 2 * x * G[..., 1, 1] - w * G[..., 1, 2]
        + z * G[..., 2, 0] + w * G[..., 2, 1] - 2 * x * G[..., 2, 2]
    )
    dy = 2 * (
        -2 * y * G[..., 0, 0] + x * G[..., 0, 1] + w * G[..., 0, 2]
        + x * G[..., 1, 0] + z * G[..., 1, 2]
        - w * G[..., 2, 0] + z * G[..., 2, 1] - 2 * y * G[..., 2, 2]
    )
    dz = 2 * (
        -2 * z * G[..., 0, 0] - w * G[..., 0, 1] + x * G[..., 0, 2]
        + w * G[..., 1, 0] - 2 * z * G[..., 1, 1] + y * G[..., 1, 2]
        + x * G[..., 2, 0] + y * G[..., 2, 1]
    )
    del zero
    return np.stack([dw, dx, dy, dz], axis=-1)


def normalize_vjp(v: np.ndarray, grad_unit: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. v/|v| back to v. Batched over leading dims."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    u = v / n
    dot = np.sum(u * grad_unit, axis=-1, keepdims=True)
    return (grad_unit - u * dot) / n


# ---------------------------------------------------------------------------
# Gaussian value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Gaussian3D:
    """One splat: center, orientation, per-axis log scale, opacity logit, SH color."""

    position: np.ndarray      # (3,)
    rotation: np.ndarray      # (4,) quaternion, stored unnormalized
    log_scale: np.ndarray     # (3,)
    opacity_logit: float
    sh: np.ndarray            # (B, 3) coefficients per color channel

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "log_scale", np.asarray(self.log_scale, dtype=np.float64))
        object.__setattr__(self, "sh", np.asarray(self.sh, dtype=np.float64))
        for name in ("position", "rotation", "log_scale", "sh"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidParameterError(f"non-finite {name}")
        degree_for_coeff_count(self.sh.shape[0])

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.log_scale)

    @property
    def opacity(self) -> float:
        return float(sigmoid(self.opacity_logit))


def covariance3d(rotation: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Σ = R·diag(s)²·Rᵀ from a (possibly unnormalized) quaternion and positive scales."""
    rotation = np.asarray(rotation, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(scale))):
        raise InvalidParameterError("non-finite rotation or scale")
    if np.any(scale <= 0):
        raise InvalidParameterError("scale components must be positive")
    R = quat_to_rotmat(rotation)
    M = R * scale[..., None, :]
    return M @ np.swapaxes(M, -1, -2)


def eval_density(g: Gaussian3D, x: np.ndarray) -> float:
    """Unnormalized Gaussian density exp(-½ (x-µ)ᵀ Σ⁻¹ (x-µ)); 1 at the center."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("non-finite query point")
    R = quat_to_rotmat(g.rotation)
    s = g.scale
    d_local = R.T @ (x - g.position)
    m = np.sum((d_local / s) ** 2)
    return float(np.exp(-0.5 * m))


# ---------------------------------------------------------------------------
# spherical harmonics (real basis, standard table)
# ---------------------------------------------------------------------------

def sh_basis(dirs: np.ndarray, degree: int) -> np.ndarray:
    """Real SH basis values for unit directions, shape (..., (degree+1)²)."""
    dirs = np.asarray(dirs, dtype=np.float64)
    n = sh_coeff_count(degree)
    B = np.empty(dirs.shape[:-1] + (n,), dtype=np.float64)
    B[..., 0] = SH_C0
    if degree >= 1:
        x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
        B[..., 1] = SH_C1 * y
        B[..., 2] = SH_C1 * z
        B[..., 3] = SH_C1 * x
    if degree >= 2:
        B[..., 4] = SH_C2[0] * x * y
        B[..., 5] = SH_C2[1] * y * z
        B[..., 6] = SH_C2[2] * (3 * z * z - 1.0)
        B[..., 7] = SH_C2[3] * x * z
        B[..., 8] = SH_C2[4] * (x * x - y * y)
    return B


def sh_basis_dir_grad(dirs: np.ndarray, degree: int) -> np.ndarray:
    """∂basis/∂dir for each basis function, shape (..., B, 3)."""
    dirs = np.asarray(dirs, dtype=np.float64)
    n = sh_coeff_count(degree)
    G = np.zeros(dirs.shape[:-1] + (n, 3), dtype=np.float64)
    if degree >= 1:
        x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
        G[..., 1, 1] = SH_C1
        G[..., 2, 2] = SH_C1
        G[..., 3, 0] = SH_C1
    if degree >= 2:
        G[..., 4, 0] = SH_C2[0] * y
        G[..., 4, 1] = SH_C2[0] * x
        G[..., 5, 1] = SH_C2[1] * z
        G[..., 5, 2] = SH_C2[1] * y
        G[..., 6, 2] = SH_C2[2] * 6 * z
        G[..., 7, 0] = SH_C2[3] * z
        G[..., 7, 2] = SH_C2[3] * x
        G[..., 8, 0] = SH_C2[4] * 2 * x
        G[..., 8, 1] = -SH_C2[4] * 2 * y
    return G


def sh_color(sh: np.ndarray, view_dir: np.ndarray) -> np.ndarray:
    """View-dependent RGB from SH coefficients; 0.5 DC offset convention, unclamped."""
    sh = np.asarray(sh, dtype=np.float64)
    view_dir = np.asarray(view_dir, dtype=np.float64)
    degree = degree_for_coeff_count(sh.shape[-2])
    if not np.allclose(np.linalg.norm(view_dir, axis=-1), 1.0, atol=1e-6):
        raise InvalidParameterError("view_dir must be a unit vector")
    basis = sh_basis(view_dir, degree)
    return 0.5 + np.einsum("...b,...bc->...c", basis, sh)


# ---------------------------------------------------------------------------
# bulk storage (struct of arrays)
# ---------------------------------------------------------------------------

@dataclass
class GaussianSet:
    """A batch of Gaussians stored column-wise; the unit every pipeline stage moves."""

    positions: np.ndarray      # (N, 3)
    rotations: np.ndarray      # (N, 4)
    log_scales: np.ndarray     # (N, 3)
    opacity_logits: np.ndarray  # (N,)
    sh: np.ndarray             # (N, B, 3)

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float64)
        self.log_scales = np.ascontiguousarray(self.log_scales, dtype=np.float64)
        self.opacity_logits = np.ascontiguousarray(self.opacity_logits, dtype=np.float64)
        self.sh = np.ascontiguousarray(self.sh, dtype=np.float64)
        n = self.positions.shape[0]
        if not (
            self.positions.shape == (n, 3)
            and self.rotations.shape == (n, 4)
            and self.log_scales.shape == (n, 3)
            and self.opacity_logits.shape == (n,)
            and self.sh.ndim == 3
            and self.sh.shape[0] == n
            and self.sh.shape[2] == 3
        ):
            raise InvalidParameterError("inconsistent GaussianSet field shapes")
        degree_for_coeff_count(self.sh.shape[1])

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def sh_degree(self) -> int:
        return degree_for_coeff_count(self.sh.shape[1])

    @classmethod
    def empty(cls, sh_degree: int = 1) -> "GaussianSet":
        b = sh_coeff_count(sh_degree)
        return cls(
            np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 3)), np.zeros((0,)), np.zeros((0, b, 3))
        )

    @classmethod
    def from_gaussians(cls, gaussians: "list[Gaussian3D]") -> "GaussianSet":
        if not gaussians:
            return cls.empty()
        return cls(
            np.stack([g.position for g in gaussians]),
            np.stack([g.rotation for g in gaussians]),
            np.stack([g.log_scale for g in gaussians]),
            np.array([g.opacity_logit for g in gaussians], dtype=np.float64),
            np.stack([g.sh for g in gaussians]),
        )

    def __getitem__(self, i: int) -> Gaussian3D:
        return Gaussian3D(
            self.positions[i], self.rotations[i], self.log_scales[i],
            float(self.opacity_logits[i]), self.sh[i],
        )

    def take(self, idx) -> "GaussianSet":
        return GaussianSet(
            self.positions[idx], self.rotations[idx], self.log_scales[idx],
            self.opacity_logits[idx], self.sh[idx],
        )

    def copy(self) -> "GaussianSet":
        return GaussianSet(
            self.positions.copy(), self.rotations.copy(), self.log_scales.copy(),
            self.opacity_logits.copy(), self.sh.copy(),
        )

    @staticmethod
    def concat(sets: "list[GaussianSet]") -> "GaussianSet":
        sets = [s for s in sets]
        if not sets:
            return GaussianSet.empty()
        return GaussianSet(
            np.concatenate([s.positions for s in sets]),
            np.concatenate([s.rotations for s in sets]),
            np.concatenate([s.log_scales for s in sets]),
            np.concatenate([s.opacity_logits for s in sets]),
            np.concatenate([s.sh for s in sets]),
        )

    def n_parameters(self) -> int:
        return (
            self.positions.size + self.rotations.size + self.log_scales.size
            + self.opacity_logits.size + self.sh.size
        )


# ---------------------------------------------------------------------------
# cameras and projection
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Camera:
    """Calibrated pinhole camera: 4×4 world→camera rigid transform plus intrinsics."""

    world_to_camera: np.ndarray  # (4, 4)
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        m = np.asarray(self.world_to_camera, dtype=np.float64)
        if m.shape != (4, 4) or not np.all(np.isfinite(m)):
            raise InvalidParameterError("world_to_camera must be a finite 4x4 matrix")
        R = m[:3, :3]
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise InvalidParameterError("world_to_camera rotation block is not orthonormal")
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidParameterError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameterError("image dimensions must be positive")
        object.__setattr__(self, "world_to_camera", m)

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:3, 3]

    def center(self) -> np.ndarray:
        """Camera origin in world coordinates."""
        return -self.rotation.T @ self.translation

    def to_json(self) -> dict:
        return {
            "world_to_camera": [float(v) for v in self.world_to_camera.reshape(-1)],
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Camera":
        m = np.array(d["world_to_camera"], dtype=np.float64).reshape(4, 4)
        return cls(m, float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))

    @classmethod
    def look_at(cls, eye, target, fx: float, width: int, height: int,
                fy: float | None = None, up=(0.0, 0.0, 1.0)) -> "Camera":
        """Camera at ``eye`` looking toward ``target`` (+x right, +y down, +z forward)."""
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up = np.asarray(up, dtype=np.float64)
        forward = target - eye
        n = np.linalg.norm(forward)
        if n < 1e-12:
            raise InvalidParameterError("eye and target coincide")
        forward = forward / n
        right = np.cross(forward, up)
        rn = np.linalg.norm(right)
        if rn < 1e-12:
            raise InvalidParameterError("view direction is parallel to up")
        right = right / rn
        down = np.cross(forward, right)
        R = np.stack([right, down, forward])
        m = np.eye(4)
        m[:3, :3] = R
        m[:3, 3] = -R @ eye
        return cls(m, fx, fy if fy is not None else fx,
                   width / 2.0, height / 2.0, width, height)


@dataclass(frozen=True, eq=False)
class Gaussian2D:
    """A splat on the image plane: projected mean, 2D covariance, color, alpha, depth."""

    mean2d: np.ndarray   # (2,) pixels
    cov2d: np.ndarray    # (2, 2) pixels²
    color: np.ndarray    # (3,) in [0, 1]
    alpha: float         # activated opacity in (0, 1)
    depth: float         # camera-space z, meters


LOW_PASS_EPS = 0.3  # pixel² floor added to projected covariances


def project(g: Gaussian3D, cam: Camera, eps2d: float = LOW_PASS_EPS,
            z_near: float = 0.01, inst_rotation: np.ndarray | None = None):
    """Project one Gaussian through the EWA first-order model.

    Returns a Gaussian2D, or None when the center is behind the near plane
    (the culled marker). ``inst_rotation`` rotates the SH view query into the
    asset frame when the Gaussian is an instanced copy.
    """
    W = cam.rotation
    t = W @ g.position + cam.translation
    if t[2] <= z_near:
        return None
    inv_z = 1.0 / t[2]
    mean2d = np.array([cam.fx * t[0] * inv_z + cam.cx, cam.fy * t[1] * inv_z + cam.cy])
    J = np.array(
        [
            [cam.fx * inv_z, 0.0, -cam.fx * t[0] * inv_z * inv_z],
            [0.0, cam.fy * inv_z, -cam.fy * t[1] * inv_z * inv_z],
        ]
    )
    U = J @ W
    cov = U @ covariance3d(g.rotation, g.scale) @ U.T + eps2d * np.eye(2)
    v = g.position - cam.center()
    d = v / np.linalg.norm(v)
    if inst_rotation is not None:
        d = np.asarray(inst_rotation, dtype=np.float64).T @ d
    color = np.clip(sh_color(g.sh, d), 0.0, 1.0)
    return Gaussian2D(mean2d=mean2d, cov2d=cov, color=color, alpha=g.opacity, depth=float(t[2]))


__all__ = [
    "Camera",
    "Gaussian2D",
    "Gaussian3D",
    "GaussianSet",
    "InvalidParameterError",
    "LOW_PASS_EPS",
    "MAX_SH_DEGREE",
    "SH_C0",
    "SH_C1",
    "SH_C2",
    "covariance3d",
    "degree_for_coeff_count",
    "eval_density",
    "logit",
    "normalize_vjp",
    "project",
    "quat_left_matrix",
    "quat_multiply",
    "quat_normalize",
    "quat_to_rotmat",
    "rotmat_to_quat",
    "rotmat_vjp",
    "sh_basis",
    "sh_basis_dir_grad",
    "sh_coeff_count",
    "sh_color",
    "sigmoid",
]
