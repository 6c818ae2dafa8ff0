"""Projection, tile binning and the gradient chains around the kernels.

The forward pass projects every Gaussian (EWA first-order model, Eq.-1-style
covariance), bins the visible ones into 16x16 tiles sorted by center depth,
then composites front to back. The backward pass replays compositing
back-to-front per pixel and chains the per-splat screen-space gradients all
the way to the scene parameters. ``accumulate_shared`` then folds scene-entry
gradients onto the shared base assets and per-instance variance assets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..assembly import SOURCE_BASE, SOURCE_VARIANCE, Scene
from ..core import (
    Camera,
    GaussianSet,
    normalize_vjp,
    quat_to_rotmat,
    rotmat_vjp,
    sh_basis,
    sh_basis_dir_grad,
    sigmoid,
)
from .kernels import backward_kernel, forward_kernel


class RenderConfigError(ValueError):
    pass


class RenderContractError(RuntimeError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    tile_size: int = 16
    eps2d: float = 0.3          # low-pass floor added to projected covariance, px^2
    z_near: float = 0.01
    sigma_min: float = 1.0 / 255.0
    sigma_max: float = 0.9999
    t_eps: float = 1e-4         # stop compositing below this transmittance
    background: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.tile_size < 1:
            raise RenderConfigError("tile_size must be at least 1")
        if not 0 < self.sigma_max < 1:
            raise RenderConfigError("sigma_max must lie in (0, 1)")
        if len(self.background) != 3:
            raise RenderConfigError("background must be an RGB triple")


@dataclass
class _Preprocessed:
    """Per-visible-entry quantities retained for the backward chains."""

    vis_idx: np.ndarray     # rows of the original scene
    mean2d: np.ndarray      # (V, 2)
    conic: np.ndarray       # (V, 3) upper-triangular inverse covariance
    color: np.ndarray       # (V, 3) clipped
    raw_color: np.ndarray   # (V, 3) before the [0,1] clip
    alpha: np.ndarray       # (V,)
    depth: np.ndarray       # (V,)
    rects: np.ndarray       # (V, 4) int32 pixel bounds x0,y0,x1,y1
    t_cam: np.ndarray       # (V, 3)
    U: np.ndarray           # (V, 2, 3) J @ W
    sigma3: np.ndarray      # (V, 3, 3)
    M: np.ndarray           # (V, 3, 3) R @ diag(s)
    R: np.ndarray           # (V, 3, 3)
    scales: np.ndarray      # (V, 3)
    basis: np.ndarray       # (V, B)
    d_loc: np.ndarray       # (V, 3) view dir in the asset frame
    view_vec: np.ndarray    # (V, 3) unnormalized world view vector


@dataclass
class RenderOutput:
    image: np.ndarray       # (H, W, 3) in [0, 1]
    alpha: np.ndarray       # (H, W)
    tile_offsets: np.ndarray
    sorted_ids: np.ndarray  # indices into the visible-entry arrays
    final_t: np.ndarray     # (H, W) remaining transmittance
    n_contrib: np.ndarray   # (H, W) contributors consumed per pixel
    n_entries: int
    width: int
    height: int
    config: RenderConfig
    pre: _Preprocessed


@dataclass
class SceneGradients:
    positions: np.ndarray       # (E, 3)
    rotations: np.ndarray       # (E, 4)
    log_scales: np.ndarray      # (E, 3)
    opacity_logits: np.ndarray  # (E,)
    sh: np.ndarray              # (E, B, 3)

    @classmethod
    def zeros(cls, n: int, n_sh: int) -> "SceneGradients":
        return cls(np.zeros((n, 3)), np.zeros((n, 4)), np.zeros((n, 3)),
                   np.zeros(n), np.zeros((n, n_sh, 3)))

    def __iadd__(self, other: "SceneGradients") -> "SceneGradients":
        self.positions += other.positions
        self.rotations += other.rotations
        self.log_scales += other.log_scales
        self.opacity_logits += other.opacity_logits
        self.sh += other.sh
        return self


@dataclass
class AssetGradients:
    """Gradients folded back to parameter space, keyed like the assets."""

    base: "dict[str, SceneGradients]" = field(default_factory=dict)
    variance: "dict[tuple[str, int], SceneGradients]" = field(default_factory=dict)


def _scene_arrays(scene) -> "tuple[GaussianSet, np.ndarray]":
    if isinstance(scene, Scene):
        return scene.gaussians, scene.inst_R
    if isinstance(scene, GaussianSet):
        return scene, np.broadcast_to(np.eye(3), (len(scene), 3, 3))
    raise TypeError(f"cannot render a {type(scene).__name__}")


def _preprocess(gs: GaussianSet, inst_R: np.ndarray, cam: Camera,
                cfg: RenderConfig) -> _Preprocessed:
    W_mat = cam.rotation
    b = cam.translation
    t_cam = gs.positions @ W_mat.T + b
    alpha_full = sigmoid(gs.opacity_logits)
    vis = (t_cam[:, 2] > cfg.z_near) & (alpha_full >= cfg.sigma_min)
    vis_idx = np.where(vis)[0]

    t = t_cam[vis_idx]
    p = gs.positions[vis_idx]
    q = gs.rotations[vis_idx]
    s = np.exp(gs.log_scales[vis_idx])
    sh = gs.sh[vis_idx]
    alpha = alpha_full[vis_idx]
    R_inst = np.ascontiguousarray(inst_R[vis_idx])

    R = quat_to_rotmat(q)
    M = R * s[:, None, :]
    sigma3 = M @ np.swapaxes(M, -1, -2)

    inv_z = 1.0 / t[:, 2]
    mean2d = np.stack([cam.fx * t[:, 0] * inv_z + cam.cx,
                       cam.fy * t[:, 1] * inv_z + cam.cy], axis=1)
    nv = len(vis_idx)
    J = np.zeros((nv, 2, 3))
    J[:, 0, 0] = cam.fx * inv_z
    J[:, 0, 2] = -cam.fx * t[:, 0] * inv_z * inv_z
    J[:, 1, 1] = cam.fy * inv_z
    J[:, 1, 2] = -cam.fy * t[:, 1] * inv_z * inv_z
    U = J @ W_mat
    cov2d = U @ sigma3 @ np.swapaxes(U, -1, -2)
    cov2d[:, 0, 0] += cfg.eps2d
    cov2d[:, 1, 1] += cfg.eps2d

    A = cov2d[:, 0, 0]
    B = cov2d[:, 0, 1]
    C = cov2d[:, 1, 1]
    det = A * C - B * B
    conic = np.stack([C / det, -B / det, A / det], axis=1)
    lam_max = 0.5 * (A + C) + np.sqrt(np.maximum(0.25 * (A - C) ** 2 + B * B, 0.0))
    radius = 3.0 * np.sqrt(lam_max)

    rects = np.empty((nv, 4), dtype=np.int32)
    rects[:, 0] = np.clip(np.floor(mean2d[:, 0] - radius), 0, cam.width)
    rects[:, 1] = np.clip(np.floor(mean2d[:, 1] - radius), 0, cam.height)
    rects[:, 2] = np.clip(np.ceil(mean2d[:, 0] + radius) + 1, 0, cam.width)
    rects[:, 3] = np.clip(np.ceil(mean2d[:, 1] + radius) + 1, 0, cam.height)

    view_vec = p - cam.center()
    d = view_vec / np.linalg.norm(view_vec, axis=1, keepdims=True)
    d_loc = np.einsum("eij,ei->ej", R_inst, d)
    degree = gs.sh_degree
    basis = sh_basis(d_loc, degree)
    raw_color = 0.5 + np.einsum("eb,ebc->ec", basis, sh)
    color = np.clip(raw_color, 0.0, 1.0)

    return _Preprocessed(
        vis_idx=vis_idx, mean2d=mean2d, conic=conic, color=color,
        raw_color=raw_color, alpha=alpha, depth=t[:, 2].copy(), rects=rects,
        t_cam=t, U=U, sigma3=sigma3, M=M, R=R, scales=s, basis=basis,
        d_loc=d_loc, view_vec=view_vec,
    )


def _bin_tiles(pre: _Preprocessed, cam: Camera, cfg: RenderConfig):
    ts = cfg.tile_size
    ntx = (cam.width + ts - 1) // ts
    nty = (cam.height + ts - 1) // ts
    n_tiles = ntx * nty

    r = pre.rects
    nonempty = (r[:, 2] > r[:, 0]) & (r[:, 3] > r[:, 1])
    ids = np.where(nonempty)[0]
    if len(ids) == 0:
        return (np.zeros(n_tiles + 1, dtype=np.int64),
                np.zeros(0, dtype=np.int64), ntx)
    tx0 = r[ids, 0] // ts
    ty0 = r[ids, 1] // ts
    tx1 = (r[ids, 2] - 1) // ts + 1
    ty1 = (r[ids, 3] - 1) // ts + 1
    nx = (tx1 - tx0).astype(np.int64)
    ny = (ty1 - ty0).astype(np.int64)
    counts = nx * ny
    total = int(counts.sum())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pair = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    nx_rep = np.repeat(nx, counts)
    local_tx = pair % nx_rep
    local_ty = pair // nx_rep
    tile_ids = ((np.repeat(ty0, counts) + local_ty) * ntx
                + np.repeat(tx0, counts) + local_tx)
    entry_rep = np.repeat(ids, counts)
    depth_rep = pre.depth[entry_rep]

    order = np.lexsort((entry_rep, depth_rep, tile_ids))
    sorted_ids = entry_rep[order]
    sorted_tiles = tile_ids[order]
    tile_offsets = np.searchsorted(sorted_tiles, np.arange(n_tiles + 1))
    return tile_offsets.astype(np.int64), sorted_ids.astype(np.int64), ntx


def render(scene, cam: Camera, cfg: RenderConfig = RenderConfig()) -> RenderOutput:
    """Rasterize the scene into an H x W x 3 image plus coverage alpha."""
    if cam.width <= 0 or cam.height <= 0:
        raise RenderConfigError("image must have positive size")
    gs, inst_R = _scene_arrays(scene)
    pre = _preprocess(gs, inst_R, cam, cfg)
    tile_offsets, sorted_ids, ntx = _bin_tiles(pre, cam, cfg)

    H, W = cam.height, cam.width
    image = np.zeros((H, W, 3))
    alpha_img = np.zeros((H, W))
    final_t = np.ones((H, W))
    n_contrib = np.zeros((H, W), dtype=np.int64)
    bg = np.asarray(cfg.background, dtype=np.float64)

    if len(pre.vis_idx):
        forward_kernel(tile_offsets, sorted_ids, pre.rects, pre.mean2d, pre.conic,
                       pre.color, pre.alpha, H, W, cfg.tile_size, ntx, bg,
                       cfg.sigma_min, cfg.sigma_max, cfg.t_eps,
                       image, alpha_img, final_t, n_contrib)
    else:
        image[:] = bg

    return RenderOutput(image=image, alpha=alpha_img, tile_offsets=tile_offsets,
                        sorted_ids=sorted_ids, final_t=final_t, n_contrib=n_contrib,
                        n_entries=len(gs), width=W, height=H, config=cfg, pre=pre)


def render_backward(scene, cam: Camera, output: RenderOutput,
                    grad_image: np.ndarray) -> SceneGradients:
    """Chain dL/dImage back to every scene parameter."""
    gs, inst_R = _scene_arrays(scene)
    if len(gs) != output.n_entries or (cam.height, cam.width) != (output.height, output.width):
        raise RenderContractError("backward pass does not match the forward output")
    grad_image = np.asarray(grad_image, dtype=np.float64)
    if grad_image.shape != (output.height, output.width, 3):
        raise RenderContractError("grad_image shape mismatch")

    grads = SceneGradients.zeros(len(gs), gs.sh.shape[1])
    pre = output.pre
    nv = len(pre.vis_idx)
    if nv == 0:
        return grads

    cfg = output.config
    g_mean2d = np.zeros((nv, 2))
    g_conic = np.zeros((nv, 3))
    g_color = np.zeros((nv, 3))
    g_alpha = np.zeros(nv)
    bg = np.asarray(cfg.background, dtype=np.float64)
    ntx = (output.width + cfg.tile_size - 1) // cfg.tile_size
    backward_kernel(output.tile_offsets, output.sorted_ids, pre.rects, pre.mean2d,
                    pre.conic, pre.color, pre.alpha,
                    output.height, output.width, cfg.tile_size, ntx, bg,
                    cfg.sigma_min, cfg.sigma_max,
                    output.final_t, output.n_contrib, grad_image,
                    g_mean2d, g_conic, g_color, g_alpha)

    # color -> sh and view direction
    pass_mask = (pre.raw_color > 0.0) & (pre.raw_color < 1.0)
    gc = g_color * pass_mask
    sh_vis = gs.sh[pre.vis_idx]
    g_sh = np.einsum("eb,ec->ebc", pre.basis, gc)
    bgrad = sh_basis_dir_grad(pre.d_loc, gs.sh_degree)
    g_dloc = np.einsum("ec,ebc,ebk->ek", gc, sh_vis, bgrad)
    R_inst = np.ascontiguousarray(inst_R[pre.vis_idx])
    g_dir = np.einsum("eij,ej->ei", R_inst, g_dloc)
    g_pos_view = normalize_vjp(pre.view_vec, g_dir)

    # opacity logit through the sigmoid
    a = pre.alpha
    g_logit = g_alpha * a * (1.0 - a)

    # conic -> 2D covariance (symmetric inverse rule)
    K = np.empty((nv, 2, 2))
    K[:, 0, 0] = pre.conic[:, 0]
    K[:, 0, 1] = K[:, 1, 0] = pre.conic[:, 1]
    K[:, 1, 1] = pre.conic[:, 2]
    GK = np.empty((nv, 2, 2))
    GK[:, 0, 0] = g_conic[:, 0]
    GK[:, 0, 1] = GK[:, 1, 0] = 0.5 * g_conic[:, 1]
    GK[:, 1, 1] = g_conic[:, 2]
    g_cov = -K @ GK @ K

    # 2D covariance -> 3D covariance and projection frame
    U = pre.U
    g_sigma3 = np.swapaxes(U, 1, 2) @ g_cov @ U
    g_U = 2.0 * (g_cov @ U @ pre.sigma3)
    g_J = g_U @ cam.rotation.T

    t = pre.t_cam
    inv_z = 1.0 / t[:, 2]
    inv_z2 = inv_z * inv_z
    fx, fy = cam.fx, cam.fy
    g_tx = g_J[:, 0, 2] * (-fx * inv_z2) + g_mean2d[:, 0] * fx * inv_z
    g_ty = g_J[:, 1, 2] * (-fy * inv_z2) + g_mean2d[:, 1] * fy * inv_z
    g_tz = (g_J[:, 0, 0] * (-fx * inv_z2) + g_J[:, 1, 1] * (-fy * inv_z2)
            + g_J[:, 0, 2] * (2.0 * fx * t[:, 0] * inv_z2 * inv_z)
            + g_J[:, 1, 2] * (2.0 * fy * t[:, 1] * inv_z2 * inv_z)
            - g_mean2d[:, 0] * fx * t[:, 0] * inv_z2
            - g_mean2d[:, 1] * fy * t[:, 1] * inv_z2)
    g_pos_proj = np.stack([g_tx, g_ty, g_tz], axis=1) @ cam.rotation

    # 3D covariance -> rotation and log scale
    g_M = 2.0 * (g_sigma3 @ pre.M)
    g_R = g_M * pre.scales[:, None, :]
    g_s = np.einsum("eik,eik->ek", pre.R, g_M)
    g_log_s = g_s * pre.scales
    q = gs.rotations[pre.vis_idx]
    q_unit = q / np.linalg.norm(q, axis=1, keepdims=True)
    g_q = normalize_vjp(q, rotmat_vjp(q_unit, g_R))

    idx = pre.vis_idx
    grads.positions[idx] = g_pos_proj + g_pos_view
    grads.rotations[idx] = g_q
    grads.log_scales[idx] = g_log_s
    grads.opacity_logits[idx] = g_logit
    grads.sh[idx] = g_sh
    return grads


def accumulate_shared(grads: SceneGradients, scene: Scene) -> AssetGradients:
    """Fold scene-entry gradients back onto base and variance asset rows.

    The instantiation map is linear in every asset parameter, so the exact
    pullbacks are: position through (R diag(S))^T, rotation through the
    transpose of the left quaternion-product matrix, and identity for log
    scale, opacity and SH. Base rows sum over all instances.
    """
    if not isinstance(scene, Scene):
        raise TypeError("accumulate_shared needs a Scene with provenance")
    n_sh = grads.sh.shape[1]

    g_pos_local = np.einsum("eji,ej->ei", scene.inst_R, grads.positions) * scene.inst_S
    w, x, y, z = (scene.inst_quat[:, i] for i in range(4))
    L = np.empty((len(scene), 4, 4))
    L[:, 0] = np.stack([w, -x, -y, -z], axis=1)
    L[:, 1] = np.stack([x, w, -z, y], axis=1)
    L[:, 2] = np.stack([y, z, w, -x], axis=1)
    L[:, 3] = np.stack([z, -y, x, w], axis=1)
    g_rot_local = np.einsum("eji,ej->ei", L, grads.rotations)

    out = AssetGradients()
    for a, asset_id in enumerate(scene.asset_order):
        base_rows = np.where((scene.asset_index == a) & (scene.source == SOURCE_BASE))[0]
        if len(base_rows):
            n_rows = int(scene.local_index[base_rows].max()) + 1
            acc = SceneGradients.zeros(n_rows, n_sh)
            loc = scene.local_index[base_rows]
            np.add.at(acc.positions, loc, g_pos_local[base_rows])
            np.add.at(acc.rotations, loc, g_rot_local[base_rows])
            np.add.at(acc.log_scales, loc, grads.log_scales[base_rows])
            np.add.at(acc.opacity_logits, loc, grads.opacity_logits[base_rows])
            np.add.at(acc.sh, loc, grads.sh[base_rows])
            out.base[asset_id] = acc
        var_rows = np.where((scene.asset_index == a) & (scene.source == SOURCE_VARIANCE))[0]
        for k in np.unique(scene.instance_index[var_rows]):
            rows = var_rows[scene.instance_index[var_rows] == k]
            n_rows = int(scene.local_index[rows].max()) + 1
            acc = SceneGradients.zeros(n_rows, n_sh)
            loc = scene.local_index[rows]
            np.add.at(acc.positions, loc, g_pos_local[rows])
            np.add.at(acc.rotations, loc, g_rot_local[rows])
            np.add.at(acc.log_scales, loc, grads.log_scales[rows])
            np.add.at(acc.opacity_logits, loc, grads.opacity_logits[rows])
            np.add.at(acc.sh, loc, grads.sh[rows])
            out.variance[(asset_id, int(k))] = acc
    return out
