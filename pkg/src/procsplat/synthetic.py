"""Hand-built synthetic scenes: a small three-asset building, target
Gaussians with known appearance, and camera rigs for generating ground
truth with the renderer itself."""
from __future__ import annotations

import zlib

import numpy as np

from .assembly import BaseAsset, assemble
from .core import Camera, GaussianSet, logit
from .grammar import AssetSpec, InstantiationList, expand, parse
from .render import RenderConfig, render
from .trainer import Dataset

DEMO_CODE = """\
building Demo {
  dims 6 4.4 3
  level Ground { C (W P)* C | C (W P)* C }
  level Upper x 2 { C (W P)* C | C (W P)* C }
}
"""

_DEMO_HUES = {
    "C": np.array([0.85, 0.35, 0.30]),
    "W": np.array([0.30, 0.45, 0.90]),
    "P": np.array([0.35, 0.80, 0.40]),
}


def demo_manifest() -> "list[AssetSpec]":
    """Corner, window and pillar blocks sized to tile the demo building."""
    return [
        AssetSpec("C", extent=np.array([0.6, 0.6, 1.0]), pivot=np.array([0.3, 0.3, 0.0])),
        AssetSpec("W", extent=np.array([1.2, 0.3, 1.0]), pivot=np.array([0.6, 0.15, 0.0])),
        AssetSpec("P", extent=np.array([0.4, 0.4, 1.0]), pivot=np.array([0.2, 0.2, 0.0])),
    ]


def demo_code():
    return parse(DEMO_CODE)


def demo_instantiations() -> InstantiationList:
    return expand(demo_code(), demo_manifest())


def target_asset(spec: AssetSpec, hue: np.ndarray, splats_per_axis=(3, 2, 3),
                 opacity: float = 0.92, hue_jitter: float = 0.0) -> BaseAsset:
    """A lattice of opaque splats filling the asset box, shaded by height.

    Deterministic and view-independent (band-0 SH only is nonzero), so a
    fit with the same renderer can in principle reproduce it exactly.
    ``hue_jitter`` adds a fixed per-splat color pattern (keyed to the asset
    id), giving the asset recognizable high-frequency detail that repeats
    at every instance.
    """
    lo, hi = spec.box_min, spec.box_max
    axes = [np.linspace(lo[d], hi[d], splats_per_axis[d] + 2)[1:-1] for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    positions = np.stack([gx.reshape(-1), gy.reshape(-1), gz.reshape(-1)], axis=1)
    n = len(positions)
    spacing = (hi - lo) / (np.asarray(splats_per_axis) + 1)
    scales = np.broadcast_to(spacing / 2.2, (n, 3))
    z_norm = (positions[:, 2] - lo[2]) / (hi[2] - lo[2] + 1e-12)
    color = hue * (0.55 + 0.55 * z_norm[:, None])
    if hue_jitter:
        rng = np.random.default_rng(zlib.crc32(spec.id.encode()))
        color = color * (1.0 + hue_jitter * rng.uniform(-1.0, 1.0, size=(n, 3)))
    sh = np.zeros((n, 4, 3))
    sh[:, 0, :] = (np.clip(color, 0.05, 0.95) - 0.5) / 0.28209479177387814
    return BaseAsset(spec, GaussianSet(
        positions=positions,
        rotations=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
        log_scales=np.log(scales),
        opacity_logits=np.full(n, logit(opacity)),
        sh=sh,
    ))


def demo_target_assets(splats_per_axis=(3, 2, 3),
                       hue_jitter: float = 0.0) -> "list[BaseAsset]":
    return [target_asset(spec, _DEMO_HUES[spec.id], splats_per_axis,
                         hue_jitter=hue_jitter) for spec in demo_manifest()]


def ring_cameras(center, radius: float, height_range, n: int, fx: float,
                 size: int, phase: float = 0.0) -> "list[Camera]":
    """Cameras on a circle around ``center``, alternating between two heights."""
    center = np.asarray(center, dtype=np.float64)
    cams = []
    for i in range(n):
        ang = phase + 2.0 * np.pi * i / n
        h = height_range[i % len(height_range)]
        eye = center + [radius * np.cos(ang), radius * np.sin(ang), h]
        cams.append(Camera.look_at(eye, center, fx=fx, width=size, height=size))
    return cams


def make_dataset(bases: "list[BaseAsset]", ilist: InstantiationList,
                 n_train: int = 24, n_test: int = 4, size: int = 128,
                 render_cfg: "RenderConfig | None" = None) -> Dataset:
    """Ground-truth views of the assembled target scene, rendered by us."""
    if render_cfg is None:
        render_cfg = RenderConfig()
    scene = assemble(ilist, bases)
    lo = scene.gaussians.positions.min(axis=0)
    hi = scene.gaussians.positions.max(axis=0)
    center = (lo + hi) / 2.0
    diag = float(np.linalg.norm(hi - lo))
    horiz = float(np.hypot(hi[0] - lo[0], hi[1] - lo[1]))
    radius = 1.1 * diag
    fx = 0.75 * size * radius / horiz
    heights = (0.2 * diag, 0.5 * diag)

    def shoot(cams):
        return [(render(scene, cam, render_cfg).image, cam) for cam in cams]

    train_cams = ring_cameras(center, radius, heights, n_train, fx, size)
    test_cams = ring_cameras(center, radius, heights, n_test, fx, size,
                             phase=np.pi / max(n_train, 1))
    return Dataset(train=shoot(train_cams), test=shoot(test_cams))


def demo_dataset(n_train: int = 24, n_test: int = 4, size: int = 128) -> Dataset:
    return make_dataset(demo_target_assets(), demo_instantiations(),
                        n_train, n_test, size)
