"""Asset initialization and scene assembly.

Base assets hold the shared Gaussians of one architectural element in its
local frame; variance assets hold per-instance residuals in the same frame.
``assemble`` applies every instance transform and flattens the result into a
world-space scene with full provenance, so gradients computed on the scene
can be routed back to the parameters they came from.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import (GaussianSet, Gaussian3D, logit, quat_multiply, rotmat_to_quat,
                   sh_coeff_count)
from .grammar import AssetSpec, InstanceTransform, InstantiationList, load_manifest

SOURCE_BASE = 0
SOURCE_VARIANCE = 1

INIT_BASE_OPACITY = 0.1
INIT_VARIANCE_OPACITY = 0.02
MIN_INIT_SCALE = 1e-4


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# asset containers
# ---------------------------------------------------------------------------

@dataclass
class BaseAsset:
    """The shared Gaussian set of one asset, in its local frame."""

    spec: AssetSpec
    gaussians: GaussianSet

    def __len__(self) -> int:
        return len(self.gaussians)

    def assert_inside(self, tol: float = 1e-9):
        lo, hi = self.spec.box_min, self.spec.box_max
        p = self.gaussians.positions
        if len(p) and (np.any(p < lo - tol) or np.any(p > hi + tol)):
            raise AssertionError(f"asset {self.spec.id}: centers escaped the local box")


@dataclass
class VarianceAsset:
    """Per-instance residual Gaussians, local frame of the owning asset."""

    owner_asset_id: str
    instance_index: int
    gaussians: GaussianSet

    def __len__(self) -> int:
        return len(self.gaussians)


@dataclass
class Scene:
    """Flattened world-space Gaussians with per-entry provenance.

    Ordering is fixed: assets in ``asset_order``, instances in instantiation
    order within each asset, the base block then the variance block within
    each instance, local index last.
    """

    gaussians: GaussianSet
    source: np.ndarray          # (E,) SOURCE_BASE or SOURCE_VARIANCE
    asset_index: np.ndarray     # (E,) index into asset_order
    instance_index: np.ndarray  # (E,) per-asset instance stream position
    local_index: np.ndarray     # (E,) row in the originating asset
    asset_order: "list[str]"
    inst_R: np.ndarray          # (E, 3, 3)
    inst_quat: np.ndarray       # (E, 4)
    inst_S: np.ndarray          # (E, 3)
    inst_T: np.ndarray          # (E, 3)
    transforms: "dict[tuple[str, int], InstanceTransform]" = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.gaussians)

    def provenance(self, i: int) -> dict:
        return {
            "source": "base" if self.source[i] == SOURCE_BASE else "variance",
            "asset_id": self.asset_order[self.asset_index[i]],
            "instance_index": int(self.instance_index[i]),
            "local_index": int(self.local_index[i]),
        }


class AssemblyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Eq. 4 point allocation
# ---------------------------------------------------------------------------

def allocate_points(manifest: "list[AssetSpec]", total: int) -> "dict[str, int]":
    """Split a Gaussian budget across assets in proportion to bbox volume.

    Largest-remainder apportionment with ties to the lower manifest index;
    every asset receives at least one point.
    """
    specs = load_manifest(manifest)
    n = len(specs)
    if n == 0:
        raise AssemblyError("manifest is empty")
    if total < n:
        raise AssemblyError(f"budget {total} is below the asset count {n}")
    volumes = np.array([s.volume for s in specs], dtype=np.float64)
    quotas = total * volumes / volumes.sum()
    counts = np.floor(quotas).astype(np.int64)
    remainders = quotas - counts
    leftover = total - int(counts.sum())
    # ties to lower index: stable sort on (-remainder, index)
    order = sorted(range(n), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        counts[i] += 1
    # min-1 floor: donate from the most over-quota asset that stays >= 1
    while np.any(counts == 0):
        need = int(np.argmin(counts))
        donors = np.where(counts >= 2)[0]
        donor = donors[np.argmax((counts - quotas)[donors])]
        counts[donor] -= 1
        counts[need] += 1
    return {s.id: int(c) for s, c in zip(specs, counts)}


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _seed_set(spec: AssetSpec, positions: np.ndarray, opacity: float) -> GaussianSet:
    """Gaussians at the given centers with NN-sized isotropic scales."""
    n = positions.shape[0]
    if n >= 2:
        dists, _ = cKDTree(positions).query(positions, k=2)
        nn = dists[:, 1]
    else:
        nn = np.full(n, np.inf)
    diag = float(np.linalg.norm(spec.extent))
    nn = np.clip(nn, MIN_INIT_SCALE, diag / 4.0)
    rotations = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1))
    sh = np.zeros((n, sh_coeff_count(1), 3))  # mid-gray under the 0.5 offset
    return GaussianSet(
        positions=positions,
        rotations=rotations,
        log_scales=np.log(nn)[:, None].repeat(3, axis=1),
        opacity_logits=np.full(n, logit(opacity)),
        sh=sh,
    )


def init_base_asset(spec: AssetSpec, count: int, rng) -> BaseAsset:
    """Uniform random centers inside the local box."""
    if count < 1:
        raise AssemblyError("count must be at least 1")
    rng = _as_rng(rng)
    positions = rng.uniform(spec.box_min, spec.box_max, size=(count, 3))
    return BaseAsset(spec, _seed_set(spec, positions, INIT_BASE_OPACITY))


def init_variance_assets(spec: AssetSpec, instantiations, count: int, rng) -> "list[VarianceAsset]":
    """One near-transparent residual set per instance, same box as the base."""
    rng = _as_rng(rng)
    out = []
    for k, entry in enumerate(instantiations):
        idx = getattr(entry, "variance_index", k)
        positions = rng.uniform(spec.box_min, spec.box_max, size=(count, 3))
        gs = _seed_set(spec, positions, INIT_VARIANCE_OPACITY)
        out.append(VarianceAsset(spec.id, int(idx), gs))
    return out


def init_from_points(spec: AssetSpec, instantiations, sfm_points,
                     rng=0, fallback_count: int = 1000) -> BaseAsset:
    """Seed a base asset from a world-space point cloud.

    Points inside each instance's transformed box are pulled back to the
    local frame; the concatenation is downsampled by the instance count.
    Falls back to uniform init (with a warning) when nothing survives.
    """
    pts = np.asarray(sfm_points, dtype=np.float64).reshape(-1, 3)
    transforms = [getattr(e, "transform", e) for e in instantiations]
    if not transforms:
        raise AssemblyError("need at least one instantiation")
    kept = []
    tol = 1e-9
    for t in transforms:
        local = ((pts - t.T) @ t.R) / t.S
        inside = np.all((local >= spec.box_min - tol) & (local <= spec.box_max + tol), axis=1)
        kept.append(local[inside])
    merged = np.concatenate(kept, axis=0)
    k = len(transforms)
    merged = merged[::k]
    if merged.shape[0] == 0:
        warnings.warn(f"asset {spec.id}: no points fell inside any instance box; "
                      "using uniform initialization", RuntimeWarning, stacklevel=2)
        return init_base_asset(spec, fallback_count, rng)
    return BaseAsset(spec, _seed_set(spec, merged, INIT_BASE_OPACITY))


# ---------------------------------------------------------------------------
# Eq. 5 instantiation
# ---------------------------------------------------------------------------

def instantiate(g: Gaussian3D, t: InstanceTransform) -> Gaussian3D:
    """Place one local Gaussian into the world: center through the affine map,
    rotation composed, per-axis scales multiplied, appearance untouched."""
    mu = t.R @ (t.S * g.position) + t.T
    q = quat_multiply(rotmat_to_quat(t.R), g.rotation)
    ls = g.log_scale + np.log(t.S)
    return Gaussian3D(mu, q, ls, g.opacity_logit, g.sh)


def instantiate_set(gs: GaussianSet, t: InstanceTransform) -> GaussianSet:
    q_inst = rotmat_to_quat(t.R)
    return GaussianSet(
        positions=(t.S * gs.positions) @ t.R.T + t.T,
        rotations=quat_multiply(q_inst, gs.rotations),
        log_scales=gs.log_scales + np.log(t.S),
        opacity_logits=gs.opacity_logits.copy(),
        sh=gs.sh.copy(),
    )


def inverse_instantiate_set(gs: GaussianSet, t: InstanceTransform) -> GaussianSet:
    q_inv = rotmat_to_quat(t.R.T)
    return GaussianSet(
        positions=((gs.positions - t.T) @ t.R) / t.S,
        rotations=quat_multiply(q_inv, gs.rotations),
        log_scales=gs.log_scales - np.log(t.S),
        opacity_logits=gs.opacity_logits.copy(),
        sh=gs.sh.copy(),
    )


def world_bbox(spec: AssetSpec, t: InstanceTransform) -> "tuple[np.ndarray, np.ndarray]":
    """Axis-aligned bounds of the transformed local box."""
    lo, hi = spec.box_min, spec.box_max
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    world = (t.S * corners) @ t.R.T + t.T
    return world.min(axis=0), world.max(axis=0)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble(ilist: InstantiationList, bases: "list[BaseAsset]",
             variances: "list[VarianceAsset] | None" = None) -> Scene:
    """Build the world-space scene for an instantiation list."""
    base_by_id = {b.spec.id: b for b in bases}
    if len(base_by_id) != len(bases):
        raise AssemblyError("duplicate base asset ids")
    var_by_key: "dict[tuple[str, int], VarianceAsset]" = {}
    for v in variances or []:
        key = (v.owner_asset_id, v.instance_index)
        if key in var_by_key:
            raise AssemblyError(f"duplicate variance asset for {key}")
        var_by_key[key] = v

    entries_by_asset: "dict[str, list]" = {}
    for e in ilist:
        if e.asset_id not in base_by_id:
            raise AssemblyError(f"instantiation references unknown asset {e.asset_id!r}")
        entries_by_asset.setdefault(e.asset_id, []).append(e)
    instanced_keys = {(e.asset_id, e.variance_index) for e in ilist}
    for key in var_by_key:
        if key not in instanced_keys:
            raise AssemblyError(f"variance asset {key} has no matching instantiation")

    asset_order = [b.spec.id for b in bases if b.spec.id in entries_by_asset]
    sets, source, asset_idx, inst_idx, local_idx = [], [], [], [], []
    inst_R, inst_quat, inst_S, inst_T = [], [], [], []
    transforms: "dict[tuple[str, int], InstanceTransform]" = {}

    def push(gs: GaussianSet, src: int, a: int, k: int, t: InstanceTransform):
        n = len(gs)
        if n == 0:
            return
        sets.append(gs)
        source.append(np.full(n, src, dtype=np.uint8))
        asset_idx.append(np.full(n, a, dtype=np.int32))
        inst_idx.append(np.full(n, k, dtype=np.int32))
        local_idx.append(np.arange(n, dtype=np.int32))
        inst_R.append(np.broadcast_to(t.R, (n, 3, 3)))
        inst_quat.append(np.broadcast_to(rotmat_to_quat(t.R), (n, 4)))
        inst_S.append(np.broadcast_to(t.S, (n, 3)))
        inst_T.append(np.broadcast_to(t.T, (n, 3)))

    for a, asset_id in enumerate(asset_order):
        base = base_by_id[asset_id]
        for e in entries_by_asset[asset_id]:
            k = e.variance_index
            transforms[(asset_id, k)] = e.transform
            push(instantiate_set(base.gaussians, e.transform), SOURCE_BASE, a, k, e.transform)
            var = var_by_key.get((asset_id, k))
            if var is not None:
                push(instantiate_set(var.gaussians, e.transform),
                     SOURCE_VARIANCE, a, k, e.transform)

    if not sets:
        raise AssemblyError("nothing to assemble")
    return Scene(
        gaussians=GaussianSet.concat(sets),
        source=np.concatenate(source),
        asset_index=np.concatenate(asset_idx),
        instance_index=np.concatenate(inst_idx),
        local_index=np.concatenate(local_idx),
        asset_order=asset_order,
        inst_R=np.ascontiguousarray(np.concatenate(inst_R)),
        inst_quat=np.ascontiguousarray(np.concatenate(inst_quat)),
        inst_S=np.ascontiguousarray(np.concatenate(inst_S)),
        inst_T=np.ascontiguousarray(np.concatenate(inst_T)),
        transforms=transforms,
    )


__all__ = [
    "AssemblyError",
    "BaseAsset",
    "INIT_BASE_OPACITY",
    "INIT_VARIANCE_OPACITY",
    "MIN_INIT_SCALE",
    "Scene",
    "SOURCE_BASE",
    "SOURCE_VARIANCE",
    "VarianceAsset",
    "allocate_points",
    "assemble",
    "init_base_asset",
    "init_from_points",
    "init_variance_assets",
    "instantiate",
    "instantiate_set",
    "inverse_instantiate_set",
    "world_bbox",
]
