"""Fitting shared base assets (and per-instance variance assets) to
posed images.

The loop is: assemble the scene from the current asset parameters,
render one training view, take the L1+SSIM loss, push the image
gradient back through the renderer, fold per-entry gradients onto the
shared asset rows, and apply per-group Adam updates. On a fixed cadence
Gaussians are cloned/split/pruned, and every ``clamp_every`` iterations
each asset is pulled back toward its bounding box: kernels whose 3-sigma
extent escapes the margin-inflated soft box have their scale halved,
and centers outside the hard box are clamped onto its boundary.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import (
    BaseAsset,
    VarianceAsset,
    allocate_points,
    assemble,
    init_base_asset,
    init_variance_assets,
    world_bbox,
)
from .core import Camera, GaussianSet, quat_to_rotmat, sigmoid
from .grammar import (
    AssetSpec,
    InstanceTransform,
    InstantiationEntry,
    InstantiationList,
    ProceduralCode,
    expand,
    load_manifest,
    parse,
    serialize,
)
from .losses import loss as image_loss
from .losses import psnr as image_psnr
from .losses import ssim as image_ssim
from .optim import Adam, exponential_lr
from .ply import Checkpoint
from .render import RenderConfig, accumulate_shared, render, render_backward

SPLIT_SCALE_SHRINK = 1.6


class TrainError(RuntimeError):
    def __init__(self, message: str, snapshot: "Checkpoint | None" = None,
                 iteration: int | None = None):
        super().__init__(message)
        self.snapshot = snapshot
        self.iteration = iteration


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 30000
    densify_from: int = 500
    densify_until: int = 15000
    densify_interval: int = 100
    clamp_every: int = 100
    lambda_ssim: float = 0.2
    soft_margin_m: float = 0.2
    N_init: int = 10000
    variance_fraction: float = 0.25
    lr_position: float = 1.6e-4
    lr_position_final: float = 1.6e-6
    lr_sh: float = 2.5e-3
    lr_opacity: float = 5e-2
    lr_scale: float = 5e-3
    lr_rotation: float = 1e-3
    densify_grad_threshold: float = 2e-4
    densify_percent_dense: float = 0.01
    prune_opacity: float = 0.005
    eval_every: int = 250
    seed: int = 0
    render: RenderConfig = field(default_factory=RenderConfig)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.clamp_every < 1:
            raise ValueError("clamp_every must be at least 1")
        if not 0.0 <= self.lambda_ssim <= 1.0:
            raise ValueError("lambda_ssim must lie in [0, 1]")
        if self.soft_margin_m < 0.0:
            raise ValueError("soft_margin_m must be non-negative")
        if self.N_init < 1:
            raise ValueError("N_init must be positive")
        if not 0.0 <= self.variance_fraction <= 1.0:
            raise ValueError("variance_fraction must lie in [0, 1]")


@dataclass
class Dataset:
    """Posed images split into train and test views."""

    train: "list[tuple[np.ndarray, Camera]]"
    test: "list[tuple[np.ndarray, Camera]]" = field(default_factory=list)

    def __post_init__(self):
        for image, cam in self.train + self.test:
            if image.shape != (cam.height, cam.width, 3):
                raise DatasetError(
                    f"image shape {image.shape} does not match its camera "
                    f"({cam.height}, {cam.width}, 3)")


def save_dataset(directory: str, dataset: Dataset) -> None:
    from PIL import Image

    os.makedirs(directory, exist_ok=True)
    rows = []
    for split, pairs in (("train", dataset.train), ("test", dataset.test)):
        for i, (image, cam) in enumerate(pairs):
            name = f"{split}_{i:04d}.png"
            arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(arr).save(os.path.join(directory, name))
            rows.append({**cam.to_json(), "image": name, "split": split})
    with open(os.path.join(directory, "cameras.json"), "w") as f:
        json.dump(rows, f, indent=2)


def load_dataset(directory: str) -> Dataset:
    from PIL import Image

    path = os.path.join(directory, "cameras.json")
    if not os.path.exists(path):
        raise DatasetError(f"missing camera file: {path}")
    with open(path) as f:
        rows = json.load(f)
    train, test = [], []
    for row in rows:
        cam = Camera.from_json(row)
        with Image.open(os.path.join(directory, row["image"])) as im:
            image = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
        split = row.get("split", "train")
        (train if split == "train" else test).append((image, cam))
    if not train:
        raise DatasetError("dataset has no training views")
    return Dataset(train=train, test=test)


# ---------------------------------------------------------------------------
# bounding-box clamp
# ---------------------------------------------------------------------------

def bbox_clamp(gaussians: GaussianSet, spec: AssetSpec,
               soft_margin: float) -> "dict[str, int]":
    """Pull runaway kernels back toward the asset box, in place.

    Scale: any Gaussian whose 3-sigma covariance AABB pokes out of the
    soft box (hard box inflated by ``soft_margin``) has its scale halved
    on all axes, once. Position: centers outside the hard box are
    clamped component-wise onto the boundary.
    """
    if soft_margin < 0:
        raise ValueError("soft_margin must be non-negative")
    if len(gaussians) == 0:
        return {"scale": 0, "position": 0}
    R = quat_to_rotmat(gaussians.rotations)
    s = np.exp(gaussians.log_scales)
    half = 3.0 * np.sqrt(np.einsum("nij,nj->ni", R ** 2, s ** 2))
    p = gaussians.positions
    lo = spec.box_min - soft_margin
    hi = spec.box_max + soft_margin
    oversize = np.any((p - half < lo) | (p + half > hi), axis=1)
    gaussians.log_scales[oversize] -= np.log(2.0)

    clamped = np.clip(p, spec.box_min, spec.box_max)
    moved = np.any(clamped != p, axis=1)
    gaussians.positions[:] = clamped
    return {"scale": int(oversize.sum()), "position": int(moved.sum())}


# ---------------------------------------------------------------------------
# densification
# ---------------------------------------------------------------------------

def densify_and_prune(gaussians: GaussianSet, avg_grad: np.ndarray,
                      cfg: TrainConfig, spatial_scale: float,
                      rng: np.random.Generator):
    """Clone small / split large high-gradient Gaussians, prune faint ones.

    Returns (new_set, keep_mask_over_original_rows, n_new) so optimizer
    state can be realigned: surviving rows keep their slots, new rows
    (clones then split children) are appended with fresh state.
    """
    n = len(gaussians)
    s = np.exp(gaussians.log_scales)
    max_scale = s.max(axis=1)
    hot = avg_grad >= cfg.densify_grad_threshold
    dense_limit = cfg.densify_percent_dense * spatial_scale
    faint = sigmoid(gaussians.opacity_logits) < cfg.prune_opacity
    clone = hot & (max_scale <= dense_limit) & ~faint
    split = hot & (max_scale > dense_limit) & ~faint
    keep = ~(split | faint)
    if not keep.any() and not split.any():
        # never empty a set outright: retain the strongest survivor
        keep[int(np.argmax(gaussians.opacity_logits))] = True
        clone[:] = False

    pieces = [gaussians.take(np.where(keep)[0])]
    if clone.any():
        pieces.append(gaussians.take(np.where(clone)[0]))
    if split.any():
        idx = np.where(split)[0]
        parents = gaussians.take(np.repeat(idx, 2))
        R = quat_to_rotmat(parents.rotations)
        u = rng.uniform(-1.0, 1.0, size=(len(parents), 3))
        offsets = np.einsum("nij,nj->ni", R, np.exp(parents.log_scales) * u)
        children = GaussianSet(
            positions=parents.positions + offsets,
            rotations=parents.rotations,
            log_scales=parents.log_scales - np.log(SPLIT_SCALE_SHRINK),
            opacity_logits=parents.opacity_logits,
            sh=parents.sh,
        )
        pieces.append(children)
    new_set = GaussianSet.concat(pieces) if len(pieces) > 1 else pieces[0]
    n_new = len(new_set) - int(keep.sum())
    assert n_new == int(clone.sum()) + 2 * int(split.sum())
    return new_set, keep, n_new


# ---------------------------------------------------------------------------
# the training loop
# ---------------------------------------------------------------------------

_PARAM_LR = (
    ("positions", "lr_position"),
    ("rotations", "lr_rotation"),
    ("log_scales", "lr_scale"),
    ("opacity_logits", "lr_opacity"),
    ("sh", "lr_sh"),
)


@dataclass
class _Group:
    """One independently optimized Gaussian set plus its clamp box."""

    key: tuple
    gs: GaussianSet
    spec: AssetSpec
    grad_sum: np.ndarray
    grad_steps: int = 0

    def reset_stats(self) -> None:
        self.grad_sum = np.zeros(len(self.gs))
        self.grad_steps = 0


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: "list[dict]"
    instantiations: InstantiationList

    @property
    def final_psnr(self) -> "float | None":
        for record in reversed(self.metrics):
            if "psnr" in record:
                return record["psnr"]
        return None


def evaluate_views(bases, variances, ilist, views, render_cfg) -> "tuple[float, float]":
    """Mean PSNR/SSIM of the assembled scene over (image, camera) pairs."""
    scene = assemble(ilist, bases, variances)
    psnrs, ssims = [], []
    for image, cam in views:
        rendered = render(scene, cam, render_cfg).image
        psnrs.append(image_psnr(rendered, image))
        ssims.append(image_ssim(rendered, image))
    return float(np.mean(psnrs)), float(np.mean(ssims))


def _spatial_scale(specs_by_id, ilist) -> float:
    lows, highs = [], []
    for entry in ilist:
        lo, hi = world_bbox(specs_by_id[entry.asset_id], entry.transform)
        lows.append(lo)
        highs.append(hi)
    lo = np.min(lows, axis=0)
    hi = np.max(highs, axis=0)
    return float(np.linalg.norm(hi - lo) / 2.0)


class _Fitter:
    def __init__(self, dataset: Dataset, ilist: InstantiationList,
                 groups: "list[_Group]", cfg: TrainConfig,
                 rng: np.random.Generator, code_text: "str | None"):
        if not dataset.train:
            raise TrainError("dataset has no training views")
        self.dataset = dataset
        self.ilist = ilist
        self.groups = {g.key: g for g in groups}
        self.cfg = cfg
        self.rng = rng
        self.code_text = code_text
        self.opt = Adam()
        self.metrics: "list[dict]" = []
        specs_by_id = {g.spec.id: g.spec for g in groups if g.key[0] == "base"}
        self.spatial_scale = _spatial_scale(specs_by_id, ilist)
        self._epoch: "list[int]" = []

    def _assets(self):
        bases = [BaseAsset(g.spec, g.gs) for g in self.groups.values()
                 if g.key[0] == "base"]
        variances = [VarianceAsset(g.key[1], g.key[2], g.gs)
                     for g in self.groups.values() if g.key[0] == "var"]
        return bases, variances

    def checkpoint(self) -> Checkpoint:
        bases, variances = self._assets()
        return Checkpoint(bases=bases, variances=variances,
                          instantiations=self.ilist, code=self.code_text)

    def _next_view(self) -> int:
        if not self._epoch:
            self._epoch = list(self.rng.permutation(len(self.dataset.train)))
        return int(self._epoch.pop())

    def _grad_for(self, acc, key):
        if key[0] == "base":
            return acc.base.get(key[1])
        return acc.variance.get((key[1], key[2]))

    def _step_group(self, group: _Group, grads, iteration: int) -> None:
        cfg = self.cfg
        lr_pos = exponential_lr(iteration, cfg.lr_position, cfg.lr_position_final,
                                cfg.iterations) * self.spatial_scale
        for attr, lr_name in _PARAM_LR:
            lr = lr_pos if attr == "positions" else getattr(cfg, lr_name)
            self.opt.step(group.key + (attr,), getattr(group.gs, attr),
                          getattr(grads, attr), lr)
        group.grad_sum += np.linalg.norm(grads.positions, axis=1)
        group.grad_steps += 1

    def _densify_all(self) -> None:
        for group in self.groups.values():
            steps = max(group.grad_steps, 1)
            avg = group.grad_sum / steps
            new_set, keep, n_new = densify_and_prune(
                group.gs, avg, self.cfg, self.spatial_scale, self.rng)
            if n_new == 0 and keep.all():
                group.reset_stats()
                continue
            group.gs = new_set
            for attr, _ in _PARAM_LR:
                self.opt.resize(group.key + (attr,), keep=keep, extra=n_new)
            group.reset_stats()

    def _clamp_all(self) -> "tuple[int, int]":
        n_scale = n_pos = 0
        for group in self.groups.values():
            report = bbox_clamp(group.gs, group.spec, self.cfg.soft_margin_m)
            n_scale += report["scale"]
            n_pos += report["position"]
        return n_scale, n_pos

    def run(self) -> TrainResult:
        cfg = self.cfg
        for i in range(1, cfg.iterations + 1):
            bases, variances = self._assets()
            scene = assemble(self.ilist, bases, variances)
            image, cam = self.dataset.train[self._next_view()]
            out = render(scene, cam, cfg.render)
            value, grad_image = image_loss(out.image, image, cfg.lambda_ssim)
            if not np.isfinite(value):
                raise TrainError(f"non-finite loss at iteration {i}",
                                 snapshot=self.checkpoint(), iteration=i)
            grads = render_backward(scene, cam, out, grad_image)
            acc = accumulate_shared(grads, scene)
            for group in self.groups.values():
                g = self._grad_for(acc, group.key)
                if g is not None:
                    self._step_group(group, g, i)

            record = {"iter": i, "loss": value,
                      "clamp_scale_count": 0, "clamp_pos_count": 0}
            if cfg.densify_from <= i <= cfg.densify_until and \
                    i % cfg.densify_interval == 0:
                self._densify_all()
            if i % cfg.clamp_every == 0:
                n_scale, n_pos = self._clamp_all()
                record["clamp_scale_count"] = n_scale
                record["clamp_pos_count"] = n_pos
            record["n_gaussians"] = sum(len(g.gs) for g in self.groups.values())
            if self.dataset.test and (i % cfg.eval_every == 0 or i == cfg.iterations):
                bases, variances = self._assets()
                p, s = evaluate_views(bases, variances, self.ilist,
                                      self.dataset.test, cfg.render)
                record["psnr"] = p
                record["ssim"] = s
            self.metrics.append(record)
        return TrainResult(checkpoint=self.checkpoint(), metrics=self.metrics,
                           instantiations=self.ilist)


def _variance_count(cfg: TrainConfig, base_count: int, n_instances: int) -> int:
    if cfg.variance_fraction == 0.0 or n_instances == 0:
        return 0
    return max(1, int(round(cfg.variance_fraction * base_count / n_instances)))


def fit_assets(dataset: Dataset, ilist: InstantiationList,
               bases: "list[BaseAsset]", variances: "list[VarianceAsset]" = (),
               config: TrainConfig = TrainConfig(), rng=None,
               code_text: "str | None" = None) -> TrainResult:
    """Run the optimization loop on already-initialized assets."""
    spec_by_id = {b.spec.id: b.spec for b in bases}
    groups = [_Group(("base", b.spec.id), b.gaussians, b.spec,
                     np.zeros(len(b.gaussians))) for b in bases]
    for v in variances:
        groups.append(_Group(("var", v.owner_asset_id, v.instance_index),
                             v.gaussians, spec_by_id[v.owner_asset_id],
                             np.zeros(len(v.gaussians))))
    if rng is None:
        rng = np.random.default_rng(config.seed)
    fitter = _Fitter(dataset, ilist, groups, config, rng, code_text)
    return fitter.run()


def train(dataset: Dataset, code, manifest,
          config: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit shared base assets (plus variance residuals) to the dataset."""
    if isinstance(code, str):
        code = parse(code)
    if not isinstance(code, ProceduralCode):
        raise TypeError("code must be procedural source text or its parse")
    specs = load_manifest(manifest)
    ilist = expand(code, specs)
    rng = np.random.default_rng(config.seed)

    used_ids = sorted(ilist.count_per_asset())
    used_specs = [s for s in specs if s.id in used_ids]
    alloc = allocate_points(used_specs, config.N_init)
    entries_by_asset: "dict[str, list]" = {}
    for entry in ilist:
        entries_by_asset.setdefault(entry.asset_id, []).append(entry)

    bases: "list[BaseAsset]" = []
    variances: "list[VarianceAsset]" = []
    for spec in used_specs:
        bases.append(init_base_asset(spec, alloc[spec.id], rng))
        entries = entries_by_asset[spec.id]
        n_var = _variance_count(config, alloc[spec.id], len(entries))
        if n_var:
            variances.extend(init_variance_assets(spec, entries, n_var, rng))

    return fit_assets(dataset, ilist, bases, variances, config, rng,
                      code_text=serialize(code))


def fit_baseline(dataset: Dataset, init_scene, config: TrainConfig = TrainConfig(),
                 bbox: "tuple | None" = None) -> TrainResult:
    """Train every Gaussian independently (no sharing): the flat baseline.

    ``init_scene`` provides the starting Gaussians (a Scene or a bare
    GaussianSet); ``bbox`` optionally fixes the clamp box, defaulting to
    the initial positions' AABB padded by the soft margin.
    """
    gs = init_scene.gaussians.copy() if hasattr(init_scene, "gaussians") \
        else init_scene.copy()
    if len(gs) == 0:
        raise TrainError("baseline needs a non-empty initial scene")
    if bbox is None:
        pad = config.soft_margin_m
        lo = gs.positions.min(axis=0) - pad
        hi = gs.positions.max(axis=0) + pad
    else:
        lo, hi = np.asarray(bbox[0], dtype=float), np.asarray(bbox[1], dtype=float)
    spec = AssetSpec("__flat__", extent=hi - lo, pivot=-lo)
    ilist = InstantiationList((InstantiationEntry("__flat__",
                                                  InstanceTransform.identity(), 0),))
    cfg = replace(config, variance_fraction=0.0)
    return fit_assets(dataset, ilist, [BaseAsset(spec, gs)], config=cfg)


def write_metrics(path: str, metrics: "list[dict]") -> None:
    with open(path, "w") as f:
        for record in metrics:
            f.write(json.dumps(record) + "\n")
