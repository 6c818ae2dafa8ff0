"""Splat PLY serialization and checkpoint directories.

Each Gaussian set is stored as a binary little-endian PLY in the
community splat layout: positions, unnormalized quaternion, log scales,
opacity logit, then SH coefficients split into f_dc_* (band 0) and
channel-major f_rest_* (higher bands). A checkpoint is a directory with
one PLY per base/variance asset plus a manifest.json tying them to the
asset specs, the instantiation list and the originating code text.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .assembly import BaseAsset, VarianceAsset
from .core import GaussianSet
from .grammar import AssetSpec, InstantiationList, load_manifest, manifest_to_json


class PlyFormatError(ValueError):
    pass


def _property_names(n_sh: int) -> "list[str]":
    names = ["x", "y", "z",
             "rot_0", "rot_1", "rot_2", "rot_3",
             "scale_0", "scale_1", "scale_2",
             "opacity",
             "f_dc_0", "f_dc_1", "f_dc_2"]
    names += [f"f_rest_{i}" for i in range(3 * (n_sh - 1))]
    return names


def write_splat_ply(path: str, gs: GaussianSet) -> None:
    n = len(gs)
    n_sh = gs.sh.shape[1]
    names = _property_names(n_sh)
    cols = [gs.positions, gs.rotations, gs.log_scales,
            gs.opacity_logits[:, None], gs.sh[:, 0, :]]
    if n_sh > 1:
        # channel-major: all red coefficients, then green, then blue
        cols.append(gs.sh[:, 1:, :].transpose(0, 2, 1).reshape(n, -1))
    data = np.concatenate(cols, axis=1).astype("<f4")

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {name}" for name in names]
    header.append("end_header")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(data.tobytes())
    os.replace(tmp, path)


def read_splat_ply(path: str) -> GaussianSet:
    with open(path, "rb") as f:
        blob = f.read()
    end = blob.find(b"end_header\n")
    if not blob.startswith(b"ply\n") or end < 0:
        raise PlyFormatError(f"{path} is not a PLY file")
    header_lines = blob[:end].decode("ascii").splitlines()
    body = blob[end + len(b"end_header\n"):]

    n = None
    names: "list[str]" = []
    for line in header_lines[1:]:
        parts = line.split()
        if parts[:2] == ["format", "binary_little_endian"]:
            continue
        if parts[0] == "comment":
            continue
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        elif parts[0] == "element":
            raise PlyFormatError(f"unsupported element {parts[1]!r}")
        elif parts[0] == "property":
            if parts[1] != "float":
                raise PlyFormatError(f"unsupported property type {parts[1]!r}")
            names.append(parts[2])
        elif parts[0] == "format":
            raise PlyFormatError(f"unsupported format {parts[1]!r}")
    if n is None:
        raise PlyFormatError("missing vertex element")

    data = np.frombuffer(body, dtype="<f4", count=n * len(names)).reshape(n, len(names))
    col = {name: i for i, name in enumerate(names)}
    required = _property_names(1)
    missing = [name for name in required if name not in col]
    if missing:
        raise PlyFormatError(f"missing properties: {', '.join(missing)}")

    n_rest = sum(1 for name in names if name.startswith("f_rest_"))
    if n_rest % 3 != 0:
        raise PlyFormatError("f_rest property count is not divisible by 3")
    n_sh = 1 + n_rest // 3
    sh = np.zeros((n, n_sh, 3))
    sh[:, 0, :] = data[:, [col["f_dc_0"], col["f_dc_1"], col["f_dc_2"]]]
    if n_rest:
        rest = data[:, [col[f"f_rest_{i}"] for i in range(n_rest)]]
        sh[:, 1:, :] = rest.reshape(n, 3, n_sh - 1).transpose(0, 2, 1)

    return GaussianSet(
        positions=data[:, [col["x"], col["y"], col["z"]]].astype(np.float64),
        rotations=data[:, [col[f"rot_{i}"] for i in range(4)]].astype(np.float64),
        log_scales=data[:, [col[f"scale_{i}"] for i in range(3)]].astype(np.float64),
        opacity_logits=data[:, col["opacity"]].astype(np.float64),
        sh=sh,
    )


# ---------------------------------------------------------------------------
# checkpoint directories
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    bases: "list[BaseAsset]"
    variances: "list[VarianceAsset]" = field(default_factory=list)
    instantiations: "InstantiationList | None" = None
    code: "str | None" = None

    def spec_by_id(self) -> "dict[str, AssetSpec]":
        return {b.spec.id: b.spec for b in self.bases}


def _atomic_write_json(path: str, payload) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w") as f:
        json.dump(payload, f, indent=2)
    os.replace(tmp, path)


def save_checkpoint(directory: str, ckpt: Checkpoint) -> None:
    """Write all asset PLYs, then the manifest last so readers never see
    a manifest referencing missing files."""
    os.makedirs(directory, exist_ok=True)
    files: dict = {"base": {}, "variance": {}}
    for b in ckpt.bases:
        name = f"asset_{b.spec.id}.ply"
        write_splat_ply(os.path.join(directory, name), b.gaussians)
        files["base"][b.spec.id] = name
    for v in ckpt.variances:
        name = f"variance_{v.owner_asset_id}_{v.instance_index}.ply"
        write_splat_ply(os.path.join(directory, name), v.gaussians)
        files["variance"][f"{v.owner_asset_id}/{v.instance_index}"] = name
    manifest = {
        "assets": manifest_to_json([b.spec for b in ckpt.bases]),
        "instantiations": (ckpt.instantiations.to_json()
                           if ckpt.instantiations is not None else None),
        "code": ckpt.code,
        "files": files,
    }
    _atomic_write_json(os.path.join(directory, "manifest.json"), manifest)


def load_checkpoint(directory: str) -> Checkpoint:
    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    specs = load_manifest(manifest["assets"])
    spec_by_id = {s.id: s for s in specs}
    bases = []
    for asset_id, name in manifest["files"]["base"].items():
        gs = read_splat_ply(os.path.join(directory, name))
        bases.append(BaseAsset(spec_by_id[asset_id], gs))
    variances = []
    for key, name in manifest["files"]["variance"].items():
        owner, k = key.rsplit("/", 1)
        gs = read_splat_ply(os.path.join(directory, name))
        variances.append(VarianceAsset(owner, int(k), gs))
    ilist = (InstantiationList.from_json(manifest["instantiations"])
             if manifest.get("instantiations") is not None else None)
    return Checkpoint(bases=bases, variances=variances,
                      instantiations=ilist, code=manifest.get("code"))
