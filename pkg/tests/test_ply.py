"""Splat-PLY and checkpoint directory round-trips."""
import numpy as np
import pytest

from procsplat.assembly import BaseAsset, VarianceAsset, init_base_asset
from procsplat.core import GaussianSet
from procsplat.grammar import (
    AssetSpec,
    InstanceTransform,
    InstantiationEntry,
    InstantiationList,
)
from procsplat.ply import (
    Checkpoint,
    PlyFormatError,
    load_checkpoint,
    read_splat_ply,
    save_checkpoint,
    write_splat_ply,
)


def random_set(n=17, seed=0, n_sh=4):
    rng = np.random.default_rng(seed)
    return GaussianSet(
        positions=rng.normal(size=(n, 3)),
        rotations=rng.normal(size=(n, 4)),
        log_scales=rng.uniform(-3, 0, size=(n, 3)),
        opacity_logits=rng.normal(size=n),
        sh=rng.normal(size=(n, n_sh, 3)),
    )


def test_ply_round_trip_preserves_values_to_float32(tmp_path):
    gs = random_set()
    path = str(tmp_path / "set.ply")
    write_splat_ply(path, gs)
    back = read_splat_ply(path)
    np.testing.assert_allclose(back.positions, gs.positions, atol=1e-6)
    np.testing.assert_allclose(back.rotations, gs.rotations, atol=1e-6)
    np.testing.assert_allclose(back.log_scales, gs.log_scales, atol=1e-6)
    np.testing.assert_allclose(back.opacity_logits, gs.opacity_logits, atol=1e-6)
    np.testing.assert_allclose(back.sh, gs.sh, atol=1e-6)


def test_ply_round_trip_degree_zero(tmp_path):
    gs = random_set(n=5, n_sh=1)
    path = str(tmp_path / "dc.ply")
    write_splat_ply(path, gs)
    back = read_splat_ply(path)
    assert back.sh.shape == (5, 1, 3)
    np.testing.assert_allclose(back.sh, gs.sh, atol=1e-6)


def test_ply_header_declares_community_layout(tmp_path):
    gs = random_set(n=3, n_sh=4)
    path = str(tmp_path / "layout.ply")
    write_splat_ply(path, gs)
    header = open(path, "rb").read().split(b"end_header")[0].decode()
    assert "format binary_little_endian 1.0" in header
    assert "element vertex 3" in header
    for name in ("x", "rot_3", "scale_2", "opacity", "f_dc_2", "f_rest_0", "f_rest_8"):
        assert f"property float {name}" in header
    assert "f_rest_9" not in header


def test_ply_rest_coefficients_are_channel_major(tmp_path):
    gs = random_set(n=1, n_sh=4)
    path = str(tmp_path / "order.ply")
    write_splat_ply(path, gs)
    blob = open(path, "rb").read()
    body = blob.split(b"end_header\n", 1)[1]
    row = np.frombuffer(body, dtype="<f4")
    rest = row[14:]  # after x,y,z, rot 0-3, scale 0-2, opacity, f_dc 0-2
    expected = gs.sh[0, 1:, :].T.reshape(-1)  # all R, then G, then B
    np.testing.assert_allclose(rest, expected, atol=1e-6)


def test_read_rejects_non_ply_and_bad_properties(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_bytes(b"not a ply at all")
    with pytest.raises(PlyFormatError):
        read_splat_ply(str(bad))
    ascii_ply = tmp_path / "ascii.ply"
    ascii_ply.write_bytes(b"ply\nformat ascii 1.0\nelement vertex 0\n"
                          b"property float x\nend_header\n")
    with pytest.raises(PlyFormatError):
        read_splat_ply(str(ascii_ply))


def test_checkpoint_round_trip(tmp_path):
    spec_a = AssetSpec("A", np.array([1.0, 1, 1]), np.array([0.5, 0.5, 0.5]))
    spec_b = AssetSpec("B", np.array([2.0, 1, 1]), np.array([1.0, 0.5, 0.0]))
    bases = [init_base_asset(spec_a, 9, rng=0), init_base_asset(spec_b, 7, rng=1)]
    variances = [VarianceAsset("A", 0, random_set(n=4, seed=2)),
                 VarianceAsset("A", 1, random_set(n=4, seed=3))]
    ilist = InstantiationList(tuple(
        InstantiationEntry("A", InstanceTransform.identity(), k) for k in range(2)))
    code = "building B {\n  level L1 { A }\n}\n"
    out = tmp_path / "ckpt"
    save_checkpoint(str(out), Checkpoint(bases, variances, ilist, code))

    back = load_checkpoint(str(out))
    assert [b.spec.id for b in back.bases] == ["A", "B"]
    np.testing.assert_allclose(back.bases[0].spec.extent, spec_a.extent)
    np.testing.assert_allclose(back.bases[1].gaussians.positions,
                               bases[1].gaussians.positions, atol=1e-6)
    assert [(v.owner_asset_id, v.instance_index) for v in back.variances] == [("A", 0), ("A", 1)]
    assert back.code == code
    assert back.instantiations is not None and len(back.instantiations) == 2
    assert back.instantiations.allclose(ilist)


def test_checkpoint_without_instantiations_or_code(tmp_path):
    spec = AssetSpec("Solo", np.ones(3), np.full(3, 0.5))
    out = tmp_path / "ckpt"
    save_checkpoint(str(out), Checkpoint([init_base_asset(spec, 3, rng=5)]))
    back = load_checkpoint(str(out))
    assert back.instantiations is None and back.code is None
    assert len(back.variances) == 0
    assert len(back.bases[0].gaussians) == 3
