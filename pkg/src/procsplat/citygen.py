"""Procedural city generation: block partition, secondary roads, building
placement, decorations, and assembly of whole toy cities from an asset
library.

The ground plane is z = 0; layout geometry is 2-D (meters).  A building
placement is an axis-of-road-aligned rectangle; the owning building code is
expanded at the rectangle's dimensions, so the same library yields buildings
of varying arrangement and size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union

from .assembly import BaseAsset, Scene, VarianceAsset, assemble
from .core import GaussianSet
from .grammar import (
    AssetSpec,
    ExpandError,
    InstanceTransform,
    InstantiationEntry,
    InstantiationList,
    ProceduralCode,
    expand,
)

# dropped entirely: degenerate slivers produced by clipping
_MIN_BLOCK_AREA = 1e-9
_MIN_ROAD_LENGTH = 1e-6


class CityGenError(ValueError):
    """Invalid layout geometry or an inconsistent generation request."""


# ---------------------------------------------------------------------------
# geometry primitives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoadSegment:
    """A straight road: center-line from a to b with a total width."""

    a: np.ndarray      # (2,)
    b: np.ndarray      # (2,)
    width: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.shape != (2,) or b.shape != (2,):
            raise CityGenError("road endpoints must be 2-D points")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise CityGenError("road endpoints must be finite")
        if self.width <= 0:
            raise CityGenError("road width must be positive")
        if np.allclose(a, b):
            raise CityGenError("road endpoints coincide")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def direction(self) -> np.ndarray:
        d = self.b - self.a
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    def line(self) -> LineString:
        return LineString([self.a, self.b])

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "width": self.width}

    @classmethod
    def from_json(cls, d: dict) -> "RoadSegment":
        return cls(np.asarray(d["a"], dtype=float), np.asarray(d["b"], dtype=float),
                   float(d["width"]))


@dataclass(frozen=True)
class Placement:
    """One building footprint: a rectangle aligned to its block's road axis."""

    center: np.ndarray   # (2,) rectangle center
    size: np.ndarray     # (2,) (extent along road axis, extent across)
    angle: float         # radians, rotation of the along-road axis from +x
    height: float
    block_index: int
    seed: int
    var_seed: int = 0    # drives the variance assignment at assembly time
    code_id: "str | None" = None

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "size", np.asarray(self.size, dtype=np.float64))

    @property
    def axes(self) -> np.ndarray:
        """Rows: along-road unit u and across-road unit v."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, s], [-s, c]])

    def corners(self) -> np.ndarray:
        u, v = self.axes
        hw, hd = self.size / 2.0
        return np.array([self.center + sx * hw * u + sy * hd * v
                         for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))])

    def polygon(self) -> Polygon:
        return Polygon(self.corners())

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "size": self.size.tolist(),
                "angle": self.angle, "height": self.height,
                "block_index": self.block_index, "seed": self.seed,
                "var_seed": self.var_seed, "code_id": self.code_id}

    @classmethod
    def from_json(cls, d: dict) -> "Placement":
        return cls(np.asarray(d["center"], dtype=float),
                   np.asarray(d["size"], dtype=float), float(d["angle"]),
                   float(d["height"]), int(d["block_index"]), int(d["seed"]),
                   int(d.get("var_seed", 0)), d.get("code_id"))


@dataclass(frozen=True)
class Decoration:
    """A roadside prop instance: an asset id with a pose on the ground."""

    kind: str
    position: np.ndarray  # (2,)
    rotation: float       # radians about +z

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))

    def to_json(self) -> dict:
        return {"kind": self.kind, "position": self.position.tolist(),
                "rotation": self.rotation}

    @classmethod
    def from_json(cls, d: dict) -> "Decoration":
        return cls(d["kind"], np.asarray(d["position"], dtype=float),
                   float(d["rotation"]))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionProfile:
    """Per-block regional characteristics: what gets built and how densely."""

    name: str = "default"
    width_range: tuple = (6.0, 12.0)    # footprint extent along the road
    depth_range: tuple = (5.0, 9.0)     # footprint extent across
    height_range: tuple = (6.0, 15.0)
    density: float = 1.0                # acceptance probability per candidate
    setback: float = 2.0                # clearance from the block edge
    spacing: float = 2.0                # minimum gap between footprints

    def __post_init__(self):
        for name in ("width_range", "depth_range", "height_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise CityGenError(f"{name} must satisfy 0 < lo <= hi")
        if not 0.0 <= self.density <= 1.0:
            raise CityGenError("density must be within [0, 1]")
        if self.setback < 0 or self.spacing < 0:
            raise CityGenError("setback and spacing must be non-negative")


@dataclass(frozen=True)
class DecorationConfig:
    """Roadside prop placement: Poisson spacing along both road edges."""

    kinds: tuple = ()
    mean_spacing: float = 10.0
    edge_offset: float = 0.5

    def __post_init__(self):
        if self.mean_spacing <= 0:
            raise CityGenError("mean_spacing must be positive")
        if self.edge_offset < 0:
            raise CityGenError("edge_offset must be non-negative")


@dataclass(frozen=True)
class CityConfig:
    """Everything generate_city needs besides the layout and the library."""

    road_interval: float = 25.0        # spacing of secondary roads
    secondary_width: float = 3.0
    profiles: tuple = (RegionProfile(),)
    decoration: DecorationConfig = DecorationConfig()

    def __post_init__(self):
        if self.road_interval <= 0 or self.secondary_width <= 0:
            raise CityGenError("road dimensions must be positive")
        if not self.profiles:
            raise CityGenError("at least one region profile is required")


@dataclass
class AssetLibrary:
    """Fitted assets available to the generator.

    Variance pools hold residual detail sets per base asset, possibly
    collected from several source buildings; decorations are ordinary
    single-instance base assets.
    """

    manifest: "list[AssetSpec]"
    bases: "list[BaseAsset]"
    variance_pools: "dict[str, list[GaussianSet]]" = field(default_factory=dict)
    codes: "list[ProceduralCode]" = field(default_factory=list)

    def __post_init__(self):
        ids = {s.id for s in self.manifest}
        for b in self.bases:
            if b.spec.id not in ids:
                raise CityGenError(f"base asset {b.spec.id!r} missing from manifest")
        for owner in self.variance_pools:
            if owner not in {b.spec.id for b in self.bases}:
                raise CityGenError(f"variance pool owner {owner!r} has no base asset")

    def code_by_id(self, building_id: str) -> ProceduralCode:
        for c in self.codes:
            if c.building_id == building_id:
                return c
        raise CityGenError(f"unknown building code {building_id!r}")

    @classmethod
    def from_checkpoint(cls, ckpt) -> "AssetLibrary":
        """Collect a fitted checkpoint into a generation library: its bases,
        its per-instance variance sets pooled by owning asset, its code."""
        from .grammar import parse_program
        pools: "dict[str, list[GaussianSet]]" = {}
        for v in ckpt.variances:
            if len(v.gaussians):
                pools.setdefault(v.owner_asset_id, []).append(v.gaussians)
        codes = parse_program(ckpt.code) if ckpt.code else []
        return cls([b.spec for b in ckpt.bases], list(ckpt.bases), pools, codes)


@dataclass
class CityLayout:
    """The generated plan: everything needed to rebuild or display the city."""

    boundary: np.ndarray               # (N, 2) exterior ring
    primary_roads: "list[RoadSegment]"
    blocks: "list[Polygon]"
    secondary_roads: "list[RoadSegment]"
    placements: "list[Placement]"
    decorations: "list[Decoration]"
    profile_names: "list[str]" = field(default_factory=list)  # per block

    def to_json(self) -> dict:
        return {
            "boundary": np.asarray(self.boundary, dtype=float).tolist(),
            "primary_roads": [r.to_json() for r in self.primary_roads],
            "blocks": [{
                "exterior": np.asarray(p.exterior.coords, dtype=float).tolist(),
                "holes": [np.asarray(h.coords, dtype=float).tolist()
                          for h in p.interiors],
            } for p in self.blocks],
            "secondary_roads": [r.to_json() for r in self.secondary_roads],
            "placements": [p.to_json() for p in self.placements],
            "decorations": [d.to_json() for d in self.decorations],
            "profile_names": list(self.profile_names),
        }

    @classmethod
    def from_json(cls, d: dict) -> "CityLayout":
        return cls(
            boundary=np.asarray(d["boundary"], dtype=float),
            primary_roads=[RoadSegment.from_json(r) for r in d["primary_roads"]],
            blocks=[Polygon(b["exterior"], b.get("holes", []))
                    for b in d["blocks"]],
            secondary_roads=[RoadSegment.from_json(r)
                             for r in d["secondary_roads"]],
            placements=[Placement.from_json(p) for p in d["placements"]],
            decorations=[Decoration.from_json(x) for x in d["decorations"]],
            profile_names=list(d.get("profile_names", [])),
        )


def parse_layout_input(d: dict) -> "tuple[np.ndarray, list[RoadSegment]]":
    """Decode the canvas payload: {boundary: [[x,y]...], primary_roads: [...]}."""
    try:
        boundary = np.asarray(d["boundary"], dtype=np.float64)
        roads = [RoadSegment.from_json(r) for r in d.get("primary_roads", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise CityGenError(f"bad layout payload: {exc}") from exc
    if boundary.ndim != 2 or boundary.shape[1] != 2 or len(boundary) < 3:
        raise CityGenError("boundary must be a list of at least 3 [x, y] points")
    return boundary, roads


# ---------------------------------------------------------------------------
# block partition
# ---------------------------------------------------------------------------

def _boundary_polygon(boundary: np.ndarray) -> Polygon:
    boundary = np.asarray(boundary, dtype=np.float64)
    if boundary.ndim != 2 or boundary.shape[1] != 2 or len(boundary) < 3:
        raise CityGenError("boundary must be a list of at least 3 [x, y] points")
    poly = Polygon(boundary)
    if not poly.is_valid or poly.area <= 0:
        raise CityGenError("boundary polygon is self-intersecting or degenerate")
    return poly


def road_area(roads: "list[RoadSegment]") -> "Polygon | None":
    """The union of all road strips (center-lines inflated to their width)."""
    if not roads:
        return None
    strips = [r.line().buffer(r.width / 2.0, cap_style="flat") for r in roads]
    return unary_union(strips)


def partition_blocks(boundary: np.ndarray,
                     primary_roads: "list[RoadSegment]") -> "list[Polygon]":
    """Split the boundary interior into blocks by carving out the roads."""
    poly = _boundary_polygon(boundary)
    strips = road_area(primary_roads)
    region = poly if strips is None else poly.difference(strips)
    blocks = [g for g in shapely.get_parts(region)
              if isinstance(g, Polygon) and g.area > _MIN_BLOCK_AREA]
    return sorted(blocks, key=lambda g: (g.centroid.x, g.centroid.y))


# ---------------------------------------------------------------------------
# secondary roads
# ---------------------------------------------------------------------------

def _nearest_road(block: Polygon, roads: "list[RoadSegment]") -> "RoadSegment | None":
    if not roads:
        return None
    return min(roads, key=lambda r: block.distance(r.line()))


def generate_secondary_roads(blocks: "list[Polygon]",
                             primary_roads: "list[RoadSegment]",
                             config: CityConfig,
                             seed: int = 0) -> "list[RoadSegment]":
    """March perpendiculars off each block's nearest primary road.

    Stations sit at (i + 1/2) * interval along the block's extent in the
    primary road's direction, so a block shorter than one interval gets no
    roads and a long block gets floor(length / interval) of them.
    """
    del seed  # stations are deterministic; the signature keeps the seam
    segments: "list[RoadSegment]" = []
    for block in blocks:
        road = _nearest_road(block, primary_roads)
        if road is None:
            continue
        u = road.direction
        v = np.array([-u[1], u[0]])
        pts = np.asarray(block.exterior.coords, dtype=np.float64)
        t = pts @ u
        t0, t1 = float(t.min()), float(t.max())
        n = int(math.floor((t1 - t0) / config.road_interval))
        s = pts @ v
        s0, s1 = float(s.min()) - 1.0, float(s.max()) + 1.0
        for i in range(n):
            ti = t0 + (i + 0.5) * config.road_interval
            probe = LineString([ti * u + s0 * v, ti * u + s1 * v])
            cut = block.intersection(probe)
            for piece in shapely.get_parts(cut):
                if isinstance(piece, LineString) and piece.length > _MIN_ROAD_LENGTH:
                    q = np.asarray(piece.coords, dtype=np.float64)
                    segments.append(RoadSegment(q[0], q[-1],
                                                config.secondary_width))
    return segments


# ---------------------------------------------------------------------------
# building placement
# ---------------------------------------------------------------------------

def place_buildings(block: Polygon, profile: RegionProfile, seed: int,
                    axis: "np.ndarray | None" = None,
                    block_index: int = 0) -> "list[Placement]":
    """Greedy strip packing of road-aligned rectangles inside one block.

    The block is eroded by the setback, sliced into horizontal strips (in
    the road frame) one maximum depth + spacing apart, and each strip is
    walked left to right, drawing footprint sizes from the profile.  Rows
    and the strip band are centered in the leftover space, and candidates
    that stick out of the eroded block are discarded.
    """
    rng = np.random.default_rng(seed)
    u = np.array([1.0, 0.0]) if axis is None else np.asarray(axis, dtype=np.float64)
    u = u / np.linalg.norm(u)
    angle = math.atan2(u[1], u[0])
    frame = np.array([[u[0], u[1]], [-u[1], u[0]]])  # world -> road frame

    inner = block.buffer(-profile.setback, join_style="mitre")
    if inner.is_empty:
        return []
    inner = max((g for g in shapely.get_parts(inner) if isinstance(g, Polygon)),
                key=lambda g: g.area, default=None)
    if inner is None or inner.area <= _MIN_BLOCK_AREA:
        return []

    local = np.asarray(inner.exterior.coords, dtype=np.float64) @ frame.T
    (lx0, ly0), (lx1, ly1) = local.min(axis=0), local.max(axis=0)
    w_max = profile.width_range[1]
    d_max = profile.depth_range[1]
    pitch = d_max + profile.spacing
    n_strips = int(math.floor((ly1 - ly0 + profile.spacing) / pitch))
    if n_strips == 0 or lx1 - lx0 < profile.width_range[0]:
        return []
    band = n_strips * pitch - profile.spacing
    y_first = ly0 + ((ly1 - ly0) - band) / 2.0 + d_max / 2.0

    placements: "list[Placement]" = []
    for strip in range(n_strips):
        yc = y_first + strip * pitch
        row: "list[tuple[float, float, float, float, bool]]" = []
        x = lx0
        while True:
            w = rng.uniform(*profile.width_range)
            d = rng.uniform(*profile.depth_range)
            h = rng.uniform(*profile.height_range)
            keep = rng.random() < profile.density
            if x + w > lx1:
                break
            row.append((x, w, d, h, keep))
            x += w + profile.spacing
        if not row:
            continue
        used = row[-1][0] + row[-1][1] - lx0
        shift = ((lx1 - lx0) - used) / 2.0
        for x, w, d, h, keep in row:
            if not keep:
                continue
            cl = np.array([x + shift + w / 2.0, yc])
            rect_local = [cl + np.array(off) for off in
                          ((-w / 2, -d / 2), (w / 2, -d / 2),
                           (w / 2, d / 2), (-w / 2, d / 2))]
            rect_world = Polygon([frame.T @ p for p in rect_local])
            if not inner.contains(rect_world):
                continue
            placements.append(Placement(
                center=frame.T @ cl, size=np.array([w, d]), angle=angle,
                height=h, block_index=block_index,
                seed=int(rng.integers(2 ** 31))))
    return placements


# ---------------------------------------------------------------------------
# decorations
# ---------------------------------------------------------------------------

def place_decorations(roads: "list[RoadSegment]", config: DecorationConfig,
                      seed: int,
                      footprints: "list[Polygon] | None" = None) -> "list[Decoration]":
    """Poisson-spaced props along road edges, never inside a footprint.

    Arrivals march down each road with exponential gaps (mean spacing from
    the config); each arrival picks a random side of the road and a random
    kind, faces the road, and is dropped if it lands inside a building.
    """
    if not config.kinds:
        return []
    rng = np.random.default_rng(seed)
    blocked = unary_union(footprints) if footprints else None
    out: "list[Decoration]" = []
    for road in roads:
        u = road.direction
        v = np.array([-u[1], u[0]])
        offset = road.width / 2.0 + config.edge_offset
        t = 0.0
        while True:
            t += rng.exponential(config.mean_spacing)
            if t >= road.length:
                break
            side = 1.0 if rng.random() < 0.5 else -1.0
            kind = config.kinds[rng.integers(len(config.kinds))]
            pos = road.a + t * u + side * offset * v
            facing = -side * v
            if blocked is not None and blocked.intersects(Point(pos)):
                continue
            out.append(Decoration(kind, pos, math.atan2(facing[1], facing[0])))
    return out


# ---------------------------------------------------------------------------
# building and city assembly
# ---------------------------------------------------------------------------

def _draw_variances(ilist: InstantiationList, library: AssetLibrary,
                    rng: np.random.Generator) -> "list[VarianceAsset]":
    """Uniform per-instance draw from the owning asset's variance pool."""
    out = []
    for e in ilist:
        pool = library.variance_pools.get(e.asset_id)
        if pool:
            out.append(VarianceAsset(e.asset_id, e.variance_index,
                                     pool[int(rng.integers(len(pool)))]))
    return out


def building_instantiation(code: ProceduralCode, dims, library: AssetLibrary,
                           seed: int = 0) -> "tuple[InstantiationList, list[VarianceAsset]]":
    """Expand a building and draw its variance assignment, unassembled."""
    rng = np.random.default_rng(seed)
    ilist = expand(code, library.manifest, dims=dims)
    return ilist, _draw_variances(ilist, library, rng)


def generate_building(code: ProceduralCode, dims, library: AssetLibrary,
                      seed: int = 0) -> Scene:
    """Expand a building at the given dims and assemble it with random
    variance assignment; the same seed always yields the same building."""
    ilist, variances = building_instantiation(code, dims, library, seed)
    return assemble(ilist, library.bases, variances)


def _rot_z_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _placed_transform(t: InstanceTransform, rot: np.ndarray,
                      shift: np.ndarray) -> InstanceTransform:
    return InstanceTransform(R=rot @ t.R, T=rot @ t.T + shift, S=t.S)


def _expand_placement(p: Placement, library: AssetLibrary,
                      rng: np.random.Generator):
    """Pick a feasible code for the footprint; None when nothing fits."""
    order = rng.permutation(len(library.codes))
    dims = (float(p.size[0]), float(p.size[1]), p.height)
    for j in order:
        code = library.codes[int(j)]
        try:
            return code, expand(code, library.manifest, dims=dims)
        except ExpandError:
            continue
    return None


def generate_layout(boundary: np.ndarray, primary_roads: "list[RoadSegment]",
                    library: AssetLibrary, config: CityConfig,
                    seed: int = 0) -> CityLayout:
    """Plan the city: blocks, secondary roads, feasible building placements
    (each pinned to a code and its assembly seeds), and decorations."""
    if not library.codes:
        raise CityGenError("the library has no building codes to place")
    for kind in config.decoration.kinds:
        if kind not in {b.spec.id for b in library.bases}:
            raise CityGenError(f"decoration kind {kind!r} has no base asset")

    rng = np.random.default_rng(seed)
    blocks = partition_blocks(boundary, primary_roads)
    profile_picks = [int(rng.integers(len(config.profiles))) for _ in blocks]
    secondary = generate_secondary_roads(blocks, primary_roads, config)
    block_seeds = [int(rng.integers(2 ** 31)) for _ in blocks]
    decoration_seed = int(rng.integers(2 ** 31))

    placements: "list[Placement]" = []
    for bi, block in enumerate(blocks):
        profile = config.profiles[profile_picks[bi]]
        road = _nearest_road(block, primary_roads)
        axis = road.direction if road is not None else None
        for p in place_buildings(block, profile, block_seeds[bi], axis, bi):
            rng_p = np.random.default_rng(p.seed)
            picked = _expand_placement(p, library, rng_p)
            if picked is None:
                continue
            code, _ = picked
            placements.append(replace(p, var_seed=int(rng_p.integers(2 ** 31)),
                                      code_id=code.building_id))

    all_roads = list(primary_roads) + list(secondary)
    decorations = place_decorations(
        all_roads, config.decoration, decoration_seed,
        footprints=[p.polygon() for p in placements])

    return CityLayout(
        boundary=np.asarray(boundary, dtype=np.float64),
        primary_roads=list(primary_roads),
        blocks=blocks,
        secondary_roads=secondary,
        placements=placements,
        decorations=decorations,
        profile_names=[config.profiles[i].name for i in profile_picks],
    )


def city_instantiation(layout: CityLayout, library: AssetLibrary
                       ) -> "tuple[InstantiationList, list[VarianceAsset]]":
    """The full city as one instantiation list plus its variance draws.

    A pure function of (layout, library): placements replay their stored
    seeds, decorations instantiate their base asset directly, so the same
    layout always assembles to the same scene.
    """
    entries: "list[InstantiationEntry]" = []
    variances: "list[VarianceAsset]" = []
    next_k: "dict[str, int]" = {}

    for p in layout.placements:
        if p.code_id is None:
            raise CityGenError("placement has no code assigned; run the layout"
                               " generator first")
        code = library.code_by_id(p.code_id)
        dims = (float(p.size[0]), float(p.size[1]), p.height)
        ilist = expand(code, library.manifest, dims=dims)
        rot = _rot_z_matrix(p.angle)
        corner = p.center - p.axes.T @ (p.size / 2.0)
        shift = np.array([corner[0], corner[1], 0.0])
        rekeyed = []
        for e in ilist:
            k = next_k.get(e.asset_id, 0)
            next_k[e.asset_id] = k + 1
            rekeyed.append(InstantiationEntry(
                e.asset_id, _placed_transform(e.transform, rot, shift), k))
        entries.extend(rekeyed)
        variances.extend(_draw_variances(
            InstantiationList(tuple(rekeyed)), library,
            np.random.default_rng(p.var_seed)))

    for d in layout.decorations:
        k = next_k.get(d.kind, 0)
        next_k[d.kind] = k + 1
        entries.append(InstantiationEntry(
            d.kind,
            InstanceTransform(R=_rot_z_matrix(d.rotation),
                              T=np.array([d.position[0], d.position[1], 0.0]),
                              S=np.ones(3)),
            k))

    if not entries:
        raise CityGenError("the layout produced no buildings or decorations")
    return InstantiationList(tuple(entries)), variances


def assemble_city(layout: CityLayout, library: AssetLibrary) -> Scene:
    """Build the flattened scene a layout describes."""
    ilist, variances = city_instantiation(layout, library)
    return assemble(ilist, library.bases, variances)


def generate_city(boundary: np.ndarray, primary_roads: "list[RoadSegment]",
                  library: AssetLibrary, config: CityConfig,
                  seed: int = 0) -> "tuple[CityLayout, Scene]":
    """Layout pipeline plus assembly: one flattened scene for the whole city."""
    layout = generate_layout(boundary, primary_roads, library, config, seed)
    return layout, assemble_city(layout, library)


__all__ = [
    "AssetLibrary",
    "CityConfig",
    "CityGenError",
    "CityLayout",
    "Decoration",
    "DecorationConfig",
    "Placement",
    "RegionProfile",
    "RoadSegment",
    "assemble_city",
    "building_instantiation",
    "city_instantiation",
    "generate_building",
    "generate_city",
    "generate_layout",
    "generate_secondary_roads",
    "parse_layout_input",
    "partition_blocks",
    "place_buildings",
    "place_decorations",
    "road_area",
]
