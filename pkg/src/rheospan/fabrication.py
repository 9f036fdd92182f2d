"""Fields to fabrication data: isosurface extraction, deck slope analysis,
vertical slicing into layer contours, overhang-driven support estimation
and mesh/layer exports.

Layering follows the vertical (Y) axis, matching how the printed models
are built up; layer polygons live in the horizontal XZ plane with CCW
outer boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._mc_tables import EDGE_TABLE, TRI_TABLE
from .errors import InvalidArgumentError, ResourceLimitError
from .fields import Aabb, ScalarField, VoxelGrid

__all__ = [
    "Mesh",
    "Layer",
    "LayerStack",
    "SlopeReport",
    "SupportEstimate",
    "marching_cubes",
    "marching_squares",
    "polygon_area",
    "slope_report",
    "slice_field",
    "estimate_support",
    "export_mesh",
    "export_layers",
    "is_watertight",
]

# Corner c of a cell at offsets (dx, dy, dz); bit c set when value < iso.
_CORNER_OFFSETS = np.array(
    [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    dtype=np.int64,
)
# Cell edge -> (base corner, axis): the lattice edge from the base corner
# one step along the axis. Keys built this way are shared between
# neighbouring cells, which is what welds the mesh watertight.
_EDGE_BASE = np.array(
    [(0, 0), (1, 1), (3, 0), (0, 1), (4, 0), (5, 1), (7, 0), (4, 1), (0, 2), (1, 2), (2, 2), (3, 2)],
    dtype=np.int64,
)


@dataclass
class Mesh:
    """Indexed triangle set."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise InvalidArgumentError("triangle indices out of range")

    def triangle_normals(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        n = np.cross(b - a, c - a)
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 1e-300)

    def area(self) -> float:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return float(0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())

    def volume(self) -> float:
        """Signed enclosed volume; positive for outward-wound closed meshes."""
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def cleaned(self) -> "Mesh":
        """Drop triangles with repeated indices or area below 1e-14."""
        tris = self.triangles
        distinct = (
            (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
        )
        a = self.vertices[tris[:, 0]]
        b = self.vertices[tris[:, 1]]
        c = self.vertices[tris[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        return Mesh(self.vertices, tris[distinct & (areas >= 1e-14)])


def is_watertight(mesh: Mesh) -> bool:
    """Every undirected edge is shared by exactly two triangles."""
    if len(mesh.triangles) == 0:
        return False
    edges = {}
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    return all(count == 2 for count in edges.values())


def marching_cubes(grid: VoxelGrid, iso: float = 0.0) -> Mesh:
    """Standard 256-case marching cubes with linear edge interpolation.

    Vertices are welded on shared lattice edges (watertight whenever the
    zero set stays off the grid boundary) and ordered by lattice edge key,
    so identical grids produce byte-identical meshes.
    """
    nx, ny, nz = grid.dims
    if nx < 2 or ny < 2 or nz < 2:
        raise InvalidArgumentError("marching cubes needs at least 2 samples per axis")
    vals = grid.grid3d()
    inside = vals < iso
    code = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    for bit, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        code |= inside[dx : nx - 1 + dx, dy : ny - 1 + dy, dz : nz - 1 + dz].astype(np.int32) << bit
    ax, ay, az = np.nonzero((code != 0) & (code != 255))
    if len(ax) == 0:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    codes = code[ax, ay, az]
    rows = TRI_TABLE[codes]

    # Global key of the lattice edge hosting each cell edge.
    corner_lin = np.empty((len(ax), 8), dtype=np.int64)
    for c, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        corner_lin[:, c] = (ax + dx) + nx * ((ay + dy) + ny * (az + dz))
    edge_keys = np.empty((len(ax), 12), dtype=np.int64)
    for e, (base, axis) in enumerate(_EDGE_BASE):
        edge_keys[:, e] = corner_lin[:, base] * 3 + axis

    tri_chunks = []
    for col in range(0, 16, 3):
        emit = rows[:, col] >= 0
        if not np.any(emit):
            break
        cells = np.nonzero(emit)[0]
        tri = np.stack(
            [
                edge_keys[cells, rows[cells, col]],
                edge_keys[cells, rows[cells, col + 1]],
                edge_keys[cells, rows[cells, col + 2]],
            ],
            axis=1,
        )
        tri_chunks.append((cells, tri))
    order = np.concatenate([cells for cells, _ in tri_chunks])
    tris_keys = np.concatenate([tri for _, tri in tri_chunks])
    perm = np.argsort(order, kind="stable")
    tris_keys = tris_keys[perm]

    unique_keys, inverse = np.unique(tris_keys.ravel(), return_inverse=True)
    triangles = inverse.reshape(-1, 3)

    axis = unique_keys % 3
    lin = unique_keys // 3
    iz = lin // (nx * ny)
    rem = lin % (nx * ny)
    iy = rem // nx
    ix = rem % nx
    v0 = vals[ix, iy, iz]
    jx = ix + (axis == 0)
    jy = iy + (axis == 1)
    jz = iz + (axis == 2)
    v1 = vals[jx, jy, jz]
    delta = v1 - v0
    t = np.where(np.abs(delta) > 1e-300, (iso - v0) / np.where(delta == 0.0, 1.0, delta), 0.5)
    base = np.column_stack([ix, iy, iz]).astype(float)
    step = np.zeros((len(unique_keys), 3))
    step[np.arange(len(unique_keys)), axis] = t
    vertices = grid.origin + grid.spacing * (base + step)

    # With inside = value < iso, the classic tables wind triangles so that
    # outward normals point toward the positive side after this flip.
    triangles = triangles[:, ::-1]
    return Mesh(vertices, triangles).cleaned()


@dataclass
class SlopeReport:
    """Per-cell deck slopes in percent, along the walking direction (u)
    and across it (v), with rectangles of cells at or above threshold."""

    slope_u_pct: np.ndarray
    slope_v_pct: np.ndarray
    threshold_pct: float
    regions: list

    @property
    def max_slope_pct(self) -> float:
        finite = self.slope_u_pct[np.isfinite(self.slope_u_pct)]
        return float(finite.max()) if len(finite) else float("inf")

    @property
    def max_cross_slope_pct(self) -> float:
        finite = self.slope_v_pct[np.isfinite(self.slope_v_pct)]
        return float(finite.max()) if len(finite) else float("inf")


def _edge_slopes(points: np.ndarray, axis: int) -> np.ndarray:
    """Percent slope of each grid edge along the given axis."""
    delta = np.diff(points, axis=axis)
    rise = np.abs(delta[..., 1])
    run = np.hypot(delta[..., 0], delta[..., 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = 100.0 * rise / run
    slopes[run < 1e-14] = np.inf
    return slopes


def slope_report(deck, threshold_pct: float) -> SlopeReport:
    if threshold_pct <= 0:
        raise InvalidArgumentError("slope threshold must be > 0")
    pts = deck.points
    slopes_u_edges = _edge_slopes(pts, axis=0)  # (n-1, m)
    slopes_v_edges = _edge_slopes(pts, axis=1)  # (n, m-1)
    slope_u = 0.5 * (slopes_u_edges[:, :-1] + slopes_u_edges[:, 1:])
    slope_v = 0.5 * (slopes_v_edges[:-1, :] + slopes_v_edges[1:, :])
    flagged = slope_u >= threshold_pct
    labels, count = ndimage.label(flagged)
    regions = []
    for sl in ndimage.find_objects(labels):
        regions.append((int(sl[0].start), int(sl[0].stop), int(sl[1].start), int(sl[1].stop)))
    return SlopeReport(slope_u, slope_v, float(threshold_pct), regions)


# Marching squares: directed segments per case, inside (value < iso) kept
# on the left so outer contours come out CCW in the (x, z) plane. Edges of
# a cell: b(ottom), r(ight), t(op), l(eft); corner bits A=(i,j), B=(i+1,j),
# C=(i+1,j+1), D=(i,j+1).
_MS_SEGMENTS = {
    1: [("b", "l")],
    2: [("r", "b")],
    3: [("r", "l")],
    4: [("t", "r")],
    6: [("t", "b")],
    7: [("t", "l")],
    8: [("l", "t")],
    9: [("b", "t")],
    11: [("r", "t")],
    12: [("l", "r")],
    13: [("b", "r")],
    14: [("l", "b")],
}
_MS_SADDLE = {
    5: ([("b", "r"), ("t", "l")], [("b", "l"), ("t", "r")]),
    10: ([("l", "b"), ("r", "t")], [("r", "b"), ("l", "t")]),
}


def _ms_edge_id(i: int, j: int, side: str, nx: int):
    if side == "b":
        return ((j * nx + i) << 1)
    if side == "t":
        return (((j + 1) * nx + i) << 1)
    if side == "l":
        return ((j * nx + i) << 1) | 1
    return ((j * nx + i + 1) << 1) | 1


def marching_squares(values: np.ndarray, iso: float, origin, cell: float) -> list:
    """Closed contours of the iso level of a 2D node grid.

    values is indexed [i, j] for world (x, z) = origin + cell * (i, j).
    Returns a list of (K, 2) arrays; orientation is CCW for outer
    boundaries of the negative region (sign from the field gradient along
    the crossing edges), CW for holes.
    """
    values = np.asarray(values, dtype=float)
    nx, nz = values.shape
    inside = values < iso
    code = (
        inside[:-1, :-1].astype(np.int8)
        | (inside[1:, :-1].astype(np.int8) << 1)
        | (inside[1:, 1:].astype(np.int8) << 2)
        | (inside[:-1, 1:].astype(np.int8) << 3)
    )
    successors = {}
    ii, jj = np.nonzero((code != 0) & (code != 15))
    for i, j in zip(ii.tolist(), jj.tolist()):
        case = int(code[i, j])
        if case in _MS_SADDLE:
            center = 0.25 * (values[i, j] + values[i + 1, j] + values[i + 1, j + 1] + values[i, j + 1])
            segs = _MS_SADDLE[case][0] if center < iso else _MS_SADDLE[case][1]
        else:
            segs = _MS_SEGMENTS[case]
        for start, end in segs:
            successors[_ms_edge_id(i, j, start, nx)] = _ms_edge_id(i, j, end, nx)

    x0, z0 = float(origin[0]), float(origin[1])

    def edge_point(edge_id: int):
        vertical = edge_id & 1
        node = edge_id >> 1
        j, i = divmod(node, nx)
        if vertical:
            v0, v1 = values[i, j], values[i, j + 1]
            t = (iso - v0) / (v1 - v0) if v1 != v0 else 0.5
            return (x0 + cell * i, z0 + cell * (j + t))
        v0, v1 = values[i, j], values[i + 1, j]
        t = (iso - v0) / (v1 - v0) if v1 != v0 else 0.5
        return (x0 + cell * (i + t), z0 + cell * j)

    contours = []
    remaining = dict(successors)
    while remaining:
        start = min(remaining)
        chain = [start]
        current = remaining.pop(start)
        while current != start and current in remaining:
            chain.append(current)
            current = remaining.pop(current)
        if current != start:
            chain.append(current)  # open chain (zero set met the boundary)
        contours.append(np.array([edge_point(e) for e in chain], dtype=float))
    return contours


def polygon_area(points: np.ndarray) -> float:
    """Signed shoelace area of an implicitly closed polygon."""
    p = np.asarray(points, dtype=float)
    if len(p) < 3:
        return 0.0
    x, z = p[:, 0], p[:, 1]
    return float(0.5 * np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


@dataclass
class Layer:
    height: float
    model_contours: list
    support_contours: list = field(default_factory=list)

    def model_area(self) -> float:
        return sum(polygon_area(c) for c in self.model_contours)

    def support_area(self) -> float:
        return sum(polygon_area(c) for c in self.support_contours)


@dataclass
class LayerStack:
    """Ordered horizontal slices plus the sampling grid they came from.

    model_masks holds the per-layer solid node masks (indexed [i, j] like
    the contour grid); the support estimator rasterizes on the same grid.
    """

    layer_height: float
    layers: list
    grid_origin: tuple
    cell: float
    grid_dims: tuple
    model_masks: list = field(default_factory=list, repr=False)

    def cell_area(self) -> float:
        return self.cell * self.cell


def slice_field(
    f: ScalarField,
    bbox: Aabb,
    layer_height: float,
    xy_resolution: int,
    max_bytes: int = 512 * 1024 * 1024,
) -> LayerStack:
    """Slice the field into horizontal layers.

    Layer k is sampled at height y_min + (k + 0.5) * h; marching squares
    on the in-plane node grid yields the closed model contours. The
    in-plane cell size is the larger horizontal extent divided by
    xy_resolution, so rescaled scenes slice onto congruent grids.
    """
    if layer_height <= 0:
        raise InvalidArgumentError("layer height must be > 0")
    if xy_resolution < 2:
        raise InvalidArgumentError("xy resolution must be >= 2")
    ext = bbox.extent()
    count = int(math.ceil(ext[1] / layer_height - 1e-9))
    cell = max(ext[0], ext[2]) / xy_resolution
    if cell <= 0:
        raise InvalidArgumentError("slicing needs a nonempty horizontal extent")
    nx = int(np.floor(ext[0] / cell + 1e-9)) + 1
    nz = int(np.floor(ext[2] / cell + 1e-9)) + 1
    if nx * nz * 8 > max_bytes:
        raise ResourceLimitError(f"slice grid {nx}x{nz} exceeds {max_bytes} bytes")
    xs = bbox.lo[0] + cell * np.arange(nx)
    zs = bbox.lo[2] + cell * np.arange(nz)
    xx, zz = np.meshgrid(xs, zs, indexing="ij")  # indexed [i, j] = [x, z]
    flat_x = xx.ravel()
    flat_z = zz.ravel()
    layers = []
    masks = []
    for k in range(count):
        y = bbox.lo[1] + (k + 0.5) * layer_height
        pts = np.column_stack([flat_x, np.full(flat_x.shape, y), flat_z])
        vals = f._fn(pts).reshape(nx, nz)
        contours = marching_squares(vals, 0.0, (bbox.lo[0], bbox.lo[2]), cell)
        layers.append(Layer(height=float(y), model_contours=contours))
        masks.append(vals < 0.0)
    return LayerStack(
        layer_height=float(layer_height),
        layers=layers,
        grid_origin=(float(bbox.lo[0]), float(bbox.lo[2])),
        cell=float(cell),
        grid_dims=(nx, nz),
        model_masks=masks,
    )


@dataclass
class SupportEstimate:
    stack: LayerStack
    model_volume: float
    support_volume: float
    support_fraction: float
    overhang_deg: float
    support_masks: list = field(default_factory=list, repr=False)


def _disk_structure(radius_cells: float) -> np.ndarray:
    r = int(math.floor(radius_cells + 1e-9))
    if r < 1:
        return np.ones((1, 1), dtype=bool)
    span = np.arange(-r, r + 1)
    dx, dz = np.meshgrid(span, span, indexing="ij")
    return (dx * dx + dz * dz) <= radius_cells * radius_cells + 1e-9


def estimate_support(stack: LayerStack, overhang_deg: float = 45.0) -> SupportEstimate:
    """Raster support estimation on the slicing grid.

    A solid cell in layer k is supported when some solid cell of layer
    k-1 lies within horizontal radius h*tan(overhang); unsupported cells
    seed support columns running down through empty cells to ground or
    solid. Support contours are traced from the support raster.
    """
    if not 0.0 < overhang_deg < 90.0:
        raise InvalidArgumentError("overhang angle must lie in (0, 90) degrees")
    if not stack.model_masks:
        raise InvalidArgumentError("layer stack carries no raster masks to analyze")
    masks = stack.model_masks
    h = stack.layer_height
    radius_cells = h * math.tan(math.radians(overhang_deg)) / stack.cell
    disk = _disk_structure(radius_cells)
    count = len(masks)
    unsupported = [np.zeros_like(masks[0])]  # layer 0 rests on the bed
    for k in range(1, count):
        reach = ndimage.binary_dilation(masks[k - 1], structure=disk)
        unsupported.append(masks[k] & ~reach)
    support_masks = [np.zeros_like(masks[0]) for _ in range(count)]
    active = np.zeros_like(masks[0])
    for k in range(count - 1, -1, -1):
        if k < count - 1:
            active = active | unsupported[k + 1]
        support_masks[k] = active & ~masks[k]
        active = support_masks[k]
    cell_area = stack.cell_area()
    model_cells = sum(int(m.sum()) for m in masks)
    support_cells = sum(int(s.sum()) for s in support_masks)
    model_volume = model_cells * cell_area * h
    support_volume = support_cells * cell_area * h
    fraction = support_volume / model_volume if model_volume > 0 else 0.0
    new_layers = []
    for layer, support in zip(stack.layers, support_masks):
        contours = []
        if support.any():
            contours = marching_squares(0.5 - support.astype(float), 0.0, stack.grid_origin, stack.cell)
        new_layers.append(Layer(layer.height, list(layer.model_contours), contours))
    new_stack = LayerStack(
        stack.layer_height,
        new_layers,
        stack.grid_origin,
        stack.cell,
        stack.grid_dims,
        list(masks),
    )
    return SupportEstimate(
        new_stack, model_volume, support_volume, fraction, float(overhang_deg), support_masks
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def export_mesh(mesh: Mesh, path, fmt: str = "obj") -> None:
    if fmt == "obj":
        lines = []
        for v in mesh.vertices:
            lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
        for t in mesh.triangles:
            lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    if fmt == "stl_ascii":
        normals = mesh.triangle_normals()
        lines = ["solid rheospan"]
        for tri, n in zip(mesh.triangles, normals):
            lines.append(f"  facet normal {_fmt(n[0])} {_fmt(n[1])} {_fmt(n[2])}")
            lines.append("    outer loop")
            for idx in tri:
                v = mesh.vertices[idx]
                lines.append(f"      vertex {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
            lines.append("    endloop")
            lines.append("  endfacet")
        lines.append("endsolid rheospan")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    raise InvalidArgumentError(f"unknown mesh format {fmt!r} (expected obj or stl_ascii)")


def _svg_path(points: np.ndarray) -> str:
    coords = " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in points)
    return coords


def export_layers(stack: LayerStack, out_dir, fmt: str = "svg") -> list:
    """Write layer files plus a manifest; returns the file names written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt == "svg":
        x0, z0 = stack.grid_origin
        nx, nz = stack.grid_dims
        width = stack.cell * (nx - 1)
        height = stack.cell * (nz - 1)
        for k, layer in enumerate(stack.layers):
            name = f"layer_{k:04d}.svg"
            lines = [
                '<?xml version="1.0" encoding="UTF-8"?>',
                f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(x0)} {_fmt(z0)} {_fmt(width)} {_fmt(height)}">',
                "  <defs>",
                '    <pattern id="hatch" width="0.2" height="0.2" patternTransform="rotate(45)" patternUnits="userSpaceOnUse">',
                '      <line x1="0" y1="0" x2="0" y2="0.2" stroke="black" stroke-width="0.04"/>',
                "    </pattern>",
                "  </defs>",
            ]
            for contour in layer.model_contours:
                lines.append(f'  <polygon points="{_svg_path(contour)}" fill="silver" stroke="black" stroke-width="0.01"/>')
            for contour in layer.support_contours:
                lines.append(f'  <polygon class="support" points="{_svg_path(contour)}" fill="url(#hatch)" stroke="gray" stroke-width="0.01"/>')
            lines.append("</svg>")
            with open(os.path.join(out_dir, name), "w", encoding="ascii") as fh:
                fh.write("\n".join(lines) + "\n")
            written.append(name)
    elif fmt == "toolpath_text":
        lines = []
        for k, layer in enumerate(stack.layers):
            lines.append(f"LAYER {k} {_fmt(layer.height)}")
            for contour in layer.model_contours:
                lines.append("POLY M " + " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in contour))
            for contour in layer.support_contours:
                lines.append("POLY S " + " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in contour))
        name = "toolpath.txt"
        with open(os.path.join(out_dir, name), "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        written.append(name)
    else:
        raise InvalidArgumentError(f"unknown layer format {fmt!r} (expected svg or toolpath_text)")
    manifest = {
        "layer_count": len(stack.layers),
        "layer_height": stack.layer_height,
        "format": fmt,
        "files": written,
    }
    with open(os.path.join(out_dir, "layers_manifest.json"), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
