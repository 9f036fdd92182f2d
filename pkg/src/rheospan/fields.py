"""Composable implicit scalar fields.

A field maps world points to reals with the convention negative = inside,
zero = on the surface. Booleans are pointwise min/max (standard F-rep):
results stay valid implicit functions even though they under/over-estimate
Euclidean distance, so thickness offsets are applied to pre-boolean
pseudo-distances. Evaluation is vectorized over (N, 3) point arrays and
per-point, which makes dense sampling bit-identical regardless of chunking
or thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputFormatError, InvalidArgumentError, ResourceLimitError
from .geometry import Affine3, Vec3

__all__ = [
    "Aabb",
    "ScalarField",
    "VoxelGrid",
    "constant_field",
    "primitive_box",
    "primitive_prism_y",
    "half_space",
    "sphere_field",
    "union",
    "intersect",
    "difference",
    "thicken_surface",
    "transform_field",
    "gradient",
    "sample_grid",
    "dump_vgrid",
    "load_vgrid",
]

DEFAULT_GRID_BUDGET = 2 * 1024**3  # bytes of float64 values per sampled grid

_EVAL_CHUNK = 65536


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, a conservative bound for a field's solid region."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi < lo):
            raise InvalidArgumentError("bounding box is empty")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def of_points(pts: np.ndarray) -> "Aabb":
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return Aabb(pts.min(axis=0), pts.max(axis=0))

    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    def dilated(self, margin: float) -> "Aabb":
        return Aabb(self.lo - margin, self.hi + margin)

    def enclosing(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def corners(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        return np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])],
            dtype=float,
        )


class ScalarField:
    """Wraps an evaluation function over (N, 3) arrays plus optional
    metadata: a conservative bounding box of the solid and an upper bound
    on the Lipschitz constant when one is known."""

    def __init__(self, fn, bbox: Aabb | None = None, lipschitz: float | None = None):
        self._fn = fn
        self.bbox = bbox
        self.lipschitz = lipschitz

    def __call__(self, pts):
        arr = np.asarray(pts, dtype=float)
        if arr.ndim == 1:
            return float(self._fn(arr.reshape(1, 3))[0])
        return self._fn(arr)

    def at(self, x: float, y: float, z: float) -> float:
        return self(np.array([x, y, z], dtype=float))

    def __or__(self, other: "ScalarField") -> "ScalarField":
        return union(self, other)

    def __and__(self, other: "ScalarField") -> "ScalarField":
        return intersect(self, other)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return difference(self, other)


def constant_field(value: float) -> ScalarField:
    v = float(value)
    return ScalarField(lambda pts: np.full(len(pts), v), lipschitz=0.0)


def primitive_box(center, half_extents) -> ScalarField:
    """Exact signed distance of an axis-aligned box."""
    c = center.as_array() if isinstance(center, Vec3) else np.asarray(center, dtype=float)
    h = half_extents.as_array() if isinstance(half_extents, Vec3) else np.asarray(half_extents, dtype=float)
    if np.any(h <= 0):
        raise InvalidArgumentError("box half extents must be > 0")

    def fn(pts):
        q = np.abs(pts - c) - h
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    return ScalarField(fn, bbox=Aabb(c - h, c + h), lipschitz=1.0)


def primitive_prism_y(half_width: float, y_min: float, y_max: float, center_xz=(0.0, 0.0)) -> ScalarField:
    """Square prism with vertical axis: the lattice unit-cell clipper."""
    if half_width <= 0:
        raise InvalidArgumentError("prism half width must be > 0")
    if y_max <= y_min:
        raise InvalidArgumentError("prism needs y_max > y_min")
    cx, cz = float(center_xz[0]), float(center_xz[1])
    cy = 0.5 * (y_min + y_max)
    return primitive_box((cx, cy, cz), (half_width, 0.5 * (y_max - y_min), half_width))


def half_space(origin, normal) -> ScalarField:
    """Half space, negative on the side opposite the (unit) normal."""
    o = origin.as_array() if isinstance(origin, Vec3) else np.asarray(origin, dtype=float)
    n = normal.as_array() if isinstance(normal, Vec3) else np.asarray(normal, dtype=float)
    norm = float(np.linalg.norm(n))
    if norm < 1e-15:
        raise InvalidArgumentError("half-space normal must be nonzero")
    n = n / norm
    return ScalarField(lambda pts: (pts - o) @ n, lipschitz=1.0)


def sphere_field(center, radius: float) -> ScalarField:
    if radius <= 0:
        raise InvalidArgumentError("sphere radius must be > 0")
    c = center.as_array() if isinstance(center, Vec3) else np.asarray(center, dtype=float)
    fn = lambda pts: np.linalg.norm(pts - c, axis=1) - radius
    return ScalarField(fn, bbox=Aabb(c - radius, c + radius), lipschitz=1.0)


def _merged_lipschitz(f: ScalarField, g: ScalarField) -> float | None:
    if f.lipschitz is None or g.lipschitz is None:
        return None
    return max(f.lipschitz, g.lipschitz)


def union(f: ScalarField, g: ScalarField) -> ScalarField:
    bbox = None
    if f.bbox is not None and g.bbox is not None:
        bbox = f.bbox.enclosing(g.bbox)
    return ScalarField(lambda pts: np.minimum(f._fn(pts), g._fn(pts)), bbox=bbox, lipschitz=_merged_lipschitz(f, g))


def intersect(f: ScalarField, g: ScalarField) -> ScalarField:
    bbox = f.bbox if f.bbox is not None else g.bbox
    if f.bbox is not None and g.bbox is not None:
        lo = np.maximum(f.bbox.lo, g.bbox.lo)
        hi = np.minimum(f.bbox.hi, g.bbox.hi)
        bbox = Aabb(lo, np.maximum(lo, hi))
    return ScalarField(lambda pts: np.maximum(f._fn(pts), g._fn(pts)), bbox=bbox, lipschitz=_merged_lipschitz(f, g))


def difference(f: ScalarField, g: ScalarField) -> ScalarField:
    return ScalarField(lambda pts: np.maximum(f._fn(pts), -g._fn(pts)), bbox=f.bbox, lipschitz=_merged_lipschitz(f, g))


def thicken_surface(f: ScalarField, thickness: float) -> ScalarField:
    """Slab of the given total thickness around the zero set of f."""
    if thickness <= 0:
        raise InvalidArgumentError("thickness must be > 0")
    half = 0.5 * thickness
    bbox = f.bbox.dilated(half) if f.bbox is not None else None
    return ScalarField(lambda pts: np.abs(f._fn(pts)) - half, bbox=bbox, lipschitz=f.lipschitz)


def transform_field(f: ScalarField, transform: Affine3) -> ScalarField:
    """Field seen through an affine map: p -> f(T^-1 p).

    Rigid motions preserve distances; general affines keep the zero set
    correct but not the metric, which the Lipschitz metadata reflects.
    """
    if not transform.is_invertible():
        raise InvalidArgumentError("field transform must be invertible")
    inverse = transform.inverse()
    lipschitz = None
    if f.lipschitz is not None:
        op_norm = float(np.linalg.norm(inverse.linear, 2))
        lipschitz = f.lipschitz * op_norm
    bbox = None
    if f.bbox is not None:
        bbox = Aabb.of_points(transform.apply_points(f.bbox.corners()))
    return ScalarField(lambda pts: f._fn(inverse.apply_points(pts)), bbox=bbox, lipschitz=lipschitz)


def gradient(f: ScalarField, p, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient; accepts one point or an (N, 3) array."""
    if h <= 0:
        raise InvalidArgumentError("finite-difference step must be > 0")
    arr = p.as_array() if isinstance(p, Vec3) else np.asarray(p, dtype=float)
    single = arr.ndim == 1
    pts = arr.reshape(-1, 3)
    out = np.empty_like(pts)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        out[:, axis] = (f(pts + step) - f(pts - step)) / (2.0 * h)
    return out[0] if single else out


@dataclass(frozen=True)
class VoxelGrid:
    """Dense samples at the corner lattice of an isotropic grid.

    values is flat in x-fastest order: index = ix + nx*(iy + ny*iz).
    """

    origin: np.ndarray
    spacing: float
    dims: tuple
    values: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        nx, ny, nz = (int(d) for d in self.dims)
        object.__setattr__(self, "dims", (nx, ny, nz))
        if self.spacing <= 0:
            raise InvalidArgumentError("grid spacing must be > 0")
        values = np.asarray(self.values, dtype=float).reshape(nx * ny * nz)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def grid3d(self) -> np.ndarray:
        """View indexed [ix, iy, iz]."""
        nx, ny, nz = self.dims
        return self.values.reshape(nz, ny, nx).transpose(2, 1, 0)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.dims[axis])

    def negative_count(self) -> int:
        return int(np.count_nonzero(self.values < 0.0))

    def solid_volume(self) -> float:
        """Voxel-counting volume estimate: negative corners * cell volume."""
        return self.negative_count() * self.spacing**3


def grid_dims_for(bbox: Aabb, spacing: float) -> tuple:
    if spacing <= 0:
        raise InvalidArgumentError("grid spacing must be > 0")
    ext = bbox.extent()
    return tuple(int(np.floor(e / spacing + 1e-9)) + 1 for e in ext)


def sample_grid(f: ScalarField, bbox: Aabb, spacing: float, max_bytes: int = DEFAULT_GRID_BUDGET) -> VoxelGrid:
    """Sample f on the corner lattice covering bbox.

    Evaluation is chunked but per-point, so results are bit-identical for
    any chunking. Grids whose value storage exceeds max_bytes are refused.
    """
    dims = grid_dims_for(bbox, spacing)
    nx, ny, nz = dims
    total = nx * ny * nz
    if total * 8 > max_bytes:
        raise ResourceLimitError(
            f"grid {nx}x{ny}x{nz} needs {total * 8} bytes of values, budget is {max_bytes}"
        )
    xs = bbox.lo[0] + spacing * np.arange(nx)
    ys = bbox.lo[1] + spacing * np.arange(ny)
    zs = bbox.lo[2] + spacing * np.arange(nz)
    zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    values = np.empty(total)
    for start in range(0, total, _EVAL_CHUNK):
        stop = min(start + _EVAL_CHUNK, total)
        values[start:stop] = f._fn(pts[start:stop])
    return VoxelGrid(bbox.lo.copy(), spacing, dims, values)


def dump_vgrid(grid: VoxelGrid, path) -> None:
    """Debug dump: ASCII header line, then little-endian float32, x-fastest."""
    nx, ny, nz = grid.dims
    ox, oy, oz = (float(v) for v in grid.origin)
    header = f"VGRID {nx} {ny} {nz} {float(grid.spacing)!r} {ox!r} {oy!r} {oz!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(grid.values.astype("<f4").tobytes())


def load_vgrid(path) -> VoxelGrid:
    with open(path, "rb") as fh:
        header = bytearray()
        while True:
            b = fh.read(1)
            if not b:
                raise InputFormatError(path, "truncated VGRID header")
            if b == b"\n":
                break
            header.extend(b)
        parts = header.decode("ascii", "replace").split()
        if len(parts) != 8 or parts[0] != "VGRID":
            raise InputFormatError(path, "malformed VGRID header")
        try:
            nx, ny, nz = int(parts[1]), int(parts[2]), int(parts[3])
            spacing = float(parts[4])
            origin = [float(parts[5]), float(parts[6]), float(parts[7])]
        except ValueError as exc:
            raise InputFormatError(path, f"bad VGRID header field: {exc}") from exc
        payload = fh.read()
    expected = nx * ny * nz * 4
    if len(payload) != expected:
        raise InputFormatError(path, f"expected {expected} payload bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4").astype(float)
    return VoxelGrid(origin, spacing, (nx, ny, nz), values)
