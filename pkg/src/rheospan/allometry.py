"""Raster-driven accumulation.

A 2D raster sampled through a planar UV projection drives an outward
offset of the implicit body: thickness grows where the raster is high,
the way organs outgrow their neighbours by function. Rasters can be
loaded from files, generated as inverse distance to contact surfaces, or
baked from scattered samples with Shepard inverse-distance weighting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputFormatError, InvalidArgumentError
from .fields import Aabb, ScalarField
from .geometry import Vec3

__all__ = [
    "RasterField",
    "UvProjection",
    "project_uv",
    "idw_interpolate",
    "rasterize_scatter",
    "inverse_distance_raster",
    "accumulate",
    "load_raster",
    "save_rast",
]


@dataclass(frozen=True)
class RasterField:
    """Grid of reals sampled bilinearly over UV in [0, 1]^2, clamped at the
    borders. Grid nodes sit at (i/(w-1), j/(h-1)); values are row-major."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidArgumentError("raster needs a 2D value grid")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("raster values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def sample(self, u, v):
        """Bilinear sample at (u, v); scalars or equally-shaped arrays."""
        vals = self.values
        h, w = vals.shape
        uu = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        vv = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        scalar = uu.ndim == 0
        x = np.atleast_1d(uu) * (w - 1)
        y = np.atleast_1d(vv) * (h - 1)
        x0 = np.minimum(x.astype(int), max(w - 2, 0))
        y0 = np.minimum(y.astype(int), max(h - 2, 0))
        fx = x - x0
        fy = y - y0
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        top = vals[y0, x0] * (1 - fx) + vals[y0, x1] * fx
        bottom = vals[y1, x0] * (1 - fx) + vals[y1, x1] * fx
        out = top * (1 - fy) + bottom * fy
        return float(out[0]) if scalar else out

    @staticmethod
    def constant(value: float, width: int = 2, height: int = 2) -> "RasterField":
        return RasterField(np.full((height, width), float(value)))


@dataclass(frozen=True)
class UvProjection:
    """Planar chart over the span: u along the span direction, v along the
    horizontal normal. Projection ignores Y entirely."""

    origin: np.ndarray
    u_axis: np.ndarray
    v_axis: np.ndarray
    u_extent: float
    v_extent: float

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        u_axis = np.asarray(self.u_axis, dtype=float).reshape(3)
        v_axis = np.asarray(self.v_axis, dtype=float).reshape(3)
        for name, axis in (("u_axis", u_axis), ("v_axis", v_axis)):
            if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise InvalidArgumentError(f"{name} must be unit length")
            if abs(axis[1]) > 1e-9:
                raise InvalidArgumentError(f"{name} must be horizontal")
        if abs(u_axis @ v_axis) > 1e-9:
            raise InvalidArgumentError("projection axes must be orthogonal")
        if self.u_extent <= 0 or self.v_extent <= 0:
            raise InvalidArgumentError("projection extents must be > 0")
        for name, arr in (("origin", origin), ("u_axis", u_axis), ("v_axis", v_axis)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def project_uv(proj: UvProjection, p):
    """World point(s) -> (u, v); values outside [0, 1] are permitted."""
    arr = p.as_array() if isinstance(p, Vec3) else np.asarray(p, dtype=float)
    single = arr.ndim == 1
    pts = arr.reshape(-1, 3)
    rel = pts - proj.origin
    u = (rel @ proj.u_axis) / proj.u_extent
    v = (rel @ proj.v_axis) / proj.v_extent
    if single:
        return float(u[0]), float(v[0])
    return u, v


def _idw_batch(sample_uv: np.ndarray, values: np.ndarray, queries: np.ndarray, power: float) -> np.ndarray:
    d = np.linalg.norm(queries[:, None, :] - sample_uv[None, :, :], axis=2)
    hit = d < 1e-12
    weights = 1.0 / np.where(hit, 1.0, d) ** power
    out = (weights * values[None, :]).sum(axis=1) / weights.sum(axis=1)
    rows = np.nonzero(hit.any(axis=1))[0]
    for r in rows:
        out[r] = values[np.argmax(hit[r])]
    return out


def idw_interpolate(samples, query, power: float = 2.0) -> float:
    """Shepard inverse-distance weighting of scattered (u, v) samples.

    Exact at sample locations; elsewhere a convex combination of the
    sample values with weights 1/d^power.
    """
    samples = list(samples)
    if not samples:
        raise InvalidArgumentError("idw needs at least one sample")
    if power <= 0:
        raise InvalidArgumentError("idw power must be > 0")
    uv = np.array([[float(s[0][0]), float(s[0][1])] for s in samples])
    values = np.array([float(s[1]) for s in samples])
    q = np.array([[float(query[0]), float(query[1])]])
    return float(_idw_batch(uv, values, q, power)[0])


def rasterize_scatter(samples, resolution, power: float = 2.0) -> RasterField:
    """Bake scattered samples into a raster by evaluating IDW at each node."""
    samples = list(samples)
    if not samples:
        raise InvalidArgumentError("rasterize_scatter needs at least one sample")
    if power <= 0:
        raise InvalidArgumentError("idw power must be > 0")
    w, h = (resolution, resolution) if isinstance(resolution, int) else (int(resolution[0]), int(resolution[1]))
    if w < 2 or h < 2:
        raise InvalidArgumentError("raster resolution must be >= 2 per axis")
    uv = np.array([[float(s[0][0]), float(s[0][1])] for s in samples])
    values = np.array([float(s[1]) for s in samples])
    us = np.arange(w) / (w - 1)
    vs = np.arange(h) / (h - 1)
    uu, vv = np.meshgrid(us, vs)
    queries = np.column_stack([uu.ravel(), vv.ravel()])
    grid = _idw_batch(uv, values, queries, power).reshape(h, w)
    return RasterField(grid)


def inverse_distance_raster(
    contacts,
    proj: UvProjection,
    resolution,
    c: float,
    r_cap: float,
    surface_point=None,
) -> RasterField:
    """Raster of capped inverse distance to the nearest contact surface.

    Each node's world sample point is taken on the deck surface at that
    (u, v) when surface_point is supplied, otherwise on the projection
    plane. r = min(c / max(d, 1e-6 c), r_cap), normalized by r_cap so the
    result lies in (0, 1].
    """
    contacts = list(contacts)
    if not contacts:
        raise InvalidArgumentError("inverse_distance_raster needs at least one contact")
    if c <= 0 or r_cap <= 0:
        raise InvalidArgumentError("c and r_cap must be > 0")
    w, h = (resolution, resolution) if isinstance(resolution, int) else (int(resolution[0]), int(resolution[1]))
    if w < 2 or h < 2:
        raise InvalidArgumentError("raster resolution must be >= 2 per axis")
    us = np.arange(w) / (w - 1)
    vs = np.arange(h) / (h - 1)
    uu, vv = np.meshgrid(us, vs)
    u_flat = uu.ravel()
    v_flat = vv.ravel()
    if surface_point is not None:
        pts = np.asarray(surface_point(u_flat, v_flat), dtype=float).reshape(-1, 3)
    else:
        pts = (
            proj.origin[None, :]
            + np.outer(u_flat * proj.u_extent, proj.u_axis)
            + np.outer(v_flat * proj.v_extent, proj.v_axis)
        )
    dist = np.full(len(pts), np.inf)
    for contact in contacts:
        np.minimum(dist, np.abs(contact(pts)), out=dist)
    r = np.minimum(c / np.maximum(dist, 1e-6 * c), r_cap)
    return RasterField((r / r_cap).reshape(h, w))


def accumulate(body: ScalarField, raster: RasterField, proj: UvProjection, alpha: float, t0: float) -> ScalarField:
    """Outward offset of the body by alpha * t0 * raster(uv(p)).

    Subtracting from the field inflates the solid wherever the raster is
    positive; with alpha = 0 the body is returned value-identical.
    """
    if alpha < 0:
        raise InvalidArgumentError("alpha must be >= 0")
    if t0 <= 0:
        raise InvalidArgumentError("t0 must be > 0")

    def fn(pts):
        u, v = project_uv(proj, pts)
        return body._fn(pts) - (alpha * t0) * raster.sample(u, v)

    bbox = None
    if body.bbox is not None:
        margin = alpha * t0 * max(float(raster.values.max()), 0.0)
        bbox = Aabb(body.bbox.lo - margin, body.bbox.hi + margin)
    return ScalarField(fn, bbox=bbox)


def load_raster(path) -> RasterField:
    """Read a raster file: plain ASCII PGM ("P2") or float grid ("RAST w h")."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise InputFormatError(path, f"raster files are ASCII: {exc}") from exc
    tokens = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    if not tokens:
        raise InputFormatError(path, "empty raster file")
    kind = tokens[0]
    try:
        if kind == "P2":
            if len(tokens) < 4:
                raise InputFormatError(path, "truncated PGM header")
            w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
            if w < 1 or h < 1 or not 1 <= maxval <= 65535:
                raise InputFormatError(path, "bad PGM dimensions or maxval")
            data = tokens[4:]
            if len(data) != w * h:
                raise InputFormatError(path, f"expected {w * h} pixels, found {len(data)}")
            pixels = np.array([int(t) for t in data], dtype=float)
            if pixels.min() < 0 or pixels.max() > maxval:
                raise InputFormatError(path, "pixel outside [0, maxval]")
            return RasterField((pixels / maxval).reshape(h, w))
        if kind == "RAST":
            if len(tokens) < 3:
                raise InputFormatError(path, "truncated RAST header")
            w, h = int(tokens[1]), int(tokens[2])
            if w < 1 or h < 1:
                raise InputFormatError(path, "bad RAST dimensions")
            data = tokens[3:]
            if len(data) != w * h:
                raise InputFormatError(path, f"expected {w * h} values, found {len(data)}")
            values = np.array([float(t) for t in data]).reshape(h, w)
            return RasterField(values)
    except ValueError as exc:
        raise InputFormatError(path, f"malformed number: {exc}") from exc
    raise InputFormatError(path, f"unknown raster format {kind!r} (expected P2 or RAST)")


def save_rast(raster: RasterField, path) -> None:
    """Write the plain-text float grid format; values round-trip bit-exact."""
    h, w = raster.values.shape
    lines = [f"RAST {w} {h}"]
    for row in raster.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
