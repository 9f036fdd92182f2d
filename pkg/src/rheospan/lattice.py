"""Helicoid structural texture: a line segment swept by coupled vertical
translation and rotation, thickened, clipped to a square-prism unit cell
and tiled with mirrored repeats.

The helicoid through a vertical axis at (x0, z0) with pitch P (rise per
full turn), phase phi and handedness sigma is the zero set of

    g(p) = x' * sin(k*y + phi) - z' * cos(k*y + phi),   k = sigma * 2*pi / P

with (x', z') relative to the axis. g is exact on the surface; dividing by
sqrt(1 + k^2 * (x'^2 + z'^2)) (a first-order |grad g| estimate) turns it
into a pseudo-distance that is accurate near the surface, which is where
thickness offsets need accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .fields import Aabb, ScalarField, intersect, primitive_prism_y, thicken_surface, union

__all__ = [
    "HelicoidSpec",
    "TileSpec",
    "LatticeSpec",
    "helicoid_field",
    "rheotomic_tile",
    "tile_lattice",
]

HANDEDNESS = ("right", "left")
MIRROR_RULES = ("checkerboard_mirror_x", "none")


@dataclass(frozen=True)
class HelicoidSpec:
    """Swept-segment helicoid: pitch is the rise per full turn, r_max the
    radial extent of the segment, axis the vertical line (x0, z0)."""

    pitch: float
    phase: float = 0.0
    handedness: str = "right"
    r_max: float = 1.0
    axis: tuple = (0.0, 0.0)
    two_sided: bool = True

    def __post_init__(self):
        if self.pitch <= 0:
            raise InvalidArgumentError("helicoid pitch must be > 0")
        if self.r_max <= 0:
            raise InvalidArgumentError("helicoid r_max must be > 0")
        if self.handedness not in HANDEDNESS:
            raise InvalidArgumentError(f"handedness must be one of {HANDEDNESS}")

    @property
    def k(self) -> float:
        sigma = 1.0 if self.handedness == "right" else -1.0
        return sigma * 2.0 * math.pi / self.pitch


@dataclass(frozen=True)
class TileSpec:
    """Unit cell: square prism of side `cell` clipped around a thickened
    helicoid whose axis sits at the cell center. `sheets` selects one or
    two helicoid sheets per cell (the second is phase-shifted a quarter
    turn)."""

    cell: float
    y_min: float
    y_max: float
    helicoid: HelicoidSpec
    thickness: float
    sheets: int = 1

    def __post_init__(self):
        if self.cell <= 0:
            raise InvalidArgumentError("tile cell side must be > 0")
        if self.y_max <= self.y_min:
            raise InvalidArgumentError("tile needs y_max > y_min")
        if self.thickness <= 0:
            raise InvalidArgumentError("tile thickness must be > 0")
        if self.thickness >= 0.5 * self.cell:
            raise InvalidArgumentError("tile thickness must be < cell/2")
        if self.sheets not in (1, 2):
            raise InvalidArgumentError("sheets must be 1 or 2")

    @property
    def center_xz(self) -> tuple:
        return self.helicoid.axis


@dataclass(frozen=True)
class LatticeSpec:
    tile: TileSpec
    repeats: tuple = (1, 1)
    mirror_rule: str = "checkerboard_mirror_x"

    def __post_init__(self):
        nx, nz = (int(r) for r in self.repeats)
        if nx < 1 or nz < 1:
            raise InvalidArgumentError("lattice repeats must be >= 1")
        object.__setattr__(self, "repeats", (nx, nz))
        if self.mirror_rule not in MIRROR_RULES:
            raise InvalidArgumentError(f"mirror rule must be one of {MIRROR_RULES}")


def helicoid_field(spec: HelicoidSpec) -> ScalarField:
    """Signed pseudo-distance to the swept-segment helicoid surface.

    Beyond the segment's radial extent the value is clamped positive via
    max with (radius - r_max), so the zero set is the bounded sheet.
    """
    k = spec.k
    phase = spec.phase
    x0, z0 = float(spec.axis[0]), float(spec.axis[1])
    r_max = spec.r_max
    two_sided = spec.two_sided

    def fn(pts):
        u = pts[:, 0] - x0
        w = pts[:, 2] - z0
        angle = k * pts[:, 1] + phase
        sin_a = np.sin(angle)
        cos_a = np.cos(angle)
        g = u * sin_a - w * cos_a
        d = g / np.sqrt(1.0 + k * k * (u * u + w * w))
        radial = np.hypot(u, w)
        out = np.maximum(d, radial - r_max)
        if not two_sided:
            out = np.maximum(out, -(u * cos_a + w * sin_a))
        return out

    return ScalarField(fn)


def rheotomic_tile(spec: TileSpec) -> ScalarField:
    """intersect(thicken(helicoid, t0), unit-cell prism)."""
    surface = helicoid_field(spec.helicoid)
    body = thicken_surface(surface, spec.thickness)
    if spec.sheets == 2:
        second = HelicoidSpec(
            pitch=spec.helicoid.pitch,
            phase=spec.helicoid.phase + 0.5 * math.pi,
            handedness=spec.helicoid.handedness,
            r_max=spec.helicoid.r_max,
            axis=spec.helicoid.axis,
            two_sided=spec.helicoid.two_sided,
        )
        body = union(body, thicken_surface(helicoid_field(second), spec.thickness))
    prism = primitive_prism_y(0.5 * spec.cell, spec.y_min, spec.y_max, center_xz=spec.center_xz)
    return intersect(body, prism)


def tile_lattice(spec: LatticeSpec) -> ScalarField:
    """Union of the tile over an nx-by-nz repeat grid in XZ.

    Under the checkerboard rule, cells with odd (i + j) evaluate the base
    tile through a mirror across their own x center plane. Mirroring flips
    handedness, and because the tile is invariant under a half turn about
    its axis, fields of adjacent cells agree exactly on every shared face.
    """
    tile = spec.tile
    tile_fn = rheotomic_tile(tile)._fn
    a = tile.cell
    cx, cz = tile.center_xz
    nx, nz = spec.repeats
    mirror = spec.mirror_rule == "checkerboard_mirror_x"

    offsets = []
    for i in range(nx):
        for j in range(nz):
            offsets.append((i * a, j * a, mirror and (i + j) % 2 == 1))

    def fn(pts):
        best = np.full(len(pts), np.inf)
        local = np.empty_like(pts)
        for dx, dz, mirrored in offsets:
            local[:, 0] = pts[:, 0] - (cx + dx)
            local[:, 1] = pts[:, 1]
            local[:, 2] = pts[:, 2] - (cz + dz)
            if mirrored:
                local[:, 0] = -local[:, 0]
            local[:, 0] += cx
            local[:, 2] += cz
            np.minimum(best, tile_fn(local), out=best)
        return best

    lo = np.array([cx - 0.5 * a, tile.y_min, cz - 0.5 * a])
    hi = np.array([cx + (nx - 0.5) * a, tile.y_max, cz + (nz - 0.5) * a])
    return ScalarField(fn, bbox=Aabb(lo, hi))
