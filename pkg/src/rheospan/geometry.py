"""Vectors, affine transforms, curves, planar cross-sections and their
time-keyed animation.

Conventions used throughout the package: world units are meters, the frame
is right-handed and Y points vertically up.  Angles are radians everywhere
in code; degrees appear only at file and CLI boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "Vec3",
    "Affine3",
    "PlaneBasis",
    "Frame",
    "Curve",
    "Segment",
    "Arc",
    "Circle",
    "Polyline",
    "HermiteBlend",
    "TransformedCurve",
    "Section",
    "TrackKey",
    "SectionTrack",
    "affine_apply",
    "sample_curve",
    "sample_section",
    "evaluate_track",
    "blend_g1",
]

_COPLANAR_TOL = 1e-9


@dataclass(frozen=True)
class Vec3:
    """Immutable 3-vector / point. Components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise InvalidArgumentError(f"non-finite vector components: {self}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n < 1e-15:
            raise InvalidArgumentError("cannot normalize a zero-length vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


Point3 = Vec3


def _frozen_array(values, shape) -> np.ndarray:
    a = np.asarray(values, dtype=float).reshape(shape)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Affine3:
    """3x3 linear part plus translation: p -> linear @ p + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", _frozen_array(self.linear, (3, 3)))
        object.__setattr__(self, "translation", _frozen_array(self.translation, (3,)))

    @staticmethod
    def identity() -> "Affine3":
        return Affine3(np.eye(3), np.zeros(3))

    @staticmethod
    def translate(dx: float, dy: float, dz: float) -> "Affine3":
        return Affine3(np.eye(3), np.array([dx, dy, dz], dtype=float))

    @staticmethod
    def scale(sx: float, sy: float, sz: float) -> "Affine3":
        return Affine3(np.diag([sx, sy, sz]).astype(float), np.zeros(3))

    @staticmethod
    def rotate_x(angle: float) -> "Affine3":
        c, s = math.cos(angle), math.sin(angle)
        return Affine3(np.array([[1, 0, 0], [0, c, s], [0, -s, c]], dtype=float), np.zeros(3))

    @staticmethod
    def rotate_y(angle: float) -> "Affine3":
        # x' = x cos(a) + z sin(a), z' = -x sin(a) + z cos(a)
        c, s = math.cos(angle), math.sin(angle)
        return Affine3(np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float), np.zeros(3))

    @staticmethod
    def rotate_z(angle: float) -> "Affine3":
        c, s = math.cos(angle), math.sin(angle)
        return Affine3(np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]], dtype=float), np.zeros(3))

    @staticmethod
    def mirror_x() -> "Affine3":
        return Affine3(np.diag([-1.0, 1.0, 1.0]), np.zeros(3))

    def determinant(self) -> float:
        return float(np.linalg.det(self.linear))

    def is_invertible(self, tol: float = 1e-12) -> bool:
        return abs(self.determinant()) > tol

    def inverse(self) -> "Affine3":
        if not self.is_invertible():
            raise InvalidArgumentError("affine transform is singular")
        inv = np.linalg.inv(self.linear)
        return Affine3(inv, -inv @ self.translation)

    def compose(self, other: "Affine3") -> "Affine3":
        """Transform applying `other` first, then `self`."""
        return Affine3(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def apply(self, p: Vec3) -> Vec3:
        return Vec3.from_array(self.linear @ p.as_array() + self.translation)

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an (N, 3) array of points."""
        return pts @ self.linear.T + self.translation

    def apply_vector(self, v: Vec3) -> Vec3:
        """Apply the linear part only (for tangents and directions)."""
        return Vec3.from_array(self.linear @ v.as_array())


def affine_apply(transform: Affine3, p: Vec3) -> Vec3:
    return transform.apply(p)


@dataclass(frozen=True)
class PlaneBasis:
    """Two in-plane axes of a curve's plane. Defaults to the world XZ plane."""

    u_axis: Vec3 = Vec3(1.0, 0.0, 0.0)
    v_axis: Vec3 = Vec3(0.0, 0.0, 1.0)

    def __post_init__(self):
        if abs(self.u_axis.norm() - 1.0) > 1e-9 or abs(self.v_axis.norm() - 1.0) > 1e-9:
            raise InvalidArgumentError("plane basis axes must be unit length")
        if abs(self.u_axis.dot(self.v_axis)) > 1e-9:
            raise InvalidArgumentError("plane basis axes must be orthogonal")


class Curve:
    """Base for the curve variants. Parameter t runs over [0, 1]."""

    closed: bool = False

    def point_at(self, t: float) -> Vec3:
        raise NotImplementedError

    def tangent_at(self, t: float) -> Vec3:
        raise NotImplementedError

    def transformed(self, transform: Affine3) -> "Curve":
        return TransformedCurve(self, transform)


@dataclass(frozen=True)
class Segment(Curve):
    p0: Vec3
    p1: Vec3

    def point_at(self, t: float) -> Vec3:
        return self.p0 + (self.p1 - self.p0) * t

    def tangent_at(self, t: float) -> Vec3:
        return self.p1 - self.p0

    def transformed(self, transform: Affine3) -> "Segment":
        return Segment(transform.apply(self.p0), transform.apply(self.p1))


@dataclass(frozen=True)
class Arc(Curve):
    """Circular arc in the plane spanned by `frame`, swept CCW from
    start_angle to end_angle (angular span must lie in (0, 2*pi])."""

    center: Vec3
    radius: float
    start_angle: float
    end_angle: float
    frame: PlaneBasis = field(default_factory=PlaneBasis)

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidArgumentError("arc radius must be > 0")
        span = self.end_angle - self.start_angle
        if not (0.0 < span <= 2.0 * math.pi + 1e-12):
            raise InvalidArgumentError("arc angular span must lie in (0, 2*pi]")

    def _angle(self, t: float) -> float:
        return self.start_angle + t * (self.end_angle - self.start_angle)

    def point_at(self, t: float) -> Vec3:
        a = self._angle(t)
        return self.center + self.frame.u_axis * (self.radius * math.cos(a)) + self.frame.v_axis * (
            self.radius * math.sin(a)
        )

    def tangent_at(self, t: float) -> Vec3:
        a = self._angle(t)
        span = self.end_angle - self.start_angle
        return (
            self.frame.u_axis * (-self.radius * span * math.sin(a))
            + self.frame.v_axis * (self.radius * span * math.cos(a))
        )


@dataclass(frozen=True)
class Circle(Curve):
    center: Vec3
    radius: float
    frame: PlaneBasis = field(default_factory=PlaneBasis)
    closed = True

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidArgumentError("circle radius must be > 0")

    def point_at(self, t: float) -> Vec3:
        a = 2.0 * math.pi * t
        return self.center + self.frame.u_axis * (self.radius * math.cos(a)) + self.frame.v_axis * (
            self.radius * math.sin(a)
        )

    def tangent_at(self, t: float) -> Vec3:
        a = 2.0 * math.pi * t
        k = 2.0 * math.pi * self.radius
        return self.frame.u_axis * (-k * math.sin(a)) + self.frame.v_axis * (k * math.cos(a))


@dataclass(frozen=True)
class Polyline(Curve):
    """Piecewise-linear curve parameterized by cumulative chord length."""

    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if len(pts) < 2:
            raise InvalidArgumentError("polyline needs at least 2 points")
        object.__setattr__(self, "points", pts)
        lengths = [0.0]
        for a, b in zip(pts[:-1], pts[1:]):
            lengths.append(lengths[-1] + (b - a).norm())
        object.__setattr__(self, "_cumulative", tuple(lengths))

    def _locate(self, t: float):
        total = self._cumulative[-1]
        if total <= 0.0:
            return 0, 0.0
        target = t * total
        cum = self._cumulative
        for i in range(len(cum) - 1):
            if target <= cum[i + 1] or i == len(cum) - 2:
                seg_len = cum[i + 1] - cum[i]
                local = 0.0 if seg_len <= 0 else (target - cum[i]) / seg_len
                return i, min(max(local, 0.0), 1.0)
        return len(cum) - 2, 1.0

    def point_at(self, t: float) -> Vec3:
        i, local = self._locate(t)
        a, b = self.points[i], self.points[i + 1]
        return a + (b - a) * local

    def tangent_at(self, t: float) -> Vec3:
        i, _ = self._locate(t)
        return self.points[i + 1] - self.points[i]

    def transformed(self, transform: Affine3) -> "Polyline":
        return Polyline(tuple(transform.apply(p) for p in self.points))


@dataclass(frozen=True)
class HermiteBlend(Curve):
    """Cubic Hermite blend: endpoints p0/p1 with tangent vectors m0/m1."""

    p0: Vec3
    m0: Vec3
    p1: Vec3
    m1: Vec3

    @property
    def is_degenerate(self) -> bool:
        return (self.p1 - self.p0).norm() < 1e-12

    def point_at(self, t: float) -> Vec3:
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return self.p0 * h00 + self.m0 * h10 + self.p1 * h01 + self.m1 * h11

    def tangent_at(self, t: float) -> Vec3:
        t2 = t * t
        d00 = 6 * t2 - 6 * t
        d10 = 3 * t2 - 4 * t + 1
        d01 = -6 * t2 + 6 * t
        d11 = 3 * t2 - 2 * t
        return self.p0 * d00 + self.m0 * d10 + self.p1 * d01 + self.m1 * d11


@dataclass(frozen=True)
class TransformedCurve(Curve):
    """A base curve seen through an affine map.

    Keeps non-uniformly scaled circles (ellipses) representable without
    growing the curve vocabulary; affine maps preserve tangency, so G1
    relationships between transformed curves survive unchanged.
    """

    base: Curve
    transform: Affine3

    @property
    def closed(self) -> bool:  # type: ignore[override]
        return self.base.closed

    def point_at(self, t: float) -> Vec3:
        return self.transform.apply(self.base.point_at(t))

    def tangent_at(self, t: float) -> Vec3:
        return self.transform.apply_vector(self.base.tangent_at(t))

    def transformed(self, transform: Affine3) -> "TransformedCurve":
        return TransformedCurve(self.base, transform.compose(self.transform))


@dataclass(frozen=True)
class Frame:
    """Section placement: origin, forward (local Z, in plane) and up
    (local Y, the section-plane normal). Sections are plan-view figures in
    horizontal planes; the three track transforms all act in this frame."""

    origin: Vec3 = Vec3(0.0, 0.0, 0.0)
    forward: Vec3 = Vec3(0.0, 0.0, 1.0)
    up: Vec3 = Vec3(0.0, 1.0, 0.0)

    def __post_init__(self):
        if abs(self.forward.norm() - 1.0) > 1e-9 or abs(self.up.norm() - 1.0) > 1e-9:
            raise InvalidArgumentError("frame axes must be unit length")
        if abs(self.forward.dot(self.up)) > 1e-9:
            raise InvalidArgumentError("frame axes must be orthogonal")

    @property
    def lateral(self) -> Vec3:
        """Local X = up x forward (right-handed)."""
        return self.up.cross(self.forward)

    def to_world(self) -> Affine3:
        lat = self.lateral
        linear = np.column_stack([lat.as_array(), self.up.as_array(), self.forward.as_array()])
        return Affine3(linear, self.origin.as_array())


@dataclass(frozen=True)
class Section:
    """Ordered list of coplanar curves plus the plane frame they live in."""

    curves: tuple
    frame: Frame = field(default_factory=Frame)

    def __post_init__(self):
        curves = tuple(self.curves)
        if not curves:
            raise InvalidArgumentError("section needs at least one curve")
        object.__setattr__(self, "curves", curves)
        up = self.frame.up
        origin = self.frame.origin
        for ci, curve in enumerate(curves):
            for t in (0.0, 0.17, 0.33, 0.5, 0.71, 0.89, 1.0):
                d = (curve.point_at(t) - origin).dot(up)
                if abs(d) > _COPLANAR_TOL:
                    raise InvalidArgumentError(
                        f"curve {ci} leaves the section plane by {d:.3e} (tolerance {_COPLANAR_TOL})"
                    )

    def transformed(self, transform: Affine3) -> "Section":
        new_curves = tuple(c.transformed(transform) for c in self.curves)
        origin = transform.apply(self.frame.origin)
        forward = transform.apply_vector(self.frame.forward).normalized()
        up = transform.apply_vector(self.frame.up).normalized()
        return Section(new_curves, Frame(origin, forward, up))


@dataclass(frozen=True)
class TrackKey:
    """One animation key: values reached at time t, applied scale -> rotate
    -> translate in the section's local frame."""

    t: float
    scale_z: float = 1.0
    rotate_y: float = 0.0
    translate_y: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise InvalidArgumentError("key time must lie in [0, 1]")
        if self.scale_z <= 0.0:
            raise InvalidArgumentError("key scale_z must be > 0")


@dataclass(frozen=True)
class SectionTrack:
    base: Section
    keys: tuple

    def __post_init__(self):
        keys = tuple(self.keys)
        if not keys:
            raise InvalidArgumentError("track needs at least one key")
        times = [k.t for k in keys]
        if times != sorted(times):
            raise InvalidArgumentError("track keys must be sorted by time")
        first = keys[0]
        if first.t != 0.0 or first.scale_z != 1.0 or first.rotate_y != 0.0 or first.translate_y != 0.0:
            raise InvalidArgumentError("first key must be the identity at t=0")
        object.__setattr__(self, "keys", keys)

    def values_at(self, t: float):
        """Linearly interpolated (scale_z, rotate_y, translate_y) at time t."""
        keys = self.keys
        if t <= keys[0].t:
            k = keys[0]
            return k.scale_z, k.rotate_y, k.translate_y
        for a, b in zip(keys[:-1], keys[1:]):
            if t <= b.t:
                span = b.t - a.t
                w = 0.0 if span <= 0 else (t - a.t) / span
                return (
                    a.scale_z + w * (b.scale_z - a.scale_z),
                    a.rotate_y + w * (b.rotate_y - a.rotate_y),
                    a.translate_y + w * (b.translate_y - a.translate_y),
                )
        k = keys[-1]
        return k.scale_z, k.rotate_y, k.translate_y


def sample_curve(curve: Curve, n: int) -> list:
    """n points at equal parameter spacing.

    Open curves include both endpoints exactly; closed curves (circles)
    yield n points starting at angle 0 with no duplicated endpoint.
    """
    if n < 2:
        raise InvalidArgumentError("sample count must be >= 2")
    if curve.closed:
        return [curve.point_at(i / n) for i in range(n)]
    return [curve.point_at(i / (n - 1)) for i in range(n)]


def sample_section(section: Section, m: int):
    """Sample a section with m points distributed over its curves.

    Returns (points, closed): the sampling is closed when the section is a
    single closed curve. Multi-curve sections allocate floor/ceil shares
    of m per curve in order, so equal-structure sections sample compatibly.
    """
    if m < 2:
        raise InvalidArgumentError("sample count must be >= 2")
    curves = section.curves
    if len(curves) == 1:
        return sample_curve(curves[0], m), curves[0].closed
    base = m // len(curves)
    extra = m % len(curves)
    if base < 2:
        raise InvalidArgumentError(f"{m} samples are too few for {len(curves)} curves")
    points = []
    for i, c in enumerate(curves):
        count = base + (1 if i < extra else 0)
        points.extend(sample_curve(c, count))
    return points, False


def evaluate_track(track: SectionTrack, t: float) -> Section:
    """Freeze the animated section at time t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise InvalidArgumentError(f"track time {t} outside [0, 1]")
    scale_z, rotate_y, translate_y = track.values_at(t)
    local = (
        Affine3.translate(0.0, translate_y, 0.0)
        .compose(Affine3.rotate_y(rotate_y))
        .compose(Affine3.scale(1.0, 1.0, scale_z))
    )
    to_world = track.base.frame.to_world()
    world = to_world.compose(local).compose(to_world.inverse())
    return track.base.transformed(world)


def blend_g1(a: Curve, b: Curve, u_pairs) -> list:
    """G1 transition curves between parameter positions on two curves.

    For each (ua, ub) pair the result is a cubic Hermite whose endpoints lie
    on a and b and whose end tangents are parallel to the curve tangents
    there, with magnitude chord/3. Coincident endpoints yield a blend whose
    is_degenerate flag is set rather than an error.
    """
    pairs = list(u_pairs)
    if not pairs:
        raise InvalidArgumentError("u_pairs must not be empty")
    blends = []
    for ua, ub in pairs:
        pa = a.point_at(ua)
        pb = b.point_at(ub)
        chord = (pb - pa).norm()
        if chord < 1e-12:
            zero = Vec3(0.0, 0.0, 0.0)
            blends.append(HermiteBlend(pa, zero, pb, zero))
            continue
        ta = a.tangent_at(ua).normalized() * (chord / 3.0)
        tb = b.tangent_at(ub).normalized() * (chord / 3.0)
        blends.append(HermiteBlend(pa, ta, pb, tb))
    return blends
