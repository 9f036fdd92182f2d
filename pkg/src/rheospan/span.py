"""Circulation deck and structural pre-form.

The animated section is frozen at equal time intervals, the snapshots are
placed along the span axis and lofted into the walkable deck surface.
Edge bending with a span-variable angle cambers the deck, and the
structural pre-form combines the deck plate with the lattice clipped by
the conceptual shell and the deck's footprint projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import InputFormatError, InvalidArgumentError
from .fields import Aabb, ScalarField, half_space, intersect, union
from .geometry import Section, Vec3, evaluate_track, sample_section

__all__ = [
    "SpanSpec",
    "DeckSurface",
    "ShellSpec",
    "MeshDistanceField",
    "freeze_sections",
    "loft_deck",
    "bend_edges",
    "deck_field",
    "auto_shell",
    "footprint_hull",
    "footprint_field_xz",
    "structural_preform",
    "load_obj_mesh",
    "obj_shell_field",
]


@dataclass(frozen=True)
class SpanSpec:
    """Deck generator input: the animated track, the horizontal span axis,
    its length, the number of frozen sections and an optional bend profile
    (camber angle in radians as a function of u in [0, 1])."""

    track: object
    direction: Vec3 = Vec3(0.0, 0.0, 1.0)
    span_length: float = 8.0
    steps: int = 9
    bend_profile: object = None

    def __post_init__(self):
        if self.steps < 2:
            raise InvalidArgumentError("span needs steps >= 2")
        if self.span_length <= 0:
            raise InvalidArgumentError("span length must be > 0")
        horiz = math.hypot(self.direction.x, self.direction.z)
        if horiz < 1e-12:
            raise InvalidArgumentError("span direction needs a nonzero horizontal component")

    @property
    def unit_direction(self) -> Vec3:
        return self.direction.normalized()


@dataclass
class DeckSurface:
    """Lofted point grid P[i][j]: i along the span (parameter u), j across
    the section (parameter v). closed_v marks tubes lofted from closed
    sections."""

    points: np.ndarray
    closed_v: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 3 or pts.shape[2] != 3 or pts.shape[0] < 2 or pts.shape[1] < 2:
            raise InvalidArgumentError("deck grid must be (n>=2, m>=2, 3)")
        self.points = pts

    @property
    def shape(self) -> tuple:
        return self.points.shape[:2]

    def point_at_uv(self, u, v) -> np.ndarray:
        """Bilinear sample of the grid at (u, v) in [0, 1]^2 (clamped)."""
        n, m = self.shape
        uu = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * (n - 1)
        vv = np.clip(np.asarray(v, dtype=float), 0.0, 1.0) * (m - 1)
        i0 = np.minimum(uu.astype(int), n - 2)
        j0 = np.minimum(vv.astype(int), m - 2)
        fu = (uu - i0)[..., None]
        fv = (vv - j0)[..., None]
        p00 = self.points[i0, j0]
        p10 = self.points[i0 + 1, j0]
        p01 = self.points[i0, j0 + 1]
        p11 = self.points[i0 + 1, j0 + 1]
        return (1 - fu) * ((1 - fv) * p00 + fv * p01) + fu * ((1 - fv) * p10 + fv * p11)

    def frames(self):
        """Per-point tangents and normals from finite differences.

        Returns (du, dv, normal) arrays of shape (n, m, 3); normals are
        unit length where the surface is regular.
        """
        pts = self.points
        du = np.gradient(pts, axis=0)
        dv = np.gradient(pts, axis=1)
        normal = np.cross(du, dv)
        length = np.linalg.norm(normal, axis=2, keepdims=True)
        normal = np.divide(normal, length, out=np.zeros_like(normal), where=length > 1e-15)
        return du, dv, normal

    def tessellate(self):
        """Triangulate the grid; returns (vertices (V,3), triangles (T,3))."""
        n, m = self.shape
        verts = self.points.reshape(-1, 3)
        tris = []
        cols = m if self.closed_v else m - 1
        for i in range(n - 1):
            for j in range(cols):
                j1 = (j + 1) % m
                a = i * m + j
                b = (i + 1) * m + j
                c = (i + 1) * m + j1
                d = i * m + j1
                tris.append((a, b, c))
                tris.append((a, c, d))
        return verts, np.array(tris, dtype=np.int64)


@dataclass(frozen=True)
class ShellSpec:
    """Conceptual shell: either 'auto' (deck-to-ground sweep over the deck
    footprint) or a user-supplied implicit volume."""

    mode: str = "auto"
    field: ScalarField | None = None
    y_ground: float = 0.0

    def __post_init__(self):
        if self.mode not in ("auto", "field"):
            raise InvalidArgumentError("shell mode must be 'auto' or 'field'")
        if self.mode == "field" and self.field is None:
            raise InvalidArgumentError("shell mode 'field' needs a field")


def freeze_sections(spec: SpanSpec) -> list:
    """Evaluate the track at t_i = i/(n-1) and place each snapshot at
    origin + unit(direction) * (t_i * span_length). The span translation
    composes with the track's own vertical translation."""
    from .geometry import Affine3

    n = spec.steps
    direction = spec.unit_direction
    sections = []
    for i in range(n):
        t = i / (n - 1)
        section = evaluate_track(spec.track, t)
        shift = direction * (t * spec.span_length)
        sections.append(section.transformed(Affine3.translate(shift.x, shift.y, shift.z)))
    return sections


def loft_deck(sections, m: int) -> DeckSurface:
    """Skin compatible sections into the deck grid (m samples across)."""
    sections = list(sections)
    if len(sections) < 2:
        raise InvalidArgumentError("loft needs at least 2 sections")
    counts = {len(s.curves) for s in sections}
    if len(counts) != 1:
        raise InvalidArgumentError("sections must share curve count and ordering")
    rows = []
    closed_flags = set()
    for section in sections:
        pts, closed = sample_section(section, m)
        rows.append([p.as_array() for p in pts])
        closed_flags.add(closed)
    if len(closed_flags) != 1:
        raise InvalidArgumentError("sections mix closed and open sampling")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidArgumentError("sections sampled incompatibly")
    return DeckSurface(np.array(rows), closed_v=closed_flags.pop())


def _row_centers(points: np.ndarray) -> np.ndarray:
    n, m = points.shape[:2]
    if m % 2 == 1:
        return points[:, m // 2].copy()
    return 0.5 * (points[:, m // 2 - 1] + points[:, m // 2])


def _rodrigues(vectors: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    cross = np.cross(np.broadcast_to(axis, vectors.shape), vectors)
    dot = vectors @ axis
    return vectors * c + cross * s + np.outer(dot, axis) * (1.0 - c)


def bend_edges(deck: DeckSurface, bend_profile) -> DeckSurface:
    """Camber the deck: row i is rotated about its centerline tangent by
    bend_profile(u_i), with the displacement faded in quadratically from
    the fixed centerline toward the edges."""
    if bend_profile is None:
        return DeckSurface(deck.points.copy(), deck.closed_v)
    pts = deck.points
    n, m = deck.shape
    centers = _row_centers(pts)
    out = pts.copy()
    v = np.arange(m) / (m - 1)
    weight = (2.0 * (v - 0.5)) ** 2
    for i in range(n):
        u = i / (n - 1)
        angle = float(bend_profile(u))
        if angle == 0.0:
            continue
        lo = max(i - 1, 0)
        hi = min(i + 1, n - 1)
        axis = centers[hi] - centers[lo]
        norm = np.linalg.norm(axis)
        if norm < 1e-14:
            continue
        axis = axis / norm
        rel = pts[i] - centers[i]
        rotated = _rodrigues(rel, axis, angle) + centers[i]
        out[i] = pts[i] + weight[:, None] * (rotated - pts[i])
    return DeckSurface(out, deck.closed_v)


class MeshDistanceField(ScalarField):
    """Unsigned (optionally normal-signed) pseudo-distance to a triangle
    set, evaluated as the minimum point-triangle distance.

    Points are grouped into spatial blocks; each block prunes the triangle
    set with a nearest-vertex upper bound (the pruned set provably contains
    every block point's nearest triangle), a BLAS-friendly dot-product
    expansion scores the survivors, and the winning triangle's closest
    point is recomputed from explicit differences. The reported value is
    therefore an exact point-triangle distance, never below the true
    minimum. signed=True flips the sign by the facing of the nearest
    triangle, adequate for the well-behaved closed meshes a conceptual
    shell is."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, signed: bool = False):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) == 0:
            raise InvalidArgumentError("mesh distance needs at least one triangle")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise InvalidArgumentError("triangle indices out of range")
        self._a = vertices[triangles[:, 0]]
        self._e0 = vertices[triangles[:, 1]] - self._a
        self._e1 = vertices[triangles[:, 2]] - self._a
        self._aa = np.einsum("ij,ij->i", self._e0, self._e0)
        self._ab = np.einsum("ij,ij->i", self._e0, self._e1)
        self._bb = np.einsum("ij,ij->i", self._e1, self._e1)
        self._a_e0 = np.einsum("ij,ij->i", self._a, self._e0)
        self._a_e1 = np.einsum("ij,ij->i", self._a, self._e1)
        self._a_a = np.einsum("ij,ij->i", self._a, self._a)
        normals = np.cross(self._e0, self._e1)
        length = np.linalg.norm(normals, axis=1, keepdims=True)
        self._normals = np.divide(normals, length, out=np.zeros_like(normals), where=length > 1e-15)
        self._signed = signed
        corners = vertices[triangles]
        self._centroids = corners.mean(axis=1)
        self._radii = np.linalg.norm(corners - self._centroids[:, None, :], axis=2).max(axis=1)
        self._vertex_tree = cKDTree(vertices)
        self._chunk = max(64, int(2_000_000 // max(len(triangles), 1)))
        super().__init__(self._evaluate, bbox=Aabb.of_points(vertices), lipschitz=1.0)

    def _score(self, block: np.ndarray, sel: np.ndarray) -> np.ndarray:
        """Squared distance from block points to the selected triangles,
        min over the interior solution and the three clamped edges."""
        aa = self._aa[sel][None, :]
        ab = self._ab[sel][None, :]
        bb = self._bb[sel][None, :]
        d0 = self._a_e0[sel][None, :] - block @ self._e0[sel].T
        d1 = self._a_e1[sel][None, :] - block @ self._e1[sel].T
        dd = (
            self._a_a[sel][None, :]
            - 2.0 * (block @ self._a[sel].T)
            + np.einsum("ij,ij->i", block, block)[:, None]
        )

        def quad(ss, tt):
            return dd + 2.0 * ss * d0 + 2.0 * tt * d1 + ss * ss * aa + 2.0 * ss * tt * ab + tt * tt * bb

        s_e0 = np.clip(-d0 / np.where(aa > 1e-300, aa, 1.0), 0.0, 1.0)
        t_e1 = np.clip(-d1 / np.where(bb > 1e-300, bb, 1.0), 0.0, 1.0)
        denom = aa - 2.0 * ab + bb
        w = np.clip((aa + d0 - ab - d1) / np.where(np.abs(denom) > 1e-300, denom, 1.0), 0.0, 1.0)
        best = np.minimum(quad(s_e0, np.zeros_like(s_e0)), quad(np.zeros_like(t_e1), t_e1))
        best = np.minimum(best, quad(1.0 - w, w))
        det = aa * bb - ab * ab
        valid = det > 1e-300
        safe_det = np.where(valid, det, 1.0)
        s_in = (ab * d1 - bb * d0) / safe_det
        t_in = (ab * d0 - aa * d1) / safe_det
        inside = valid & (s_in >= 0.0) & (t_in >= 0.0) & (s_in + t_in <= 1.0)
        best = np.where(inside, np.minimum(best, quad(s_in, t_in)), best)
        return best

    def _exact(self, block: np.ndarray, tri_idx: np.ndarray):
        """Exact closest point on each point's selected triangle."""
        a = self._a[tri_idx]
        e0 = self._e0[tri_idx]
        e1 = self._e1[tri_idx]
        aa = self._aa[tri_idx]
        ab = self._ab[tri_idx]
        bb = self._bb[tri_idx]
        d = a - block
        d0 = np.einsum("ij,ij->i", d, e0)
        d1 = np.einsum("ij,ij->i", d, e1)

        def dist_sq(ss, tt):
            q = d + ss[:, None] * e0 + tt[:, None] * e1
            return np.einsum("ij,ij->i", q, q)

        s_e0 = np.clip(-d0 / np.where(aa > 1e-300, aa, 1.0), 0.0, 1.0)
        t_e1 = np.clip(-d1 / np.where(bb > 1e-300, bb, 1.0), 0.0, 1.0)
        denom = aa - 2.0 * ab + bb
        w = np.clip((aa + d0 - ab - d1) / np.where(np.abs(denom) > 1e-300, denom, 1.0), 0.0, 1.0)
        candidates = [
            (s_e0, np.zeros_like(s_e0)),
            (np.zeros_like(t_e1), t_e1),
            (1.0 - w, w),
        ]
        det = aa * bb - ab * ab
        valid = det > 1e-300
        safe_det = np.where(valid, det, 1.0)
        s_in = np.where(valid, (ab * d1 - bb * d0) / safe_det, 0.0)
        t_in = np.where(valid, (ab * d0 - aa * d1) / safe_det, 0.0)
        inside = valid & (s_in >= 0.0) & (t_in >= 0.0) & (s_in + t_in <= 1.0)
        best_s, best_t = candidates[0]
        best_d = dist_sq(best_s, best_t)
        for ss, tt in candidates[1:]:
            dsq = dist_sq(ss, tt)
            better = dsq < best_d
            best_s = np.where(better, ss, best_s)
            best_t = np.where(better, tt, best_t)
            best_d = np.where(better, dsq, best_d)
        din = dist_sq(s_in, t_in)
        better = inside & (din < best_d)
        best_s = np.where(better, s_in, best_s)
        best_t = np.where(better, t_in, best_t)
        best_d = np.where(better, din, best_d)
        closest = a + best_s[:, None] * e0 + best_t[:, None] * e1
        return np.sqrt(np.maximum(best_d, 0.0)), closest

    def _solve_block(self, block: np.ndarray) -> np.ndarray:
        center = 0.5 * (block.min(axis=0) + block.max(axis=0))
        rho = float(np.sqrt(np.einsum("ij,ij->i", block - center, block - center).max()))
        upper = float(self._vertex_tree.query(center)[0])
        centroid_dist = np.linalg.norm(self._centroids - center, axis=1)
        sel = np.nonzero(centroid_dist <= upper + 2.0 * rho + self._radii + 1e-12)[0]
        out = np.empty(len(block))
        for start in range(0, len(block), self._chunk):
            stop = min(start + self._chunk, len(block))
            sub = block[start:stop]
            tri_idx = sel[np.argmin(self._score(sub, sel), axis=1)]
            dist, closest = self._exact(sub, tri_idx)
            if self._signed:
                side = np.einsum("ij,ij->i", sub - closest, self._normals[tri_idx])
                dist = np.where(side < 0.0, -dist, dist)
            out[start:stop] = dist
        return out

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        n = len(pts)
        out = np.empty(n)
        if n == 0:
            return out
        # Group points into spatial cells so the per-block triangle pruning
        # sees compact blocks; per-point results do not depend on grouping.
        lo = pts.min(axis=0)
        span = float((pts.max(axis=0) - lo).max())
        cell = max(span / 12.0, 1e-9)
        keys = np.floor((pts - lo) / cell).astype(np.int64)
        flat = (keys[:, 0] << 42) | (keys[:, 1] << 21) | keys[:, 2]
        order = np.argsort(flat, kind="stable")
        sorted_keys = flat[order]
        boundaries = np.nonzero(np.diff(sorted_keys))[0] + 1
        starts = np.concatenate([[0], boundaries])
        ends = np.concatenate([boundaries, [n]])
        for s, e in zip(starts, ends):
            idx = order[s:e]
            out[idx] = self._solve_block(pts[idx])
        return out


def deck_field(deck: DeckSurface, deck_thickness: float) -> ScalarField:
    """Solid plate body for the deck: point-to-triangle pseudo-distance to
    the tessellated grid minus half the plate thickness."""
    if deck_thickness <= 0:
        raise InvalidArgumentError("deck thickness must be > 0")
    verts, tris = deck.tessellate()
    surface = MeshDistanceField(verts, tris, signed=False)
    half = 0.5 * deck_thickness
    bbox = surface.bbox.dilated(half)
    return ScalarField(lambda pts: surface._fn(pts) - half, bbox=bbox, lipschitz=1.0)


class _HeightChart:
    """Deck height as a function of (x, z).

    Linear interpolation over the Delaunay triangulation of the projected
    grid points, nearest-point fill outside the hull. Where the deck is
    multi-valued over a plan position (tubes), the lowest sheet is kept so
    the shell fills the gap up to the underside."""

    def __init__(self, deck: DeckSurface):
        pts = deck.points.reshape(-1, 3)
        keyed = {}
        for x, y, z in pts:
            key = (round(x, 9), round(z, 9))
            if key not in keyed or y < keyed[key]:
                keyed[key] = y
        xz = np.array([[k[0], k[1]] for k in sorted(keyed)], dtype=float)
        heights = np.array([keyed[k] for k in sorted(keyed)], dtype=float)
        self._nearest = NearestNDInterpolator(xz, heights)
        self._linear = None
        if len(xz) >= 3:
            try:
                self._linear = LinearNDInterpolator(xz, heights)
            except QhullError:
                self._linear = None

    def __call__(self, xz: np.ndarray) -> np.ndarray:
        if self._linear is not None:
            h = self._linear(xz)
            miss = np.isnan(h)
            if np.any(miss):
                h[miss] = self._nearest(xz[miss])
            return h
        return self._nearest(xz)


def footprint_hull(deck: DeckSurface) -> np.ndarray:
    """CCW vertices of the convex hull of the XZ-projected deck grid."""
    xz = deck.points.reshape(-1, 3)[:, [0, 2]]
    try:
        hull = ConvexHull(xz)
    except QhullError as exc:
        raise InvalidArgumentError(f"deck footprint is empty or degenerate: {exc}") from exc
    return xz[hull.vertices]


def footprint_field_xz(hull_vertices: np.ndarray) -> ScalarField:
    """Convex-polygon implicit in XZ: max of edge half-plane distances
    (exact inside, a lower bound outside, which a clip only needs)."""
    verts = np.asarray(hull_vertices, dtype=float)
    edges = np.roll(verts, -1, axis=0) - verts
    # ConvexHull returns CCW order in (x, z); outward normal of edge (ex, ez)
    # toward the right side of travel is (ez, -ex).
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.maximum(lengths, 1e-300)

    def fn(pts):
        rel_x = pts[:, 0][:, None] - verts[None, :, 0]
        rel_z = pts[:, 2][:, None] - verts[None, :, 1]
        return (rel_x * normals[None, :, 0] + rel_z * normals[None, :, 1]).max(axis=1)

    return ScalarField(fn, lipschitz=1.0)


def auto_shell(deck: DeckSurface, y_ground: float = 0.0) -> ScalarField:
    """Default conceptual shell: everything between the ground plane and
    the deck surface over the deck's plan footprint."""
    chart = _HeightChart(deck)
    hull = footprint_hull(deck)
    lateral = footprint_field_xz(hull)

    def fn(pts):
        heights = chart(pts[:, [0, 2]])
        below_deck = pts[:, 1] - heights
        above_ground = y_ground - pts[:, 1]
        return np.maximum(lateral._fn(pts), np.maximum(below_deck, above_ground))

    pts = deck.points.reshape(-1, 3)
    lo = np.array([pts[:, 0].min(), y_ground, pts[:, 2].min()])
    hi = np.array([pts[:, 0].max(), max(float(pts[:, 1].max()), y_ground), pts[:, 2].max()])
    return ScalarField(fn, bbox=Aabb(lo, hi))


def structural_preform(
    deck: DeckSurface,
    shell: ShellSpec,
    lattice: ScalarField,
    deck_thickness: float = 0.25,
    y_ground: float = 0.0,
) -> ScalarField:
    """union(deck plate, lattice clipped by shell and footprint prism).

    The footprint prism is the convex hull of the projected deck grid
    extruded from the ground plane to the deck underside.
    """
    plate = deck_field(deck, deck_thickness)
    shell_field = auto_shell(deck, y_ground=shell.y_ground) if shell.mode == "auto" else shell.field
    hull = footprint_hull(deck)
    lateral = footprint_field_xz(hull)
    chart = _HeightChart(deck)
    half = 0.5 * deck_thickness
    ground = y_ground if shell.mode != "auto" else shell.y_ground

    def prism_fn(pts):
        underside = chart(pts[:, [0, 2]]) - half
        return np.maximum(lateral._fn(pts), np.maximum(ground - pts[:, 1], pts[:, 1] - underside))

    footprint_prism = ScalarField(prism_fn)
    return union(plate, intersect(lattice, intersect(shell_field, footprint_prism)))


def load_obj_mesh(path):
    """Minimal OBJ reader: v and f records, faces fan-triangulated."""
    verts = []
    tris = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if parts[0] == "v":
                    if len(parts) < 4:
                        raise InputFormatError(path, f"line {lineno}: vertex needs 3 coordinates")
                    verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
                elif parts[0] == "f":
                    if len(parts) < 4:
                        raise InputFormatError(path, f"line {lineno}: face needs 3 indices")
                    idx = []
                    for token in parts[1:]:
                        head = token.split("/")[0]
                        value = int(head)
                        idx.append(value - 1 if value > 0 else len(verts) + value)
                    for a, b in zip(idx[1:-1], idx[2:]):
                        tris.append([idx[0], a, b])
    except OSError:
        raise
    except ValueError as exc:
        raise InputFormatError(path, f"malformed OBJ: {exc}") from exc
    if not verts or not tris:
        raise InputFormatError(path, "OBJ contains no triangles")
    return np.array(verts, dtype=float), np.array(tris, dtype=np.int64)


def obj_shell_field(path) -> ScalarField:
    """User shell mesh as a signed pseudo-distance field."""
    verts, tris = load_obj_mesh(path)
    return MeshDistanceField(verts, tris, signed=True)
