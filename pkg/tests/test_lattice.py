import math

import numpy as np
import pytest

from rheospan.errors import InvalidArgumentError
from rheospan.fields import Aabb, sample_grid
from rheospan.geometry import Affine3
from rheospan.lattice import HelicoidSpec, LatticeSpec, TileSpec, helicoid_field, rheotomic_tile, tile_lattice


def default_tile(**overrides):
    params = dict(
        cell=1.0,
        y_min=0.0,
        y_max=1.0,
        helicoid=HelicoidSpec(pitch=8.0, r_max=0.75, axis=(0.0, 0.0)),
        thickness=0.12,
    )
    params.update(overrides)
    return TileSpec(**params)


class TestHelicoidField:
    def test_phase_zero_rulings(self):
        f = helicoid_field(HelicoidSpec(pitch=4.0, phase=0.0, handedness="right", r_max=2.0))
        assert f.at(1, 0, 0) == 0.0
        # quarter pitch up, the ruling has turned onto the Z axis
        assert abs(f.at(0, 1, 1)) <= 1e-12

    def test_parametric_points_lie_on_surface(self):
        spec = HelicoidSpec(pitch=3.0, phase=0.4, handedness="left", r_max=1.5)
        k = spec.k
        rng = np.random.default_rng(11)
        s = rng.uniform(-spec.r_max, spec.r_max, 500)
        y = rng.uniform(-4, 4, 500)
        pts = np.column_stack([s * np.cos(k * y + spec.phase), y, s * np.sin(k * y + spec.phase)])
        residual = np.abs(helicoid_field(spec)(pts))
        assert residual.max() <= 1e-6 * (1 + abs(k) * spec.r_max)

    def test_radial_clamp(self):
        spec = HelicoidSpec(pitch=4.0, r_max=1.0)
        f = helicoid_field(spec)
        assert f.at(2.0, 0.0, 0.0) >= 1.0 - 1e-12  # on the ruling but past r_max

    def test_rotation_equals_phase_shift(self):
        theta = 0.731
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1.5, 1.5, (400, 3))
        for handedness in ("right", "left"):
            base = HelicoidSpec(pitch=5.0, phase=0.2, handedness=handedness, r_max=2.5)
            shifted = HelicoidSpec(pitch=5.0, phase=0.2 + theta, handedness=handedness, r_max=2.5)
            rotated_pts = Affine3.rotate_y(theta).apply_points(pts)
            assert np.allclose(helicoid_field(base)(rotated_pts), helicoid_field(shifted)(pts), atol=1e-9)

    def test_pitch_translation_invariance(self):
        spec = HelicoidSpec(pitch=2.7, phase=1.0, r_max=2.0)
        f = helicoid_field(spec)
        rng = np.random.default_rng(4)
        pts = rng.uniform(-1.5, 1.5, (300, 3))
        lifted = pts + np.array([0.0, spec.pitch, 0.0])
        assert np.allclose(f(pts), f(lifted), atol=1e-9)

    def test_one_sided_cuts_back_half(self):
        two = helicoid_field(HelicoidSpec(pitch=4.0, r_max=1.0, two_sided=True))
        one = helicoid_field(HelicoidSpec(pitch=4.0, r_max=1.0, two_sided=False))
        assert abs(two.at(-0.5, 0, 0)) <= 1e-12
        assert one.at(-0.5, 0, 0) >= 0.5 - 1e-12

    def test_invalid_specs(self):
        with pytest.raises(InvalidArgumentError):
            HelicoidSpec(pitch=0.0)
        with pytest.raises(InvalidArgumentError):
            HelicoidSpec(pitch=1.0, r_max=-1.0)
        with pytest.raises(InvalidArgumentError):
            HelicoidSpec(pitch=1.0, handedness="widdershins")


def brute_force_helicoid_distance(pts: np.ndarray, spec: HelicoidSpec) -> np.ndarray:
    """Distance to the swept segment by scanning the sweep parameter.

    Independent of the implicit-form evaluation: for each candidate height
    the ruling is an explicit segment; three refinement rounds bring the
    height resolution to ~1e-9 of a pitch.
    """
    k = spec.k
    out = np.empty(len(pts))
    for start in range(0, len(pts), 2048):
        block = pts[start : start + 2048]
        lo = block[:, 1] - 0.5 * spec.pitch
        hi = block[:, 1] + 0.5 * spec.pitch
        for _ in range(3):
            ys = np.linspace(0.0, 1.0, 401)[None, :] * (hi - lo)[:, None] + lo[:, None]
            ang = k * ys + spec.phase
            cx = np.cos(ang)
            sz = np.sin(ang)
            proj = block[:, 0][:, None] * cx + block[:, 2][:, None] * sz
            s = np.clip(proj, -spec.r_max, spec.r_max)
            dx = block[:, 0][:, None] - s * cx
            dy = block[:, 1][:, None] - ys
            dz = block[:, 2][:, None] - s * sz
            dist_sq = dx * dx + dy * dy + dz * dz
            idx = np.argmin(dist_sq, axis=1)
            step = (hi - lo) / 400.0
            center = ys[np.arange(len(block)), idx]
            lo = center - step
            hi = center + step
        out[start : start + 2048] = np.sqrt(dist_sq[np.arange(len(block)), idx])
    return out


class TestTile:
    def test_center_on_ruling(self):
        tile = default_tile()
        f = rheotomic_tile(tile)
        assert abs(f.at(0.0, 0.5, 0.0) + tile.thickness / 2) <= 1e-6

    def test_outside_prism_positive(self):
        f = rheotomic_tile(default_tile())
        assert f.at(2.0, 0.5, 0.0) > 0
        assert f.at(0.0, 5.0, 0.0) > 0

    def test_volume_fraction_band_and_oracle(self):
        tile = default_tile()
        f = rheotomic_tile(tile)
        spacing = tile.cell / 64
        half = 0.5 * tile.cell - spacing * 0.5
        bbox = Aabb((-half, spacing * 0.5, -half), (half, tile.y_max - spacing * 0.5, half))
        grid = sample_grid(f, bbox, spacing)
        fraction = grid.negative_count() / len(grid.values)
        t_over_a = tile.thickness / tile.cell
        assert 0.5 * t_over_a <= fraction <= 3.0 * t_over_a

        xs = grid.axis_coords(0)
        ys = grid.axis_coords(1)
        zs = grid.axis_coords(2)
        zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
        oracle_dist = brute_force_helicoid_distance(pts, tile.helicoid)
        inside_prism = (
            (np.abs(pts[:, 0]) < 0.5 * tile.cell)
            & (np.abs(pts[:, 2]) < 0.5 * tile.cell)
            & (pts[:, 1] > tile.y_min)
            & (pts[:, 1] < tile.y_max)
        )
        oracle_fraction = np.count_nonzero((oracle_dist < tile.thickness / 2) & inside_prism) / len(pts)
        assert fraction == pytest.approx(oracle_fraction, rel=0.01)

    def test_two_sheets_strictly_more_solid(self):
        one = rheotomic_tile(default_tile())
        two = rheotomic_tile(default_tile(sheets=2))
        rng = np.random.default_rng(5)
        pts = rng.uniform(-0.5, 0.5, (2000, 3)) + np.array([0.0, 0.5, 0.0])
        assert np.all(two(pts) <= one(pts) + 1e-12)
        assert np.count_nonzero(two(pts) < 0) > np.count_nonzero(one(pts) < 0)

    def test_thickness_invariant(self):
        with pytest.raises(InvalidArgumentError):
            default_tile(thickness=0.6)


class TestLattice:
    def test_single_cell_matches_tile(self):
        tile = default_tile()
        lattice = tile_lattice(LatticeSpec(tile, repeats=(1, 1)))
        single = rheotomic_tile(tile)
        rng = np.random.default_rng(6)
        pts = rng.uniform(-1, 2, (1000, 3))
        assert np.allclose(lattice(pts), single(pts), atol=1e-12)

    def test_checkerboard_face_sign_agreement(self):
        tile = default_tile()
        lattice = tile_lattice(LatticeSpec(tile, repeats=(2, 1)))
        rng = np.random.default_rng(7)
        face = np.column_stack(
            [np.full(400, 0.5), rng.uniform(0.0, 1.0, 400), rng.uniform(-0.5, 0.5, 400)]
        )
        eps = 1e-7
        left = face.copy()
        left[:, 0] -= eps
        right = face.copy()
        right[:, 0] += eps
        vl = lattice(left)
        vr = lattice(right)
        crossing = np.abs(vl) > 10 * eps
        assert np.all((vl[crossing] < 0) == (vr[crossing] < 0))

    def test_mirror_symmetry_across_interior_face(self):
        tile = default_tile()
        lattice = tile_lattice(LatticeSpec(tile, repeats=(2, 1)))
        rng = np.random.default_rng(8)
        pts = rng.uniform((-0.5, 0.0, -0.5), (1.5, 1.0, 0.5), (500, 3))
        mirrored = pts.copy()
        mirrored[:, 0] = 1.0 - mirrored[:, 0]
        assert np.allclose(lattice(pts), lattice(mirrored), atol=1e-9)

    def test_plain_repeats_translate_solid(self):
        # under "none" every cell is a plain translate: the solid region
        # (and its interior values) repeat exactly cell to cell
        tile = default_tile()
        lattice = tile_lattice(LatticeSpec(tile, repeats=(3, 1), mirror_rule="none"))
        single = rheotomic_tile(tile)
        rng = np.random.default_rng(9)
        local = rng.uniform((-0.5, 0.0, -0.5), (0.5, 1.0, 0.5), (300, 3))
        shifted = local + np.array([2.0, 0.0, 0.0])
        v_single = single(local)
        v_lattice = lattice(shifted)
        assert np.all(v_lattice <= v_single + 1e-12)
        solid = v_single < 0
        assert np.allclose(v_lattice[solid], v_single[solid], atol=1e-12)
        assert np.array_equal(v_lattice < 0, solid)

    def test_3x3_bounding_box(self):
        tile = default_tile()
        lattice = tile_lattice(LatticeSpec(tile, repeats=(3, 3)))
        ext = lattice.bbox.extent()
        assert ext[0] == pytest.approx(3 * tile.cell)
        assert ext[2] == pytest.approx(3 * tile.cell)

    def test_repeat_validation(self):
        with pytest.raises(InvalidArgumentError):
            LatticeSpec(default_tile(), repeats=(0, 1))
        with pytest.raises(InvalidArgumentError):
            LatticeSpec(default_tile(), mirror_rule="spiral")
