import math

import numpy as np
import pytest

from rheospan.errors import InvalidArgumentError
from rheospan.fabrication import (
    Layer,
    LayerStack,
    Mesh,
    estimate_support,
    export_layers,
    export_mesh,
    is_watertight,
    marching_cubes,
    marching_squares,
    polygon_area,
    slice_field,
    slope_report,
)
from rheospan.fields import Aabb, ScalarField, sample_grid, sphere_field
from rheospan.geometry import Circle, Frame, Section, SectionTrack, Segment, TrackKey, Vec3
from rheospan.span import SpanSpec, freeze_sections, load_obj_mesh, loft_deck


class TestMarchingCubes:
    def test_all_positive_grid_empty(self):
        grid = sample_grid(sphere_field((9, 9, 9), 0.1), Aabb((-1, -1, -1), (1, 1, 1)), 0.4)
        mesh = marching_cubes(grid)
        assert len(mesh.triangles) == 0

    def test_sphere_area_volume(self):
        r = 1.0
        grid = sample_grid(sphere_field((0, 0, 0), r), Aabb((-1.2, -1.2, -1.2), (1.2, 1.2, 1.2)), r / 48)
        mesh = marching_cubes(grid)
        assert is_watertight(mesh)
        assert mesh.area() == pytest.approx(4 * math.pi * r * r, rel=0.02)
        assert mesh.volume() == pytest.approx(4 / 3 * math.pi * r**3, rel=0.01)

    def test_plane_normals_parallel(self):
        plane = ScalarField(lambda pts: pts[:, 1] - 0.17)
        grid = sample_grid(plane, Aabb((0, 0, 0), (1, 1, 1)), 0.1)
        mesh = marching_cubes(grid)
        normals = mesh.triangle_normals()
        assert np.allclose(np.abs(normals[:, 1]), 1.0, atol=1e-6)
        # wound so normals point toward the positive side (up)
        assert np.all(normals[:, 1] > 0)

    def test_deterministic_bytes(self, tmp_path):
        grid = sample_grid(sphere_field((0.05, 0, 0), 0.8), Aabb((-1, -1, -1), (1, 1, 1)), 0.11)
        p1 = tmp_path / "a.obj"
        p2 = tmp_path / "b.obj"
        export_mesh(marching_cubes(grid), p1, "obj")
        export_mesh(marching_cubes(grid), p2, "obj")
        assert p1.read_bytes() == p2.read_bytes()

    def test_needs_two_samples_per_axis(self):
        from rheospan.fields import VoxelGrid

        grid = VoxelGrid((0, 0, 0), 1.0, (1, 2, 2), np.zeros(4))
        with pytest.raises(InvalidArgumentError):
            marching_cubes(grid)


def ramp_deck(rise, run, steps=5, m=5, width=2.0):
    base = Section((Segment(Vec3(-width / 2, 0, 0), Vec3(width / 2, 0, 0)),), Frame())
    keys = (TrackKey(0.0), TrackKey(1.0, translate_y=rise)) if rise else (TrackKey(0.0),)
    track = SectionTrack(base, keys)
    spec = SpanSpec(track, direction=Vec3(0, 0, 1), span_length=run, steps=steps)
    return loft_deck(freeze_sections(spec), m)


class TestSlopeReport:
    def test_flat_deck_zero(self):
        report = slope_report(ramp_deck(0.0, 4.0), 50.0)
        assert report.max_slope_pct == 0.0
        assert report.regions == []

    def test_ramp_fifty_percent(self):
        report = slope_report(ramp_deck(1.0, 2.0), 50.0)
        assert np.allclose(report.slope_u_pct, 50.0, atol=0.1)
        assert len(report.regions) == 1  # >= threshold flags the whole deck

    def test_cross_slope_separate(self):
        deck = ramp_deck(1.0, 2.0)
        report = slope_report(deck, 50.0)
        assert np.allclose(report.slope_v_pct, 0.0, atol=1e-9)

    def test_degenerate_step_marked_infinite(self):
        pts = np.zeros((2, 2, 3))
        pts[1] = [[0, 1, 0], [1, 1, 0]]  # vertical jump, no horizontal run
        pts[0, 1] = [1, 0, 0]
        from rheospan.span import DeckSurface

        report = slope_report(DeckSurface(pts), 50.0)
        assert math.isinf(report.max_slope_pct) or report.slope_u_pct.max() == np.inf

    def test_threshold_validated(self):
        with pytest.raises(InvalidArgumentError):
            slope_report(ramp_deck(1.0, 2.0), 0.0)


class TestMarchingSquares:
    def test_disc_outer_ccw(self):
        n = 41
        xs = np.linspace(-1, 1, n)
        xx, zz = np.meshgrid(xs, xs, indexing="ij")
        vals = np.hypot(xx, zz) - 0.7
        contours = marching_squares(vals, 0.0, (-1.0, -1.0), xs[1] - xs[0])
        assert len(contours) == 1
        area = polygon_area(contours[0])
        assert area == pytest.approx(math.pi * 0.49, rel=0.01)
        assert area > 0  # CCW

    def test_annulus_hole_cw(self):
        n = 61
        xs = np.linspace(-1, 1, n)
        xx, zz = np.meshgrid(xs, xs, indexing="ij")
        r = np.hypot(xx, zz)
        vals = np.maximum(r - 0.8, 0.4 - r)
        contours = marching_squares(vals, 0.0, (-1.0, -1.0), xs[1] - xs[0])
        areas = sorted(polygon_area(c) for c in contours)
        assert len(contours) == 2
        assert areas[0] < 0 < areas[1]  # hole CW, outer CCW
        net = sum(areas)
        assert net == pytest.approx(math.pi * (0.64 - 0.16), rel=0.02)


class TestSliceField:
    def test_sphere_layers(self):
        f = sphere_field((0, 0, 0), 1.0)
        bbox = Aabb((-1.2, -1.2, -1.2), (1.2, 1.2, 1.2))
        stack = slice_field(f, bbox, 0.25, 96)
        assert len(stack.layers) == math.ceil(2.4 / 0.25)
        equator = min(stack.layers, key=lambda L: abs(L.height))
        radius = math.sqrt(1.0 - equator.height**2)
        length = sum(
            np.linalg.norm(np.diff(np.vstack([c, c[:1]]), axis=0), axis=1).sum()
            for c in equator.model_contours
        )
        assert length == pytest.approx(2 * math.pi * radius, rel=0.02)

    def test_empty_field_empty_layers(self):
        f = sphere_field((50, 50, 50), 0.1)
        stack = slice_field(f, Aabb((-1, -1, -1), (1, 1, 1)), 0.5, 16)
        assert all(not layer.model_contours for layer in stack.layers)

    def test_layer_count_formula(self):
        f = sphere_field((0, 0, 0), 1.0)
        stack = slice_field(f, Aabb((-1, -1, -1), (1, 1, 1)), 0.3, 16)
        assert len(stack.layers) == math.ceil(2.0 / 0.3)

    def test_validation(self):
        f = sphere_field((0, 0, 0), 1.0)
        with pytest.raises(InvalidArgumentError):
            slice_field(f, Aabb((-1, -1, -1), (1, 1, 1)), 0.0, 16)


class TestEstimateSupport:
    def test_vertical_cylinder_no_support(self):
        cyl = ScalarField(lambda pts: np.hypot(pts[:, 0], pts[:, 2]) - 0.5)
        stack = slice_field(cyl, Aabb((-0.8, 0.0, -0.8), (0.8, 1.0, 0.8)), 0.05, 64)
        est = estimate_support(stack, 45.0)
        assert est.support_fraction == 0.0

    def test_cantilever_plate_column(self):
        plate = ScalarField(
            lambda pts: np.maximum.reduce(
                [np.abs(pts[:, 0]) - 0.5, np.abs(pts[:, 1] - 0.55) - 0.05, np.abs(pts[:, 2]) - 0.5]
            )
        )
        stack = slice_field(plate, Aabb((-0.8, 0.0, -0.8), (0.8, 0.8, 0.8)), 0.05, 64)
        est = estimate_support(stack, 45.0)
        column = 1.0 * 1.0 * 0.5  # footprint area x free height below the plate
        assert est.support_volume == pytest.approx(column, rel=0.05)

    def test_support_monotone_in_overhang(self):
        f = sphere_field((0.0, 1.0, 0.0), 0.7)
        stack = slice_field(f, Aabb((-1.0, 0.0, -1.0), (1.0, 2.0, 1.0)), 0.06, 48)
        fractions = [estimate_support(stack, deg).support_fraction for deg in (60.0, 45.0, 30.0, 15.0)]
        assert all(a <= b for a, b in zip(fractions[:-1], fractions[1:]))

    def test_support_lands_on_solid(self):
        # plate over a pedestal: support columns must stop at the pedestal
        def field(pts):
            plate = np.maximum.reduce(
                [np.abs(pts[:, 0]) - 0.6, np.abs(pts[:, 1] - 0.9) - 0.05, np.abs(pts[:, 2]) - 0.6]
            )
            pedestal = np.maximum.reduce(
                [np.abs(pts[:, 0]) - 0.2, np.abs(pts[:, 1] - 0.3) - 0.3, np.abs(pts[:, 2]) - 0.2]
            )
            return np.minimum(plate, pedestal)

        stack = slice_field(ScalarField(field), Aabb((-0.9, 0.0, -0.9), (0.9, 1.2, 0.9)), 0.05, 64)
        est = estimate_support(stack, 45.0)
        for support, model in zip(est.support_masks, stack.model_masks):
            assert not np.any(support & model)

    def test_overhang_validated(self):
        cyl = ScalarField(lambda pts: np.hypot(pts[:, 0], pts[:, 2]) - 0.5)
        stack = slice_field(cyl, Aabb((-0.8, 0.0, -0.8), (0.8, 0.5, 0.8)), 0.1, 16)
        with pytest.raises(InvalidArgumentError):
            estimate_support(stack, 90.0)


def unit_cube_mesh() -> Mesh:
    verts = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=float,
    )
    tris = np.array(
        [
            [0, 2, 1], [0, 3, 2],
            [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4],
            [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6],
            [3, 0, 4], [3, 4, 7],
        ]
    )
    return Mesh(verts, tris)


class TestExports:
    def test_obj_round_trip(self, tmp_path):
        rng = np.random.default_rng(41)
        mesh = Mesh(rng.uniform(-3, 3, (30, 3)), rng.integers(0, 30, (20, 3)))
        path = tmp_path / "m.obj"
        export_mesh(mesh, path, "obj")
        verts, tris = load_obj_mesh(path)
        assert np.allclose(verts, mesh.vertices, atol=1e-6)
        assert np.array_equal(tris, mesh.triangles)

    def test_stl_cube(self, tmp_path):
        mesh = unit_cube_mesh()
        path = tmp_path / "cube.stl"
        export_mesh(mesh, path, "stl_ascii")
        text = path.read_text()
        assert text.count("facet normal") == 12
        vertices = set()
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("vertex"):
                vertices.add(tuple(float(x) for x in line.split()[1:]))
        assert len(vertices) == 8

    def test_empty_stack_manifest_written(self, tmp_path):
        stack = LayerStack(0.1, [], (0.0, 0.0), 0.1, (2, 2))
        written = export_layers(stack, tmp_path / "layers", "svg")
        assert written == []
        assert (tmp_path / "layers" / "layers_manifest.json").exists()

    def test_toolpath_format(self, tmp_path):
        layer = Layer(
            height=0.05,
            model_contours=[np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])],
            support_contours=[np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0]])],
        )
        stack = LayerStack(0.1, [layer], (0.0, 0.0), 0.1, (4, 4))
        export_layers(stack, tmp_path / "tp", "toolpath_text")
        lines = (tmp_path / "tp" / "toolpath.txt").read_text().splitlines()
        assert lines[0] == "LAYER 0 0.05"
        assert lines[1].startswith("POLY M 0.0,0.0 1.0,0.0")
        assert lines[2].startswith("POLY S 2.0,2.0")

    def test_svg_support_class(self, tmp_path):
        layer = Layer(
            height=0.05,
            model_contours=[np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])],
            support_contours=[np.array([[2.0, 2.0], [3.0, 2.0], [3.0, 3.0]])],
        )
        stack = LayerStack(0.1, [layer], (0.0, 0.0), 0.1, (4, 4))
        written = export_layers(stack, tmp_path / "svg", "svg")
        text = (tmp_path / "svg" / written[0]).read_text()
        assert 'class="support"' in text

    def test_unknown_format(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            export_mesh(unit_cube_mesh(), tmp_path / "x.bin", "amf")


class TestMassBalance:
    def test_slab_volume_matches_slices(self):
        # dimensions deliberately off the sampling lattice
        body = ScalarField(
            lambda pts: np.maximum.reduce(
                [np.abs(pts[:, 0]) - 0.3971, np.abs(pts[:, 1] - 0.5037) - 0.2953, np.abs(pts[:, 2]) - 0.4463]
            )
        )
        bbox = Aabb((-0.63, 0.0, -0.63), (0.63, 1.01, 0.63))
        spacing = 0.02
        vox = sample_grid(body, bbox, spacing).solid_volume()
        stack = slice_field(body, bbox, spacing, int(1.26 / spacing))
        sliced = sum(layer.model_area() for layer in stack.layers) * stack.layer_height
        assert sliced == pytest.approx(vox, rel=0.03)
