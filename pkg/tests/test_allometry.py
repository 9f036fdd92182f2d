import numpy as np
import pytest

from rheospan.allometry import (
    RasterField,
    UvProjection,
    accumulate,
    idw_interpolate,
    inverse_distance_raster,
    load_raster,
    project_uv,
    rasterize_scatter,
    save_rast,
)
from rheospan.errors import InputFormatError, InvalidArgumentError
from rheospan.fields import Aabb, ScalarField, half_space, sample_grid, sphere_field


def unit_proj(u_extent=4.0, v_extent=2.0):
    return UvProjection((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, -1.0), u_extent, v_extent)


class TestProjectUv:
    def test_origin(self):
        assert project_uv(unit_proj(), np.array([0.0, 0.0, 0.0])) == (0.0, 0.0)

    def test_full_u(self):
        u, v = project_uv(unit_proj(), np.array([4.0, 0.0, 0.0]))
        assert u == pytest.approx(1.0) and v == pytest.approx(0.0)

    def test_vertical_translation_ignored(self):
        p = np.array([1.3, 0.0, -0.7])
        q = p + np.array([0.0, 17.5, 0.0])
        assert project_uv(unit_proj(), p) == project_uv(unit_proj(), q)

    def test_axes_validated(self):
        with pytest.raises(InvalidArgumentError):
            UvProjection((0, 0, 0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), 1.0, 1.0)


class TestIdw:
    def test_exact_at_sample(self):
        samples = [((0.0, 0.0), 3.0), ((1.0, 0.0), 7.0)]
        assert idw_interpolate(samples, (0.0, 0.0)) == 3.0
        assert idw_interpolate(samples, (1.0, 0.0)) == 7.0

    def test_midpoint_symmetry(self):
        samples = [((0.0, 0.0), 0.0), ((1.0, 0.0), 1.0)]
        assert idw_interpolate(samples, (0.5, 0.0)) == pytest.approx(0.5)

    def test_convex_combination(self):
        rng = np.random.default_rng(31)
        samples = [((rng.uniform(), rng.uniform()), rng.uniform(-5, 5)) for _ in range(7)]
        values = [s[1] for s in samples]
        lo, hi = min(values), max(values)
        for _ in range(500):
            q = (rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2))
            got = idw_interpolate(samples, q)
            assert lo - 1e-12 <= got <= hi + 1e-12

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            idw_interpolate([], (0.0, 0.0))


class TestRasterizeScatter:
    def test_single_sample_constant(self):
        raster = rasterize_scatter([((0.3, 0.7), 1.0)], (8, 4))
        assert np.all(raster.values == 1.0)

    def test_corner_bounds(self):
        samples = [((0.0, 0.0), 0.0), ((1.0, 0.0), 0.0), ((0.0, 1.0), 1.0), ((1.0, 1.0), 1.0)]
        raster = rasterize_scatter(samples, (9, 9))
        center = raster.sample(0.5, 0.5)
        assert 0.0 <= center <= 1.0

    def test_refinement_preserves_node_values(self):
        rng = np.random.default_rng(32)
        samples = [((rng.uniform(), rng.uniform()), rng.uniform()) for _ in range(5)]
        coarse = rasterize_scatter(samples, (9, 5))
        fine = rasterize_scatter(samples, (17, 9))
        assert np.allclose(coarse.values, fine.values[::2, ::2], atol=1e-12)


class TestInverseDistanceRaster:
    def test_contact_row_saturates(self):
        proj = unit_proj(u_extent=4.0, v_extent=2.0)
        contact = half_space((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))  # plane through u=0
        raster = inverse_distance_raster([contact], proj, (9, 5), c=1.0, r_cap=4.0)
        assert np.all(raster.values[:, 0] == 1.0)

    def test_algebraic_half_value(self):
        proj = unit_proj()
        c, r_cap = 1.0, 4.0
        d = c / (0.5 * r_cap)  # distance that yields half the cap
        contact = ScalarField(lambda pts: np.full(len(pts), d))
        raster = inverse_distance_raster([contact], proj, (5, 3), c=c, r_cap=r_cap)
        assert np.allclose(raster.values, 0.5)

    def test_monotone_in_distance(self):
        proj = unit_proj()
        values = []
        for d in (0.1, 0.5, 1.0, 2.0, 5.0):
            contact = ScalarField(lambda pts, d=d: np.full(len(pts), d))
            raster = inverse_distance_raster([contact], proj, (3, 3), c=1.0, r_cap=4.0)
            values.append(raster.values[0, 0])
        assert all(a >= b for a, b in zip(values[:-1], values[1:]))

    def test_values_normalized(self):
        proj = unit_proj()
        contact = half_space((2.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        raster = inverse_distance_raster([contact], proj, (9, 5), c=2.0, r_cap=3.0)
        assert raster.values.min() >= 0.0 and raster.values.max() <= 1.0

    def test_empty_contacts(self):
        with pytest.raises(InvalidArgumentError):
            inverse_distance_raster([], unit_proj(), (4, 4), 1.0, 1.0)


class TestAccumulate:
    def test_alpha_zero_identity_bits(self):
        body = sphere_field((0.0, 0.0, 0.0), 1.0)
        raster = RasterField.constant(0.7, 4, 4)
        grown = accumulate(body, raster, unit_proj(), alpha=0.0, t0=0.5)
        rng = np.random.default_rng(33)
        pts = rng.uniform(-2, 2, (500, 3))
        assert np.array_equal(grown(pts), body(pts))

    def test_uniform_raster_offsets_sphere(self):
        radius, alpha, t0 = 1.0, 0.8, 0.5
        body = sphere_field((0.0, 0.0, 0.0), radius)
        grown = accumulate(body, RasterField.constant(1.0), unit_proj(), alpha, t0)
        rng = np.random.default_rng(34)
        for _ in range(100):
            ray = rng.normal(size=3)
            ray /= np.linalg.norm(ray)
            lo, hi = 0.0, 3.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if grown(mid * ray) < 0:
                    lo = mid
                else:
                    hi = mid
            assert 0.5 * (lo + hi) == pytest.approx(radius + alpha * t0, abs=1e-6)

    def test_linear_in_alpha(self):
        body = sphere_field((0.0, 0.0, 0.0), 1.0)
        proj = unit_proj()
        raster = RasterField(np.linspace(0, 1, 12).reshape(3, 4))
        a1, a2 = 0.4, 0.9
        f1 = accumulate(body, raster, proj, a1, 0.5)
        f12 = accumulate(body, raster, proj, a1 + a2, 0.5)
        rng = np.random.default_rng(35)
        pts = rng.uniform(-2, 2, (400, 3))
        u, v = project_uv(proj, pts)
        expected = f1(pts) - a2 * 0.5 * raster.sample(u, v)
        assert np.allclose(f12(pts), expected, atol=1e-12)

    def test_monotone_volume_under_larger_raster(self):
        body = sphere_field((2.0, 0.0, 0.0), 0.9)
        proj = unit_proj()
        rng = np.random.default_rng(36)
        a = rng.uniform(0.0, 0.5, (5, 9))
        b = a + rng.uniform(0.0, 0.5, (5, 9))
        bbox = Aabb((0.5, -1.6, -1.6), (3.5, 1.6, 1.6))
        spacing = float(bbox.extent().max()) / 95
        vol_a = sample_grid(accumulate(body, RasterField(a), proj, 0.6, 0.5), bbox, spacing).solid_volume()
        vol_b = sample_grid(accumulate(body, RasterField(b), proj, 0.6, 0.5), bbox, spacing).solid_volume()
        assert vol_a <= vol_b

    def test_validation(self):
        body = sphere_field((0, 0, 0), 1.0)
        with pytest.raises(InvalidArgumentError):
            accumulate(body, RasterField.constant(1.0), unit_proj(), -0.1, 1.0)
        with pytest.raises(InvalidArgumentError):
            accumulate(body, RasterField.constant(1.0), unit_proj(), 0.1, 0.0)


class TestRasterSampling:
    def test_bilinear_nodes_exact(self):
        values = np.array([[0.0, 1.0], [2.0, 3.0]])
        raster = RasterField(values)
        assert raster.sample(0.0, 0.0) == 0.0
        assert raster.sample(1.0, 0.0) == 1.0
        assert raster.sample(0.0, 1.0) == 2.0
        assert raster.sample(1.0, 1.0) == 3.0
        assert raster.sample(0.5, 0.5) == pytest.approx(1.5)

    def test_border_clamp(self):
        raster = RasterField(np.array([[0.0, 1.0], [2.0, 3.0]]))
        assert raster.sample(-0.5, 0.0) == 0.0
        assert raster.sample(1.5, 1.5) == 3.0


class TestRasterFiles:
    def test_pgm_parse(self, tmp_path):
        path = tmp_path / "r.pgm"
        path.write_text("P2\n# comment\n3 2\n255\n0 128 255\n64 32 16\n")
        raster = load_raster(path)
        assert raster.width == 3 and raster.height == 2
        assert raster.values[0, 1] == pytest.approx(128 / 255)
        assert raster.values[1, 2] == pytest.approx(16 / 255)

    def test_rast_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(37)
        raster = RasterField(rng.uniform(-3, 9, (4, 6)))
        path = tmp_path / "r.rast"
        save_rast(raster, path)
        again = load_raster(path)
        assert np.array_equal(again.values, raster.values)

    def test_malformed_rejected(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_text("P2\n2 2\n255\n1 2 3\n")  # missing pixel
        with pytest.raises(InputFormatError):
            load_raster(bad)
        junk = tmp_path / "junk.txt"
        junk.write_text("BOGUS 1 2\n")
        with pytest.raises(InputFormatError):
            load_raster(junk)
