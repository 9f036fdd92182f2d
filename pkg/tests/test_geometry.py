import math

import numpy as np
import pytest

from rheospan.errors import InvalidArgumentError
from rheospan.geometry import (
    Affine3,
    Circle,
    Frame,
    HermiteBlend,
    PlaneBasis,
    Polyline,
    Section,
    SectionTrack,
    Segment,
    TrackKey,
    Vec3,
    affine_apply,
    blend_g1,
    evaluate_track,
    sample_curve,
)


def vec_close(a: Vec3, b: Vec3, tol=1e-12) -> bool:
    return (a - b).norm() <= tol


class TestAffine:
    def test_identity(self):
        p = affine_apply(Affine3.identity(), Vec3(1, 2, 3))
        assert vec_close(p, Vec3(1, 2, 3))

    def test_translate(self):
        p = affine_apply(Affine3.translate(0, 5, 0), Vec3(1, 0, 0))
        assert vec_close(p, Vec3(1, 5, 0))

    def test_rotate_y_convention(self):
        # x' = x cos + z sin, z' = -x sin + z cos
        p = affine_apply(Affine3.rotate_y(math.pi / 2), Vec3(1, 0, 0))
        assert vec_close(p, Vec3(0, 0, -1), tol=1e-15)

    def test_compose_matches_sequential(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            t1 = Affine3(rng.normal(size=(3, 3)) + np.eye(3), rng.normal(size=3))
            t2 = Affine3(rng.normal(size=(3, 3)) + np.eye(3), rng.normal(size=3))
            p = Vec3(*rng.normal(size=3))
            a = affine_apply(t2, affine_apply(t1, p))
            b = affine_apply(t2.compose(t1), p)
            assert (a - b).norm() <= 1e-12 * max(1.0, a.norm())

    def test_inverse_roundtrip(self):
        t = Affine3.rotate_y(0.3).compose(Affine3.translate(1, 2, 3)).compose(Affine3.scale(2, 1, 0.5))
        p = Vec3(0.3, -1.2, 2.2)
        assert vec_close(t.inverse().apply(t.apply(p)), p, tol=1e-12)

    def test_singular_inverse_rejected(self):
        with pytest.raises(InvalidArgumentError):
            Affine3(np.zeros((3, 3)), np.zeros(3)).inverse()


class TestSampleCurve:
    def test_segment_midpoint(self):
        pts = sample_curve(Segment(Vec3(0, 0, 0), Vec3(1, 0, 0)), 3)
        assert vec_close(pts[1], Vec3(0.5, 0, 0))
        assert vec_close(pts[0], Vec3(0, 0, 0)) and vec_close(pts[2], Vec3(1, 0, 0))

    def test_circle_quadrants_no_duplicate(self):
        circle = Circle(Vec3(0, 0, 0), 1.0, PlaneBasis(Vec3(1, 0, 0), Vec3(0, 0, 1)))
        pts = sample_curve(circle, 4)
        assert len(pts) == 4
        expected = [Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(-1, 0, 0), Vec3(0, 0, -1)]
        for got, want in zip(pts, expected):
            assert vec_close(got, want, tol=1e-12)

    def test_degenerate_hermite_stays_on_line(self):
        blend = HermiteBlend(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(3, 0, 0), Vec3(1, 0, 0))
        for p in sample_curve(blend, 17):
            assert abs(p.y) <= 1e-12 and abs(p.z) <= 1e-12

    def test_needs_two_samples(self):
        with pytest.raises(InvalidArgumentError):
            sample_curve(Segment(Vec3(0, 0, 0), Vec3(1, 0, 0)), 1)

    def test_chord_length_monotone(self):
        poly = Polyline((Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 2), Vec3(3, 0, 2)))
        pts = sample_curve(poly, 23)
        cum = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            step = (b - a).norm()
            assert step >= 0.0
            cum += step
        assert cum > 0.0


def circle_section(radius=1.0):
    return Section((Circle(Vec3(0, 0, 0), radius),), Frame())


class TestTrack:
    def test_t0_is_base(self):
        track = SectionTrack(circle_section(), (TrackKey(0.0), TrackKey(1.0, scale_z=2.0)))
        sec = evaluate_track(track, 0.0)
        for t in (0.0, 0.3, 0.75):
            assert vec_close(sec.curves[0].point_at(t), track.base.curves[0].point_at(t), tol=1e-12)

    def test_linear_easing_scale(self):
        track = SectionTrack(circle_section(), (TrackKey(0.0), TrackKey(1.0, scale_z=2.0)))
        sec = evaluate_track(track, 0.5)
        # z extent scaled by 1.5, x extent untouched
        p_z = sec.curves[0].point_at(0.25)
        p_x = sec.curves[0].point_at(0.0)
        assert abs(p_z.z - 1.5) <= 1e-12
        assert abs(p_x.x - 1.0) <= 1e-12

    def test_keys_reproduced_exactly(self):
        keys = (TrackKey(0.0), TrackKey(0.4, scale_z=1.7, rotate_y=0.3, translate_y=2.0), TrackKey(1.0, scale_z=2.4))
        track = SectionTrack(circle_section(), keys)
        assert track.values_at(0.4) == (1.7, 0.3, 2.0)
        assert track.values_at(1.0) == (2.4, 0.0, 0.0)

    def test_half_turn_maps_circle_onto_itself(self):
        track = SectionTrack(circle_section(), (TrackKey(0.0), TrackKey(1.0, rotate_y=math.pi)))
        sec = evaluate_track(track, 1.0)
        base = track.base.curves[0]
        moved = sec.curves[0]
        base_pts = {tuple(np.round(p.as_array(), 9)) for p in sample_curve(base, 8)}
        moved_pts = {tuple(np.round(p.as_array(), 9)) for p in sample_curve(moved, 8)}
        assert base_pts == moved_pts
        # but individual samples did rotate by pi
        assert vec_close(moved.point_at(0.0), Vec3(-1, 0, 0), tol=1e-9)

    def test_time_out_of_range(self):
        track = SectionTrack(circle_section(), (TrackKey(0.0),))
        with pytest.raises(InvalidArgumentError):
            evaluate_track(track, 1.5)

    def test_first_key_must_be_identity(self):
        with pytest.raises(InvalidArgumentError):
            SectionTrack(circle_section(), (TrackKey(0.0, scale_z=2.0),))


def central_tangent(curve, t, h=1e-5):
    a = curve.point_at(t - h)
    b = curve.point_at(t + h)
    return (b - a) * (1.0 / (2 * h))


def angle_between_lines(a: Vec3, b: Vec3) -> float:
    cross = a.cross(b).norm()
    dot = abs(a.dot(b))
    return math.atan2(cross, dot)


class TestBlendG1:
    def test_tangent_parallel_to_circles(self):
        a = Circle(Vec3(0, 0, 0), 1.0)
        b = Circle(Vec3(0, 2, 0), 1.0)
        (blend,) = blend_g1(a, b, [(0.0, 0.0)])
        assert angle_between_lines(central_tangent(blend, 0.0), a.tangent_at(0.0)) <= 1e-9
        assert angle_between_lines(central_tangent(blend, 1.0), b.tangent_at(0.0)) <= 1e-9

    def test_four_blends_between_offset_circles(self):
        a = Circle(Vec3(0, 0, 0), 1.0)
        b = Circle(Vec3(0, 1, 0), 1.0)
        blends = blend_g1(a, b, [(0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (0.75, 0.75)])
        assert len(blends) == 4
        for u, blend in zip((0.0, 0.25, 0.5, 0.75), blends):
            assert angle_between_lines(central_tangent(blend, 0.0), a.tangent_at(u)) <= 1e-9
            assert angle_between_lines(central_tangent(blend, 1.0), b.tangent_at(u)) <= 1e-9

    def test_endpoints_interpolate_exactly(self):
        a = Segment(Vec3(0, 0, 0), Vec3(1, 0, 0))
        b = Segment(Vec3(0, 0, 3), Vec3(1, 0, 3))
        (blend,) = blend_g1(a, b, [(0.3, 0.7)])
        assert vec_close(blend.point_at(0.0), a.point_at(0.3), tol=0)
        assert vec_close(blend.point_at(1.0), b.point_at(0.7), tol=0)

    def test_coincident_pair_degenerate_not_error(self):
        a = Circle(Vec3(0, 0, 0), 1.0)
        (blend,) = blend_g1(a, a, [(0.0, 0.0)])
        assert blend.is_degenerate

    def test_empty_pairs_rejected(self):
        a = Circle(Vec3(0, 0, 0), 1.0)
        with pytest.raises(InvalidArgumentError):
            blend_g1(a, a, [])


class TestSection:
    def test_coplanarity_enforced(self):
        tilted = Segment(Vec3(0, 0, 0), Vec3(1, 0.5, 0))
        with pytest.raises(InvalidArgumentError):
            Section((tilted,), Frame())

    def test_transform_moves_frame(self):
        sec = circle_section()
        moved = sec.transformed(Affine3.translate(0, 3, 0))
        assert vec_close(moved.frame.origin, Vec3(0, 3, 0))
