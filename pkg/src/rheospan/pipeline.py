"""Pipeline orchestration: scene -> geometry -> stage products on disk.

Stages: generate (deck + fields), accumulate (raster-driven growth), mesh
(grid sampling + isosurface), slice (layers + supports), analyze (slopes,
volumes, report, figures). Later stages compute what they need from
earlier ones in memory; only requested stages write products. Output
depends solely on scene content and explicit overrides, so repeated runs
are byte-identical, manifest included.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import report as report_mod
from .allometry import RasterField, UvProjection, accumulate, inverse_distance_raster, load_raster, save_rast
from .errors import InvalidArgumentError, SceneValidationError
from .fabrication import (
    Mesh,
    estimate_support,
    export_layers,
    export_mesh,
    is_watertight,
    marching_cubes,
    slice_field,
    slope_report,
)
from .fields import Aabb, ScalarField, dump_vgrid, half_space, intersect, sample_grid, transform_field, union
from .geometry import (
    Affine3,
    Arc,
    Circle,
    Frame,
    PlaneBasis,
    Polyline,
    Section,
    SectionTrack,
    Segment,
    TrackKey,
    Vec3,
    blend_g1,
)
from .lattice import HelicoidSpec, LatticeSpec, TileSpec, tile_lattice
from .scene import STAGES, Scene, serialize_scene
from .span import (
    DeckSurface,
    ShellSpec,
    SpanSpec,
    auto_shell,
    bend_edges,
    deck_field,
    footprint_field_xz,
    footprint_hull,
    freeze_sections,
    loft_deck,
    obj_shell_field,
    _HeightChart,
)

__all__ = [
    "GeometryBundle",
    "build_track",
    "build_geometry",
    "run_pipeline",
    "remodel_step",
    "piecewise_linear",
]


def piecewise_linear(pairs):
    """Piecewise-linear scalar profile over [0, 1] from sorted (u, value)
    pairs; constant extrapolation outside the listed range."""
    pts = [(float(u), float(v)) for u, v in pairs]
    if not pts:
        return lambda u: 0.0

    def profile(u: float) -> float:
        if u <= pts[0][0]:
            return pts[0][1]
        for (u0, v0), (u1, v1) in zip(pts[:-1], pts[1:]):
            if u <= u1:
                span = u1 - u0
                if span <= 0:
                    return v1
                w = (u - u0) / span
                return v0 + w * (v1 - v0)
        return pts[-1][1]

    return profile


def _curve_from_cfg(cfg, frame: Frame):
    basis = PlaneBasis(frame.lateral, frame.forward)
    if cfg.type == "circle":
        return Circle(Vec3(*cfg.center), cfg.radius, basis)
    if cfg.type == "arc":
        return Arc(
            Vec3(*cfg.center),
            cfg.radius,
            math.radians(cfg.start_deg),
            math.radians(cfg.end_deg),
            basis,
        )
    if cfg.type == "segment":
        return Segment(Vec3(*cfg.p0), Vec3(*cfg.p1))
    return Polyline(tuple(Vec3(*p) for p in cfg.points))


def build_track(scene: Scene) -> SectionTrack:
    cfg = scene.track
    frame = Frame(
        Vec3(*cfg.section.origin),
        Vec3(*cfg.section.forward).normalized(),
        Vec3(*cfg.section.up).normalized(),
    )
    curves = [_curve_from_cfg(c, frame) for c in cfg.section.curves]
    for blend in cfg.section.blends:
        curves.extend(blend_g1(curves[blend.from_curve], curves[blend.to_curve], blend.u_pairs))
    section = Section(tuple(curves), frame)
    keys = tuple(
        TrackKey(k.t, k.scale_z, math.radians(k.rotate_y_deg), k.translate_y) for k in cfg.keys
    )
    return SectionTrack(section, keys)


def build_span_spec(scene: Scene, track: SectionTrack) -> SpanSpec:
    profile = None
    if scene.span.bend_profile:
        deg_profile = piecewise_linear(scene.span.bend_profile)
        profile = lambda u: math.radians(deg_profile(u))
    return SpanSpec(
        track=track,
        direction=Vec3(*scene.span.direction),
        span_length=scene.span.length,
        steps=scene.span.steps,
        bend_profile=profile,
    )


def build_uv_projection(deck: DeckSurface, direction: Vec3) -> UvProjection:
    u_axis = np.array([direction.x, 0.0, direction.z])
    u_axis /= np.linalg.norm(u_axis)
    v_axis = np.array([u_axis[2], 0.0, -u_axis[0]])
    pts = deck.points.reshape(-1, 3)
    su = pts @ u_axis
    sv = pts @ v_axis
    u_extent = max(float(su.max() - su.min()), 1e-9)
    v_extent = max(float(sv.max() - sv.min()), 1e-9)
    origin = float(su.min()) * u_axis + float(sv.min()) * v_axis
    return UvProjection(origin, u_axis, v_axis, u_extent, v_extent)


def build_lattice_field(scene: Scene, deck: DeckSurface):
    cfg = scene.lattice
    pts = deck.points.reshape(-1, 3)
    y_min = scene.shell.y_ground
    y_max = float(pts[:, 1].max()) + scene.span.deck_thickness
    if y_max <= y_min:
        y_max = y_min + cfg.cell
    nx, nz = cfg.repeats
    if cfg.origin is not None:
        cx, cz = cfg.origin
    else:
        center_x = 0.5 * (pts[:, 0].min() + pts[:, 0].max())
        center_z = 0.5 * (pts[:, 2].min() + pts[:, 2].max())
        cx = center_x - 0.5 * (nx - 1) * cfg.cell
        cz = center_z - 0.5 * (nz - 1) * cfg.cell
    helicoid = HelicoidSpec(
        pitch=cfg.pitch,
        phase=math.radians(cfg.phase_deg),
        handedness=cfg.handedness,
        r_max=cfg.r_max,
        axis=(cx, cz),
        two_sided=cfg.two_sided,
    )
    tile = TileSpec(cfg.cell, y_min, y_max, helicoid, cfg.thickness, sheets=cfg.sheets)
    field = tile_lattice(LatticeSpec(tile, (nx, nz), cfg.mirror))
    if cfg.transform is not None:
        t = cfg.transform
        pivot = np.array([cx + 0.5 * (nx - 1) * cfg.cell, 0.5 * (y_min + y_max), cz + 0.5 * (nz - 1) * cfg.cell])
        rot = {
            "x": Affine3.rotate_x,
            "y": Affine3.rotate_y,
            "z": Affine3.rotate_z,
        }[t.rotate_axis](math.radians(t.rotate_deg))
        affine = (
            Affine3.translate(*(pivot + np.asarray(t.translate)))
            .compose(rot)
            .compose(Affine3.translate(*(-pivot)))
        )
        field = transform_field(field, affine)
    return field


def _deck_surface_sampler(deck: DeckSurface):
    def sampler(u, v):
        return deck.point_at_uv(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    return sampler


def build_raster(scene: Scene, deck: DeckSurface, proj: UvProjection, override_path=None):
    if override_path is not None:
        return load_raster(override_path)
    cfg = scene.raster
    if cfg is None:
        return None
    if cfg.mode == "file":
        return load_raster(scene.resolve_path(cfg.path))
    contacts = [
        half_space(proj.origin, proj.u_axis),
        half_space(proj.origin + proj.u_extent * proj.u_axis, proj.u_axis),
        half_space((0.0, scene.shell.y_ground, 0.0), (0.0, 1.0, 0.0)),
    ]
    return inverse_distance_raster(
        contacts,
        proj,
        cfg.resolution,
        cfg.c,
        cfg.r_cap,
        surface_point=_deck_surface_sampler(deck),
    )


@dataclass
class GeometryBundle:
    scene: Scene
    track: SectionTrack
    sections: list
    deck: DeckSurface
    proj: UvProjection
    shell_field: ScalarField
    lattice_field: ScalarField
    structural_field: ScalarField
    preform: ScalarField
    raster: RasterField
    domain: Aabb
    grid_spacing: float


def build_geometry(scene: Scene, raster_override=None) -> GeometryBundle:
    track = build_track(scene)
    span_spec = build_span_spec(scene, track)
    sections = freeze_sections(span_spec)
    deck = loft_deck(sections, scene.span.samples_across)
    if span_spec.bend_profile is not None:
        deck = bend_edges(deck, span_spec.bend_profile)
    proj = build_uv_projection(deck, span_spec.unit_direction)

    if scene.shell.mode == "mesh":
        shell_field = obj_shell_field(scene.resolve_path(scene.shell.path))
    else:
        shell_field = auto_shell(deck, y_ground=scene.shell.y_ground)

    lattice_field = build_lattice_field(scene, deck)

    y_ground = scene.shell.y_ground
    half_plate = 0.5 * scene.span.deck_thickness
    hull = footprint_hull(deck)
    lateral = footprint_field_xz(hull)
    chart = _HeightChart(deck)

    def prism_fn(pts):
        underside = chart(pts[:, [0, 2]]) - half_plate
        return np.maximum(lateral._fn(pts), np.maximum(y_ground - pts[:, 1], pts[:, 1] - underside))

    footprint_prism = ScalarField(prism_fn)
    structural = intersect(lattice_field, intersect(shell_field, footprint_prism))

    raster = build_raster(scene, deck, proj, override_path=raster_override)
    alpha = scene.accumulate.alpha
    if raster is not None and alpha > 0.0:
        structural = accumulate(structural, raster, proj, alpha, scene.lattice.thickness)

    plate = deck_field(deck, scene.span.deck_thickness)
    preform = union(plate, structural)

    deck_pts = deck.points.reshape(-1, 3)
    deck_box = Aabb.of_points(deck_pts).dilated(half_plate)
    lo = np.minimum(deck_box.lo, np.array([deck_box.lo[0], y_ground, deck_box.lo[2]]))
    domain = Aabb(lo, deck_box.hi)
    growth = 0.0
    if raster is not None and alpha > 0.0:
        growth = alpha * scene.lattice.thickness * max(float(raster.values.max()), 0.0)
    rough = float(domain.extent().max()) / scene.fabrication.grid_resolution
    domain = domain.dilated(growth + 2.6 * rough)
    spacing = float(domain.extent().max()) / scene.fabrication.grid_resolution
    return GeometryBundle(
        scene=scene,
        track=track,
        sections=sections,
        deck=deck,
        proj=proj,
        shell_field=shell_field,
        lattice_field=lattice_field,
        structural_field=structural,
        preform=preform,
        raster=raster,
        domain=domain,
        grid_spacing=spacing,
    )


def remodel_step(scene: Scene, stress_raster_file) -> Scene:
    """One iteration of the external analysis loop: swap the accumulation
    raster for the supplied file and let the pipeline regenerate."""
    load_raster(stress_raster_file)  # validate early; raises InputFormatError
    return scene.with_raster_file(os.path.abspath(str(stress_raster_file)))


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _deck_mesh(deck: DeckSurface) -> Mesh:
    verts, tris = deck.tessellate()
    return Mesh(verts, tris)


def run_pipeline(
    scene: Scene,
    stages=None,
    out_dir=None,
    raster_override=None,
    dump_grid: bool = False,
    threads: int = 1,
    verbose: bool = False,
) -> dict:
    """Execute the requested stages and write their products plus a
    manifest under the output directory. Returns the manifest dict."""
    if stages is None:
        stages = list(STAGES)
    stages = list(stages)
    for stage in stages:
        if stage not in STAGES:
            raise SceneValidationError("$.stages", f"unknown stage {stage!r} (expected subset of {list(STAGES)})")
    if threads < 1:
        raise InvalidArgumentError("threads must be >= 1")
    stage_set = set(stages)
    out_root = out_dir if out_dir is not None else scene.resolve_path(scene.output_dir)
    os.makedirs(out_root, exist_ok=True)

    def note(msg):
        if verbose:
            print(msg)

    note(f"building geometry ({scene.span.steps} sections, {scene.span.samples_across} across)")
    bundle = build_geometry(scene, raster_override=raster_override)
    products = []

    if "generate" in stage_set:
        deck_path = os.path.join(out_root, "deck.obj")
        export_mesh(_deck_mesh(bundle.deck), deck_path, "obj")
        products.append("deck.obj")
        with open(os.path.join(out_root, "scene.resolved.json"), "w", encoding="ascii") as fh:
            fh.write(serialize_scene(scene))
        products.append("scene.resolved.json")

    if "accumulate" in stage_set and bundle.raster is not None:
        raster_path = os.path.join(out_root, "raster_used.rast")
        save_rast(bundle.raster, raster_path)
        products.append("raster_used.rast")

    mesh = None
    grid = None
    if "mesh" in stage_set or "analyze" in stage_set:
        note(f"sampling preform grid at spacing {bundle.grid_spacing:.4g}")
        grid = sample_grid(bundle.preform, bundle.domain, bundle.grid_spacing)
        mesh = marching_cubes(grid)
        if "mesh" in stage_set:
            mesh_path = os.path.join(out_root, "preform.obj")
            export_mesh(mesh, mesh_path, "obj")
            products.append("preform.obj")
            if dump_grid:
                grid_path = os.path.join(out_root, "preform.vgrid")
                dump_vgrid(grid, grid_path)
                products.append("preform.vgrid")

    stack = None
    support = None
    if "slice" in stage_set or "analyze" in stage_set:
        note(f"slicing at layer height {scene.fabrication.layer_height}")
        stack = slice_field(
            bundle.preform,
            bundle.domain,
            scene.fabrication.layer_height,
            scene.fabrication.xy_resolution,
        )
        support = estimate_support(stack, scene.fabrication.overhang_deg)
        if "slice" in stage_set:
            layers_dir = os.path.join(out_root, "layers")
            svg_files = export_layers(support.stack, layers_dir, "svg")
            export_layers(support.stack, layers_dir, "toolpath_text")
            for name in svg_files:
                products.append(os.path.join("layers", name))
            products.append(os.path.join("layers", "toolpath.txt"))
            products.append(os.path.join("layers", "layers_manifest.json"))

    if "analyze" in stage_set:
        slopes = slope_report(bundle.deck, scene.fabrication.slope_threshold_pct)
        layer_areas = [layer.model_area() for layer in support.stack.layers]
        min_area_layer = int(np.argmin(layer_areas)) if layer_areas else -1
        payload = {
            "slope": {
                "max_slope_pct": slopes.max_slope_pct,
                "max_cross_slope_pct": slopes.max_cross_slope_pct,
                "threshold_pct": slopes.threshold_pct,
                "flagged_regions": [list(r) for r in slopes.regions],
            },
            "volumes": {
                "model_volume": support.model_volume,
                "support_volume": support.support_volume,
                "support_fraction": support.support_fraction,
                "voxel_volume": grid.solid_volume() if grid is not None else None,
            },
            "layers": {
                "count": len(support.stack.layers),
                "layer_height": support.stack.layer_height,
                "min_model_area": min(layer_areas) if layer_areas else 0.0,
                "min_model_area_layer": min_area_layer,
                "overhang_deg": scene.fabrication.overhang_deg,
            },
            "raster_channel": None
            if bundle.raster is None
            else {
                "width": bundle.raster.width,
                "height": bundle.raster.height,
                "min": float(bundle.raster.values.min()),
                "max": float(bundle.raster.values.max()),
                "alpha": scene.accumulate.alpha,
            },
        }
        if mesh is not None:
            payload["mesh"] = {
                "vertices": int(len(mesh.vertices)),
                "triangles": int(len(mesh.triangles)),
                "area": mesh.area(),
                "volume": mesh.volume(),
                "watertight": is_watertight(mesh),
            }
        _write_json(os.path.join(out_root, "report.json"), payload)
        products.append("report.json")
        report_mod.write_slope_csv(os.path.join(out_root, "slope.csv"), slopes)
        products.append("slope.csv")
        report_mod.write_layers_csv(os.path.join(out_root, "layers.csv"), support)
        products.append("layers.csv")
        figures_dir = os.path.join(out_root, "figures")
        os.makedirs(figures_dir, exist_ok=True)
        report_mod.render_slope_figure(slopes, os.path.join(figures_dir, "slope_map.png"))
        products.append(os.path.join("figures", "slope_map.png"))
        report_mod.render_layers_figure(support, os.path.join(figures_dir, "layers.png"))
        products.append(os.path.join("figures", "layers.png"))
        if bundle.raster is not None:
            report_mod.render_raster_figure(bundle.raster, os.path.join(figures_dir, "raster.png"))
            products.append(os.path.join("figures", "raster.png"))

    manifest = {
        "generator": "rheospan",
        "scene_sha256": hashlib.sha256(serialize_scene(scene).encode()).hexdigest(),
        "stages": sorted(stage_set),
        "products": {name: _sha256_file(os.path.join(out_root, name)) for name in sorted(products)},
    }
    _write_json(os.path.join(out_root, "manifest.json"), manifest)
    return manifest
