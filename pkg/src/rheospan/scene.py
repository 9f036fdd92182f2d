"""Scene documents: strict JSON parsing, validation and serialization.

A scene aggregates every open variable of the pipeline: the animated
section, the span, the conceptual shell, the lattice, the accumulation
raster and the fabrication settings. Parsing is strict (unknown keys are
rejected with path-qualified diagnostics), all defaults are materialized,
and a parsed scene re-serializes to a self-contained document.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

from .errors import SceneValidationError

__all__ = [
    "Scene",
    "parse_scene",
    "load_scene",
    "serialize_scene",
    "packaged_scene_path",
    "packaged_scene_names",
]

MIRROR_RULES = ("checkerboard_mirror_x", "none")
HANDEDNESS = ("right", "left")
CURVE_TYPES = ("circle", "segment", "arc", "polyline")
STAGES = ("generate", "accumulate", "mesh", "slice", "analyze")


def _fail(path: str, message: str):
    raise SceneValidationError(path, message)


def _mapping(node, path: str, allowed) -> dict:
    if not isinstance(node, dict):
        _fail(path, f"expected an object, found {type(node).__name__}")
    unknown = set(node) - set(allowed)
    if unknown:
        _fail(f"{path}.{sorted(unknown)[0]}", "unknown key")
    return node

def _number(value, path: str, minimum=None, maximum=None, exclusive_minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, found {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        _fail(path, "must be finite")
    if exclusive_minimum is not None and v <= exclusive_minimum:
        _fail(path, f"must be > {exclusive_minimum}")
    if minimum is not None and v < minimum:
        _fail(path, f"must be >= {minimum}")
    if maximum is not None and v > maximum:
        _fail(path, f"must be <= {maximum}")
    return v


def _integer(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, found {type(value).__name__}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}")
    return int(value)


def _string(value, path: str, choices=None) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, found {type(value).__name__}")
    if choices is not None and value not in choices:
        _fail(path, f"must be one of {list(choices)}")
    return value


def _boolean(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected a boolean, found {type(value).__name__}")
    return value


def _vec3(value, path: str) -> tuple:
    if not isinstance(value, list) or len(value) != 3:
        _fail(path, "expected [x, y, z]")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _vec2(value, path: str) -> tuple:
    if not isinstance(value, list) or len(value) != 2:
        _fail(path, "expected [a, b]")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


@dataclass(frozen=True)
class CurveCfg:
    type: str
    center: tuple = None
    radius: float = None
    start_deg: float = None
    end_deg: float = None
    p0: tuple = None
    p1: tuple = None
    points: tuple = None

    def to_json(self) -> dict:
        if self.type == "circle":
            return {"type": "circle", "center": list(self.center), "radius": self.radius}
        if self.type == "arc":
            return {
                "type": "arc",
                "center": list(self.center),
                "radius": self.radius,
                "start_deg": self.start_deg,
                "end_deg": self.end_deg,
            }
        if self.type == "segment":
            return {"type": "segment", "p0": list(self.p0), "p1": list(self.p1)}
        return {"type": "polyline", "points": [list(p) for p in self.points]}


def _parse_curve(node, path: str) -> CurveCfg:
    if not isinstance(node, dict):
        _fail(path, "expected a curve object")
    kind = _string(node.get("type"), f"{path}.type", CURVE_TYPES)
    if kind == "circle":
        _mapping(node, path, ("type", "center", "radius"))
        return CurveCfg(
            type="circle",
            center=_vec3(node.get("center", [0.0, 0.0, 0.0]), f"{path}.center"),
            radius=_number(node.get("radius"), f"{path}.radius", exclusive_minimum=0.0),
        )
    if kind == "arc":
        _mapping(node, path, ("type", "center", "radius", "start_deg", "end_deg"))
        start = _number(node.get("start_deg", 0.0), f"{path}.start_deg")
        end = _number(node.get("end_deg"), f"{path}.end_deg")
        if not 0.0 < end - start <= 360.0 + 1e-9:
            _fail(f"{path}.end_deg", "arc sweep must lie in (0, 360] degrees")
        return CurveCfg(
            type="arc",
            center=_vec3(node.get("center", [0.0, 0.0, 0.0]), f"{path}.center"),
            radius=_number(node.get("radius"), f"{path}.radius", exclusive_minimum=0.0),
            start_deg=start,
            end_deg=end,
        )
    if kind == "segment":
        _mapping(node, path, ("type", "p0", "p1"))
        return CurveCfg(
            type="segment",
            p0=_vec3(node.get("p0"), f"{path}.p0"),
            p1=_vec3(node.get("p1"), f"{path}.p1"),
        )
    _mapping(node, path, ("type", "points"))
    raw = node.get("points")
    if not isinstance(raw, list) or len(raw) < 2:
        _fail(f"{path}.points", "polyline needs at least 2 points")
    return CurveCfg(type="polyline", points=tuple(_vec3(p, f"{path}.points[{i}]") for i, p in enumerate(raw)))


@dataclass(frozen=True)
class BlendCfg:
    from_curve: int
    to_curve: int
    u_pairs: tuple

    def to_json(self) -> dict:
        return {"from": self.from_curve, "to": self.to_curve, "u_pairs": [list(p) for p in self.u_pairs]}


@dataclass(frozen=True)
class SectionCfg:
    origin: tuple = (0.0, 0.0, 0.0)
    forward: tuple = (0.0, 0.0, 1.0)
    up: tuple = (0.0, 1.0, 0.0)
    curves: tuple = (CurveCfg(type="circle", center=(0.0, 0.0, 0.0), radius=1.0),)
    blends: tuple = ()

    def to_json(self) -> dict:
        return {
            "frame": {"origin": list(self.origin), "forward": list(self.forward), "up": list(self.up)},
            "curves": [c.to_json() for c in self.curves],
            "blends": [b.to_json() for b in self.blends],
        }


@dataclass(frozen=True)
class KeyCfg:
    t: float
    scale_z: float = 1.0
    rotate_y_deg: float = 0.0
    translate_y: float = 0.0

    def to_json(self) -> dict:
        return {"t": self.t, "scale_z": self.scale_z, "rotate_y_deg": self.rotate_y_deg, "translate_y": self.translate_y}


_DEFAULT_KEYS = (KeyCfg(t=0.0), KeyCfg(t=1.0, translate_y=2.0))


@dataclass(frozen=True)
class TrackCfg:
    section: SectionCfg = field(default_factory=SectionCfg)
    keys: tuple = _DEFAULT_KEYS

    def to_json(self) -> dict:
        return {"section": self.section.to_json(), "keys": [k.to_json() for k in self.keys]}


@dataclass(frozen=True)
class SpanCfg:
    direction: tuple = (0.0, 0.0, 1.0)
    length: float = 8.0
    steps: int = 9
    samples_across: int = 9
    deck_thickness: float = 0.25
    bend_profile: tuple = ()

    def to_json(self) -> dict:
        return {
            "direction": list(self.direction),
            "length": self.length,
            "steps": self.steps,
            "samples_across": self.samples_across,
            "deck_thickness": self.deck_thickness,
            "bend_profile": [list(p) for p in self.bend_profile],
        }


@dataclass(frozen=True)
class ShellCfg:
    mode: str = "auto"
    path: str = None
    y_ground: float = 0.0

    def to_json(self) -> dict:
        return {"mode": self.mode, "path": self.path, "y_ground": self.y_ground}


@dataclass(frozen=True)
class LatticeTransformCfg:
    rotate_axis: str = "x"
    rotate_deg: float = 0.0
    translate: tuple = (0.0, 0.0, 0.0)

    def to_json(self) -> dict:
        return {"rotate_axis": self.rotate_axis, "rotate_deg": self.rotate_deg, "translate": list(self.translate)}


@dataclass(frozen=True)
class LatticeCfg:
    cell: float = 1.0
    pitch: float = 4.0
    thickness: float = 0.15
    repeats: tuple = (4, 2)
    mirror: str = "checkerboard_mirror_x"
    handedness: str = "right"
    phase_deg: float = 0.0
    r_max: float = None
    two_sided: bool = True
    sheets: int = 1
    origin: tuple = None
    transform: LatticeTransformCfg = None

    def to_json(self) -> dict:
        return {
            "cell": self.cell,
            "pitch": self.pitch,
            "thickness": self.thickness,
            "repeats": list(self.repeats),
            "mirror": self.mirror,
            "handedness": self.handedness,
            "phase_deg": self.phase_deg,
            "r_max": self.r_max,
            "two_sided": self.two_sided,
            "sheets": self.sheets,
            "origin": None if self.origin is None else list(self.origin),
            "transform": None if self.transform is None else self.transform.to_json(),
        }


@dataclass(frozen=True)
class RasterCfg:
    mode: str
    path: str = None
    c: float = None
    r_cap: float = None
    resolution: tuple = None

    def to_json(self) -> dict:
        if self.mode == "file":
            return {"mode": "file", "path": self.path}
        return {
            "mode": "inverse_distance",
            "c": self.c,
            "r_cap": self.r_cap,
            "resolution": list(self.resolution),
        }


@dataclass(frozen=True)
class AccumulateCfg:
    alpha: float = 0.0

    def to_json(self) -> dict:
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class FabricationCfg:
    grid_resolution: int = 64
    layer_height: float = 0.1
    xy_resolution: int = 96
    overhang_deg: float = 45.0
    slope_threshold_pct: float = 50.0

    def to_json(self) -> dict:
        return {
            "grid_resolution": self.grid_resolution,
            "layer_height": self.layer_height,
            "xy_resolution": self.xy_resolution,
            "overhang_deg": self.overhang_deg,
            "slope_threshold_pct": self.slope_threshold_pct,
        }


@dataclass(frozen=True)
class Scene:
    units: str = "m"
    track: TrackCfg = field(default_factory=TrackCfg)
    span: SpanCfg = field(default_factory=SpanCfg)
    shell: ShellCfg = field(default_factory=ShellCfg)
    lattice: LatticeCfg = field(default_factory=LatticeCfg)
    raster: RasterCfg = None
    accumulate: AccumulateCfg = field(default_factory=AccumulateCfg)
    fabrication: FabricationCfg = field(default_factory=FabricationCfg)
    output_dir: str = "out"
    base_dir: str = field(default=None, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "units": self.units,
            "track": self.track.to_json(),
            "span": self.span.to_json(),
            "shell": self.shell.to_json(),
            "lattice": self.lattice.to_json(),
            "raster": None if self.raster is None else self.raster.to_json(),
            "accumulate": self.accumulate.to_json(),
            "fabrication": self.fabrication.to_json(),
            "output": {"dir": self.output_dir},
        }

    def resolve_path(self, path: str) -> str:
        if os.path.isabs(path) or self.base_dir is None:
            return path
        return os.path.join(self.base_dir, path)

    def with_raster_file(self, path: str) -> "Scene":
        """The remodel loop: swap in an externally produced raster."""
        return replace(self, raster=RasterCfg(mode="file", path=path))


def _parse_section(node, path: str) -> SectionCfg:
    _mapping(node, path, ("frame", "curves", "blends"))
    frame = node.get("frame", {})
    _mapping(frame, f"{path}.frame", ("origin", "forward", "up"))
    origin = _vec3(frame.get("origin", [0.0, 0.0, 0.0]), f"{path}.frame.origin")
    forward = _vec3(frame.get("forward", [0.0, 0.0, 1.0]), f"{path}.frame.forward")
    up = _vec3(frame.get("up", [0.0, 1.0, 0.0]), f"{path}.frame.up")
    raw_curves = node.get("curves", [{"type": "circle", "center": [0.0, 0.0, 0.0], "radius": 1.0}])
    if not isinstance(raw_curves, list) or not raw_curves:
        _fail(f"{path}.curves", "expected a nonempty array of curves")
    curves = tuple(_parse_curve(c, f"{path}.curves[{i}]") for i, c in enumerate(raw_curves))
    blends = []
    raw_blends = node.get("blends", [])
    if not isinstance(raw_blends, list):
        _fail(f"{path}.blends", "expected an array")
    for i, b in enumerate(raw_blends):
        bpath = f"{path}.blends[{i}]"
        _mapping(b, bpath, ("from", "to", "u_pairs"))
        src = _integer(b.get("from"), f"{bpath}.from", minimum=0)
        dst = _integer(b.get("to"), f"{bpath}.to", minimum=0)
        if src >= len(curves) or dst >= len(curves):
            _fail(bpath, "blend endpoint indexes a missing curve")
        raw_pairs = b.get("u_pairs")
        if not isinstance(raw_pairs, list) or not raw_pairs:
            _fail(f"{bpath}.u_pairs", "expected a nonempty array of [ua, ub] pairs")
        pairs = tuple(_vec2(p, f"{bpath}.u_pairs[{j}]") for j, p in enumerate(raw_pairs))
        blends.append(BlendCfg(src, dst, pairs))
    return SectionCfg(origin, forward, up, curves, tuple(blends))


def _parse_track(node, path: str) -> TrackCfg:
    _mapping(node, path, ("section", "keys"))
    section = _parse_section(node.get("section", {}), f"{path}.section")
    raw_keys = node.get("keys")
    if raw_keys is None:
        keys = _DEFAULT_KEYS
    else:
        if not isinstance(raw_keys, list) or not raw_keys:
            _fail(f"{path}.keys", "expected a nonempty array of keys")
        keys = []
        for i, k in enumerate(raw_keys):
            kpath = f"{path}.keys[{i}]"
            _mapping(k, kpath, ("t", "scale_z", "rotate_y_deg", "translate_y"))
            keys.append(
                KeyCfg(
                    t=_number(k.get("t"), f"{kpath}.t", minimum=0.0, maximum=1.0),
                    scale_z=_number(k.get("scale_z", 1.0), f"{kpath}.scale_z", exclusive_minimum=0.0),
                    rotate_y_deg=_number(k.get("rotate_y_deg", 0.0), f"{kpath}.rotate_y_deg"),
                    translate_y=_number(k.get("translate_y", 0.0), f"{kpath}.translate_y"),
                )
            )
        times = [k.t for k in keys]
        if times != sorted(times):
            _fail(f"{path}.keys", "keys must be sorted by t")
        first = keys[0]
        if first.t != 0.0 or first.scale_z != 1.0 or first.rotate_y_deg != 0.0 or first.translate_y != 0.0:
            _fail(f"{path}.keys[0]", "first key must be the identity at t=0")
        keys = tuple(keys)
    return TrackCfg(section, keys)


def _parse_span(node, path: str) -> SpanCfg:
    _mapping(node, path, ("direction", "length", "steps", "samples_across", "deck_thickness", "bend_profile"))
    direction = _vec3(node.get("direction", [0.0, 0.0, 1.0]), f"{path}.direction")
    if math.hypot(direction[0], direction[2]) < 1e-12:
        _fail(f"{path}.direction", "needs a nonzero horizontal component")
    profile = []
    raw_profile = node.get("bend_profile", [])
    if not isinstance(raw_profile, list):
        _fail(f"{path}.bend_profile", "expected an array of [u, angle_deg] pairs")
    for i, pair in enumerate(raw_profile):
        u, angle = _vec2(pair, f"{path}.bend_profile[{i}]")
        if not 0.0 <= u <= 1.0:
            _fail(f"{path}.bend_profile[{i}][0]", "u must lie in [0, 1]")
        profile.append((u, angle))
    if [p[0] for p in profile] != sorted(p[0] for p in profile):
        _fail(f"{path}.bend_profile", "pairs must be sorted by u")
    return SpanCfg(
        direction=direction,
        length=_number(node.get("length", 8.0), f"{path}.length", exclusive_minimum=0.0),
        steps=_integer(node.get("steps", 9), f"{path}.steps", minimum=2),
        samples_across=_integer(node.get("samples_across", 9), f"{path}.samples_across", minimum=2),
        deck_thickness=_number(node.get("deck_thickness", 0.25), f"{path}.deck_thickness", exclusive_minimum=0.0),
        bend_profile=tuple(profile),
    )


def _parse_shell(node, path: str, base_dir) -> ShellCfg:
    _mapping(node, path, ("mode", "path", "y_ground"))
    mode = _string(node.get("mode", "auto"), f"{path}.mode", ("auto", "mesh"))
    shell_path = node.get("path")
    if mode == "mesh":
        if not isinstance(shell_path, str) or not shell_path:
            _fail(f"{path}.path", "shell mode 'mesh' needs a file path")
        resolved = shell_path if os.path.isabs(shell_path) or base_dir is None else os.path.join(base_dir, shell_path)
        if not os.path.exists(resolved):
            _fail(f"{path}.path", f"referenced file does not exist: {resolved}")
    elif shell_path is not None:
        _fail(f"{path}.path", "path is only valid with mode 'mesh'")
    return ShellCfg(mode=mode, path=shell_path, y_ground=_number(node.get("y_ground", 0.0), f"{path}.y_ground"))


def _parse_lattice(node, path: str) -> LatticeCfg:
    _mapping(
        node,
        path,
        (
            "cell",
            "pitch",
            "thickness",
            "repeats",
            "mirror",
            "handedness",
            "phase_deg",
            "r_max",
            "two_sided",
            "sheets",
            "origin",
            "transform",
        ),
    )
    cell = _number(node.get("cell", 1.0), f"{path}.cell", exclusive_minimum=0.0)
    thickness = _number(node.get("thickness", 0.15), f"{path}.thickness", exclusive_minimum=0.0)
    if thickness >= 0.5 * cell:
        _fail(f"{path}.thickness", f"must be < cell/2 = {0.5 * cell}")
    raw_repeats = node.get("repeats", [4, 2])
    if not isinstance(raw_repeats, list) or len(raw_repeats) != 2:
        _fail(f"{path}.repeats", "expected [nx, nz]")
    repeats = (
        _integer(raw_repeats[0], f"{path}.repeats[0]", minimum=1),
        _integer(raw_repeats[1], f"{path}.repeats[1]", minimum=1),
    )
    r_max = node.get("r_max")
    if r_max is None:
        # cover the prism diagonal so the sheet meets the cell corners
        r_max = cell * 0.5 * math.sqrt(2.0) * 1.001
    else:
        r_max = _number(r_max, f"{path}.r_max", exclusive_minimum=0.0)
    origin = node.get("origin")
    if origin is not None:
        origin = _vec2(origin, f"{path}.origin")
    transform = node.get("transform")
    if transform is not None:
        tpath = f"{path}.transform"
        _mapping(transform, tpath, ("rotate_axis", "rotate_deg", "translate"))
        transform = LatticeTransformCfg(
            rotate_axis=_string(transform.get("rotate_axis", "x"), f"{tpath}.rotate_axis", ("x", "y", "z")),
            rotate_deg=_number(transform.get("rotate_deg", 0.0), f"{tpath}.rotate_deg"),
            translate=_vec3(transform.get("translate", [0.0, 0.0, 0.0]), f"{tpath}.translate"),
        )
    return LatticeCfg(
        cell=cell,
        pitch=_number(node.get("pitch", 4.0), f"{path}.pitch", exclusive_minimum=0.0),
        thickness=thickness,
        repeats=repeats,
        mirror=_string(node.get("mirror", "checkerboard_mirror_x"), f"{path}.mirror", MIRROR_RULES),
        handedness=_string(node.get("handedness", "right"), f"{path}.handedness", HANDEDNESS),
        phase_deg=_number(node.get("phase_deg", 0.0), f"{path}.phase_deg"),
        r_max=r_max,
        two_sided=_boolean(node.get("two_sided", True), f"{path}.two_sided"),
        sheets=_integer(node.get("sheets", 1), f"{path}.sheets", minimum=1),
        origin=origin,
        transform=transform,
    )


def _parse_raster(node, path: str, base_dir) -> RasterCfg:
    if node is None:
        return None
    if not isinstance(node, dict):
        _fail(path, "expected an object or null")
    mode = _string(node.get("mode"), f"{path}.mode", ("file", "inverse_distance"))
    if mode == "file":
        _mapping(node, path, ("mode", "path"))
        raster_path = node.get("path")
        if not isinstance(raster_path, str) or not raster_path:
            _fail(f"{path}.path", "raster mode 'file' needs a file path")
        resolved = raster_path if os.path.isabs(raster_path) or base_dir is None else os.path.join(base_dir, raster_path)
        if not os.path.exists(resolved):
            _fail(f"{path}.path", f"referenced file does not exist: {resolved}")
        return RasterCfg(mode="file", path=raster_path)
    _mapping(node, path, ("mode", "c", "r_cap", "resolution"))
    raw_res = node.get("resolution", [33, 9])
    if not isinstance(raw_res, list) or len(raw_res) != 2:
        _fail(f"{path}.resolution", "expected [width, height]")
    return RasterCfg(
        mode="inverse_distance",
        c=_number(node.get("c", 1.0), f"{path}.c", exclusive_minimum=0.0),
        r_cap=_number(node.get("r_cap", 4.0), f"{path}.r_cap", exclusive_minimum=0.0),
        resolution=(
            _integer(raw_res[0], f"{path}.resolution[0]", minimum=2),
            _integer(raw_res[1], f"{path}.resolution[1]", minimum=2),
        ),
    )


def _parse_fabrication(node, path: str) -> FabricationCfg:
    _mapping(node, path, ("grid_resolution", "layer_height", "xy_resolution", "overhang_deg", "slope_threshold_pct"))
    overhang = _number(node.get("overhang_deg", 45.0), f"{path}.overhang_deg")
    if not 0.0 < overhang < 90.0:
        _fail(f"{path}.overhang_deg", "must lie in (0, 90)")
    return FabricationCfg(
        grid_resolution=_integer(node.get("grid_resolution", 64), f"{path}.grid_resolution", minimum=4),
        layer_height=_number(node.get("layer_height", 0.1), f"{path}.layer_height", exclusive_minimum=0.0),
        xy_resolution=_integer(node.get("xy_resolution", 96), f"{path}.xy_resolution", minimum=2),
        overhang_deg=overhang,
        slope_threshold_pct=_number(node.get("slope_threshold_pct", 50.0), f"{path}.slope_threshold_pct", exclusive_minimum=0.0),
    )


def parse_scene(text: str, base_dir: str = None) -> Scene:
    """Parse and validate a scene JSON document.

    Raises SceneValidationError with a field path for any violation;
    JSON syntax errors surface with line/column information.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneValidationError("$", f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    root = _mapping(
        doc,
        "$",
        ("units", "track", "span", "shell", "lattice", "raster", "accumulate", "fabrication", "output"),
    )
    units = _string(root.get("units", "m"), "$.units")
    track = _parse_track(root.get("track", {}), "$.track")
    span = _parse_span(root.get("span", {}), "$.span")
    shell = _parse_shell(root.get("shell", {}), "$.shell", base_dir)
    lattice = _parse_lattice(root.get("lattice", {}), "$.lattice")
    raster = _parse_raster(root.get("raster"), "$.raster", base_dir)
    acc_node = root.get("accumulate", {})
    _mapping(acc_node, "$.accumulate", ("alpha",))
    accumulate = AccumulateCfg(alpha=_number(acc_node.get("alpha", 0.0), "$.accumulate.alpha", minimum=0.0))
    fabrication = _parse_fabrication(root.get("fabrication", {}), "$.fabrication")
    out_node = root.get("output", {})
    _mapping(out_node, "$.output", ("dir",))
    output_dir = _string(out_node.get("dir", "out"), "$.output.dir")
    scene = Scene(
        units=units,
        track=track,
        span=span,
        shell=shell,
        lattice=lattice,
        raster=raster,
        accumulate=accumulate,
        fabrication=fabrication,
        output_dir=output_dir,
        base_dir=base_dir,
    )
    # Cross-checks that need the assembled scene: the geometry validators
    # run here so bad sections fail at parse time with a JSON path.
    try:
        from .pipeline import build_track

        build_track(scene)
    except SceneValidationError:
        raise
    except Exception as exc:  # geometry-level complaint, re-path it
        raise SceneValidationError("$.track.section", str(exc))
    return scene


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_scene(text, base_dir=os.path.dirname(os.path.abspath(path)))


def serialize_scene(scene: Scene) -> str:
    return json.dumps(scene.to_json_dict(), indent=2, sort_keys=True) + "\n"


def packaged_scene_names() -> list:
    return ["deney1", "deney2", "deney3"]


def packaged_scene_path(name: str) -> str:
    """Path of a packaged reference scene (deney1, deney2, deney3)."""
    here = os.path.dirname(os.path.abspath(__file__))
    candidate = os.path.join(here, "scenes", f"{name}.json")
    if not os.path.exists(candidate):
        raise SceneValidationError("$", f"no packaged scene named {name!r}")
    return candidate
