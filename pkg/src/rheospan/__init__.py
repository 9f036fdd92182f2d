"""rheospan: generative bridging structures.

Lofted circulation decks from animated cross-sections, helicoid
("rheotomic") structural lattices shaped by boolean operations,
raster-driven thickness accumulation, and fabrication outputs: meshes,
slope reports, vertical slices with support estimation.
"""

from .allometry import RasterField, UvProjection, accumulate, idw_interpolate, inverse_distance_raster, project_uv
from .errors import InputFormatError, InvalidArgumentError, ResourceLimitError, SceneValidationError
from .fabrication import LayerStack, Mesh, estimate_support, marching_cubes, slice_field, slope_report
from .fields import (
    Aabb,
    ScalarField,
    VoxelGrid,
    difference,
    gradient,
    intersect,
    primitive_box,
    primitive_prism_y,
    sample_grid,
    thicken_surface,
    transform_field,
    union,
)
from .geometry import Affine3, Circle, Section, SectionTrack, Segment, Vec3, blend_g1, evaluate_track, sample_curve
from .lattice import HelicoidSpec, LatticeSpec, TileSpec, helicoid_field, rheotomic_tile, tile_lattice
from .pipeline import build_geometry, remodel_step, run_pipeline
from .scene import Scene, load_scene, packaged_scene_path, parse_scene, serialize_scene
from .span import DeckSurface, ShellSpec, SpanSpec, bend_edges, deck_field, freeze_sections, loft_deck, structural_preform

__version__ = "0.1.0"
