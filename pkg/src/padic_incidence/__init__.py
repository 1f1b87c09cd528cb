"""Discrete p-adic incidence geometry on (Z/p^nZ)^2."""
from .config import Configuration, from_families
from .exact import Exponent, PValue
from .geometry import (
    Ambient,
    Cube,
    CubeSet,
    GeometryError,
    Tube,
    TubeSet,
    count_common_tubes,
    cube_distance,
    dual_cube,
    duality,
    parent,
    parse_cube,
    parse_tube,
    tube_contains,
    tubes_through,
    vp,
)

__version__ = "0.1.0"

__all__ = [
    "Ambient",
    "Configuration",
    "Cube",
    "CubeSet",
    "Exponent",
    "GeometryError",
    "PValue",
    "Tube",
    "TubeSet",
    "count_common_tubes",
    "cube_distance",
    "dual_cube",
    "duality",
    "from_families",
    "parent",
    "parse_cube",
    "parse_tube",
    "tube_contains",
    "tubes_through",
    "vp",
]
