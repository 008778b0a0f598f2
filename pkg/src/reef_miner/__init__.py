"""Quadrat image analysis toolkit.

Detection-prompted segmentation pipeline over pluggable backends, exact
run-length mask algebra, ecological cover and diversity metrics, detection
and classification evaluation, and dataset statistics.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    BoundingBox,
    Detection,
    GenusCover,
    GenusLabel,
    ImageRef,
    InstanceMask,
    QuadratReport,
    QuadratScene,
    RleMask,
    read_scene,
    scene_from_dict,
    scene_to_dict,
    tight_bbox,
    validate_scene,
    write_scene,
)
from .taxonomy import canonical_taxonomy, is_known_genus  # noqa: F401
