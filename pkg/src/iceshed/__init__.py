"""Ice shedding prediction for rotating blades.

Tetrahedral ice meshes are cut by planes normal to the blade span; the
centrifugal force of the ice tipward of each cut is compared with the
cohesion across the cut plus the adhesion on the blade interface.
"""
from .clipping import CuttingPlane, PieceDecomposition, clip_tet, partition, signed_distance
from .forces import (ForceCurve, ForceSample, adhesion_force, centrifugal_force,
                     cohesion_force, force_profile, rpm_to_omega)
from .mesh_core import FaceLabel, IceMesh, load_mesh, total_mass, validate, write_mesh
from .quasi3d import (ExtrusionSpec, IceSection, extrude, interpolate_section,
                      resample_section)
from .shedding import (Criterion, SheddingConfig, SheddingResult, check_shedding,
                       find_shedding, force_fit, iterative_cut)
from .strength import CurveSpec, StrengthModel, adhesion_strength, cohesion_strength

__version__ = "0.1.0"
