"""Monte Carlo localization on 2D occupancy grids with text-cue particle
injection, plus a deterministic synthetic-world benchmark harness."""

from ._kernels import backend_name
from .geometry import OdomDelta, Pose

__version__ = "0.1.0"

__all__ = ["Pose", "OdomDelta", "backend_name", "__version__"]
