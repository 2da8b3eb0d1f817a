"""Corner geometry of acoustic-elastic transmission eigenfunctions and scattering experiments."""

__version__ = "0.1.0"

from .geometry import CgoPair, Materials, SectorGeometry  # noqa: E402

__all__ = ["CgoPair", "Materials", "SectorGeometry", "__version__"]
