"""Evolution loops and fuzzy centers of charged particles in time-dependent
homogeneous magnetic fields."""
from magloop.profiles import (Biharmonic, Constant, Harmonic, PhysicalFieldSpec,
                              PiecewiseConstant, format_profile, parse_profile, rescale)

__version__ = "0.1.0"

__all__ = ["Biharmonic", "Constant", "Harmonic", "PhysicalFieldSpec", "PiecewiseConstant",
           "format_profile", "parse_profile", "rescale", "__version__"]
