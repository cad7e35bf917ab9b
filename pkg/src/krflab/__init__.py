"""Circle-invariant Kahler-Ricci flow with singular data on the projective line."""

from .geometry import (SGrid, RadialProfile, BackgroundGeometry, ClassPath, d2,
                       make_fubini_study, ricci_potential, compute_tmax,
                       softplus_profile)

__version__ = "0.1.0"

__all__ = ["SGrid", "RadialProfile", "BackgroundGeometry", "ClassPath", "d2",
           "make_fubini_study", "ricci_potential", "compute_tmax",
           "softplus_profile", "__version__"]
