"""
Robust HTE Toolkit

Heterogeneous treatment effect estimation for small, contaminated samples:
graph-attention confounder embeddings, conditional-VAE latent codes,
outlier-aware clustering and doubly robust clusterwise effects, plus the
simulation benchmark used to compare it against simple estimators.
"""

__version__ = "1.0.0"

from .core.config import Settings, settings
from .core.exceptions import HteError

__all__ = ["Settings", "settings", "HteError", "__version__"]
