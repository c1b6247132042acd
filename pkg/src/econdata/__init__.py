"""Change-point segmentation of returns, market-state similarity from activity
densities, impact ratios and great-circle pricing over CSV inputs."""

from .errors import EconDataError
from .geodesy import GeoPoint, great_circle
from .impact import impact_ratio, impact_ratio_from_counts, relative_frequency
from .market_state import activity_density, jsd, occurrence_rates, shannon_entropy, similarity_matrix, xlogx
from .segmentation import delta_profile, quintile_labels, regime_counts, segment_recursive

__version__ = "0.1.0"

__all__ = [
    "EconDataError", "GeoPoint", "great_circle", "impact_ratio", "impact_ratio_from_counts",
    "relative_frequency", "activity_density", "jsd", "occurrence_rates", "shannon_entropy",
    "similarity_matrix", "xlogx", "delta_profile", "quintile_labels", "regime_counts",
    "segment_recursive",
]
