"""Two-sample k-coverage thresholds: simulation, limit laws, and vacancy analytics."""
from __future__ import annotations

__version__ = "0.1.0"

from .geometry import Ball, Disk, DomainPair, Polygon, Region, Square, Torus, region_from_dict, sigma
from .knn import build_index, count_in_ball, coverage_threshold, kth_nearest_distance
from .limits import CdfModel, Setting, centering, corrected_cdf, limit_cdf, median_shift, r_t, transform_statistic
from .sampler import ProcessPair, mix, sample_binomial, sample_poisson

__all__ = [
    "__version__",
    "Ball",
    "Disk",
    "DomainPair",
    "Polygon",
    "Region",
    "Square",
    "Torus",
    "region_from_dict",
    "sigma",
    "build_index",
    "count_in_ball",
    "coverage_threshold",
    "kth_nearest_distance",
    "CdfModel",
    "Setting",
    "centering",
    "corrected_cdf",
    "limit_cdf",
    "median_shift",
    "r_t",
    "transform_statistic",
    "ProcessPair",
    "mix",
    "sample_binomial",
    "sample_poisson",
]
