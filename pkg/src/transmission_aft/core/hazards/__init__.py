from .families import (
    HazardFamily,
    RateShape,
    cumulative_hazard,
    hazard,
    sample_time,
    survival,
)

__all__ = [
    "HazardFamily",
    "RateShape",
    "hazard",
    "cumulative_hazard",
    "survival",
    "sample_time",
]
