"""
Core modules, organized by domain:
- hazards: Parametric contact-interval families
- data: Natural-history records, pair rows, design matrices and file formats
- likelihood: Pairwise log-likelihood and numeric derivatives
- estimation: Maximum likelihood fits, intervals, selection and SAR
- simulation: Household epidemic simulator
- config: Configuration management
- utils: Shared utilities
"""

from .utils import derive_seed, get_project_root

__all__ = ["derive_seed", "get_project_root"]
