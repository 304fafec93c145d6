"""
Utility functions for the transmission_aft package.
"""

from pathlib import Path

import numpy as np


def get_project_root() -> Path:
    """
    Find the project root by walking up the directory tree until config.toml is found.

    Returns:
        Path: Absolute path to the project root directory

    Raises:
        FileNotFoundError: If config.toml is not found in any parent directory

    Example:
        >>> root = get_project_root()
        >>> config_path = root / "config.toml"
    """
    current = Path(__file__).resolve()

    for parent in [current] + list(current.parents):
        if (parent / "config.toml").exists():
            return parent

    raise FileNotFoundError(
        "Could not find project root (config.toml not found). "
        f"Started search from: {Path(__file__)}"
    )


def derive_seed(masterSeed: int, *keys: int) -> int:
    """
    Derive an independent 64-bit seed from a master seed and integer keys.

    The same (masterSeed, keys) always gives the same seed, so replicate i
    gets identical random streams no matter which worker runs it.
    """
    sequence = np.random.SeedSequence([int(masterSeed), *[int(k) for k in keys]])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
