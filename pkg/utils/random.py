import numpy as np

# Bump when the draw order of any generator user changes
GENERATOR_NAME = "numpy-PCG64"
GENERATOR_VERSION = 1


def generator_tag() -> str:
    """Name and version recorded with every generated dataset."""
    return f"{GENERATOR_NAME}-v{GENERATOR_VERSION}"


def make_generator(seed: int) -> np.random.Generator:
    """
    Build the reproducible generator used for datasets and splits.

    PCG64 is integer based and numpy converts its output to floats the same
    way on every platform, so equal seeds give bit-identical draws.

    Args:
      seed: Non-negative integer seed.

    Returns:
      A numpy Generator backed by PCG64.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(seed))
