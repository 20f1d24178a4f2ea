import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Accept an int, ``SeedSequence``, ``Generator`` or any object with
    ``standard_normal``/``random`` methods (used for noise-free tests)."""
    if hasattr(seed, "standard_normal") and not isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.default_rng(seed)


def derive_seed(seed, *key: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for a tuple of task indices.

    ``derive_seed(derive_seed(s, k), j) == derive_seed(s, k, j)`` so streams
    can be derived hierarchically.
    """
    key = tuple(int(k) for k in key)
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def check_simplex(gamma, n: int | None = None, tol: float = 1e-10) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ValueError("weight vector must be a nonempty 1-d array")
    if n is not None and gamma.size != n:
        raise ValueError(f"weight vector has length {gamma.size}, expected {n}")
    if np.any(gamma < -tol) or abs(gamma.sum() - 1.0) > tol:
        raise ValueError(f"weights are not on the simplex (min={gamma.min()}, sum={gamma.sum()})")
    return gamma
