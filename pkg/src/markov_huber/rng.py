"""Deterministic random streams.

Every stochastic routine takes an integer seed and derives a Philox generator
keyed by (seed, component, replicate).  Distinct components never share a
stream, so e.g. redrawing errors cannot perturb the chain path.
"""

import hashlib

import numpy as np

_COMPONENT_IDS = {
    "chain": 1,
    "errors": 2,
    "design": 3,
    "directions": 4,
    "centers": 5,
    "bernstein": 6,
}

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1


def stream(seed: int, component: str, replicate: int = 0) -> np.random.Generator:
    """Return a Generator for one named component of a simulation."""
    if component not in _COMPONENT_IDS:
        raise KeyError(f"unknown stream component {component!r}")
    cid = _COMPONENT_IDS[component]
    key = np.array(
        [
            np.uint64(int(seed) & _MASK64),
            np.uint64(((cid << 32) | (int(replicate) & _MASK32)) & _MASK64),
        ],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(base_seed: int, *parts) -> int:
    """Hash a base seed and arbitrary labels down to a 64-bit child seed.

    Uses the decimal text of each part, so floats must be passed in a
    canonical form (repr) for reproducibility across runs.
    """
    text = "|".join(repr(p) if isinstance(p, float) else str(p) for p in (base_seed, *parts))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
