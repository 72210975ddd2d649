"""Namespaced seed derivation.

Every random stream in a run is derived from one root seed plus a path of
names, so adding a component never perturbs the streams of the others.
"""
import hashlib

import numpy as np


def derive_seed(root: int, *names) -> int:
    key = "/".join([str(int(root))] + [str(n) for n in names])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def rng_for(root: int, *names) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *names))
