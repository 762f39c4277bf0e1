"""Deterministic, label-addressed random streams."""

import hashlib

from .types import RngState


def split_rng(root: RngState, label: str) -> RngState:
    """Derive a child stream from ``root`` named by ``label``.

    The child keeps the root seed and gets a new Philox stream id hashed from
    the parent stream and the label, so results do not depend on the order in
    which components draw.
    """
    digest = hashlib.blake2b(
        f"{root.stream}:{label}".encode("utf-8"),
        digest_size=8
    ).digest()
    return RngState(seed=root.seed, stream=int.from_bytes(digest, byteorder="big"))


def spawn_seed(state: RngState) -> int:
    """Return a 31-bit integer seed for libraries that only accept ints."""
    return int(state.generator().integers(0, 2**31 - 1))


def root_state(seed: int) -> RngState:
    return RngState(seed=int(seed) % 2**64, stream=0)
