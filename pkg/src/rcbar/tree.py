"""Integer labelling of the complete binary tree.

Node 1 is the root, node ``n`` has children ``2n`` and ``2n + 1``.
Generation ``g`` holds labels ``2**g .. 2**(g+1) - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

# labels live in a signed 64-bit range so that they fit numpy int64 arrays
MAX_LABEL = 2**63 - 1
MAX_GENERATION = 40


class LabelOverflowError(OverflowError):
    pass


def _check_node(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError(f"node labels start at 1, got {n}")
    if n > MAX_LABEL:
        raise LabelOverflowError(f"label {n} exceeds {MAX_LABEL}")
    return n


def _check_generation(g: int) -> int:
    g = int(g)
    if g < 0:
        raise ValueError(f"generation must be non-negative, got {g}")
    if g > MAX_GENERATION:
        raise LabelOverflowError(
            f"generation {g} exceeds the cap of {MAX_GENERATION}")
    return g


def children(n: int) -> tuple[int, int]:
    n = _check_node(n)
    if 2 * n + 1 > MAX_LABEL:
        raise LabelOverflowError(f"children of {n} overflow the label space")
    return 2 * n, 2 * n + 1


def parent(n: int) -> int:
    n = _check_node(n)
    if n == 1:
        raise ValueError("the root has no parent")
    return n // 2


def generation_of(n: int) -> int:
    return _check_node(n).bit_length() - 1


def generation_range(g: int) -> tuple[int, int]:
    """First and last label of generation ``g``."""
    g = _check_generation(g)
    return 2**g, 2 ** (g + 1) - 1


def subtree_size(g: int) -> int:
    """Number of nodes in generations ``0..g``."""
    g = _check_generation(g)
    return 2 ** (g + 1) - 1


@dataclass(frozen=True)
class TreeShape:
    max_generation: int

    def __post_init__(self):
        _check_generation(self.max_generation)

    @property
    def size(self) -> int:
        return subtree_size(self.max_generation)

    def generation_size(self, g: int) -> int:
        return 2 ** _check_generation(g)

    def generation_slice(self, g: int) -> slice:
        """Offsets of generation ``g`` in a label-ordered flat array."""
        first, last = generation_range(g)
        return slice(first - 1, last)
