from __future__ import annotations

import logging

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.rationals import LogValue
from graphdyn.rationals import width_at_most


if TYPE_CHECKING:
    import numpy.typing as npt

    from graphdyn.config import Config
    from graphdyn.plmap import IncidenceMatrix
    from graphdyn.plmap import PLMarkovMap


logger = logging.getLogger(__name__)

# Row sums of A^(2^d) are only inspected while they stay this small.
ROW_SUM_BITS = 4096
# Iterations of the power method are capped at this many in total.
POWER_ITERATION_CAP = 1 << 12
# Depth from which a tolerance stop is accepted; A^2 is always inspected.
EXACT_CHECK_DEPTH = 1


@dataclass(frozen=True)
class EntropyEnclosure:
    """
    ``lower <= log(rho) <= upper`` for the incidence matrix of a map.

    ``depth`` is the exponent ``d`` of the last power ``A^(2^d)`` inspected.
    """

    lower: LogValue
    upper: LogValue
    depth: int
    converged: bool = True
    method: str = "row-sum"

    def __post_init__(self) -> None:
        if self.upper < self.lower:
            raise ValueError("Enclosure bounds are reversed")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def contains(self, value: float) -> bool:
        lower, upper = self.lower.interval(), self.upper.interval()
        return bool(lower.a <= value) and bool(value <= upper.b)

    def scaled(self, factor: int) -> EntropyEnclosure:
        return EntropyEnclosure(
            self.lower.scaled(factor),
            self.upper.scaled(factor),
            self.depth,
            self.converged,
            self.method,
        )


def _is_permutation_block(block: IncidenceMatrix) -> bool:
    return all(len(row) == 1 for row in block.rows)


def _row_sum_bounds(
    power: npt.NDArray[np.object_], depth: int
) -> tuple[LogValue, LogValue]:
    sums = [int(s) for s in power.sum(axis=1)]
    root = 1 << depth
    return LogValue(Fraction(min(sums)), root), LogValue(Fraction(max(sums)), root)


def _perron_guess(dense: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
    values, vectors = np.linalg.eig(dense.astype(np.float64))
    leading = int(np.argmax(values.real))
    vector = np.abs(vectors[:, leading].real)
    return _normalize(vector)


def _normalize(vector: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    vector = vector / vector.max()
    return np.maximum(vector, np.finfo(np.float64).tiny)


def _collatz_wielandt(
    block: IncidenceMatrix, vector: npt.NDArray[np.float64]
) -> tuple[LogValue, LogValue]:
    """
    ``min (Av)_i / v_i <= rho <= max (Av)_i / v_i`` for any positive ``v``.

    The floating vector is read back exactly, so the bounds are rigorous
    whatever its quality.
    """
    exact = [Fraction(float(x)) for x in vector]
    ratios = [
        sum((exact[j] for j in row), Fraction(0)) / exact[i]
        for i, row in enumerate(block.rows)
    ]
    return LogValue(min(ratios)), LogValue(max(ratios))


def _block_enclosure(
    block: IncidenceMatrix, tolerance: Fraction, config: Config
) -> EntropyEnclosure:
    dense = block.dense()
    shifted = dense + np.eye(block.dimension, dtype=np.int64)
    use_rows = block.dimension <= config.row_sum_dim
    power = dense.astype(object)
    vector = _perron_guess(dense)
    iterations = 0

    lower = upper = LogValue.zero()
    method = "row-sum"
    depth = 0
    for depth in range(config.depth_cap + 1):
        candidates: list[tuple[LogValue, LogValue, str]] = []
        if use_rows:
            if depth > 0:
                power = power.dot(power)
            low, high = _row_sum_bounds(power, depth)
            candidates.append((low, high, "row-sum"))
            if max(int(s) for s in power.sum(axis=1)).bit_length() > ROW_SUM_BITS:
                use_rows = False

        target = min(1 << depth, POWER_ITERATION_CAP)
        while iterations < target:
            vector = _normalize(shifted @ vector)
            iterations += 1
        low, high = _collatz_wielandt(block, vector)
        candidates.append((low, high, "collatz-wielandt"))

        lower = max(c[0] for c in candidates)
        upper, _, method = min(((c[1], i, c[2]) for i, c in enumerate(candidates)))
        logger.debug("Depth %d: [%s, %s] by %s", depth, lower, upper, method)

        if lower == upper:
            return EntropyEnclosure(lower, upper, depth, True, method)
        if depth >= EXACT_CHECK_DEPTH and width_at_most(lower, upper, tolerance):
            return EntropyEnclosure(lower, upper, depth, True, method)
        if not use_rows and iterations >= POWER_ITERATION_CAP:
            break

    return EntropyEnclosure(lower, upper, depth, False, method)


def entropy(
    m: PLMarkovMap,
    tolerance: Fraction | None = None,
    config: Config = DEFAULT_CONFIG,
) -> EntropyEnclosure:
    """
    Certified enclosure of the topological entropy ``log(rho(A))``.

    Reducible matrices are split into strongly connected blocks; cycles
    and trivial blocks contribute exactly zero and the largest block
    bounds win.
    """
    m.ensure_valid()
    tolerance = config.tolerance if tolerance is None else tolerance
    return matrix_entropy(m.incidence_matrix(), tolerance, config)


def matrix_entropy(
    matrix: IncidenceMatrix, tolerance: Fraction, config: Config = DEFAULT_CONFIG
) -> EntropyEnclosure:
    graph = matrix.digraph()
    enclosures = []
    for component in nx.strongly_connected_components(graph):
        labels = [label for label in matrix.labels if label in component]
        block = matrix.restricted(labels)
        if len(labels) == 1 and not block.rows[0]:
            continue
        if _is_permutation_block(block):
            continue
        enclosures.append(_block_enclosure(block, tolerance, config))

    if not enclosures:
        zero = LogValue.zero()
        return EntropyEnclosure(zero, zero, 0, True, "trivial")

    lower = max(e.lower for e in enclosures)
    top = max(enclosures, key=lambda e: e.upper)
    depth = max(e.depth for e in enclosures)
    relevant = [e for e in enclosures if not e.upper < lower]
    converged = lower == top.upper or (
        all(e.converged for e in relevant)
        and width_at_most(lower, top.upper, tolerance)
    )
    return EntropyEnclosure(lower, top.upper, depth, converged, top.method)
