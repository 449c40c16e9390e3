from __future__ import annotations

import math
import os
import random

from contextlib import contextmanager
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np


if TYPE_CHECKING:
    from collections.abc import Iterator
    from pathlib import Path

    from graphdyn.graphcore import GraphPoint
    from graphdyn.plmap import PLMarkovMap


@contextmanager
def as_cwd(path: Path) -> Iterator[Path]:
    old_cwd = os.getcwd()
    os.chdir(path)
    try:
        yield path
    finally:
        os.chdir(old_cwd)


def closure_transitive(m: PLMarkovMap) -> bool:
    """Brute-force transitive closure: strongly connected and not a cycle."""
    labels = m.interval_ids
    successors = {
        iid: {step.interval for step in m.interval_images[iid]} for iid in labels
    }
    for start in labels:
        seen: set[str] = set()
        frontier = set(successors[start])
        while frontier:
            seen |= frontier
            frontier = {v for u in frontier for v in successors[u]} - seen
        if seen != set(labels):
            return False
    return not all(len(targets) == 1 for targets in successors.values())


def eigen_entropy(m: PLMarkovMap) -> float:
    """Floating point ``log`` of the spectral radius."""
    radius = float(max(abs(np.linalg.eigvals(m.incidence_matrix().dense()))))
    return math.log(radius) if radius > 1 else 0.0


def random_points(m: PLMarkovMap, count: int, seed: int = 0) -> Iterator[GraphPoint]:
    rng = random.Random(seed)
    for _ in range(count):
        iid = rng.choice(m.interval_ids)
        interval = m.partition.intervals[iid]
        t = Fraction(rng.randint(1, 9999), 10000) * interval.length
        yield m.partition.at_local(iid, t)
