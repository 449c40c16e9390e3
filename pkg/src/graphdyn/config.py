from __future__ import annotations

import dataclasses

from dataclasses import dataclass
from fractions import Fraction
from typing import Any


@dataclass(frozen=True)
class Config:
    """Resource caps and numeric defaults shared by all operations."""

    tolerance: Fraction = Fraction(1, 10**9)
    depth_cap: int = 64
    closure_cap: int = 20000
    cycle_cap: int = 200000
    enumeration_cap: int = 200000
    chain_cap: int = 256
    samples: int = 1000
    row_sum_dim: int = 64
    # Seconds of wall time for the acceptance suite.
    acceptance_budget: float = 1800.0

    def with_overrides(self, **kwargs: Any) -> Config:
        unknown = set(kwargs) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise TypeError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **kwargs)


DEFAULT_CONFIG = Config()
