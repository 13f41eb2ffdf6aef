"""Distribution of a single pair count O for sub-sample sizes n1 and n2.

Three sources are provided and meant to be compared against each other:

* :func:`exact_pmf` evaluates the largest-observation recurrence
  ``P[n1,n2](k) = n1/(n1+n2) P[n1-1,n2](k) + n2/(n1+n2) P[n1,n2-1](k-n1)``
  with binomial boundaries ``P[1,t] = P[t,1] = Binomial(t, p)``, exactly as
  stated, by bottom-up dynamic programming.
* :func:`permutation_pmf` enumerates every interleaving of the two samples.
* :func:`mc_count_pmf` samples normal sub-samples with a location shift.

The recurrence does not reproduce the interleaving distribution even at
p = 1/2 (P[2,2](0) is 1/8 against 1/6); it is kept as written so the gap can
be reported.
"""

import itertools
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from trendtest.errors import SizeCapError
from trendtest.streams import location_variates, substream
from trendtest.ustat import count_pairs

PERMUTATION_CAP = 14


class CountPmf(BaseModel):
    """Probability of O = k for k = 0..n1*n2."""

    model_config = ConfigDict(frozen=True)

    n1: int = Field(ge=1)
    n2: int = Field(ge=1)
    mass: tuple[float, ...]

    @model_validator(mode="after")
    def _check_support(self) -> "CountPmf":
        if len(self.mass) != self.n1 * self.n2 + 1:
            raise ValueError(f"mass needs {self.n1 * self.n2 + 1} entries, got {len(self.mass)}")
        if min(self.mass) < 0:
            raise ValueError("negative probability")
        return self

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.mass)), self.mass))


class ExactPmf(CountPmf):
    p: float = Field(ge=0, le=1)


class PermutationPmf(CountPmf):
    pass


class EmpiricalPmf(CountPmf):
    h: float
    n_sims: int
    seed: int


def exact_pmf(n1: int, n2: int, p: float) -> ExactPmf:
    if n1 < 1 or n2 < 1:
        raise ValueError(f"sizes must be positive, got {n1} and {n2}")
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    # table[a][b] holds P[a,b] over k = 0..a*b
    table: list[list[Optional[np.ndarray]]] = [[None] * (n2 + 1) for _ in range(n1 + 1)]
    for a in range(1, n1 + 1):
        for b in range(1, n2 + 1):
            if a == 1 or b == 1:
                t = max(a, b)
                table[a][b] = stats.binom.pmf(np.arange(t + 1), t, p)
                continue
            mass = np.zeros(a * b + 1)
            keep = table[a - 1][b]
            mass[: keep.size] += a / (a + b) * keep
            drop = table[a][b - 1]
            mass[a : a + drop.size] += b / (a + b) * drop
            table[a][b] = mass
    return ExactPmf(n1=n1, n2=n2, p=p, mass=tuple(float(m) for m in table[n1][n2]))


def permutation_pmf(n1: int, n2: int) -> PermutationPmf:
    """O under uniformly random interleavings, by full enumeration."""
    if n1 < 1 or n2 < 1:
        raise ValueError(f"sizes must be positive, got {n1} and {n2}")
    if n1 + n2 > PERMUTATION_CAP:
        raise SizeCapError(f"n1 + n2 = {n1 + n2} exceeds the enumeration cap {PERMUTATION_CAP}")
    counts = np.zeros(n1 * n2 + 1, dtype=np.int64)
    n = n1 + n2
    for positions in itertools.combinations(range(n), n1):
        # each first-sample element is below every second-sample element after it
        o = sum((n - 1 - pos) - (n1 - 1 - rank) for rank, pos in enumerate(positions))
        counts[o] += 1
    total = math.comb(n, n1)
    return PermutationPmf(n1=n1, n2=n2, mass=tuple(float(c) / total for c in counts))


def mc_count_pmf(n1: int, n2: int, h: float, n_sims: int, seed: int) -> EmpiricalPmf:
    """Empirical O with X ~ N(0, 1)^n1 and Y ~ N(h, 1)^n2."""
    if n_sims < 10_000:
        raise ValueError(f"n_sims must be at least 10000, got {n_sims}")
    if n1 < 1 or n2 < 1:
        raise ValueError(f"sizes must be positive, got {n1} and {n2}")
    rng = substream(seed)
    lower = location_variates(rng, n_sims * n1).reshape(n_sims, n1)
    upper = h + location_variates(rng, n_sims * n2).reshape(n_sims, n2)
    counts = np.bincount(count_pairs(lower, upper).astype(np.int64), minlength=n1 * n2 + 1)
    return EmpiricalPmf(
        n1=n1, n2=n2, h=h, n_sims=n_sims, seed=seed,
        mass=tuple(float(c) / n_sims for c in counts),
    )


def total_variation(a: CountPmf, b: CountPmf) -> float:
    if (a.n1, a.n2) != (b.n1, b.n2):
        raise ValueError("pmfs have different supports")
    return 0.5 * float(np.abs(np.subtract(a.mass, b.mass)).sum())
