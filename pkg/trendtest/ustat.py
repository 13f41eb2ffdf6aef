"""Mann-Whitney style counts between adjacent sub-samples.

The count for a pair of sub-samples (lower, upper) is the number of
cross pairs with the lower value strictly smaller. Exact ties, typically
two zeros from zero-inflated measurements, score according to a TiePolicy.
"""

from collections.abc import Sequence
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


class TiePolicy(BaseModel):
    """How an exactly tied cross pair scores."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["expected_half", "random_coin"] = Field(
        default="expected_half",
        description="expected_half scores 0.5; random_coin scores a fair Bernoulli draw",
    )
    applies_to: Literal["zero_zero_pairs", "all_exact_ties"] = Field(
        default="all_exact_ties",
        description="Which ties the policy covers; other ties score 0",
    )


DEFAULT_POLICY = TiePolicy()


class PairCount(BaseModel):
    """Count O for one adjacent pair and its number of cross pairs."""

    model_config = ConfigDict(frozen=True)

    o: float = Field(ge=0)
    total: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_range(self) -> "PairCount":
        if self.o > self.total:
            raise ValueError(f"count {self.o} exceeds total {self.total}")
        return self

    @computed_field
    @property
    def p_hat(self) -> float:
        return self.o / self.total


def count_pairs(
    lower: np.ndarray,
    upper: np.ndarray,
    policy: TiePolicy = DEFAULT_POLICY,
    rngs: Optional[Sequence[np.random.Generator]] = None,
) -> np.ndarray:
    """Counts for a batch of sub-sample pairs.

    ``lower`` is (B, n) and ``upper`` is (B, m); row b of each is one
    replicate. Under ``random_coin`` the coins of row b come from ``rngs[b]``.
    Returns a float array of B counts.
    """
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    if lower.shape[-1] == 0 or upper.shape[-1] == 0:
        raise ValueError("empty input sub-sample")

    lo = lower[:, :, None]
    up = upper[:, None, :]
    counts = (lo < up).sum(axis=(1, 2)).astype(float)

    tied = lo == up
    if policy.applies_to == "zero_zero_pairs":
        tied &= lo == 0
    n_ties = tied.sum(axis=(1, 2))

    if policy.mode == "expected_half":
        return counts + 0.5 * n_ties

    if n_ties.any() and rngs is None:
        raise ValueError("random_coin ties need a random stream")
    for b in np.flatnonzero(n_ties):
        counts[b] += rngs[b].integers(0, 2, size=int(n_ties[b])).sum()
    return counts


def pairwise_count(
    lower: Sequence[float],
    upper: Sequence[float],
    policy: TiePolicy = DEFAULT_POLICY,
    rng: Optional[np.random.Generator] = None,
) -> PairCount:
    """O for one pair of nonempty sub-samples."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size == 0 or upper.size == 0:
        raise ValueError("empty input sub-sample")
    o = count_pairs(lower[None, :], upper[None, :], policy, None if rng is None else [rng])[0]
    return PairCount(o=float(o), total=lower.size * upper.size)


def estimate_p(count: PairCount) -> float:
    return count.o / count.total


def naive_paired_estimate(lower: Sequence[float], upper: Sequence[float]) -> float:
    """Share of positions j with lower[j] < upper[j]; sizes must match."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.size != upper.size:
        raise ValueError(f"unequal sizes {lower.size} and {upper.size}")
    if lower.size == 0:
        raise ValueError("empty input sub-sample")
    return float(np.mean(lower < upper))
