"""The 2 x 2K frequency table, its expected table under H0, and the M statistic.

Row x holds, for every retained pair l, the count O_x,l and its complement
n_l n_l+1 - O_x,l; row y the same for the second group. Expected cells
follow from the row share R_x and the column sums of the observed table.
"""

import logging
from collections.abc import Sequence
from os import PathLike
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from trendtest.data_model import PairSelection, TrendDataset
from trendtest.errors import TableError
from trendtest.ustat import DEFAULT_POLICY, TiePolicy, pairwise_count

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("pair", "n_lower", "n_upper", "o_x", "m_lower", "m_upper", "o_y")


class FrequencyTable(BaseModel):
    """Observed counts per retained pair, with the sub-sample sizes behind them."""

    model_config = ConfigDict(frozen=True)

    pairs: tuple[int, ...] = Field(description="Retained pair indices l (1-based)")
    sizes_x: tuple[int, ...] = Field(description="Sub-sample sizes n_1..n_K+1 of group x")
    sizes_y: tuple[int, ...] = Field(description="Sub-sample sizes m_1..m_K+1 of group y")
    o_x: tuple[float, ...]
    o_y: tuple[float, ...]
    tot_x: tuple[int, ...]
    tot_y: tuple[int, ...]

    @model_validator(mode="after")
    def _check_consistency(self) -> "FrequencyTable":
        width = len(self.pairs)
        if width == 0:
            raise ValueError("table has no pairs")
        if not all(len(col) == width for col in (self.o_x, self.o_y, self.tot_x, self.tot_y)):
            raise ValueError("count and total columns differ in length")
        if len(self.sizes_x) != len(self.sizes_y):
            raise ValueError("groups have different numbers of levels")
        if list(self.pairs) != sorted(set(self.pairs)) or self.pairs[0] < 1 or self.pairs[-1] >= len(self.sizes_x):
            raise ValueError(f"pairs {self.pairs} are not increasing indices within the levels")
        for j, l in enumerate(self.pairs):
            if self.tot_x[j] != self.sizes_x[l - 1] * self.sizes_x[l]:
                raise ValueError(f"total of pair {l} in group x does not match its sizes")
            if self.tot_y[j] != self.sizes_y[l - 1] * self.sizes_y[l]:
                raise ValueError(f"total of pair {l} in group y does not match its sizes")
            if self.tot_x[j] <= 0 or self.tot_y[j] <= 0:
                raise ValueError(f"pair {l} has an empty sub-sample")
            if not (0 <= self.o_x[j] <= self.tot_x[j] and 0 <= self.o_y[j] <= self.tot_y[j]):
                raise ValueError(f"count of pair {l} outside [0, total]")
        return self

    @property
    def n_tot(self) -> int:
        return sum(self.tot_x) + sum(self.tot_y)

    @property
    def r_x(self) -> float:
        return sum(self.tot_x) / self.n_tot

    @property
    def p_hat_x(self) -> tuple[float, ...]:
        return tuple(o / t for o, t in zip(self.o_x, self.tot_x))

    @property
    def p_hat_y(self) -> tuple[float, ...]:
        return tuple(o / t for o, t in zip(self.o_y, self.tot_y))

    @classmethod
    def from_counts(
        cls,
        o_x: Sequence[float],
        o_y: Sequence[float],
        sizes_x: Sequence[int],
        sizes_y: Sequence[int],
        pairs: Optional[Sequence[int]] = None,
    ) -> "FrequencyTable":
        """Table from counts and sub-sample sizes; totals are derived."""
        pairs = tuple(pairs) if pairs is not None else tuple(range(1, len(sizes_x)))
        try:
            return cls(
                pairs=pairs,
                sizes_x=tuple(sizes_x),
                sizes_y=tuple(sizes_y),
                o_x=tuple(float(o) for o in o_x),
                o_y=tuple(float(o) for o in o_y),
                tot_x=tuple(sizes_x[l - 1] * sizes_x[l] for l in pairs),
                tot_y=tuple(sizes_y[l - 1] * sizes_y[l] for l in pairs),
            )
        except (ValidationError, IndexError) as exc:
            raise TableError(f"inconsistent table: {exc}") from exc

    def to_frame(self) -> pd.DataFrame:
        """Rows x and y with alternating O and total - O columns per pair."""
        columns: dict[str, list[float]] = {}
        for j, l in enumerate(self.pairs):
            columns[f"o_{l}"] = [self.o_x[j], self.o_y[j]]
            columns[f"rest_{l}"] = [self.tot_x[j] - self.o_x[j], self.tot_y[j] - self.o_y[j]]
        return pd.DataFrame(columns, index=pd.Index(["x", "y"], name="row"))


class ExpectedTable(BaseModel):
    """Expected cells under H0 for every retained pair."""

    model_config = ConfigDict(frozen=True)

    r_x: float
    e_x: tuple[float, ...]
    e_y: tuple[float, ...]
    rest_x: tuple[float, ...] = Field(description="R_x (n_l n_l+1 + m_l m_l+1) - e_x")
    rest_y: tuple[float, ...] = Field(description="(1 - R_x)(n_l n_l+1 + m_l m_l+1) - e_y")


def build_frequency_table(
    dataset: TrendDataset,
    selection: PairSelection,
    policy: TiePolicy = DEFAULT_POLICY,
    rng: Optional[np.random.Generator] = None,
) -> FrequencyTable:
    xs, ys = dataset.arrays(0), dataset.arrays(1)
    o_x, o_y = [], []
    for l in selection.included:
        o_x.append(pairwise_count(xs[l - 1], xs[l], policy, rng).o)
        o_y.append(pairwise_count(ys[l - 1], ys[l], policy, rng).o)
    table = FrequencyTable.from_counts(
        o_x, o_y, dataset.sizes_a, dataset.sizes_b, pairs=selection.included
    )
    logger.debug("frequency table o_x=%s o_y=%s", table.o_x, table.o_y)
    return table


def expected_table(table: FrequencyTable) -> ExpectedTable:
    r = table.r_x
    tot = np.add(table.tot_x, table.tot_y)
    column = np.add(table.o_x, table.o_y)
    e_x = column * r
    e_y = column * (1 - r)
    return ExpectedTable(
        r_x=r,
        e_x=tuple(e_x),
        e_y=tuple(e_y),
        rest_x=tuple(r * tot - e_x),
        rest_y=tuple((1 - r) * tot - e_y),
    )


def _cell_terms(observed: np.ndarray, expected: np.ndarray) -> np.ndarray:
    # 0/0 := 0: a zero expected cell contributes nothing
    expected = np.broadcast_to(expected, np.broadcast_shapes(observed.shape, expected.shape))
    return np.divide(
        (observed - expected) ** 2,
        expected,
        out=np.zeros(expected.shape),
        where=expected != 0,
    )


def m_statistic_arrays(
    o_x: np.ndarray, o_y: np.ndarray, tot_x: np.ndarray, tot_y: np.ndarray
) -> np.ndarray:
    """M for every row of (..., K) count arrays sharing the (K,) totals."""
    o_x = np.asarray(o_x, dtype=float)
    o_y = np.asarray(o_y, dtype=float)
    tot_x = np.asarray(tot_x, dtype=float)
    tot_y = np.asarray(tot_y, dtype=float)

    tot = tot_x + tot_y
    r = tot_x.sum() / tot.sum()
    column = o_x + o_y
    e_x = column * r
    e_y = column * (1 - r)

    terms = (
        _cell_terms(o_x, e_x)
        + _cell_terms(tot_x - o_x, r * tot - e_x)
        + _cell_terms(o_y, e_y)
        + _cell_terms(tot_y - o_y, (1 - r) * tot - e_y)
    )
    return terms.sum(axis=-1)


def m_statistic(table: FrequencyTable) -> float:
    return float(m_statistic_arrays(table.o_x, table.o_y, table.tot_x, table.tot_y))


def read_table_csv(path: Union[str, PathLike]) -> FrequencyTable:
    """Read a fixed table, one row per pair: ``pair,n_lower,n_upper,o_x,m_lower,m_upper,o_y``."""
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise TableError(f"cannot parse {path}: {exc}") from exc
    missing = [c for c in TABLE_COLUMNS if c not in frame.columns]
    if missing:
        raise TableError(f"missing columns {missing}")
    return table_from_frame(frame)


def table_from_frame(frame: pd.DataFrame) -> FrequencyTable:
    frame = frame.sort_values("pair")
    pairs = [int(p) for p in frame["pair"]]
    if len(set(pairs)) != len(pairs) or not pairs or pairs[0] < 1:
        raise TableError(f"pair indices must be distinct and >= 1, got {pairs}")

    sizes_x = [0] * (pairs[-1] + 1)
    sizes_y = [0] * (pairs[-1] + 1)
    for row in frame.itertuples(index=False):
        l = int(row.pair)
        for sizes, lower, upper in ((sizes_x, row.n_lower, row.n_upper), (sizes_y, row.m_lower, row.m_upper)):
            for level, size in ((l - 1, int(lower)), (l, int(upper))):
                if sizes[level] not in (0, size):
                    raise TableError(f"sizes do not chain at level {level + 1}")
                sizes[level] = size
    return FrequencyTable.from_counts(
        frame["o_x"].tolist(), frame["o_y"].tolist(), sizes_x, sizes_y, pairs=pairs
    )


def table_to_pair_frame(table: FrequencyTable) -> pd.DataFrame:
    """Inverse of :func:`table_from_frame`."""
    return pd.DataFrame(
        [
            (l, table.sizes_x[l - 1], table.sizes_x[l], table.o_x[j],
             table.sizes_y[l - 1], table.sizes_y[l], table.o_y[j])
            for j, l in enumerate(table.pairs)
        ],
        columns=list(TABLE_COLUMNS),
    )
