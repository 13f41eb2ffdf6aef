"""Trend datasets: two treatment groups, each a sequence of ordered sub-samples.

A dataset is read from long-format records (``group``, ``level``, ``value``),
one record per measurement. A level with no records is an empty sub-sample;
zeros are ordinary measurements.
"""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from os import PathLike
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from trendtest.errors import DatasetError, NoComparablePairsError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("group", "level", "value")

SubSample = tuple[float, ...]


class TrendDataset(BaseModel):
    """Two groups of K+1 ordered sub-samples, matched across groups by position."""

    model_config = ConfigDict(frozen=True)

    group_a: tuple[SubSample, ...] = Field(
        description="Sub-samples of the first group, lowest level first"
    )
    group_b: tuple[SubSample, ...] = Field(
        description="Sub-samples of the second group, lowest level first"
    )
    labels: tuple[str, str] = Field(default=("A", "B"), description="Group display names")
    level_labels: Optional[tuple[str, ...]] = Field(
        default=None, description="Level display names"
    )

    @model_validator(mode="after")
    def _check_shape(self) -> "TrendDataset":
        if len(self.group_a) != len(self.group_b):
            raise ValueError(
                f"mismatched level counts between groups: {len(self.group_a)} vs {len(self.group_b)}"
            )
        if len(self.group_a) < 2:
            raise ValueError("fewer than 2 levels")
        for sub in self.group_a + self.group_b:
            if not all(math.isfinite(v) for v in sub):
                raise ValueError("non-finite value")
        if self.level_labels is not None and len(self.level_labels) != len(self.group_a):
            raise ValueError("one label per level is required")
        return self

    @property
    def n_levels(self) -> int:
        return len(self.group_a)

    @property
    def k(self) -> int:
        """Number of adjacent level pairs."""
        return self.n_levels - 1

    @property
    def sizes_a(self) -> tuple[int, ...]:
        return tuple(len(sub) for sub in self.group_a)

    @property
    def sizes_b(self) -> tuple[int, ...]:
        return tuple(len(sub) for sub in self.group_b)

    def arrays(self, group: int) -> list[np.ndarray]:
        """Sub-samples of group 0 (a) or 1 (b) as float arrays."""
        subs = self.group_a if group == 0 else self.group_b
        return [np.asarray(sub, dtype=float) for sub in subs]

    @classmethod
    def from_groups(
        cls,
        group_a: Sequence[Sequence[float]],
        group_b: Sequence[Sequence[float]],
        labels: tuple[str, str] = ("A", "B"),
        level_labels: Optional[Sequence[str]] = None,
    ) -> "TrendDataset":
        """Build a dataset from in-memory sub-samples, raising DatasetError on bad shape."""
        if len(group_a) != len(group_b):
            raise DatasetError(
                f"mismatched level counts between groups: {len(group_a)} vs {len(group_b)}"
            )
        if len(group_a) < 2:
            raise DatasetError("fewer than 2 levels")
        subs_a = tuple(tuple(float(v) for v in sub) for sub in group_a)
        subs_b = tuple(tuple(float(v) for v in sub) for sub in group_b)
        if not all(math.isfinite(v) for sub in subs_a + subs_b for v in sub):
            raise DatasetError("non-finite value")
        return cls(
            group_a=subs_a,
            group_b=subs_b,
            labels=labels,
            level_labels=tuple(level_labels) if level_labels is not None else None,
        )


class PairSelection(BaseModel):
    """Adjacent level pairs (1-based) retained for analysis."""

    model_config = ConfigDict(frozen=True)

    included: tuple[int, ...] = Field(description="Pairs l with both groups nonempty at l and l+1")
    n_pairs: int = Field(description="K, the number of adjacent pairs in the dataset")
    one_sided: tuple[int, ...] = Field(
        default=(), description="Dropped pairs where only one group has an empty member"
    )

    @property
    def dropped(self) -> tuple[int, ...]:
        return tuple(l for l in range(1, self.n_pairs + 1) if l not in self.included)


RawRecords = Union[pd.DataFrame, Iterable[Mapping[str, Any]]]


def validate(raw: RawRecords, n_levels: Optional[int] = None) -> TrendDataset:
    """Turn ``group``/``level``/``value`` records into a TrendDataset.

    Levels run from 1 to the largest level seen (or ``n_levels`` when given,
    to declare trailing levels without records). Groups are ordered by first
    appearance.
    """
    frame = raw if isinstance(raw, pd.DataFrame) else pd.DataFrame(list(raw))
    for column in REQUIRED_COLUMNS:
        if column not in frame.columns:
            raise DatasetError(f"missing column '{column}'")
    if frame.empty:
        raise DatasetError("no records")

    if frame["group"].isna().any():
        raise DatasetError("missing group value")
    groups = frame["group"].astype(str)
    names = list(pd.unique(groups))
    if len(names) != 2:
        raise DatasetError(f"expected exactly two groups, found {len(names)}: {names}")

    levels = pd.to_numeric(frame["level"], errors="coerce")
    if levels.isna().any() or (levels % 1 != 0).any() or (levels < 1).any():
        raise DatasetError("levels must be integers >= 1")
    levels = levels.astype(int)

    values = pd.to_numeric(frame["value"], errors="coerce").astype(float)
    if not np.isfinite(values.to_numpy()).all():
        raise DatasetError("non-finite value")

    top = int(levels.max())
    if n_levels is not None:
        if n_levels < top:
            raise DatasetError(f"n_levels={n_levels} is below the largest level {top}")
        top = n_levels

    subs = []
    for name in names:
        in_group = groups == name
        subs.append([tuple(values[in_group & (levels == i)]) for i in range(1, top + 1)])

    dataset = TrendDataset.from_groups(
        subs[0], subs[1], labels=(names[0], names[1]), level_labels=[str(i) for i in range(1, top + 1)]
    )
    logger.info(
        "dataset %s/%s with %d levels, sizes %s and %s",
        names[0], names[1], dataset.n_levels, dataset.sizes_a, dataset.sizes_b,
    )
    return dataset


def read_csv(path: Union[str, PathLike], n_levels: Optional[int] = None) -> TrendDataset:
    """Read a UTF-8, comma-separated measurement file with a header row."""
    try:
        frame = pd.read_csv(path, dtype={"group": str}, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    return validate(frame, n_levels=n_levels)


def to_frame(dataset: TrendDataset) -> pd.DataFrame:
    """Serialize a dataset back to long-format records.

    Trailing levels without records leave no trace in the records; pass the
    dataset's ``n_levels`` to :func:`validate` to restore them.
    """
    rows = [
        {"group": label, "level": level, "value": value}
        for label, subs in zip(dataset.labels, (dataset.group_a, dataset.group_b))
        for level, sub in enumerate(subs, start=1)
        for value in sub
    ]
    return pd.DataFrame(rows, columns=list(REQUIRED_COLUMNS))


def select_pairs(dataset: TrendDataset) -> PairSelection:
    """Keep pair l iff both groups have nonempty sub-samples at l and l+1."""
    sizes_a, sizes_b = dataset.sizes_a, dataset.sizes_b
    included, one_sided = [], []
    for l in range(1, dataset.k + 1):
        has_a = sizes_a[l - 1] * sizes_a[l] > 0
        has_b = sizes_b[l - 1] * sizes_b[l] > 0
        if has_a and has_b:
            included.append(l)
        elif has_a != has_b:
            one_sided.append(l)
    if one_sided:
        logger.warning("pairs %s dropped although one group has data there", one_sided)
    if not included:
        raise NoComparablePairsError("no comparable pairs")
    return PairSelection(included=tuple(included), n_pairs=dataset.k, one_sided=tuple(one_sided))
