from pathlib import Path

import pytest

from trendtest.contingency import FrequencyTable, read_table_csv
from trendtest.data_model import TrendDataset, read_csv

DATA_DIR = Path(__file__).resolve().parents[1] / "data"

SEED_WEIGHT_SIZES_A = (5, 5, 5, 3, 1, 0, 2, 0)
SEED_WEIGHT_SIZES_B = (3, 3, 4, 5, 1, 0, 1, 0)
SEED_WEIGHT_O_X = (12.5, 6.5, 13.0, 0.0)
SEED_WEIGHT_O_Y = (5.0, 9.0, 5.0, 2.0)


@pytest.fixture
def seed_weight() -> TrendDataset:
    return read_csv(DATA_DIR / "seed_weight.csv", n_levels=8)


@pytest.fixture
def seed_weight_table() -> FrequencyTable:
    return FrequencyTable.from_counts(
        SEED_WEIGHT_O_X, SEED_WEIGHT_O_Y, SEED_WEIGHT_SIZES_A, SEED_WEIGHT_SIZES_B, pairs=(1, 2, 3, 4)
    )


@pytest.fixture
def power_tables() -> dict[int, FrequencyTable]:
    return {row: read_table_csv(DATA_DIR / "power_study" / f"table{row}.csv") for row in range(1, 5)}


@pytest.fixture
def power_row1_dataset() -> TrendDataset:
    """Raw data whose counts are (20, 10, 20 | 15, 15, 20) with every size 5."""
    return TrendDataset.from_groups(
        [
            [1, 2, 3, 4, 5],
            [2.5, 3.5, 5.5, 6.5, 7.5],
            [1, 3, 4, 6, 7],
            [3.5, 5, 8, 8.5, 9],
        ],
        [
            [1, 2, 3, 4, 5],
            [1.5, 2.5, 3.5, 4.5, 5.5],
            [2, 3, 4, 5, 6],
            [2.5, 5.5, 7, 8, 9],
        ],
    )


@pytest.fixture
def identical_groups() -> TrendDataset:
    levels = [[0.3, 1.7, 2.2, 4.1], [1.1, 2.9, 3.3, 5.0], [0.2, 0.8, 6.4, 7.7]]
    return TrendDataset.from_groups(levels, levels)
