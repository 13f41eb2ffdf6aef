import pandas as pd
import pytest
from pydantic import ValidationError

from trendtest.data_model import TrendDataset, read_csv, select_pairs, to_frame, validate
from trendtest.errors import DatasetError, NoComparablePairsError


def records(sizes_a, sizes_b, names=("ctrl", "trt")):
    rows = []
    for name, sizes in zip(names, (sizes_a, sizes_b)):
        for level, size in enumerate(sizes, start=1):
            rows.extend({"group": name, "level": level, "value": float(level + j)} for j in range(size))
    return rows


def test_validate_uniform_design():
    dataset = validate(records((5, 5, 5, 5), (5, 5, 5, 5)))
    assert dataset.k == 3
    assert dataset.sizes_a == (5, 5, 5, 5)
    assert dataset.sizes_b == (5, 5, 5, 5)
    assert dataset.labels == ("ctrl", "trt")


def test_seed_weight_file(seed_weight):
    assert seed_weight.labels == ("PAC", "PACGA")
    assert seed_weight.k == 7
    assert seed_weight.sizes_a == (5, 5, 5, 3, 1, 0, 2, 0)
    assert seed_weight.sizes_b == (3, 3, 4, 5, 1, 0, 1, 0)


def test_zero_is_a_measurement():
    rows = records((2, 2), (2, 2)) + [{"group": "ctrl", "level": 1, "value": 0.0}]
    dataset = validate(rows)
    assert dataset.sizes_a == (3, 2)
    assert 0.0 in dataset.group_a[0]


def test_single_level_rejected():
    with pytest.raises(DatasetError, match="fewer than 2 levels"):
        validate(records((3,), (3,)))


def test_missing_column():
    frame = pd.DataFrame({"group": ["a", "b"], "value": [1.0, 2.0]})
    with pytest.raises(DatasetError, match="missing column 'level'"):
        validate(frame)


@pytest.mark.parametrize("bad", ["inf", "nan", "heavy"])
def test_non_finite_value(bad):
    rows = records((2, 2), (2, 2))
    rows[0]["value"] = bad
    with pytest.raises(DatasetError, match="non-finite"):
        validate(rows)


def test_three_groups_rejected():
    rows = records((2, 2), (2, 2)) + [{"group": "other", "level": 1, "value": 1.0}]
    with pytest.raises(DatasetError, match="exactly two groups"):
        validate(rows)


def test_fractional_level_rejected():
    rows = records((2, 2), (2, 2))
    rows[0]["level"] = 1.5
    with pytest.raises(DatasetError, match="integers"):
        validate(rows)


def test_n_levels_below_largest_level():
    with pytest.raises(DatasetError, match="below the largest level"):
        validate(records((2, 2, 2), (2, 2, 2)), n_levels=2)


def test_trailing_empty_levels_from_n_levels():
    dataset = validate(records((2, 2), (2, 2)), n_levels=4)
    assert dataset.sizes_a == (2, 2, 0, 0)


def test_from_groups_mismatched_levels():
    with pytest.raises(DatasetError, match="mismatched level counts"):
        TrendDataset.from_groups([[1], [2], [3]], [[1], [2]])


def test_dataset_is_frozen(seed_weight):
    with pytest.raises(ValidationError):
        seed_weight.labels = ("x", "y")


def test_read_csv_unparseable(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("group,level,value\na,1,2\nb,1,2,3,4\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_csv(path)


def test_frame_roundtrip(seed_weight):
    again = validate(to_frame(seed_weight), n_levels=seed_weight.n_levels)
    assert again == seed_weight


def test_frame_roundtrip_without_level_count(seed_weight):
    again = validate(to_frame(seed_weight))
    assert again.n_levels == 7
    assert again.sizes_a == seed_weight.sizes_a[:7]
    assert validate(to_frame(again)) == again


def test_missing_group_value():
    rows = records((2, 2), (2, 2))
    rows[0]["group"] = None
    with pytest.raises(DatasetError, match="missing group"):
        validate(rows)


def test_blank_group_cell_in_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("group,level,value\na,1,1\n,1,2\nb,1,3\na,2,4\nb,2,5\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="missing group"):
        read_csv(path)


def test_select_pairs_seed_weight(seed_weight):
    selection = select_pairs(seed_weight)
    assert selection.included == (1, 2, 3, 4)
    assert selection.dropped == (5, 6, 7)
    assert selection.one_sided == ()


def test_select_pairs_all_nonempty():
    dataset = TrendDataset.from_groups([[1], [2], [3], [4]], [[1], [2], [3], [4]])
    assert select_pairs(dataset).included == (1, 2, 3)


def test_one_sided_pair_flagged():
    dataset = TrendDataset.from_groups([[1, 2], [3, 4], []], [[1, 2], [3, 4], [5, 6]])
    selection = select_pairs(dataset)
    assert selection.included == (1,)
    assert selection.one_sided == (2,)


def test_no_comparable_pairs():
    dataset = TrendDataset.from_groups([[1, 2], [], [3, 4]], [[1, 2], [3, 4], [5, 6]])
    with pytest.raises(NoComparablePairsError, match="no comparable pairs"):
        select_pairs(dataset)


def test_trailing_empty_levels_do_not_change_selection():
    base = TrendDataset.from_groups([[1], [2], [], [4]], [[1], [2], [3], [4]])
    padded = TrendDataset.from_groups([[1], [2], [], [4], [], []], [[1], [2], [3], [4], [], []])
    assert select_pairs(base).included == select_pairs(padded).included == (1,)
