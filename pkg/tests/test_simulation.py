import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from trendtest.configuration import Configuration
from trendtest.simulation import (
    SimConfig,
    estimator_diagnostics,
    generate_dataset,
    location_shift,
    mc_margin,
    power_sim,
    run_fixed_table_test,
    sim_shifts,
    type1_error_sim,
)
from trendtest.streams import location_variates, substream

DATA_DIR = Path(__file__).resolve().parents[1] / "data"

# p-values of the four fixed power-study tables
POWER_STUDY_P_VALUES = {1: 0.764, 2: 0.449, 3: 0.921, 4: 0.747}


def small_design(**overrides):
    design = dict(
        k=3, sizes_x=(5, 5, 5, 5), sizes_y=(5, 5, 5, 5), true_p=(0.4, 0.2, 0.3),
        n_rep=6, n_boot=100, seed=11,
    )
    design.update(overrides)
    return SimConfig(**design)


def without_timing(report):
    return report.model_dump(exclude={"wall_time"})


def test_config_lengths_checked():
    with pytest.raises(ValidationError, match="k\\+1"):
        small_design(sizes_x=(5, 5, 5))
    with pytest.raises(ValidationError, match="true_p needs"):
        small_design(true_p=(0.4, 0.2))


def test_config_needs_usable_bootstrap_size():
    with pytest.raises(ValidationError, match="n_boot"):
        small_design(n_boot=10)


def test_config_probabilities_open_interval():
    with pytest.raises(ValidationError):
        small_design(true_p=(0.4, 1.0, 0.3))


def test_config_from_toml():
    sim = SimConfig.from_file(DATA_DIR / "type1_row1.toml")
    assert sim.k == 3
    assert sim.true_p == (0.4, 0.2, 0.3)
    assert sim.n_rep == sim.n_boot == 1000


def test_config_from_json(tmp_path):
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(small_design().model_dump()), encoding="utf-8")
    assert SimConfig.from_file(path) == small_design()


def test_normal_shift():
    assert location_shift(0.7) == pytest.approx(0.741614, abs=1e-6)
    assert location_shift(0.5) == pytest.approx(0.0, abs=1e-12)


def test_logistic_shift_matches_probability():
    h = location_shift(0.7, "logistic")
    rng = substream(3)
    lower = location_variates(rng, 100_000, "logistic")
    upper = h + location_variates(rng, 100_000, "logistic")
    assert np.mean(lower < upper) == pytest.approx(0.7, abs=0.005)
    assert location_shift(0.5, "logistic") == pytest.approx(0.0, abs=1e-8)


def test_shift_outside_unit_interval():
    with pytest.raises(ValueError):
        location_shift(1.0)


def test_sim_shifts_start_at_zero():
    assert sim_shifts((0.5, 0.7)).h == pytest.approx((0.0, 0.0, 0.741614), abs=1e-6)


def test_generated_dataset_sizes():
    shift = sim_shifts((0.4, 0.2, 0.3))
    dataset = generate_dataset(shift, shift, (2, 3, 4, 5), (5, 4, 3, 2), substream(0))
    assert dataset.sizes_a == (2, 3, 4, 5)
    assert dataset.sizes_b == (5, 4, 3, 2)


def test_type1_small_run():
    report = type1_error_sim(small_design())
    assert report.kind == "type1"
    assert len(report.rep_pvalues) == 6
    assert report.err == report.n_rejections / 6
    assert report.wall_time > 0


def test_type1_deterministic():
    first = type1_error_sim(small_design())
    again = type1_error_sim(small_design())
    assert without_timing(first) == without_timing(again)


@pytest.mark.parametrize("threads,batch", [(4, 1), (8, 2)])
def test_type1_independent_of_parallelism(threads, batch):
    serial = type1_error_sim(small_design(), configuration=Configuration(threads=1, sim_batch_size=6))
    parallel = type1_error_sim(
        small_design(), configuration=Configuration(threads=threads, sim_batch_size=batch)
    )
    assert without_timing(parallel) == without_timing(serial)


def test_single_replication():
    assert type1_error_sim(small_design(n_rep=1)).err in (0.0, 1.0)


def test_alpha_one_rejects_everything():
    assert type1_error_sim(small_design(n_rep=3, alpha=1.0)).err == 1.0


def test_progress_reaches_total():
    calls = []
    type1_error_sim(
        small_design(),
        configuration=Configuration(sim_batch_size=2),
        progress=lambda done, total, elapsed: calls.append((done, total)),
    )
    assert calls[-1] == (6, 6)
    assert [done for done, _ in calls] == sorted(done for done, _ in calls)


def test_power_needs_second_truth():
    with pytest.raises(ValueError, match="true_p_y"):
        power_sim(small_design())


def test_power_under_strong_alternative():
    sim = small_design(
        k=1, sizes_x=(10, 10), sizes_y=(10, 10), true_p=(0.9,), true_p_y=(0.1,), n_rep=20, n_boot=200
    )
    report = power_sim(sim)
    assert report.kind == "power"
    assert report.err > 0.9


def test_estimator_diagnostics():
    report = estimator_diagnostics(5, 5, 0.7, n_reps=20_000, seed=1)
    assert report.u_mean == pytest.approx(0.7, abs=mc_margin(0.7, 5 * report.n_reps))
    assert report.claimed_variance == pytest.approx(0.7 * 0.3 / 25)
    assert report.naive_mean == pytest.approx(0.7, abs=mc_margin(0.7, report.n_reps))
    assert report.u_variance < report.naive_variance


def test_estimator_diagnostics_unequal_sizes():
    report = estimator_diagnostics(3, 4, 0.6, n_reps=1000, seed=1)
    assert report.naive_mean is None


@pytest.mark.slow
def test_power_study_tables(power_tables):
    results = {
        row: run_fixed_table_test(table, n_boot=10_000, alpha=0.05, seed=100)
        for row, table in power_tables.items()
    }
    for row, expected in POWER_STUDY_P_VALUES.items():
        assert results[row].p_value == pytest.approx(expected, abs=0.05)
    p = {row: result.p_value for row, result in results.items()}
    assert p[3] > p[1]
    assert p[4] > p[2]
    assert p[1] > p[2]
    assert p[3] > p[4]


@pytest.mark.slow
@pytest.mark.parametrize("size", [5, 10, 20])
def test_type1_error_calibrated(size):
    sim = SimConfig.from_file(DATA_DIR / "type1_row1.toml").model_copy(
        update={"sizes_x": (size,) * 4, "sizes_y": (size,) * 4}
    )
    report = type1_error_sim(sim, configuration=Configuration(threads=8))
    assert 0.03 <= report.err <= 0.07


@pytest.mark.slow
def test_type1_error_insensitive_to_family():
    sim = SimConfig.from_file(DATA_DIR / "type1_row1.toml")
    normal = type1_error_sim(sim, configuration=Configuration(threads=8))
    logistic = type1_error_sim(sim.model_copy(update={"family": "logistic"}), configuration=Configuration(threads=8))
    assert logistic.err == pytest.approx(normal.err, abs=0.02)


@pytest.mark.slow
def test_power_matches_type1_when_truths_agree():
    sim = SimConfig.from_file(DATA_DIR / "type1_row1.toml").model_copy(update={"true_p_y": (0.4, 0.2, 0.3)})
    report = power_sim(sim, configuration=Configuration(threads=8))
    assert report.err == pytest.approx(0.05, abs=0.02)


@pytest.mark.slow
def test_power_grows_with_size():
    powers = []
    for size in (5, 10, 20):
        sim = small_design(
            sizes_x=(size,) * 4, sizes_y=(size,) * 4,
            true_p=(0.6, 0.4, 0.5), true_p_y=(0.4, 0.4, 0.5), n_rep=200, n_boot=500,
        )
        powers.append(power_sim(sim, configuration=Configuration(threads=8)).err)
    assert powers == sorted(powers)
