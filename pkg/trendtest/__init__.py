"""Nonparametric two-sample test for equal sequential trends across ordered sub-samples."""

__version__ = "0.1.0"

from trendtest.configuration import Configuration
from trendtest.contingency import (
    ExpectedTable,
    FrequencyTable,
    build_frequency_table,
    expected_table,
    m_statistic,
)
from trendtest.data_model import PairSelection, TrendDataset, read_csv, select_pairs, validate
from trendtest.errors import DatasetError, NoComparablePairsError, TableError, TrendTestError
from trendtest.exactdist import ExactPmf, exact_pmf, mc_count_pmf, permutation_pmf
from trendtest.resampling import (
    PooledEstimates,
    ShiftVector,
    TestResult,
    bootstrap_test,
    generate_null_replicate,
    pool_estimates,
    shifts,
)
from trendtest.simulation import SimConfig, SimReport, power_sim, run_fixed_table_test, type1_error_sim
from trendtest.ustat import PairCount, TiePolicy, estimate_p, naive_paired_estimate, pairwise_count

__all__ = [
    "Configuration",
    "DatasetError",
    "ExactPmf",
    "ExpectedTable",
    "FrequencyTable",
    "NoComparablePairsError",
    "PairCount",
    "PairSelection",
    "PooledEstimates",
    "ShiftVector",
    "SimConfig",
    "SimReport",
    "TableError",
    "TestResult",
    "TiePolicy",
    "TrendDataset",
    "TrendTestError",
    "bootstrap_test",
    "build_frequency_table",
    "estimate_p",
    "exact_pmf",
    "expected_table",
    "generate_null_replicate",
    "m_statistic",
    "mc_count_pmf",
    "naive_paired_estimate",
    "pairwise_count",
    "permutation_pmf",
    "pool_estimates",
    "power_sim",
    "read_csv",
    "run_fixed_table_test",
    "select_pairs",
    "shifts",
    "type1_error_sim",
    "validate",
]
