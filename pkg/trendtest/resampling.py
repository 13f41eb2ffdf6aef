"""Bootstrap null sampler and the trend test.

The null distribution of M is simulated from unit-variance normal sub-samples
whose level means are set from the pooled pair estimates. The test runs as a
map-reduce graph: the observed table and the null model are built once, the
replicates are fanned out in index ranges with ``Send``, and ``decide``
reduces them in index order.
"""

import logging
import math
import operator
from collections.abc import Sequence
from os import PathLike
from typing import Annotated, Literal, Optional, Union

import numpy as np
import pandas as pd
from langchain_core.runnables import RunnableConfig
from langgraph.graph import END, START, StateGraph
from langgraph.types import Send
from pydantic import BaseModel, ConfigDict, Field
from scipy import special
from typing_extensions import TypedDict

from trendtest.configuration import Configuration
from trendtest.contingency import FrequencyTable, build_frequency_table, m_statistic, m_statistic_arrays
from trendtest.data_model import TrendDataset, select_pairs
from trendtest.streams import Family, location_variates, substream
from trendtest.ustat import DEFAULT_POLICY, TiePolicy, count_pairs

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# stream_key suffixes: observed data, then replicate t
OBSERVED_STREAM = 0
REPLICATE_STREAM = 1


class PooledEstimates(BaseModel):
    """Pooled estimate per retained pair, clamped away from 0 and 1."""

    model_config = ConfigDict(frozen=True)

    pairs: tuple[int, ...]
    n_levels: int
    p_pooled: tuple[float, ...]
    clamped: tuple[bool, ...]


class ShiftVector(BaseModel):
    """Means of the K+1 null sub-sample distributions."""

    model_config = ConfigDict(frozen=True)

    h: tuple[float, ...] = Field(description="h_1 = 0; h_i = sqrt(2) * Phi^-1(p_(i-1))")


class TestResult(BaseModel):
    """Outcome of one bootstrap trend test."""

    __test__ = False  # not a pytest class

    model_config = ConfigDict(frozen=True)

    m_observed: float
    critical_value: float
    p_value: float = Field(ge=0, le=1)
    reject: bool
    n_boot: int
    alpha: float
    seed: int
    ties: TiePolicy
    pairs: tuple[int, ...]
    dropped_pairs: tuple[int, ...] = ()
    one_sided_pairs: tuple[int, ...] = ()
    p_hat_x: tuple[float, ...]
    p_hat_y: tuple[float, ...]
    table: FrequencyTable
    p_pooled: PooledEstimates
    bootstrap_sample: Optional[tuple[float, ...]] = Field(
        default=None, description="M* values in replicate order"
    )


def pool_estimates(table: FrequencyTable) -> PooledEstimates:
    """Weighted average of the two groups' estimates per pair.

    Clamped to [eps, 1 - eps] with eps = 1 / (2 (n_l n_l+1 + m_l m_l+1)) so the
    normal quantile stays finite.
    """
    pooled, clamped = [], []
    for o_x, o_y, t_x, t_y in zip(table.o_x, table.o_y, table.tot_x, table.tot_y):
        raw = (o_x + o_y) / (t_x + t_y)
        eps = 1.0 / (2 * (t_x + t_y))
        value = min(max(raw, eps), 1.0 - eps)
        pooled.append(value)
        clamped.append(value != raw)
    return PooledEstimates(
        pairs=table.pairs,
        n_levels=len(table.sizes_x),
        p_pooled=tuple(pooled),
        clamped=tuple(clamped),
    )


def normal_quantile(q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return special.ndtri(q)


def shifts(pooled: PooledEstimates) -> ShiftVector:
    """h_i from the estimate of pair i-1 alone; levels after a dropped pair get 0."""
    h = [0.0] * pooled.n_levels
    for l, p in zip(pooled.pairs, pooled.p_pooled):
        h[l] = SQRT2 * float(normal_quantile(p))
    return ShiftVector(h=tuple(h))


def draw_group(
    rng: np.random.Generator,
    shift: ShiftVector,
    sizes: Sequence[int],
    family: Family = "normal",
) -> list[np.ndarray]:
    """One group's sub-samples, sub-sample i from ``family`` located at h_i."""
    variates = location_variates(rng, int(sum(sizes)), family)
    bounds = np.cumsum(sizes)[:-1]
    return [h + part for h, part in zip(shift.h, np.split(variates, bounds))]


def generate_null_replicate(
    shift: ShiftVector,
    sizes_x: Sequence[int],
    sizes_y: Sequence[int],
    rng: np.random.Generator,
) -> TrendDataset:
    """Synthetic dataset under H0: both groups drawn from N(h_i, 1) at level i."""
    xs = draw_group(rng, shift, sizes_x)
    ys = draw_group(rng, shift, sizes_y)
    return TrendDataset.from_groups(xs, ys)


def null_statistics(
    table: FrequencyTable,
    shift: ShiftVector,
    policy: TiePolicy,
    seed: int,
    stream_key: tuple[int, ...],
    start: int,
    stop: int,
) -> np.ndarray:
    """M* for replicates ``start..stop-1``; replicate t draws from its own substream."""
    rngs = [substream(seed, *stream_key, REPLICATE_STREAM, t) for t in range(start, stop)]
    draws = [(draw_group(rng, shift, table.sizes_x), draw_group(rng, shift, table.sizes_y)) for rng in rngs]

    def level(group: int, i: int) -> np.ndarray:
        return np.stack([d[group][i] for d in draws])

    width = len(table.pairs)
    o_x = np.empty((len(rngs), width))
    o_y = np.empty((len(rngs), width))
    for j, l in enumerate(table.pairs):
        o_x[:, j] = count_pairs(level(0, l - 1), level(0, l), policy, rngs)
        o_y[:, j] = count_pairs(level(1, l - 1), level(1, l), policy, rngs)
    return m_statistic_arrays(o_x, o_y, table.tot_x, table.tot_y)


def critical_rank(alpha: float, n_boot: int) -> int:
    """1-based rank of the (1 - alpha) order statistic among n_boot values."""
    # the epsilon keeps 0.95 * 1000 at 950 despite binary rounding
    return math.ceil((1.0 - alpha) * n_boot - 1e-9)


# Graph state


class BootstrapState(TypedDict, total=False):
    dataset: Optional[TrendDataset]
    table: FrequencyTable
    alpha: float
    n_boot: int
    seed: int
    policy: TiePolicy
    stream_key: tuple[int, ...]
    dropped_pairs: tuple[int, ...]
    one_sided_pairs: tuple[int, ...]
    m_observed: float
    pooled: PooledEstimates
    shift: ShiftVector
    batch_size: int
    null_batches: Annotated[list, operator.add]
    result: TestResult


class ReplicateBatchState(TypedDict):
    table: FrequencyTable
    shift: ShiftVector
    policy: TiePolicy
    seed: int
    stream_key: tuple[int, ...]
    start: int
    stop: int


def frequency_table(state: BootstrapState):
    """ Steps 1 and 6 on the observed data: table and M """
    update: BootstrapState = {}
    table = state.get("table")
    if table is None:
        dataset = state["dataset"]
        selection = select_pairs(dataset)
        rng = substream(state["seed"], *state["stream_key"], OBSERVED_STREAM)
        table = build_frequency_table(dataset, selection, state["policy"], rng)
        update.update(
            table=table,
            dropped_pairs=selection.dropped,
            one_sided_pairs=selection.one_sided,
        )
    update["m_observed"] = m_statistic(table)
    logger.debug("observed M=%.6f over pairs %s", update["m_observed"], table.pairs)
    return update


def null_model(state: BootstrapState, config: RunnableConfig):
    """ Steps 2 and 3: pooled estimates and shifts """
    configuration = Configuration.from_runnable_config(config)
    pooled = pool_estimates(state["table"])
    if any(pooled.clamped):
        logger.info("pooled estimates clamped at pairs %s",
                    [l for l, c in zip(pooled.pairs, pooled.clamped) if c])
    return {
        "pooled": pooled,
        "shift": shifts(pooled),
        "batch_size": configuration.batch_size,
    }


def continue_to_replicates(state: BootstrapState):
    size = state["batch_size"]
    return [
        Send(
            "replicate_batch",
            {
                "table": state["table"],
                "shift": state["shift"],
                "policy": state["policy"],
                "seed": state["seed"],
                "stream_key": state["stream_key"],
                "start": start,
                "stop": min(start + size, state["n_boot"]),
            },
        )
        for start in range(0, state["n_boot"], size)
    ]


def replicate_batch(state: ReplicateBatchState):
    """ Steps 4 to 6 for a range of replicates """
    logger.debug("replicates %d..%d", state["start"], state["stop"] - 1)
    values = null_statistics(
        state["table"], state["shift"], state["policy"], state["seed"],
        state["stream_key"], state["start"], state["stop"],
    )
    return {"null_batches": [(state["start"], values)]}


def decide(state: BootstrapState):
    """ Steps 7 to 9: critical value, p-value, decision """
    batches = sorted(state["null_batches"], key=operator.itemgetter(0))
    sample = np.concatenate([values for _, values in batches])
    n_boot, alpha, m_obs = state["n_boot"], state["alpha"], state["m_observed"]

    rank = critical_rank(alpha, n_boot)
    critical = float(np.sort(sample)[min(max(rank, 1), n_boot) - 1])
    p_value = float(np.count_nonzero(sample >= m_obs)) / n_boot
    table = state["table"]
    result = TestResult(
        m_observed=m_obs,
        critical_value=critical,
        p_value=p_value,
        reject=rank < 1 or m_obs > critical,
        n_boot=n_boot,
        alpha=alpha,
        seed=state["seed"],
        ties=state["policy"],
        pairs=table.pairs,
        dropped_pairs=state.get("dropped_pairs", ()),
        one_sided_pairs=state.get("one_sided_pairs", ()),
        p_hat_x=table.p_hat_x,
        p_hat_y=table.p_hat_y,
        table=table,
        p_pooled=state["pooled"],
        bootstrap_sample=tuple(float(v) for v in sample),
    )
    logger.info("M=%.4f critical=%.4f p=%.4f", m_obs, critical, p_value)
    return {"result": result}


builder = StateGraph(BootstrapState)
builder.add_node("frequency_table", frequency_table)
builder.add_node("null_model", null_model)
builder.add_node("replicate_batch", replicate_batch)
builder.add_node("decide", decide)
builder.add_edge(START, "frequency_table")
builder.add_edge("frequency_table", "null_model")
builder.add_conditional_edges("null_model", continue_to_replicates, ["replicate_batch"])
builder.add_edge("replicate_batch", "decide")
builder.add_edge("decide", END)

graph = builder.compile()


def _check_run(alpha: float, n_boot: int, seed: int) -> None:
    if n_boot < 100:
        raise ValueError(f"n_boot must be at least 100, got {n_boot}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")


def run_graph(state: BootstrapState, configuration: Optional[Configuration] = None) -> TestResult:
    configuration = configuration or Configuration.from_runnable_config()
    _check_run(state["alpha"], state["n_boot"], state["seed"])
    final = graph.invoke(state, configuration.as_runnable_config())
    return final["result"]


def bootstrap_test(
    dataset: TrendDataset,
    alpha: float,
    n_boot: int,
    seed: int,
    policy: TiePolicy = DEFAULT_POLICY,
    *,
    stream_key: tuple[int, ...] = (),
    configuration: Optional[Configuration] = None,
) -> TestResult:
    """Test H0 (equal trends) on raw data with ``n_boot`` normal-shift replicates."""
    return run_graph(
        {
            "dataset": dataset,
            "alpha": alpha,
            "n_boot": n_boot,
            "seed": seed,
            "policy": policy,
            "stream_key": stream_key,
        },
        configuration,
    )


def dump_bootstrap_sample(
    result: TestResult,
    path: Union[str, PathLike],
    fmt: Literal["csv", "gnuplot"] = "csv",
) -> None:
    """Write the M* sample: CSV in replicate order, or sorted ``m_star ecdf`` columns."""
    if result.bootstrap_sample is None:
        raise ValueError("result carries no bootstrap sample")
    sample = np.asarray(result.bootstrap_sample)
    if fmt == "csv":
        pd.DataFrame({"replicate": np.arange(sample.size), "m_star": sample}).to_csv(path, index=False)
        return
    ordered = np.sort(sample)
    ecdf = np.arange(1, ordered.size + 1) / ordered.size
    np.savetxt(path, np.column_stack([ordered, ecdf]), header="m_star ecdf", fmt="%.10g")
