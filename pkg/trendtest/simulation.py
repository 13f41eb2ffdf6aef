"""Power and type-I-error harnesses.

Outer replications generate a dataset per group from a location family with
known consecutive-level probabilities, run the bootstrap test on it and
record the decision. Like the test itself, the harness is a map-reduce
graph: ``plan`` fixes the shifts, ``replicate`` tasks cover index ranges of
outer replications, ``summarize`` reduces them in index order.
"""

import logging
import math
import operator
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Callable
from functools import lru_cache
from os import PathLike
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from langchain_core.runnables import RunnableConfig
from langgraph.graph import END, START, StateGraph
from langgraph.types import Send
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate, optimize, special, stats
from typing_extensions import TypedDict

from trendtest.configuration import Configuration
from trendtest.contingency import FrequencyTable
from trendtest.data_model import TrendDataset
from trendtest.resampling import (
    SQRT2,
    ShiftVector,
    TestResult,
    bootstrap_test,
    draw_group,
    normal_quantile,
    run_graph,
)
from trendtest.streams import Family, location_variates, substream
from trendtest.ustat import DEFAULT_POLICY, TiePolicy, count_pairs

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int, float], None]


class SimConfig(BaseModel):
    """Design of a simulation study."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1, description="Number of adjacent level pairs")
    sizes_x: tuple[int, ...] = Field(description="K+1 sub-sample sizes of group x")
    sizes_y: tuple[int, ...] = Field(description="K+1 sub-sample sizes of group y")
    true_p: tuple[float, ...] = Field(
        description="Ground-truth Pr(X_l < X_l+1) per pair; shared by both groups under H0"
    )
    true_p_y: Optional[tuple[float, ...]] = Field(
        default=None, description="Group y probabilities for power studies"
    )
    n_rep: int = Field(ge=1)
    n_boot: int = Field(ge=100, description="Inner bootstrap size; the test needs at least 100")
    alpha: float = Field(default=0.05, gt=0, le=1)
    seed: int = Field(default=0, ge=0)
    family: Family = "normal"
    ties: TiePolicy = DEFAULT_POLICY

    @model_validator(mode="after")
    def _check_design(self) -> "SimConfig":
        for name in ("sizes_x", "sizes_y"):
            sizes = getattr(self, name)
            if len(sizes) != self.k + 1:
                raise ValueError(f"{name} needs k+1={self.k + 1} entries, got {len(sizes)}")
            if min(sizes) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("true_p", "true_p_y"):
            probs = getattr(self, name)
            if probs is None:
                continue
            if len(probs) != self.k:
                raise ValueError(f"{name} needs k={self.k} entries, got {len(probs)}")
            if not all(0 < p < 1 for p in probs):
                raise ValueError(f"{name} must lie in (0, 1)")
        return self

    @classmethod
    def from_file(cls, path: Union[str, PathLike]) -> "SimConfig":
        """Load from a ``.toml`` or ``.json`` file."""
        path = Path(path)
        if path.suffix == ".toml":
            with path.open("rb") as fh:
                return cls.model_validate(tomllib.load(fh))
        return cls.model_validate_json(path.read_text(encoding="utf-8"))


class SimReport(BaseModel):
    """Empirical rejection rate of a simulation study."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["type1", "power"]
    err: float = Field(ge=0, le=1, description="Rejection rate: type-I error or power")
    n_rejections: int
    rep_pvalues: Optional[tuple[float, ...]] = None
    wall_time: float = Field(description="Seconds")
    config: SimConfig

    def summary(self) -> str:
        label = "type-I error" if self.kind == "type1" else "power"
        return (
            f"{label} {self.err:.4f} ({self.n_rejections}/{self.config.n_rep} rejected "
            f"at alpha={self.config.alpha}, n_boot={self.config.n_boot}, {self.config.family}) "
            f"in {self.wall_time:.1f}s"
        )


class EstimatorReport(BaseModel):
    """Monte Carlo behavior of the pair estimators at a known p."""

    model_config = ConfigDict(frozen=True)

    n1: int
    n2: int
    p: float
    n_reps: int
    u_mean: float
    u_variance: float
    claimed_variance: float = Field(description="p (1 - p) / (n1 n2)")
    naive_mean: Optional[float] = None
    naive_variance: Optional[float] = None


@lru_cache(maxsize=256)
def _logistic_shift(p: float) -> float:
    def excess(h: float) -> float:
        # Pr(L1 < h + L2) = E[F(h + L)] for independent standard logistics
        value, _ = integrate.quad(lambda x: stats.logistic.pdf(x) * special.expit(h + x), -np.inf, np.inf)
        return value - p

    return optimize.brentq(excess, -60.0, 60.0, xtol=1e-12)


def location_shift(p: float, family: Family = "normal") -> float:
    """Shift h with Pr(X < h + Y) = p for i.i.d. standard X, Y of ``family``."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if family == "normal":
        return SQRT2 * float(normal_quantile(p))
    return _logistic_shift(float(p))


def sim_shifts(true_p: tuple[float, ...], family: Family = "normal") -> ShiftVector:
    """h_1 = 0 and h_i = location_shift(p_(i-1)), as in the bootstrap sampler."""
    return ShiftVector(h=(0.0,) + tuple(location_shift(p, family) for p in true_p))


def generate_dataset(
    shift_x: ShiftVector,
    shift_y: ShiftVector,
    sizes_x: tuple[int, ...],
    sizes_y: tuple[int, ...],
    rng: np.random.Generator,
    family: Family = "normal",
) -> TrendDataset:
    return TrendDataset.from_groups(
        draw_group(rng, shift_x, sizes_x, family),
        draw_group(rng, shift_y, sizes_y, family),
    )


def run_fixed_table_test(
    table: FrequencyTable,
    n_boot: int,
    alpha: float,
    seed: int,
    policy: TiePolicy = DEFAULT_POLICY,
    *,
    configuration: Optional[Configuration] = None,
) -> TestResult:
    """Bootstrap test straight from a frequency table with known sub-sample sizes."""
    if not isinstance(table, FrequencyTable):
        raise TypeError(f"expected a FrequencyTable, got {type(table).__name__}")
    return run_graph(
        {
            "table": table,
            "alpha": alpha,
            "n_boot": n_boot,
            "seed": seed,
            "policy": policy,
            "stream_key": (),
        },
        configuration,
    )


# Graph state


class SimState(TypedDict, total=False):
    config: SimConfig
    kind: Literal["type1", "power"]
    shift_x: ShiftVector
    shift_y: ShiftVector
    batch_size: int
    outcomes: Annotated[list, operator.add]
    report: SimReport


class SimBatchState(TypedDict):
    config: SimConfig
    shift_x: ShiftVector
    shift_y: ShiftVector
    start: int
    stop: int


def plan(state: SimState, config: RunnableConfig):
    """ Shifts of both groups from the ground truth """
    sim = state["config"]
    shift_x = sim_shifts(sim.true_p, sim.family)
    truth_y = sim.true_p_y if state["kind"] == "power" else sim.true_p
    shift_y = sim_shifts(truth_y, sim.family)
    logger.debug("shifts x=%s y=%s", shift_x.h, shift_y.h)
    return {
        "shift_x": shift_x,
        "shift_y": shift_y,
        "batch_size": Configuration.from_runnable_config(config).sim_batch_size,
    }


def continue_to_replicates(state: SimState):
    size, n_rep = state["batch_size"], state["config"].n_rep
    return [
        Send(
            "replicate",
            {
                "config": state["config"],
                "shift_x": state["shift_x"],
                "shift_y": state["shift_y"],
                "start": start,
                "stop": min(start + size, n_rep),
            },
        )
        for start in range(0, n_rep, size)
    ]


def replicate(state: SimBatchState):
    """ Generate and test outer replications start..stop-1 """
    sim = state["config"]
    inner = Configuration(batch_size=sim.n_boot, threads=1)
    outcomes = []
    for i in range(state["start"], state["stop"]):
        rng = substream(sim.seed, i, 0)
        dataset = generate_dataset(
            state["shift_x"], state["shift_y"], sim.sizes_x, sim.sizes_y, rng, sim.family
        )
        result = bootstrap_test(
            dataset, sim.alpha, sim.n_boot, sim.seed, sim.ties,
            stream_key=(i, 1), configuration=inner,
        )
        outcomes.append((i, result.p_value, result.reject))
    return {"outcomes": outcomes}


def summarize(state: SimState):
    """ Rejection rate over all outer replications """
    outcomes = sorted(state["outcomes"], key=operator.itemgetter(0))
    rejections = sum(1 for _, _, reject in outcomes if reject)
    sim = state["config"]
    report = SimReport(
        kind=state["kind"],
        err=rejections / sim.n_rep,
        n_rejections=rejections,
        rep_pvalues=tuple(p for _, p, _ in outcomes),
        wall_time=0.0,
        config=sim,
    )
    return {"report": report}


builder = StateGraph(SimState)
builder.add_node("plan", plan)
builder.add_node("replicate", replicate)
builder.add_node("summarize", summarize)
builder.add_edge(START, "plan")
builder.add_conditional_edges("plan", continue_to_replicates, ["replicate"])
builder.add_edge("replicate", "summarize")
builder.add_edge("summarize", END)

graph = builder.compile()


def _run(
    sim: SimConfig,
    kind: Literal["type1", "power"],
    configuration: Optional[Configuration],
    progress: Optional[ProgressCallback],
) -> SimReport:
    configuration = configuration or Configuration.from_runnable_config()
    started = time.perf_counter()
    done, report = 0, None
    for update in graph.stream(
        {"config": sim, "kind": kind}, configuration.as_runnable_config(), stream_mode="updates"
    ):
        for node, values in update.items():
            if node == "replicate":
                done += len(values["outcomes"])
                if progress is not None:
                    progress(done, sim.n_rep, time.perf_counter() - started)
            elif node == "summarize":
                report = values["report"]
    report = report.model_copy(update={"wall_time": time.perf_counter() - started})
    logger.info(report.summary())
    return report


def type1_error_sim(
    sim: SimConfig,
    *,
    configuration: Optional[Configuration] = None,
    progress: Optional[ProgressCallback] = None,
) -> SimReport:
    """Rejection rate when both groups share the ground truth ``true_p``."""
    return _run(sim, "type1", configuration, progress)


def power_sim(
    sim: SimConfig,
    *,
    configuration: Optional[Configuration] = None,
    progress: Optional[ProgressCallback] = None,
) -> SimReport:
    """Rejection rate when group y follows ``true_p_y`` instead of ``true_p``."""
    if sim.true_p_y is None:
        raise ValueError("power_sim needs true_p_y")
    return _run(sim, "power", configuration, progress)


def estimator_diagnostics(
    n1: int, n2: int, p: float, n_reps: int, seed: int, family: Family = "normal"
) -> EstimatorReport:
    """Mean and variance of the U-statistic and paired estimators over ``n_reps`` draws."""
    if n1 < 1 or n2 < 1 or n_reps < 2:
        raise ValueError("need n1, n2 >= 1 and n_reps >= 2")
    rng = substream(seed)
    lower = location_variates(rng, n_reps * n1, family).reshape(n_reps, n1)
    upper = location_shift(p, family) + location_variates(rng, n_reps * n2, family).reshape(n_reps, n2)
    u_hat = count_pairs(lower, upper) / (n1 * n2)

    naive_mean = naive_variance = None
    if n1 == n2:
        naive = np.mean(lower < upper, axis=1)
        naive_mean, naive_variance = float(naive.mean()), float(naive.var(ddof=1))
    return EstimatorReport(
        n1=n1,
        n2=n2,
        p=p,
        n_reps=n_reps,
        u_mean=float(u_hat.mean()),
        u_variance=float(u_hat.var(ddof=1)),
        claimed_variance=p * (1 - p) / (n1 * n2),
        naive_mean=naive_mean,
        naive_variance=naive_variance,
    )


def mc_margin(p: float, n: int, sigmas: float = 3.0) -> float:
    """Half-width of a ``sigmas``-sigma band for a proportion p estimated from n trials."""
    return sigmas * math.sqrt(p * (1 - p) / n)
