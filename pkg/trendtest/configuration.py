import os
from dataclasses import dataclass, fields
from typing import Any, Optional, Union, get_args, get_origin, get_type_hints

from langchain_core.runnables import RunnableConfig

ENV_PREFIX = "TRENDTEST_"


@dataclass(kw_only=True)
class Configuration:
    """The configurable fields for a trend test run."""
    alpha: float = 0.05
    n_boot: int = 1000
    seed: int = 0
    ties: str = "expected_half"
    tie_scope: str = "all_exact_ties"
    # bootstrap replicates evaluated by one graph task
    batch_size: int = 500
    # outer simulation replications evaluated by one graph task
    sim_batch_size: int = 10
    threads: Optional[int] = None

    @classmethod
    def from_runnable_config(
        cls, config: Optional[RunnableConfig] = None
    ) -> "Configuration":
        """Create a Configuration instance from a RunnableConfig."""
        configurable = (
            config["configurable"] if config and "configurable" in config else {}
        )
        values: dict[str, Any] = {
            f.name: os.environ.get(ENV_PREFIX + f.name.upper(), configurable.get(f.name))
            for f in fields(cls)
            if f.init
        }
        return cls(**{k: _coerce(cls, k, v) for k, v in values.items() if v not in (None, "")})

    def as_runnable_config(self) -> RunnableConfig:
        """The RunnableConfig that carries this configuration into a graph."""
        config: RunnableConfig = {
            "configurable": {
                "batch_size": self.batch_size,
                "sim_batch_size": self.sim_batch_size,
            }
        }
        if self.threads:
            config["max_concurrency"] = self.threads
        return config


def _coerce(cls: type, name: str, value: Any) -> Any:
    if not isinstance(value, str):
        return value
    hint = get_type_hints(cls)[name]
    if get_origin(hint) is Union:
        hint = next(arg for arg in get_args(hint) if arg is not type(None))
    return hint(value)
