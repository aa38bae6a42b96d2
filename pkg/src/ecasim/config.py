"""Run configuration for a single simulation."""

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError
from .timing import TimingTable, DEFAULT_TIMING

SATURATED = math.inf


class Protocol(str, Enum):
    CSMA_CA = "csma-ca"
    CSMA_ECA = "csma-eca"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimConfig:
    """Everything a run depends on; two equal configs give identical runs."""

    protocol: Protocol = Protocol.CSMA_CA
    n_nodes: int = 2
    arrival_rate: float = 100.0     # packets/s per node; math.inf = saturated
    cw_min: int = 16
    max_stage: int = 5
    queue_capacity: int = 1000
    max_aggregation: int = 1        # packets drained per successful exchange
    hysteresis: bool = False        # csma-eca only: keep stage after success
    rejoin_inclusive: bool = False  # draw rejoin counter from [0, cw_min] instead
    sim_slots: int = 200_000
    warmup_slots: int = 20_000
    seed: int = 1
    timing: TimingTable = field(default_factory=lambda: DEFAULT_TIMING)

    @property
    def saturated(self) -> bool:
        return math.isinf(self.arrival_rate)

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ConfigError("n_nodes must be at least 1")
        if self.cw_min < 2 or self.cw_min & (self.cw_min - 1):
            raise ConfigError("cw_min must be a power of two, at least 2")
        if self.max_stage < 0:
            raise ConfigError("max_stage must be non-negative")
        if self.max_aggregation < 1:
            raise ConfigError("max_aggregation must be at least 1")
        if self.queue_capacity < self.max_aggregation:
            raise ConfigError("queue_capacity must be at least max_aggregation")
        if self.arrival_rate < 0 or math.isnan(self.arrival_rate):
            raise ConfigError("arrival_rate must be non-negative or inf")
        if self.warmup_slots < 0:
            raise ConfigError("warmup_slots must be non-negative")
        if self.sim_slots <= self.warmup_slots:
            raise ConfigError("sim_slots must exceed warmup_slots")
        if self.hysteresis and self.protocol is not Protocol.CSMA_ECA:
            raise ConfigError("hysteresis applies to csma-eca only")
        self.timing.validate()
