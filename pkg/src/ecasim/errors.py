"""Error types shared across the simulator and the sweep harness."""


class ConfigError(Exception):
    """Rejected configuration input: unknown key, bad value, violated bound."""


class ConsistencyError(Exception):
    """Internal bookkeeping broke an invariant; the run must be aborted."""
