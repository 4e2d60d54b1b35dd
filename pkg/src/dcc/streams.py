"""Counter-based random streams.

Every simulation in the package draws from a generator derived from the
master seed plus a tuple of integer keys, so results do not depend on the
order in which work items are scheduled.
"""

import numpy as np

# first key component, one per consumer
WEIGHTS = 0
DRAW = 1
CALIBRATION_REP = 2
EXPERIMENT = 3
BASELINE = 4


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed derived from ``seed`` and ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
