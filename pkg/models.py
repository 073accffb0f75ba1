import math
from functools import lru_cache

import numpy as np

from core import PredictionModel, as_distribution, check_alphabet, make_rng, point_mass, uniform

MAX_DEBRUIJN_ORDER = 24
DEFAULT_LEAK = 0.0
LIKELIHOOD_LEAK = 1e-6
WINDOW_CACHE_SIZE = 1 << 16


class DeBruijnOrderException(Exception):
    pass


class ScheduleException(Exception):
    pass


def polya_from_counts(counts):
    return (1 + counts) / (len(counts) + int(counts.sum()))


class PolyaUrnModel(PredictionModel):
    def __init__(self, num_states=2, horizon=None):
        self.num_states = check_alphabet(num_states)
        self.horizon = horizon

    def predict(self, prefix):
        self.check_prefix(prefix)
        counts = np.bincount(np.asarray(prefix, dtype=np.int64), minlength=self.num_states)
        return as_distribution(polya_from_counts(counts), self.num_states)

    def stream(self):
        return PolyaStream(self.num_states)

    def __repr__(self):
        return "polya"


class PolyaStream:
    switch_time = None

    def __init__(self, num_states):
        self.num_states = num_states
        self.counts = np.zeros(num_states, dtype=np.int64)

    def predict(self):
        return as_distribution(polya_from_counts(self.counts), self.num_states)

    def observe(self, state):
        self.counts[state] += 1


class ConstantModel(PredictionModel):
    def __init__(self, probs, horizon=None):
        self.probs = as_distribution(probs)
        self.num_states = check_alphabet(len(self.probs))
        self.horizon = horizon
        self.window = 0

    def predict(self, prefix):
        self.check_prefix(prefix)
        return self.probs

    def __repr__(self):
        return f"constant({','.join(f'{p:.4f}' for p in self.probs)})"


class PointMassModel(ConstantModel):
    def __init__(self, state, num_states=2, horizon=None):
        super().__init__(point_mass(state, num_states), horizon)
        self.state = state

    def __repr__(self):
        return f"point({self.state})"


class UniformModel(ConstantModel):
    def __init__(self, num_states=2, horizon=None):
        super().__init__(uniform(num_states), horizon)

    def __repr__(self):
        return "uniform"


class BinaryEnvironment(PredictionModel):
    """Independent bits with a round-dependent probability of state 1.

    Rounds are 1-indexed: the prediction for prefix length t-1 uses prob_one(t).
    """

    num_states = 2

    def prob_one(self, t):
        raise NotImplementedError

    def probabilities(self, length):
        return np.array([self.prob_one(t) for t in range(1, length + 1)])

    def predict(self, prefix):
        self.check_prefix(prefix)
        p = self.prob_one(len(prefix) + 1)
        return as_distribution((1.0 - p, p), 2)


class PiecewiseBernoulliModel(BinaryEnvironment):
    def __init__(self, schedule, horizon=None):
        schedule = [(int(start), float(p)) for start, p in schedule]
        if not schedule or schedule[0][0] != 1:
            raise ScheduleException("schedule must start at round 1")
        for (start, _), (next_start, _) in zip(schedule, schedule[1:]):
            if next_start <= start:
                raise ScheduleException(f"schedule rounds must increase strictly, got {start} then {next_start}")
        for _, p in schedule:
            if not 0.0 < p < 1.0:
                raise ScheduleException(f"Bernoulli parameter {p} outside (0, 1)")
        self.schedule = schedule
        self.starts = [start for start, _ in schedule]
        self.horizon = horizon

    @staticmethod
    def halves(length, first=1 / 3, second=2 / 3, horizon=None):
        return PiecewiseBernoulliModel([(1, first), (length // 2 + 1, second)], horizon)

    def prob_one(self, t):
        index = int(np.searchsorted(self.starts, t, side="right")) - 1
        return self.schedule[index][1]

    def __repr__(self):
        return f"bernoulli({','.join(f'{p:.4f}@{start}' for start, p in self.schedule)})"


class PeriodicDriftEnv(BinaryEnvironment):
    def __init__(self, period, horizon=None):
        if period <= 0:
            raise ScheduleException(f"drift period must be positive, got {period}")
        self.period = float(period)
        self.horizon = horizon

    def prob_one(self, t):
        return min(1.0, abs(math.sin(math.pi / 6 + t * math.pi / self.period)))

    def __repr__(self):
        return f"drift(phi={self.period:g})"


def env_sample(env, length, seed, key=()):
    if length < 1:
        raise ValueError(f"length must be positive, got {length}")
    env.check_length(length)
    rng = make_rng(seed, *key)
    return tuple(int(bit) for bit in rng.random(length) < env.probabilities(length))


@lru_cache(maxsize=None)
def debruijn_sequence(order):
    """Cyclic binary de Bruijn string of the given order.

    Hierholzer's algorithm on the graph whose nodes are (order-1)-bit words and
    whose edges append one bit, always taking the 0-edge before the 1-edge, so
    the cycle is reproducible.
    """
    if int(order) != order or not 1 <= order <= MAX_DEBRUIJN_ORDER:
        raise DeBruijnOrderException(f"de Bruijn order must be in 1..{MAX_DEBRUIJN_ORDER}, got {order}")
    node_mask = (1 << (order - 1)) - 1
    next_bit = bytearray(1 << (order - 1))
    stack = [(0, -1)]
    labels = []
    while stack:
        node, _ = stack[-1]
        bit = next_bit[node]
        if bit < 2:
            next_bit[node] = bit + 1
            stack.append((((node << 1) | bit) & node_mask, bit))
        else:
            labels.append(stack.pop()[1])
    labels.pop()
    labels.reverse()
    return np.array(labels, dtype=np.uint8)


@lru_cache(maxsize=None)
def debruijn_build(order):
    """Successor map indexed by window value (oldest bit most significant)."""
    sequence = debruijn_sequence(order)
    size = len(sequence)
    extended = np.concatenate([sequence, sequence[:order]]).astype(np.int64)
    windows = np.zeros(size, dtype=np.int64)
    for offset in range(order):
        windows = (windows << 1) | extended[offset:offset + size]
    successors = np.zeros(size, dtype=np.uint8)
    successors[windows] = extended[order:order + size]
    successors.flags.writeable = False
    return successors


def window_value(states):
    value = 0
    for state in states:
        value = (value << 1) | state
    return value


class DeBruijnModel(PredictionModel):
    def __init__(self, order, flip=False, leak=DEFAULT_LEAK, horizon=None):
        if not 0.0 <= leak < 0.25:
            raise ValueError(f"leak must be in [0, 1/4), got {leak}")
        self.order = order
        self.flip = bool(flip)
        self.leak = float(leak)
        self.successors = debruijn_build(order)
        self.window = order
        self.horizon = horizon

    def next_state(self, prefix):
        return int(self.successors[window_value(prefix[-self.order:])]) ^ int(self.flip)

    def predict(self, prefix):
        self.check_prefix(prefix)
        if len(prefix) < self.order:
            return uniform(2)
        probs = np.full(2, self.leak)
        probs[self.next_state(prefix)] = 1.0 - self.leak
        return as_distribution(probs, 2)

    def __repr__(self):
        return f"debruijn(L={self.order},flip={str(self.flip).lower()},eps={self.leak:g})"


class WindowedModel(PredictionModel):
    def __init__(self, model, width):
        if width < 1:
            raise ValueError(f"window must be at least 1, got {width}")
        self.model = model
        self.window = int(width)
        self.num_states = model.num_states
        self.horizon = model.horizon
        self.cache = {}

    def predict_suffix(self, suffix):
        probs = self.cache.get(suffix)
        if probs is None:
            if len(self.cache) >= WINDOW_CACHE_SIZE:
                self.cache.clear()
            probs = self.cache[suffix] = self.model.predict(suffix)
        return probs

    def predict(self, prefix):
        self.check_prefix(prefix)
        return self.predict_suffix(tuple(prefix[-self.window:]))

    def __repr__(self):
        return f"windowed({self.model!r},w={self.window})"


def windowed(model, width):
    return WindowedModel(model, width)


def evaluation_suite(length):
    half = length // 2 + 1
    return {
        "ber_hi_lo": PiecewiseBernoulliModel([(1, 2 / 3), (half, 1 / 3)]),
        "ber_lo_hi": PiecewiseBernoulliModel([(1, 1 / 3), (half, 2 / 3)]),
        "ber_lo": PiecewiseBernoulliModel([(1, 1 / 3)]),
        "ber_hi": PiecewiseBernoulliModel([(1, 2 / 3)]),
        "drift_2": PeriodicDriftEnv(length / 2),
        "drift_5": PeriodicDriftEnv(length / 5),
        "drift_10": PeriodicDriftEnv(length / 10),
        "drift_20": PeriodicDriftEnv(length / 20),
    }
