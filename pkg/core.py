import math

import numpy as np

DISTRIBUTION_TOLERANCE = 1e-12
RENORMALIZE_TOLERANCE = 1e-9
MAX_SEED = 2 ** 64 - 1
CONFIDENCE_Z = 1.959963984540054


class DistributionException(Exception):
    pass


class HorizonException(Exception):
    pass


class DimensionException(Exception):
    pass


def check_alphabet(size, what="alphabet"):
    if int(size) != size or size < 2:
        raise DimensionException(f"{what} needs at least 2 elements, got {size}")
    return int(size)


def as_distribution(probs, size=None):
    # drift up to RENORMALIZE_TOLERANCE is renormalised, anything larger is an error
    probs = np.array(probs, dtype=float)
    if probs.ndim != 1:
        raise DistributionException(f"expected a vector, got shape {probs.shape}")
    if size is not None and len(probs) != size:
        raise DistributionException(f"expected {size} entries, got {len(probs)}")
    if __debug__:
        if not np.all(np.isfinite(probs)):
            raise DistributionException(f"non-finite probabilities {probs}")
        if np.any(probs < -DISTRIBUTION_TOLERANCE):
            raise DistributionException(f"negative probabilities {probs}")
        probs = np.maximum(probs, 0.0)
        drift = abs(probs.sum() - 1.0)
        if drift > RENORMALIZE_TOLERANCE:
            raise DistributionException(f"probabilities sum to {probs.sum()!r}")
        if drift > DISTRIBUTION_TOLERANCE:
            probs = probs / probs.sum()
    probs.flags.writeable = False
    return probs


def point_mass(index, size):
    probs = np.zeros(size)
    probs[index] = 1.0
    probs.flags.writeable = False
    return probs


def uniform(size):
    probs = np.full(size, 1.0 / size)
    probs.flags.writeable = False
    return probs


def tv_between(first, second):
    return 0.5 * float(np.abs(np.asarray(first) - np.asarray(second)).sum())


class UtilityMatrix:
    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DimensionException(f"utility table must be 2-dimensional, got shape {values.shape}")
        check_alphabet(values.shape[0], "action set")
        check_alphabet(values.shape[1], "state alphabet")
        if np.any(values < -1.0) or np.any(values > 1.0):
            raise DimensionException("utilities must lie in [-1, 1]")
        values.flags.writeable = False
        self.values = values
        self.num_actions, self.num_states = values.shape

    @staticmethod
    def match(size=2):
        return UtilityMatrix(np.eye(size))

    @staticmethod
    def random(rng, num_actions=2, num_states=2):
        return UtilityMatrix(rng.uniform(-1.0, 1.0, size=(num_actions, num_states)))

    def permute_actions(self, order):
        return UtilityMatrix(self.values[list(order)])

    def shifted(self, constant):
        return UtilityMatrix(self.values + constant)

    def __eq__(self, other):
        return isinstance(other, UtilityMatrix) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"UtilityMatrix({self.values.tolist()})"


def check_seed(seed):
    if int(seed) != seed or seed < 0 or seed > MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


def make_rng(seed, *key):
    # Philox-4x64 keyed by (seed, key...): every trial gets its own stream
    sequence = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def sample_categorical(rng, probs):
    cumulative = np.cumsum(probs)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    if index >= len(probs):
        index = int(np.flatnonzero(probs)[-1])
    return index


class PredictionModel:
    """predict(prefix) must be a pure function of the prefix tuple."""

    num_states = 2
    horizon = None
    window = None

    def predict(self, prefix):
        raise NotImplementedError

    def stream(self):
        return PrefixStream(self)

    def check_prefix(self, prefix):
        if self.horizon is not None and len(prefix) >= self.horizon:
            raise HorizonException(f"prefix of length {len(prefix)} is outside horizon {self.horizon}")

    def check_length(self, length):
        if self.horizon is not None and length > self.horizon:
            raise HorizonException(f"sequence length {length} exceeds horizon {self.horizon}")


class PrefixStream:
    switch_time = None

    def __init__(self, model):
        self.model = model
        self.prefix = []

    def predict(self):
        return self.model.predict(tuple(self.prefix))

    def observe(self, state):
        self.prefix.append(state)


def sample_sequence(model, length, seed, key=()):
    model.check_length(length)
    rng = make_rng(seed, *key)
    stream = model.stream()
    states = []
    for _ in range(length):
        state = sample_categorical(rng, stream.predict())
        stream.observe(state)
        states.append(state)
    return tuple(states)


def log_likelihood(model, states):
    model.check_length(len(states))
    stream = model.stream()
    total = 0.0
    for state in states:
        probability = stream.predict()[state]
        if probability <= 0:
            return -math.inf
        total += math.log(probability)
        stream.observe(state)
    return total


def mean_confidence(values):
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    if len(values) < 2:
        return mean, 0.0
    return mean, float(CONFIDENCE_Z * values.std(ddof=1) / math.sqrt(len(values)))
