import math

import numpy as np

from core import make_rng, mean_confidence, sample_categorical, tv_between

EXACT_BUDGET = 2 ** 24
EXACT = "exact"
MONTE_CARLO = "monte-carlo"
NEXT_TOKEN = "next-token"


class BudgetException(Exception):
    pass


class ZeroLikelihoodException(Exception):
    pass


class TvEstimate:
    def __init__(self, value, half_width, method):
        self.value = float(value)
        self.half_width = float(half_width)
        self.method = method

    def __repr__(self):
        return f"TvEstimate({self.value:.6f} +- {self.half_width:.6f}, {self.method})"


def check_budget(num_states, length):
    if num_states ** length > EXACT_BUDGET:
        raise BudgetException(
            f"{num_states}^{length} sequences exceed the enumeration budget of {EXACT_BUDGET}"
        )


def tv_exact(first, second, length):
    """Total variation between two sequence distributions by prefix-tree traversal.

    A branch where one model has no mass contributes the other model's mass
    of the whole branch, so it is not expanded.
    """
    if first.num_states != second.num_states:
        raise ValueError("models disagree on the state alphabet")
    check_budget(first.num_states, length)
    first.check_length(length)
    second.check_length(length)
    states = range(first.num_states)

    def visit(prefix, p, q):
        if p == 0.0 or q == 0.0:
            return p + q
        if len(prefix) == length:
            return abs(p - q)
        p_next = first.predict(prefix)
        q_next = second.predict(prefix)
        return sum(visit(prefix + (state,), p * p_next[state], q * q_next[state]) for state in states)

    return TvEstimate(min(1.0, 0.5 * visit((), 1.0, 1.0)), 0.0, EXACT)


def tv_mc(first, second, length, samples, seed):
    terms = np.empty(samples)
    for i in range(samples):
        rng = make_rng(seed, i)
        first_stream = first.stream()
        second_stream = second.stream()
        log_ratio = 0.0
        for _ in range(length):
            p = first_stream.predict()
            q = second_stream.predict()
            state = sample_categorical(rng, p)
            if p[state] <= 0:
                raise ZeroLikelihoodException(f"sampled a state of zero probability under {first!r}")
            if q[state] <= 0:
                log_ratio = -math.inf
                break
            log_ratio += math.log(q[state]) - math.log(p[state])
            first_stream.observe(state)
            second_stream.observe(state)
        terms[i] = max(0.0, 1.0 - math.exp(log_ratio))
    value, half_width = mean_confidence(terms)
    return TvEstimate(value, half_width, MONTE_CARLO)


def tv_next_token(first, second, reference, length, samples, seed):
    values = np.empty(samples)
    for i in range(samples):
        rng = make_rng(seed, i)
        streams = (first.stream(), second.stream(), reference.stream())
        total = 0.0
        for _ in range(length):
            total += tv_between(streams[0].predict(), streams[1].predict())
            state = sample_categorical(rng, streams[2].predict())
            for stream in streams:
                stream.observe(state)
        values[i] = total / length
    value, half_width = mean_confidence(values)
    return TvEstimate(value, half_width, NEXT_TOKEN)
