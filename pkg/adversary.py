import math

import numpy as np

from core import UtilityMatrix, make_rng, mean_confidence, sample_categorical, sample_sequence
from decision import best_response_policy, quantal_best_response
from metrics import tv_exact, tv_mc
from models import DeBruijnModel, PolyaUrnModel, UniformModel, windowed
from regret import external_regret

EXACT_TV_LIMIT = 20
IMPOSSIBILITY_FLOOR = 1 / 12


class ImpossibilityException(Exception):
    pass


def flip_adversary(policy, utility):
    # np.argmin keeps the first minimum: ties go to the lowest state index
    return int(np.argmin(policy @ utility.values))


class FlipAdversary:
    def __init__(self, utility):
        self.utility = utility

    def stream(self, rng):
        return self

    def next_state(self, policy):
        return flip_adversary(policy, self.utility)

    def __repr__(self):
        return "flip"


class ConstantAdversary:
    def __init__(self, state):
        self.state = int(state)

    def stream(self, rng):
        return self

    def next_state(self, policy):
        return self.state

    def __repr__(self):
        return f"const({self.state})"


class EnvironmentAdversary:
    """Draws states from a model and ignores the decision maker."""

    def __init__(self, model):
        self.model = model

    def stream(self, rng):
        return EnvironmentStream(self.model.stream(), rng)

    def __repr__(self):
        return f"env({self.model!r})"


class EnvironmentStream:
    def __init__(self, stream, rng):
        self.model_stream = stream
        self.rng = rng

    def next_state(self, policy):
        state = sample_categorical(self.rng, self.model_stream.predict())
        self.model_stream.observe(state)
        return state


class Interaction:
    def __init__(self, policies, states, regret, stream):
        self.policies = policies
        self.states = states
        self.regret = regret
        self.stream = stream
        self.switch_time = stream.switch_time


def run_interaction(model, adversary, utility, eta, length, seed, trial=0):
    """Plays QBR(model, eta) against the adversary for length rounds.

    eta = 0 plays the deterministic best response instead.
    """
    model.check_length(length)
    rng = make_rng(seed, trial)
    stream = model.stream()
    opponent = adversary.stream(rng)
    policies = np.empty((length, utility.num_actions))
    states = np.empty(length, dtype=np.int64)
    for t in range(length):
        belief = stream.predict()
        if eta == 0:
            policy = best_response_policy(utility, belief)
        else:
            policy = quantal_best_response(utility, belief, eta)
        state = opponent.next_state(policy)
        policies[t] = policy
        states[t] = state
        stream.observe(state)
    return Interaction(policies, states, external_regret(policies, states, utility), stream)


class ImpossibilityResult:
    def __init__(self, name, tv, regret, ci):
        self.name = name
        self.tv = tv
        self.regret = regret
        self.ci = ci

    @property
    def total(self):
        return self.tv.value + self.regret

    def __repr__(self):
        return f"ImpossibilityResult({self.name}, tv={self.tv.value:.4f}, regret={self.regret:.4f})"


def candidate_suite(order):
    return {
        "M0": DeBruijnModel(order),
        "M1": DeBruijnModel(order, flip=True),
        "windowed_polya": windowed(PolyaUrnModel(), order),
        "constant_half": UniformModel(),
    }


def impossibility_harness(candidate, order, length, trials, seed, name=None):
    """Distance of candidate from the de Bruijn model M0 and its regret on
    sequences of the complementary model M1.

    No candidate can make both small: their sum stays above 1/12.
    """
    if length != 2 * order:
        raise ImpossibilityException(f"horizon must be twice the context, got T={length} and L={order}")
    original = DeBruijnModel(order)
    complement = DeBruijnModel(order, flip=True)
    if length <= EXACT_TV_LIMIT:
        tv = tv_exact(original, candidate, length)
    else:
        tv = tv_mc(original, candidate, length, trials, seed)
    utility = UtilityMatrix.match(2)
    eta = 1.0 / math.sqrt(order)
    regrets = []
    for trial in range(trials):
        states = sample_sequence(complement, length, seed, key=(trial,))
        stream = candidate.stream()
        policies = []
        for state in states:
            policies.append(quantal_best_response(utility, stream.predict(), eta))
            stream.observe(state)
        regrets.append(external_regret(policies, states, utility))
    regret, ci = mean_confidence(regrets)
    return ImpossibilityResult(name or repr(candidate), tv, regret, ci)
