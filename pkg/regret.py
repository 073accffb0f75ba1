import math

import numpy as np

from decision import check_temperature, softmax
from models import polya_from_counts


class EmptySequenceException(Exception):
    pass


def external_regret(policies, states, utility):
    """max_a (1/t) sum_s [U(a, theta_s) - U(pi_s, theta_s)] over a length-t trace."""
    policies = np.asarray(policies, dtype=float)
    states = np.asarray(states, dtype=np.int64)
    if len(states) == 0:
        raise EmptySequenceException("regret of an empty sequence")
    if policies.shape != (len(states), utility.num_actions):
        raise EmptySequenceException(
            f"trace of shape {policies.shape} does not match {len(states)} states and {utility.num_actions} actions"
        )
    columns = utility.values[:, states]
    fixed = columns.sum(axis=1)
    played = float(np.einsum("ta,at->", policies, columns))
    return (float(fixed.max()) - played) / len(states)


class RegretLedger:
    """Running totals for the model policy and the Polya/Hedge policy.

    Both regrets are normalised by the number of rounds seen so far; with no
    rounds they are 0.
    """

    def __init__(self, utility, eta):
        self.utility = utility
        self.eta = check_temperature(eta)
        self.fixed_totals = np.zeros(utility.num_actions)
        self.model_total = 0.0
        self.hedge_total = 0.0
        self.counts = np.zeros(utility.num_states, dtype=np.int64)
        self.rounds = 0

    def hedge_policy(self):
        return softmax(self.utility.values @ polya_from_counts(self.counts), self.eta)

    def update(self, model_policy, state):
        column = self.utility.values[:, state]
        self.fixed_totals += column
        self.model_total += float(model_policy @ column)
        self.hedge_total += float(self.hedge_policy() @ column)
        self.counts[state] += 1
        self.rounds += 1
        return self

    def regrets(self):
        if self.rounds == 0:
            return 0.0, 0.0
        best = float(self.fixed_totals.max())
        return (best - self.model_total) / self.rounds, (best - self.hedge_total) / self.rounds

    def model_regret(self):
        return self.regrets()[0]


def switch_threshold(horizon, rounds, num_actions, alpha):
    if not 1 <= rounds <= horizon:
        raise ValueError(f"round {rounds} outside 1..{horizon}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return math.log(num_actions) / math.sqrt(horizon) + math.sqrt(8 * (1 + alpha) * math.log(horizon) / rounds)


def hedge_regret_bound(horizon, num_actions):
    return 3 * (math.log(horizon) + math.log(num_actions)) / math.sqrt(horizon)


def robust_regret_bound(horizon, num_actions):
    return 3 * (math.log(num_actions * horizon) + math.sqrt(2 * math.log(horizon))) / math.sqrt(horizon)
