import math

import numpy as np

from core import PredictionModel, HorizonException
from decision import quantal_best_response
from models import PolyaStream, polya_from_counts
from regret import RegretLedger, external_regret, switch_threshold

DEFAULT_ALPHA = 1.0


class SwitchReport:
    def __init__(self, tau=None, gap=None):
        self.tau = tau
        self.gap = gap

    @property
    def switched(self):
        return self.tau is not None

    def __repr__(self):
        if self.tau is None:
            return "SwitchReport(no switch)"
        return f"SwitchReport(tau={self.tau}, gap={self.gap:.6f})"


class RobustModel(PredictionModel):
    """regret_horizon sets the temperature 1/sqrt(regret_horizon) and the T in
    the threshold; it defaults to horizon.
    """

    def __init__(self, base, utility, horizon, alpha=DEFAULT_ALPHA, regret_horizon=None):
        if horizon is None or horizon < 1:
            raise HorizonException(f"a robustified model needs a finite horizon, got {horizon}")
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if base.num_states != utility.num_states:
            raise ValueError(f"base has {base.num_states} states, utility expects {utility.num_states}")
        self.base = base
        self.utility = utility
        self.horizon = int(horizon)
        self.alpha = float(alpha)
        self.regret_horizon = int(regret_horizon or horizon)
        self.eta = 1.0 / math.sqrt(self.regret_horizon)
        self.num_states = base.num_states

    def threshold(self, rounds):
        return switch_threshold(self.regret_horizon, rounds, self.utility.num_actions, self.alpha)

    def stream(self):
        return RobustStream(self)

    def predict(self, prefix):
        self.check_prefix(prefix)
        stream = self.stream()
        for state in prefix:
            stream.observe(state)
        return stream.predict()

    def predict_from_scratch(self, prefix):
        self.check_prefix(prefix)
        prefix = tuple(prefix)
        model_trace = []
        hedge_trace = []
        counts = [0] * self.num_states
        for s in range(1, len(prefix) + 1):
            model_trace.append(quantal_best_response(self.utility, self.base.predict(prefix[:s - 1]), self.eta))
            hedge_trace.append(quantal_best_response(self.utility, polya_counts(counts), self.eta))
            counts[prefix[s - 1]] += 1
            model_regret = external_regret(model_trace, prefix[:s], self.utility)
            hedge_regret = external_regret(hedge_trace, prefix[:s], self.utility)
            if model_regret >= hedge_regret + self.threshold(s):
                return polya_counts(np.bincount(prefix, minlength=self.num_states))
        return self.base.predict(prefix)

    def __repr__(self):
        return f"robust({self.base!r},alpha={self.alpha:g})"


def polya_counts(counts):
    return polya_from_counts(np.asarray(counts, dtype=np.int64))


class RobustStream:
    def __init__(self, model):
        self.model = model
        self.base_stream = model.base.stream()
        self.polya_stream = PolyaStream(model.num_states)
        self.ledger = RegretLedger(model.utility, model.eta)
        self.pending = None
        self.switch_time = None
        self.gap = None

    @property
    def switched(self):
        return self.switch_time is not None

    def base_prediction(self):
        if self.pending is None:
            self.pending = self.base_stream.predict()
        return self.pending

    def predict(self):
        if self.switched:
            return self.polya_stream.predict()
        return self.base_prediction()

    def observe(self, state):
        self.polya_stream.observe(state)
        if self.switched:
            return
        policy = quantal_best_response(self.model.utility, self.base_prediction(), self.model.eta)
        self.ledger.update(policy, state)
        self.base_stream.observe(state)
        self.pending = None
        rounds = self.ledger.rounds
        if rounds > self.model.horizon - 1:
            return
        model_regret, hedge_regret = self.ledger.regrets()
        gap = model_regret - hedge_regret
        if gap >= self.model.threshold(rounds):
            self.switch_time = rounds
            self.gap = gap


def switch_time(model, states):
    model.check_length(len(states))
    stream = model.stream()
    for state in states:
        stream.observe(state)
        if stream.switched:
            break
    return SwitchReport(stream.switch_time, stream.gap)
