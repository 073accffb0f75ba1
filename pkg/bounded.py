import math
from collections import deque

import numpy as np

from adversary import run_interaction
from core import HorizonException, PredictionModel, mean_confidence
from decision import UnsupportedException, inverse_qbr_binary, quantal_best_response
from robustify import DEFAULT_ALPHA, RobustModel

FULL_CONTEXT = "full"
SUFFIX_ONLY = "suffix"
MODES = (FULL_CONTEXT, SUFFIX_ONLY)


class ContextModel(PredictionModel):
    def __init__(self, base, context):
        self.base = base
        self.context = tuple(context)
        self.num_states = base.num_states

    def predict(self, prefix):
        return self.base.predict(truncate(self.context + tuple(prefix), self.base.window))

    def stream(self):
        return ContextStream(self)


def truncate(states, width):
    if width == 0:
        return ()
    return tuple(states[-width:])


class ContextStream:
    switch_time = None

    def __init__(self, model):
        self.base = model.base
        self.recent = deque(truncate(model.context, self.base.window), maxlen=self.base.window)

    def predict(self):
        return self.base.predict(tuple(self.recent))

    def observe(self, state):
        self.recent.append(state)


class BoundedRobustModel(PredictionModel):
    """Turns a model with context L into one with context Lp and low regret.

    On prefixes of length at least Lp the prediction averages the quantal
    best responses of Lp - L restarted robustified copies, each started at
    a different offset inside the trailing window, and inverts the average.
    Shorter prefixes fall back to one robustified model over the whole prefix.
    """

    def __init__(self, base, utility, context, extended_context, horizon, alpha=DEFAULT_ALPHA, mode=FULL_CONTEXT):
        if utility.num_actions != 2 or utility.num_states != 2:
            raise UnsupportedException("bounded robustification needs two actions and two states")
        if base.window is None:
            raise UnsupportedException(f"{base!r} has no bounded context")
        if base.window > context:
            raise ValueError(f"base reads {base.window} states, more than the context {context}")
        if extended_context <= context:
            raise ValueError(f"extended context {extended_context} must exceed context {context}")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {', '.join(MODES)}, got {mode}")
        self.base = base
        self.utility = utility
        self.context = int(context)
        self.extended_context = int(extended_context)
        self.delta = self.extended_context - self.context
        self.window = self.extended_context
        self.horizon = horizon
        self.alpha = float(alpha)
        self.mode = mode
        self.eta = 1.0 / math.sqrt(self.delta)
        self.num_states = base.num_states
        self.fallback = RobustModel(base, utility, horizon, alpha)

    def copy(self, context):
        if self.mode == SUFFIX_ONLY:
            context = ()
        return RobustModel(
            ContextModel(self.base, context), self.utility, self.delta + 1, self.alpha, regret_horizon=self.delta
        )

    def copy_policies(self, prefix):
        window = tuple(prefix[-self.extended_context:])
        return [
            quantal_best_response(
                self.utility,
                self.copy(window[m - self.context:m]).predict(window[m:]),
                self.eta,
            )
            for m in range(self.context, self.extended_context)
        ]

    def combine(self, policies):
        return inverse_qbr_binary(self.utility, np.mean(policies, axis=0), self.eta)

    def predict(self, prefix):
        self.check_prefix(prefix)
        if len(prefix) < self.extended_context:
            return self.fallback.predict(prefix)
        return self.combine(self.copy_policies(prefix)).dist

    def stream(self):
        return BoundedStream(self)

    def __repr__(self):
        return (
            f"alg2({self.base!r},L={self.context},Lp={self.extended_context},"
            f"alpha={self.alpha:g},mode={self.mode})"
        )


class BoundedStream:
    def __init__(self, model):
        self.model = model
        self.fallback = model.fallback.stream()
        self.history = deque(maxlen=model.context)
        self.copies = deque()
        self.length = 0
        self.clamp_count = 0
        self.switch_time = None
        self.last = None

    def predict(self):
        if self.length < self.model.extended_context:
            return self.fallback.predict()
        policies = [
            quantal_best_response(self.model.utility, copy.predict(), self.model.eta)
            for _, copy in self.copies
        ]
        self.last = self.model.combine(policies)
        if self.last.clamped:
            self.clamp_count += 1
        return self.last.dist

    def observe(self, state):
        model = self.model
        if self.length < model.extended_context:
            self.fallback.observe(state)
            if self.fallback.switched and self.switch_time is None:
                self.switch_time = self.fallback.switch_time
        if self.length >= model.context:
            self.copies.append((self.length, model.copy(tuple(self.history)).stream()))
        for _, copy in self.copies:
            copy.observe(state)
            if copy.switched and self.switch_time is None:
                self.switch_time = self.length + 1
        self.history.append(state)
        self.length += 1
        while self.copies and self.copies[0][0] < self.length - model.delta:
            self.copies.popleft()


class RestartRegret:
    def __init__(self, regrets, clamp_count, switches):
        self.regrets = regrets
        self.mean, self.ci = mean_confidence(regrets)
        self.clamp_count = clamp_count
        self.switches = switches

    def __repr__(self):
        return f"RestartRegret(mean={self.mean:.6f}, ci={self.ci:.6f}, clamps={self.clamp_count})"


def restart_regret_eval(model, adversary, length, trials, seed):
    if length < model.extended_context:
        raise HorizonException(f"horizon {length} is shorter than the context {model.extended_context}")
    regrets = []
    clamp_count = 0
    switches = 0
    for trial in range(trials):
        interaction = run_interaction(model, adversary, model.utility, model.eta, length, seed, trial)
        regrets.append(interaction.regret)
        clamp_count += interaction.stream.clamp_count
        switches += interaction.switch_time is not None
    return RestartRegret(regrets, clamp_count, switches)


def bounded_regret_bound(length, delta, alpha=DEFAULT_ALPHA):
    return (1 + delta / length) * (
        (math.sqrt(2) + 1) / delta + math.sqrt((8 * math.log(length) + 8 * (alpha + 1) * math.log(delta)) / delta)
    )
