import math

import numpy as np

from core import PredictionModel
from models import PolyaStream

GRID_SLACK = 1e-9
LOSS_BOUND = 1.0


class EmptyForecastException(Exception):
    pass


def v_score(v, p, y):
    """Threshold-at-v proper loss: sign(v - p) * (y - v)."""
    return float(np.sign(v - p) * (y - v))


def v_scores(grid, p, y):
    return np.sign(grid - p) * (y - grid)


def check_forecasts(forecasts, outcomes):
    forecasts = np.asarray(forecasts, dtype=float)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if len(forecasts) == 0:
        raise EmptyForecastException("no forecasts to score")
    if len(forecasts) != len(outcomes):
        raise EmptyForecastException(f"{len(forecasts)} forecasts for {len(outcomes)} outcomes")
    return forecasts, outcomes


def v_regret(v, forecasts, outcomes):
    forecasts, outcomes = check_forecasts(forecasts, outcomes)
    mean_loss = float(np.mean(np.sign(v - forecasts) * (outcomes - v)))
    return mean_loss + abs(float(outcomes.mean()) - v)


def v_grid(eps):
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"grid step must be in (0, 1], got {eps}")
    steps = math.ceil(1.0 / eps - GRID_SLACK)
    return np.arange(steps + 1) / steps


def v_gap_brute(forecasts, outcomes, eps):
    forecasts, outcomes = check_forecasts(forecasts, outcomes)
    return max(v_regret(v, forecasts, outcomes) for v in v_grid(eps))


def v_gap(forecasts, outcomes, eps):
    """Largest regret over the threshold grid from sorted forecast counts.

    For each outcome class y the total loss at v is
    (#forecasts below v - #forecasts above v) * (y - v).
    """
    forecasts, outcomes = check_forecasts(forecasts, outcomes)
    grid = v_grid(eps)
    total = np.zeros(len(grid))
    for y in (0, 1):
        ordered = np.sort(forecasts[outcomes == y])
        below = np.searchsorted(ordered, grid, side="left")
        above = len(ordered) - np.searchsorted(ordered, grid, side="right")
        total += (below - above) * (y - grid)
    t = len(outcomes)
    return float(np.max(total / t + np.abs(outcomes.mean() - grid)))


class VScoreParams:
    def __init__(self, eps, delta, c=1.0, bound=LOSS_BOUND):
        if not 0.0 < eps <= 1.0:
            raise ValueError(f"grid step must be in (0, 1], got {eps}")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {delta}")
        if c <= 0:
            raise ValueError(f"threshold constant must be positive, got {c}")
        self.eps = float(eps)
        self.delta = float(delta)
        self.c = float(c)
        self.bound = float(bound)
        self.grid = v_grid(self.eps)

    @staticmethod
    def for_horizon(horizon, alpha=1.0, c=1.0):
        return VScoreParams(1.0 / horizon, horizon ** -(1.0 + alpha), c)

    @property
    def grid_size(self):
        return len(self.grid)

    def __repr__(self):
        return f"VScoreParams(eps={self.eps:g}, delta={self.delta:g}, c={self.c:g})"


def v_threshold(t, params):
    if t < 1:
        raise ValueError(f"threshold needs at least one round, got {t}")
    return params.c * params.bound * math.sqrt(math.log(params.grid_size * t * t / params.delta) / t)


class VSwitchModel(PredictionModel):
    def __init__(self, base, params, horizon=None):
        if base.num_states != 2:
            raise ValueError("threshold switching needs binary states")
        self.base = base
        self.params = params
        self.horizon = horizon

    def stream(self):
        return VSwitchStream(self)

    def predict(self, prefix):
        self.check_prefix(prefix)
        stream = self.stream()
        for state in prefix:
            stream.observe(state)
        return stream.predict()

    def __repr__(self):
        return f"vswitch({self.base!r},eps={self.params.eps:g},delta={self.params.delta:g},c={self.params.c:g})"


class VSwitchStream:
    def __init__(self, model):
        self.model = model
        self.grid = model.params.grid
        self.base_stream = model.base.stream()
        self.polya_stream = PolyaStream(2)
        self.loss_sums = np.zeros(len(self.grid))
        self.ones = 0
        self.rounds = 0
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

    def current_gap(self):
        t = self.rounds
        return float(np.max(self.loss_sums / t + np.abs(self.ones / t - self.grid)))

    def observe(self, state):
        self.polya_stream.observe(state)
        if self.switched:
            return
        forecast = self.base_prediction()[1]
        self.loss_sums += v_scores(self.grid, forecast, state)
        self.ones += state
        self.rounds += 1
        self.base_stream.observe(state)
        self.pending = None
        gap = self.current_gap()
        if gap > v_threshold(self.rounds, self.model.params):
            self.switch_time = self.rounds
            self.gap = gap
