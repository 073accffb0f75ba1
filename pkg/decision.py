import math

import numpy as np

from core import DimensionException, as_distribution, point_mass

MIN_TEMPERATURE = 1e-12
CLAMP_TOLERANCE = 1e-9
FLAT_SLOPE = 1e-15


class TemperatureException(Exception):
    pass


class UnattainableTargetException(Exception):
    pass


class UnsupportedException(Exception):
    pass


def auto_temperature(horizon):
    return 1.0 / math.sqrt(horizon)


def check_temperature(eta):
    if not eta >= MIN_TEMPERATURE:
        raise TemperatureException(f"temperature must be at least {MIN_TEMPERATURE}, got {eta}")
    return eta


def action_utilities(utility, belief):
    if len(belief) != utility.num_states:
        raise DimensionException(f"belief has {len(belief)} states, utility expects {utility.num_states}")
    return utility.values @ belief


def expected_utility(utility, policy, belief):
    if len(policy) != utility.num_actions:
        raise DimensionException(f"policy has {len(policy)} actions, utility expects {utility.num_actions}")
    return float(policy @ action_utilities(utility, belief))


def best_response(utility, belief):
    # np.argmax keeps the first maximum: ties go to the lowest action index
    return int(np.argmax(action_utilities(utility, belief)))


def best_response_policy(utility, belief):
    return point_mass(best_response(utility, belief), utility.num_actions)


def softmax(scores, eta):
    scaled = (scores - scores.max()) / eta
    weights = np.exp(scaled)
    return weights / weights.sum()


def quantal_best_response(utility, belief, eta):
    check_temperature(eta)
    return as_distribution(softmax(action_utilities(utility, belief), eta), utility.num_actions)


class InverseQbr:
    def __init__(self, dist, clamped, excess):
        self.dist = dist
        self.clamped = clamped
        self.excess = excess

    def __repr__(self):
        return f"InverseQbr({self.dist.tolist()}, clamped={self.clamped})"


def inverse_qbr_binary(utility, target, eta):
    """Belief (1-q, q) whose quantal best response reproduces target.

    With two actions and two states u_1(q) - u_0(q) is linear in q, so the
    belief solves intercept + slope * q = eta * ln(target[1] / target[0]).
    Solutions outside [0, 1] are clamped; a clamp larger than CLAMP_TOLERANCE
    is reported through the clamped flag.
    """
    if utility.num_actions != 2 or utility.num_states != 2:
        raise UnsupportedException("inverse quantal best response needs two actions and two states")
    check_temperature(eta)
    target = np.asarray(target, dtype=float)
    if len(target) != 2 or not (0.0 < target[0] < 1.0 and 0.0 < target[1] < 1.0):
        raise UnattainableTargetException(f"target {target} is not an interior mixed action")
    values = utility.values
    required = eta * math.log(target[1] / target[0])
    intercept = values[1, 0] - values[0, 0]
    slope = (values[1, 1] - values[1, 0]) - (values[0, 1] - values[0, 0])
    if abs(slope) < FLAT_SLOPE:
        if abs(intercept - required) <= CLAMP_TOLERANCE:
            return InverseQbr(as_distribution((0.5, 0.5), 2), False, 0.0)
        raise UnattainableTargetException(
            f"utility gap is constant at {intercept}, target needs {required}"
        )
    q = (required - intercept) / slope
    clamped_q = min(1.0, max(0.0, q))
    excess = abs(q - clamped_q)
    return InverseQbr(as_distribution((1.0 - clamped_q, clamped_q), 2), excess > CLAMP_TOLERANCE, excess)
