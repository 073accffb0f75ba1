import math

import numpy as np
import pytest

from core import DimensionException, UtilityMatrix, as_distribution, make_rng, point_mass
from decision import (
    TemperatureException,
    UnattainableTargetException,
    UnsupportedException,
    best_response,
    best_response_policy,
    expected_utility,
    inverse_qbr_binary,
    quantal_best_response,
    softmax,
)

MATCH = UtilityMatrix.match(2)


def random_belief(rng, size):
    return as_distribution(rng.dirichlet(np.ones(size)), size)


class TestExpectedUtility:
    def test_uniform_policy_on_match(self):
        assert expected_utility(MATCH, np.array([0.5, 0.5]), np.array([0.9, 0.1])) == pytest.approx(0.5)

    def test_point_mass_reads_belief(self):
        assert expected_utility(MATCH, point_mass(1, 2), np.array([0.3, 0.7])) == pytest.approx(0.7)

    def test_constant_utility(self):
        utility = UtilityMatrix([[0.4, 0.4], [0.4, 0.4]])
        assert expected_utility(utility, np.array([0.2, 0.8]), np.array([0.6, 0.4])) == pytest.approx(0.4)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionException):
            expected_utility(MATCH, np.array([1.0, 0.0, 0.0]), np.array([0.5, 0.5]))
        with pytest.raises(DimensionException):
            best_response(MATCH, np.array([0.2, 0.3, 0.5]))


class TestBestResponse:
    def test_picks_likelier_state(self):
        assert best_response(MATCH, np.array([0.3, 0.7])) == 1

    def test_ties_go_to_lowest_action(self):
        assert best_response(MATCH, np.array([0.5, 0.5])) == 0

    def test_policy_is_point_mass(self):
        np.testing.assert_array_equal(best_response_policy(MATCH, np.array([0.3, 0.7])), [0.0, 1.0])

    def test_maximises_expected_utility(self):
        rng = make_rng(1)
        for _ in range(500):
            utility = UtilityMatrix.random(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
            belief = random_belief(rng, utility.num_states)
            values = [expected_utility(utility, point_mass(a, utility.num_actions), belief)
                      for a in range(utility.num_actions)]
            assert values[best_response(utility, belief)] == max(values)

    def test_permuting_rows_permutes_response(self):
        rng = make_rng(2)
        for _ in range(200):
            utility = UtilityMatrix.random(rng, 4, 3)
            belief = random_belief(rng, 3)
            order = rng.permutation(4)
            permuted = utility.permute_actions(order)
            assert order[best_response(permuted, belief)] == best_response(utility, belief)


class TestQuantalBestResponse:
    def test_hot_limit_is_uniform(self):
        policy = quantal_best_response(MATCH, np.array([0.3, 0.7]), 1e9)
        np.testing.assert_allclose(policy, [0.5, 0.5], atol=1e-6)

    def test_unit_temperature(self):
        policy = quantal_best_response(MATCH, np.array([0.3, 0.7]), 1.0)
        assert policy[1] == pytest.approx(1 / (1 + math.exp(-0.4)), abs=1e-12)

    def test_cold_limit_is_best_response(self):
        policy = quantal_best_response(MATCH, np.array([0.3, 0.7]), 1e-9)
        assert policy[1] >= 1 - 1e-12

    def test_temperature_floor(self):
        with pytest.raises(TemperatureException):
            quantal_best_response(MATCH, np.array([0.3, 0.7]), 1e-13)
        with pytest.raises(TemperatureException):
            quantal_best_response(MATCH, np.array([0.3, 0.7]), 0.0)

    def test_softmax_survives_large_scores(self):
        weights = softmax(np.array([1000.0, 999.0]), 1e-3)
        assert np.all(np.isfinite(weights))
        assert weights[0] == pytest.approx(1.0)

    def test_shift_invariance(self):
        rng = make_rng(3)
        for _ in range(200):
            utility = UtilityMatrix(rng.uniform(-0.5, 0.5, size=(3, 2)))
            belief = random_belief(rng, 2)
            eta = float(rng.uniform(0.01, 2.0))
            np.testing.assert_allclose(
                quantal_best_response(utility, belief, eta),
                quantal_best_response(utility.shifted(0.5), belief, eta),
                atol=1e-12,
            )

    def test_gap_to_best_response_is_bounded(self):
        rng = make_rng(4)
        for _ in range(10_000):
            num_actions = int(rng.integers(2, 5))
            utility = UtilityMatrix.random(rng, num_actions, int(rng.integers(2, 4)))
            belief = random_belief(rng, utility.num_states)
            eta = float(10 ** rng.uniform(-3, 1))
            best = expected_utility(utility, best_response_policy(utility, belief), belief)
            quantal = expected_utility(utility, quantal_best_response(utility, belief, eta), belief)
            assert best - quantal <= eta * math.log(num_actions) + 1e-12


class TestInverseQbr:
    def test_symmetric_target(self):
        for eta in (0.01, 0.5, 3.0):
            inverse = inverse_qbr_binary(MATCH, (0.5, 0.5), eta)
            np.testing.assert_allclose(inverse.dist, [0.5, 0.5], atol=1e-15)
            assert not inverse.clamped

    def test_closed_form(self):
        inverse = inverse_qbr_binary(MATCH, (0.25, 0.75), 0.5)
        assert inverse.dist[1] == pytest.approx((1 + 0.5 * math.log(3)) / 2, abs=1e-12)
        assert inverse.dist[1] == pytest.approx(0.774653, abs=1e-6)

    def test_out_of_range_is_clamped_and_flagged(self):
        inverse = inverse_qbr_binary(MATCH, (0.01, 0.99), 1.0)
        np.testing.assert_array_equal(inverse.dist, [0.0, 1.0])
        assert inverse.clamped
        assert inverse.excess == pytest.approx((1 + math.log(99)) / 2 - 1)

    def test_round_trip(self):
        rng = make_rng(5)
        checked = 0
        while checked < 500:
            utility = UtilityMatrix.random(rng)
            eta = float(rng.uniform(0.05, 2.0))
            target = as_distribution(quantal_best_response(utility, random_belief(rng, 2), eta))
            inverse = inverse_qbr_binary(utility, target, eta)
            if inverse.clamped:
                continue
            np.testing.assert_allclose(quantal_best_response(utility, inverse.dist, eta), target, atol=1e-9)
            checked += 1

    def test_flat_utility_gap(self):
        flat = UtilityMatrix([[0.2, 0.2], [0.2, 0.2]])
        np.testing.assert_array_equal(inverse_qbr_binary(flat, (0.5, 0.5), 1.0).dist, [0.5, 0.5])
        with pytest.raises(UnattainableTargetException):
            inverse_qbr_binary(flat, (0.3, 0.7), 1.0)

    def test_target_must_be_interior(self):
        with pytest.raises(UnattainableTargetException):
            inverse_qbr_binary(MATCH, (0.0, 1.0), 1.0)

    def test_only_binary_problems(self):
        with pytest.raises(UnsupportedException):
            inverse_qbr_binary(UtilityMatrix.match(3), (0.2, 0.3, 0.5), 1.0)
