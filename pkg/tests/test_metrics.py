import itertools
import math

import pytest

from core import UtilityMatrix, log_likelihood, sample_sequence
from metrics import (
    EXACT,
    MONTE_CARLO,
    NEXT_TOKEN,
    BudgetException,
    tv_exact,
    tv_mc,
    tv_next_token,
)
from models import (
    ConstantModel,
    DeBruijnModel,
    PiecewiseBernoulliModel,
    PointMassModel,
    PolyaUrnModel,
    UniformModel,
    windowed,
)
from robustify import RobustModel, switch_time

MATCH = UtilityMatrix.match(2)

FULL_SUPPORT = [
    PolyaUrnModel(),
    UniformModel(),
    ConstantModel((0.3, 0.7)),
    PiecewiseBernoulliModel([(1, 0.2), (4, 0.8)]),
    windowed(PolyaUrnModel(), 2),
    DeBruijnModel(2, leak=0.1),
]


def brute_tv(first, second, length):
    return 0.5 * sum(
        abs(math.exp(log_likelihood(first, seq)) - math.exp(log_likelihood(second, seq)))
        for seq in itertools.product((0, 1), repeat=length)
    )


class TestExact:
    def test_identical_models(self):
        estimate = tv_exact(PolyaUrnModel(), PolyaUrnModel(), 5)
        assert estimate.value == 0.0
        assert estimate.half_width == 0.0
        assert estimate.method == EXACT

    def test_disjoint_point_masses(self):
        assert tv_exact(PointMassModel(0), PointMassModel(1), 3).value == 1.0

    def test_point_mass_against_uniform(self):
        assert tv_exact(PointMassModel(0), UniformModel(), 3).value == pytest.approx(7 / 8)

    def test_polya_against_uniform(self):
        assert tv_exact(PolyaUrnModel(), UniformModel(), 2).value == pytest.approx(1 / 6)

    def test_matches_full_enumeration(self):
        for first, second in itertools.combinations(FULL_SUPPORT, 2):
            assert tv_exact(first, second, 6).value == pytest.approx(brute_tv(first, second, 6), abs=1e-12)

    def test_nondecreasing_in_length(self):
        for first, second in itertools.combinations(FULL_SUPPORT, 2):
            values = [tv_exact(first, second, length).value for length in range(1, 9)]
            assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:]))

    def test_budget(self):
        with pytest.raises(BudgetException):
            tv_exact(PolyaUrnModel(), UniformModel(), 25)

    def test_budget_counts_sequences_not_visited_leaves(self):
        # a point mass visits one leaf but is still refused past 2^24 sequences
        assert tv_exact(PointMassModel(0), PointMassModel(0), 24).value == 0.0
        with pytest.raises(BudgetException):
            tv_exact(PointMassModel(0), PointMassModel(0), 25)

    def test_alphabets_must_agree(self):
        with pytest.raises(ValueError):
            tv_exact(UniformModel(3), UniformModel(), 2)


class TestMonteCarlo:
    @pytest.mark.slow
    def test_agrees_with_exact(self):
        pairs = list(itertools.combinations(FULL_SUPPORT, 2)) + [
            (PointMassModel(0), UniformModel()),
            (UniformModel(), PointMassModel(0)),
            (DeBruijnModel(3), PolyaUrnModel()),
            (PolyaUrnModel(), PolyaUrnModel()),
            (DeBruijnModel(2), DeBruijnModel(2, leak=0.2)),
        ]
        assert len(pairs) == 20
        for first, second in pairs:
            exact = tv_exact(first, second, 6).value
            estimate = tv_mc(first, second, 6, 100_000, seed=3)
            assert estimate.method == MONTE_CARLO
            standard_error = estimate.half_width / 1.959963984540054
            assert abs(estimate.value - exact) <= 3 * standard_error + 1e-12

    def test_same_seed_same_estimate(self):
        first = tv_mc(PolyaUrnModel(), UniformModel(), 8, 200, seed=5)
        second = tv_mc(PolyaUrnModel(), UniformModel(), 8, 200, seed=5)
        assert first.value == second.value


class TestNextToken:
    def test_identical_models(self):
        estimate = tv_next_token(PolyaUrnModel(), PolyaUrnModel(), PolyaUrnModel(), 8, 50, seed=0)
        assert estimate.value == 0.0
        assert estimate.method == NEXT_TOKEN

    def test_point_mass_against_uniform(self):
        estimate = tv_next_token(PointMassModel(0), UniformModel(), UniformModel(), 8, 50, seed=0)
        assert estimate.value == pytest.approx(0.5)
        assert estimate.half_width == pytest.approx(0.0, abs=1e-12)

    def test_independent_bits(self):
        first = PiecewiseBernoulliModel([(1, 0.2), (4, 0.8)])
        estimate = tv_next_token(first, UniformModel(), first, 6, 40, seed=1)
        assert estimate.value == pytest.approx(0.3)
        assert tv_exact(first, UniformModel(), 6).value <= 6 * estimate.value

    def test_symmetric_and_bounded(self):
        for first, second in itertools.combinations(FULL_SUPPORT, 2):
            forward = tv_next_token(first, second, PolyaUrnModel(), 6, 20, seed=2).value
            backward = tv_next_token(second, first, PolyaUrnModel(), 6, 20, seed=2).value
            assert forward == backward
            assert 0.0 <= forward <= 1.0

    def test_opposite_constant_forecasters(self):
        estimate = tv_next_token(ConstantModel((1 / 3, 2 / 3)), ConstantModel((2 / 3, 1 / 3)), UniformModel(),
                                 10, 5, seed=0)
        assert estimate.value == pytest.approx(1 / 3, abs=1e-12)

    def test_robustified_model_in_distribution(self):
        horizon = 256
        samples = 40
        base = PiecewiseBernoulliModel.halves(horizon)
        robust = RobustModel(base, MATCH, horizon)
        estimate = tv_next_token(robust, base, base, horizon, samples, seed=6)
        switched = sum(
            switch_time(robust, sample_sequence(base, horizon, 6, key=(i,))).switched for i in range(samples)
        )
        assert estimate.value <= switched / samples + 1e-12

    def test_distance_only_after_the_switch(self):
        horizon = 256
        base = ConstantModel((1 / 3, 2 / 3))
        robust = RobustModel(base, MATCH, horizon)
        report = switch_time(robust, (0,) * horizon)
        assert report.switched
        estimate = tv_next_token(robust, base, PointMassModel(0), horizon, 3, seed=0)
        assert 0.0 < estimate.value <= 1 - report.tau / horizon
