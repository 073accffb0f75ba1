import concurrent.futures
import math

import numpy as np
from pyhocon import ConfigFactory
from pyhocon.exceptions import ConfigException
from pyparsing import ParseBaseException

from adversary import FlipAdversary, candidate_suite, impossibility_harness, run_interaction, IMPOSSIBILITY_FLOOR
from core import UtilityMatrix, make_rng, mean_confidence, sample_sequence
from dataset import CorpusStats, DEFAULT_ALPHA_MASK, generate_corpus
from metrics import EXACT, MONTE_CARLO, NEXT_TOKEN, tv_exact, tv_mc, tv_next_token
from models import LIKELIHOOD_LEAK, ConstantModel, PiecewiseBernoulliModel, evaluation_suite
from output import (
    CsvWriter,
    Output,
    format_amount,
    format_boring_string,
    format_bound,
    format_spec,
    format_value,
    format_warning,
)
from regret import robust_regret_bound
from specs import build_adversary, build_model, build_utility, canonical
from vswitch import VScoreParams, VSwitchModel, v_gap, v_gap_brute, v_scores

AUTO = "auto"
TRUTH = "truth"
SIMULATE_HEADER = ("trial", "seed", "model", "adversary", "T", "regret", "switched", "switch_time")
TV_HEADER = ("P", "Q", "T", "method", "value", "ci")
IMPOSSIBILITY_HEADER = ("candidate", "tv_lb", "regret_vs_M1", "sum")
VSWITCH_HEADER = ("check", "T", "value", "bound", "passed")
DOWNSTREAM_DECREASE = "downstream_decrease"
DEFAULT_BERNOULLI = "bernoulli(1/3@1,2/3@T/2+1)"
CONFIG_KEYS = ("model", "adversary", "utility", "horizon", "trials", "eta", "alpha", "seed", "out", "workers")


class ExperimentConfig:
    def __init__(
            self,
            model=f"robust({DEFAULT_BERNOULLI})",
            adversary=f"env({DEFAULT_BERNOULLI})",
            utility="match",
            horizon=1024,
            trials=128,
            eta=AUTO,
            alpha=1.0,
            seed=0,
            out="-",
            workers=1
    ):
        self.model = canonical(model)
        self.adversary = canonical(adversary)
        self.utility = canonical(utility)
        self.horizon = int(horizon)
        self.trials = int(trials)
        self.eta = AUTO if eta == AUTO else float(eta)
        self.alpha = float(alpha)
        self.seed = int(seed)
        self.out = str(out)
        self.workers = int(workers)

    @staticmethod
    def from_hocon(conf, **overrides):
        values = {key: conf.get(key) for key in CONFIG_KEYS if key in conf}
        unknown = set(conf.keys()) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        values.update({key: value for key, value in overrides.items() if value is not None})
        return ExperimentConfig(**values)

    @staticmethod
    def from_file(path, **overrides):
        try:
            conf = ConfigFactory.parse_file(path)
        except ParseBaseException as error:
            raise ConfigException(f"{path}: {error}")
        return ExperimentConfig.from_hocon(conf, **overrides)

    @staticmethod
    def from_string(text, **overrides):
        try:
            conf = ConfigFactory.parse_string(text)
        except ParseBaseException as error:
            raise ConfigException(str(error))
        return ExperimentConfig.from_hocon(conf, **overrides)

    def effective_eta(self):
        if self.eta == AUTO:
            return 1.0 / math.sqrt(self.horizon)
        return self.eta

    def values(self):
        return tuple(getattr(self, key) for key in CONFIG_KEYS)

    def to_string(self):
        lines = []
        for key in CONFIG_KEYS:
            value = getattr(self, key)
            if isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, float):
                lines.append(f"{key} = {value!r}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.values() == other.values()

    def __repr__(self):
        return f"ExperimentConfig({', '.join(f'{k}={v!r}' for k, v in zip(CONFIG_KEYS, self.values()))})"


def simulate_trial(config_text, trial, environment=None):
    """One simulate row; rebuilds everything from the config text so it can run in a worker."""
    config = ExperimentConfig.from_string(config_text)
    utility = build_utility(config.utility)
    bindings = None
    adversary_text = config.adversary
    if environment is not None:
        bindings = {TRUTH: evaluation_suite(config.horizon)[environment]}
        adversary_text = f"env({TRUTH})"
    model = build_model(config.model, config.horizon, config.alpha, bindings)
    adversary = build_adversary(adversary_text, utility, config.horizon, config.alpha, bindings)
    interaction = run_interaction(model, adversary, utility, config.effective_eta(), config.horizon, config.seed, trial)
    return (
        trial,
        config.seed,
        config.model,
        environment or config.adversary,
        config.horizon,
        float(interaction.regret),
        interaction.switch_time is not None,
        interaction.switch_time,
    )


class Simulation:
    def __init__(self, config, suite=False):
        self.config = config
        self.suite = suite

    def blocks(self):
        if self.suite:
            return list(evaluation_suite(self.config.horizon))
        build_model(self.config.model, self.config.horizon, self.config.alpha)
        build_adversary(self.config.adversary, build_utility(self.config.utility), self.config.horizon)
        return [None]

    def run_block(self, environment, executor):
        text = self.config.to_string()
        trials = range(self.config.trials)
        if executor is None:
            return [simulate_trial(text, trial, environment) for trial in trials]
        futures = [executor.submit(simulate_trial, text, trial, environment) for trial in trials]
        return [future.result() for future in futures]

    def run(self, stream):
        writer = CsvWriter(stream, SIMULATE_HEADER)
        executor = None
        if self.config.workers > 1:
            executor = concurrent.futures.ProcessPoolExecutor(max_workers=self.config.workers)
        try:
            for environment in self.blocks():
                label = format_boring_string(f"T={self.config.horizon} x{self.config.trials}")
                Output.print_without_linebreak(f"{label} ")
                rows = self.run_block(environment, executor)
                for row in rows:
                    writer.write(*row)
                self.write_summary(writer, rows, environment)
        finally:
            if executor is not None:
                executor.shutdown()

    def envelope(self):
        return robust_regret_bound(self.config.horizon, build_utility(self.config.utility).num_actions)

    def write_summary(self, writer, rows, environment):
        regrets = [row[5] for row in rows]
        switched = sum(1 for row in rows if row[6]) / len(rows)
        mean, ci = mean_confidence(regrets)
        adversary = environment or self.config.adversary
        writer.write("mean", self.config.seed, self.config.model, adversary, self.config.horizon, mean, switched, None)
        writer.write("ci95", self.config.seed, self.config.model, adversary, self.config.horizon, ci, None, None)
        bound = self.envelope()
        Output.print_line(
            f"{format_spec(adversary)}: mean regret {format_value(mean)} +- {format_value(ci)} "
            f"(envelope {format_bound(mean, bound)}), switched in {format_value(switched, 3)} of trials"
        )


def run_tv(first_text, second_text, length, method, samples, seed, stream, reference_text=None):
    first = build_model(first_text, length, leak=LIKELIHOOD_LEAK)
    second = build_model(second_text, length, leak=LIKELIHOOD_LEAK)
    if method == EXACT:
        estimate = tv_exact(first, second, length)
    elif method == MONTE_CARLO:
        estimate = tv_mc(first, second, length, samples, seed)
    elif method == NEXT_TOKEN:
        reference = build_model(reference_text or first_text, length, leak=LIKELIHOOD_LEAK)
        estimate = tv_next_token(first, second, reference, length, samples, seed)
    else:
        raise ValueError(f"unknown method {method}")
    writer = CsvWriter(stream, TV_HEADER)
    writer.write(canonical(first_text), canonical(second_text), length, method, estimate.value, estimate.half_width)
    Output.print_line(f"TV {format_value(estimate.value)} +- {format_value(estimate.half_width)} ({method})")
    return estimate


def run_dataset(base_text, utility_text, alpha_mask, n_base, n_polya, length, seed, stream,
                budget=None, fixed_pool=False):
    base = build_model(base_text, length)
    utility = build_utility(utility_text)
    stats = CorpusStats()
    for record in generate_corpus(base, utility, alpha_mask, n_base, n_polya, length, seed, budget, fixed_pool, stats):
        stream.write(record.to_json() + "\n")
    Output.print_line(
        f"{format_amount(stats.base)} base records, {format_amount(stats.kept)} of "
        f"{format_amount(stats.drawn)} Polya draws kept (fraction {format_value(stats.kept_fraction)})"
    )
    if stats.shortfall and not fixed_pool:
        Output.print_line(format_warning(f"Sampling budget exhausted, {stats.shortfall} Polya records short"))
    if stats.kept:
        Output.print_line("mask_from histogram:")
        Output.print_histogram(stats.histogram(10, length))
    return stats


def run_impossibility(order, trials, seed, stream):
    writer = CsvWriter(stream, IMPOSSIBILITY_HEADER)
    passed = True
    for name, candidate in candidate_suite(order).items():
        result = impossibility_harness(candidate, order, 2 * order, trials, seed, name)
        writer.write(name, result.tv.value, result.regret, result.total)
        Output.print_line(f"{format_spec(name)}: tv {format_value(result.tv.value)} + regret "
                          f"{format_value(result.regret)} = {format_value(result.total)}")
        passed = passed and result.total >= IMPOSSIBILITY_FLOOR
    return passed


class VSwitchBattery:
    """Checks of the threshold-loss switch: properness, fast gap, switching
    behaviour, and downstream regret for random decision problems.
    """

    PROPERNESS_GRID = 100
    GAP_INSTANCES = 100
    UTILITIES = 5
    SWITCH_SLACK = 0.02
    DOWNSTREAM_BOUND = 0.15

    def __init__(self, horizon, trials, seed, c=2.0):
        self.horizon = horizon
        self.trials = trials
        self.seed = seed
        self.c = c

    def properness(self):
        grid = np.arange(self.PROPERNESS_GRID + 1) / self.PROPERNESS_GRID
        worst = 0.0
        for v in grid:
            zero = np.sign(v - grid) * (0 - v)
            one = np.sign(v - grid) * (1 - v)
            expected = np.outer(grid, one) + np.outer(1 - grid, zero)
            worst = max(worst, float(np.max(np.diag(expected) - expected.min(axis=1))))
        return worst

    def boundedness(self):
        grid = np.arange(self.PROPERNESS_GRID + 1) / self.PROPERNESS_GRID
        return max(float(np.abs(v_scores(grid, p, y)).max()) for p in grid for y in (0, 1))

    def gap_agreement(self):
        rng = make_rng(self.seed, 0)
        worst = 0.0
        for _ in range(self.GAP_INSTANCES):
            t = int(rng.integers(1, 60))
            forecasts = np.round(rng.random(t), 2)
            outcomes = rng.integers(0, 2, size=t)
            eps = float(rng.choice([1.0, 0.5, 0.1, 0.01, 1 / 37]))
            worst = max(worst, abs(v_gap(forecasts, outcomes, eps) - v_gap_brute(forecasts, outcomes, eps)))
        return worst

    def constant_switch(self):
        params = VScoreParams.for_horizon(self.horizon, c=1.0)
        model = VSwitchModel(ConstantModel((1 / 3, 2 / 3)), params, self.horizon)
        stream = model.stream()
        for _ in range(self.horizon):
            stream.observe(0)
            if stream.switched:
                break
        return stream.switch_time

    def in_distribution_switches(self):
        base = PiecewiseBernoulliModel.halves(self.horizon)
        model = VSwitchModel(base, VScoreParams.for_horizon(self.horizon, c=self.c), self.horizon)
        switches = 0
        for trial in range(self.trials):
            stream = model.stream()
            for state in sample_sequence(base, self.horizon, self.seed, key=(trial,)):
                stream.observe(state)
                if stream.switched:
                    switches += 1
                    break
        return switches / self.trials

    def downstream_regret(self, horizon):
        rng = make_rng(self.seed, 1)
        base = PiecewiseBernoulliModel.halves(horizon)
        model = VSwitchModel(base, VScoreParams.for_horizon(horizon), horizon)
        worst = -math.inf
        for index in range(self.UTILITIES):
            utility = UtilityMatrix.random(rng)
            interaction = run_interaction(model, FlipAdversary(utility), utility, 1 / math.sqrt(horizon),
                                          horizon, self.seed, index)
            worst = max(worst, interaction.regret)
        return worst

    def trend_horizons(self):
        return sorted({max(16, self.horizon // divisor) for divisor in (8, 4, 2, 1)})

    def run(self, stream):
        writer = CsvWriter(stream, VSWITCH_HEADER)
        rows = [
            ("properness", self.horizon, self.properness(), 1e-12),
            ("boundedness", self.horizon, self.boundedness(), 1.0),
            ("gap_fast_vs_brute", self.horizon, self.gap_agreement(), 1e-12),
        ]
        switch_time = self.constant_switch()
        rows.append(("constant_forecaster_switch", self.horizon,
                     float(switch_time if switch_time is not None else math.inf), float(self.horizon - 1)))
        delta = VScoreParams.for_horizon(self.horizon).delta
        rows.append(("in_distribution_switches", self.horizon, self.in_distribution_switches(),
                     delta + self.SWITCH_SLACK))
        previous = None
        for horizon in self.trend_horizons():
            regret = self.downstream_regret(horizon)
            if previous is not None:
                rows.append((DOWNSTREAM_DECREASE, horizon, regret, previous))
            previous = regret
        rows.append(("downstream_regret", self.horizon, previous, self.DOWNSTREAM_BOUND))
        passed = True
        for check, horizon, value, bound in rows:
            # the trend rows compare against the previous horizon and must drop strictly
            ok = value < bound if check == DOWNSTREAM_DECREASE else value <= bound
            passed = passed and ok
            writer.write(check, horizon, float(value), float(bound), bool(ok))
            Output.print_line(f"{format_spec(check)} T={horizon}: {format_bound(value, bound, 6)}")
        return passed
