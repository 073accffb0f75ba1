import io
import math

import pytest

from experiments import (
    SIMULATE_HEADER,
    ExperimentConfig,
    Simulation,
    VSwitchBattery,
    run_dataset,
    run_impossibility,
    run_tv,
    simulate_trial,
)
from output import Output
from regret import robust_regret_bound


@pytest.fixture(autouse=True)
def quiet():
    Output.enabled = False
    yield
    Output.enabled = True


def small_config(**overrides):
    values = dict(model="robust(polya)", adversary="flip", horizon=32, trials=3, seed=4)
    values.update(overrides)
    return ExperimentConfig(**values)


class TestExperimentConfig:
    def test_defaults(self):
        config = ExperimentConfig()
        assert config.model == "robust(bernoulli(1/3@1,2/3@T/2+1))"
        assert config.adversary == "env(bernoulli(1/3@1,2/3@T/2+1))"
        assert (config.horizon, config.trials, config.eta, config.seed) == (1024, 128, "auto", 0)
        assert config.effective_eta() == pytest.approx(1 / 32)

    def test_round_trip(self):
        config = small_config(eta=0.05, alpha=2, out="result.csv", workers=2)
        assert ExperimentConfig.from_string(config.to_string()) == config

    def test_hocon_with_overrides(self):
        text = 'model = "robust(polya, alpha = 2)"\nhorizon = 64\ntrials = 10\n'
        config = ExperimentConfig.from_string(text, trials=5, seed=None)
        assert config.model == "robust(polya,alpha=2)"
        assert (config.horizon, config.trials, config.seed) == (64, 5, 0)

    def test_unknown_keys(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_string("horizon = 64\nhorizn = 32\n")


class TestSimulation:
    def test_trial_row(self):
        row = simulate_trial(small_config().to_string(), 1)
        assert row[:5] == (1, 4, "robust(polya)", "flip", 32)
        assert row[6] is False and row[7] is None

    def test_rows_and_summary(self):
        stream = io.StringIO()
        Simulation(small_config()).run(stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == ",".join(SIMULATE_HEADER)
        assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "2", "mean", "ci95"]
        assert lines[-1].endswith(",,")

    def test_output_is_reproducible(self):
        first, second = io.StringIO(), io.StringIO()
        config = small_config(adversary="env(bernoulli(0.3))")
        Simulation(config).run(first)
        Simulation(config).run(second)
        assert first.getvalue() == second.getvalue()

    def test_workers_do_not_change_output(self):
        serial, parallel = io.StringIO(), io.StringIO()
        Simulation(small_config(adversary="env(bernoulli(0.3))")).run(serial)
        Simulation(small_config(adversary="env(bernoulli(0.3))", workers=2)).run(parallel)
        assert serial.getvalue() == parallel.getvalue()

    def test_envelope_follows_utility(self):
        three_actions = small_config(utility="[[1,0],[0,1],[0.5,0.5]]")
        assert Simulation(three_actions).envelope() == pytest.approx(robust_regret_bound(32, 3))
        assert Simulation(small_config()).envelope() == pytest.approx(robust_regret_bound(32, 2))

    @pytest.mark.slow
    @pytest.mark.parametrize("divisor", [2, 5, 10, 20])
    def test_polya_tracks_drift(self, divisor):
        stream = io.StringIO()
        config = ExperimentConfig(model="polya", adversary=f"drift(phi=T/{divisor})", horizon=1024, trials=128)
        Simulation(config).run(stream)
        mean = next(line for line in stream.getvalue().splitlines() if line.startswith("mean,"))
        assert float(mean.split(",")[5]) <= 0.1

    def test_suite_blocks(self):
        stream = io.StringIO()
        Simulation(small_config(model="robust(truth)", trials=1), suite=True).run(stream)
        rows = [line.split(",") for line in stream.getvalue().splitlines()[1:]]
        assert len(rows) == 8 * 3
        assert rows[0][3] == "ber_hi_lo"
        assert rows[-1][3] == "drift_20"


class TestRunners:
    def test_tv_row(self):
        stream = io.StringIO()
        run_tv("polya", "polya", 5, "exact", 100, 0, stream)
        assert stream.getvalue() == "P,Q,T,method,value,ci\npolya,polya,5,exact,0.000000,0.000000\n"

    def test_tv_next_token_defaults_reference(self):
        estimate = run_tv("point(0)", "uniform", 4, "next-token", 10, 0, io.StringIO())
        assert estimate.value == pytest.approx(0.5)

    def test_dataset_lines(self):
        stream = io.StringIO()
        stats = run_dataset("bernoulli(1/3@1,2/3@T/2+1)", "match", 1.5, 2, 3, 32, 0, stream)
        lines = stream.getvalue().splitlines()
        assert len(lines) == 2 + stats.kept
        assert lines[0].startswith('{"seq":"')

    def test_impossibility_passes(self):
        stream = io.StringIO()
        assert run_impossibility(4, 50, 0, stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "candidate,tv_lb,regret_vs_M1,sum"
        assert [line.split(",")[0] for line in lines[1:]] == ["M0", "M1", "windowed_polya", "constant_half"]


class TestVSwitchBattery:
    def test_scoring_checks(self):
        battery = VSwitchBattery(2048, 10, 0)
        assert battery.properness() <= 1e-12
        assert battery.boundedness() <= 1.0
        assert battery.gap_agreement() <= 1e-12

    def test_constant_forecaster_switches(self):
        assert VSwitchBattery(2048, 10, 0).constant_switch() < 2047

    @pytest.mark.slow
    def test_downstream_regret(self):
        battery = VSwitchBattery(2048, 10, 0)
        assert battery.trend_horizons() == [256, 512, 1024, 2048]
        regrets = [battery.downstream_regret(horizon) for horizon in battery.trend_horizons()]
        assert regrets[-1] <= 0.15
        assert all(later < earlier for earlier, later in zip(regrets, regrets[1:]))

    @pytest.mark.slow
    def test_full_battery(self):
        stream = io.StringIO()
        assert VSwitchBattery(2048, 100, 0).run(stream)
        rows = stream.getvalue().splitlines()
        assert rows[0] == "check,T,value,bound,passed"
        assert all(row.endswith(",1") for row in rows[1:])
        assert not any(math.isnan(float(row.split(",")[2])) for row in rows[1:])
        assert sum(row.startswith("downstream_decrease,") for row in rows) == 3
