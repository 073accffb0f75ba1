#!/usr/bin/env python3

import argparse
import sys

from pyhocon.exceptions import ConfigException

from core import DimensionException, DistributionException, HorizonException
from dataset import DEFAULT_ALPHA_MASK
from decision import TemperatureException, UnattainableTargetException, UnsupportedException
from experiments import ExperimentConfig, Simulation, VSwitchBattery, run_dataset, run_impossibility, run_tv
from metrics import BudgetException, EXACT, MONTE_CARLO, NEXT_TOKEN
from output import Output, format_error, format_success, format_warning
from specs import SpecParseException

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_PARSE_ERROR = 2
EXIT_BUDGET_ERROR = 3
STDOUT = "-"


class LowRegret:
    def __init__(self, arguments):
        self.arguments = arguments

    def open_output(self, path):
        if path is None or path == STDOUT:
            return sys.stdout
        return open(path, "w", newline="")

    def with_output(self, path, action):
        stream = self.open_output(path)
        try:
            return action(stream)
        finally:
            if stream is not sys.stdout:
                stream.close()

    def config(self):
        arguments = self.arguments
        overrides = {
            "model": arguments.model,
            "adversary": arguments.adversary,
            "utility": arguments.utility,
            "horizon": arguments.horizon,
            "trials": arguments.trials,
            "eta": arguments.eta,
            "alpha": arguments.alpha,
            "seed": arguments.seed,
            "out": arguments.out,
            "workers": arguments.workers,
        }
        if arguments.config:
            return ExperimentConfig.from_file(arguments.config, **overrides)
        return ExperimentConfig(**{key: value for key, value in overrides.items() if value is not None})

    def start(self):
        command = self.arguments.command
        if command == "simulate":
            config = self.config()
            self.with_output(config.out, Simulation(config, self.arguments.suite).run)
            return True
        if command == "tv":
            arguments = self.arguments
            self.with_output(arguments.out, lambda stream: run_tv(
                arguments.first, arguments.second, arguments.horizon, arguments.method,
                arguments.samples, arguments.seed, stream, arguments.reference
            ))
            return True
        if command == "dataset":
            arguments = self.arguments
            self.with_output(arguments.out, lambda stream: run_dataset(
                arguments.model, arguments.utility, arguments.alpha_mask, arguments.n_base, arguments.n_polya,
                arguments.horizon, arguments.seed, stream, arguments.budget, arguments.fixed_pool
            ))
            return True
        if command == "impossibility":
            arguments = self.arguments
            passed = self.with_output(arguments.out, lambda stream: run_impossibility(
                arguments.context, arguments.trials, arguments.seed, stream
            ))
            if not passed:
                Output.print_line(format_error("A candidate beat the 1/12 tradeoff floor"))
            return passed
        if command == "vswitch-eval":
            arguments = self.arguments
            battery = VSwitchBattery(arguments.horizon, arguments.trials, arguments.seed, arguments.c)
            passed = self.with_output(arguments.out, battery.run)
            if passed:
                Output.print_line(format_success("All checks passed"))
            else:
                Output.print_line(format_warning("Some checks failed"))
            return passed
        return False


def main(argv=None):
    argument_parser = get_argument_parser()
    arguments = argument_parser.parse_args(argv)
    if arguments.command is None:
        argument_parser.print_help()
        return EXIT_PARSE_ERROR
    Output.enabled = not arguments.quiet
    try:
        success = LowRegret(arguments).start()
    except (SpecParseException, ConfigException) as error:
        Output.print_line(format_error(f"Parse error: {error}"))
        return EXIT_PARSE_ERROR
    except BudgetException as error:
        Output.print_line(format_error(str(error)))
        return EXIT_BUDGET_ERROR
    except (ValueError, HorizonException, DistributionException, DimensionException, TemperatureException,
            UnattainableTargetException, UnsupportedException) as error:
        Output.print_line(format_error(str(error)))
        return EXIT_FAILURE
    return EXIT_SUCCESS if success else EXIT_FAILURE


def add_common_arguments(parser):
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="(default 0) seed of the Philox generator, every trial derives its own stream from it",
    )
    parser.add_argument(
        "--out",
        default=None,
        help="(default stdout) file receiving the CSV/JSONL output",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        default=False,
        help="do not print diagnostics to stderr",
    )


def get_argument_parser():
    parser = argparse.ArgumentParser(
        description="Simulate low-regret robustified prediction models against adversaries and environments."
    )
    subparsers = parser.add_subparsers(dest="command")

    simulate = subparsers.add_parser(
        "simulate",
        help="play quantal best responses to a model against an adversary and report the regret of every trial",
    )
    add_common_arguments(simulate)
    simulate.add_argument(
        "--config",
        help="HOCON file with the keys model, adversary, utility, horizon, trials, eta, alpha, seed, out, workers. "
             "Spec values must be quoted. Flags given on the command line override the file.",
    )
    spec_group = simulate.add_argument_group(
        "experiment", "Model and adversary specs, e.g. 'robust(bernoulli(1/3@1,2/3@T/2+1),alpha=1)' and 'flip'."
    )
    spec_group.add_argument("--model", help="model spec played against")
    spec_group.add_argument(
        "--adversary",
        help="adversary spec: flip, const(s), drift(phi=...), env(<model spec>)",
    )
    spec_group.add_argument("--utility", help="(default match) match or a list of rows like [[1,0],[0,1]]")
    spec_group.add_argument("--horizon", type=int, help="(default 1024) number of rounds T")
    spec_group.add_argument("--trials", type=int, help="(default 128) number of independent trials")
    spec_group.add_argument(
        "--eta",
        help="(default auto = 1/sqrt(T)) temperature of the quantal best response, 0 plays the best response",
    )
    spec_group.add_argument("--alpha", type=float, help="(default 1) alpha for robust specs that do not set it")
    spec_group.add_argument(
        "--suite",
        action="store_true",
        default=False,
        help="run against each of the eight evaluation environments instead of --adversary. "
             "The name 'truth' in --model stands for the environment's own model, e.g. 'robust(truth)'.",
    )
    simulate.add_argument("--workers", type=int, help="(default 1) number of worker processes")

    tv = subparsers.add_parser("tv", help="total variation distance between the sequence laws of two models")
    add_common_arguments(tv)
    tv.add_argument("first", metavar="P", help="first model spec")
    tv.add_argument("second", metavar="Q", help="second model spec")
    tv.add_argument("--horizon", type=int, default=10, help="(default 10) sequence length T")
    tv.add_argument(
        "--method",
        choices=(EXACT, MONTE_CARLO, NEXT_TOKEN),
        default=EXACT,
        help="(default exact) exact enumeration, Monte Carlo under P, or next-token distance under --reference",
    )
    tv.add_argument("--samples", type=int, default=10_000, help="(default 10,000) Monte Carlo samples")
    tv.add_argument("--reference", help="(default P) model spec drawing the prefixes for --method next-token")

    dataset = subparsers.add_parser("dataset", help="write a masked training corpus as JSON lines")
    add_common_arguments(dataset)
    dataset.add_argument("--model", default="bernoulli(1/3@1,2/3@T/2+1)", help="base model spec")
    dataset.add_argument("--utility", default="match", help="(default match) utility of the masking rule")
    dataset.add_argument("--horizon", type=int, default=1024, help="(default 1024) sequence length T")
    dataset.add_argument(
        "--alpha-mask",
        type=float,
        default=DEFAULT_ALPHA_MASK,
        help="(default 1.5) keep a Polya sequence when the base regret exceeds alpha-mask/sqrt(t) on some prefix",
    )
    dataset.add_argument("--n-base", type=int, default=128, help="(default 128) number of base sequences")
    dataset.add_argument("--n-polya", type=int, default=128, help="(default 128) number of Polya sequences to keep")
    dataset.add_argument("--budget", type=int, help="(default 100 * n-polya) maximum number of Polya draws")
    dataset.add_argument(
        "--fixed-pool",
        action="store_true",
        default=False,
        help="draw exactly n-polya Polya sequences and keep those passing the rule",
    )

    impossibility = subparsers.add_parser(
        "impossibility",
        help="distance to the de Bruijn model plus regret on its complement, for the built-in candidates",
    )
    add_common_arguments(impossibility)
    impossibility.add_argument("--context", type=int, default=8, help="(default 8) context length L, T = 2L")
    impossibility.add_argument("--trials", type=int, default=1_000, help="(default 1,000) sequences per candidate")

    vswitch = subparsers.add_parser("vswitch-eval", help="run the checks of the threshold-loss switch")
    add_common_arguments(vswitch)
    vswitch.add_argument("--horizon", type=int, default=2048, help="(default 2048) horizon T")
    vswitch.add_argument("--trials", type=int, default=100, help="(default 100) in-distribution sequences")
    vswitch.add_argument("--c", type=float, default=2.0, help="(default 2) threshold constant")
    for subparser in (tv, dataset, impossibility, vswitch):
        subparser.set_defaults(seed=0)
    return parser


if __name__ == "__main__":
    sys.exit(main())
