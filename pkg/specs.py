import contextlib
import math
from functools import lru_cache

import pyparsing as pp

from adversary import ConstantAdversary, EnvironmentAdversary, FlipAdversary
from bounded import FULL_CONTEXT, BoundedRobustModel
from core import UtilityMatrix
from models import (
    DEFAULT_LEAK,
    ConstantModel,
    DeBruijnModel,
    PeriodicDriftEnv,
    PiecewiseBernoulliModel,
    PointMassModel,
    PolyaUrnModel,
    UniformModel,
    WindowedModel,
)
from robustify import DEFAULT_ALPHA, RobustModel
from vswitch import VScoreParams, VSwitchModel

HORIZON_NAME = "T"
AUTO = "auto"
SPEC_WHITESPACE = " \t\r\n"


class SpecParseException(Exception):
    def __init__(self, message, text="", line=1, column=1):
        self.message = message
        self.text = text
        self.line = line
        self.column = column
        super().__init__(self.render())

    @staticmethod
    def from_parse_error(text, error):
        return SpecParseException(error.msg, text, error.lineno, error.col)

    def render(self):
        lines = self.text.splitlines() or [""]
        source = lines[self.line - 1] if self.line <= len(lines) else ""
        caret = " " * (self.column - 1) + "^"
        return f"line {self.line}, column {self.column}: {self.message}\n  {source}\n  {caret}"


class Node:
    """A parsed spec: name(args..., key=value...)."""

    def __init__(self, name, args, kwargs, line, column):
        self.name = name
        self.args = args
        self.kwargs = kwargs
        self.line = line
        self.column = column

    def __repr__(self):
        return f"Node({self.name}, {self.args}, {self.kwargs})"


class At:
    def __init__(self, value, start):
        self.value = value
        self.start = start

    def __repr__(self):
        return f"{self.value}@{self.start}"


class Argument:
    def __init__(self, key, value, loc):
        self.key = key
        self.value = value
        self.loc = loc


def skip_whitespace(text, loc):
    while loc < len(text) and text[loc] in SPEC_WHITESPACE:
        loc += 1
    return loc


def fatal(text, loc, message):
    return pp.ParseFatalException(text, skip_whitespace(text, loc), message)


def plain(token):
    if isinstance(token, pp.ParseResults):
        return [plain(item) for item in token]
    return token


def fold(text, loc, tokens):
    operands = list(tokens[0])
    result = operands[0]
    for operator, right in zip(operands[1::2], operands[2::2]):
        if operator == "+":
            result = result + right
        elif operator == "-":
            result = result - right
        elif operator == "*":
            result = result * right
        elif right == 0:
            raise fatal(text, loc, "division by zero")
        else:
            result = result / right
    return result


def negate(tokens):
    operands = list(tokens[0])
    return (-1) ** (len(operands) - 1) * operands[-1]


def make_node(text, loc, tokens):
    args = []
    kwargs = {}
    for argument in (tokens[1] if len(tokens) > 1 else ()):
        if argument.key is None:
            if kwargs:
                raise fatal(text, argument.loc, "positional argument after keyword argument")
            args.append(argument.value)
        elif argument.key in kwargs:
            raise fatal(text, argument.loc, f"duplicate argument {argument.key!r}")
        else:
            kwargs[argument.key] = argument.value
    loc = skip_whitespace(text, loc)
    return Node(tokens[0], args, kwargs, pp.lineno(loc, text), pp.col(loc, text))


@contextlib.contextmanager
def spec_whitespace():
    default = "".join(pp.ParserElement.DEFAULT_WHITE_CHARS)
    pp.ParserElement.set_default_whitespace_chars(SPEC_WHITESPACE)
    try:
        yield
    finally:
        pp.ParserElement.set_default_whitespace_chars(default)


@lru_cache(maxsize=None)
def spec_grammar(horizon):
    """Grammar for the spec mini-language; T evaluates to the given horizon."""

    def horizon_value(text, loc, tokens):
        if horizon is None:
            raise fatal(text, loc, "T is used but no horizon is set")
        return float(horizon)

    with spec_whitespace():
        lpar, rpar, lbrack, rbrack, comma, equals, at = map(pp.Suppress, "()[],=@")
        horizon_keyword = pp.Keyword(HORIZON_NAME)
        identifier = ~horizon_keyword + pp.Word(pp.alphas + "_", pp.alphanums + "_")
        number = pp.Regex(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?").set_parse_action(lambda t: float(t[0]))
        operand = number | horizon_keyword.copy().set_parse_action(horizon_value)
        arithmetic = pp.infix_notation(operand, [
            ("-", 1, pp.OpAssoc.RIGHT, negate),
            (pp.one_of("* /"), 2, pp.OpAssoc.LEFT, fold),
            (pp.one_of("+ -"), 2, pp.OpAssoc.LEFT, fold),
        ])

        spec = pp.Forward()
        value = pp.Forward()
        items = pp.Group(lbrack - value + pp.ZeroOrMore(comma - value) - rbrack)
        scheduled = (arithmetic + at - arithmetic).set_parse_action(lambda t: At(t[0], t[1]))
        value <<= items | spec | scheduled | arithmetic

        named = (identifier + equals - value).set_parse_action(lambda s, l, t: Argument(t[0], plain(t[1]), l))
        positional = pp.Group(value).set_parse_action(lambda s, l, t: Argument(None, plain(t[0][0]), l))
        argument = named | positional
        arguments = argument + pp.ZeroOrMore(comma - argument)
        spec <<= (identifier + pp.Opt(lpar - pp.Group(arguments) - rpar)).set_parse_action(make_node)
        return spec + pp.StringEnd()


def parse(text, horizon=None):
    try:
        return spec_grammar(horizon).parse_string(text)[0]
    except pp.ParseBaseException as error:
        raise SpecParseException.from_parse_error(text, error) from None


def canonical(text):
    """Whitespace-free form of a spec; fails like parse on invalid input."""
    parse(text, math.nan)
    return "".join(text.split())


class Builder:
    def __init__(self, text, horizon, alpha=DEFAULT_ALPHA, bindings=None, leak=DEFAULT_LEAK):
        self.text = text
        self.horizon = horizon
        self.alpha = alpha
        self.bindings = bindings or {}
        self.leak = leak

    def fail(self, message, node):
        raise SpecParseException(message, self.text, node.line, node.column)

    def check_arguments(self, node, positional, keywords):
        if len(node.args) > positional:
            self.fail(f"{node.name} takes at most {positional} positional arguments", node)
        unknown = set(node.kwargs) - set(keywords)
        if unknown:
            self.fail(f"{node.name} got unknown arguments {', '.join(sorted(unknown))}", node)

    def number(self, node, value, what):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        self.fail(f"{what} must be a number", node)

    def integer(self, node, value, what):
        value = self.number(node, value, what)
        if value != int(value):
            self.fail(f"{what} must be an integer, got {value:g}", node)
        return int(value)

    def keyword(self, node, value, choices, what):
        if isinstance(value, Node) and not value.args and not value.kwargs and value.name in choices:
            return value.name
        self.fail(f"{what} must be one of {', '.join(choices)}", node)

    def boolean(self, node, value, what):
        return self.keyword(node, value, ("true", "false"), what) == "true"

    def sub_spec(self, node):
        if len(node.args) != 1 or not isinstance(node.args[0], Node):
            self.fail(f"{node.name} wraps exactly one model spec", node)
        return node.args[0]

    def utility(self, value, node):
        if value is None:
            return UtilityMatrix.match(2)
        if isinstance(value, Node) and value.name == "match":
            return UtilityMatrix.match(2)
        if isinstance(value, list) and all(isinstance(row, list) for row in value):
            try:
                return UtilityMatrix([[self.number(node, x, "utility entry") for x in row] for row in value])
            except Exception as error:
                if isinstance(error, SpecParseException):
                    raise
                self.fail(str(error), node)
        self.fail("utility must be match or a list of rows", node)

    def model(self, node):
        if not isinstance(node, Node):
            raise SpecParseException("expected a model spec", self.text)
        if node.name in self.bindings and not node.args and not node.kwargs:
            return self.bindings[node.name]
        method = getattr(self, f"model_{node.name}", None)
        if method is None:
            self.fail(f"unknown model {node.name!r}", node)
        try:
            return method(node)
        except SpecParseException:
            raise
        except Exception as error:
            self.fail(str(error), node)

    def model_polya(self, node):
        self.check_arguments(node, 0, ())
        return PolyaUrnModel()

    def model_uniform(self, node):
        self.check_arguments(node, 0, ())
        return UniformModel()

    def model_constant(self, node):
        self.check_arguments(node, len(node.args), ())
        return ConstantModel([self.number(node, value, "probability") for value in node.args])

    def model_point(self, node):
        self.check_arguments(node, 1, ())
        if not node.args:
            self.fail("point needs a state", node)
        return PointMassModel(self.integer(node, node.args[0], "state"))

    def model_bernoulli(self, node):
        self.check_arguments(node, len(node.args), ())
        schedule = []
        for index, value in enumerate(node.args):
            if isinstance(value, At):
                schedule.append((self.integer(node, value.start, "start round"), value.value))
            elif index == 0:
                schedule.append((1, self.number(node, value, "probability")))
            else:
                self.fail("only the first segment may omit its start round", node)
        return PiecewiseBernoulliModel(schedule)

    def model_debruijn(self, node):
        self.check_arguments(node, 0, ("L", "flip", "eps"))
        if "L" not in node.kwargs:
            self.fail("debruijn needs L", node)
        flip = self.boolean(node, node.kwargs["flip"], "flip") if "flip" in node.kwargs else False
        leak = self.number(node, node.kwargs["eps"], "eps") if "eps" in node.kwargs else self.leak
        return DeBruijnModel(self.integer(node, node.kwargs["L"], "L"), flip, leak)

    def model_drift(self, node):
        self.check_arguments(node, 0, ("phi",))
        if "phi" not in node.kwargs:
            self.fail("drift needs phi", node)
        return PeriodicDriftEnv(self.number(node, node.kwargs["phi"], "phi"))

    def model_windowed(self, node):
        self.check_arguments(node, 1, ("w",))
        if "w" not in node.kwargs:
            self.fail("windowed needs w", node)
        return WindowedModel(self.model(self.sub_spec(node)), self.integer(node, node.kwargs["w"], "w"))

    def model_robust(self, node):
        self.check_arguments(node, 1, ("alpha", "U"))
        alpha = self.number(node, node.kwargs.get("alpha", self.alpha), "alpha")
        utility = self.utility(node.kwargs.get("U"), node)
        return RobustModel(self.model(self.sub_spec(node)), utility, self.required_horizon(node), alpha)

    def model_alg2(self, node):
        self.check_arguments(node, 1, ("L", "Lp", "alpha", "mode", "U"))
        for key in ("L", "Lp"):
            if key not in node.kwargs:
                self.fail(f"alg2 needs {key}", node)
        mode = FULL_CONTEXT
        if "mode" in node.kwargs:
            mode = self.keyword(node, node.kwargs["mode"], ("full", "suffix"), "mode")
        return BoundedRobustModel(
            self.model(self.sub_spec(node)),
            self.utility(node.kwargs.get("U"), node),
            self.integer(node, node.kwargs["L"], "L"),
            self.integer(node, node.kwargs["Lp"], "Lp"),
            self.required_horizon(node),
            self.number(node, node.kwargs.get("alpha", self.alpha), "alpha"),
            mode,
        )

    def model_vswitch(self, node):
        self.check_arguments(node, 1, ("eps", "delta", "c", "alpha"))
        horizon = self.required_horizon(node)
        alpha = self.number(node, node.kwargs.get("alpha", self.alpha), "alpha")
        c = self.number(node, node.kwargs.get("c", 1.0), "c")
        defaults = VScoreParams.for_horizon(horizon, alpha, c)
        eps = self.auto_number(node, "eps", defaults.eps)
        delta = self.auto_number(node, "delta", defaults.delta)
        return VSwitchModel(self.model(self.sub_spec(node)), VScoreParams(eps, delta, c), horizon)

    def auto_number(self, node, key, default):
        value = node.kwargs.get(key)
        if value is None or (isinstance(value, Node) and value.name == AUTO and not value.args):
            return default
        return self.number(node, value, key)

    def required_horizon(self, node):
        if self.horizon is None:
            self.fail(f"{node.name} needs a horizon", node)
        return self.horizon

    def adversary(self, node, utility):
        if node.name == "flip":
            self.check_arguments(node, 0, ())
            return FlipAdversary(utility)
        if node.name == "const":
            self.check_arguments(node, 1, ())
            if not node.args:
                self.fail("const needs a state", node)
            return ConstantAdversary(self.integer(node, node.args[0], "state"))
        if node.name == "drift":
            return EnvironmentAdversary(self.model(node))
        if node.name == "env":
            self.check_arguments(node, 1, ())
            return EnvironmentAdversary(self.model(self.sub_spec(node)))
        self.fail(f"unknown adversary {node.name!r}", node)


def build_model(text, horizon=None, alpha=DEFAULT_ALPHA, bindings=None, leak=DEFAULT_LEAK):
    return Builder(text, horizon, alpha, bindings, leak).model(parse(text, horizon))


def build_adversary(text, utility, horizon=None, alpha=DEFAULT_ALPHA, bindings=None):
    return Builder(text, horizon, alpha, bindings).adversary(parse(text, horizon), utility)


def build_utility(text):
    wrapped = f"U({text})"
    node = parse(wrapped)
    if len(node.args) != 1 or node.kwargs:
        raise SpecParseException("expected one utility", wrapped, node.line, node.column)
    return Builder(wrapped, None).utility(node.args[0], node)
