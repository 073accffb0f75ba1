import csv
import sys

from yachalk import chalk

DECIMALS = 6


class Output:
    enabled = True

    @staticmethod
    def print_line(message, end='\n'):
        if Output.enabled:
            sys.stderr.write(f"{message}{end}")

    @staticmethod
    def print_without_linebreak(message):
        if Output.enabled:
            sys.stderr.write(message)
            sys.stderr.flush()

    @staticmethod
    def print_histogram(counts, width=40):
        peak = max(counts) if counts and max(counts) > 0 else 1
        for index, count in enumerate(counts):
            Output.print_line(f"{index:3} {print_bar(width, int(round(width * count / peak)))} {format_amount(count)}")


def format_value(value, decimals=4):
    return chalk.bold(f"{value:.{decimals}f}")


def format_amount(amount, min_width=None):
    if min_width:
        return chalk.yellow(f"{amount:{min_width},}")
    return chalk.yellow(f"{amount:,}")


def format_spec(spec):
    return chalk.cyan(spec)


def format_boring_string(string):
    return chalk.bg_black(chalk.gray(string))


def format_success(string):
    return chalk.bg_cyan(chalk.white_bright(string))


def format_warning(warning):
    return chalk.yellow(warning)


def format_error(error):
    return chalk.red(error)


def format_bound(value, bound, decimals=4):
    if value <= bound:
        return chalk.green(f"{value:.{decimals}f} <= {bound:.{decimals}f}")
    return chalk.red(f"{value:.{decimals}f} > {bound:.{decimals}f}")


def print_bar(width, length):
    result = chalk.bold("[")
    if (sys.stderr.encoding or "").lower().startswith('utf'):
        for _ in range(0, length):
            result += chalk.bold(u"█")
        for _ in range(length, width):
            result += u"░"
    else:
        for _ in range(0, length):
            result += chalk.bold("X")
        for _ in range(length, width):
            result += u"."
    result += chalk.bold("]")
    return result


def format_cell(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.{DECIMALS}f}"
    if value is None:
        return ""
    return str(value)


class CsvWriter:
    """Plain CSV rows: fixed decimals, '.' radix, no colour."""

    def __init__(self, stream, header):
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(header)
        self.width = len(header)

    def write(self, *row):
        if len(row) != self.width:
            raise ValueError(f"row has {len(row)} cells, header has {self.width}")
        self.writer.writerow([format_cell(value) for value in row])
