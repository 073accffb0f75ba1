import json
import math
from collections import Counter

from core import sample_sequence
from decision import quantal_best_response
from models import PolyaUrnModel
from regret import RegretLedger, external_regret

BASE = "base"
POLYA = "polya"
BASE_KEY = 0
POLYA_KEY = 1
DEFAULT_ALPHA_MASK = 1.5
DEFAULT_BUDGET_FACTOR = 100


class CorpusRecord:
    def __init__(self, seq, mask_from, source):
        if (mask_from is None) != (source == BASE):
            raise ValueError(f"{source} records {'need' if source == POLYA else 'take no'} mask_from")
        self.seq = tuple(seq)
        self.mask_from = mask_from
        self.source = source

    def to_json(self):
        record = {
            "seq": "".join(str(state) for state in self.seq),
            "mask_from": self.mask_from,
            "source": self.source,
        }
        return json.dumps(record, separators=(",", ":"))

    @staticmethod
    def from_json(line):
        record = json.loads(line)
        return CorpusRecord(tuple(int(c) for c in record["seq"]), record["mask_from"], record["source"])

    def __eq__(self, other):
        return (
            isinstance(other, CorpusRecord)
            and (self.seq, self.mask_from, self.source) == (other.seq, other.mask_from, other.source)
        )

    def __repr__(self):
        return f"CorpusRecord({self.source}, mask_from={self.mask_from}, T={len(self.seq)})"


class CorpusStats:
    def __init__(self):
        self.base = 0
        self.drawn = 0
        self.kept = 0
        self.target = 0
        self.mask_from = Counter()

    @property
    def shortfall(self):
        return max(0, self.target - self.kept)

    @property
    def kept_fraction(self):
        return self.kept / self.drawn if self.drawn else 0.0

    def histogram(self, bins, length):
        counts = [0] * bins
        for t, count in self.mask_from.items():
            counts[min(bins - 1, (t - 1) * bins // length)] += count
        return counts


def masking_threshold(alpha_mask, t):
    return alpha_mask / math.sqrt(t)


def first_violation(base, utility, states, alpha_mask, eta):
    """First t whose prefix regret of QBR(base, eta) exceeds alpha_mask / sqrt(t)."""
    ledger = RegretLedger(utility, eta)
    stream = base.stream()
    for state in states:
        ledger.update(quantal_best_response(utility, stream.predict(), eta), state)
        stream.observe(state)
        if ledger.model_regret() > masking_threshold(alpha_mask, ledger.rounds):
            return ledger.rounds
    return None


def first_violation_from_scratch(base, utility, states, alpha_mask, eta):
    states = tuple(states)
    policies = [quantal_best_response(utility, base.predict(states[:s]), eta) for s in range(len(states))]
    for t in range(1, len(states) + 1):
        if external_regret(policies[:t], states[:t], utility) > masking_threshold(alpha_mask, t):
            return t
    return None


def generate_corpus(base, utility, alpha_mask, n_base, n_polya_target, length, seed,
                    budget=None, fixed_pool=False, stats=None):
    """Yields n_base base records, then Polya records kept by the masking rule.

    Polya draws continue until n_polya_target are kept or budget draws are
    spent. With fixed_pool exactly n_polya_target draws are filtered.
    """
    if alpha_mask <= 0:
        raise ValueError(f"alpha_mask must be positive, got {alpha_mask}")
    stats = stats if stats is not None else CorpusStats()
    stats.target = n_polya_target
    eta = 1.0 / math.sqrt(length)
    for i in range(n_base):
        stats.base += 1
        yield CorpusRecord(sample_sequence(base, length, seed, key=(BASE_KEY, i)), None, BASE)
    if fixed_pool:
        budget = n_polya_target
    elif budget is None:
        budget = DEFAULT_BUDGET_FACTOR * max(1, n_polya_target)
    polya = PolyaUrnModel(base.num_states)
    for j in range(budget):
        if not fixed_pool and stats.kept >= n_polya_target:
            break
        states = sample_sequence(polya, length, seed, key=(POLYA_KEY, j))
        stats.drawn += 1
        mask_from = first_violation(base, utility, states, alpha_mask, eta)
        if mask_from is None:
            continue
        stats.kept += 1
        stats.mask_from[mask_from] += 1
        yield CorpusRecord(states, mask_from, POLYA)
