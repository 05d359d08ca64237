"""Guessing order over a type class: rank functions and competitor-rank probability.

The decoder ranks candidate input sequences by their empirical conditional
entropy given the channel output and queries them in that order. The modified
rank of x given y is the total size of all entropy classes at or below the
class of x; the strict rank breaks ties lexicographically to get a bijection.

Tied entropy classes are merged using exact integer ordering keys (products of
c^c over joint-type cells), so equality of conditional entropies is decided
without floating-point ambiguity. Exact integer counting is used up to
``EXACT_BLOCKLENGTH_LIMIT``; beyond that a log-space path takes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .mot import (
    JointType,
    NType,
    Sequence,
    empirical_mi,
    enumerate_conditional_types,
    enumerate_reverse_cond_types,
    joint_type,
    log_shell_size,
    shell_size,
    type_class_size,
)

__all__ = [
    "EXACT_BLOCKLENGTH_LIMIT",
    "GuessRank",
    "RankProb",
    "ClassTable",
    "class_table",
    "guess_rank",
    "strict_guess_rank",
    "rank_prob",
    "rank_prob_bounds",
    "is_abandoned",
    "type_class_sequences",
]

# Blocklength up to which ranks and rank probabilities are carried as exact
# integers / rationals; above it the log-space path is used.
EXACT_BLOCKLENGTH_LIMIT = 64


@dataclass(frozen=True)
class GuessRank:
    """Modified (class-cumulative) rank of a sequence in the guessing order.

    ``rank`` is the exact integer count of sequences ranked no later than x;
    it is None beyond ``EXACT_BLOCKLENGTH_LIMIT``, where ``log_rank`` carries
    the value. ``abandoned`` is set when a guess budget was supplied.
    """

    rank: int | None
    log_rank: float
    class_entropy: float
    abandoned: bool | None = None


@dataclass(frozen=True)
class RankProb:
    """Probability that an independent uniform competitor from the type class
    ranks no later than x given y, with its Lemma-style sandwich bounds.

    ``numerator``/``denominator`` hold the exact rational value on the exact
    path and are None beyond ``EXACT_BLOCKLENGTH_LIMIT``.
    """

    numerator: int | None
    denominator: int | None
    value: float
    log_value: float
    lower_bound: float
    upper_bound: float


class ClassTable:
    """Entropy-ordered classes of joint types for one (composition, y-type) pair.

    Maps each compatible joint type to its merged-class cumulative rank, its
    log-rank, and its conditional entropy. Immutable after construction.
    """

    __slots__ = ("comp", "y_type", "include_all", "exact", "index", "rank",
                 "log_rank", "entropy", "total", "log_total")

    def __init__(self, comp: NType, y_type: NType, include_all: bool, exact: bool):
        self.comp = comp
        self.y_type = y_type
        self.include_all = include_all
        self.exact = exact
        if include_all:
            jts = enumerate_conditional_types(y_type, comp.k)
        else:
            jts = enumerate_reverse_cond_types(y_type, comp)

        if exact:
            # entropy descending in the key, so sort keys descending
            decorated = sorted(
                ((j.cond_entropy_key(), j) for j in jts), key=lambda t: t[0], reverse=True
            )
            sizes = [shell_size(j) for _, j in decorated]
        else:
            decorated = sorted(
                ((j.cond_entropy_given_output(), j) for j in jts), key=lambda t: t[0]
            )
            sizes = None

        self.index: dict[tuple, int] = {}
        self.rank: list[int] | None = [] if exact else None
        self.log_rank: list[float] = []
        self.entropy: list[float] = []

        i = 0
        cum = 0
        log_cum = -math.inf
        m = len(decorated)
        while i < m:
            # one merged class: a run of exactly equal ordering keys
            k0 = decorated[i][0]
            j_end = i
            while j_end < m and decorated[j_end][0] == k0:
                j_end += 1
            members = [decorated[t][1] for t in range(i, j_end)]
            if exact:
                cum += sum(sizes[t] for t in range(i, j_end))
                log_val = math.log(cum)
            else:
                for j in members:
                    log_cum = _logaddexp(log_cum, log_shell_size(j))
                log_val = log_cum
            h = members[0].cond_entropy_given_output()
            for j in members:
                self.index[j.counts] = len(self.entropy)
                if exact:
                    self.rank.append(cum)
                self.log_rank.append(log_val)
                self.entropy.append(h)
            i = j_end

        if exact:
            self.total = cum
            self.log_total = math.log(cum)
        else:
            self.total = None
            self.log_total = log_cum

    def lookup(self, j: JointType) -> int:
        idx = self.index.get(j.counts)
        if idx is None:
            raise ValueError(
                "joint type incompatible with this table "
                f"(composition {self.comp.counts}, y-type {self.y_type.counts})"
            )
        return idx


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


@lru_cache(maxsize=1024)
def _cached_table(comp: NType, y_type: NType, include_all: bool, exact: bool) -> ClassTable:
    return ClassTable(comp, y_type, include_all, exact)


def class_table(
    comp: NType,
    y_type: NType,
    *,
    include_all_compositions: bool = False,
    exact: bool | None = None,
) -> ClassTable:
    """Build (or fetch from cache) the entropy-class table for one pair of types."""
    if comp.n != y_type.n:
        raise ValueError(f"blocklength mismatch: {comp.n} != {y_type.n}")
    if exact is None:
        exact = comp.n <= EXACT_BLOCKLENGTH_LIMIT
    return _cached_table(comp, y_type, include_all_compositions, exact)


def _check_membership(x: Sequence, x_comp: NType) -> None:
    if x.type_of() != x_comp:
        raise ValueError(
            f"sequence has composition {x.type_of().counts}, expected {x_comp.counts}"
        )


def guess_rank(
    x: Sequence,
    y: Sequence,
    x_comp: NType,
    budget: int | None = None,
    *,
    include_all_compositions: bool = False,
    exact: bool | None = None,
) -> GuessRank:
    """Modified rank of x in the entropy-ordered guessing over the type class.

    The rank counts every sequence whose conditional entropy class given y is
    at or below the class of x. By default only sequences of the codebook
    composition are counted (the decoder queries nothing else); with
    ``include_all_compositions`` the count runs over all input sequences.
    """
    _check_membership(x, x_comp)
    if budget is not None and budget < 1:
        raise ValueError("guess budget must be >= 1")
    table = class_table(
        x_comp, y.type_of(), include_all_compositions=include_all_compositions, exact=exact
    )
    idx = table.lookup(joint_type(x, y))
    rank = table.rank[idx] if table.rank is not None else None
    log_rank = table.log_rank[idx]
    abandoned = None
    if budget is not None:
        abandoned = rank > budget if rank is not None else log_rank > math.log(budget)
    return GuessRank(rank=rank, log_rank=log_rank, class_entropy=table.entropy[idx],
                     abandoned=abandoned)


def _multiset_sequences(counts: list[int], n: int, alphabet: int):
    # lexicographic enumeration of all sequences with the given symbol counts
    if n == 0:
        yield ()
        return
    for a in range(alphabet):
        if counts[a] > 0:
            counts[a] -= 1
            for rest in _multiset_sequences(counts, n - 1, alphabet):
                yield (a,) + rest
            counts[a] += 1


def type_class_sequences(comp: NType, limit: int = 1 << 20) -> list[Sequence]:
    """All sequences of the given composition, in lexicographic order."""
    size = type_class_size(comp)
    if size > limit:
        raise ValueError(f"type class has {size} sequences, exceeding limit {limit}")
    return [
        Sequence(s, comp.k) for s in _multiset_sequences(list(comp.counts), comp.n, comp.k)
    ]


def strict_guess_rank(x: Sequence, y: Sequence, x_comp: NType) -> int:
    """Strict (bijective) rank: entropy order first, lexicographic within ties.

    Materializes the type class; intended for small blocklengths and for
    checking the guessing order, not for the simulation hot path.
    """
    _check_membership(x, x_comp)
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} != {y.n}")
    key_x = joint_type(x, y).cond_entropy_key()
    rank = 1
    for cand in type_class_sequences(x_comp):
        if cand.symbols == x.symbols:
            continue
        key_c = joint_type(cand, y).cond_entropy_key()
        # larger key means strictly smaller conditional entropy
        if key_c > key_x or (key_c == key_x and cand.symbols < x.symbols):
            rank += 1
    return rank


def rank_prob(
    x: Sequence,
    y: Sequence,
    x_comp: NType,
    *,
    exact: bool | None = None,
) -> RankProb:
    """Probability that a uniform competitor from the type class ranks no later.

    Equal to the modified rank of x divided by the type class size; computed by
    shell counting, never by sequence enumeration.
    """
    _check_membership(x, x_comp)
    if exact is None:
        exact = x.n <= EXACT_BLOCKLENGTH_LIMIT
    table = class_table(x_comp, y.type_of(), exact=exact)
    idx = table.lookup(joint_type(x, y))
    log_value = table.log_rank[idx] - table.log_total
    if table.rank is not None:
        num: int | None = table.rank[idx]
        den: int | None = table.total
        value = num / den if den < 1 << 53 else math.exp(math.log(num) - math.log(den))
    else:
        num = den = None
        value = math.exp(log_value)
    lower, upper = rank_prob_bounds(x, y)
    return RankProb(
        numerator=num,
        denominator=den,
        value=value,
        log_value=log_value,
        lower_bound=lower,
        upper_bound=upper,
    )


def rank_prob_bounds(x: Sequence, y: Sequence) -> tuple[float, float]:
    """Sandwich bounds on the competitor-rank probability.

    lower = (n+1)^(-2*|X||Y|) * exp(-n * Ihat),
    upper = (n+1)^(+3*|X||Y|) * exp(-n * Ihat),
    where Ihat is the empirical mutual information of (x, y).
    """
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} != {y.n}")
    n = x.n
    kxy = x.alphabet_size * y.alphabet_size
    n_ihat = n * empirical_mi(x, y)
    lower = math.exp(-2.0 * kxy * math.log(n + 1) - n_ihat)
    upper = math.exp(3.0 * kxy * math.log(n + 1) - n_ihat)
    return lower, upper


def is_abandoned(x: Sequence, y: Sequence, x_comp: NType, budget: int) -> bool:
    """True iff the modified rank of x given y exceeds the guess budget."""
    if budget < 1:
        raise ValueError("guess budget must be >= 1")
    return bool(guess_rank(x, y, x_comp, budget=budget).abandoned)
