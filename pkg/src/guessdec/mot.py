"""Method-of-types substrate: exact type/shell counting and information measures.

All information measures are in nats. Counting is exact integer arithmetic;
log-space companions (``log_type_class_size``, ``log_shell_size``) cover
blocklengths where exact integers become impractical.

Conventions: 0*ln(0) = 0 and 0*ln(0/0) = 0 throughout. Symbols are dense
indices 0..k-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Iterator

import numpy as np

__all__ = [
    "Pmf",
    "Channel",
    "NType",
    "JointType",
    "Sequence",
    "entropy",
    "cond_entropy",
    "mutual_info",
    "cond_kl",
    "joint_type",
    "empirical_entropy",
    "empirical_cond_entropy",
    "empirical_mi",
    "enumerate_types",
    "enumerate_reverse_cond_types",
    "enumerate_conditional_types",
    "type_class_size",
    "shell_size",
    "log_type_class_size",
    "log_shell_size",
]

_SUM_TOL = 1e-12


def _xlogx(v: float) -> float:
    return v * math.log(v) if v > 0.0 else 0.0


def _sorted_fsum(terms) -> float:
    # Canonical summation: sorting makes the float result invariant under
    # symbol permutations, so exactly tied entropies compare equal.
    return math.fsum(sorted(terms))


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over a finite alphabet 0..k-1."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) < 1:
            raise ValueError("Pmf needs at least one symbol")
        if any(p < -_SUM_TOL or p > 1.0 + _SUM_TOL for p in self.probs):
            raise ValueError(f"Pmf entries must lie in [0, 1]: {self.probs}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"Pmf entries sum to {total!r}, expected 1")
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(tuple(1.0 / k for _ in range(k)))

    @classmethod
    def of(cls, *probs: float) -> "Pmf":
        return cls(tuple(probs))

    @property
    def k(self) -> int:
        return len(self.probs)

    def __getitem__(self, a: int) -> float:
        return self.probs[a]

    def as_array(self) -> np.ndarray:
        return np.array(self.probs)

    def support(self) -> tuple[int, ...]:
        return tuple(a for a, p in enumerate(self.probs) if p > 0.0)


@dataclass(frozen=True)
class Channel:
    """Conditional distribution: one output Pmf per input symbol."""

    rows: tuple[Pmf, ...]

    def __post_init__(self):
        if len(self.rows) < 1:
            raise ValueError("Channel needs at least one input symbol")
        ky = self.rows[0].k
        if any(r.k != ky for r in self.rows):
            raise ValueError("all Channel rows must share one output alphabet")

    @classmethod
    def from_rows(cls, matrix) -> "Channel":
        return cls(tuple(Pmf(tuple(float(v) for v in row)) for row in matrix))

    @classmethod
    def bsc(cls, crossover: float) -> "Channel":
        return cls.from_rows([[1.0 - crossover, crossover], [crossover, 1.0 - crossover]])

    @classmethod
    def identity(cls, k: int) -> "Channel":
        return cls.from_rows([[1.0 if b == a else 0.0 for b in range(k)] for a in range(k)])

    @property
    def kx(self) -> int:
        return len(self.rows)

    @property
    def ky(self) -> int:
        return self.rows[0].k

    def row(self, a: int) -> Pmf:
        return self.rows[a]

    def as_array(self) -> np.ndarray:
        return np.array([r.probs for r in self.rows])

    def output_marginal(self, p: Pmf) -> Pmf:
        if p.k != self.kx:
            raise ValueError(f"input dimension mismatch: |X|={self.kx}, |p|={p.k}")
        out = [math.fsum(p[a] * self.rows[a][b] for a in range(self.kx)) for b in range(self.ky)]
        total = math.fsum(out)
        return Pmf(tuple(v / total for v in out))


@dataclass(frozen=True)
class NType:
    """Exact composition of a length-n sequence: integer symbol counts."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be positive")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        if sum(self.counts) != self.n:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected n={self.n}")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def k(self) -> int:
        return len(self.counts)

    def normalized(self) -> Pmf:
        return Pmf(tuple(c / self.n for c in self.counts))

    def entropy(self) -> float:
        """Entropy of the normalized type, computed canonically in nats."""
        return (_xlogx(float(self.n)) - _sorted_fsum(_xlogx(float(c)) for c in self.counts)) / self.n


@dataclass(frozen=True)
class JointType:
    """Exact joint composition of an (input, output) sequence pair.

    ``counts[a][b]`` is the number of positions i with x_i = a and y_i = b.
    """

    n: int
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be positive")
        flat = [c for row in self.counts for c in row]
        if any(c < 0 for c in flat):
            raise ValueError("counts must be nonnegative")
        if sum(flat) != self.n:
            raise ValueError(f"counts sum to {sum(flat)}, expected n={self.n}")
        object.__setattr__(self, "counts", tuple(tuple(int(c) for c in row) for row in self.counts))

    @property
    def kx(self) -> int:
        return len(self.counts)

    @property
    def ky(self) -> int:
        return len(self.counts[0])

    def row_marginal(self) -> NType:
        """Type of the input sequence."""
        return NType(self.n, tuple(sum(row) for row in self.counts))

    def col_marginal(self) -> NType:
        """Type of the output sequence."""
        return NType(self.n, tuple(sum(row[b] for row in self.counts) for b in range(self.ky)))

    def cond_entropy_given_output(self) -> float:
        """Conditional entropy of the input given the output, in nats.

        Computed canonically so permuted-but-identical count multisets give
        bit-identical floats.
        """
        cols = [sum(row[b] for row in self.counts) for b in range(self.ky)]
        a = _sorted_fsum(_xlogx(float(l)) for l in cols)
        b = _sorted_fsum(_xlogx(float(c)) for row in self.counts for c in row)
        return (a - b) / self.n

    def cond_entropy_key(self) -> int:
        """Exact integer ordering key for the conditional entropy given the output.

        For fixed column marginals, H is strictly decreasing in this key, and
        two joint types have exactly equal H iff their keys are equal. Used to
        merge tied entropy classes without floating-point ambiguity.
        """
        key = 1
        for row in self.counts:
            for c in row:
                if c > 1:
                    key *= c**c
        return key


@dataclass(frozen=True)
class Sequence:
    """A length-n vector of symbol indices over a declared alphabet."""

    symbols: tuple[int, ...]
    alphabet_size: int

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise ValueError("sequence must have length >= 1")
        if self.alphabet_size < 1:
            raise ValueError("alphabet size must be positive")
        if any(not (0 <= s < self.alphabet_size) for s in self.symbols):
            raise ValueError("symbol index out of range")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @classmethod
    def of(cls, symbols, alphabet_size: int) -> "Sequence":
        return cls(tuple(int(s) for s in symbols), alphabet_size)

    @property
    def n(self) -> int:
        return len(self.symbols)

    def type_of(self) -> NType:
        counts = [0] * self.alphabet_size
        for s in self.symbols:
            counts[s] += 1
        return NType(self.n, tuple(counts))


# ---------------------------------------------------------------------------
# distributional information measures


def entropy(p: Pmf) -> float:
    """Shannon entropy in nats."""
    return -_sorted_fsum(_xlogx(v) for v in p.probs)


def cond_entropy(v: Channel, p: Pmf) -> float:
    """Conditional output entropy H(V|P) = sum_a p(a) H(v(.|a)), in nats."""
    if p.k != v.kx:
        raise ValueError(f"input dimension mismatch: |X|={v.kx}, |p|={p.k}")
    return _sorted_fsum(p[a] * entropy(v.row(a)) for a in range(v.kx))


def mutual_info(p: Pmf, v: Channel) -> float:
    """Mutual information I(P, V) in nats."""
    return entropy(v.output_marginal(p)) - cond_entropy(v, p)


def cond_kl(v: Channel, w: Channel, p: Pmf) -> float:
    """Conditional KL divergence D(V || W | P) in nats, possibly +inf.

    Infinite when v places mass where w has none on an input with p(a) > 0.
    """
    if v.kx != w.kx or v.ky != w.ky:
        raise ValueError("channel dimension mismatch")
    if p.k != v.kx:
        raise ValueError(f"input dimension mismatch: |X|={v.kx}, |p|={p.k}")
    terms = []
    for a in range(v.kx):
        if p[a] <= 0.0:
            continue
        for b in range(v.ky):
            vb = v.rows[a][b]
            if vb <= 0.0:
                continue
            wb = w.rows[a][b]
            if wb <= 0.0:
                return math.inf
            terms.append(p[a] * vb * math.log(vb / wb))
    return max(0.0, math.fsum(terms))


# ---------------------------------------------------------------------------
# empirical measures


def joint_type(x: Sequence, y: Sequence) -> JointType:
    """Joint composition of a pair of equal-length sequences."""
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} != {y.n}")
    counts = [[0] * y.alphabet_size for _ in range(x.alphabet_size)]
    for a, b in zip(x.symbols, y.symbols):
        counts[a][b] += 1
    return JointType(x.n, tuple(tuple(row) for row in counts))


def empirical_entropy(x: Sequence) -> float:
    """Entropy of the type of x, in nats."""
    return x.type_of().entropy()


def empirical_cond_entropy(x: Sequence, y: Sequence) -> float:
    """Empirical conditional entropy of x given y, in nats."""
    return joint_type(x, y).cond_entropy_given_output()


def empirical_mi(x: Sequence, y: Sequence) -> float:
    """Empirical mutual information between x and y, in nats.

    Satisfies the chain rule against ``empirical_entropy`` and
    ``empirical_cond_entropy`` by construction.
    """
    return empirical_entropy(x) - empirical_cond_entropy(x, y)


# ---------------------------------------------------------------------------
# enumeration


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_types(n: int, k: int) -> list[NType]:
    """All n-types over an alphabet of size k (compositions of n into k parts)."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    return [NType(n, c) for c in _compositions(n, k)]


def _tables_with_margins(rows: tuple[int, ...], cols: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    # All nonnegative integer matrices with the given row and column sums.
    if len(rows) == 1:
        yield (cols,)
        return
    r0 = rows[0]
    ranges = [range(min(r0, c) + 1) for c in cols]
    for first in product(*ranges):
        if sum(first) != r0:
            continue
        rest_cols = tuple(c - f for c, f in zip(cols, first))
        for rest in _tables_with_margins(rows[1:], rest_cols):
            yield (first,) + rest


def enumerate_reverse_cond_types(y_type: NType, x_comp: NType) -> list[JointType]:
    """All joint types with output marginal ``y_type`` and input marginal ``x_comp``.

    These index exactly the shells of sequences from the x_comp type class that
    are compatible with an output sequence of type ``y_type``.
    """
    if y_type.n != x_comp.n:
        raise ValueError(f"blocklength mismatch: {y_type.n} != {x_comp.n}")
    return [
        JointType(x_comp.n, table)
        for table in _tables_with_margins(x_comp.counts, y_type.counts)
    ]


def enumerate_conditional_types(y_type: NType, kx: int) -> list[JointType]:
    """All joint types with output marginal ``y_type`` and any input marginal.

    Indexes every nonempty shell of a sequence with type ``y_type``, without
    restricting the input composition.
    """
    col_choices = [list(_compositions(l, kx)) for l in y_type.counts]
    out = []
    for cols in product(*col_choices):
        counts = tuple(tuple(cols[b][a] for b in range(y_type.k)) for a in range(kx))
        out.append(JointType(y_type.n, counts))
    return out


# ---------------------------------------------------------------------------
# exact and log-space counting


def _multinomial(total: int, parts) -> int:
    out = 1
    rem = total
    for c in parts:
        out *= math.comb(rem, c)
        rem -= c
    return out


def _log_multinomial(total: int, parts) -> float:
    return math.lgamma(total + 1) - math.fsum(math.lgamma(c + 1) for c in parts)


def type_class_size(t: NType) -> int:
    """Exact number of length-n sequences with type t (a multinomial coefficient)."""
    return _multinomial(t.n, t.counts)


def log_type_class_size(t: NType) -> float:
    """Natural log of ``type_class_size`` without big-integer arithmetic."""
    return _log_multinomial(t.n, t.counts)


def shell_size(j: JointType) -> int:
    """Exact number of x-sequences in the shell of j given a fixed output sequence.

    Conditioning is on the output side: the count is a product over output
    symbols b of the multinomial coefficient of column b.
    """
    out = 1
    for b in range(j.ky):
        col = [j.counts[a][b] for a in range(j.kx)]
        out *= _multinomial(sum(col), col)
    return out


def log_shell_size(j: JointType) -> float:
    """Natural log of ``shell_size`` without big-integer arithmetic."""
    total = 0.0
    for b in range(j.ky):
        col = [j.counts[a][b] for a in range(j.kx)]
        total += _log_multinomial(sum(col), col)
    return total
