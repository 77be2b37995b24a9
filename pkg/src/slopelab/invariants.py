"""Determinant invariants and witness search for tensor points.

A rank-one subspace of a tensor product is semistable exactly when some
product of determinant contractions, precomposed with a permutation of
tensor slots, does not vanish on it.  At desk scale that map can be
evaluated directly on coordinates, so semistability certificates are
concrete nonzero rationals rather than abstract invariant polynomials.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .exactnum import LogValue, log_of, rat_to_str
from .gitstab import TensorPoint

BUDGET_EXCEEDED = "budget"


@dataclass(frozen=True)
class WitnessInvariant:
    """A nonvanishing composed contraction certifying semistability.

    ``alphas`` lists the component mapping chosen for each of the m*D
    copies of the point; ``sigma`` holds one slot permutation per tensor
    factor; ``value`` is the (nonzero) evaluation on the generator.
    """

    D: int
    alphas: Tuple[Tuple[int, ...], ...]
    sigma: Tuple[Tuple[int, ...], ...]
    value: Fraction

    def __post_init__(self) -> None:
        if self.D < 1:
            raise ValueError("D must be positive")
        if self.value == 0:
            raise ValueError("a witness evaluation must be nonzero")
        if not self.alphas:
            raise ValueError("at least one copy is required")
        n = len(self.alphas[0])
        if len(self.sigma) != n:
            raise ValueError("one slot permutation per tensor factor required")
        for i, perm in enumerate(self.sigma):
            total = sum(alpha[i] for alpha in self.alphas)
            if sorted(perm) != list(range(total)):
                raise ValueError("sigma must permute the slots of each factor")

    def to_json(self) -> dict:
        return {
            "D": self.D,
            "alphas": [list(a) for a in self.alphas],
            "sigma": [list(p) for p in self.sigma],
            "value": rat_to_str(self.value),
        }


def det_tensor(d: int) -> Tuple[TensorPoint, LogValue]:
    """The determinant element of (H^dual)^(x)d for an orthonormal basis,
    together with its Hermitian norm.

    The element is the sum of d! pairwise orthogonal unit tensors
    sign(s) e_{s(1)} (x) ... (x) e_{s(d)}, so the norm is sqrt(d!) and
    its logarithm is exactly half of log(d!).
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    coords: Dict[Tuple[int, ...], Fraction] = {}
    for perm in itertools.permutations(range(d)):
        inversions = sum(
            1 for a in range(d) for b in range(a + 1, d) if perm[a] > perm[b]
        )
        coords[perm] = Fraction(-1 if inversions % 2 else 1)
    norm = log_of(Fraction(math.factorial(d)), Fraction(1, 2))
    return TensorPoint.from_map((d,) * d, coords), norm


# ---------------------------------------------------------------------------
# witness search


def _block_partitions(slots: Tuple[int, ...], size: int) -> Iterator[Tuple[int, ...]]:
    """Flattened partitions of the slots into unordered blocks of the
    given size, each block sorted and blocks ordered by first element.

    Each partition is a canonical coset representative: reordering
    within a block or permuting whole blocks changes the evaluation at
    most by sign, so scanning representatives decides nonvanishing.
    """
    if not slots:
        yield ()
        return
    first = slots[0]
    rest = slots[1:]
    for others in itertools.combinations(rest, size - 1):
        block = (first,) + others
        remaining = tuple(s for s in rest if s not in others)
        for tail in _block_partitions(remaining, size):
            yield block + tail


def _sign_of_block(indices: Sequence[int]) -> int:
    r = len(indices)
    if sorted(indices) != list(range(r)):
        return 0
    sign = 1
    seen = list(indices)
    for a in range(r):
        for b in range(a + 1, r):
            if seen[a] > seen[b]:
                sign = -sign
    return sign


def _evaluate(
    supports: Sequence[Sequence[Tuple[Tuple[int, ...], Fraction]]],
    slot_of: Sequence[Sequence[Tuple[int, int]]],
    sigma: Sequence[Sequence[int]],
    ranks: Sequence[int],
) -> Fraction:
    """Evaluate the composed map on the chosen copies.

    supports[j] lists the (index, coefficient) pairs of copy j; the
    copy's index tuple feeds the slots listed in slot_of[j] as pairs
    (factor, slot).  After permuting each factor's slots with sigma,
    consecutive blocks of rank size contract against the sign tensor.
    """
    total = Fraction(0)
    n = len(ranks)
    for assignment in itertools.product(*supports):
        coeff = Fraction(1)
        filled: List[List[int]] = [[0] * len(sigma[i]) for i in range(n)]
        for j, (idx, val) in enumerate(assignment):
            coeff *= val
            for (factor, slot), entry in zip(slot_of[j], idx):
                filled[factor][slot] = entry
        term = coeff
        for i in range(n):
            perm = sigma[i]
            r = ranks[i]
            reordered = [filled[i][perm[t]] for t in range(len(perm))]
            for k in range(0, len(reordered), r):
                s = _sign_of_block(reordered[k : k + r])
                term *= s
                if s == 0:
                    break
            if term == 0:
                break
        total += term
    return total


def invariant_witness_search(
    x: Union[TensorPoint, Dict[Tuple[int, ...], TensorPoint]],
    b: Sequence[int],
    m: int,
    D_max: int,
    budget: int = 200_000,
    ranks: Optional[Sequence[int]] = None,
) -> Union[WitnessInvariant, None, str]:
    """Search for a nonvanishing composed determinant contraction.

    ``x`` is the point: a single TensorPoint for the plain tensor
    product (one slot per factor), or a mapping exponent vector ->
    component point for a direct sum over an alphabet of exponents.  For
    D = 1..D_max the search enumerates copy families (alpha_j) with slot
    counts D*b_i*r_i per factor, then canonical slot partitions, and
    returns the first nonzero evaluation.  Exhaustion returns None;
    exceeding the evaluation budget returns BUDGET_EXCEEDED instead,
    since a truncated scan is inconclusive.
    """
    if m < 1 or D_max < 1:
        raise ValueError("m and D_max must be positive")
    if isinstance(x, TensorPoint):
        components = {(1,) * len(x.shape): x}
    else:
        components = dict(x)
    if not components:
        raise ValueError("at least one component is required")
    n = len(next(iter(components)))
    if len(b) != n:
        raise ValueError("one twist per factor required")
    for alpha, comp in components.items():
        if len(alpha) != n or any(a < 0 for a in alpha):
            raise ValueError("component exponents must be nonnegative")
        if len(comp.shape) != sum(alpha):
            raise ValueError("component shape does not match its exponent")
    if ranks is None:
        found: List[Optional[int]] = [None] * n
        for alpha, comp in components.items():
            pos = 0
            for i in range(n):
                for _ in range(alpha[i]):
                    if found[i] is None:
                        found[i] = comp.shape[pos]
                    pos += 1
        # a factor absent from every component contributes no slots
        ranks = [r if r is not None else 1 for r in found]
    ranks = list(ranks)
    for alpha, comp in components.items():
        want = tuple(
            r for i, r in enumerate(ranks) for _ in range(alpha[i])
        )
        if comp.shape != want:
            raise ValueError("component shape does not match its exponent")
    alphabet = sorted(components)

    spent = 0
    for D in range(1, D_max + 1):
        targets = [D * b[i] * ranks[i] for i in range(n)]
        if any(t < 0 or t % ranks[i] for i, t in enumerate(targets)):
            continue
        for family in itertools.combinations_with_replacement(alphabet, m * D):
            if any(
                sum(alpha[i] for alpha in family) != targets[i] for i in range(n)
            ):
                continue
            # slot layout: copy j feeds its indices into per-factor slots
            counters = [0] * n
            slot_of: List[List[Tuple[int, int]]] = []
            for alpha in family:
                pairs = []
                for i in range(n):
                    for _ in range(alpha[i]):
                        pairs.append((i, counters[i]))
                        counters[i] += 1
                slot_of.append(pairs)
            supports = [list(components[alpha].coords) for alpha in family]
            terms = 1
            for sup in supports:
                terms *= len(sup)
            partitions = [
                list(_block_partitions(tuple(range(targets[i])), ranks[i]))
                for i in range(n)
            ]
            combos = 1
            for p in partitions:
                combos *= len(p)
            if spent + combos * terms > budget:
                return BUDGET_EXCEEDED
            spent += combos * terms
            for sigma in itertools.product(*partitions):
                value = _evaluate(supports, slot_of, sigma, ranks)
                if value != 0:
                    return WitnessInvariant(
                        D, tuple(family), tuple(sigma), value
                    )
    return None


def semistable_degree_bound(
    mu_list: Sequence[Tuple[LogValue, int]], b: Sequence[int], m: int
) -> LogValue:
    """The degree bound sum_i (b_i/m) (slope_i + log(rank_i)/2) for a
    line subbundle of the twisted tensor product with semistable generic
    fiber."""
    if m < 1:
        raise ValueError("m must be positive")
    if len(mu_list) != len(b):
        raise ValueError("one twist per factor required")
    total = LogValue.zero()
    for (mu, rank), b_i in zip(mu_list, b):
        if rank < 1:
            raise ValueError("ranks must be positive")
        term = mu + log_of(Fraction(rank), Fraction(1, 2))
        total = total + term.scaled(Fraction(b_i, m))
    return total
