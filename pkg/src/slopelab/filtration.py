"""Decreasing filtrations of rational vector spaces with rational jumps.

A filtration is stored as its flag of distinct subspaces together with
the strictly increasing jump values: V = V_0 > V_1 > ... > V_d = 0 with
jumps l_0 < ... < l_{d-1}, where F_l V is the union of the V_i with
l_i >= l.  Flags keep canonical reduced-echelon bases so that equality
of filtrations is plain structural equality.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import linalg as la
from .exactnum import AlgValue, rat_from_str, rat_to_str

Rows = Tuple[Tuple[Fraction, ...], ...]


def _freeze(rows: la.Matrix) -> Rows:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


@dataclass(frozen=True)
class Filtration:
    dim: int
    jumps: Tuple[Fraction, ...]
    flag: Tuple[Rows, ...]  # proper members V_1 > ... > V_{d-1}

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("filtration needs a positive dimension")
        if not self.jumps:
            raise ValueError("at least one jump required")
        if any(b <= a for a, b in zip(self.jumps, self.jumps[1:])):
            raise ValueError("jumps must be strictly increasing")
        if len(self.flag) != len(self.jumps) - 1:
            raise ValueError("flag must list one member per jump after the first")
        prev_rows: Optional[la.Matrix] = None
        prev_dim = self.dim
        for member in self.flag:
            rows = [list(r) for r in member]
            if any(len(r) != self.dim for r in rows):
                raise ValueError("flag member of wrong ambient dimension")
            canon, _piv = la.rref(rows)
            if _freeze(canon) != member:
                raise ValueError("flag members must be canonical echelon bases")
            if not 0 < len(rows) < prev_dim:
                raise ValueError("flag ranks must strictly decrease and stay proper")
            if prev_rows is not None:
                cr, cp = la.rref(prev_rows)
                for row in rows:
                    if not la.row_space_contains(cr, cp, row):
                        raise ValueError("flag members must be nested")
            prev_rows, prev_dim = rows, len(rows)

    @property
    def depth(self) -> int:
        return len(self.jumps)

    def member_rows(self, i: int) -> la.Matrix:
        """Basis rows of V_i; V_0 is the whole space, V_depth is zero."""
        if i <= 0:
            return [[Fraction(int(a == b)) for b in range(self.dim)] for a in range(self.dim)]
        if i >= self.depth:
            return []
        return [list(r) for r in self.flag[i - 1]]

    def member_dim(self, i: int) -> int:
        if i <= 0:
            return self.dim
        if i >= self.depth:
            return 0
        return len(self.flag[i - 1])

    def multiplicities(self) -> Tuple[int, ...]:
        return tuple(
            self.member_dim(i) - self.member_dim(i + 1) for i in range(self.depth)
        )

    @property
    def is_trivial(self) -> bool:
        return self.depth == 1 and self.jumps[0] == 0

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "jumps": [rat_to_str(x) for x in self.jumps],
            "flag": [
                [[rat_to_str(x) for x in row] for row in member]
                for member in self.flag
            ],
        }

    @staticmethod
    def from_json(payload: dict) -> "Filtration":
        jumps = [rat_from_str(str(x)) for x in payload["jumps"]]
        flag = [
            [[rat_from_str(str(x)) for x in row] for row in member]
            for member in payload["flag"]
        ]
        return make(int(payload["dim"]), flag, jumps)


@dataclass(frozen=True)
class FiltrationTuple:
    components: Tuple[Filtration, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("a filtration tuple needs at least one component")

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(F.dim for F in self.components)

    def to_json(self) -> list:
        return [F.to_json() for F in self.components]

    @staticmethod
    def from_json(payload: list) -> "FiltrationTuple":
        return FiltrationTuple(tuple(Filtration.from_json(p) for p in payload))


@dataclass(frozen=True)
class CompatibleBasis:
    vectors: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.vectors)
        if n == 0 or any(len(v) != n for v in self.vectors):
            raise ValueError("basis must be square")
        if la.rank([list(v) for v in self.vectors]) != n:
            raise ValueError("basis vectors must be independent")


# ---------------------------------------------------------------------------
# construction


def make(dim: int, flag, jumps) -> Filtration:
    """Validated filtration from proper flag members V_1, ..., V_{d-1}.

    Flag bases may be any spanning rows; they are put in canonical
    echelon form here.
    """
    jumps = tuple(Fraction(x) for x in jumps)
    canon = []
    for member in flag:
        rows, _ = la.rref(la.frac_rows([list(r) for r in member]))
        canon.append(_freeze(rows))
    return Filtration(dim, jumps, tuple(canon))


def trivial(dim: int) -> Filtration:
    return Filtration(dim, (Fraction(0),), ())


def from_weighted_basis(vectors, weights) -> Filtration:
    """Filtration whose value at each basis vector is the given weight."""
    vecs = la.frac_rows([list(v) for v in vectors])
    ws = [Fraction(w) for w in weights]
    n = len(vecs)
    if len(ws) != n or (n and len(vecs[0]) != n):
        raise ValueError("need a square basis with one weight per vector")
    if la.rank(vecs) != n:
        raise ValueError("vectors must form a basis")
    jumps = sorted(set(ws))
    flag = []
    for lam in jumps[1:]:
        rows = [vecs[t] for t in range(n) if ws[t] >= lam]
        flag.append([list(r) for r in rows])
    return make(n, flag, jumps)


# ---------------------------------------------------------------------------
# evaluation


def expectation(F: Filtration) -> Fraction:
    total = sum(
        Fraction(m) * lam for m, lam in zip(F.multiplicities(), F.jumps)
    )
    return total / F.dim


def lambda_of(F: Filtration, v: Sequence) -> "Fraction | float":
    """Largest jump whose member contains v; +infinity at the origin."""
    vec = [Fraction(x) for x in v]
    if len(vec) != F.dim:
        raise ValueError("vector dimension mismatch")
    if all(x == 0 for x in vec):
        return math.inf
    for i in range(F.depth - 1, 0, -1):
        rows, piv = la.rref(F.member_rows(i))
        if la.row_space_contains(rows, piv, vec):
            return F.jumps[i]
    return F.jumps[0]


def dilate(F: Filtration, eps) -> Filtration:
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("dilation factor must be positive")
    return Filtration(F.dim, tuple(eps * l for l in F.jumps), F.flag)


# ---------------------------------------------------------------------------
# adapted bases, sums, tensors


def _extend(base: la.Matrix, candidates: la.Matrix) -> la.Matrix:
    """Rows of candidates that greedily enlarge the span of base."""
    picked: la.Matrix = []
    rk = la.rank(base) if base else 0
    for cand in candidates:
        trial = base + picked + [list(cand)]
        if la.rank(trial) == rk + len(picked) + 1:
            picked.append(list(cand))
    return picked


def adapted_basis(F: Filtration) -> List[Tuple[Tuple[Fraction, ...], Fraction]]:
    """Deterministic compatible basis listed deepest member first,
    paired with the filtration value of each vector."""
    acc: la.Matrix = []
    out: List[Tuple[Tuple[Fraction, ...], Fraction]] = []
    for i in range(F.depth - 1, -1, -1):
        for row in _extend(acc, F.member_rows(i)):
            out.append((tuple(row), F.jumps[i]))
            acc.append(row)
    assert len(acc) == F.dim
    return out


def direct_sum(parts: Sequence[Filtration]) -> Filtration:
    if not parts:
        raise ValueError("direct sum of an empty list")
    total = sum(F.dim for F in parts)
    vecs, ws = [], []
    offset = 0
    for F in parts:
        for v, w in adapted_basis(F):
            vecs.append(
                [Fraction(0)] * offset + list(v) + [Fraction(0)] * (total - offset - F.dim)
            )
            ws.append(w)
        offset += F.dim
    return from_weighted_basis(vecs, ws)


def tensor(parts: Sequence[Filtration]) -> Filtration:
    """Tensor product filtration; on a product compatible basis the value
    of a pure tensor is the sum of the component values."""
    if not parts:
        raise ValueError("tensor of an empty list")
    vecs = [[Fraction(1)]]
    ws = [Fraction(0)]
    for F in parts:
        base = adapted_basis(F)
        vecs = [
            [x * y for x in v for y in list(u)] for v in vecs for u, _ in base
        ]
        ws = [w + a for w in ws for _, a in base]
    return from_weighted_basis(vecs, ws)


# ---------------------------------------------------------------------------
# compatible bases for pairs, scalar product


def common_compatible_basis(
    F: Filtration, G: Filtration, rng: Optional[random.Random] = None
) -> CompatibleBasis:
    """Basis compatible with both flags at once.

    Works cell by cell on the intersections T_ij = V_i meet W_j: by
    modularity T_{i+1,j} + T_{i,j+1} sits inside T_ij with codimension
    equal to the cell count, and any complement basis works, so choices
    stay local.  Deterministic by default; an rng mixes each cell's
    candidate rows (the result is still verified compatible).
    """
    if F.dim != G.dim:
        raise ValueError("dimension mismatch")
    n = F.dim
    inter = {}
    for i in range(F.depth + 1):
        for j in range(G.depth + 1):
            inter[(i, j)] = la.intersect_row_spaces(F.member_rows(i), G.member_rows(j))
    chosen: List[List[Fraction]] = []
    cells = sorted(
        ((i, j) for i in range(F.depth) for j in range(G.depth)),
        key=lambda ij: (-(ij[0] + ij[1]), -ij[0]),
    )
    for i, j in cells:
        target = inter[(i, j)]
        below = la.sum_row_spaces(inter[(i + 1, j)], inter[(i, j + 1)])
        count = len(target) - len(below)
        if count == 0:
            continue
        cands = [list(r) for r in target]
        if rng is not None:
            mixed = None
            while mixed is None:
                M = [
                    [Fraction(rng.randrange(-2, 3)) for _ in range(len(cands))]
                    for _ in range(len(cands))
                ]
                if la.det(M) != 0:
                    mixed = la.mat_mul(M, cands)
            cands = mixed
        picked = _extend(below, cands)
        assert len(picked) == count
        chosen.extend(picked)
    basis = CompatibleBasis(_freeze(chosen))
    assert is_compatible(F, basis) and is_compatible(G, basis)
    return basis


def is_compatible(F: Filtration, basis: CompatibleBasis) -> bool:
    if len(basis.vectors) != F.dim:
        return False
    for i in range(1, F.depth):
        rows, piv = la.rref(F.member_rows(i))
        inside = sum(
            1 for v in basis.vectors if la.row_space_contains(rows, piv, list(v))
        )
        if inside != F.member_dim(i):
            return False
    return True


def scalar_product(F: Filtration, G: Filtration) -> Fraction:
    """(1/r) sum of lambda_F(e) lambda_G(e) over a common compatible
    basis; independent of the basis choice."""
    basis = common_compatible_basis(F, G)
    total = Fraction(0)
    for v in basis.vectors:
        total += lambda_of(F, v) * lambda_of(G, v)
    return total / F.dim


def norm_squared(F: Filtration) -> Fraction:
    total = sum(
        Fraction(m) * lam * lam for m, lam in zip(F.multiplicities(), F.jumps)
    )
    return total / F.dim


def norm(F: Filtration) -> AlgValue:
    return AlgValue.sqrt_of(norm_squared(F))


# ---------------------------------------------------------------------------
# coordinates along a compatible basis


def coordinates(F: Filtration, basis: CompatibleBasis) -> Tuple[Fraction, ...]:
    if not is_compatible(F, basis):
        raise ValueError("basis is not compatible with the filtration")
    return tuple(lambda_of(F, v) for v in basis.vectors)


def from_coordinates(basis: CompatibleBasis, values) -> Filtration:
    return from_weighted_basis([list(v) for v in basis.vectors], values)


# ---------------------------------------------------------------------------
# assembly from subquotient filtrations


def assemble_from_subquotients(F: Filtration, blocks: Sequence[Filtration]) -> Filtration:
    """Filtration on the whole space induced by filtrations on the
    successive subquotients V_j / V_{j+1} of F.

    Block j must be expressed in the coordinates of the adapted basis
    vectors of F at level j (see adapted_basis; vectors at jump value
    F.jumps[j] project to a basis of the subquotient).  The expectation
    and the pairing against F then satisfy exact weighted-average
    identities, asserted here.
    """
    if len(blocks) != F.depth:
        raise ValueError("need exactly one block per flag step")
    mults = F.multiplicities()
    by_level: List[List[Tuple[Fraction, ...]]] = [[] for _ in range(F.depth)]
    for vec, w in adapted_basis(F):
        by_level[F.jumps.index(w)].append(vec)
    vecs, ws = [], []
    for j, block in enumerate(blocks):
        if block.dim != mults[j]:
            raise ValueError("block dimension must match the subquotient rank")
        level = by_level[j]
        for u, w in adapted_basis(block):
            lifted = [Fraction(0)] * F.dim
            for t, coef in enumerate(u):
                for c in range(F.dim):
                    lifted[c] += coef * level[t][c]
            vecs.append(lifted)
            ws.append(w)
    G = from_weighted_basis(vecs, ws)
    expect = sum(
        expectation(block) * m for block, m in zip(blocks, mults)
    ) / F.dim
    assert expectation(G) == expect
    pair = sum(
        lam * expectation(block) * m
        for lam, block, m in zip(F.jumps, blocks, mults)
    ) / F.dim
    assert scalar_product(F, G) == pair
    return G
