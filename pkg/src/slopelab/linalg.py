"""Exact linear algebra over Fraction entries and integer matrices.

Matrices are lists of row lists.  Everything here is elementary but
exact: no floating point enters any routine, so callers can build
certified comparisons on top of the results.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import gcd, isqrt
from typing import List, Optional, Sequence, Tuple

Matrix = List[List[Fraction]]
Vector = List[Fraction]


class SingularMatrixError(ValueError):
    pass


def frac_rows(rows) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(m: int, n: int) -> Matrix:
    return [[Fraction(0)] * n for _ in range(m)]


def transpose(M: Sequence[Sequence]) -> list:
    return [list(col) for col in zip(*M)] if M else []


def mat_mul(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def mat_vec(A: Sequence[Sequence], v: Sequence) -> Vector:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def vec_dot(u: Sequence, v: Sequence) -> Fraction:
    return sum(a * b for a, b in zip(u, v))


def mat_eq(A, B) -> bool:
    return len(A) == len(B) and all(list(r) == list(s) for r, s in zip(A, B))


def det(M: Sequence[Sequence]) -> Fraction:
    """Determinant by exact Gaussian elimination."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    W = frac_rows(M)
    result = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if W[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            W[c], W[pivot] = W[pivot], W[c]
            result = -result
        result *= W[c][c]
        inv = 1 / W[c][c]
        for r in range(c + 1, n):
            if W[r][c] != 0:
                f = W[r][c] * inv
                W[r] = [a - f * b for a, b in zip(W[r], W[c])]
    return result


def inverse(M: Sequence[Sequence]) -> Matrix:
    n = len(M)
    W = [list(row) + ident for row, ident in zip(frac_rows(M), identity(n))]
    for c in range(n):
        pivot = next((r for r in range(c, n) if W[r][c] != 0), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        W[c], W[pivot] = W[pivot], W[c]
        inv = 1 / W[c][c]
        W[c] = [a * inv for a in W[c]]
        for r in range(n):
            if r != c and W[r][c] != 0:
                f = W[r][c]
                W[r] = [a - f * b for a, b in zip(W[r], W[c])]
    return [row[n:] for row in W]


def solve_square(A: Sequence[Sequence], b: Sequence) -> Vector:
    n = len(A)
    W = [list(row) + [Fraction(x)] for row, x in zip(frac_rows(A), b)]
    for c in range(n):
        pivot = next((r for r in range(c, n) if W[r][c] != 0), None)
        if pivot is None:
            raise SingularMatrixError("system is singular")
        W[c], W[pivot] = W[pivot], W[c]
        inv = 1 / W[c][c]
        W[c] = [a * inv for a in W[c]]
        for r in range(n):
            if r != c and W[r][c] != 0:
                f = W[r][c]
                W[r] = [a - f * b_ for a, b_ in zip(W[r], W[c])]
    return [W[r][n] for r in range(n)]


def rref(M: Sequence[Sequence]) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form with zero rows dropped.

    The result is the canonical representation of the row space, so two
    subspaces are equal iff their rref rows are equal.
    """
    if not M:
        return [], []
    W = frac_rows(M)
    rows, cols = len(W), len(W[0])
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if W[i][c] != 0), None)
        if pivot is None:
            continue
        W[r], W[pivot] = W[pivot], W[r]
        inv = 1 / W[r][c]
        W[r] = [a * inv for a in W[r]]
        for i in range(rows):
            if i != r and W[i][c] != 0:
                f = W[i][c]
                W[i] = [a - f * b for a, b in zip(W[i], W[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return W[:r], pivots


def rank(M: Sequence[Sequence]) -> int:
    return len(rref(M)[0])


def kernel(M: Sequence[Sequence], ncols: Optional[int] = None) -> Matrix:
    """Canonical basis (rref rows) of {x : M x = 0} as row vectors."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    R, pivots = rref(M) if M else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R[i][f]
        basis.append(v)
    return rref(basis)[0] if basis else []


def row_space_contains(R: Matrix, pivots: List[int], v: Sequence) -> bool:
    """Membership of v in the row space given its rref representation."""
    w = [Fraction(x) for x in v]
    for row, p in zip(R, pivots):
        if w[p] != 0:
            f = w[p]
            w = [a - f * b for a, b in zip(w, row)]
    return all(x == 0 for x in w)


def sum_row_spaces(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    return rref(list(A) + list(B))[0]


def intersect_row_spaces(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    """Canonical basis of rowspace(A) /\\ rowspace(B).

    A vector in the intersection is y·A = z·B; the pairs (y, z) form the
    kernel of [A^T | -B^T].
    """
    A = rref(A)[0]
    B = rref(B)[0]
    if not A or not B:
        return []
    ncols = len(A[0])
    stacked = [
        [A[i][c] for i in range(len(A))] + [-B[j][c] for j in range(len(B))]
        for c in range(ncols)
    ]
    combos = kernel(stacked, len(A) + len(B))
    vecs = []
    for combo in combos:
        y = combo[: len(A)]
        vecs.append([vec_dot(y, [A[i][c] for i in range(len(A))]) for c in range(ncols)])
    return rref(vecs)[0] if vecs else []


def kron(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    if not A or not B:
        return []
    out = []
    for arow in A:
        for brow in B:
            out.append([a * b for a in arow for b in brow])
    return out


def k_subsets(n: int, k: int) -> List[Tuple[int, ...]]:
    return list(combinations(range(n), k))


def submatrix(M: Sequence[Sequence], rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return [[Fraction(M[i][j]) for j in cols] for i in rows]


def compound_matrix(M: Sequence[Sequence], k: int) -> Matrix:
    """k-th compound: entries are the k x k minors on sorted index sets."""
    n = len(M)
    subsets = k_subsets(n, k)
    return [[det(submatrix(M, I, J)) for J in subsets] for I in subsets]


def wedge_of_columns(B: Sequence[Sequence], k: int) -> Vector:
    """Pluecker coordinates of the wedge of the k columns of B (r x k)."""
    r = len(B)
    return [det(submatrix(B, I, range(k))) for I in k_subsets(r, k)]


def is_symmetric(M: Sequence[Sequence]) -> bool:
    n = len(M)
    return all(len(row) == n for row in M) and all(
        M[i][j] == M[j][i] for i in range(n) for j in range(i)
    )


def leading_principal_minors(M: Sequence[Sequence]) -> List[Fraction]:
    return [det(submatrix(M, range(t), range(t))) for t in range(1, len(M) + 1)]


def is_positive_definite(M: Sequence[Sequence]) -> bool:
    return is_symmetric(M) and all(m > 0 for m in leading_principal_minors(M))


def ldl(G: Sequence[Sequence]) -> Tuple[Matrix, Vector]:
    """G = L D L^T with L unit lower triangular, D positive diagonal.

    Exact; raises SingularMatrixError when G is not positive definite.
    """
    n = len(G)
    L = identity(n)
    d: Vector = [Fraction(0)] * n
    for j in range(n):
        dj = Fraction(G[j][j]) - sum(L[j][k] * L[j][k] * d[k] for k in range(j))
        if dj <= 0:
            raise SingularMatrixError("matrix is not positive definite")
        d[j] = dj
        for i in range(j + 1, n):
            s = Fraction(G[i][j]) - sum(L[i][k] * L[j][k] * d[k] for k in range(j))
            L[i][j] = s / dj
    return L, d


# ---------------------------------------------------------------------------
# integer matrices


def int_rows(rows) -> List[List[int]]:
    out = []
    for row in rows:
        r = []
        for x in row:
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError("expected integer entries")
                r.append(x.numerator)
            else:
                r.append(int(x))
        out.append(r)
    return out


def primitive_vector(v: Sequence[int]) -> List[int]:
    """Divide by the gcd and make the first nonzero entry positive."""
    g = 0
    for x in v:
        g = gcd(g, int(x))
    if g == 0:
        return [0] * len(v)
    w = [int(x) // g for x in v]
    for x in w:
        if x != 0:
            if x < 0:
                w = [-y for y in w]
            break
    return w


def hnf_rows(A: Sequence[Sequence[int]]) -> List[List[int]]:
    """Canonical row-style Hermite form: echelon, positive pivots,
    entries above each pivot reduced into [0, pivot).  Zero rows dropped."""
    W = [row[:] for row in int_rows(A)]
    if not W:
        return []
    rows, cols = len(W), len(W[0])
    t = 0
    for c in range(cols):
        # gcd-eliminate below position t in column c
        while True:
            nz = [r for r in range(t, rows) if W[r][c] != 0]
            if not nz:
                break
            r0 = min(nz, key=lambda r: abs(W[r][c]))
            W[t], W[r0] = W[r0], W[t]
            if W[t][c] < 0:
                W[t] = [-x for x in W[t]]
            done = True
            for r in range(t + 1, rows):
                if W[r][c] != 0:
                    q = W[r][c] // W[t][c]
                    W[r] = [a - q * b for a, b in zip(W[r], W[t])]
                    if W[r][c] != 0:
                        done = False
            if done:
                break
        if t < rows and W[t][c] != 0:
            for r in range(t):
                q = W[r][c] // W[t][c]
                if q:
                    W[r] = [a - q * b for a, b in zip(W[r], W[t])]
            t += 1
            if t == rows:
                break
    return [row for row in W[:t] if any(row)]


def hnf_columns(B: Sequence[Sequence[int]]) -> List[List[int]]:
    return transpose(hnf_rows(transpose(int_rows(B)))) if B else []


def int_diagonalize(B: Sequence[Sequence[int]]) -> Tuple[List[List[int]], List[int]]:
    """Diagonalize an integer matrix by unimodular ops on both sides.

    Returns (Uinv, d) with B * V = Uinv * D for some unimodular V, where
    D is diagonal with entries d (nonzero entries first).  Columns of
    Uinv are a Z-basis of Z^r adapted to the column span of B: the first
    ``#nonzero(d)`` columns span the saturation of the span, and the
    remaining ones complete it to a basis of the ambient lattice.
    """
    W = [row[:] for row in int_rows(B)]
    r = len(W)
    k = len(W[0]) if W else 0
    Uinv = [[int(i == j) for j in range(r)] for i in range(r)]

    def row_swap(i, j):
        W[i], W[j] = W[j], W[i]
        for row in Uinv:
            row[i], row[j] = row[j], row[i]

    def row_sub(i, j, q):  # W: row_i -= q*row_j ; Uinv: col_j += q*col_i
        W[i] = [a - q * b for a, b in zip(W[i], W[j])]
        for row in Uinv:
            row[j] += q * row[i]

    def row_neg(i):
        W[i] = [-x for x in W[i]]
        for row in Uinv:
            row[i] = -row[i]

    def col_swap(i, j):
        for row in W:
            row[i], row[j] = row[j], row[i]

    def col_sub(i, j, q):  # col_i -= q*col_j
        for row in W:
            row[i] -= q * row[j]

    t = 0
    while t < min(r, k):
        # locate a nonzero pivot in the remaining block
        pos = None
        for i in range(t, r):
            for j in range(t, k):
                if W[i][j] != 0:
                    if pos is None or abs(W[i][j]) < abs(W[pos[0]][pos[1]]):
                        pos = (i, j)
        if pos is None:
            break
        if pos[0] != t:
            row_swap(t, pos[0])
        if pos[1] != t:
            col_swap(t, pos[1])
        if W[t][t] < 0:
            row_neg(t)
        dirty = False
        for i in range(t + 1, r):
            if W[i][t] != 0:
                q = W[i][t] // W[t][t]
                row_sub(i, t, q)
                if W[i][t] != 0:
                    dirty = True
        for j in range(t + 1, k):
            if W[t][j] != 0:
                q = W[t][j] // W[t][t]
                col_sub(j, t, q)
                if W[t][j] != 0:
                    dirty = True
        if dirty:
            continue
        t += 1
    d = [W[i][i] if i < k else 0 for i in range(min(r, k))]
    return Uinv, [x for x in d if x != 0]


# ---------------------------------------------------------------------------
# lattice reduction on Gram matrices


def gram_lll(G: Sequence[Sequence], delta: Fraction = Fraction(3, 4)) -> Tuple[Matrix, List[List[int]]]:
    """Exact LLL working purely on the Gram matrix.

    Returns (G', U) with G' = U^T G U, U unimodular, and G' LLL-reduced
    (size-reduced and satisfying the Lovasz condition with parameter
    delta).  Used to keep short-vector enumeration trees small.
    """
    n = len(G)
    if n == 0:
        return [], []
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    G0 = frac_rows(G)

    # Gram-Schmidt data: Bv[i] = |b*_i|^2, mu[i][j] for j < i.  Only the
    # GSO data is maintained during the sweep; the reduced Gram matrix is
    # recomputed from U once at the end.
    mu = [[Fraction(0)] * n for _ in range(n)]
    Bv = [Fraction(0)] * n

    def gram_entry(i, j):
        ui = [row[i] for row in U]
        uj = [row[j] for row in U]
        return vec_dot(ui, mat_vec(G0, uj))

    for i in range(n):
        for j in range(i):
            mu[i][j] = (
                gram_entry(i, j) - sum(mu[i][t] * mu[j][t] * Bv[t] for t in range(j))
            ) / Bv[j]
        Bv[i] = gram_entry(i, i) - sum(mu[i][t] ** 2 * Bv[t] for t in range(i))
        if Bv[i] <= 0:
            raise SingularMatrixError("gram matrix is not positive definite")

    def col_op(i, j, q):  # basis op b_i -= q b_j
        for row in U:
            row[i] -= q * row[j]

    def col_swap(i, j):
        for row in U:
            row[i], row[j] = row[j], row[i]

    def size_reduce(kk, ll):
        if abs(mu[kk][ll]) > Fraction(1, 2):
            q = (mu[kk][ll] + Fraction(1, 2)).__floor__()
            col_op(kk, ll, q)
            for t in range(ll):
                mu[kk][t] -= q * mu[ll][t]
            mu[kk][ll] -= q
    kk = 1
    while kk < n:
        size_reduce(kk, kk - 1)
        if Bv[kk] < (delta - mu[kk][kk - 1] ** 2) * Bv[kk - 1]:
            col_swap(kk, kk - 1)
            # standard GSO update after swapping b_k, b_{k-1}
            mu_bar = mu[kk][kk - 1]
            B_bar = Bv[kk] + mu_bar**2 * Bv[kk - 1]
            mu[kk][kk - 1] = mu_bar * Bv[kk - 1] / B_bar
            Bv[kk] = Bv[kk - 1] * Bv[kk] / B_bar
            Bv[kk - 1] = B_bar
            for j in range(kk - 1):
                mu[kk - 1][j], mu[kk][j] = mu[kk][j], mu[kk - 1][j]
            for i in range(kk + 1, n):
                t = mu[i][kk]
                mu[i][kk] = mu[i][kk - 1] - mu_bar * t
                mu[i][kk - 1] = t + mu[kk][kk - 1] * mu[i][kk]
            kk = max(kk - 1, 1)
        else:
            for ll in range(kk - 2, -1, -1):
                size_reduce(kk, ll)
            kk += 1
    Gred = mat_mul(transpose(U), mat_mul(G0, U))
    return Gred, U


def short_vectors_gram(G: Sequence[Sequence], bound: Fraction) -> List[Tuple[Tuple[int, ...], Fraction]]:
    """All nonzero v in Z^n with v^T G v <= bound, up to sign.

    Exact Fincke-Pohst enumeration on an LLL-reduced copy; each returned
    vector has its first nonzero coordinate positive.  Results sorted by
    (norm, vector) for determinism.
    """
    n = len(G)
    bound = Fraction(bound)
    if n == 0 or bound < 0:
        return []
    Gred, U = gram_lll(G)
    L, d = ldl(Gred)
    out = {}
    v = [0] * n

    def centers(i):
        return sum(L[j][i] * v[j] for j in range(i + 1, n))

    def int_range(c: Fraction, cap: Fraction):
        # integers z with (z + c)^2 <= cap
        if cap < 0:
            return range(0)
        num = cap.numerator * cap.denominator
        s = Fraction(isqrt(num) + 1, cap.denominator)
        lo_f = -c - s
        hi_f = -c + s
        lo = -((-lo_f.numerator) // lo_f.denominator)  # ceil
        hi = hi_f.numerator // hi_f.denominator  # floor
        while lo <= hi and (lo + c) ** 2 > cap:
            lo += 1
        while hi >= lo and (hi + c) ** 2 > cap:
            hi -= 1
        return range(lo, hi + 1)

    def rec(i, remaining):
        if i < 0:
            if any(v):
                w = mat_vec(U, v)
                w_int = tuple(int(x) for x in w)
                for x in w_int:
                    if x != 0:
                        if x < 0:
                            w_int = tuple(-y for y in w_int)
                        break
                norm = bound - remaining
                prev = out.get(w_int)
                if prev is None:
                    out[w_int] = norm
            return
        c = centers(i)
        for z in int_range(c, remaining / d[i]):
            v[i] = z
            rec(i - 1, remaining - d[i] * (z + c) ** 2)
        v[i] = 0

    rec(n - 1, bound)
    return sorted(out.items(), key=lambda kv: (kv[1], kv[0]))
