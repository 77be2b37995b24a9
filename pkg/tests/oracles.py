"""Independent reference implementations used only by the test suite.

These deliberately avoid the library's own algorithms: determinants by
cofactor expansion, short vectors by certified box enumeration, and
Hilbert-Mumford values by direct evaluation over a jump grid.  They are
slow and simple on purpose.
"""

from fractions import Fraction
from itertools import product


def cofactor_det(M):
    n = len(M)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(M[0][0])
    total = Fraction(0)
    sign = 1
    for j in range(n):
        minor = [[M[i][t] for t in range(n) if t != j] for i in range(1, n)]
        total += sign * Fraction(M[0][j]) * cofactor_det(minor)
        sign = -sign
    return total


def naive_inverse_entry(M, i, j):
    """(i, j) entry of M^-1 via cofactors (used for box bounds)."""
    n = len(M)
    minor = [[M[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
    return (-1) ** (i + j) * cofactor_det(minor) / cofactor_det(M)


def box_short_vectors(G, bound):
    """All nonzero v (up to sign) with v^T G v <= bound, by box search.

    Uses the Cauchy-Schwarz bound v_i^2 <= (G^-1)_ii * (v^T G v), which
    is exact, so the box provably contains every solution.
    """
    n = len(G)
    bound = Fraction(bound)
    radii = []
    for i in range(n):
        gii = naive_inverse_entry(G, i, i)
        cap = gii * bound
        m = 0
        while (m + 1) * (m + 1) <= cap:
            m += 1
        radii.append(m)
    found = {}
    for v in product(*[range(-m, m + 1) for m in radii]):
        if not any(v):
            continue
        norm = sum(
            Fraction(G[i][j]) * v[i] * v[j] for i in range(n) for j in range(n)
        )
        if norm <= bound:
            w = v
            for x in w:
                if x != 0:
                    if x < 0:
                        w = tuple(-y for y in w)
                    break
            found[w] = norm
    return dict(sorted(found.items(), key=lambda kv: (kv[1], kv[0])))


def random_spd_matrix(rng, n, bound=5):
    """Random positive definite Gram matrix B^T B with invertible B."""
    while True:
        B = [[rng.randrange(-bound, bound + 1) for _ in range(n)] for _ in range(n)]
        if cofactor_det(B) != 0:
            break
    return [
        [Fraction(sum(B[k][i] * B[k][j] for k in range(n))) for j in range(n)]
        for i in range(n)
    ]


def random_unimodular(rng, n, steps=12):
    """Product of elementary integer operations applied to the identity."""
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        q = rng.randrange(-3, 4)
        for r in range(n):
            U[r][i] += q * U[r][j]
    if rng.random() < 0.5 and n > 1:
        for r in range(n):
            U[r][0], U[r][1] = U[r][1], U[r][0]
    return U


def wedge_square_gram(G):
    """Gram of the second wedge power, entries as 2x2 minors."""
    n = len(G)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    out = []
    for a, b in pairs:
        row = []
        for c, d in pairs:
            row.append(
                Fraction(G[a][c]) * Fraction(G[b][d])
                - Fraction(G[a][d]) * Fraction(G[b][c])
            )
        out.append(row)
    return out


def best_slope_witness_det(G):
    """(k, det) whose k-th root of det is minimal, for rank <= 3.

    Enumerates every sublattice determinant directly: rank one through
    shortest vectors, rank two (in ambient dimension three) through the
    wedge-square metric where every vector is a wedge, and the full rank
    through the determinant.  Root comparison d^(1/k) stays in exact
    arithmetic via cross powers.  Ties prefer the smaller rank.
    """
    r = len(G)
    assert 1 <= r <= 3
    per_rank = {}
    b1 = min(Fraction(G[i][i]) for i in range(r))
    per_rank[1] = min(box_short_vectors(G, b1).values())
    if r == 3:
        W = wedge_square_gram(G)
        b2 = min(W[i][i] for i in range(3))
        per_rank[2] = min(box_short_vectors(W, b2).values())
    if r >= 2:
        per_rank[r] = cofactor_det(G)
    best_k, best_d = 1, per_rank[1]
    for k in sorted(per_rank):
        d = per_rank[k]
        if d**best_k < best_d**k:  # d^(1/k) < best_d^(1/best_k)
            best_k, best_d = k, d
    return best_k, best_d


def gauss_solve(A, b):
    """Solve a square rational system by plain elimination."""
    n = len(A)
    M = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        pivot = next(i for i in range(c, n) if M[i][c] != 0)
        M[c], M[pivot] = M[pivot], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


def _echelon(rows):
    W = [[Fraction(x) for x in row] for row in rows]
    out = []
    for row in W:
        cur = list(row)
        for done in out:
            lead = next((j for j, x in enumerate(done) if x != 0), None)
            if lead is not None and cur[lead] != 0:
                f = cur[lead] / done[lead]
                cur = [a - f * b for a, b in zip(cur, done)]
        if any(x != 0 for x in cur):
            out.append(cur)
    return out


def _extend_rows_to_square(rows, r):
    out = _echelon(rows)
    for k in range(r):
        unit = [Fraction(int(j == k)) for j in range(r)]
        probe = _echelon(out + [unit])
        if len(probe) > len(out):
            out.append(unit)
    return out


def oracle_bases(shape, coords):
    """Per-axis basis options: coordinate basis plus extensions of the
    echelonized slice span of the point (and its reversal)."""
    per_axis = []
    for axis, r in enumerate(shape):
        slices = {}
        for idx, val in coords.items():
            rest = tuple(j for t, j in enumerate(idx) if t != axis)
            col = slices.setdefault(rest, [Fraction(0)] * r)
            col[idx[axis]] = Fraction(val)
        ident = [[Fraction(int(a == b)) for b in range(r)] for a in range(r)]
        options = [ident]
        ech = _extend_rows_to_square(list(slices.values()), r)
        if ech != ident:
            options.append(ech)
            options.append(list(reversed(ech)))
        per_axis.append(options)
    return per_axis


def _cmp_signed_sqrt(a, b):
    """Compare sign_a*sqrt(q_a) with sign_b*sqrt(q_b) exactly."""
    (sa, qa), (sb, qb) = a, b
    if sa != sb:
        return -1 if sa < sb else 1
    if qa == qb:
        return 0
    mag = -1 if qa < qb else 1
    return mag if sa >= 0 else -mag


def grid_min_lambda(shape, coords, grid=range(-3, 4)):
    """Minimum of the normalized destabilization value over all integer
    jump vectors from the grid across the oracle basis family.

    Returns (sign, square) representing sign*sqrt(square).  Direct
    formula evaluation: (sum of means - min support sum)/sqrt(weighted
    norm); no library calls.
    """
    n = len(shape)
    total_dim = 1
    for r in shape:
        total_dim *= r
    flat = [Fraction(0)] * total_dim
    for idx, val in coords.items():
        pos = 0
        for j, r in zip(idx, shape):
            pos = pos * r + j
        flat[pos] = Fraction(val)

    best = (0, Fraction(0))  # the all-trivial tuple gives 0
    for bases in product(*oracle_bases(shape, coords)):
        # coordinates of the point in the product basis, one axis at a time
        vec = list(flat)
        for axis, basis in enumerate(bases):
            Bcols = [[basis[t][row] for t in range(shape[axis])] for row in range(shape[axis])]
            inv_rows = []
            for k in range(shape[axis]):
                unit = [Fraction(int(i == k)) for i in range(shape[axis])]
                inv_rows.append(gauss_solve(Bcols, unit))
            inv = [[inv_rows[j][i] for j in range(shape[axis])] for i in range(shape[axis])]
            stride = 1
            for r in shape[axis + 1:]:
                stride *= r
            r = shape[axis]
            out = [Fraction(0)] * total_dim
            for pos, v in enumerate(vec):
                if v == 0:
                    continue
                j = (pos // stride) % r
                base = pos - j * stride
                for jp in range(r):
                    if inv[jp][j]:
                        out[base + jp * stride] += inv[jp][j] * v
            vec = out
        support = []
        for pos, v in enumerate(vec):
            if v == 0:
                continue
            idx = []
            rest = pos
            for r in reversed(shape):
                rest, j = divmod(rest, r)
                idx.append(j)
            support.append(tuple(reversed(idx)))
        for y in product(*(list(grid) for r in shape for _ in range(r))):
            parts = []
            at = 0
            for r in shape:
                parts.append(y[at:at + r])
                at += r
            den = sum(Fraction(sum(v * v for v in part), r) for part, r in zip(parts, shape))
            if den == 0:
                continue
            num = sum(Fraction(sum(part), r) for part, r in zip(parts, shape))
            num -= min(sum(parts[i][s[i]] for i in range(n)) for s in support)
            cand = (0, Fraction(0)) if num == 0 else (
                1 if num > 0 else -1,
                Fraction(num * num, 1) / den,
            )
            if _cmp_signed_sqrt(cand, best) < 0:
                best = cand
    return best


def perm_sign(perm):
    """Parity via cycle decomposition."""
    seen = [False] * len(perm)
    sign = 1
    for s in range(len(perm)):
        if seen[s]:
            continue
        length = 0
        t = s
        while not seen[t]:
            seen[t] = True
            t = perm[t]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def composed_det_value(points, alphas, sigma, ranks):
    """Evaluate the permuted determinant contraction on a product of
    copies, expanding the full product tensor with no early exits.

    points[j] is a dict index->Fraction for copy j; alphas[j] its
    exponent vector; sigma[i] the slot permutation of factor i.
    """
    from itertools import permutations

    n = len(ranks)
    tables = [
        {p: perm_sign(p) for p in permutations(range(r))} for r in ranks
    ]
    total = Fraction(0)
    for pick in product(*[list(p.items()) for p in points]):
        coeff = Fraction(1)
        per_factor = [[] for _ in range(n)]
        for (idx, val), alpha in zip(pick, alphas):
            coeff *= val
            pos = 0
            for i in range(n):
                for _ in range(alpha[i]):
                    per_factor[i].append(idx[pos])
                    pos += 1
        term = coeff
        for i in range(n):
            seq = tuple(per_factor[i][sigma[i][t]] for t in range(len(sigma[i])))
            r = ranks[i]
            for k in range(0, len(seq), r):
                term *= tables[i].get(seq[k : k + r], 0)
        total += term
    return total


def witness_exists_all_perms(point_map, shape, b, m, D_max):
    """Existence of a nonvanishing contraction by scanning every slot
    permutation (no coset pruning), for the one-slot-per-factor case."""
    from itertools import permutations

    n = len(shape)
    if any(m != b[i] * shape[i] for i in range(n)):
        return False
    for D in range(1, D_max + 1):
        cnt = m * D
        points = [point_map] * cnt
        alphas = [(1,) * n] * cnt
        options = [list(permutations(range(cnt))) for _ in range(n)]
        for sig in product(*options):
            if composed_det_value(points, alphas, sig, shape) != 0:
                return True
    return False
