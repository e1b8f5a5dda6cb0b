"""Exact sparse rational linear algebra and filtration spectral sequences.

Everything is over Fraction with deterministic first-fit pivoting, so ranks,
kernels and page dimensions are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .utils import Q

_ZERO = Fraction(0)


class RationalMatrix:
    """Sparse exact matrix: finitely supported map (row, col) -> Fraction."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows, ncols, entries=None):
        self.nrows = nrows
        self.ncols = ncols
        self.entries = {}
        for (r, c), v in (entries or {}).items():
            v = Q(v)
            if v:
                if not (0 <= r < nrows and 0 <= c < ncols):
                    raise IndexError(f"entry ({r},{c}) outside {nrows}x{ncols}")
                self.entries[(r, c)] = v

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def zero(nrows, ncols):
        return RationalMatrix(nrows, ncols)

    @staticmethod
    def identity(n):
        return RationalMatrix(n, n, {(i, i): 1 for i in range(n)})

    @staticmethod
    def from_columns(nrows, cols):
        """cols: iterable of sparse dict row -> value."""
        ent = {}
        cols = list(cols)
        for j, col in enumerate(cols):
            for r, v in col.items():
                if v:
                    ent[(r, j)] = Q(v)
        return RationalMatrix(nrows, len(cols), ent)

    @staticmethod
    def from_dense(rows):
        rows = [list(r) for r in rows]
        ent = {}
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if v:
                    ent[(i, j)] = Q(v)
        return RationalMatrix(len(rows), len(rows[0]) if rows else 0, ent)

    @staticmethod
    def stack(mats):
        """Vertical concatenation."""
        mats = list(mats)
        ncols = mats[0].ncols
        assert all(m.ncols == ncols for m in mats)
        ent = {}
        off = 0
        for m in mats:
            for (r, c), v in m.entries.items():
                ent[(r + off, c)] = v
            off += m.nrows
        return RationalMatrix(off, ncols, ent)

    @staticmethod
    def hstack(mats):
        mats = list(mats)
        nrows = mats[0].nrows
        assert all(m.nrows == nrows for m in mats)
        ent = {}
        off = 0
        for m in mats:
            for (r, c), v in m.entries.items():
                ent[(r, c + off)] = v
            off += m.ncols
        return RationalMatrix(nrows, off, ent)

    # -- views ----------------------------------------------------------------

    def column(self, j) -> dict:
        return {r: v for (r, c), v in self.entries.items() if c == j}

    def columns(self):
        cols = [dict() for _ in range(self.ncols)]
        for (r, c), v in self.entries.items():
            cols[c][r] = v
        return cols

    def rows(self):
        rows = [dict() for _ in range(self.nrows)]
        for (r, c), v in self.entries.items():
            rows[r][c] = v
        return rows

    def transpose(self):
        return RationalMatrix(self.ncols, self.nrows,
                              {(c, r): v for (r, c), v in self.entries.items()})

    def submatrix_rows(self, row_ids):
        keep = {r: i for i, r in enumerate(row_ids)}
        ent = {(keep[r], c): v for (r, c), v in self.entries.items() if r in keep}
        return RationalMatrix(len(row_ids), self.ncols, ent)

    def submatrix_cols(self, col_ids):
        keep = {c: i for i, c in enumerate(col_ids)}
        ent = {(r, keep[c]): v for (r, c), v in self.entries.items() if c in keep}
        return RationalMatrix(self.nrows, len(col_ids), ent)

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other):
        assert (self.nrows, self.ncols) == (other.nrows, other.ncols)
        ent = dict(self.entries)
        for k, v in other.entries.items():
            ent[k] = ent.get(k, 0) + v
        return RationalMatrix(self.nrows, self.ncols, ent)

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        s = Q(scalar)
        return RationalMatrix(self.nrows, self.ncols,
                              {k: s * v for k, v in self.entries.items()})

    __mul__ = __rmul__

    def __matmul__(self, other):
        assert self.ncols == other.nrows, "shape mismatch"
        acols = self.columns()
        ent = {}
        for (k, j), v in other.entries.items():
            for r, w in acols[k].items():
                key = (r, j)
                ent[key] = ent.get(key, 0) + w * v
        return RationalMatrix(self.nrows, other.ncols,
                              {k: v for k, v in ent.items() if v})

    def apply(self, col: dict) -> dict:
        """Matrix times sparse column vector."""
        out = {}
        bycol = {}
        for (r, c), v in self.entries.items():
            bycol.setdefault(c, []).append((r, v))
        for c, x in col.items():
            for r, v in bycol.get(c, ()):
                out[r] = out.get(r, 0) + v * x
        return {r: v for r, v in out.items() if v}

    def __eq__(self, other):
        return (isinstance(other, RationalMatrix)
                and (self.nrows, self.ncols) == (other.nrows, other.ncols)
                and self.entries == other.entries)

    def is_zero(self) -> bool:
        return not self.entries

    def __repr__(self):
        return f"RationalMatrix({self.nrows}x{self.ncols}, nnz={len(self.entries)})"

    # -- elimination ------------------------------------------------------------

    def _rref(self):
        """Reduced row echelon form; returns (rows, pivots) with pivots a list
        of (row, col) in elimination order.  First-fit pivoting: columns in
        basis order, rows in stored order."""
        rows = [r for r in self.rows() if r]
        pivots = []
        done = 0
        for col in range(self.ncols):
            piv = None
            for i in range(done, len(rows)):
                if rows[i].get(col):
                    piv = i
                    break
            if piv is None:
                continue
            rows[done], rows[piv] = rows[piv], rows[done]
            prow = rows[done]
            pv = prow[col]
            if pv != 1:
                prow = {c: v / pv for c, v in prow.items()}
                rows[done] = prow
            for i in range(len(rows)):
                if i != done:
                    f = rows[i].get(col)
                    if f:
                        ri = rows[i]
                        for c, v in prow.items():
                            nv = ri.get(c, 0) - f * v
                            if nv:
                                ri[c] = nv
                            else:
                                ri.pop(c, None)
            pivots.append((done, col))
            done += 1
            rows = [r for r in rows[:done]] + [r for r in rows[done:] if r]
        return rows[:done], pivots

    def _int_rows(self):
        """Rows rescaled to primitive integer vectors (rank/echelon safe)."""
        from math import gcd
        out = []
        for r in self.rows():
            if not r:
                continue
            den = 1
            for v in r.values():
                d = v.denominator
                den = den // gcd(den, d) * d
            ints = {c: int(v.numerator * (den // v.denominator)) for c, v in r.items()}
            g = 0
            for v in ints.values():
                g = gcd(g, v)
            if g > 1:
                ints = {c: v // g for c, v in ints.items()}
            out.append(ints)
        return out

    def rank(self) -> int:
        """Exact rank by fraction-free incremental row echelon.

        Rows are reduced in storage order against the accumulated pivot rows
        (pivot = first nonzero column), with integer cross-multiplication and
        content removal, so no rational arithmetic occurs."""
        from math import gcd
        pivots = {}  # lead column -> integer row dict
        for row in self._int_rows():
            cur = row
            while cur:
                lead = min(cur)
                piv = pivots.get(lead)
                if piv is None:
                    pivots[lead] = cur
                    cur = None
                    break
                a, b = piv[lead], cur[lead]
                new = {}
                for c, v in cur.items():
                    new[c] = a * v
                for c, v in piv.items():
                    nv = new.get(c, 0) - b * v
                    if nv:
                        new[c] = nv
                    else:
                        new.pop(c, None)
                g = 0
                for v in new.values():
                    g = gcd(g, v)
                if g > 1:
                    new = {c: v // g for c, v in new.items()}
                cur = new
        return len(pivots)

    def kernel_basis(self):
        """Columns spanning the exact kernel; kernel.T @ self == 0 verified."""
        rows, pivots = self._rref()
        pivot_cols = [c for _, c in pivots]
        pivot_set = set(pivot_cols)
        free = [c for c in range(self.ncols) if c not in pivot_set]
        cols = []
        for f in free:
            vec = {f: Fraction(1)}
            for (ri, c) in pivots:
                v = rows[ri].get(f)
                if v:
                    vec[c] = -v
            cols.append(vec)
        ker = RationalMatrix.from_columns(self.ncols, cols)
        assert (self @ ker).is_zero(), "kernel verification failed"
        return ker

    def image_basis(self):
        """Pivot columns of the matrix: (indices, spanning submatrix).

        First-fit: a column joins the basis iff it is independent of the
        earlier ones."""
        span = ColumnSpace(self.nrows)
        idx = [j for j, col in enumerate(self.columns()) if span.add(col)]
        return idx, self.submatrix_cols(idx)

    def solve(self, rhs):
        """X with self @ X = rhs, or None when inconsistent.  Free vars 0."""
        aug = RationalMatrix.hstack([self, rhs])
        rows, pivots = aug._rref()
        n = self.ncols
        for (ri, c) in pivots:
            if c >= n:
                return None  # a pivot in the rhs block: inconsistent
        ent = {}
        for (ri, c) in pivots:
            for c2, v in rows[ri].items():
                if c2 >= n:
                    ent[(c, c2 - n)] = v
        return RationalMatrix(n, rhs.ncols, ent)


def reduce_mod_columns(span, vec: dict) -> dict:
    """Reduce a sparse vector modulo the column space of `span`, first-fit.

    Returns the reduced representative (zero iff vec lies in the span)."""
    basis = _column_echelon(span)
    out = dict(vec)
    for lead, col in basis:
        x = out.get(lead)
        if x:
            f = x / col[lead]
            for r, v in col.items():
                nv = out.get(r, 0) - f * v
                if nv:
                    out[r] = nv
                else:
                    out.pop(r, None)
    return out


def _column_echelon(mat):
    """Column echelon: list of (leading row index, column dict), deterministic."""
    basis = []
    for col in mat.columns():
        cur = dict(col)
        for lead, b in basis:
            x = cur.get(lead)
            if x:
                f = x / b[lead]
                for r, v in b.items():
                    nv = cur.get(r, 0) - f * v
                    if nv:
                        cur[r] = nv
                    else:
                        cur.pop(r, None)
        if cur:
            lead = min(cur)
            basis.append((lead, cur))
    basis.sort(key=lambda t: t[0])
    return basis


class ColumnSpace:
    """Incremental column span with exact membership tests."""

    def __init__(self, nrows):
        self.nrows = nrows
        self.basis = []  # list of (lead, column dict)

    def reduce(self, vec: dict) -> dict:
        out = dict(vec)
        for lead, b in self.basis:
            x = out.get(lead)
            if x:
                f = x / b[lead]
                for r, v in b.items():
                    nv = out.get(r, 0) - f * v
                    if nv:
                        out[r] = nv
                    else:
                        out.pop(r, None)
        return out

    def add(self, vec: dict) -> bool:
        """Insert if independent; True when the rank grew."""
        red = self.reduce(vec)
        if not red:
            return False
        self.basis.append((min(red), red))
        self.basis.sort(key=lambda t: t[0])
        return True

    def contains(self, vec: dict) -> bool:
        return not self.reduce(vec)

    @property
    def rank(self):
        return len(self.basis)


# ---------------------------------------------------------------------------
# complexes
# ---------------------------------------------------------------------------

@dataclass
class ComplexPiece:
    """A finite run of a cochain complex at fixed weight: spaces and maps.

    maps[i] sends space i to space i+1; consecutive compositions must vanish.
    """
    labels: list
    dims: list
    maps: list = field(default_factory=list)

    def __post_init__(self):
        assert len(self.maps) == max(len(self.dims) - 1, 0)
        for i, m in enumerate(self.maps):
            assert m.ncols == self.dims[i] and m.nrows == self.dims[i + 1], \
                f"map {i} shape mismatch"
        for i in range(len(self.maps) - 1):
            comp = self.maps[i + 1] @ self.maps[i]
            assert comp.is_zero(), f"d^2 != 0 between positions {i} and {i + 2}"


def cohomology(piece: ComplexPiece, at: int):
    """(dimension, representative columns) of H at position `at` (0-based).

    Representatives complete an image basis inside the kernel and are reduced
    mod the image by first-fit column elimination.
    """
    assert 1 <= at <= len(piece.dims) - 2, "position must have both differentials"
    d_out = piece.maps[at]
    d_in = piece.maps[at - 1]
    ker = d_out.kernel_basis()
    img_idx, img = d_in.image_basis()
    dim = ker.ncols - img.rank()
    span = ColumnSpace(piece.dims[at])
    for col in img.columns():
        span.add(col)
    reps = []
    for col in ker.columns():
        red = span.reduce(col)
        if red:
            reps.append(red)
            span.add(red)
    assert len(reps) == dim
    return dim, reps


# ---------------------------------------------------------------------------
# double complexes and spectral sequences
# ---------------------------------------------------------------------------

@dataclass
class SpectralPage:
    r: int
    dims: dict                 # (p, q) -> dimension
    differentials: dict        # (p, q) -> RationalMatrix in representative bases
    shift: tuple               # (r, 1 - r)

    def table(self):
        return dict(sorted(self.dims.items()))


class DoubleComplexError(Exception):
    pass


class _Total:
    """Total complex of a (p,q)-graded double complex, coordinates per n."""

    def __init__(self, blocks, d_maps, delta_maps):
        self.blocks = {k: v for k, v in blocks.items() if v}
        self.d_maps = d_maps
        self.delta_maps = delta_maps
        self.ns = sorted({p + q for p, q in self.blocks})
        self.layout = {}
        for n in self.ns:
            ps = sorted(p for p, q in self.blocks if p + q == n)
            off, offs = 0, {}
            for p in ps:
                offs[p] = off
                off += self.blocks[(p, n - p)]
            self.layout[n] = (ps, offs, off)

    def dim(self, n):
        return self.layout.get(n, (None, None, 0))[2]

    def total_map(self, n):
        """D_n: A^n -> A^(n+1) assembled from d and delta blocks."""
        if n not in self.layout:
            return RationalMatrix.zero(self.dim(n + 1), 0)
        ps, offs, dim = self.layout[n]
        tdim = self.dim(n + 1)
        t_offs = self.layout.get(n + 1, (None, {}, 0))[1]
        ent = {}
        for p in ps:
            q = n - p
            for maps, tp in ((self.d_maps, (p, q + 1)), (self.delta_maps, (p + 1, q))):
                m = maps.get((p, q))
                if m is None or tp not in self.blocks:
                    continue
                ro = t_offs[tp[0]]
                co = offs[p]
                for (r, c), v in m.entries.items():
                    ent[(r + ro, c + co)] = ent.get((r + ro, c + co), 0) + v
        return RationalMatrix(tdim, dim, ent)

    def filtration_cols(self, n, k):
        """Coordinate ids of F^n_k (blocks with p >= k)."""
        if n not in self.layout:
            return []
        ps, offs, _ = self.layout[n]
        out = []
        for p in ps:
            if p >= k:
                out.extend(range(offs[p], offs[p] + self.blocks[(p, n - p)]))
        return out


def _verify_double(blocks, d_maps, delta_maps):
    for (p, q), m in d_maps.items():
        up = d_maps.get((p, q + 1))
        if up is not None and not (up @ m).is_zero():
            raise DoubleComplexError(f"d^2 != 0 at {(p, q)}")
    for (p, q), m in delta_maps.items():
        right = delta_maps.get((p + 1, q))
        if right is not None and not (right @ m).is_zero():
            raise DoubleComplexError(f"delta^2 != 0 at {(p, q)}")
    for (p, q) in blocks:
        d0, dl0 = d_maps.get((p, q)), delta_maps.get((p, q))
        a = delta_maps.get((p, q + 1))
        b = d_maps.get((p + 1, q))
        first = a @ d0 if (a is not None and d0 is not None) else None
        second = b @ dl0 if (b is not None and dl0 is not None) else None
        if first is None and second is None:
            continue
        total = first if second is None else (second if first is None else first + second)
        if not total.is_zero():
            raise DoubleComplexError(f"d delta + delta d != 0 at {(p, q)}")


def double_complex_pages(blocks, d_maps, delta_maps, r_max=None, n_range=None):
    """Spectral sequence of the column filtration F^n_k = +_(p+q=n, p>=k).

    blocks: {(p,q): dim}; d_maps raise q by one, delta_maps raise p by one;
    the three commutation preconditions are verified exactly first.  Pages
    are computed by direct subquotients of the filtration; iteration stops
    when no further differential can connect two nonzero blocks.  When
    n_range is given, only classes with p+q inside it are tabulated (the
    block data must cover one extra total degree on each side).
    """
    _verify_double(blocks, d_maps, delta_maps)
    tot = _Total(blocks, d_maps, delta_maps)
    if not tot.blocks:
        return [SpectralPage(1, {}, {}, (1, 0))]
    p_all = [p for p, q in tot.blocks]
    span = max(p_all) - min(p_all) + 1
    if r_max is None:
        r_max = span + 1

    totals = {n: tot.total_map(n) for n in tot.ns}

    def Z(r, p, n):
        """Columns spanning {x in F_p A^n : Dx in F_(p+r)}, in A^n coords."""
        cols_src = tot.filtration_cols(n, p)
        if not cols_src:
            return RationalMatrix.zero(tot.dim(n), 0)
        D = totals.get(n)
        high = set(tot.filtration_cols(n + 1, p + r))
        bad_rows = [i for i in range(tot.dim(n + 1)) if i not in high]
        proj = D.submatrix_cols(cols_src).submatrix_rows(bad_rows)
        ker = proj.kernel_basis()
        # embed back into A^n coordinates
        ent = {}
        for (ri, c), v in ker.entries.items():
            ent[(cols_src[ri], c)] = v
        return RationalMatrix(tot.dim(n), ker.ncols, ent)

    pages = []
    keys = sorted(tot.blocks)
    in_range = (lambda n: True) if n_range is None else (lambda n: n_range[0] <= n <= n_range[1])
    zcache = {}

    def Zc(r, p, n):
        key = (r, p, n)
        if key not in zcache:
            zcache[key] = Z(r, p, n)
        return zcache[key]

    for r in range(1, r_max + 1):
        dims = {}
        reps = {}
        for (p, q) in keys:
            n = p + q
            if not in_range(n):
                continue
            num = Zc(r, p, n)
            den_cols = []
            z_up = Zc(r - 1, p + 1, n)
            den_cols.extend(z_up.columns())
            z_prev = Zc(r - 1, p - r + 1, n - 1)
            if z_prev.ncols and (n - 1) in totals:
                img = totals[n - 1] @ z_prev
                den_cols.extend(img.columns())
            span_den = ColumnSpace(tot.dim(n))
            for col in den_cols:
                span_den.add(col)
            chosen = []
            for col in num.columns():
                red = span_den.reduce(col)
                if red:
                    chosen.append(col)
                    span_den.add(red)
            dims[(p, q)] = len(chosen)
            reps[(p, q)] = chosen
        # differentials d_r: E_r^(p,q) -> E_r^(p+r, q-r+1)
        diffs = {}
        any_nonzero = False
        for (p, q) in keys:
            n = p + q
            if not in_range(n) or not in_range(n + 1):
                continue
            src = reps.get((p, q), [])
            if not src:
                continue
            tgt_key = (p + r, q - r + 1)
            # denominator of the target class space
            den = ColumnSpace(tot.dim(n + 1))
            for col in Zc(r - 1, p + r + 1, n + 1).columns():
                den.add(col)
            z_prev = Zc(r - 1, p + 1, n)
            if z_prev.ncols:
                img = totals[n] @ z_prev
                for col in img.columns():
                    den.add(col)
            tgt_reps = reps.get(tgt_key, [])
            basis = RationalMatrix.from_columns(
                tot.dim(n + 1), [den.reduce(t) for t in tgt_reps])
            mat_cols = []
            for col in src:
                red = den.reduce(totals[n].apply(col))
                if not red and not tgt_reps:
                    mat_cols.append({})
                    continue
                rhs = RationalMatrix.from_columns(tot.dim(n + 1), [red])
                sol = basis.solve(rhs)
                if sol is None:
                    raise DoubleComplexError(
                        f"page {r}: differential leaves the computed page at {(p, q)}")
                mat_cols.append(sol.column(0))
            dr = RationalMatrix.from_columns(len(tgt_reps), mat_cols)
            if not dr.is_zero():
                any_nonzero = True
                diffs[(p, q)] = dr
        pages.append(SpectralPage(r, dims, diffs, (r, 1 - r)))
        # stop when no later differential can connect two nonzero blocks
        can_connect = False
        for rr in range(r + 1, span + 2):
            for (p, q), d in dims.items():
                if d and dims.get((p + rr, q - rr + 1), 0):
                    can_connect = True
                    break
            if can_connect:
                break
        if not any_nonzero and not can_connect:
            break
    return pages


def d_r_squared_zero(page: SpectralPage) -> bool:
    r = page.r
    for (p, q), m in page.differentials.items():
        nxt = page.differentials.get((p + r, q - r + 1))
        if nxt is not None and not (nxt @ m).is_zero():
            return False
    return True


def total_cohomology_dims(blocks, d_maps, delta_maps, n_range):
    """H^n of the total complex for n in n_range (inclusive), per degree."""
    tot = _Total(blocks, d_maps, delta_maps)
    totals = {n: tot.total_map(n) for n in tot.ns}
    out = {}
    for n in range(n_range[0], n_range[1] + 1):
        D_n = totals.get(n)
        dim_n = tot.dim(n)
        if dim_n == 0:
            out[n] = 0
            continue
        kdim = D_n.kernel_basis().ncols if D_n is not None else dim_n
        D_prev = totals.get(n - 1)
        rk = D_prev.rank() if D_prev is not None else 0
        out[n] = kdim - rk
    return out
