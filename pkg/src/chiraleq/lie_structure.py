"""Finite-dimensional Lie algebras over exact rationals.

Loads structure constants from JSON, validates antisymmetry and Jacobi
index-by-index, computes Killing forms and exact form inverses, and houses
the brute-force module-map oracle Hom_g(g, Sym^d g) used to cross-check
weight-one cohomology.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .utils import Q, frac_str

METRIC_FIELDS = "L_S, B, C, bfL, gamma_dgamma, primitive"


class LieError(Exception):
    """Base for Lie-algebra input problems; carries the offending indices."""

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class LieParseError(LieError):
    pass


class AntisymmetryError(LieError):
    pass


class JacobiError(LieError):
    pass


class InvarianceError(LieError):
    pass


class DegenerateFormError(LieError):
    pass


@dataclass(frozen=True)
class LieAlgebra:
    name: str
    dim: int
    basis_labels: tuple
    # full table: structure[(i, j)] = {k: c^k_{ij}}, both index orders stored
    structure: dict = field(compare=False)

    def c(self, i, j, k) -> Fraction:
        return self.structure.get((i, j), {}).get(k, Fraction(0))

    def bracket_basis(self, i, j) -> dict:
        """[e_i, e_j] as a sparse coefficient map k -> c^k_{ij}."""
        return dict(self.structure.get((i, j), {}))

    def ad(self, i):
        """Matrix of ad(e_i) acting on column coefficient vectors."""
        n = self.dim
        mat = [[Fraction(0)] * n for _ in range(n)]
        for j in range(n):
            for k, val in self.structure.get((i, j), {}).items():
                mat[k][j] = val
        return mat

    def index(self, label) -> int:
        try:
            return self.basis_labels.index(label)
        except ValueError:
            raise LieError(f"unknown basis label {label!r}") from None

    def is_abelian(self) -> bool:
        return not any(self.structure.values())


@dataclass(frozen=True)
class BilinearForm:
    matrix: tuple  # tuple of tuples of Fraction

    def __call__(self, i, j) -> Fraction:
        return self.matrix[i][j]

    @property
    def dim(self):
        return len(self.matrix)


def _validate_structure(name, n, structure):
    for (i, j), cs in structure.items():
        for k, v in cs.items():
            if v != -structure.get((j, i), {}).get(k, Fraction(0)):
                raise AntisymmetryError(
                    f"{name}: antisymmetry fails at (i,j,k)=({i},{j},{k})",
                    indices=(i, j, k),
                )
    for i, j, k in itertools.product(range(n), repeat=3):
        for l in range(n):
            total = Fraction(0)
            for m in range(n):
                total += structure.get((i, j), {}).get(m, 0) * structure.get((m, k), {}).get(l, 0)
                total += structure.get((j, k), {}).get(m, 0) * structure.get((m, i), {}).get(l, 0)
                total += structure.get((k, i), {}).get(m, 0) * structure.get((m, j), {}).get(l, 0)
            if total != 0:
                raise JacobiError(
                    f"{name}: Jacobi identity fails at (i,j,k,l)=({i},{j},{k},{l})",
                    indices=(i, j, k, l),
                )


def make_lie_algebra(name, basis_labels, brackets) -> LieAlgebra:
    """Build and validate from {(i,j): {k: c}} with i<j entries authoritative.

    Entries with i>j are derived by antisymmetry and must not conflict.
    """
    n = len(basis_labels)
    structure = {}
    for (i, j), cs in brackets.items():
        if not (0 <= i < n and 0 <= j < n):
            raise LieParseError(f"{name}: bracket index out of range ({i},{j})", indices=(i, j))
        for k, v in cs.items():
            v = Q(v)
            if v == 0:
                continue
            if not 0 <= k < n:
                raise LieParseError(f"{name}: bracket index out of range k={k}", indices=(i, j, k))
            cur = structure.setdefault((i, j), {})
            if k in cur and cur[k] != v:
                raise AntisymmetryError(
                    f"{name}: conflicting entries for (i,j,k)=({i},{j},{k})", indices=(i, j, k)
                )
            cur[k] = v
            mirror = structure.setdefault((j, i), {})
            if k in mirror and mirror[k] != -v:
                raise AntisymmetryError(
                    f"{name}: antisymmetry conflict at (i,j,k)=({j},{i},{k})", indices=(j, i, k)
                )
            mirror[k] = -v
    structure = {ij: cs for ij, cs in structure.items() if any(cs.values())}
    _validate_structure(name, n, structure)
    return LieAlgebra(name=name, dim=n, basis_labels=tuple(basis_labels), structure=structure)


def load_lie_algebra(text):
    """Parse the JSON algebra document; returns (LieAlgebra, BilinearForm|None)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LieParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise LieParseError("top level must be a JSON object")
    for req in ("name", "dim", "basis"):
        if req not in doc:
            raise LieParseError(f"missing field {req!r}")
    name = doc["name"]
    n = doc["dim"]
    basis = doc["basis"]
    if not isinstance(n, int) or n <= 0:
        raise LieParseError("dim must be a positive integer")
    if len(basis) != n or len(set(basis)) != n:
        raise LieParseError("basis must list dim distinct labels")
    brackets = {}
    for ent in doc.get("brackets", []):
        try:
            i, j, k, cval = ent["i"], ent["j"], ent["k"], Q(ent["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LieParseError(f"malformed bracket entry {ent!r}") from exc
        brackets.setdefault((i, j), {})
        if k in brackets[(i, j)]:
            raise LieParseError(f"duplicate bracket entry (i,j,k)=({i},{j},{k})", indices=(i, j, k))
        brackets[(i, j)][k] = cval
    L = make_lie_algebra(name, basis, brackets)
    form = doc.get("form")
    if form is None:
        return L, None
    if form == "killing":
        return L, killing_form(L)
    mat = []
    try:
        for row in form:
            mat.append(tuple(Q(v) for v in row))
    except (TypeError, ValueError) as exc:
        raise LieParseError("form must be 'killing' or an n x n array of rationals") from exc
    if len(mat) != n or any(len(r) != n for r in mat):
        raise LieParseError("form matrix has wrong shape")
    B = BilinearForm(matrix=tuple(mat))
    validate_form(L, B)
    return L, B


def validate_form(L, B):
    """Symmetry plus the invariance identity B([u,v],w) + B(v,[u,w]) = 0."""
    n = L.dim
    for i in range(n):
        for j in range(n):
            if B(i, j) != B(j, i):
                raise InvarianceError(f"form not symmetric at ({i},{j})", indices=(i, j))
    for u, v, w in itertools.product(range(n), repeat=3):
        total = Fraction(0)
        for k, c in L.structure.get((u, v), {}).items():
            total += c * B(k, w)
        for k, c in L.structure.get((u, w), {}).items():
            total += B(v, k) * c
        if total != 0:
            raise InvarianceError(f"form not invariant at (u,v,w)=({u},{v},{w})", indices=(u, v, w))


def bracket(L, u, v):
    """Bilinear extension of the structure constants to coefficient vectors."""
    n = L.dim
    if len(u) != n or len(v) != n:
        raise LieError(f"expected coefficient vectors of length {n}")
    out = [Fraction(0)] * n
    for (i, j), cs in L.structure.items():
        ui, vj = Q(u[i]), Q(v[j])
        if ui and vj:
            for k, c in cs.items():
                out[k] += c * ui * vj
    return out


def killing_form(L) -> BilinearForm:
    """kappa(u, v) = Tr(ad(u) ad(v)), exactly."""
    n = L.dim
    ads = [L.ad(i) for i in range(n)]
    mat = []
    for i in range(n):
        row = []
        for j in range(n):
            tr = Fraction(0)
            for a in range(n):
                for b in range(n):
                    tr += ads[i][a][b] * ads[j][b][a]
            row.append(tr)
        mat.append(tuple(row))
    B = BilinearForm(matrix=tuple(mat))
    validate_form(L, B)
    return B


def form_inverse(form):
    """Exact inverse matrix of a nondegenerate form, by Gauss-Jordan."""
    n = form.dim
    aug = [[Fraction(form(i, j)) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise DegenerateFormError(
                "form is degenerate; metric-dependent fields "
                f"({METRIC_FIELDS}) are unavailable"
            )
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def scale_form(form, scalar) -> BilinearForm:
    s = Q(scalar)
    return BilinearForm(matrix=tuple(tuple(s * v for v in row) for row in form.matrix))


def change_basis(L, P, form=None):
    """Rewrite L in the basis e'_j = sum_i P[i][j] e_i (P exact, invertible).

    Returns (LieAlgebra, BilinearForm|None).  Used by the basis-independence
    checks; P is given column-wise.
    """
    n = L.dim
    P = [[Q(v) for v in row] for row in P]
    # invert P by Gauss-Jordan
    inv = form_inverse(BilinearForm(matrix=tuple(tuple(row) for row in P)))
    brackets = {}
    for a in range(n):
        for b in range(a + 1, n):
            u = [P[i][a] for i in range(n)]
            v = [P[i][b] for i in range(n)]
            w = bracket(L, u, v)  # in old basis coordinates
            cs = {}
            for k in range(n):
                coef = sum(inv[k][i] * w[i] for i in range(n))
                if coef:
                    cs[k] = coef
            if cs:
                brackets[(a, b)] = cs
    L2 = make_lie_algebra(L.name + "'", [f"{lab}'" for lab in L.basis_labels], brackets)
    if form is None:
        return L2, None
    mat = []
    for a in range(n):
        row = []
        for b in range(n):
            row.append(sum(P[i][a] * form(i, j) * P[j][b] for i in range(n) for j in range(n)))
        mat.append(tuple(row))
    B2 = BilinearForm(matrix=tuple(mat))
    validate_form(L2, B2)
    return L2, B2


# ---------------------------------------------------------------------------
# Brute-force oracle: Hom_g(g, Sym^d g)
# ---------------------------------------------------------------------------

def sym_monomials(n, d):
    """Degree-d monomials in n commuting variables as sorted index tuples."""
    if d == 0:
        return [()]
    out = []

    def rec(start, left, cur):
        if left == 0:
            out.append(tuple(cur))
            return
        for i in range(start, n):
            cur.append(i)
            rec(i, left - 1, cur)
            cur.pop()

    rec(0, d, [])
    return out


def _sym_action(L, i, mono):
    """ad(e_i) acting as a derivation on a Sym monomial; sparse result."""
    out = {}
    for pos, var in enumerate(mono):
        for k, c in L.structure.get((i, var), {}).items():
            new = tuple(sorted(mono[:pos] + (k,) + mono[pos + 1:]))
            out[new] = out.get(new, Fraction(0)) + c
    return {m: v for m, v in out.items() if v}


def module_hom_space(L, d):
    """Exact basis of Hom_g(g, Sym^d g).

    A linear map P is stored as {(i, mono): coefficient} meaning
    P(e_i) = sum coeff * mono.  The g-action is
    (xi . P)(u) = xi.(P(u)) - P([xi, u]); the kernel over all basis xi is
    returned.  This is the independent oracle for the weight-one theorem.
    """
    from .homology import RationalMatrix

    n = L.dim
    monos = sym_monomials(n, d)
    midx = {m: a for a, m in enumerate(monos)}
    basis = [(i, m) for i in range(n) for m in monos]
    bidx = {bm: a for a, bm in enumerate(basis)}
    rows = []
    for xi in range(n):
        # action matrix on Lin(g, Sym^d g)
        ent = {}
        for col, (i, mono) in enumerate(basis):
            # term 1: xi acting on the output polynomial
            for new, c in _sym_action(L, xi, mono).items():
                r = bidx[(i, new)]
                ent[(r, col)] = ent.get((r, col), Fraction(0)) + c
            # term 2: minus precomposition with ad(xi): -P([xi, e_u]) picks up
            # c^i_{xi,u} for each u with [xi,e_u] having an e_i component
            for u in range(n):
                c = L.structure.get((xi, u), {}).get(i, Fraction(0))
                if c:
                    r = bidx[(u, mono)]
                    ent[(r, col)] = ent.get((r, col), Fraction(0)) - c
        rows.append(RationalMatrix(len(basis), len(basis), ent))
    if not rows:
        return []
    stacked = RationalMatrix.stack(rows)
    ker = stacked.kernel_basis()
    out = []
    for j in range(ker.ncols):
        vec = {}
        for (r, c), v in ker.entries.items():
            if c == j:
                vec[basis[r]] = v
        out.append(vec)
    return out


def module_hom_dim(L, d) -> int:
    return len(module_hom_space(L, d))


def format_form(form) -> str:
    return "[" + ", ".join("[" + ", ".join(frac_str(v) for v in row) + "]" for row in form.matrix) + "]"
