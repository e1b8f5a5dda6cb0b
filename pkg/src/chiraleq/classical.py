"""Independent classical equivariant cohomology, for weight-zero cross-checks.

This is a from-scratch finite-dimensional implementation: commutative
superalgebras presented by generators, superderivations given on generators,
the classical Koszul-Weil algebra with its L/iota/d structure, the polynomial
de Rham algebra of a linear action, tensor products, basic subspaces, and
Cartan-model cohomology.  Nothing here touches the vertex engine; agreement
with the weight-zero layer of the chiral theory is an acceptance criterion,
so the two sides must stay independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .homology import ColumnSpace, ComplexPiece, RationalMatrix, cohomology
from .lie_structure import LieAlgebra
from .utils import Q


@dataclass(frozen=True)
class CGen:
    label: str
    parity: int
    degree: int
    aux: int = 0      # second grading (polynomial degree for de Rham factors)


class SuperPoly:
    """Free commutative superalgebra on CGens; monomial = sorted index tuple.

    Odd generators square to zero; the monomial key lists odd indices at most
    once and even indices with multiplicity, sorted ascending.
    """

    def __init__(self, gens, name=""):
        self.gens = tuple(gens)
        self.name = name
        self.parity = tuple(g.parity for g in self.gens)
        self.degree = tuple(g.degree for g in self.gens)
        self.aux = tuple(g.aux for g in self.gens)
        self._pieces = {}

    def mono_degree(self, mono):
        return sum(self.degree[i] for i in mono)

    def mono_aux(self, mono):
        return sum(self.aux[i] for i in mono)

    def mono_parity(self, mono):
        return sum(self.parity[i] for i in mono) & 1

    def mul_mono(self, a, b):
        """Product of two monomials: (monomial, sign) or None if it dies."""
        sign = 1
        out = list(a)
        for g in b:
            if self.parity[g]:
                if g in out:
                    return None
                passed = sum(1 for x in out if self.parity[x] and x > g)
                if passed & 1:
                    sign = -sign
            out.append(g)
        return tuple(sorted(out)), sign

    def mul(self, p, q):
        out = {}
        for ma, ca in p.items():
            for mb, cb in q.items():
                r = self.mul_mono(ma, mb)
                if r is None:
                    continue
                m, s = r
                out[m] = out.get(m, 0) + s * ca * cb
        return {m: c for m, c in out.items() if c}

    def piece(self, degree, aux=None):
        """All monomials of one degree (and aux degree when tracked)."""
        key = (degree, aux)
        if key in self._pieces:
            return self._pieces[key]
        odd = [i for i in range(len(self.gens)) if self.parity[i]]
        even = [i for i in range(len(self.gens)) if not self.parity[i]]
        out = []

        def fill_even(idx, dleft, aleft, acc):
            if idx == len(even):
                if dleft == 0 and (aux is None or aleft == 0):
                    out.append(tuple(sorted(acc)))
                return
            g = even[idx]
            dg, ag = self.degree[g], self.aux[g]
            # bound the count through whichever tracked grading is positive
            if dg > 0:
                top = dleft // dg if dleft >= 0 else -1
            elif aux is not None and ag > 0:
                top = aleft // ag if aleft >= 0 else -1
            else:
                raise ValueError(
                    f"piece not finite: even generator {self.gens[g].label} "
                    "has no positive tracked grading")
            if top < 0:
                return
            for cnt in range(int(top) + 1):
                fill_even(idx + 1, dleft - cnt * dg, aleft - cnt * ag, acc + [g] * cnt)

        for r in range(len(odd) + 1):
            for sub in combinations(odd, r):
                d2 = degree - sum(self.degree[i] for i in sub)
                a2 = (aux - sum(self.aux[i] for i in sub)) if aux is not None else None
                fill_even(0, d2, a2 if a2 is not None else 0, list(sub))
        basis = tuple(sorted(set(out)))
        self._pieces[key] = basis
        return basis


class Derivation:
    """Superderivation given by its values on generators."""

    def __init__(self, alg: SuperPoly, parity, images: dict, degree_shift, aux_shift=0):
        self.alg = alg
        self.parity = parity
        self.images = {alg_index(alg, k): v for k, v in images.items()}
        self.degree_shift = degree_shift
        self.aux_shift = aux_shift

    def apply_mono(self, mono):
        out = {}
        alg = self.alg
        for pos, g in enumerate(mono):
            img = self.images.get(g)
            if not img:
                continue
            before = mono[:pos]
            after = mono[:pos] + mono[pos + 1:]
            sign = 1
            if self.parity:
                odd_before = sum(alg.parity[x] for x in before) & 1
                if odd_before:
                    sign = -1
            for m2, c2 in img.items():
                r = alg.mul_mono(m2, after)
                if r is None:
                    continue
                m3, s3 = r
                out[m3] = out.get(m3, 0) + sign * s3 * c2
        return {m: c for m, c in out.items() if c}

    def apply(self, poly):
        out = {}
        for mono, c in poly.items():
            for m2, c2 in self.apply_mono(mono).items():
                out[m2] = out.get(m2, 0) + c * c2
        return {m: v for m, v in out.items() if v}

    def matrix(self, alg_basis, target_basis):
        idx = {m: i for i, m in enumerate(target_basis)}
        cols = []
        for mono in alg_basis:
            img = self.apply_mono(mono)
            col = {}
            for m, c in img.items():
                col[idx[m]] = c
            cols.append(col)
        return RationalMatrix.from_columns(len(target_basis), cols)


def alg_index(alg, key):
    if isinstance(key, int):
        return key
    for i, g in enumerate(alg.gens):
        if g.label == key:
            return i
    raise KeyError(key)


def _coadjoint(L, i, j):
    """(ad*(e_i) e_j')_k = -c^j_{ik} as a sparse map k -> coeff."""
    out = {}
    for k in range(L.dim):
        c = L.c(i, k, j)
        if c:
            out[k] = -c
    return out


@dataclass
class ClassicalModel:
    """A classical G*-algebra: superalgebra plus iota/L/d derivations."""
    lie: LieAlgebra
    alg: SuperPoly
    iotas: list
    Ls: list
    d: Derivation
    track_aux: bool = False

    def basis(self, degree, aux=None):
        return self.alg.piece(degree, aux if self.track_aux else None)


def classical_weil(L: LieAlgebra) -> ClassicalModel:
    """W(g) = Lambda(g*) (x) S(g*) in connection/curvature variables.

    Generators c^{e_i'} (odd, degree 1) and gamma^{e_i'} (even, degree 2) with
      iota_xi c = <.,xi>, iota_xi gamma = 0,
      L_xi c = c^{ad*}, L_xi gamma = gamma^{ad*},
      d c = -1/2 c^{ad*(e_i).} c^{e_i'} + gamma, d gamma = gamma^{ad*(e_i).} c^{e_i'}.
    """
    n = L.dim
    gens = [CGen(f"c{t}", 1, 1) for t in range(n)] + \
           [CGen(f"g{t}", 0, 2) for t in range(n)]
    alg = SuperPoly(gens, name=f"W({L.name})")
    iotas, Ls = [], []
    for i in range(n):
        iotas.append(Derivation(alg, 1, {i: {(): Fraction(1)}}, -1))
        imgs = {}
        for j in range(n):
            imgs[j] = {(k,): c for k, c in _coadjoint(L, i, j).items()}
            imgs[n + j] = {(n + k,): c for k, c in _coadjoint(L, i, j).items()}
        Ls.append(Derivation(alg, 0, imgs, 0))
    dimgs = {}
    for j in range(n):
        dc = {(n + j,): Fraction(1)}
        dg = {}
        for i in range(n):
            for k, c in _coadjoint(L, i, j).items():
                key = tuple(sorted((k, i)))
                if k == i:
                    pass
                m = alg.mul_mono((k,), (i,))
                if m is not None:
                    mm, s = m
                    dc[mm] = dc.get(mm, 0) + Fraction(-1, 2) * c * s
                m2 = alg.mul_mono((n + k,), (i,))
                if m2 is not None:
                    mm2, s2 = m2
                    dg[mm2] = dg.get(mm2, 0) + c * s2
        dimgs[j] = {m: v for m, v in dc.items() if v}
        dimgs[n + j] = {m: v for m, v in dg.items() if v}
    d = Derivation(alg, 1, dimgs, 1)
    return ClassicalModel(lie=L, alg=alg, iotas=iotas, Ls=Ls, d=d)


def classical_de_rham(L: LieAlgebra, rho) -> ClassicalModel:
    """Polynomial forms on C^N with the linear action: x_i, dx_i.

    The action vector field of xi is -rho(xi)x d/dx (same convention as the
    chiral model): iota_xi dx_j = -(rho(xi)x)_j, iota_xi x_j = 0; L = d iota + iota d.
    """
    rho = [[[Q(v) for v in row] for row in mat] for mat in rho]
    N = len(rho[0]) if rho else 0
    n = L.dim
    gens = [CGen(f"x{t}", 0, 0, aux=1) for t in range(N)] + \
           [CGen(f"dx{t}", 1, 1, aux=1) for t in range(N)]
    alg = SuperPoly(gens, name=f"Omega_poly(C^{N})")
    d = Derivation(alg, 1, {t: {(N + t,): Fraction(1)} for t in range(N)}, 1)
    iotas, Ls = [], []
    for i in range(n):
        imgs = {}
        for j in range(N):
            img = {}
            for k in range(N):
                if rho[i][j][k]:
                    img[(k,)] = -rho[i][j][k]
            imgs[N + j] = img
        it = Derivation(alg, 1, imgs, -1)
        iotas.append(it)
        Limgs = {}
        for g in range(2 * N):
            di = it.apply(d.apply({(g,): Fraction(1)}))
            idg = d.apply(it.apply({(g,): Fraction(1)}))
            tot = dict(di)
            for m, c in idg.items():
                tot[m] = tot.get(m, 0) + c
            Limgs[g] = {m: c for m, c in tot.items() if c}
        Ls.append(Derivation(alg, 0, Limgs, 0))
    return ClassicalModel(lie=L, alg=alg, iotas=iotas, Ls=Ls, d=d, track_aux=True)


def classical_point(L: LieAlgebra) -> ClassicalModel:
    """The trivial G*-algebra C."""
    alg = SuperPoly((), name="C")
    zero = Derivation(alg, 1, {}, 1)
    return ClassicalModel(lie=L, alg=alg,
                          iotas=[Derivation(alg, 1, {}, -1) for _ in range(L.dim)],
                          Ls=[Derivation(alg, 0, {}, 0) for _ in range(L.dim)],
                          d=zero)


def classical_tensor(A: ClassicalModel, B: ClassicalModel) -> ClassicalModel:
    """Graded tensor product with the diagonal sg-action."""
    assert A.lie.dim == B.lie.dim
    offs = len(A.alg.gens)
    gens = list(A.alg.gens) + list(B.alg.gens)
    alg = SuperPoly(gens, name=f"{A.alg.name}(x){B.alg.name}")

    def lift(der_a, der_b, parity, shift):
        imgs = {}
        for g, img in der_a.images.items():
            imgs[g] = dict(img)
        for g, img in der_b.images.items():
            imgs[g + offs] = {tuple(x + offs for x in m): c for m, c in img.items()}
        return Derivation(alg, parity, imgs, shift)

    iotas = [lift(a, b, 1, -1) for a, b in zip(A.iotas, B.iotas)]
    Ls = [lift(a, b, 0, 0) for a, b in zip(A.Ls, B.Ls)]
    d = lift(A.d, B.d, 1, 1)
    track = A.track_aux or B.track_aux
    return ClassicalModel(lie=A.lie, alg=alg, iotas=iotas, Ls=Ls, d=d, track_aux=track)


def classical_basic_basis(M: ClassicalModel, degree, aux=None):
    """Joint kernel of all iota_xi and L_xi on one graded piece."""
    src = M.basis(degree, aux)
    if not src:
        return src, RationalMatrix.zero(0, 0)
    mats = []
    for i in range(M.lie.dim):
        tgt = M.basis(degree - 1, aux)
        mats.append(M.iotas[i].matrix(src, tgt))
        mats.append(M.Ls[i].matrix(src, src))
    ker = RationalMatrix.stack(mats).kernel_basis() if mats else RationalMatrix.identity(len(src))
    return src, ker


def classical_basic_cohomology(M: ClassicalModel, degrees, aux=None):
    """H_bas per degree, computed like the chiral case but with derivations."""
    lo, hi = degrees
    bases = {}
    for d in range(lo - 1, hi + 2):
        bases[d] = classical_basic_basis(M, d, aux)
    out = {}
    for d in range(lo, hi + 1):
        dims = []
        maps = []
        for dd in (d - 1, d, d + 1):
            dims.append(bases[dd][1].ncols)
        for dd in (d - 1, d):
            src_basis, src_ker = bases[dd]
            tgt_basis, tgt_ker = bases[dd + 1]
            mat = M.d.matrix(src_basis, M.basis(dd + 1, aux)) if src_basis else \
                RationalMatrix.zero(len(M.basis(dd + 1, aux)), 0)
            full = mat @ src_ker
            sol = tgt_ker.solve(full) if tgt_ker.ncols else (
                None if not full.is_zero() else RationalMatrix.zero(0, src_ker.ncols))
            assert sol is not None, "classical differential must preserve basic"
            maps.append(sol)
        cp = ComplexPiece(labels=[d - 1, d, d + 1], dims=dims, maps=maps)
        dim, reps = cohomology(cp, 1)
        out[d] = (dim, reps)
    return out


def classical_invariants_dim(M: ClassicalModel, degree, aux=None) -> int:
    """dim of the g-invariants (L-kernel) on one piece."""
    src = M.basis(degree, aux)
    if not src:
        return 0
    mats = [Li.matrix(src, src) for Li in M.Ls]
    return RationalMatrix.stack(mats).kernel_basis().ncols if mats else len(src)


def classical_cartan_cohomology(M: ClassicalModel, L: LieAlgebra, degrees, aux=None):
    """Cartan model (S(g*) (x) M)^G with d_G = 1 (x) d - gamma^{e_i'} (x) iota_{e_i}.

    Built as a tensor with the polynomial algebra on even degree-2 generators;
    invariance under the coadjoint action plus the M-action.
    """
    n = L.dim
    gens = [CGen(f"u{t}", 0, 2) for t in range(n)] + list(M.alg.gens)
    alg = SuperPoly(gens, name=f"Cartan({M.alg.name})")
    offs = n

    def lift_m(der, parity, shift):
        imgs = {g + offs: {tuple(x + offs for x in m): c for m, c in img.items()}
                for g, img in der.images.items()}
        return Derivation(alg, parity, imgs, shift)

    Ls = []
    for i in range(n):
        imgs = {j: {(k,): c for k, c in _coadjoint(L, i, j).items()} for j in range(n)}
        co = Derivation(alg, 0, imgs, 0)
        lifted = lift_m(M.Ls[i], 0, 0)
        merged = dict(co.images)
        merged.update(lifted.images)
        Ls.append(Derivation(alg, 0, merged, 0))
    # d_G = 1 (x) d_M - u^i (x) iota_i
    track = M.track_aux

    def d_G_apply(poly):
        out = {}
        dM = lift_m(M.d, 1, 1)
        for m, c in dM.apply(poly).items():
            out[m] = out.get(m, 0) + c
        for i in range(n):
            it = lift_m(M.iotas[i], 1, -1)
            part = it.apply(poly)
            for m, c in part.items():
                r = alg.mul_mono((i,), m)
                if r is None:
                    continue
                mm, s = r
                out[mm] = out.get(mm, 0) - s * c
        return {m: v for m, v in out.items() if v}

    def piece(dd):
        return alg.piece(dd, aux if track else None)

    def inv_basis(dd):
        src = piece(dd)
        if not src:
            return src, RationalMatrix.zero(0, 0)
        mats = [Li.matrix(src, src) for Li in Ls]
        return src, RationalMatrix.stack(mats).kernel_basis()

    lo, hi = degrees
    bases = {d: inv_basis(d) for d in range(lo - 1, hi + 2)}
    out = {}
    for d in range(lo, hi + 1):
        dims = [bases[d - 1][1].ncols, bases[d][1].ncols, bases[d + 1][1].ncols]
        maps = []
        for dd in (d - 1, d):
            src_basis, src_ker = bases[dd]
            tgt_basis, tgt_ker = bases[dd + 1]
            idx = {m: i for i, m in enumerate(tgt_basis)}
            cols = []
            for col in src_ker.columns():
                poly = {src_basis[r]: v for r, v in col.items()}
                img = d_G_apply(poly)
                cols.append({idx[m]: v for m, v in img.items()})
            full = RationalMatrix.from_columns(len(tgt_basis), cols)
            sol = tgt_ker.solve(full) if tgt_ker.ncols else (
                None if not full.is_zero() else RationalMatrix.zero(0, src_ker.ncols))
            assert sol is not None, "classical d_G must preserve invariants"
            maps.append(sol)
        cp = ComplexPiece(labels=[d - 1, d, d + 1], dims=dims, maps=maps)
        dim, reps = cohomology(cp, 1)
        out[d] = (dim, reps)
    return out
