"""The semi-infinite Weil algebra of a Lie algebra and its named fields.

For g of dimension n this is the bc-betagamma system on 4n generators
b^{e_i}, c^{e_i'}, beta^{e_i}, gamma^{e_i'}; every field the theory names
(Theta currents, the differential D = J + K, the Virasoro vectors, the
Sugawara vector, the degree currents, the correction term and the
distinguished weight-two vector bfL) is built here as an exact State.

Sums the source writes over a kappa-orthonormal basis are realized as
contractions with the inverse form on g-indexed pairs and with the form
itself on g*-indexed pairs, which keeps every coefficient rational.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .lie_structure import (BilinearForm, DegenerateFormError, LieAlgebra,
                            form_inverse, METRIC_FIELDS)
from .homology import RationalMatrix
from .utils import Q
from . import vertex_engine as ve
from .vertex_engine import (GeneratorSet, Generator, GradedPiece, State,
                            circle_product, derivative, generator_state,
                            graded_piece, iterated_wick, ope, vacuum, wick)

METRIC_NAMES = {"L_S", "sugawara", "B", "C", "bfL", "gamma_dgamma", "primitive"}


@dataclass
class WeilAlgebra:
    lie: LieAlgebra
    form: BilinearForm | None
    gs: GeneratorSet
    _inv: tuple | None = None
    _fields: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.lie.dim

    # generator index helpers: families ordered b, c, beta, gamma
    def b(self, i):
        return generator_state(self.gs, i)

    def idx_b(self, i):
        return i

    def idx_c(self, i):
        return self.n + i

    def idx_beta(self, i):
        return 2 * self.n + i

    def idx_gamma(self, i):
        return 3 * self.n + i

    def gen(self, family, i) -> State:
        off = {"b": 0, "c": self.n, "beta": 2 * self.n, "gamma": 3 * self.n}[family]
        return State(self.gs, {((off + i, -1),): Fraction(1)})

    def inv_form(self):
        if self._inv is None:
            if self.form is None:
                raise DegenerateFormError(
                    f"no invariant form supplied; metric-dependent fields ({METRIC_FIELDS}) unavailable")
            self._inv = form_inverse(self.form)
        return self._inv

    def bc_number(self, mono):
        n = self.n
        out = 0
        for g, _ in mono:
            if g < n:
                out -= 1
            elif g < 2 * n:
                out += 1
        return out

    def betagamma_number(self, mono):
        n = self.n
        out = 0
        for g, _ in mono:
            if 2 * n <= g < 3 * n:
                out -= 1
            elif g >= 3 * n:
                out += 1
        return out


def build_weil(L: LieAlgebra, form: BilinearForm | None = None) -> WeilAlgebra:
    """W(g) = E(g) (x) S(g): odd pair b/c of weights (1,0), even pair beta/gamma.

    Total cohomology degree is bc# + 2 betagamma#, so the degrees are
    b: -1, c: +1, beta: -2, gamma: +2.
    """
    gens = []
    labels = L.basis_labels
    for lab in labels:
        gens.append(Generator(f"b_{lab}", 1, 1, -1))
    for lab in labels:
        gens.append(Generator(f"c_{lab}'", 1, 0, 1))
    for lab in labels:
        gens.append(Generator(f"beta_{lab}", 0, 1, -2))
    for lab in labels:
        gens.append(Generator(f"gamma_{lab}'", 0, 0, 2))
    n = L.dim
    contr = {}
    for i in range(n):
        contr[(i, n + i)] = 1            # {b^{e_i}(m), c^{e_j'}(k)} = delta
        contr[(2 * n + i, 3 * n + i)] = 1  # [beta^{e_i}(m), gamma^{e_j'}(k)] = delta
    gs = GeneratorSet(gens, contr, name=f"W({L.name})")
    return WeilAlgebra(lie=L, form=form, gs=gs)


# ---------------------------------------------------------------------------
# named fields
# ---------------------------------------------------------------------------

def _ad_component(W, v, i):
    """[v, e_i] as a sparse coefficient map k -> coeff, v a coefficient vector."""
    out = {}
    for j, vj in enumerate(v):
        if vj:
            for k, c in W.lie.structure.get((j, i), {}).items():
                out[k] = out.get(k, 0) + vj * c
    return {k: c for k, c in out.items() if c}


def _family_combo(W, family, comp: dict) -> State:
    out = State.zero(W.gs)
    for k, c in comp.items():
        out += c * W.gen(family, k)
    return out


def _coeff_vector(W, param):
    n = W.n
    if isinstance(param, str):
        v = [Fraction(0)] * n
        v[W.lie.index(param)] = Fraction(1)
        return v
    v = [Q(x) for x in param]
    assert len(v) == n
    return v


def theta_E(W, param) -> State:
    """Theta_E^v = sum_i :b^{[v,e_i]} c^{e_i'}:."""
    v = _coeff_vector(W, param)
    out = State.zero(W.gs)
    for i in range(W.n):
        badj = _family_combo(W, "b", _ad_component(W, v, i))
        if not badj.is_zero():
            out += wick(W.gs, badj, W.gen("c", i))
    return out


def theta_S(W, param) -> State:
    """Theta_S^v = -sum_i :beta^{[v,e_i]} gamma^{e_i'}:."""
    v = _coeff_vector(W, param)
    out = State.zero(W.gs)
    for i in range(W.n):
        badj = _family_combo(W, "beta", _ad_component(W, v, i))
        if not badj.is_zero():
            out -= wick(W.gs, badj, W.gen("gamma", i))
    return out


def theta_W(W, param) -> State:
    return theta_E(W, param) + theta_S(W, param)


def _pair_sum_g(W, make_a, make_b) -> State:
    """Inverse-form contraction sum_{ij} (kappa^{-1})^{ij} :A^{e_i} B^{e_j}:."""
    inv = W.inv_form()
    out = State.zero(W.gs)
    for i in range(W.n):
        acc = State.zero(W.gs)
        for j in range(W.n):
            if inv[i][j]:
                acc += inv[i][j] * make_b(j)
        if not acc.is_zero():
            out += wick(W.gs, make_a(i), acc)
    return out


def named_field(W: WeilAlgebra, name, param=None) -> State:
    """Every named vertex operator of the theory, cached per algebra."""
    key = (name, param if isinstance(param, (str, type(None))) else tuple(param))
    if key in W._fields:
        return W._fields[key]
    if name in METRIC_NAMES and W.form is None:
        raise DegenerateFormError(
            f"field {name!r} needs a nondegenerate invariant form ({METRIC_FIELDS})")
    gs, n = W.gs, W.n
    out = None
    if name == "theta_E":
        out = theta_E(W, param)
    elif name == "theta_S":
        out = theta_S(W, param)
    elif name == "theta_W":
        out = theta_W(W, param)
    elif name == "J":
        # J = -:c^{e_i'} gamma^{e_j'} beta^{[e_i,e_j]}: - 1/2 :c^{e_i'} c^{e_j'} b^{[e_i,e_j]}:
        out = State.zero(gs)
        for i in range(n):
            ei = [Fraction(int(t == i)) for t in range(n)]
            for j in range(n):
                badj = _ad_component(W, ei, j)
                if not badj:
                    continue
                out -= iterated_wick(gs, [W.gen("c", i), W.gen("gamma", j),
                                          _family_combo(W, "beta", badj)])
                out -= Fraction(1, 2) * iterated_wick(
                    gs, [W.gen("c", i), W.gen("c", j), _family_combo(W, "b", badj)])
    elif name == "K":
        out = State.zero(gs)
        for i in range(n):
            out += wick(gs, W.gen("gamma", i), W.gen("b", i))
    elif name == "D":
        out = named_field(W, "J") + named_field(W, "K")
    elif name == "j_bc":
        out = State.zero(gs)
        for i in range(n):
            out -= wick(gs, W.gen("b", i), W.gen("c", i))
    elif name == "j_betagamma":
        out = State.zero(gs)
        for i in range(n):
            out += wick(gs, W.gen("beta", i), W.gen("gamma", i))
    elif name == "omega_E":
        out = State.zero(gs)
        for i in range(n):
            out -= wick(gs, W.gen("b", i), derivative(gs, W.gen("c", i)))
    elif name == "omega_S":
        out = State.zero(gs)
        for i in range(n):
            out += wick(gs, W.gen("beta", i), derivative(gs, W.gen("gamma", i)))
    elif name == "omega_W":
        out = named_field(W, "omega_E") + named_field(W, "omega_S")
    elif name == "h":
        out = State.zero(gs)
        for i in range(n):
            out += wick(gs, W.gen("beta", i), derivative(gs, W.gen("c", i)))
    elif name in ("sugawara", "L_S"):
        out = -1 * _pair_sum_g(W, lambda i: theta_S(W, W.lie.basis_labels[i]),
                               lambda j: theta_S(W, W.lie.basis_labels[j]))
    elif name == "B":
        out = _pair_sum_g(W, lambda i: W.gen("beta", i), lambda j: W.gen("beta", j))
    elif name == "C":
        K = named_field(W, "K")
        out = _pair_sum_g(
            W, lambda i: circle_product(gs, K, theta_S(W, W.lie.basis_labels[i]), 0),
            lambda j: W.gen("b", j))
    elif name == "primitive":
        out = _pair_sum_g(W, lambda i: theta_S(W, W.lie.basis_labels[i]),
                          lambda j: W.gen("b", j)) + named_field(W, "h")
    elif name == "bfL":
        out = named_field(W, "omega_S") - named_field(W, "sugawara") + named_field(W, "C")
    elif name == "gamma_dgamma":
        # g*-indexed pair: contract with the form itself
        out = State.zero(gs)
        for i in range(n):
            acc = State.zero(gs)
            for j in range(n):
                if W.form(i, j):
                    acc += W.form(i, j) * derivative(gs, W.gen("gamma", j))
            if not acc.is_zero():
                out += wick(gs, W.gen("gamma", i), acc)
    if out is None:
        raise KeyError(f"unknown named field {name!r}")
    W._fields[key] = out
    return out


# ---------------------------------------------------------------------------
# graded pieces and matrices of modes
# ---------------------------------------------------------------------------

def bigraded_basis(W: WeilAlgebra, degree, weight, bidegree=None) -> GradedPiece:
    """PBW basis of W(g) in one (total degree, weight) piece.

    With `bidegree` = (bc#, betagamma#) the basis is filtered to that block.
    """
    piece = graded_piece(W.gs, degree, weight)
    if bidegree is None:
        return piece
    bc, bg = bidegree
    basis = tuple(m for m in piece.basis
                  if W.bc_number(m) == bc and W.betagamma_number(m) == bg)
    return GradedPiece(W.gs, degree, weight, 0, basis)


class GradingBugError(Exception):
    pass


def mode_matrix(gs_or_W, a: State, k: int, src: GradedPiece):
    """Exact matrix of a-hat(k) from src to the shifted target piece.

    Returns (matrix, target_piece); every image vector must land inside the
    predicted target or a GradingBugError is raised.
    """
    gs = gs_or_W.gs if isinstance(gs_or_W, WeilAlgebra) else gs_or_W
    bid = a.bidegree()
    if bid is None:
        raise ValueError("mode_matrix needs a bihomogeneous field")
    da, wa = bid
    chg = a.charge() or 0
    tgt = graded_piece(gs, src.degree + da, src.weight + wa - k - 1, src.charge + chg)
    cols = []
    for mono in src.basis:
        img = ve.field_mode(gs, a, k, State(gs, {mono: Fraction(1)}))
        try:
            cols.append(tgt.coords(img))
        except KeyError as exc:
            raise GradingBugError(
                f"mode image escapes predicted piece {tgt.degree, tgt.weight}: {exc}") from exc
    return RationalMatrix.from_columns(tgt.dim, cols), tgt


def operator_on_piece(gs, fields_modes, src: GradedPiece):
    """Sum of (field, mode) pairs as one matrix; all must share one shift."""
    total, tgt = None, None
    for a, k in fields_modes:
        m, t = mode_matrix(gs, a, k, src)
        if total is None:
            total, tgt = m, t
        else:
            assert (t.degree, t.weight, t.charge) == (tgt.degree, tgt.weight, tgt.charge)
            total = total + m
    return total, tgt


def abelian_homotopy_F(W: WeilAlgebra, piece: GradedPiece):
    """Matrix of F = sum_{n>0} beta^{e_i}(-n) c^{e_i'}(n-1) on a piece.

    Only defined for abelian g (all Theta vanish); the sum is finite on any
    fixed piece because c^{e_i'}(n-1) kills it for n > weight.
    Returns (matrix, target_piece); F has degree -1 and weight 0.
    """
    if not W.lie.is_abelian():
        raise ValueError("the contracting homotopy F is abelian-only")
    gs = W.gs
    tgt = graded_piece(gs, piece.degree - 1, piece.weight, piece.charge)
    cols = []
    for mono in piece.basis:
        acc = State.zero(gs)
        for i in range(W.n):
            for nn in range(1, piece.weight + 1):
                s = ve.apply_mode(gs, W.idx_c(i), nn - 1, State(gs, {mono: Fraction(1)}))
                if not s.is_zero():
                    acc += ve.apply_mode(gs, W.idx_beta(i), -nn, s)
        try:
            cols.append(tgt.coords(acc))
        except KeyError as exc:
            raise GradingBugError(f"homotopy image escapes predicted piece: {exc}") from exc
    return RationalMatrix.from_columns(tgt.dim, cols), tgt


# ---------------------------------------------------------------------------
# the OPE catalog
# ---------------------------------------------------------------------------

def _check(report, name, ok, detail=""):
    report.append({"name": name, "status": "pass" if ok else "fail", "detail": detail})


def _expect_ope(report, name, gs, a, b, expected: dict):
    got = ope(gs, a, b)
    exp = {p: s for p, s in expected.items() if not s.is_zero()}
    if got == exp:
        _check(report, name, True)
    else:
        poles = sorted(set(got) | set(exp))
        first = next((p for p in poles if got.get(p) != exp.get(p)), None)
        _check(report, name, False,
               f"first discrepant pole {first}: got {got.get(first, 0)!r}, want {exp.get(first, 0)!r}")


def verify_ope_catalog(W: WeilAlgebra) -> list:
    """Exact verification of every cataloged OPE/state identity on W(g)."""
    gs, n, L = W.gs, W.n, W.lie
    report = []
    labels = L.basis_labels
    zero = State.zero(gs)
    kappa = W.form

    def kappa_val(i, j):
        return kappa(i, j) if kappa is not None else None

    # current OPEs of the Theta fields (second-order pole = +-Killing form)
    from .lie_structure import killing_form
    kf = killing_form(L)
    for i in range(n):
        for j in range(n):
            adv = L.bracket_basis(i, j)
            tE = State.zero(gs)
            tS = State.zero(gs)
            for k, c in adv.items():
                tE += c * theta_E(W, labels[k])
                tS += c * theta_S(W, labels[k])
            _expect_ope(report, f"theta_E[{labels[i]}] theta_E[{labels[j]}]", gs,
                        theta_E(W, labels[i]), theta_E(W, labels[j]),
                        {2: kf(i, j) * vacuum(gs), 1: tE})
            _expect_ope(report, f"theta_S[{labels[i]}] theta_S[{labels[j]}]", gs,
                        theta_S(W, labels[i]), theta_S(W, labels[j]),
                        {2: -kf(i, j) * vacuum(gs), 1: tS})

    # adjoint/coadjoint action of the Thetas on generators
    ok = True
    why = ""
    for i in range(n):
        tE, tS, tW = (theta_E(W, labels[i]), theta_S(W, labels[i]), theta_W(W, labels[i]))
        for j in range(n):
            badj = _family_combo(W, "b", L.bracket_basis(i, j))
            if ope(gs, tE, W.gen("b", j)) != ({1: badj} if not badj.is_zero() else {}):
                ok, why = False, f"theta_E b at ({i},{j})"
            beadj = _family_combo(W, "beta", L.bracket_basis(i, j))
            if ope(gs, tS, W.gen("beta", j)) != ({1: beadj} if not beadj.is_zero() else {}):
                ok, why = False, f"theta_S beta at ({i},{j})"
            # coadjoint: (ad*(e_i) e_j')_k = -c^j_{ik}
            cadj = State.zero(gs)
            gadj = State.zero(gs)
            for k in range(n):
                coef = -L.c(i, k, j)
                if coef:
                    cadj += coef * W.gen("c", k)
                    gadj += coef * W.gen("gamma", k)
            if ope(gs, tE, W.gen("c", j)) != ({1: cadj} if not cadj.is_zero() else {}):
                ok, why = False, f"theta_E c at ({i},{j})"
            if ope(gs, tS, W.gen("gamma", j)) != ({1: gadj} if not gadj.is_zero() else {}):
                ok, why = False, f"theta_S gamma at ({i},{j})"
            if ope(gs, tW, W.gen("c", j)) != ({1: cadj} if not cadj.is_zero() else {}):
                ok, why = False, f"theta_W c at ({i},{j})"
            if ope(gs, tW, W.gen("gamma", j)) != ({1: gadj} if not gadj.is_zero() else {}):
                ok, why = False, f"theta_W gamma at ({i},{j})"
    _check(report, "theta_adjoint_coadjoint", ok, why)

    # b-c pairing and b-gamma triviality
    ok, why = True, ""
    for i in range(n):
        for j in range(n):
            want = {1: vacuum(gs)} if i == j else {}
            if ope(gs, W.gen("b", i), W.gen("c", j)) != want:
                ok, why = False, f"b c at ({i},{j})"
            if ope(gs, W.gen("b", i), W.gen("gamma", j)) != {}:
                ok, why = False, f"b gamma at ({i},{j})"
    _check(report, "pairing_opes", ok, why)

    # primary fields of conformal weight one
    ok, why = True, ""
    wE, wS = named_field(W, "omega_E"), named_field(W, "omega_S")
    for i in range(n):
        tE, tS = theta_E(W, labels[i]), theta_S(W, labels[i])
        exp_E = {} if tE.is_zero() else {2: tE, 1: derivative(gs, tE)}
        exp_S = {} if tS.is_zero() else {2: tS, 1: derivative(gs, tS)}
        if ope(gs, wE, tE) != exp_E:
            ok, why = False, f"theta_E primary at {i}"
        if ope(gs, wS, tS) != exp_S:
            ok, why = False, f"theta_S primary at {i}"
    _check(report, "theta_primary_weight_one", ok, why)

    # D(0) on generators, and D(0) b = theta_W
    D = named_field(W, "D")
    ok, why = True, ""
    for j in range(n):
        got = circle_product(gs, D, W.gen("c", j), 0)
        want = W.gen("gamma", j)
        for i in range(n):
            for k in range(n):
                coef = -L.c(i, k, j)  # ad*(e_i)e_j' component on e_k'
                if coef:
                    want += Fraction(-1, 2) * coef * wick(gs, W.gen("c", k), W.gen("c", i))
        if got != want:
            ok, why = False, f"D(0)c at {j}"
        gotg = circle_product(gs, D, W.gen("gamma", j), 0)
        wantg = State.zero(gs)
        for i in range(n):
            for k in range(n):
                coef = -L.c(i, k, j)
                if coef:
                    wantg += coef * wick(gs, W.gen("gamma", k), W.gen("c", i))
        if gotg != wantg:
            ok, why = False, f"D(0)gamma at {j}"
        if circle_product(gs, D, W.gen("b", j), 0) != theta_W(W, labels[j]):
            ok, why = False, f"D(0)b at {j}"
    _check(report, "weil_relations", ok, why)

    # J = :(theta_S + 1/2 theta_E) c:
    Jalt = State.zero(gs)
    for i in range(n):
        Jalt += wick(gs, theta_S(W, labels[i]) + Fraction(1, 2) * theta_E(W, labels[i]),
                     W.gen("c", i))
    _check(report, "J_theta_c_form", named_field(W, "J") == Jalt)

    # Virasoro structure of the omegas
    ok, why = True, ""
    for name, cc in (("omega_E", -2 * n), ("omega_S", 2 * n), ("omega_W", 0)):
        om = named_field(W, name)
        expected = {4: Fraction(cc, 2) * vacuum(gs), 2: 2 * om, 1: derivative(gs, om)}
        got = ope(gs, om, om)
        if got != {p: s for p, s in expected.items() if not s.is_zero()}:
            ok, why = False, name
    _check(report, "omega_virasoro_central_charges", ok, why)

    # metric-dependent identities
    if kappa is not None:
        try:
            LS = named_field(W, "sugawara")
            got = ope(gs, wS, LS)
            want = {4: Fraction(n) * vacuum(gs), 2: 2 * LS, 1: derivative(gs, LS)}
            _expect_ope(report, "omega_S_sugawara_quasiprimary", gs, wS, LS, want)
            gko = wS - LS
            _expect_ope(report, "gko_difference_virasoro", gs, gko, gko,
                        {2: 2 * gko, 1: derivative(gs, gko)})
            bfL = named_field(W, "bfL")
            _expect_ope(report, "bfL_virasoro_c0", gs, bfL, bfL,
                        {2: 2 * bfL, 1: derivative(gs, bfL)})
            _check(report, "bfL_is_D0_primitive",
                   circle_product(gs, D, named_field(W, "primitive"), 0) == bfL)
        except DegenerateFormError as exc:
            _check(report, "metric_identities", False, str(exc))
    return report
