"""Free-field vertex algebras: PBW states and exact circle products.

A GeneratorSet fixes an alphabet of free generators whose only OPE among
themselves is a first-order-pole scalar, realized at mode level as
[g(m), g'(k)]_± = pairing * delta_{m+k,-1}.  States are finitely supported
rational combinations of normal-ordered creation monomials applied to the
vacuum; via the state-operator correspondence every State acts back on
states through field_mode, which is how all circle products are computed.
"""
from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .utils import Q, frac_str

_ONE = Fraction(1)


@dataclass(frozen=True)
class Generator:
    label: str
    parity: int          # 0 even, 1 odd
    weight: int          # 0 or 1
    degree: int
    charge: int = 0      # extra conserved grading; 0 unless the algebra needs it


class GeneratorSet:
    """Ordered free-field alphabet with a first-order contraction table."""

    def __init__(self, generators, contractions, name="", validate=True):
        self.generators = tuple(generators)
        self.name = name
        self._index = {}
        for i, g in enumerate(self.generators):
            if g.label in self._index:
                raise ValueError(f"duplicate generator label {g.label!r}")
            if g.weight not in (0, 1):
                raise ValueError(f"generator {g.label!r}: weight must be 0 or 1")
            self._index[g.label] = i
        self.parity = tuple(g.parity for g in self.generators)
        self.weight = tuple(g.weight for g in self.generators)
        self.degree = tuple(g.degree for g in self.generators)
        self.charge = tuple(g.charge for g in self.generators)
        self.has_charge = any(self.charge)
        table = {}
        for (a, b), v in contractions.items():
            ia = a if isinstance(a, int) else self._index[a]
            ib = b if isinstance(b, int) else self._index[b]
            v = Q(v)
            if v == 0:
                continue
            sym = 1 if self.parity[ia] else -1  # odd pairs symmetric, even antisymmetric
            for key, val in (((ia, ib), v), ((ib, ia), sym * v)):
                if key in table and table[key] != val:
                    raise ValueError(f"inconsistent contraction table at {key}")
                table[key] = val
        self.contractions = table
        if validate:
            self._validate()
        self._fm_cache = {}
        self._piece_cache = {}

    def _validate(self):
        for (i, j), v in self.contractions.items():
            gi, gj = self.generators[i], self.generators[j]
            if gi.parity != gj.parity:
                raise ValueError(f"contraction pairs mixed parity: {gi.label}, {gj.label}")
            if gi.weight + gj.weight != 1:
                raise ValueError(f"contraction weights must sum to 1: {gi.label}, {gj.label}")
            if gi.degree + gj.degree != 0 or gi.charge + gj.charge != 0:
                raise ValueError(f"contraction must pair opposite gradings: {gi.label}, {gj.label}")
            sym = 1 if gi.parity else -1
            if self.contractions.get((j, i)) != sym * v:
                raise ValueError(f"contraction table not (anti)symmetric at ({i},{j})")

    def index(self, label) -> int:
        if isinstance(label, int):
            return label
        return self._index[label]

    def labels(self):
        return tuple(g.label for g in self.generators)

    # -- monomial bookkeeping ------------------------------------------------

    def mono_weight(self, mono) -> int:
        w = self.weight
        return sum(w[g] - m - 1 for g, m in mono)

    def mono_degree(self, mono) -> int:
        d = self.degree
        return sum(d[g] for g, m in mono)

    def mono_charge(self, mono) -> int:
        c = self.charge
        return sum(c[g] for g, m in mono)

    def mono_parity(self, mono) -> int:
        p = self.parity
        return sum(p[g] for g, m in mono) & 1

    def clear_caches(self):
        self._fm_cache.clear()
        self._piece_cache.clear()


def combine(gs_a, gs_b, name=""):
    """Disjoint union of two alphabets (graded tensor product of algebras).

    Returns (gs, embed_a, embed_b) where the embeds map States into the
    combined algebra.  Koszul signs come out of the one shared total order.
    """
    gens = list(gs_a.generators) + list(gs_b.generators)
    relabel = len(set(g.label for g in gens)) != len(gens)
    if relabel:
        gens = [Generator("A." + g.label, g.parity, g.weight, g.degree, g.charge)
                for g in gs_a.generators]
        gens += [Generator("B." + g.label, g.parity, g.weight, g.degree, g.charge)
                 for g in gs_b.generators]
    contr = {}
    for (i, j), v in gs_a.contractions.items():
        contr[(i, j)] = v
    off = len(gs_a.generators)
    for (i, j), v in gs_b.contractions.items():
        contr[(i + off, j + off)] = v
    gs = GeneratorSet(gens, contr, name=name)

    def embed_a(state):
        return State(gs, dict(state.terms))

    def embed_b(state):
        return State(gs, {tuple((g + off, m) for g, m in mono): c
                          for mono, c in state.terms.items()})

    return gs, embed_a, embed_b


class State:
    """Finitely supported rational combination of PBW creation monomials.

    terms maps a sorted tuple of (generator index, mode<=-1) pairs to a
    nonzero Fraction; the empty tuple is the vacuum = unit element 1.
    """

    __slots__ = ("gs", "terms")

    def __init__(self, gs, terms=None):
        self.gs = gs
        self.terms = {m: v for m, v in (terms or {}).items() if v}

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(gs):
        return State(gs, {})

    def copy(self):
        return State(self.gs, dict(self.terms))

    # -- algebra -------------------------------------------------------------

    def __add__(self, other):
        assert self.gs is other.gs
        out = dict(self.terms)
        for m, v in other.terms.items():
            out[m] = out.get(m, 0) + v
        return State(self.gs, out)

    def __sub__(self, other):
        return self + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __rmul__(self, scalar):
        s = Q(scalar)
        if s == 0:
            return State.zero(self.gs)
        return State(self.gs, {m: s * v for m, v in self.terms.items()})

    __mul__ = __rmul__

    def __eq__(self, other):
        return isinstance(other, State) and self.gs is other.gs and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    # -- gradings ------------------------------------------------------------

    def _grade(self, fn):
        vals = {fn(m) for m in self.terms}
        if len(vals) == 1:
            return vals.pop()
        return None

    def weight(self):
        return self._grade(self.gs.mono_weight)

    def degree(self):
        return self._grade(self.gs.mono_degree)

    def charge(self):
        return self._grade(self.gs.mono_charge)

    def parity(self):
        return self._grade(self.gs.mono_parity)

    def bidegree(self):
        d, w = self.degree(), self.weight()
        if d is None or w is None:
            return None
        return (d, w)

    def max_weight(self) -> int:
        return max((self.gs.mono_weight(m) for m in self.terms), default=0)

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mono in sorted(self.terms, key=_mono_sort_key):
            c = self.terms[mono]
            body = "1" if not mono else "".join(
                f"{self.gs.generators[g].label}({m})" for g, m in mono)
            cs = frac_str(c)
            bits.append(body if cs == "1" else (f"-{body}" if cs == "-1" else f"({cs}){body}"))
        return " + ".join(bits).replace("+ -", "- ")


def _mono_sort_key(mono):
    return tuple((g, -m) for g, m in mono)


def vacuum(gs) -> State:
    """The vacuum vector, i.e. the unit element 1 of the algebra."""
    return State(gs, {(): _ONE})


def generator_state(gs, label, mode=-1) -> State:
    return State(gs, {((gs.index(label), mode),): _ONE})


# ---------------------------------------------------------------------------
# mode actions on monomials
# ---------------------------------------------------------------------------

def _insert(gs, mono, g, m):
    """Insert creation mode g(m), m<=-1, into normal order; None if it dies."""
    key = (g, -m)
    keys = [(gi, -mi) for gi, mi in mono]
    pos = bisect_left(keys, key)
    if gs.parity[g]:
        if pos < len(mono) and keys[pos] == key:
            return None  # fermionic square
        odd_passed = sum(gs.parity[gi] for gi, _ in mono[:pos]) & 1
        sign = -1 if odd_passed else 1
    else:
        sign = 1
    return mono[:pos] + ((g, m),) + mono[pos:], sign


def _annihilate(gs, mono, g, m):
    """g(m), m>=0, moved through mono emitting contractions; list of (mono', c)."""
    out = []
    sign = 1
    pg = gs.parity[g]
    contr = gs.contractions
    parity = gs.parity
    for i, (gi, mi) in enumerate(mono):
        if m + mi == -1:
            c = contr.get((g, gi))
            if c:
                out.append((mono[:i] + mono[i + 1:], c * sign))
        if pg and parity[gi]:
            sign = -sign
    return out


def apply_mode(gs, g, m, s: State) -> State:
    """Action of the single generator mode g(m) on a state."""
    g = gs.index(g)
    out = {}
    if m <= -1:
        for mono, c in s.terms.items():
            ins = _insert(gs, mono, g, m)
            if ins is None:
                continue
            nm, sg = ins
            out[nm] = out.get(nm, 0) + sg * c
    else:
        for mono, c in s.terms.items():
            for nm, c2 in _annihilate(gs, mono, g, m):
                out[nm] = out.get(nm, 0) + c * c2
    return State(gs, out)


def _falling(k, m):
    """k(k-1)...(k-m+1); the empty product for m = 0."""
    out = 1
    for t in range(m):
        out *= (k - t)
    return out


def _field_mode_mono(gs, amono, n, smono):
    """Action of the composite mode amono(n) on the monomial state smono.

    Leading-mode-first structural recursion: amono = g(-m-1) rest is the
    field (1/m!) :(d^m g) REST: whose n-th mode is expanded two-sidedly.
    Memoized; all loops are finite because weights are bounded below by 0.
    """
    key = (amono, n, smono)
    cache = gs._fm_cache
    hit = cache.get(key)
    if hit is not None:
        return hit
    if not amono:
        res = {smono: _ONE} if n == -1 else {}
        cache[key] = res
        return res
    (g, gm), rest = amono[0], amono[1:]
    m = -gm - 1
    pg = gs.parity[g]
    prest = gs.mono_parity(rest)
    ws = gs.mono_weight(smono)
    wrest = gs.mono_weight(rest)
    wg = gs.weight[g]
    mfact = factorial(m)
    sgn_m = -1 if (m & 1) else 1
    acc = {}
    # X(k)Y(n-1-k) for k <= -1: creation X after the tail field acts
    for k in range(-1, n - ws - wrest - 1, -1):
        inner = _field_mode_mono(gs, rest, n - 1 - k, smono)
        if not inner:
            continue
        q = Fraction(sgn_m * _falling(k, m), mfact)
        for mono2, c2 in inner.items():
            ins = _insert(gs, mono2, g, k - m)
            if ins is None:
                continue
            nm, sg = ins
            val = acc.get(nm, 0) + (q * sg) * c2
            acc[nm] = val
    # (+-) Y(n-1-k)X(k) for k >= 0: annihilation X first (coefficient kills k < m)
    s2 = -1 if (pg and prest) else 1
    for k in range(m, m + ws + wg):
        fall = _falling(k, m)
        if not fall:
            continue
        terms = _annihilate(gs, smono, g, k - m)
        if not terms:
            continue
        q = Fraction(s2 * sgn_m * fall, mfact)
        for mono1, c1 in terms:
            inner = _field_mode_mono(gs, rest, n - 1 - k, mono1)
            for mono2, c2 in inner.items():
                acc[mono2] = acc.get(mono2, 0) + q * c1 * c2
    res = {mo: v for mo, v in acc.items() if v}
    cache[key] = res
    return res


def field_mode(gs, a: State, n: int, s: State) -> State:
    """a-hat(n) applied to s: the state-operator correspondence in action."""
    assert a.gs is gs and s.gs is gs
    out = {}
    for amono, ca in a.terms.items():
        for smono, cs in s.terms.items():
            for mono, c in _field_mode_mono(gs, amono, n, smono).items():
                out[mono] = out.get(mono, 0) + ca * cs * c
    return State(gs, out)


# ---------------------------------------------------------------------------
# circle products
# ---------------------------------------------------------------------------

def circle_product(gs, a: State, b: State, n: int) -> State:
    """a on b := a-hat(n) b, with weight/degree bookkeeping asserted."""
    out = field_mode(gs, a, n, b)
    da, wa = a.degree(), a.weight()
    db, wb = b.degree(), b.weight()
    if not out.is_zero():
        if da is not None and db is not None:
            assert out.degree() == da + db, "degree bookkeeping violated"
        if wa is not None and wb is not None:
            assert out.weight() == wa + wb - n - 1, "weight bookkeeping violated"
        if a.charge() is not None and b.charge() is not None:
            assert out.charge() == a.charge() + b.charge(), "charge bookkeeping violated"
    return out


def wick(gs, a: State, b: State) -> State:
    return circle_product(gs, a, b, -1)


def iterated_wick(gs, states) -> State:
    """:a1 a2 ... ak: right-nested."""
    states = list(states)
    if not states:
        return vacuum(gs)
    out = states[-1]
    for a in reversed(states[:-1]):
        out = wick(gs, a, out)
    return out


def derivative(gs, a: State, order=1) -> State:
    """Formal derivative: [d, g(m)] = -m g(m-1) on each monomial."""
    cur = a
    for _ in range(order):
        out = {}
        for mono, c in cur.terms.items():
            for i, (g, m) in enumerate(mono):
                rest = mono[:i] + mono[i + 1:]
                odd_before = sum(gs.parity[gi] for gi, _ in mono[:i]) & 1
                sg = -1 if (gs.parity[g] and odd_before) else 1
                ins = _insert(gs, rest, g, m - 1)
                if ins is None:
                    continue
                nm, sg2 = ins
                out[nm] = out.get(nm, 0) + c * (-m) * sg * sg2
        cur = State(gs, out)
    return cur


def ope(gs, a: State, b: State) -> dict:
    """All singular products as {pole order p >= 1: a o_{p-1} b}, nonzero only.

    Pole orders are bounded by wt(a) + wt(b) in any free-field algebra of
    weight <= 1 generators; the bound is asserted with one extra margin term.
    """
    bound = a.max_weight() + b.max_weight()
    out = {}
    for p in range(bound + 2):
        c = circle_product(gs, a, b, p)
        if not c.is_zero():
            assert p < bound, "pole bound violated"
            out[p + 1] = c
    return out


def commute(gs, a: State, b: State) -> bool:
    """True iff a o_n b = 0 for all n >= 0."""
    return not ope(gs, a, b)


# ---------------------------------------------------------------------------
# graded piece enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradedPiece:
    gs: GeneratorSet
    degree: int
    weight: int
    charge: int
    basis: tuple  # monomials in canonical order

    @property
    def dim(self):
        return len(self.basis)

    def index(self, mono):
        if not hasattr(self, "_idx"):
            object.__setattr__(self, "_idx", {m: i for i, m in enumerate(self.basis)})
        return self._idx[mono]

    def state(self, coeffs) -> State:
        """Column coordinates (dict or list) -> State."""
        if isinstance(coeffs, dict):
            return State(self.gs, {self.basis[i]: Q(v) for i, v in coeffs.items()})
        return State(self.gs, {self.basis[i]: Q(v) for i, v in enumerate(coeffs) if v})

    def coords(self, state: State) -> dict:
        """State -> sparse column coordinates; KeyError escapes on mismatch."""
        out = {}
        for mono, c in state.terms.items():
            out[self.index(mono)] = c
        return out


def _lambda_functional(vectors):
    """A positive functional on (degree, charge) vectors of repeatable modes."""
    candidates = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (3, 1), (1, 3), (3, 2), (2, 3)]
    for lam in candidates:
        if all(lam[0] * d + lam[1] * c > 0 for d, c in vectors):
            return lam
    raise ValueError(
        "graded piece is not finite dimensional: weight-0 even generators "
        "admit no positive grading functional; supply a charge grading"
    )


def graded_piece(gs, degree, weight, charge=0) -> GradedPiece:
    """Complete duplicate-free PBW basis of one (degree, weight[, charge]) piece.

    Finite because at most `weight` weight-positive modes fit, and weight-0
    fills are bounded through a positive functional on (degree, charge).
    """
    if weight < 0:
        return GradedPiece(gs, degree, weight, charge, ())
    key = (degree, weight, charge)
    cached = gs._piece_cache.get(key)
    if cached is not None:
        return cached

    ngen = len(gs.generators)
    # candidate modes of weight in [1, weight]
    pos_modes = []
    for g in range(ngen):
        wg = gs.weight[g]
        k = -1
        while True:
            w = wg - k - 1
            if w > weight:
                break
            if w >= 1:
                pos_modes.append((g, k, w))
            k -= 1
    # weight-0 modes: weight-0 generators at mode -1
    zero_odd = [g for g in range(ngen) if gs.weight[g] == 0 and gs.parity[g]]
    zero_even = [g for g in range(ngen) if gs.weight[g] == 0 and not gs.parity[g]]
    lam = None
    if zero_even:
        lam = _lambda_functional([(gs.degree[g], gs.charge[g]) for g in zero_even])

    results = []

    def fill_even(idx, deg_left, chg_left, acc):
        if idx == len(zero_even):
            if deg_left == 0 and chg_left == 0:
                results.append(tuple(sorted(acc, key=lambda gm: (gm[0], -gm[1]))))
            return
        g = zero_even[idx]
        dg, cg = gs.degree[g], gs.charge[g]
        budget = lam[0] * deg_left + lam[1] * chg_left
        unit = lam[0] * dg + lam[1] * cg
        top = budget // unit if unit > 0 else 0
        for cnt in range(int(top) + 1):
            fill_even(idx + 1, deg_left - cnt * dg, chg_left - cnt * cg,
                      acc + [(g, -1)] * cnt)

    def fill_zero(base, deg_left, chg_left):
        # odd weight-0 subsets then even weight-0 multisets
        nodd = len(zero_odd)
        for mask in range(1 << nodd):
            picked = [(zero_odd[t], -1) for t in range(nodd) if mask >> t & 1]
            d2 = deg_left - sum(gs.degree[g] for g, _ in picked)
            c2 = chg_left - sum(gs.charge[g] for g, _ in picked)
            if zero_even:
                fill_even(0, d2, c2, base + picked)
            elif d2 == 0 and c2 == 0:
                results.append(tuple(sorted(base + picked, key=lambda gm: (gm[0], -gm[1]))))

    def pick_pos(start, w_left, acc):
        if w_left == 0:
            dd = degree - sum(gs.degree[g] for g, _ in acc)
            cc = charge - sum(gs.charge[g] for g, _ in acc)
            fill_zero(acc, dd, cc)
            return
        for i in range(start, len(pos_modes)):
            g, k, w = pos_modes[i]
            if w > w_left:
                continue
            if gs.parity[g]:
                pick_pos(i + 1, w_left - w, acc + [(g, k)])
            else:
                pick_pos(i + 1, w_left - w, acc + [(g, k)])
                # allow repeats of even modes by staying at i
                reps = 2
                while reps * w <= w_left:
                    pick_pos(i + 1, w_left - reps * w, acc + [(g, k)] * reps)
                    reps += 1

    pick_pos(0, weight, [])
    basis = tuple(sorted(set(results), key=_mono_sort_key))
    piece = GradedPiece(gs, degree, weight, charge, basis)
    gs._piece_cache[key] = piece
    return piece


# ---------------------------------------------------------------------------
# axiom suite
# ---------------------------------------------------------------------------

def random_state(gs, rng, max_weight=2, max_terms=3, degree=None) -> State:
    """Small random parity-homogeneous state for property checks."""
    monos = []
    for deg in ([degree] if degree is not None else range(-3, 5)):
        for w in range(max_weight + 1):
            monos.extend(graded_piece(gs, deg, w).basis)
    par = rng.choice((0, 1))
    monos = [m for m in monos if gs.mono_parity(m) == par]
    if not monos:
        monos = [()]
    chosen = rng.sample(monos, min(max_terms, len(monos)))
    return State(gs, {m: Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for m in chosen})


def _koszul(a, b):
    pa, pb = a.parity(), b.parity()
    return -1 if (pa and pb) else 1


def axiom_suite(gs, states=None, seed=0, mode_window=2) -> list:
    """Exact checks of the quasi-associativity identities, the skew formula,
    the derivation property of o_0, grading additivity, and the commutator
    and residue identities, on the supplied (or sampled) states.

    Returns a report: list of {name, status, detail} dicts.
    """
    rng = random.Random(seed)
    if states is None:
        states = [generator_state(gs, g.label) for g in gs.generators]
        states += [random_state(gs, rng, max_terms=2) for _ in range(2)]
    states = [s for s in states if not s.is_zero() and s.parity() is not None]
    report = []

    def check(name, ok, detail=""):
        report.append({"name": name, "status": "pass" if ok else "fail", "detail": detail})

    def pairs(count=8):
        allp = [(a, b) for a in states for b in states]
        if len(allp) <= count:
            return allp
        return rng.sample(allp, count)

    def triples():
        return [(rng.choice(states), rng.choice(states), rng.choice(states))
                for _ in range(4)]

    # quasi-associativity: the four identities of the associator lemma
    ok, why = True, ""
    for a, b, c in triples():
        kab = _koszul(a, b)
        lhs1 = wick(gs, wick(gs, a, b), c) - iterated_wick(gs, [a, b, c])
        rhs1 = State.zero(gs)
        kmax = max(b.max_weight(), a.max_weight()) + c.max_weight() + 1
        for k in range(kmax):
            t1 = wick(gs, derivative(gs, a, k + 1), circle_product(gs, b, c, k))
            t2 = kab * wick(gs, derivative(gs, b, k + 1), circle_product(gs, a, c, k))
            rhs1 += Fraction(1, factorial(k + 1)) * (t1 + t2)
        if lhs1 != rhs1:
            ok, why = False, "identity 1 (wick associator)"
            break
        for n in range(0, mode_window + 1):
            lhs2 = (circle_product(gs, a, wick(gs, b, c), n)
                    - wick(gs, circle_product(gs, a, b, n), c)
                    - kab * wick(gs, b, circle_product(gs, a, c, n)))
            rhs2 = State.zero(gs)
            for k in range(1, n + 1):
                rhs2 += comb(n, k) * circle_product(
                    gs, circle_product(gs, a, b, n - k), c, k - 1)
            if lhs2 != rhs2:
                ok, why = False, f"identity 2 at n={n}"
                break
            lhs3 = circle_product(gs, wick(gs, a, b), c, n)
            rhs3 = State.zero(gs)
            for k in range(b.max_weight() + c.max_weight() + 1):
                rhs3 += Fraction(1, factorial(k)) * wick(
                    gs, derivative(gs, a, k), circle_product(gs, b, c, n + k))
            for k in range(a.max_weight() + c.max_weight() + 1):
                rhs3 += kab * circle_product(gs, b, circle_product(gs, a, c, k), n - k - 1)
            if lhs3 != rhs3:
                ok, why = False, f"identity 3 at n={n}"
                break
        if not ok:
            break
    check("quasi_associativity", ok, why)

    ok, why = True, ""
    for a, b in pairs():
        lhs = wick(gs, a, b) - _koszul(a, b) * wick(gs, b, a)
        rhs = State.zero(gs)
        for k in range(a.max_weight() + b.max_weight() + 1):
            rhs += Fraction((-1) ** k, factorial(k + 1)) * derivative(
                gs, circle_product(gs, a, b, k), k + 1)
        if lhs != rhs:
            ok, why = False, "wick skew-symmetry"
            break
    check("wick_skew_symmetry", ok, why)

    # skew formula a o_n b = sum_p (-1)^(p+1) (b o_p a) o_(n-p-1) 1
    ok, why = True, ""
    one = vacuum(gs)
    for a, b in pairs():
        for n in range(-mode_window - 1, mode_window + 1):
            lhs = circle_product(gs, a, b, n)
            rhs = State.zero(gs)
            for p in range(n, a.max_weight() + b.max_weight() + 1):
                sp = -1 if (p % 2 == 0) else 1  # (-1)^(p+1) for any integer p
                rhs += sp * _koszul(a, b) * circle_product(
                    gs, circle_product(gs, b, a, p), one, n - p - 1)
            if lhs != rhs:
                ok, why = False, f"skew formula at n={n}"
                break
        if not ok:
            break
    check("circle_skew_formula", ok, why)

    # o_0 is a graded derivation of every circle product
    ok, why = True, ""
    for a, b, c in triples():
        for n in range(-mode_window, mode_window + 1):
            lhs = circle_product(gs, a, circle_product(gs, b, c, n), 0)
            rhs = (circle_product(gs, circle_product(gs, a, b, 0), c, n)
                   + _koszul(a, b) * circle_product(gs, b, circle_product(gs, a, c, 0), n))
            if lhs != rhs:
                ok, why = False, f"derivation fails at n={n}"
                break
        if not ok:
            break
    check("zero_mode_derivation", ok, why)

    # weight and degree additivity
    ok, why = True, ""
    for a, b in pairs():
        if a.bidegree() is None or b.bidegree() is None:
            continue
        for n in range(-mode_window, mode_window + 1):
            out = field_mode(gs, a, n, b)
            if out.is_zero():
                continue
            if out.weight() != a.weight() + b.weight() - n - 1:
                ok, why = False, "weight additivity"
                break
            if out.degree() != a.degree() + b.degree():
                ok, why = False, "degree additivity"
                break
        if not ok:
            break
    check("grading_additivity", ok, why)

    # mode commutator identity on sample vectors
    ok, why = True, ""
    for a, b in pairs(5):
        s = rng.choice(states)
        for m in range(-mode_window, mode_window + 1):
            for k in range(-mode_window, mode_window + 1):
                lhs = (field_mode(gs, a, m, field_mode(gs, b, k, s))
                       - _koszul(a, b) * field_mode(gs, b, k, field_mode(gs, a, m, s)))
                rhs = State.zero(gs)
                for p in range(a.max_weight() + b.max_weight() + 1):
                    rhs += comb_general(m, p) * field_mode(
                        gs, circle_product(gs, a, b, p), m + k - p, s)
                if lhs != rhs:
                    ok, why = False, f"commutator at (m,k)=({m},{k})"
                    break
            if not ok:
                break
        if not ok:
            break
    check("mode_commutator", ok, why)

    # residue (Jacobi) identity in mode form, evaluated on sample vectors
    ok, why = True, ""
    for a, b in pairs(3):
        s = rng.choice(states)
        sgn = _koszul(a, b)
        for m in range(-1, 2):
            for n in range(-2, 3):
                for q in range(-2, 3):
                    lhs = State.zero(gs)
                    for j in range(a.max_weight() + b.max_weight() + 2):
                        cj = comb_general(m, j)
                        if cj:
                            lhs += cj * field_mode(
                                gs, circle_product(gs, a, b, n + j), m + q - j, s)
                    rhs = State.zero(gs)
                    ws = s.max_weight()
                    jmax = max(ws + b.max_weight() - q, ws + a.max_weight() - m, 0) + 1
                    if n >= 0:
                        jmax = min(jmax, n + 1)
                    for j in range(jmax):
                        cj = comb_general(n, j)
                        if cj == 0:
                            continue
                        t1 = field_mode(gs, a, m + n - j, field_mode(gs, b, q + j, s))
                        t2 = field_mode(gs, b, n + q - j, field_mode(gs, a, m + j, s))
                        sn = -1 if (n % 2) else 1
                        rhs += (-1) ** j * cj * (t1 - sgn * sn * t2)
                    if lhs != rhs:
                        ok, why = False, f"jacobi at (m,n,q)=({m},{n},{q})"
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            break
    check("jacobi_residue_identity", ok, why)

    return report


def comb_general(m, p):
    """Binomial coefficient C(m, p) for arbitrary integer m, p >= 0."""
    if p < 0:
        return 0
    return _falling(m, p) // factorial(p)


def report_ok(report) -> bool:
    return all(e["status"] == "pass" for e in report)
