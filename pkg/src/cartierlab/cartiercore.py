"""Cartier-algebra structures on presented modules.

A degree-e structural operator on M = R^r/rel is a matrix U over R acting by
v |-> componentwise trace_e(U*v); every R-linear map F^e_* M -> M arises this
way because the free cover is projective and Hom(F^e_* R, R) is free of rank
one on the trace.  An algebra is a finite list of such operators, optionally
twisted by an ideal power a^ceil(t*p^e) in degree e.

The chain machinery below (graded images, stabilized ascending sums,
descending stable-core chains, nilpotence and associated-prime tests) is the
computational backbone for the test-module layer.

Localized modules are handled in place: a module may carry an ``inverted``
element c, and every canonical submodule is c-saturated, which realizes
submodules of M_c as their saturated preimages in M.
"""

import math
from fractions import Fraction
from itertools import product as iproduct

from .errors import (InvalidStructureError, NotEquivariantError,
                     ResourceCapError, UnsupportedShapeError)
from .fpmod import Submodule, support_vanishes, torsion
from .groebner import VecPoly
from .idealkit import (PrimeIdeal, minimal_primes,
                       monomial_associated_primes)


class CartierOp:
    """Degree-e operator given by an r x r matrix of polynomials (rows)."""

    __slots__ = ("e", "matrix")

    def __init__(self, e, matrix):
        if e < 1:
            raise ValueError("structural generators must have degree e >= 1")
        self.e = e
        self.matrix = tuple(tuple(row) for row in matrix)
        r = len(self.matrix)
        if any(len(row) != r for row in self.matrix):
            raise ValueError("operator matrix must be square")

    @property
    def rank(self):
        return len(self.matrix)

    def ring(self):
        return self.matrix[0][0].ring

    def apply_vec(self, vec, premul=None):
        """trace_e(U * (premul * vec)), componentwise."""
        from .fppoly import cartier_trace

        ring = self.ring()
        cols = [vec.component(j) for j in range(self.rank)]
        if premul is not None:
            cols = [premul * c for c in cols]
        out = {}
        for i, row in enumerate(self.matrix):
            acc = ring.zero()
            for j, u in enumerate(row):
                if not u.is_zero() and not cols[j].is_zero():
                    acc = acc + u * cols[j]
            tr = cartier_trace(acc, self.e)
            for m, c in tr.terms.items():
                out[(i, m)] = c
        return VecPoly(ring, self.rank, out)

    def premultiplied(self, f):
        """The operator kappa o (multiplication by f), same degree."""
        return CartierOp(self.e, [[u * f for u in row] for row in self.matrix])

    def compose(self, other):
        """self o other as algebra product: (e,U)(d,V) = (e+d, U^[p^d] V)."""
        ring = self.ring()
        r = self.rank
        uf = [[u.frobenius(other.e) for u in row] for row in self.matrix]
        prod = []
        for i in range(r):
            row = []
            for j in range(r):
                acc = ring.zero()
                for k in range(r):
                    acc = acc + uf[i][k] * other.matrix[k][j]
                row.append(acc)
            prod.append(row)
        return CartierOp(self.e + other.e, prod)

    def is_zero(self):
        return all(u.is_zero() for row in self.matrix for u in row)

    def __eq__(self, other):
        return (isinstance(other, CartierOp) and self.e == other.e
                and self.matrix == other.matrix)

    def __hash__(self):
        return hash((self.e, self.matrix))

    def serialize(self):
        return {"e": self.e,
                "matrix": [[str(u) for u in row] for row in self.matrix]}

    def __repr__(self):
        return f"<op e={self.e} {[[str(u) for u in row] for row in self.matrix]}>"


class CartierAlgebraSpec:
    """Finitely generated algebra of trace operators, with optional twists.

    A twist (ideal a, rational t >= 0) scales the degree-e component by
    a^ceil(t*p^e); several twists multiply their powers (mixed case); degree
    zero stays R.  ``twist`` accepts a single (ideal, t) pair or a list.
    """

    __slots__ = ("generators", "twists")

    def __init__(self, generators, twist=None):
        gens = tuple(generators)
        if not gens:
            raise ValueError("algebra needs at least one generator")
        r = gens[0].rank
        if any(g.rank != r for g in gens):
            raise ValueError("generators must share the module rank")
        twists = []
        if twist is not None:
            items = [twist] if isinstance(twist, tuple) and len(twist) == 2 \
                and not isinstance(twist[0], tuple) else list(twist)
            for ideal, t in items:
                t = Fraction(t)
                if t < 0:
                    raise ValueError("twist exponent must be >= 0")
                if t > 0:
                    twists.append((ideal, t))
        self.generators = gens
        self.twists = tuple(twists)

    @property
    def rank(self):
        return self.generators[0].rank

    @property
    def twist(self):
        """Single-twist view for callers that expect one (ideal, t) pair."""
        return self.twists[0] if self.twists else None

    def is_twisted(self):
        return bool(self.twists)

    def twist_exponents(self, e):
        out = []
        for ideal, t in self.twists:
            out.append(math.ceil(t * (ideal.ring.p ** e)))
        return tuple(out)

    def untwisted(self):
        return CartierAlgebraSpec(self.generators)

    def with_twist(self, ideal, t):
        t = Fraction(t)
        if t < 0:
            raise ValueError("twist exponent must be >= 0")
        if t == 0:
            return CartierAlgebraSpec(self.generators, list(self.twists))
        return CartierAlgebraSpec(self.generators,
                                  list(self.twists) + [(ideal, t)])

    def serialize(self):
        out = {"generators": [g.serialize() for g in self.generators]}
        if self.twists:
            out["twist"] = [{"ideal": ideal.serialize(),
                             "t": f"{t.numerator}/{t.denominator}"}
                            for ideal, t in self.twists]
        return out


class CartierModule:
    """A presented module with a validated operator algebra.

    ``carrier`` restricts attention to a stable submodule (used for torsion
    pieces and computed cores without re-presenting them); ``inverted``
    makes this a module over R_c with all canonical submodules c-saturated.
    """

    __slots__ = ("module", "algebra", "carrier", "inverted", "validated")

    def __init__(self, module, algebra, carrier=None, inverted=None,
                 validated=False):
        self.module = module
        self.algebra = algebra
        self.carrier = carrier
        self.inverted = inverted
        self.validated = validated

    @property
    def ring(self):
        return self.module.ring

    def carrier_sub(self):
        if self.carrier is not None:
            return self.carrier
        return self.module.full_submodule()

    def canon(self, gens):
        """Canonical (c-saturated) submodule spanned by ``gens``."""
        sub = Submodule(self.module, tuple(gens))
        if self.inverted is not None:
            sub = sub.saturate(self.inverted)
        return sub

    def canon_sub(self, sub):
        if self.inverted is None:
            return sub
        return sub.saturate(self.inverted)

    def with_carrier(self, sub):
        return CartierModule(self.module, self.algebra, carrier=sub,
                             inverted=self.inverted, validated=self.validated)

    def with_algebra(self, algebra):
        return CartierModule(self.module, algebra, carrier=self.carrier,
                             inverted=self.inverted, validated=False)

    def localize(self, c):
        inv = c if self.inverted is None else self.inverted * c
        algebra = self.algebra
        if algebra.is_twisted():
            # inverting an element of a twist ideal trivializes that twist
            kept = [(ideal, t) for ideal, t in algebra.twists
                    if not ideal.saturation_elem(inv).is_unit()]
            if len(kept) != len(algebra.twists):
                algebra = CartierAlgebraSpec(algebra.generators, kept)
        carrier = self.carrier
        cm = CartierModule(self.module, algebra, carrier=None,
                           inverted=inv, validated=self.validated)
        if carrier is not None:
            cm = cm.with_carrier(cm.canon(carrier.gens))
        return cm

    def serialize(self):
        out = {"module": self.module.serialize(),
               "algebra": self.algebra.serialize()}
        if self.carrier is not None:
            out["carrier"] = self.carrier.serialize()
        if self.inverted is not None:
            out["inverted"] = str(self.inverted)
        return out


# ---------------------------------------------------------------------------
# validation


def _basis_box(ring, e):
    q = ring.p ** e
    count = q ** ring.nvars
    if count > ring.caps.basis_enum_cap:
        raise ResourceCapError(
            f"basis enumeration p^(e*n) = {count} exceeds cap")
    return iproduct(*[range(q) for _ in range(ring.nvars)])


def validate_structure(module, algebra, carrier=None, inverted=None):
    """Check the operators preserve the relations (and the carrier, if any).

    Returns a validated CartierModule; raises InvalidStructureError with a
    witness triple (generator index, relation index, basis monomial) if some
    compatibility fails.
    """
    ring = module.ring
    if algebra.rank != module.rank:
        raise InvalidStructureError(
            f"operator rank {algebra.rank} != module rank {module.rank}")
    relsub = Submodule(module, ())
    for gi, op in enumerate(algebra.generators):
        ring.caps.check_e(ring.p, op.e)
        q = ring.p ** op.e
        for ri, rel in enumerate(module.relations):
            cols = [rel.component(j) for j in range(module.rank)]
            per_class = {}
            for i, row in enumerate(op.matrix):
                acc = ring.zero()
                for j, u in enumerate(row):
                    if not u.is_zero() and not cols[j].is_zero():
                        acc = acc + u * cols[j]
                for m, c in acc.terms.items():
                    b = tuple(x % q for x in m)
                    per_class.setdefault(b, {})[(i, tuple(x // q
                                                          for x in m))] = c
            for b, terms in sorted(per_class.items()):
                img = VecPoly(ring, module.rank, terms)
                if not relsub.contains(img):
                    witness_a = tuple(q - 1 - x for x in b)
                    raise InvalidStructureError(
                        "operator does not preserve relations",
                        witness=(gi, ri, witness_a))
    cm = CartierModule(module, algebra, carrier=None, inverted=inverted,
                       validated=True)
    if carrier is not None:
        carrier = cm.canon(carrier.gens)
        stable = apply_cplus(cm, carrier)
        if not carrier.contains_sub(stable):
            raise InvalidStructureError("carrier is not algebra-stable")
        cm = cm.with_carrier(carrier)
    return cm


# ---------------------------------------------------------------------------
# graded images with twist handled by base-p digit peeling


def _gamma_choices_one(ring, ngens, e, pending):
    """All (gamma, new pending) with gamma in [0, q-1]^m, q | pending-|gamma|."""
    q = ring.p ** e
    out = []
    for gamma in iproduct(*[range(q) for _ in range(ngens)]):
        total = sum(gamma)
        if total <= pending and (pending - total) % q == 0:
            out.append((gamma, (pending - total) // q))
    return out


_SMALL_POWER_CACHE = {}


def _small_power(g, a):
    key = (g, a)
    hit = _SMALL_POWER_CACHE.get(key)
    if hit is None:
        hit = g ** a
        if len(_SMALL_POWER_CACHE) < 4096:
            _SMALL_POWER_CACHE[key] = hit
    return hit


def _twist_moves(ring, twists, e, pendings):
    """Digit-peel choices across all twist ideals simultaneously.

    Yields (multiplier poly, new pending tuple): the multiplier is the
    product of the chosen small ideal-generator powers; the remaining huge
    powers follow the operator through as p^e-th roots.
    """
    per_ideal = []
    for (ideal, _t), pending in zip(twists, pendings):
        choices = _gamma_choices_one(ring, len(ideal.gens), e, pending)
        if not choices:
            return
        per_ideal.append([(ideal.gens, gamma, new) for gamma, new in choices])
    for combo in iproduct(*per_ideal):
        mult = ring.one()
        new_pendings = []
        for gens, gamma, new in combo:
            for g, a in zip(gens, gamma):
                if a:
                    mult = mult * _small_power(g, a)
            new_pendings.append(new)
        yield mult, tuple(new_pendings)


def _expand_ideal_power(ideal, k, cap):
    """Generators of ideal^k, or None if the expansion would be too large."""
    ring = ideal.ring
    gens = ideal.gens
    if k == 0:
        return [ring.one()]
    if not gens:
        return []
    m = len(gens)
    count = math.comb(k + m - 1, m - 1)
    if count > cap:
        return None
    out = []
    for combo in iproduct(*[range(k + 1) for _ in range(m - 1)]):
        rest = k - sum(combo)
        if rest < 0:
            continue
        f = ring.one()
        for g, a in zip(gens, list(combo) + [rest]):
            f = f * g ** a
        out.append(f)
    return out


def _expand_twist_powers(twists, pendings, cap):
    factors = [[]]
    for (ideal, _t), k in zip(twists, pendings):
        expansion = _expand_ideal_power(ideal, k, cap)
        if expansion is None:
            raise ResourceCapError(f"twist power a^{k} too large to expand")
        factors = [acc + [f] for acc in factors for f in expansion]
        if len(factors) > cap:
            raise ResourceCapError("mixed twist expansion too large")
    out = []
    for combo in factors:
        f = None
        for g in combo:
            f = g if f is None else f * g
        out.append(f)
    return out


def _apply_generator(cm, op, gens):
    """Images trace(U * x^a * g) over all e-level basis monomials at once.

    trace_e(w * x^a) is the decomposition coefficient of w at the residue
    class q-1-a, so a single pass over the terms of U*g yields every basis
    image simultaneously instead of q^n separate trace scans.
    """
    ring = cm.ring
    q = ring.p ** op.e
    if q ** ring.nvars > ring.caps.basis_enum_cap:
        raise ResourceCapError("basis enumeration exceeds cap")
    r = op.rank
    p = ring.p
    out = []
    for g in gens:
        cols = [g.component(j) for j in range(r)]
        per_class = {}
        for i, row in enumerate(op.matrix):
            acc = ring.zero()
            for j, u in enumerate(row):
                if not u.is_zero() and not cols[j].is_zero():
                    acc = acc + u * cols[j]
            for m, c in acc.terms.items():
                b = tuple(x % q for x in m)
                quot = tuple(x // q for x in m)
                bucket = per_class.setdefault(b, {})
                key = (i, quot)
                s = (bucket.get(key, 0) + c) % p
                if s:
                    bucket[key] = s
                else:
                    bucket.pop(key, None)
        for _b, terms in sorted(per_class.items()):
            if terms:
                out.append(VecPoly(ring, r, dict(terms)))
    return out


def graded_piece_gens(cm, e, seed_gens):
    """Generators of (C_e^twisted applied to the seed span), degree e >= 1.

    Walks all generator words of total degree e.  Twist powers are peeled
    digit by digit: kappa(g^[q] h m) = g kappa(h m) turns a pending a^A into
    a^((A-|gamma|)/q) after each letter, so huge ideal powers never get
    expanded; only the final small leftover does.
    """
    algebra = cm.algebra
    ring = cm.ring
    twists = algebra.twists
    # states: consumed degree -> {pending twist exponents: [gens]}
    states = {0: {algebra.twist_exponents(e): list(seed_gens)}}
    for consumed in range(e):
        level = states.get(consumed)
        if not level:
            continue
        # keep state generator sets small: span is all that matters
        for pending in list(level):
            level[pending] = cm.canon(level[pending]).basis()
        for op in algebra.generators:
            nxt = consumed + op.e
            if nxt > e:
                continue
            target = states.setdefault(nxt, {})
            for pending, gens in level.items():
                if not twists:
                    images = _apply_generator(cm, op, gens)
                    if images:
                        target.setdefault((), []).extend(images)
                    continue
                for mult, new_pending in _twist_moves(ring, twists, op.e,
                                                      pending):
                    scaled = gens if mult.is_one() else \
                        [v.mul_poly(mult) for v in gens]
                    images = _apply_generator(cm, op, scaled)
                    if images:
                        target.setdefault(new_pending, []).extend(images)
    final = states.get(e, {})
    out = []
    for pending, gens in sorted(final.items()):
        if not gens:
            continue
        if not twists or not any(pending):
            out.extend(gens)
            continue
        for f in _expand_twist_powers(twists, pending,
                                      ring.caps.twist_expand_cap):
            out.extend(v.mul_poly(f) for v in gens)
    return out


def _twist_window(cm, seed_degree):
    """Stabilization window for twisted ascending sums.

    Covers the eventual periodicity of the exponent patterns ceil(t*p^e)
    plus the degrees needed for the seed to contract below the twist scale.
    For untwisted algebras the sound fixed-point certificate is used instead
    and this is 1.
    """
    algebra = cm.algebra
    if not algebra.is_twisted():
        return 1
    p = cm.ring.p
    pre = 0
    period_lcm = 1
    tw_deg = 0
    for ideal, t in algebra.twists:
        den = t.denominator
        k = 0
        while den % p == 0:
            den //= p
            k += 1
        period = 1
        if den > 1:
            acc = p % den
            while acc != 1:
                acc = (acc * p) % den
                period += 1
        pre = max(pre, k)
        period_lcm = math.lcm(period_lcm, period)
        tw_deg += max((g.total_degree() for g in ideal.gens), default=0)
    growth = max(0, seed_degree) + tw_deg + 1
    logp = max(1, math.ceil(math.log(growth + 1, p)))
    return max(3, pre + period_lcm + 1, logp + 2)


def _max_degree(gens):
    return max((g.max_total_degree() for g in gens), default=0)


def graded_sum(cm, seed, e_min=0, e_cap=None):
    """Stabilized ascending sum  sum_{e >= e_min} C_e^tw (seed).

    Returns (Submodule, info dict).  For untwisted algebras stabilization is
    certified by a fixed-point check (the sum is stable under every
    generator and the last max-degree pieces add nothing).  For twisted
    algebras the sum is scanned until a denominator/degree-derived window of
    consecutive degrees adds nothing; the window used is reported.
    """
    caps = cm.ring.caps
    e_cap = e_cap if e_cap is not None else caps.chain_cap
    seed = seed if isinstance(seed, Submodule) else cm.canon(seed)
    seed_gens = seed.basis()
    pieces = {0: seed_gens}
    max_gen_e = max(op.e for op in cm.algebra.generators)
    twisted = cm.algebra.is_twisted()
    window = _twist_window(cm, _max_degree(seed_gens))
    start = cm.canon(seed_gens) if e_min == 0 else cm.canon([])
    total = start
    quiet = 0
    top = 0
    for e in range(1, e_cap + 1):
        top = e
        if twisted:
            piece = graded_piece_gens(cm, e, seed_gens)
        else:
            acc = []
            for op in cm.algebra.generators:
                prev = pieces.get(e - op.e)
                if prev:
                    acc.extend(_apply_generator(cm, op, prev))
            piece = acc
        piece_sub = cm.canon(piece)
        pieces[e] = piece_sub.basis() if piece else []
        if e < e_min:
            continue
        if all(total.contains(g) for g in piece):
            quiet += 1
        else:
            total = cm.canon(list(total.gens) + piece)
            quiet = 0
        if not twisted and quiet >= max_gen_e:
            stable = all(
                total.contains_sub(cm.canon(_apply_generator(cm, op,
                                                             total.basis())))
                for op in cm.algebra.generators)
            if stable:
                return total, {"degrees": e, "window": max_gen_e,
                               "certified": True}
        if twisted and quiet >= window:
            return total, {"degrees": e, "window": window,
                           "certified": False}
    raise ResourceCapError(
        f"graded sum did not stabilize within {e_cap} degrees "
        f"(window {window}, reached degree {top})")


def closure(cm, seed, e_min=0):
    """Smallest approximation to the algebra-span  sum_{e>=e_min} C_e(seed)."""
    return graded_sum(cm, seed, e_min=e_min)


def apply_cplus(cm, sub):
    """The submodule C_+ N = sum_{e>=1} C_e^tw N for an algebra-stable N."""
    total, _info = graded_sum(cm, sub, e_min=1)
    return total


def underline(cm, start=None):
    """Stable core: iterate N <- C_+ N from the carrier until stationary.

    Returns (Submodule, exponent).  The chain descends because the start is
    algebra-stable; stabilization is certified by the first equal step.
    """
    current = start if start is not None else cm.carrier_sub()
    current = cm.canon_sub(current)
    cap = cm.ring.caps.chain_cap
    for k in range(cap + 1):
        nxt = apply_cplus(cm, current)
        if nxt == current:
            return current, k
        if not current.contains_sub(nxt):
            raise InvalidStructureError(
                "C_+ chain is not descending; carrier not stable?")
        current = nxt
    raise ResourceCapError("stable-core chain exceeded iteration cap")


def is_f_pure(cm):
    core, k = underline(cm)
    return k == 0


def nilpotence(cm, sub, at=None):
    """Is the chain C_+^k(sub) eventually zero (globally or at a prime)?"""
    stable, _k = underline(cm, start=cm.canon_sub(sub))
    if at is None:
        return stable.is_trivial()
    return support_vanishes(stable, at.ideal if isinstance(at, PrimeIdeal)
                            else at, inverted=cm.inverted)


# ---------------------------------------------------------------------------
# associated primes in the operator-algebra sense


def _candidate_primes(cm, core):
    """Module-level associated-prime candidates for the stable core.

    Colon filtration along the generators plus annihilator minimal primes;
    monomial colon ideals contribute their full associated-prime lists.
    Raises UnsupportedShapeError when a colon ideal falls outside the
    restricted shapes.
    """
    module = cm.module
    ring = cm.ring
    gens = core.generators_reduced()
    acc = module.zero_submodule()
    colon_ideals = []
    for g in gens:
        colon_ideals.append(acc.colon_ideal(g))
        acc = cm.canon(list(acc.gens) + [g])
    ann = core.annihilator()
    if cm.inverted is not None:
        ann = ann.saturation_elem(cm.inverted)
    colon_ideals.append(ann)
    out = []
    for J in colon_ideals:
        if J.is_unit():
            continue
        if J.is_zero():
            primes = minimal_primes(J)
        elif J.is_monomial():
            try:
                primes = monomial_associated_primes(J)
            except UnsupportedShapeError:
                primes = minimal_primes(J)
        else:
            primes = minimal_primes(J)
        for pr in primes:
            if pr not in out:
                out.append(pr)
    if cm.inverted is not None:
        out = [pr for pr in out if not pr.contains(cm.inverted)]
    out.sort(key=lambda pr: tuple(pr.ideal.serialize()))
    return out


def ass_cartier(cm, candidates=None):
    """Primes eta whose eta-torsion stays non-nilpotent after localizing.

    Filters module-level candidates (computed for restricted shapes, or
    supplied) by the nilpotence test on the stabilized torsion submodule.
    """
    core, _ = underline(cm)
    if core.is_trivial():
        return []
    if candidates is None:
        cand = _candidate_primes(cm, core)
    else:
        cand = list(candidates)
        if cm.inverted is not None:
            cand = [pr for pr in cand if not pr.contains(cm.inverted)]
    out = []
    for pr in cand:
        tor = torsion(cm.module, pr.ideal, within=core)
        tor = cm.canon_sub(tor)
        if tor.is_trivial():
            continue
        stable, _k = underline(cm, start=tor)
        if not support_vanishes(stable, pr.ideal, inverted=cm.inverted):
            out.append(pr)
    out.sort(key=lambda pr: tuple(pr.ideal.serialize()))
    return out


# ---------------------------------------------------------------------------
# equivariant maps and nil-isomorphisms


def check_equivariant(phi, source_cm, target_cm):
    """Verify phi commutes with the paired structural generators.

    Sufficient on free generators x basis monomials by the p-adic
    decomposition of coefficients.  Raises NotEquivariantError with a
    witness (generator index, source generator, basis monomial).
    """
    sgens = source_cm.algebra.generators
    tgens = target_cm.algebra.generators
    if len(sgens) != len(tgens) or any(a.e != b.e for a, b in
                                       zip(sgens, tgens)):
        raise NotEquivariantError("algebra generator lists do not match")
    relsub = Submodule(phi.target, ())
    for k, (src_op, tgt_op) in enumerate(zip(sgens, tgens)):
        for j in range(phi.source.rank):
            ej = phi.source.generator(j)
            for a in _basis_box(source_cm.ring, src_op.e):
                lhs = phi.apply(src_op.apply_vec(ej.mul_term(tuple(a), 1)))
                rhs = tgt_op.apply_vec(phi.columns[j].mul_term(tuple(a), 1))
                if not relsub.contains(lhs - rhs):
                    raise NotEquivariantError(
                        "map does not commute with the structure",
                        witness=(k, j, tuple(a)))
    return True


def nil_isomorphism(phi, source_cm, target_cm):
    """kernel and cokernel both nilpotent?  (equivariance is a precondition)"""
    check_equivariant(phi, source_cm, target_cm)
    ker = phi.kernel()
    if not nilpotence(source_cm, ker):
        return False
    coker = phi.cokernel()
    coker_cm = CartierModule(coker, target_cm.algebra,
                             inverted=target_cm.inverted, validated=True)
    stable, _ = underline(coker_cm)
    return stable.is_trivial()


# ---------------------------------------------------------------------------
# constructing operators from an action recipe


def operator_from_action(module, e, action):
    """The unique matrix operator with trace_e(U * x^a e_j) = action(a, j).

    ``action(a, j)`` must return the intended image (a VecPoly in the free
    cover) of the basis element x^a e_j.  Column j of U is
    sum_a action(a,j)^[p^e] * x^(q-1-a), which inverts the trace exactly.
    """
    ring = module.ring
    q = ring.p ** e
    r = module.rank
    cols = []
    for j in range(r):
        acc = [ring.zero() for _ in range(r)]
        for a in _basis_box(ring, e):
            h = action(tuple(a), j)
            if h is None or h.is_zero():
                continue
            h = module.reduce(h)
            shift = tuple(q - 1 - ai for ai in a)
            for i in range(r):
                comp = h.component(i)
                if not comp.is_zero():
                    acc[i] = acc[i] + comp.frobenius(e).mul_monomial(shift)
        cols.append(acc)
    matrix = [[cols[j][i] for j in range(r)] for i in range(r)]
    return CartierOp(e, matrix)
