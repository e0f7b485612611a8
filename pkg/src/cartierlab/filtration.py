"""Ideal-twisted filtrations: jumping numbers, associated graded pieces,
and the Skoda-type inclusion/equality checks.

The jumping-number sweep walks a rational grid with denominator
p^A (p^B - 1); drops are certified by recomputation at the two straddling
grid points and right-continuity is witnessed at half a grid step past each
jump.  Spectra are labelled EXACT only on the principal fast path (where the
denominator heuristic pins the candidate set); everything else is reported
as a LOWER-BOUND spectrum with the grid disclosed.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .cartiercore import (CartierAlgebraSpec, CartierOp,
                          validate_structure)
from .errors import ResourceCapError, UnsupportedShapeError
from .fpmod import PresentedModule, present_submodule
from .groebner import LiftContext, VecPoly
from .idealkit import Ideal
from .testmod import tau, tau_bms


def twist_algebra(algebra, ideal, t):
    """Attach the twist a^t to the algebra (t >= 0, exact rational)."""
    t = Fraction(t)
    if t < 0:
        raise ValueError("twist exponent must be >= 0")
    return algebra.with_twist(ideal, t)


def _is_fast_path(cm, ideal):
    """tau_bms applies: free rank-1 module, single plain degree-1 trace
    generator, principal twist ideal, nothing else inverted."""
    if cm.module.rank != 1 or cm.module.relations:
        return False
    if cm.inverted is not None:
        return False
    alg = cm.algebra
    if len(alg.generators) != 1 or alg.twists:
        return False
    op = alg.generators[0]
    if op.e != 1 or not op.matrix[0][0].is_one():
        return False
    return len(ideal.gens) == 1 and not ideal.gens[0].is_zero()


class _TauSampler:
    """tau(M, a^t) as a canonical submodule, cached per t."""

    def __init__(self, cm, ideal, e_max=None, seed=0, cache=None):
        self.cm = cm
        self.ideal = ideal
        self.e_max = e_max
        self.seed = seed
        self.fast = _is_fast_path(cm, ideal)
        self.cache = cache
        self._memo = {}
        self._elements = None

    def cache_key(self, t):
        return {
            "op": "tau-at",
            "module": self.cm.serialize(),
            "ideal": self.ideal.serialize(),
            "t": f"{t.numerator}/{t.denominator}",
            "fast_path": self.fast,
        }

    def at(self, t):
        t = Fraction(t)
        if t in self._memo:
            return self._memo[t]
        stored = None
        if self.cache is not None:
            stored = self.cache.lookup(self.cache_key(t))
        if stored is not None:
            sub = self.cm.module.submodule(
                [[self.cm.ring.parse(s) for s in row]
                 for row in stored["generators"]])
            sub = self.cm.canon(sub.gens)
            self._memo[t] = sub
            return sub
        if self.fast:
            if t == 0:
                J = Ideal(self.cm.ring, [self.cm.ring.one()])
            else:
                J = tau_bms(self.ideal.gens[0], t, e_max=self.e_max)
            sub = self.cm.module.submodule([[g] for g in J.groebner()])
            sub = self.cm.canon(sub.gens)
        else:
            twisted = self.cm.with_algebra(
                twist_algebra(self.cm.algebra, self.ideal, t))
            if self._elements is None:
                self._elements = {}
            result = tau(twisted, seed=self.seed)
            sub = result.submodule
        self._memo[t] = sub
        if self.cache is not None:
            self.cache.store(self.cache_key(t), sub.serialize())
        return sub


@dataclass
class JumpRecord:
    t: Fraction
    tau_before: list
    tau_at: list
    delta: Fraction
    right_continuity_ok: bool

    def serialize(self):
        return {"t": f"{self.t.numerator}/{self.t.denominator}",
                "tau_before": self.tau_before,
                "tau_at": self.tau_at,
                "delta": f"{self.delta.numerator}/{self.delta.denominator}",
                "right_continuity_ok": self.right_continuity_ok}


@dataclass
class JumpSpectrum:
    top: Fraction
    denominator: int
    exactness: str
    jumps: list = field(default_factory=list)
    cache_hits: int = 0

    def jump_values(self):
        return [j.t for j in self.jumps]

    def serialize(self):
        return {"top": f"{self.top.numerator}/{self.top.denominator}",
                "grid_denominator": self.denominator,
                "exactness": self.exactness,
                "cache_hits": self.cache_hits,
                "jumps": [j.serialize() for j in self.jumps]}


def jumping_numbers(cm, ideal, top, caps=(2, 2), exact_policy="strict",
                    e_max=None, seed=0, cache=None, check_right_continuity=True):
    """Scan tau(M, a^t) over the grid and certify the strict drops.

    ``caps`` = (A, B) fixes the candidate denominator p^A (p^B - 1).
    Monotonicity is asserted along the way; a violation means an internal
    error, never a spectrum.
    """
    ring = cm.ring
    top = Fraction(top)
    if top <= 0:
        raise ValueError("need top > 0")
    A, B = caps
    D = ring.p ** A * (ring.p ** B - 1)
    sampler = _TauSampler(cm, ideal, e_max=e_max, seed=seed, cache=cache)
    hits_before = cache.hits if cache is not None else 0
    trivial_twist = ideal.is_unit()
    jumps = []
    prev_t = Fraction(0)
    prev = sampler.at(prev_t)
    steps = int(top * D)
    for k in range(1, steps + 1):
        t = Fraction(k, D)
        cur = sampler.at(t)
        if not prev.contains_sub(cur):
            raise AssertionError(
                f"tau not monotone between {prev_t} and {t} (internal error)")
        if cur != prev and not trivial_twist:
            delta = t - prev_t
            rc = True
            if check_right_continuity:
                half = sampler.at(t + delta / 2) if t + delta / 2 <= top \
                    else cur
                rc = (half == cur)
            jumps.append(JumpRecord(
                t, prev.serialize()["generators"],
                cur.serialize()["generators"], delta, rc))
        prev, prev_t = cur, t
    if exact_policy == "strict" and sampler.fast:
        exactness = "EXACT"
    else:
        exactness = "LOWER-BOUND"
    hits_after = cache.hits if cache is not None else 0
    return JumpSpectrum(top, D, exactness, jumps,
                        cache_hits=hits_after - hits_before)


# ---------------------------------------------------------------------------
# associated graded


def _principal_generator(cm):
    alg = cm.algebra
    if len(alg.generators) != 1 or alg.generators[0].e != 1 or alg.twists:
        raise UnsupportedShapeError(
            "graded pieces need a principal untwisted degree-1 algebra")
    return alg.generators[0]


def gr(cm, ideal, t, caps=(2, 2), e_max=None, seed=0):
    """The graded piece  tau(a^(t-eps)) / tau(a^t)  as a validated module.

    Epsilon is resolved concretely: the next-lower grid point, halved once
    to witness left-stability.  The quotient carries the structural operator
    premultiplied by f^ceil(t(p-1)) where (f) = a; the result is validated.
    """
    op = _principal_generator(cm)
    if len(ideal.gens) != 1:
        raise UnsupportedShapeError("graded pieces need a principal ideal")
    f = ideal.gens[0]
    ring = cm.ring
    t = Fraction(t)
    A, B = caps
    D = ring.p ** A * (ring.p ** B - 1)
    sampler = _TauSampler(cm, ideal, e_max=e_max, seed=seed)
    at_t = sampler.at(t)
    delta = Fraction(1, D)
    for _ in range(ring.caps.chain_cap):
        before = sampler.at(max(t - delta, Fraction(0)))
        halved = sampler.at(max(t - delta / 2, Fraction(0)))
        if before == halved:
            break
        delta = delta / 2
    else:
        raise ResourceCapError("left limit did not stabilize")
    numerator = before
    denominator = at_t
    num_mod, num_gens = present_submodule(numerator)
    if not num_gens:
        zero_mod = PresentedModule(ring, 0)
        qcm = validate_structure(zero_mod, CartierAlgebraSpec([CartierOp(1, [])]))
        return qcm, {"t": t, "delta": delta}
    ctx = LiftContext(num_gens, cm.module.relation_gb(), cm.module.rank)
    extra = []
    for g in denominator.basis():
        lam = ctx.lift(g)
        if lam is None:
            raise AssertionError("tau(t) not inside tau(t-eps)?")
        extra.append(VecPoly.from_columns(ring, lam))
    quotient = PresentedModule(ring, num_mod.rank,
                               list(num_mod.relations) + extra)
    mult = f ** _ceil_frac(t * (ring.p - 1))
    twisted_op = op.premultiplied(mult)

    def action(a, j):
        image = twisted_op.apply_vec(num_gens[j].mul_term(a, 1))
        lam = ctx.lift(image)
        if lam is None:
            raise AssertionError("structural image left the numerator")
        return VecPoly.from_columns(ring, lam)

    from .cartiercore import operator_from_action

    qop = operator_from_action(quotient, 1, action)
    qcm = validate_structure(quotient, CartierAlgebraSpec([qop]))
    return qcm, {"t": t, "delta": delta}


def _ceil_frac(x):
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)


# ---------------------------------------------------------------------------
# inclusion/equality checks


def skoda_report(cm, ideal, t, e_max=None, seed=0):
    """One Skoda/containment check at exponent t:
    a * tau(a^(t-1)) <= tau(a^t), equality expected when t >= #gens(a)."""
    t = Fraction(t)
    if t < 1:
        raise ValueError("need t >= 1")
    sampler = _TauSampler(cm, ideal, e_max=e_max, seed=seed)
    low = sampler.at(t - 1)
    high = sampler.at(t)
    scaled = cm.canon(low.scale_ideal(ideal).gens)
    inclusion = high.contains_sub(scaled)
    mu = len(ideal.gens)
    equality = scaled == high
    return {"t": f"{t.numerator}/{t.denominator}",
            "inclusion": inclusion,
            "mu": mu,
            "equality_expected": t >= mu,
            "equality": equality,
            "ok": inclusion and (equality or t < mu)}


def mixed_skoda_report(cm, pairs, index, e_max=None, seed=0):
    """Mixed variant: a_i * tau(prod a_j^(t_j - [j==i])) <= tau(prod a_j^t_j)."""
    pairs = [(ideal, Fraction(t)) for ideal, t in pairs]
    ideal_i, t_i = pairs[index]
    if t_i < 1:
        raise ValueError("need t_i >= 1")
    lowered = [(ideal, t - 1 if k == index else t)
               for k, (ideal, t) in enumerate(pairs)]

    def tau_mixed(ps):
        alg = cm.algebra
        for ideal, t in ps:
            if t > 0:
                alg = alg.with_twist(ideal, t)
        return tau(cm.with_algebra(alg), seed=seed).submodule

    low = tau_mixed(lowered)
    high = tau_mixed(pairs)
    scaled = cm.canon(low.scale_ideal(ideal_i).gens)
    inclusion = high.contains_sub(scaled)
    mu = len(ideal_i.gens)
    equality = scaled == high
    return {"index": index,
            "inclusion": inclusion,
            "mu": mu,
            "equality_expected": t_i >= mu,
            "equality": equality,
            "ok": inclusion and (equality or t_i < mu)}


def mixed_right_continuity(cm, pairs, epsilons, seed=0):
    """tau(prod a_i^(t_i)) == tau(prod a_i^(t_i + eps_i)) for sampled eps."""
    def tau_mixed(ps):
        alg = cm.algebra
        for ideal, t in ps:
            if t > 0:
                alg = alg.with_twist(ideal, Fraction(t))
        return tau(cm.with_algebra(alg), seed=seed).submodule

    base = tau_mixed(pairs)
    results = []
    for eps in epsilons:
        bumped = [(ideal, Fraction(t) + Fraction(e))
                  for (ideal, t), e in zip(pairs, eps)]
        results.append(tau_mixed(bumped) == base)
    return results


def inequality_checks(cm, ideal=None, ts=(), mixed=None, e_max=None, seed=0):
    """Bundle of containment reports; see the per-check helpers."""
    report = {"skoda": [], "mixed": []}
    if ideal is not None:
        for t in ts:
            report["skoda"].append(skoda_report(cm, ideal, t,
                                                e_max=e_max, seed=seed))
    if mixed:
        for pairs, index in mixed:
            report["mixed"].append(mixed_skoda_report(cm, pairs, index,
                                                      e_max=e_max, seed=seed))
    report["ok"] = all(r["ok"] for r in report["skoda"] + report["mixed"])
    return report
