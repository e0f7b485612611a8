"""Test modules: distinguished-submodule computation with certificates.

The engine follows the generator-and-trace formula: for each associated
prime eta pick a verified element c (c not in eta, and the localized stable
torsion piece is regular in the operator sense), then close c times that
piece under the algebra and sum over the primes.  Everything the formula
needs (stable cores, torsion pieces, localized checks) runs in place on
saturated submodules, so no re-presentation is required for localization.

Regularity of localized pieces is verified by a shrink fixed point: repeated
one-element closures can only produce qualifying submodules, so finding a
strictly smaller one is a sound "not regular" witness; a fixed point over
the full candidate pool is reported as regular with the candidate list
recorded in the certificate (the pool is heuristic, the spec's acknowledged
trade-off, and every final result is post-verified against the defining
conditions).

``tau_bms`` is the fast path for principal twists on the rank-1 free module:
the stable member of the ascending Frobenius-root chain of f^ceil(t*p^e).
"""

from dataclasses import dataclass, field
from fractions import Fraction
import random

from .cartiercore import ass_cartier, graded_sum, underline
from .errors import (NoStabilizationError, SearchBudgetError,
                     UnsupportedShapeError)
from .fpmod import Submodule, torsion
from .idealkit import (PrimeIdeal, frobenius_root_of_power,
                       irreducible_factors_best_effort, minimal_primes)


@dataclass
class TestElementEntry:
    prime: PrimeIdeal
    element: object  # Poly
    certificate: dict

    def serialize(self):
        return {"prime": self.prime.serialize(),
                "element": str(self.element),
                "certificate": self.certificate}


@dataclass
class TestElementSequence:
    entries: list

    def element_for(self, prime):
        for entry in self.entries:
            if entry.prime == prime:
                return entry
        return None

    def serialize(self):
        return [e.serialize() for e in self.entries]


@dataclass
class TauResult:
    submodule: Submodule
    certificate: dict = field(default_factory=dict)

    def serialize(self):
        return {"submodule": self.submodule.serialize(),
                "certificate": self.certificate}


# ---------------------------------------------------------------------------
# candidate element streams


def _factor_pool(cm):
    ring = cm.ring
    pool = []

    def add(f):
        if f.is_zero() or f.is_constant():
            return
        for g in irreducible_factors_best_effort(f):
            if not g.is_constant() and g not in pool:
                pool.append(g)

    for rel in cm.module.relations:
        for comp in rel.columns():
            add(comp)
    for op in cm.algebra.generators:
        for row in op.matrix:
            for u in row:
                add(u)
    if cm.algebra.twist is not None:
        for g in cm.algebra.twist[0].gens:
            add(g)
    try:
        ann = cm.carrier_sub().annihilator()
        for g in ann.groebner():
            add(g)
    except Exception:
        pass
    return pool


def candidate_elements(cm, seed=0, budget=12):
    """Deterministic candidates first, then seeded random linear forms."""
    ring = cm.ring
    seen = set()

    def emit(f):
        if f.is_zero():
            return None
        if f in seen:
            return None
        seen.add(f)
        return f

    out = []
    one = ring.one()
    if emit(one):
        out.append(one)
    variables = ring.gens()
    for v in variables:
        if emit(v):
            out.append(v)
    pool = _factor_pool(cm)
    for f in pool:
        if emit(f):
            out.append(f)
    base = variables + pool
    for i, a in enumerate(base):
        for b in base[i:]:
            f = a * b
            if emit(f):
                out.append(f)
    rng = random.Random(0x7E57E1 + seed)
    for _ in range(budget):
        coeffs = [rng.randrange(ring.p) for _ in range(ring.nvars + 1)]
        f = ring.const(coeffs[-1])
        for c, v in zip(coeffs, variables):
            f = f + v.scale(c)
        if not f.is_constant() and emit(f):
            out.append(f)
    return out


# ---------------------------------------------------------------------------
# regularity in the operator sense


def _shrink_fixed_point(cm, ass_primes, seed=0):
    """Iterated one-element shrinking of the carrier.

    Each step replaces T by closure(c*T) for a candidate c avoiding every
    associated prime; such steps preserve the defining localization
    conditions, so any strict descent certifies a proper qualifying
    submodule.  Returns (fixed point, tried candidates).
    """
    carrier = cm.carrier_sub()
    cands = [c for c in candidate_elements(cm, seed=seed)
             if not any(pr.contains(c) for pr in ass_primes)]
    if not cands:
        raise SearchBudgetError(
            "no avoider found for the associated primes; supply a witness")
    current = carrier
    changed = True
    while changed:
        changed = False
        for c in cands:
            seeded = current.scale_poly(c)
            shrunk, _info = graded_sum(cm, cm.canon(list(seeded.gens)))
            if shrunk != current:
                if not current.contains_sub(shrunk):
                    raise AssertionError(
                        "closure of a multiple left the module (internal)")
                current = shrunk
                changed = True
    return current, [str(c) for c in cands]


def is_f_regular(cm, witness=None, candidates=None, seed=0):
    """Decide whether the carrier equals its own test module.

    Returns (bool, certificate).  False answers carry a proper qualifying
    submodule and are sound; True answers record the candidate pool that
    failed to shrink the module (heuristic completeness, flagged).
    """
    core, k = underline(cm)
    cert = {"f_pure": k == 0}
    if core.is_trivial():
        cert["note"] = "zero module"
        return (cm.carrier_sub().is_trivial(), cert)
    if k != 0:
        cert["note"] = "not F-pure"
        return False, cert
    cmc = cm.with_carrier(core)
    ass = ass_cartier(cmc, candidates=candidates)
    if not ass:
        raise UnsupportedShapeError(
            "no associated primes found for a nonzero module; "
            "supply candidates")
    cert["ass"] = [pr.ideal.serialize() for pr in ass]
    if witness is not None:
        cands_note = [witness]
        if any(pr.contains(witness) for pr in ass):
            raise ValueError("witness lies in an associated prime")
        shrunk, _ = graded_sum(cmc, cmc.canon(
            list(core.scale_poly(witness).gens)))
        cert["witness"] = str(witness)
        if shrunk != core:
            cert["proper_submodule"] = shrunk.serialize()
            return False, cert
        # fall through to the full pool for a stronger verdict
    fixed, tried = _shrink_fixed_point(cmc, ass, seed=seed)
    cert["candidates"] = tried
    if fixed != core:
        cert["proper_submodule"] = fixed.serialize()
        return False, cert
    cert["verdict"] = "no candidate shrinks the module (heuristic pool)"
    return True, cert


# ---------------------------------------------------------------------------
# test elements


_VERIFY_CACHE = {}


def _piece_at(cm, prime, core):
    """Stable core of the prime-power-torsion inside the stable core."""
    tor = torsion(cm.module, prime.ideal, within=core)
    tor = cm.canon_sub(tor)
    piece, _ = underline(cm, start=tor)
    return piece


def _verify_test_element(cm, prime, c, core, seed=0):
    """Check that the localized stable torsion piece is regular.

    Results are cached on the localized data (module, trivialized algebra,
    saturated carrier, prime); for a twisted family this makes the
    verification shared across exponents once the twist is inverted away.
    """
    piece = _piece_at(cm, prime, core)
    if piece.is_trivial():
        return True, {"note": "torsion piece vanishes"}
    loc = cm.localize(c)
    loc_piece = loc.canon(piece.gens)
    loc = loc.with_carrier(loc_piece)
    key = (str(loc.module.serialize()),
           str(loc.algebra.serialize()),
           str(loc_piece.serialize()),
           tuple(prime.ideal.serialize()),
           str(loc.inverted))
    if key in _VERIFY_CACHE:
        return _VERIFY_CACHE[key]
    try:
        result = is_f_regular(loc, seed=seed)
    except (UnsupportedShapeError, SearchBudgetError) as ex:
        result = (False, {"error": str(ex)})
    _VERIFY_CACHE[key] = result
    return result


def _order_by_inclusion(primes):
    """Minimal primes first; if eta is contained in nu, eta comes first."""
    remaining = list(primes)
    out = []
    while remaining:
        for pr in remaining:
            if not any(other is not pr
                       and pr.ideal.contains_ideal(other.ideal)
                       for other in remaining):
                out.append(pr)
                remaining.remove(pr)
                break
        else:
            out.extend(remaining)
            break
    return out


def _search_element(cmc, prime, core, isolate, seed, mandatory_isolation):
    """First verified element c with c not in ``prime``.

    Candidates lying inside every prime of ``isolate`` are tried first;
    isolation pins the associated primes of the localized piece down to
    ``prime`` itself, which both matches the existence proof's search and
    keeps the recursive verification in its single-prime base case.
    """
    diagnostics = []
    pool = candidate_elements(cmc, seed=seed)
    stages = [[c for c in pool
               if all(nu.contains(c) for nu in isolate)]] if isolate else []
    if not mandatory_isolation or not isolate:
        stages.append(pool)
    for stage in stages:
        for c in stage:
            if prime.contains(c):
                continue
            ok, cert = _verify_test_element(cmc, prime, c, core, seed=seed)
            if ok:
                return TestElementEntry(prime, c, cert)
            diagnostics.append(str(c))
    raise SearchBudgetError(
        f"no test element found for {prime!r}; tried {diagnostics}")


def _find_for_primes(cmc, core, ass, seed):
    entries = []
    for prime in _order_by_inclusion(ass):
        isolate = [nu for nu in ass
                   if nu != prime and nu.ideal.contains_ideal(prime.ideal)]
        entries.append(_search_element(cmc, prime, core, isolate, seed,
                                       mandatory_isolation=False))
    return TestElementSequence(entries)


def find_test_elements(cm, candidates=None, seed=0):
    """Search a verified sequence of per-prime elements.

    For each associated prime eta, candidates are tried in order (isolating
    ones, which lie in every associated prime strictly containing eta,
    first; then the rest); the first one whose localized stable torsion
    piece passes the regularity check is recorded with its certificate.
    """
    core, _ = underline(cm)
    cmc = cm.with_carrier(core)
    ass = ass_cartier(cmc, candidates=candidates)
    return _find_for_primes(cmc, core, ass, seed)


# ---------------------------------------------------------------------------
# the test module


def _nil_iso_at(cm, prime, big, small):
    """Is H0_eta(small) inside H0_eta(big) a nil-isomorphism at eta?

    Kernel is zero (inclusion); the cokernel is nilpotent at eta iff the
    stable chain member of the eta-torsion of ``big`` lands in ``small``
    after localizing, i.e.  ann(stable/small) is not inside eta.
    """
    tor_big = cm.canon_sub(torsion(cm.module, prime.ideal, within=big))
    stable, _ = underline(cm, start=tor_big)
    tor_small = cm.canon_sub(torsion(cm.module, prime.ideal, within=small))
    gens = stable.generators_reduced()
    if not gens:
        return True
    conductor = None
    for g in gens:
        J = tor_small.colon_ideal(g)
        conductor = J if conductor is None else conductor.intersect(J)
    if cm.inverted is not None:
        conductor = conductor.saturation_elem(cm.inverted)
    return not all(prime.contains(g) for g in conductor.groebner())


def _equal_at(cm, prime, big, small):
    """Does the inclusion small <= big become an equality at ``prime``?"""
    gens = big.generators_reduced()
    if not gens:
        return True
    conductor = None
    for g in gens:
        J = small.colon_ideal(g)
        conductor = J if conductor is None else conductor.intersect(J)
    if cm.inverted is not None:
        conductor = conductor.saturation_elem(cm.inverted)
    return not all(prime.contains(g) for g in conductor.groebner())


def _tau_engine(cm, primes, test_elements, e0=0, seed=0, verify=True,
                condition="nil-iso", known_core=None):
    core, stab = known_core if known_core is not None else underline(cm)
    cert = {"stabilization_exponent": stab,
            "e0": e0,
            "primes": [pr.ideal.serialize() for pr in primes]}
    if core.is_trivial():
        return TauResult(core, cert | {"note": "stable core is zero"})
    cmc = cm.with_carrier(core)
    total = cmc.canon([])
    used = []
    windows = []
    for prime in primes:
        entry = test_elements.element_for(prime)
        if entry is None:
            raise SearchBudgetError(f"no test element supplied for {prime!r}")
        piece = _piece_at(cmc, prime, core)
        seeded = piece.scale_poly(entry.element)
        part, info = graded_sum(cmc, cmc.canon(list(seeded.gens)), e_min=e0)
        windows.append(info)
        total = cmc.canon(list(total.gens) + list(part.gens))
        used.append({"prime": prime.ideal.serialize(),
                     "element": str(entry.element)})
    cert["test_elements"] = used
    cert["closure_info"] = windows
    result = total
    if verify:
        checks = {}
        stable_sub, _info2 = graded_sum(cmc, result, e_min=1)
        checks["algebra_stable"] = result.contains_sub(stable_sub)
        checks["inside_core"] = core.contains_sub(result)
        per_prime = {}
        for prime in primes:
            key = ", ".join(prime.ideal.serialize()) or "0"
            if condition == "generic-equality":
                per_prime[key] = _equal_at(cmc, prime, core, result)
            else:
                per_prime[key] = _nil_iso_at(cmc, prime, core, result)
        checks["per_prime"] = per_prime
        cert["verification"] = checks
        if not (checks["algebra_stable"] and checks["inside_core"]
                and all(per_prime.values())):
            raise AssertionError(
                f"test-module verification failed: {checks}")
    return TauResult(result, cert)


def tau(cm, test_elements=None, candidates=None, e0=0, seed=0, verify=True):
    """Test module via the per-prime closure formula, with verification."""
    core, stab = underline(cm)
    cmc = cm.with_carrier(core)
    if core.is_trivial():
        return TauResult(core, {"note": "stable core is zero"})
    primes = ass_cartier(cmc, candidates=candidates)
    if test_elements is None:
        test_elements = _find_for_primes(cmc, core, primes, seed)
    return _tau_engine(cm, primes, test_elements, e0=e0, seed=seed,
                       verify=verify, known_core=(core, stab))


def tau_prime(cm, test_elements=None, candidates=None, e0=0, seed=0,
              verify=True):
    """Legacy variant: generic agreement at the minimal support primes only.

    The per-prime elements must isolate their prime (lie in every associated
    prime strictly above it): without isolation the closure picks up embedded
    components and overshoots the minimal qualifying submodule.
    """
    core, stab = underline(cm)
    if core.is_trivial():
        return TauResult(core, {"note": "stable core is zero"})
    cmc = cm.with_carrier(core)
    ann = core.annihilator()
    if cm.inverted is not None:
        ann = ann.saturation_elem(cm.inverted)
    primes = minimal_primes(ann, candidates=candidates)
    if test_elements is None:
        ass = ass_cartier(cmc, candidates=candidates)
        entries = []
        for prime in primes:
            isolate = [nu for nu in ass
                       if nu != prime and nu.ideal.contains_ideal(prime.ideal)]
            entries.append(_search_element(cmc, prime, core, isolate, seed,
                                           mandatory_isolation=True))
        test_elements = TestElementSequence(entries)
    return _tau_engine(cm, primes, test_elements, e0=e0, seed=seed,
                       verify=verify, condition="generic-equality",
                       known_core=(core, stab))


def minimality_audit(cm, tau_sub, primes, seed=0):
    """One-generator-descent audit of minimality.

    For each basis generator g, the closure of the remaining generators must
    either re-close to the full result or fail one of the defining per-prime
    conditions.  Weak but mechanical; returns the list of failures.
    """
    core, _ = underline(cm)
    cmc = cm.with_carrier(core)
    failures = []
    gens = tau_sub.generators_reduced()
    for i in range(len(gens)):
        rest = gens[:i] + gens[i + 1:]
        shrunk, _info = graded_sum(cmc, cmc.canon(rest))
        if shrunk == tau_sub:
            continue
        ok = all(_nil_iso_at(cmc, pr, core, shrunk) for pr in primes)
        if ok:
            failures.append(str(gens[i]))
    return failures


# ---------------------------------------------------------------------------
# fast path for principal twists on the rank-1 free module


def ceil_pattern_window(p, t):
    """Consecutive-equal-steps window covering the periodicity of ceil(t*p^e).

    The exponent pattern has preperiod v_p(denominator) and period equal to
    the multiplicative order of p modulo the p-free part, so a plateau of
    this length spans one full pattern cycle.
    """
    den = Fraction(t).denominator
    pre = 0
    while den % p == 0:
        den //= p
        pre += 1
    period = 1
    if den > 1:
        acc = p % den
        while acc != 1:
            acc = (acc * p) % den
            period += 1
    return max(3, pre + period + 1)


def tau_bms(f, t, e_max=None):
    """Stable value of the ascending chain root_e(f^ceil(t*p^e)).

    Consecutive equality alone can be a plateau before a later jump (the
    exponent pattern is only eventually periodic), so stabilization is
    declared after a full pattern window of equal steps; raises
    NoStabilizationError when e_max is reached first.
    """
    if f.is_zero():
        raise ValueError("hypersurface equation must be nonzero")
    t = Fraction(t)
    if t < 0:
        raise ValueError("exponent must be >= 0")
    ring = f.ring
    e_max = e_max if e_max is not None else ring.caps.chain_cap
    window = ceil_pattern_window(ring.p, t)
    import math as _math

    prev = None
    quiet = 0
    for e in range(1, e_max + 1):
        exponent = _math.ceil(t * ring.p ** e)
        current = frobenius_root_of_power(f, exponent, e)
        if prev is not None:
            if not current.contains_ideal(prev):
                raise AssertionError(
                    "root chain failed to ascend (internal error)")
            quiet = quiet + 1 if current == prev else 0
            if quiet >= window:
                return current
        prev = current
    raise NoStabilizationError(
        f"root chain did not stabilize within e_max={e_max} "
        f"(window {window})")
