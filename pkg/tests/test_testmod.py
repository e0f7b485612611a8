"""Test-element search, regularity decisions, and the tau engines."""

from fractions import Fraction

import pytest

from cartierlab.cartiercore import (CartierAlgebraSpec, CartierOp,
                                    underline, validate_structure)
from cartierlab.errors import NoStabilizationError
from cartierlab.fppoly import EngineCaps, RingSpec
from cartierlab.fpmod import PresentedModule, torsion
from cartierlab.idealkit import Ideal
from cartierlab.testmod import (find_test_elements, is_f_regular,
                                minimality_audit, tau, tau_bms, tau_prime)
from cartierlab.cartiercore import ass_cartier


def twisted_line(p, t, premul=None):
    R = RingSpec(p, ("y",))
    y = R.var("y")
    M = PresentedModule.free(R, 1)
    U = premul if premul is not None else R.one()
    alg = CartierAlgebraSpec([CartierOp(1, [[U]])],
                             twist=(Ideal(R, [y]), Fraction(t)))
    return validate_structure(M, alg), y


def sec3_module():
    R = RingSpec(3, ("x", "y"))
    x, y = R.gens()
    z = R.zero()
    M = PresentedModule(R, 2, [[z, x]])
    U = CartierOp(1, [[x, z], [x * x, (x * y) ** 2]])
    return validate_structure(M, CartierAlgebraSpec([U]))


def intro_module():
    R = RingSpec(2, ("x", "y"))
    x, y = R.gens()
    z = R.zero()
    N = PresentedModule(R, 2, [[y, z]])
    U = CartierOp(1, [[y, z], [z, x]])
    return validate_structure(N, CartierAlgebraSpec([U]))


class TestIsFRegular:
    def test_twisted_line_not_regular(self):
        R = RingSpec(2, ("x",))
        x = R.var("x")
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        ok, cert = is_f_regular(cm)
        assert not ok
        assert "proper_submodule" in cert  # sound witness

    def test_quotient_regular(self):
        R = RingSpec(2, ("x",))
        x = R.var("x")
        Q = PresentedModule.quotient_ring(R, Ideal(R, [x]))
        cm = validate_structure(Q, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        ok, _cert = is_f_regular(cm)
        assert ok

    def test_sec3_regular_but_torsion_piece_not(self):
        cm = sec3_module()
        ok, _ = is_f_regular(cm)
        assert ok
        x = cm.ring.var("x")
        core, _ = underline(cm)
        tor = torsion(cm.module, Ideal(cm.ring, [x]), within=core)
        piece, _ = underline(cm, start=tor)
        okp, _ = is_f_regular(cm.with_carrier(piece))
        assert not okp

    def test_witness_in_associated_prime_rejected(self):
        cm = intro_module()
        with pytest.raises(ValueError):
            is_f_regular(cm, witness=cm.ring.var("y"))


class TestFindTestElements:
    def test_sec3_sequence(self):
        seq = find_test_elements(sec3_module())
        got = [(tuple(e.prime.ideal.serialize()), str(e.element))
               for e in seq.entries]
        assert got == [((), "x"), (("x",), "y")]

    def test_twisted_line_derived(self):
        # for (F_2[x], trace(x * -)) the unit fails at (0) (the module is not
        # regular) but localizing at x is: verified through the recursive check
        R = RingSpec(2, ("x",))
        x = R.var("x")
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        seq = find_test_elements(cm)
        assert [(tuple(e.prime.ideal.serialize()), str(e.element))
                for e in seq.entries] == [((), "x")]

    def test_single_prime_trivial(self):
        R = RingSpec(2, ("x",))
        x = R.var("x")
        Q = PresentedModule.quotient_ring(R, Ideal(R, [x]))
        cm = validate_structure(Q, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        seq = find_test_elements(cm)
        assert [(tuple(e.prime.ideal.serialize()), str(e.element))
                for e in seq.entries] == [(("x",), "1")]


class TestTau:
    def test_floor_formula(self):
        for p in (2, 3, 5):
            for tnum, tden, k in ((1, 2, 0), (1, 1, 1), (3, 2, 1),
                                  (2, 1, 2), (5, 2, 2)):
                cm, y = twisted_line(p, Fraction(tnum, tden))
                got = tau(cm).submodule
                assert got == cm.module.submodule([[y ** k]]), \
                    f"p={p}, t={tnum}/{tden}"

    def test_intro_example_additive(self):
        cm = intro_module()
        R = cm.ring
        x = R.var("x")
        res = tau(cm)
        want = cm.module.submodule([[R.one(), R.zero()], [R.zero(), x]])
        assert res.submodule == want
        # additivity cross-check: the two summands computed separately
        My = PresentedModule.quotient_ring(R, Ideal(R, [R.var("y")]))
        c1 = validate_structure(My, CartierAlgebraSpec(
            [CartierOp(1, [[R.var("y")]])]))
        assert tau(c1).submodule.is_full()
        Mf = PresentedModule.free(R, 1)
        c2 = validate_structure(Mf, CartierAlgebraSpec(
            [CartierOp(1, [[x]])]))
        assert tau(c2).submodule == Mf.submodule([[x]])

    def test_intro_direct_minimality_oracle(self):
        # brute-force cross-check of "smallest": enumerate the stable
        # monomial-generated candidates below tau and verify each fails
        # either stability or one of the per-prime conditions
        from cartierlab.cartiercore import apply_cplus
        from cartierlab.testmod import _nil_iso_at

        cm = intro_module()
        R = cm.ring
        x, y = R.gens()
        res = tau(cm).submodule
        core, _ = underline(cm)
        cmc = cm.with_carrier(core)
        primes = ass_cartier(cm)
        zero = R.zero()
        for a in range(3):
            for b in range(4):
                cand = cm.module.submodule([[x ** a, zero], [zero, x ** b]])
                if cand == res or not res.contains_sub(cand):
                    continue
                stable = cand.contains_sub(apply_cplus(cmc, cand))
                qualifies = stable and all(
                    _nil_iso_at(cmc, pr, core, cand) for pr in primes)
                assert not qualifies, f"candidate a={a} b={b} beat tau"

    def test_line_tau_is_x(self):
        R = RingSpec(2, ("x",))
        x = R.var("x")
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        assert tau(cm).submodule == M.submodule([[x]])

    def test_e0_independence(self):
        cm = sec3_module()
        base = tau(cm, e0=0).submodule
        for e0 in (1, 2):
            assert tau(cm, e0=e0).submodule == base

    def test_minimality_audit(self):
        cm = intro_module()
        res = tau(cm)
        primes = ass_cartier(cm)
        assert minimality_audit(cm, res.submodule, primes) == []

    def test_certificate_contents(self):
        cm = sec3_module()
        res = tau(cm)
        cert = res.certificate
        assert cert["verification"]["algebra_stable"]
        assert all(cert["verification"]["per_prime"].values())
        assert cert["test_elements"]


class TestTauPrime:
    def test_intro(self):
        cm = intro_module()
        R = cm.ring
        x = R.var("x")
        res = tau_prime(cm)
        assert res.submodule == cm.module.submodule([[R.zero(), x]])

    def test_agreement_when_all_minimal(self):
        for p, t in ((2, Fraction(3, 2)), (3, Fraction(1, 2))):
            cm, _y = twisted_line(p, t)
            assert tau_prime(cm).submodule == tau(cm).submodule

    def test_twisted_first_summand(self):
        # the twisted quotient line: tau'(R/(x), (y)-twist t) = y^floor(t)
        R = RingSpec(2, ("x", "y"))
        x, y = R.gens()
        Q = PresentedModule.quotient_ring(R, Ideal(R, [x]))
        alg = CartierAlgebraSpec([CartierOp(1, [[x]])],
                                 twist=(Ideal(R, [y]), Fraction(3, 2)))
        cm = validate_structure(Q, alg)
        assert tau_prime(cm).submodule == Q.submodule([[y]])


class TestTauBms:
    def test_unit_examples(self):
        R = RingSpec(2, ("y",))
        y = R.var("y")
        assert tau_bms(y, 1) == Ideal(R, [y])
        assert tau_bms(y, Fraction(1, 2)) == Ideal(R, [R.one()])

    def test_cusp_first_jump(self):
        R = RingSpec(7, ("x", "y"), caps=EngineCaps(max_total_degree=10 ** 6))
        f = R.parse("x^2 + y^3")
        at = tau_bms(f, Fraction(5, 6))
        before = tau_bms(f, Fraction(5, 6) - Fraction(1, 100))
        assert before == Ideal(R, [R.one()])
        assert at == Ideal(R, [R.var("x"), R.var("y")])
        assert at != before

    def test_no_stabilization_error(self):
        R = RingSpec(2, ("y",))
        y = R.var("y")
        with pytest.raises(NoStabilizationError):
            tau_bms(y, Fraction(1, 3), e_max=3)

    def test_fast_path_equivalence_small(self):
        for p, ftxt, t in ((2, "x^3 + y^2", Fraction(1, 2)),
                           (3, "x*y", Fraction(2, 3)),
                           (5, "x^2 + y^2", Fraction(1, 2))):
            R = RingSpec(p, ("x", "y"),
                         caps=EngineCaps(max_total_degree=100000))
            f = R.parse(ftxt)
            M = PresentedModule.free(R, 1)
            alg = CartierAlgebraSpec([CartierOp(1, [[R.one()]])],
                                     twist=(Ideal(R, [f]), t))
            cm = validate_structure(M, alg)
            eng = Ideal(R, [g.component(0) for g in tau(cm).submodule.basis()])
            assert eng == tau_bms(f, t)


class TestNilInvariance:
    def test_image_of_tau_under_core_inclusion(self):
        # for a non-F-pure module, tau(M) = tau(core) as subsets
        R = RingSpec(2, ("x",))
        x = R.var("x")
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec(
            [CartierOp(1, [[x * x]])]))
        core, k = underline(cm)
        assert k > 0
        t_full = tau(cm).submodule
        t_core = tau(cm.with_carrier(core)).submodule
        assert t_full == t_core

    def test_localization_formal_property(self):
        cm = intro_module()
        y = cm.ring.var("y")
        loc = cm.localize(y)
        t_loc = tau(loc).submodule
        t_amb = tau(cm).submodule
        assert t_loc == loc.canon(t_amb.gens)
