"""Twisted filtrations: jumping numbers, graded pieces, Skoda checks."""

from fractions import Fraction

import pytest

from cartierlab.cartiercore import (CartierAlgebraSpec, CartierOp,
                                    nilpotence, validate_structure)
from cartierlab.filtration import (gr, inequality_checks, jumping_numbers,
                                   mixed_right_continuity, mixed_skoda_report,
                                   skoda_report, twist_algebra)
from cartierlab.fppoly import RingSpec
from cartierlab.fpmod import PresentedModule
from cartierlab.idealkit import Ideal


def plain_line(p, var="y"):
    R = RingSpec(p, (var,))
    M = PresentedModule.free(R, 1)
    cm = validate_structure(M, CartierAlgebraSpec([CartierOp(1, [[R.one()]])]))
    return cm, R.var(var)


class TestTwistAlgebra:
    def test_zero_twist_is_untwisted(self):
        cm, y = plain_line(2)
        alg = twist_algebra(cm.algebra, Ideal(cm.ring, [y]), 0)
        assert not alg.is_twisted()

    def test_exponent_examples(self):
        cm, y = plain_line(2)
        alg = twist_algebra(cm.algebra, Ideal(cm.ring, [y]), 1)
        assert alg.twist_exponents(1) == (2,)  # ceil(1*2)
        cm5, y5 = plain_line(5)
        alg5 = twist_algebra(cm5.algebra, Ideal(cm5.ring, [y5]),
                             Fraction(5, 6))
        assert alg5.twist_exponents(2) == (21,)  # ceil(125/6)

    def test_negative_rejected(self):
        cm, y = plain_line(2)
        with pytest.raises(ValueError):
            twist_algebra(cm.algebra, Ideal(cm.ring, [y]), Fraction(-1, 2))


class TestJumpingNumbers:
    def test_unit_line_integers(self):
        cm, y = plain_line(2)
        spec = jumping_numbers(cm, Ideal(cm.ring, [y]), 3, caps=(2, 2))
        assert spec.jump_values() == [1, 2, 3]
        assert spec.exactness == "EXACT"
        assert all(j.right_continuity_ok for j in spec.jumps)

    def test_trivial_twist_no_jumps(self):
        cm, y = plain_line(2)
        spec = jumping_numbers(cm, Ideal(cm.ring, [cm.ring.one()]), 2,
                               caps=(1, 1))
        assert spec.jump_values() == []

    def test_lower_bound_label_off_fast_path(self):
        R = RingSpec(2, ("x",))
        x = R.var("x")
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec([CartierOp(1, [[x]])]))
        spec = jumping_numbers(cm, Ideal(R, [x]), 1, caps=(1, 1))
        assert spec.exactness == "LOWER-BOUND"
        spec2 = jumping_numbers(cm, Ideal(R, [x]), 1, caps=(1, 1),
                                exact_policy="lower-bound")
        assert spec2.exactness == "LOWER-BOUND"

    def test_monotone_spectrum_finite(self):
        cm, y = plain_line(3)
        spec = jumping_numbers(cm, Ideal(cm.ring, [y]), 2, caps=(1, 1))
        assert len(spec.jumps) <= spec.denominator * 2
        assert spec.jump_values() == sorted(spec.jump_values())


class TestGr:
    def test_unit_jump_is_simple_nonzero(self):
        cm, y = plain_line(2)
        qcm, info = gr(cm, Ideal(cm.ring, [y]), Fraction(1))
        assert not qcm.module.is_zero_module()
        assert not nilpotence(qcm, qcm.module.full_submodule())
        core_dim = qcm.module.rank
        assert core_dim == 1

    def test_non_jump_vanishes(self):
        cm, y = plain_line(2)
        qcm, _ = gr(cm, Ideal(cm.ring, [y]), Fraction(1, 2))
        assert qcm.module.is_zero_module()

    def test_legacy_filtration_kills_first_component(self):
        # the legacy minimal-prime filtration of the diagonal direct sum is
        # zero in the first component at every exponent, so its graded piece
        # at t=1 has zero first component even though the standalone line
        # jumps there; this is exactly the functoriality failure the
        # associated-prime definition repairs
        from cartierlab.testmod import tau_prime

        R = RingSpec(2, ("x", "y"))
        x, y = R.gens()
        z = R.zero()
        N = PresentedModule(R, 2, [[x, z]])
        U = CartierOp(1, [[x, z], [z, x]])
        cm = validate_structure(N, CartierAlgebraSpec([U]))
        first = N.submodule([[R.one(), z]])
        zero = N.zero_submodule()
        for t in (Fraction(0), Fraction(11, 12), Fraction(1)):
            alg = twist_algebra(cm.algebra, Ideal(R, [y]), t) if t else \
                cm.algebra
            cm_t = validate_structure(N, alg)
            sub = tau_prime(cm_t).submodule
            assert sub.intersect(first) == zero
        # while the standalone line does jump at 1 (its graded piece is k)
        line = PresentedModule.quotient_ring(R, Ideal(R, [x]))
        lcm = validate_structure(line, CartierAlgebraSpec(
            [CartierOp(1, [[x]])]))
        t1 = tau_prime(validate_structure(
            line, twist_algebra(lcm.algebra, Ideal(R, [y]), 1))).submodule
        tb = tau_prime(validate_structure(
            line, twist_algebra(lcm.algebra, Ideal(R, [y]),
                                Fraction(11, 12)))).submodule
        assert tb != t1

    def test_structure_validates(self):
        cm, y = plain_line(3)
        qcm, _ = gr(cm, Ideal(cm.ring, [y]), Fraction(2))
        assert qcm.validated


class TestSkoda:
    def test_principal_equality(self):
        cm, y = plain_line(2)
        rep = skoda_report(cm, Ideal(cm.ring, [y]), 2)
        assert rep["ok"] and rep["equality"] and rep["equality_expected"]

    def test_two_generators_inclusion_only(self):
        R = RingSpec(3, ("x", "y"))
        x, y = R.gens()
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec(
            [CartierOp(1, [[R.one()]])]))
        rep = skoda_report(cm, Ideal(R, [x, y]), 1)
        assert rep["inclusion"] and not rep["equality_expected"]
        assert rep["ok"]
        rep2 = skoda_report(cm, Ideal(R, [x, y]), 2)
        assert rep2["ok"] and rep2["equality"]

    def test_mixed_example(self):
        R = RingSpec(2, ("x", "y"))
        x, y = R.gens()
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec(
            [CartierOp(1, [[R.one()]])]))
        rep = mixed_skoda_report(cm, [(Ideal(R, [y]), 1), (Ideal(R, [x]), 1)],
                                 0)
        assert rep["ok"]

    def test_mixed_right_continuity(self):
        R = RingSpec(2, ("x", "y"))
        x, y = R.gens()
        M = PresentedModule.free(R, 1)
        cm = validate_structure(M, CartierAlgebraSpec(
            [CartierOp(1, [[R.one()]])]))
        eps = [(Fraction(1, 48), Fraction(1, 48))]
        results = mixed_right_continuity(
            cm, [(Ideal(R, [y]), Fraction(1, 2)),
                 (Ideal(R, [x]), Fraction(1, 2))], eps)
        assert all(results)

    def test_report_bundle(self):
        cm, y = plain_line(2)
        rep = inequality_checks(cm, ideal=Ideal(cm.ring, [y]), ts=(1, 2, 3))
        assert rep["ok"] and len(rep["skoda"]) == 3


class TestMonotonicity:
    def test_tau_decreasing_in_t(self):
        from cartierlab.filtration import _TauSampler

        cm, y = plain_line(3)
        sampler = _TauSampler(cm, Ideal(cm.ring, [y]))
        values = [sampler.at(Fraction(k, 6)) for k in range(0, 13)]
        for a, b in zip(values, values[1:]):
            assert a.contains_sub(b)
