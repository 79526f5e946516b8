"""Bivector validation, canonical brackets, and the Darboux machinery."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from ncqm.exact_algebra import (
    GaussianRational,
    ThetaPoly,
    UsageError,
    parse_polynomial,
)
from ncqm.poisson import (
    DarbouxMap,
    GammaTower,
    NotPoissonError,
    PoissonBivector,
    assemble_darboux,
    build_gamma,
    canonical_bracket,
    constant_bivector,
    fuzzy_sphere_bivector,
    general_brackets,
    invert_phase_map,
    jacobi_defect,
    levi_civita,
    phase_space_jacobi_defect,
    reference_delta,
    verify_darboux,
)

from conftest import poly_strategy, seeded_poly


class TestJacobi:
    def test_fuzzy_sphere_is_poisson(self, fuzzy):
        assert jacobi_defect(fuzzy).is_zero

    def test_constant_is_poisson(self, const3d):
        assert jacobi_defect(const3d).is_zero

    def test_cyclic_shifted_linear_fails(self):
        # eps^{ijk} v_k with v = (x3, x1, x2) is not Poisson
        w = PoissonBivector(3, {
            (0, 1): parse_polynomial("x2", 3),
            (1, 2): parse_polynomial("x3", 3),
            (2, 0): parse_polynomial("x1", 3),
        })
        defect = jacobi_defect(w)
        assert not defect.is_zero
        assert defect.component(0, 1, 2) == parse_polynomial("-(x1+x2+x3)", 3)

    def test_defect_total_antisymmetry(self):
        w = PoissonBivector(3, {
            (0, 1): parse_polynomial("x2", 3),
            (1, 2): parse_polynomial("x3", 3),
            (2, 0): parse_polynomial("x1", 3),
        })
        d = jacobi_defect(w)
        assert d.component(1, 0, 2) == -d.component(0, 1, 2)
        assert d.component(0, 0, 2).is_zero


class TestBivectorType:
    def test_antisymmetry_enforced(self):
        w = PoissonBivector(2, {(1, 0): parse_polynomial("x1", 2)})
        assert w.entry(0, 1) == parse_polynomial("-x1", 2)
        assert w.entry(1, 0) == parse_polynomial("x1", 2)
        assert w.entry(0, 0).is_zero

    def test_diagonal_rejected(self):
        with pytest.raises(UsageError):
            PoissonBivector(2, {(0, 0): parse_polynomial("x1", 2)})

    def test_graded_entry_rejected(self):
        with pytest.raises(UsageError):
            PoissonBivector(2, {(0, 1): ThetaPoly.theta(2)})


class TestCanonicalBracket:
    def test_canonical_pairs(self):
        n = 2
        y1 = ThetaPoly.coordinate(n, 0, has_momenta=True)
        pi1 = ThetaPoly.momentum(n, 0)
        assert canonical_bracket(y1, pi1) == ThetaPoly.one(n, has_momenta=True)

    def test_spec_example(self):
        n = 2
        y1 = ThetaPoly.coordinate(n, 0, has_momenta=True)
        y2 = ThetaPoly.coordinate(n, 1, has_momenta=True)
        pi2 = ThetaPoly.momentum(n, 1)
        assert canonical_bracket(y1 * pi2, y2) == -y1

    def test_requires_momentum_block(self):
        f = parse_polynomial("x1", 2)
        with pytest.raises(UsageError):
            canonical_bracket(f, f)

    @given(poly_strategy(2, momenta=True), poly_strategy(2, momenta=True))
    @settings(max_examples=25, deadline=None)
    def test_antisymmetry(self, f, g):
        assert canonical_bracket(f, g) == -canonical_bracket(g, f)


def closed_form_order2(w: PoissonBivector, i: int, j: int, k: int) -> ThetaPoly:
    """(1/24)(w^{mk} d_m w^{ij} + w^{mj} d_m w^{ik}) - the bracket-consistent
    orientation of the second-order tensor."""
    n = w.n
    out = ThetaPoly.zero(n, 3)
    for m in range(n):
        out = out + w.entry(m, k) * w.entry(i, j).diff_x(m)
        out = out + w.entry(m, j) * w.entry(i, k).diff_x(m)
    return out.scale(Fraction(1, 24))


class TestGammaTower:
    def test_order_one_is_half_bivector(self, fuzzy):
        tower = build_gamma(fuzzy, 1)
        for i in range(3):
            for j in range(3):
                assert tower.component(1, i, (j,)) == \
                    fuzzy.entry(i, j).scale(Fraction(-1, 2))

    @pytest.mark.parametrize("which", ["fuzzy", "quad2d", "const3d"])
    def test_order_two_closed_form(self, which, request):
        w = request.getfixturevalue(which)
        tower = build_gamma(w, 2)
        for i in range(w.n):
            for j in range(w.n):
                for k in range(w.n):
                    assert tower.component(2, i, (j, k)) == \
                        closed_form_order2(w, i, j, k)

    def test_constant_bivector_truncates(self, const3d):
        tower = build_gamma(const3d, 3)
        assert not tower.tensors[2]
        assert not tower.tensors[3]

    def test_trailing_symmetry_is_structural(self, quad2d):
        tower = build_gamma(quad2d, 3)
        assert tower.component(3, 0, (0, 1, 1)) == tower.component(3, 0, (1, 0, 1))

    def test_antisymmetrized_equation(self, fuzzy):
        # 2 (T^{i,(k,j)} - T^{j,(k,i)}) = (1/4) w^{ck} d_c w^{ij} at order 2:
        # the antisymmetrized linear equation the symmetrization inverts
        tower = build_gamma(fuzzy, 2)
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    lhs = (tower.component(2, i, (k, j))
                           - tower.component(2, j, (k, i))).scale(2)
                    ghat = ThetaPoly.zero(3, 3)
                    for c in range(3):
                        ghat = ghat + fuzzy.entry(c, k) * fuzzy.entry(i, j).diff_x(c)
                    assert lhs == ghat.scale(Fraction(1, 4))

    def test_rejects_non_poisson(self):
        w = PoissonBivector(3, {
            (0, 1): parse_polynomial("x2", 3),
            (1, 2): parse_polynomial("x3", 3),
            (2, 0): parse_polynomial("x1", 3),
        })
        with pytest.raises(NotPoissonError) as err:
            build_gamma(w, 2)
        assert not err.value.defect.is_zero


class TestDarboux:
    def test_first_order_map(self, fuzzy):
        darboux = assemble_darboux(build_gamma(fuzzy, 1))
        th = ThetaPoly.theta(3, 1, 3, True)
        for i in range(3):
            expect = ThetaPoly.coordinate(3, i, 3, True)
            for j in range(3):
                expect = expect - th * fuzzy.entry(i, j).with_momenta() \
                    * ThetaPoly.momentum(3, j).scale(Fraction(1, 2))
            assert darboux.x_of[i] == expect

    def test_grade_zero_is_identity(self, fuzzy):
        darboux = assemble_darboux(build_gamma(fuzzy, 2))
        for i in range(3):
            assert darboux.x_of[i].theta_coefficient(0) == \
                ThetaPoly.coordinate(3, i, 3, True)
            assert darboux.p_of[i] == ThetaPoly.momentum(3, i)

    def test_constant_bivector_exact_at_first_order(self, const3d):
        darboux = assemble_darboux(build_gamma(const3d, 3))
        th = ThetaPoly.theta(3, 1, 3, True)
        for i in range(3):
            expect = ThetaPoly.coordinate(3, i, 3, True)
            for j in range(3):
                expect = expect - th * const3d.entry(i, j).with_momenta() \
                    * ThetaPoly.momentum(3, j).scale(Fraction(1, 2))
            assert darboux.x_of[i] == expect

    @pytest.mark.parametrize("which,order", [
        ("fuzzy", 2), ("fuzzy", 3), ("quad2d", 3), ("const3d", 3),
    ])
    def test_defining_property(self, which, order, request):
        w = request.getfixturevalue(which)
        report = verify_darboux(assemble_darboux(build_gamma(w, order)), w, order)
        assert report.xx_zero
        assert report.pp_zero

    def test_mixed_bracket_reference(self, fuzzy):
        report = verify_darboux(assemble_darboux(build_gamma(fuzzy, 3)), fuzzy, 3)
        assert report.delta_matches_reference
        # first grade of the (1,2) component is +th p3 / 2
        got = report.delta[(0, 1)].theta_coefficient(1)
        assert got == ThetaPoly.momentum(3, 2, 3).scale(Fraction(1, 2))

    def test_order_zero_is_canonical(self, fuzzy):
        darboux = assemble_darboux(build_gamma(fuzzy, 0))
        for i in range(3):
            assert darboux.x_of[i] == ThetaPoly.coordinate(3, i, 3, True)
        report = verify_darboux(darboux, fuzzy, 0)
        assert report.xx_zero and report.pp_zero

    def test_grade_one_coefficient_under_map(self, fuzzy):
        """Substituting the bivector entry through the expansion and
        reading the first-grade coefficient recovers the contracted
        first-order tensor."""
        darboux = assemble_darboux(build_gamma(fuzzy, 3))
        images = {("x", i): darboux.x_of[i] for i in range(3)}
        got = fuzzy.entry(0, 1).with_trunc(3).substitute(images).theta_coefficient(1)
        expect = ThetaPoly.zero(3, 3, True)
        for j in range(3):
            expect = expect - fuzzy.entry(2, j).with_momenta() \
                * ThetaPoly.momentum(3, j).scale(Fraction(1, 2))
        assert got == expect

    def test_inversion_roundtrip(self, fuzzy):
        tower = build_gamma(fuzzy, 3)
        darboux = assemble_darboux(tower)
        ys, pis = invert_phase_map(darboux.x_of, darboux.p_of, 3)
        images = {("x", i): ys[i] for i in range(3)}
        images.update({("p", i): pis[i] for i in range(3)})
        for i in range(3):
            back = darboux.x_of[i].with_trunc(3).substitute(images)
            assert back == ThetaPoly.coordinate(3, i, 3, True)


class TestGeneralBrackets:
    def test_zero_gauge_matches_reference(self, fuzzy):
        zero_j = [ThetaPoly.zero(3, 2, True)] * 3
        got = general_brackets(fuzzy, zero_j, order=2)
        assert all(p.is_zero for p in got.varpi.values())
        for i in range(3):
            for j in range(3):
                assert got.delta[(i, j)] == \
                    reference_delta(fuzzy, i, j, 2).truncated(2)

    def test_zero_gauge_agrees_with_darboux_report(self, fuzzy):
        zero_j = [ThetaPoly.zero(3, 2, True)] * 3
        got = general_brackets(fuzzy, zero_j, order=2)
        report = verify_darboux(assemble_darboux(build_gamma(fuzzy, 2)), fuzzy, 2)
        for key, val in got.delta.items():
            assert val == report.delta[key]

    def test_gradient_gauge_kills_first_grade_varpi(self, fuzzy):
        f = parse_polynomial("x1^2*x2 + x3^2 - x1", 3).with_momenta()
        grad_j = [f.diff_x(i) for i in range(3)]
        got = general_brackets(fuzzy, grad_j, order=2)
        for p in got.varpi.values():
            assert p.theta_coefficient(1).is_zero

    def test_nongradient_gauge_shows_in_varpi(self, fuzzy):
        j = [ThetaPoly.momentum(3, 0, 2) * ThetaPoly.coordinate(3, 1, 2, True),
             ThetaPoly.zero(3, 2, True), ThetaPoly.zero(3, 2, True)]
        got = general_brackets(fuzzy, j, order=2)
        assert any(not p.theta_coefficient(1).is_zero for p in got.varpi.values())

    def test_full_structure_jacobi_first_grade(self, fuzzy):
        j = [ThetaPoly.momentum(3, 0, 2) * ThetaPoly.coordinate(3, 1, 2, True),
             ThetaPoly.zero(3, 2, True), ThetaPoly.zero(3, 2, True)]
        got = general_brackets(fuzzy, j, order=2)
        th = ThetaPoly.theta(3, 1, 2, True)

        def omega_fn(mu, nu):
            if mu < 3 and nu < 3:
                return th * fuzzy.entry(mu, nu).with_trunc(2).with_momenta()
            if mu < 3 <= nu:
                return got.delta[(mu, nu - 3)]
            if nu < 3 <= mu:
                return -got.delta[(nu, mu - 3)]
            i, j_ = mu - 3, nu - 3
            if i == j_:
                return ThetaPoly.zero(3, 2, True)
            return got.varpi[(i, j_)] if i < j_ else -got.varpi[(j_, i)]

        assert not phase_space_jacobi_defect(3, omega_fn, 1)
