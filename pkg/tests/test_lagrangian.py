import pytest
import sympy

from jetcalc import charts as ch
from jetcalc.charts import BundleSpec
from jetcalc.corpus import POLYNOMIAL_LAGRANGIANS, TRANSCENDENTAL_LAGRANGIANS, lagrangian_corpus
from jetcalc.errors import StrayCoordinate, UnknownIdentifier
from jetcalc.expr import Verdict, const, equivalence_check
from jetcalc.forms import DiffForm, compare_forms
from jetcalc.lagrangian import (
    LagrangianSystem,
    classify_regularity,
    expanded_omega_L,
    hessian,
    hessian_from_momenta,
    legendre_jacobian,
    load_system,
    minimal_kernel_dim,
    poincare_cartan,
    symbolic_det,
)
from jetcalc.legendre import LegendreKind, legendre_map
from jetcalc.numeric import nondegeneracy_check, numeric_rank, restricted_kernel
from jetcalc.parser import parse_expr
from jetcalc.verdicts import PROVED

from test_expr import to_sympy

S21 = BundleSpec(2, 1)


def P(src, spec=S21):
    return parse_expr(src, ch.make_chart(ch.J1E, spec).coords)


# -- loading -----------------------------------------------------------------


def test_load_kg(kg):
    assert kg.L == P("1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2")
    assert kg.chart.coords == ("x1", "x2", "y1", "v1_1", "v1_2")


def test_load_affine(affine):
    assert affine.L == P("y1*v1_1")


@pytest.mark.parametrize("src", ["p1_1", "y1*P1_1", "p0 + v1_1"])
def test_momentum_names_are_stray(src):
    with pytest.raises(StrayCoordinate):
        load_system(S21, src)


def test_unknown_name_is_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        load_system(S21, "z + v1_1")


def test_direct_construction_checks_chart():
    with pytest.raises(StrayCoordinate):
        LagrangianSystem(BundleSpec(1, 1), P("v1_2"))


# -- Poincare-Cartan forms ---------------------------------------------------


def test_theta_L_for_kg(kg):
    # J1E indices: x1=0 x2=1 y1=2 v1_1=3 v1_2=4
    expected = DiffForm(kg.chart, 2, {
        (0, 1): P("-1/2*v1_1^2 + 1/2*v1_2^2 - 1/2*y1^2"),
        (0, 2): P("-v1_2"),
        (1, 2): P("-v1_1"),
    })
    assert poincare_cartan(kg, "theta_L") == expected


def test_theta_lower_for_kg(kg):
    theta = poincare_cartan(kg, "theta_lower")
    assert theta.coefficient("x1", "x2") == P("v1_2^2 - v1_1^2")
    # minus v dL/dv
    assert theta.coefficient("x1", "x2") == -(P("v1_1") * kg.momentum(1, 1) + P("v1_2") * kg.momentum(1, 2))


def test_zero_lagrangian_forms():
    z = load_system(S21, "0")
    for which in ("theta_L", "omega_L", "theta_lower", "dtheta_lower"):
        assert poincare_cartan(z, which).is_zero()


def test_theta_L_minus_theta_lower_is_L_volume(kg):
    diff = poincare_cartan(kg, "theta_L") - poincare_cartan(kg, "theta_lower")
    assert diff.terms == {(0, 1): kg.L}


@pytest.mark.parametrize("entry", POLYNOMIAL_LAGRANGIANS, ids=lambda e: e.name)
def test_omega_L_matches_expanded_polynomial(entry):
    sys = entry.system()
    res = compare_forms("omega_L", poincare_cartan(sys, "omega_L"), expanded_omega_L(sys))
    assert res.status == PROVED


@pytest.mark.parametrize("entry", TRANSCENDENTAL_LAGRANGIANS, ids=lambda e: e.name)
def test_omega_L_matches_expanded_transcendental(entry):
    sys = entry.system()
    res = compare_forms("omega_L", poincare_cartan(sys, "omega_L"), expanded_omega_L(sys),
                        mode="numeric", tol=1e-9)
    assert res.ok and res.max_residual <= 1e-9


# -- Hessian and Jacobian ----------------------------------------------------


def test_hessian_kg(kg):
    assert hessian(kg) == ((const(1), const(0)), (const(0), const(-1)))


def test_hessian_affine(affine):
    assert all(c == const(0) for row in hessian(affine) for c in row)


def test_hessian_rank_one():
    H = hessian(load_system(S21, "1/2*(v1_1 + v1_2)^2"))
    assert H == ((const(1), const(1)), (const(1), const(1)))
    assert numeric_rank(H, {}) == 1


@pytest.mark.parametrize("entry", lagrangian_corpus(), ids=lambda e: e.name)
def test_hessian_symmetric_and_matches_sympy(entry):
    sys = entry.system()
    H = hessian(sys)
    L = to_sympy(sys.L)
    names = [ch.vname(A, mu) for A, mu in sys.spec.pairs]
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            assert equivalence_check(H[i][j], H[j][i]).equal
            oracle = sympy.diff(L, sympy.Symbol(a), sympy.Symbol(b))
            assert sympy.simplify(to_sympy(H[i][j]) - oracle) == 0


def test_hessian_layout_is_field_major():
    sys = load_system(BundleSpec(2, 2), "v1_2*v2_1")
    H = hessian(sys)
    # (1,2) is row 1, (2,1) is row 2
    assert H[1][2] == const(1) and H[2][1] == const(1)
    assert sum(1 for row in H for c in row if c != const(0)) == 2


def test_legendre_jacobian_kg(kg):
    J = legendre_jacobian(kg)
    assert len(J) == 5
    assert [J[i][i] for i in range(3)] == [const(1)] * 3
    assert J[3][3:] == (const(1), const(0)) and J[4][3:] == (const(0), const(-1))
    assert all(J[r][c] == const(0) for r in (3, 4) for c in range(3))


def test_legendre_jacobian_zero():
    J = legendre_jacobian(load_system(S21, "0"))
    for r in range(5):
        for c in range(5):
            assert J[r][c] == const(1 if (r == c and r < 3) else 0)


def test_legendre_jacobian_affine(affine):
    J = legendre_jacobian(affine)
    # row p1_1, column y1
    assert J[3][2] == const(1)


@pytest.mark.parametrize("entry", lagrangian_corpus(), ids=lambda e: e.name)
def test_jacobian_lower_block_is_hessian(entry):
    sys = entry.system()
    J, H = legendre_jacobian(sys), hessian(sys)
    k = sys.spec.m + sys.spec.N
    for r, row in enumerate(H):
        for c, h in enumerate(row):
            assert equivalence_check(J[k + r][k + c], h).verdict is Verdict.PROVED_EQUAL


@pytest.mark.parametrize("entry", POLYNOMIAL_LAGRANGIANS, ids=lambda e: e.name)
def test_symbolic_det_matches_sympy(entry):
    H = hessian(entry.system())
    ours = to_sympy(symbolic_det(H))
    theirs = sympy.Matrix([[to_sympy(c) for c in row] for row in H]).det()
    assert sympy.expand(ours - theirs) == 0


# -- regularity --------------------------------------------------------------


def test_kg_is_regular(kg):
    rep = classify_regularity(kg, samples=50)
    assert rep.classification == "Regular"
    assert rep.qualifier == "symbolic determinant"
    assert rep.det == const(-1) and rep.det_status == "nonzero-constant"
    assert rep.hyper_regular == "hyper-regular (affine criterion)"
    assert not rep.discrepancies


def test_affine_is_constant_rank_zero(affine):
    rep = classify_regularity(affine, samples=50)
    assert rep.classification == "SingularConstantRank(0)"
    assert rep.almost_regular_candidate
    assert rep.connectedness == "unchecked"
    assert rep.hyper_regular == "no (not regular)"


def test_degenerate_cubic_has_variable_rank():
    sys = load_system(BundleSpec(1, 1), "1/2*y1*v1_1^2")
    rep = classify_regularity(sys, samples=50)
    assert rep.classification == "SingularVariableRank"
    assert not rep.almost_regular_candidate
    ranks = {r for _, r in rep.sampled_ranks}
    assert ranks == {0, 1}
    zero_y = [r for p, r in rep.sampled_ranks if p["y1"] == 0.0]
    assert zero_y and all(r == 0 for r in zero_y)


def test_variable_rank_needs_the_probe():
    # random draws alone never hit y1 = 0
    sys = load_system(BundleSpec(1, 1), "1/2*y1*v1_1^2")
    rep = classify_regularity(sys, samples=50)
    random_part = rep.sampled_ranks[:50]
    assert {r for _, r in random_part} == {1}


def test_sampled_only_regular():
    sys = load_system(BundleSpec(1, 1), "v1_1^4/4 + v1_1^2/2 + y1")
    rep = classify_regularity(sys, samples=50)
    assert rep.classification == "Regular"
    assert rep.qualifier == "sampled-only"
    assert rep.hyper_regular == "unverified (global property)"


def test_quartic_is_sampled_variable_rank():
    # d2L/dv1_1^2 = 3 v1_1^2 vanishes only on v1_1 = 0, caught by the origin probe
    sys = load_system(S21, "v1_1^4/4 + v1_2^2")
    rep = classify_regularity(sys, samples=50)
    assert rep.classification == "SingularVariableRank"
    assert rep.qualifier == "sampled-only"


def test_report_is_deterministic(kg):
    a = classify_regularity(kg, samples=30, seed=4).to_dict(include_points=True)
    b = classify_regularity(kg, samples=30, seed=4).to_dict(include_points=True)
    assert a == b


def test_report_text(kg):
    text = str(classify_regularity(kg, samples=10))
    assert "classification: Regular" in text


@pytest.mark.parametrize("entry", lagrangian_corpus(), ids=lambda e: e.name)
def test_hessian_rank_matches_omega_kernel(entry):
    sys = entry.system()
    rep = classify_regularity(sys, samples=20, equivalence_points=10)
    assert rep.equivalence_checks
    assert not rep.discrepancies
    if sys.spec.m >= 2:
        assert all(c["literal_consistent"] for c in rep.equivalence_checks)


def test_m1_kernel_is_never_trivial():
    # on odd-dimensional J1E a 2-form always has a kernel
    sys = load_system(BundleSpec(1, 1), "1/2*v1_1^2 - y1^2")
    omega = poincare_cartan(sys, "omega_L")
    at = {"x1": 0.3, "y1": 0.2, "v1_1": -1.0}
    assert nondegeneracy_check(omega, at).kernel_dim == minimal_kernel_dim(sys.spec) == 1
    # the kernel is transverse to the fibres of J1E -> M
    assert restricted_kernel(omega, at, ["x1"]).kernel_dim == 0


def test_m1_vertical_kernel_detects_degeneracy():
    # at y1 = 0 the Hessian vanishes but the kernel dimension stays minimal
    sys = load_system(BundleSpec(1, 1), "1/2*y1*v1_1^2")
    omega = poincare_cartan(sys, "omega_L")
    at = {"x1": 0.5, "y1": 0.0, "v1_1": -1.5}
    assert nondegeneracy_check(omega, at).kernel_dim == 1
    assert restricted_kernel(omega, at, ["x1"]).kernel_dim == 1


@pytest.mark.parametrize("entry", lagrangian_corpus(), ids=lambda e: e.name)
def test_classification_is_psi_invariant(entry):
    sys = entry.system()
    spec = sys.spec
    restricted = legendre_map(sys, LegendreKind.RESTRICTED)
    reduced = legendre_map(sys, LegendreKind.REDUCED)
    mom_r = {(A, mu): restricted[ch.pname(A, mu)] for A, mu in spec.pairs}
    mom_d = {(A, mu): reduced[ch.pname(A, mu)] for A, mu in spec.pairs}
    assert hessian_from_momenta(spec, mom_r) == hessian_from_momenta(spec, mom_d)
    a = classify_regularity(sys, samples=20, momenta=mom_r).to_dict(include_points=True)
    b = classify_regularity(sys, samples=20, momenta=mom_d).to_dict(include_points=True)
    assert a == b
