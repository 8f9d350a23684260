import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from jetcalc import charts as ch
from jetcalc.charts import BundleSpec, make_chart
from jetcalc.corpus import KLEIN_GORDON
from jetcalc.errors import DomainError
from jetcalc.expr import Var, const
from jetcalc.forms import canonical_form, dcoord, volume_form
from jetcalc.lagrangian import hessian, poincare_cartan
from jetcalc.numeric import (
    SampleConfig,
    finite_difference_check,
    nondegeneracy_check,
    numeric_rank,
    rank_of,
    sample_points,
)
from jetcalc.parser import parse_expr

from conftest import KG_POINT

J1E21 = make_chart(ch.J1E, BundleSpec(2, 1))


# -- sampling ----------------------------------------------------------------


def test_sampling_is_deterministic():
    cfg = SampleConfig(count=50, seed=42)
    assert sample_points(J1E21, cfg) == sample_points(J1E21, SampleConfig(count=50, seed=42))


def test_different_seeds_differ():
    assert sample_points(J1E21, SampleConfig(count=5, seed=1)) != sample_points(J1E21, SampleConfig(count=5, seed=2))


def test_probe_only():
    pts = sample_points(J1E21, SampleConfig(count=0, probes=[{"y1": 0.5}]))
    assert pts == [{"x1": 0.0, "x2": 0.0, "y1": 0.5, "v1_1": 0.0, "v1_2": 0.0}]


def test_probes_are_appended():
    pts = sample_points(J1E21, SampleConfig(count=3, seed=0, probes=[{}, {"x1": 1.0}]))
    assert len(pts) == 5
    assert pts[3] == dict.fromkeys(J1E21.coords, 0.0)
    assert pts[4]["x1"] == 1.0


def test_samples_within_bounds():
    pts = sample_points(J1E21, SampleConfig(count=10_000, seed=7))
    arr = np.array([[p[n] for n in J1E21.coords] for p in pts])
    assert arr.min() >= -2.0 and arr.max() <= 2.0
    # uses the whole range
    assert arr.min() < -1.99 and arr.max() > 1.99


def test_per_coordinate_ranges():
    pts = sample_points(J1E21, SampleConfig(count=500, seed=0, ranges={"y1": (0.5, 0.75)}))
    assert all(0.5 <= p["y1"] <= 0.75 for p in pts)


@pytest.mark.parametrize("kw", [
    dict(count=0),
    dict(count=-1),
    dict(count=5, ranges={"x1": (1.0, 1.0)}),
    dict(count=5, default_range=(2.0, -2.0)),
])
def test_invalid_sample_configs(kw):
    with pytest.raises(ValueError):
        SampleConfig(**kw)


def test_unknown_probe_coordinate():
    with pytest.raises(ValueError):
        sample_points(J1E21, SampleConfig(count=0, probes=[{"p0": 1.0}]))


# -- finite differences ------------------------------------------------------


def test_fd_kg_momentum():
    L = parse_expr(KLEIN_GORDON, J1E21.coords)
    fd = finite_difference_check(L, "v1_1", KG_POINT)
    assert fd.symbolic == 2.0
    assert fd.numeric == pytest.approx(2.0, abs=1e-6)
    assert fd.abs_diff <= 1e-6


def test_fd_constant():
    fd = finite_difference_check(const(5), "x1", {"x1": 0.3})
    assert fd.symbolic == 0.0 and fd.numeric == 0.0


def test_fd_sine():
    fd = finite_difference_check(parse_expr("sin(x1)", {"x1"}), "x1", {"x1": 0.0})
    assert fd.symbolic == 1.0
    assert fd.numeric == pytest.approx(1.0, abs=1e-9)


def test_fd_domain_error():
    with pytest.raises(DomainError):
        finite_difference_check(parse_expr("sqrt(x1)", {"x1"}), "x1", {"x1": 0.0})


# -- rank --------------------------------------------------------------------


def test_rank_kg_hessian(kg):
    assert numeric_rank(hessian(kg), KG_POINT) == 2


def test_rank_small_cases():
    assert numeric_rank([[0, 0], [0, 0]], {}) == 0
    assert numeric_rank([[1, 1], [1, 1]], {}) == 1
    assert numeric_rank([[Var("x1"), 1], [1, Var("x1")]], {"x1": 1.0}) == 1
    assert numeric_rank([[Var("x1"), 1], [1, Var("x1")]], {"x1": 2.0}) == 2


def test_rank_threshold_is_relative():
    # pivots count above tol * max|entry|
    assert rank_of(np.diag([1e6, 1.0]), 1e-10) == 2
    assert rank_of(np.diag([1e12, 1.0]), 1e-10) == 1
    assert rank_of(np.diag([1e-20, 1e-21]), 1e-10) == 2


def test_rank_of_empty_and_rectangular():
    assert rank_of(np.zeros((0, 0))) == 0
    assert rank_of(np.array([[1.0, 2.0, 3.0]])) == 1
    assert rank_of(np.array([[1.0], [2.0], [3.0]])) == 1


int_matrices = hnp.arrays(np.int64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                          elements=st.integers(-3, 3))


@given(int_matrices)
def test_rank_matches_svd_oracle(A):
    assert rank_of(A.astype(float)) == np.linalg.matrix_rank(A.astype(float))


@given(int_matrices, st.randoms(use_true_random=False))
def test_rank_invariant_under_permutation(A, rnd):
    rows = list(range(A.shape[0]))
    cols = list(range(A.shape[1]))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    assert rank_of(A[rows][:, cols].astype(float)) == rank_of(A.astype(float))


@given(st.integers(1, 5), st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_rank_of_low_rank_product(n, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, n)
    A = rng.standard_normal((n, r)) @ rng.standard_normal((r, n))
    assert rank_of(A) == r


# -- nondegeneracy -----------------------------------------------------------


def test_omega_on_mpi_has_trivial_kernel():
    omega = canonical_form(ch.MPI, "omega", BundleSpec(2, 1))
    pt = sample_points(omega.chart, SampleConfig(count=1, seed=5))[0]
    res = nondegeneracy_check(omega, pt)
    assert res.kernel_dim == 0 and res.verdict == "nondegenerate"


def test_affine_omega_L_is_degenerate(affine):
    omega_L = poincare_cartan(affine, "omega_L")
    for pt in sample_points(affine.chart, SampleConfig(count=10, seed=0)):
        assert nondegeneracy_check(omega_L, pt).kernel_dim >= 1


def test_volume_on_E_kernel_is_vertical():
    E = make_chart(ch.E, BundleSpec(2, 1))
    res = nondegeneracy_check(volume_form(E), {"x1": 0.0, "x2": 0.0, "y1": 0.0})
    assert res.kernel_dim == 1 and res.dim == 3


def test_nondegeneracy_needs_degree_two():
    E = make_chart(ch.E, BundleSpec(2, 1))
    with pytest.raises(ValueError):
        nondegeneracy_check(dcoord(E, "x1"), {})
