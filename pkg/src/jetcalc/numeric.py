"""Numerical checks shared by the verification routines: finite differences,
numeric rank and the 1-nondegeneracy kernel test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from jetcalc.expr import Expr, differentiate, evaluate
from jetcalc.forms import DiffForm
from jetcalc.sampling import DEFAULT_RANGE, SampleConfig, sample_points

PIVOT_TOL = 1e-10

__all__ = [
    "SampleConfig", "sample_points", "DEFAULT_RANGE", "PIVOT_TOL",
    "finite_difference_check", "numeric_rank", "rank_of", "evaluate_matrix",
    "nondegeneracy_check", "restricted_kernel", "Nondegeneracy", "FiniteDifference",
]


class FiniteDifference(NamedTuple):
    symbolic: float
    numeric: float
    abs_diff: float


def finite_difference_check(e: Expr, var: str, at: Mapping[str, float],
                            h: float = 1e-6) -> FiniteDifference:
    """Compare the symbolic derivative with a central difference of step ``h``."""
    sym = evaluate(differentiate(e, var), at)
    fwd = dict(at)
    bwd = dict(at)
    fwd[var] = at[var] + h
    bwd[var] = at[var] - h
    num = (evaluate(e, fwd) - evaluate(e, bwd)) / (2 * h)
    return FiniteDifference(sym, num, abs(sym - num))


def evaluate_matrix(mat: Sequence[Sequence[object]], at: Mapping[str, float]) -> np.ndarray:
    rows = [[evaluate(c, at) if isinstance(c, Expr) else float(c) for c in row] for row in mat]
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float)


def rank_of(A: np.ndarray, tol: float = PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting.

    A pivot counts when its magnitude exceeds ``tol * max|entry|``.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.size == 0:
        return 0
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return 0
    thresh = tol * scale
    nrows, ncols = A.shape
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        p = row + int(np.argmax(np.abs(A[row:, col])))
        if abs(A[p, col]) <= thresh:
            A[row:, col] = 0.0
            continue
        if p != row:
            A[[row, p]] = A[[p, row]]
        factors = A[row + 1:, col] / A[row, col]
        A[row + 1:, col:] -= np.outer(factors, A[row, col:])
        row += 1
    return row


def numeric_rank(mat: Sequence[Sequence[object]], at: Mapping[str, float],
                 tol: float = PIVOT_TOL) -> int:
    """Rank of a matrix of expressions evaluated at ``at``."""
    return rank_of(evaluate_matrix(mat, at), tol)


@dataclass(frozen=True)
class Nondegeneracy:
    kernel_dim: int
    rank: int
    dim: int

    @property
    def nondegenerate(self) -> bool:
        return self.kernel_dim == 0

    @property
    def verdict(self) -> str:
        return "nondegenerate" if self.nondegenerate else "degenerate"


def contraction_matrix(form: DiffForm, at: Mapping[str, float]) -> np.ndarray:
    """Matrix of v -> i(v)form at a point; one column per coordinate direction."""
    rows: dict = {}
    dim = form.chart.dim
    for idx, c in form.terms.items():
        val = evaluate(c, at)
        if val == 0.0:
            continue
        for pos, i in enumerate(idx):
            rest = idx[:pos] + idx[pos + 1:]
            row = rows.setdefault(rest, np.zeros(dim))
            row[i] += -val if pos % 2 else val
    if not rows:
        return np.zeros((1, dim))
    return np.array([rows[k] for k in sorted(rows)])


def nondegeneracy_check(form: DiffForm, at: Mapping[str, float],
                        tol: float = PIVOT_TOL) -> Nondegeneracy:
    """Kernel dimension of v -> i(v)form at ``at``; zero means 1-nondegenerate."""
    return restricted_kernel(form, at, (), tol)


def restricted_kernel(form: DiffForm, at: Mapping[str, float], frozen: Sequence[str] = (),
                      tol: float = PIVOT_TOL) -> Nondegeneracy:
    """Kernel of v -> i(v)form among vectors whose ``frozen`` components vanish."""
    if form.degree < 2:
        raise ValueError("1-nondegeneracy needs a form of degree >= 2")
    dim = form.chart.dim
    M = contraction_matrix(form, at)
    if frozen:
        M = np.vstack([M, np.eye(dim)[[form.chart.index(n) for n in frozen]]])
    r = rank_of(M, tol)
    return Nondegeneracy(dim - r, r, dim)
