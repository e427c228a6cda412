"""Judgment matrices, principal-eigenvector weights and consistency checks.

The criteria order is fixed throughout the package: Slope, Elevation,
Distance from streams, Hydro-lithological formations, Land use type.  The
sensitivity sweep varies the three pairwise judgments among the
converging-related criteria and holds the rest constant, giving 48
projects.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import numpy as np

from .errors import ConvergenceError

CRITERIA = ("Slope", "Elevation", "DistStreams", "HydroLith", "LandUse")

# Saaty's random consistency index for matrix orders 1..10.
RANDOM_INDEX = (0.0, 0.0, 0.52, 0.89, 1.11, 1.25, 1.35, 1.40, 1.45, 1.49)

CONSISTENCY_LIMIT = 0.1

SLOPE_ELEVATION = (4, 5, 6, 7, 8, 9)
SLOPE_STREAMS = (Fraction(1, 2), Fraction(1, 3))
ELEVATION_STREAMS = (Fraction(1, 3), Fraction(1, 4), Fraction(1, 5), Fraction(1, 6))

# Upper-triangle judgments that stay fixed across projects, as (row, col).
FIXED_JUDGMENTS = {
    (0, 3): Fraction(3),
    (0, 4): Fraction(1, 2),
    (1, 3): Fraction(1, 2),
    (1, 4): Fraction(1, 4),
    (2, 3): Fraction(3),
    (2, 4): Fraction(1),
    (3, 4): Fraction(1, 3),
}


def random_index(n):
    if not 1 <= n <= len(RANDOM_INDEX):
        raise ValueError(f"no random index tabulated for order {n}")
    return RANDOM_INDEX[n - 1]


@dataclass(frozen=True, eq=False)
class JudgmentMatrix:
    """Positive reciprocal pairwise comparison matrix."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"judgment matrix must be square, got shape {a.shape}")
        if not np.all(a > 0):
            raise ValueError("judgment matrix entries must be positive")
        if not np.allclose(np.diag(a), 1.0, rtol=0, atol=1e-12):
            raise ValueError("judgment matrix diagonal must be 1")
        if not np.allclose(a * a.T, 1.0, rtol=1e-12, atol=0):
            raise ValueError("judgment matrix is not reciprocal")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_upper(cls, n, upper):
        """Build from ``{(i, j): value}`` for ``i < j``; the rest is implied."""
        a = np.ones((n, n))
        for (i, j), v in upper.items():
            if not i < j:
                raise ValueError(f"upper-triangle key expected, got {(i, j)}")
            a[i, j] = float(v)
            a[j, i] = 1.0 / float(v)
        return cls(a)

    @classmethod
    def from_weights(cls, weights):
        """Perfectly consistent matrix ``w_i / w_j``."""
        w = np.asarray(weights, dtype=float)
        return cls(w[:, None] / w[None, :])

    @property
    def order(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenResult:
    lambda_max: float
    weights: np.ndarray
    ci: float
    cr: float
    iterations: int = 0

    @property
    def consistent(self):
        return consistency_gate(self)


@dataclass(frozen=True)
class ProjectDefinition:
    """One sweep project: the three variable pairwise judgments."""

    prj_no: int
    s_e: int
    s_r: Fraction
    e_r: Fraction

    def __post_init__(self):
        if self.s_e not in SLOPE_ELEVATION:
            raise ValueError(f"Slope/Elevation judgment {self.s_e} not in {SLOPE_ELEVATION}")
        if self.s_r not in SLOPE_STREAMS:
            raise ValueError(f"Slope/Streams judgment {self.s_r} not in sweep set")
        if self.e_r not in ELEVATION_STREAMS:
            raise ValueError(f"Elevation/Streams judgment {self.e_r} not in sweep set")
        expected = project_number(self.s_e, self.s_r, self.e_r)
        if self.prj_no != expected:
            raise ValueError(f"project number {self.prj_no} does not match judgments (expected {expected})")


def project_number(s_e, s_r, e_r):
    return (
        8 * SLOPE_ELEVATION.index(s_e)
        + 4 * SLOPE_STREAMS.index(Fraction(s_r))
        + ELEVATION_STREAMS.index(Fraction(e_r))
        + 1
    )


def enumerate_projects():
    """All 48 projects, Slope/Elevation outermost and Elevation/Streams innermost."""
    return [
        ProjectDefinition(project_number(se, sr, er), se, sr, er)
        for se, sr, er in itertools.product(SLOPE_ELEVATION, SLOPE_STREAMS, ELEVATION_STREAMS)
    ]


def get_project(prj_no):
    projects = enumerate_projects()
    if not 1 <= prj_no <= len(projects):
        raise ValueError(f"project number must be in 1..{len(projects)}, got {prj_no}")
    return projects[prj_no - 1]


def build_matrix(prj):
    """5x5 criteria matrix for ``prj`` (criteria order as in :data:`CRITERIA`)."""
    upper = dict(FIXED_JUDGMENTS)
    upper[0, 1] = Fraction(prj.s_e)
    upper[0, 2] = prj.s_r
    upper[1, 2] = prj.e_r
    return JudgmentMatrix.from_upper(len(CRITERIA), upper)


def principal_eigen(matrix, start=None, tol=1e-12, max_iter=10_000):
    """Principal eigenpair by power iteration, with consistency statistics.

    The iterate is renormalised to unit sum every step, so the returned
    weights are the normalised Perron vector.  Iteration stops once both
    the Rayleigh quotient and the iterate change by less than ``tol``.
    """
    if not isinstance(matrix, JudgmentMatrix):
        matrix = JudgmentMatrix(matrix)
    a = matrix.entries
    n = matrix.order
    x = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float)
    if x.shape != (n,) or not np.all(x > 0):
        raise ValueError("power iteration needs a positive start vector of matching length")
    x = x / x.sum()
    lam = x @ a @ x / (x @ x)
    for it in range(1, max_iter + 1):
        y = a @ x
        y = y / y.sum()
        lam_new = y @ a @ y / (y @ y)
        converged = abs(lam_new - lam) < tol and np.max(np.abs(y - x)) < tol
        x, lam = y, lam_new
        if converged:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")

    ci = (lam - n) / (n - 1) if n > 1 else 0.0
    ri = random_index(n)
    cr = ci / ri if ri > 0 else 0.0
    return EigenResult(float(lam), x, float(ci), float(cr), it)


def consistency_gate(result):
    """True when the consistency ratio is below 0.1."""
    return result.cr < CONSISTENCY_LIMIT


def round_half_away(value, decimals=3):
    """Round like a printed table: halves go away from zero."""
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def _fraction_text(v):
    return str(Fraction(v))


WEIGHTS_COLUMNS = ("prj_no", "s_e", "s_r", "e_r", "w1", "w2", "w3", "w4", "w5", "lambda_max", "CI", "CR")


def weights_table(projects=None):
    """Rows ``(ProjectDefinition, EigenResult)`` for the given projects (default all 48)."""
    projects = enumerate_projects() if projects is None else projects
    return [(p, principal_eigen(build_matrix(p))) for p in projects]


def weights_rows(projects=None, decimals=3):
    """Weights table as lists of strings in :data:`WEIGHTS_COLUMNS` order.

    ``decimals=None`` keeps full precision.
    """
    def fmt(v):
        if decimals is None:
            return repr(float(v))
        return f"{round_half_away(v, decimals):.{decimals}f}"

    rows = []
    for p, res in weights_table(projects):
        rows.append(
            [str(p.prj_no), str(p.s_e), _fraction_text(p.s_r), _fraction_text(p.e_r)]
            + [fmt(w) for w in res.weights]
            + [fmt(res.lambda_max), fmt(res.ci), fmt(res.cr)]
        )
    return rows
