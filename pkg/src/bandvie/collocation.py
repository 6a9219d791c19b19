"""Polynomial collocation for the linearized system.

Each unknown component is a degree-m polynomial in t.  The constant
coefficients come from the start-value system at t = 0; the remaining
n*m coefficients solve the square moment system collocated at the uniform
nodes t_k = k T / m.  The monomial basis is kept, but moments are
assembled in the rescaled variable s/T and the coefficients mapped back,
which tames the growth of the high powers when T > 1.

Moment entries are mutually independent and could be assembled in
parallel; solutions are immutable.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import quadrature
from .errors import SingularMatrixError, SolverError
from .linalg import LUFactorization, refined_solve
from .pc import initial_values
from .problem import ExpressionRhs, VolterraSystem, linearize

#: midpoint panels per band segment for moment integrals; the error tables
#: ask for moment errors well below 1e-8, which plain 200-panel quadrature
#: cannot deliver on segments of length ~1
DEFAULT_MOMENT_PANELS = 8000

#: estimated condition number above which a warning is attached
CONDITION_WARN = 1e10


class ConditioningWarning(UserWarning):
    """The collocation matrix is ill-conditioned (high degree, monomials)."""


def collocation_nodes(horizon, degree):
    """Uniform collocation nodes t_k = k T / m, k = 1..m."""
    m = int(degree)
    if m < 1:
        raise ValueError("degree must be >= 1")
    return np.arange(1, m + 1) * (float(horizon) / m)


def flatten_index(i, k, m):
    """0-based row/column of the moment system for 1-based (i, k), k <= m."""
    return (i - 1) * m + (k - 1)


def unflatten_index(r, m):
    """Inverse of :func:`flatten_index`."""
    return r // m + 1, r % m + 1


class PolynomialSolution:
    """Per-component monomial coefficients (constant term first)."""

    def __init__(self, coefficients, component_domains, condition_number=None):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.component_domains = tuple(component_domains)
        self.condition_number = condition_number
        self.n_components = self.coefficients.shape[0]

    @property
    def degree(self):
        return self.coefficients.shape[1] - 1

    def component_values(self, i, ts):
        ts = np.asarray(ts, dtype=float)
        return np.polynomial.polynomial.polyval(ts, self.coefficients[i - 1])

    def value_at_zero(self, i):
        return float(self.coefficients[i - 1, 0])

    def breakpoints_in(self, lo, hi):
        return np.empty(0)


def eval_poly(solution, i, t):
    """Horner evaluation of component i at time t."""
    return float(solution.component_values(i, float(t)))


def _frozen_band_values(lin, i, j, tk, mids):
    """Frozen kernel values Ktilde_ij(tk, mids) without per-call closures."""
    system = lin.system
    comp = lin.unknown_of_band[j - 1]
    x0v = lin.x0.component_values(comp, mids)
    kv = np.broadcast_to(np.asarray(
        system.kernels[i - 1][j - 1](t=tk, s=mids), float), mids.shape)
    gv = np.broadcast_to(np.asarray(
        system.g_x[i - 1][j - 1](s=mids, x=x0v), float), mids.shape)
    vals = kv * gv
    if not np.all(np.isfinite(vals)):
        raise SolverError(
            f"non-finite frozen kernel at t = {tk}, band {j}")
    return vals


def moment(i, k, j, l, lin, nodes, panels=DEFAULT_MOMENT_PANELS):
    """Moment integral of the frozen kernel against s^l over band j at t_k.

    ``nodes`` is the collocation node array; k and l are 1-based.
    """
    tk = float(nodes[k - 1])
    seg = quadrature.decompose(tk, lin.curves).segments[j - 1]
    if seg.is_empty:
        return 0.0
    mids, width = quadrature.midpoints(seg.lo, seg.hi, panels)
    vals = _frozen_band_values(lin, i, j, tk, mids)
    return float((vals * mids ** l).sum() * width)


def rhs_entry(i, k, lin, rhs, a0, nodes, panels=DEFAULT_MOMENT_PANELS):
    """Right-hand side entry F_ik: rhs_i(t_k) minus the known constant part.

    ``rhs`` is f for a plain linear solve and the iteration right-hand side
    inside the outer loop; ``a0`` holds the start values per component.
    """
    tk = float(nodes[k - 1])
    value = float(np.asarray(rhs.values(np.asarray([tk])))[i - 1, 0])
    a0 = np.asarray(a0, dtype=float)
    for seg in quadrature.decompose(tk, lin.curves):
        if seg.is_empty:
            continue
        mids, width = quadrature.midpoints(seg.lo, seg.hi, panels)
        vals = _frozen_band_values(lin, i, seg.band, tk, mids)
        value -= a0[lin.unknown_of_band[seg.band - 1] - 1] * float(
            vals.sum() * width)
    return value


class CollocationDiscretization:
    """Moment system assembled once; solve() consumes right-hand sides.

    The matrix (and its factorization) is shared across outer iterations,
    matching the frozen linear operator of the iteration.
    """

    def __init__(self, lin, degree, panels=DEFAULT_MOMENT_PANELS):
        m = int(degree)
        if m < 1:
            raise ValueError("degree must be >= 1")
        self.lin = lin
        self.degree = m
        self.panels = int(panels)
        self.nodes = collocation_nodes(lin.curves.horizon, m)
        self.scale = float(lin.curves.horizon)

        n_eq = lin.n_equations
        n_comp = lin.n_components
        size = n_eq * m
        if n_comp * m != size:
            raise SolverError(
                f"collocation system is {size}x{n_comp * m}; the band map "
                f"must give one component per equation")
        matrix = np.zeros((size, size))
        zeroth = np.zeros((n_eq, m, lin.n_bands))
        for k in range(1, m + 1):
            tk = float(self.nodes[k - 1])
            for seg in quadrature.decompose(tk, lin.curves):
                if seg.is_empty:
                    continue
                j = seg.band
                comp = lin.unknown_of_band[j - 1]
                mids, width = quadrature.midpoints(seg.lo, seg.hi, self.panels)
                scaled = mids / self.scale
                for i in range(1, n_eq + 1):
                    vals = _frozen_band_values(lin, i, j, tk, mids)
                    zeroth[i - 1, k - 1, j - 1] += float(vals.sum() * width)
                    row = flatten_index(i, k, m)
                    power = scaled.copy()
                    for l in range(1, m + 1):
                        col = flatten_index(comp, l, m)
                        matrix[row, col] += float((vals * power).sum() * width)
                        if l < m:
                            power *= scaled
        self.matrix = matrix
        self.zeroth_moments = zeroth
        self.condition_number = float(np.linalg.cond(matrix)) if size else 0.0
        if m >= 12 or self.condition_number > CONDITION_WARN:
            warnings.warn(
                f"collocation matrix at degree {m} has condition number "
                f"{self.condition_number:.3e}; coefficients may lose up to "
                f"{np.log10(max(self.condition_number, 1.0)):.0f} digits",
                ConditioningWarning, stacklevel=2)
        try:
            self._fact = LUFactorization(matrix)
        except SingularMatrixError as exc:
            raise SolverError(
                f"singular collocation matrix at degree {m} "
                f"(condition ~ {self.condition_number:.3e}): {exc}") from exc

    def solve(self, rhs):
        """Coefficients for a right-hand side object; returns a polynomial."""
        lin = self.lin
        m = self.degree
        n_eq = lin.n_equations
        n_comp = lin.n_components
        a0 = initial_values(lin, rhs)
        psi = np.asarray(rhs.values(self.nodes), dtype=float)
        if psi.shape != (n_eq, m):
            raise SolverError(
                f"right-hand side returned shape {psi.shape}, "
                f"expected {(n_eq, m)}")
        f_vec = np.empty(n_eq * m)
        for i in range(1, n_eq + 1):
            for k in range(1, m + 1):
                contrib = 0.0
                for j in range(1, lin.n_bands + 1):
                    contrib += (a0[lin.unknown_of_band[j - 1] - 1]
                                * self.zeroth_moments[i - 1, k - 1, j - 1])
                f_vec[flatten_index(i, k, m)] = psi[i - 1, k - 1] - contrib
        scaled_coeffs = refined_solve(self._fact, self.matrix, f_vec)
        coeffs = np.zeros((n_comp, m + 1))
        coeffs[:, 0] = a0
        powers = self.scale ** np.arange(1, m + 1)
        for u in range(1, n_comp + 1):
            block = scaled_coeffs[(u - 1) * m:u * m]
            coeffs[u - 1, 1:] = block / powers
        domains = [lin.system.component_domain(i) for i in range(1, n_comp + 1)]
        return PolynomialSolution(coeffs, domains, self.condition_number)


def solve_linear_collocation(lin, rhs=None, degree=5,
                             panels=DEFAULT_MOMENT_PANELS):
    """One-shot polynomial collocation solve of a linearized system."""
    if isinstance(lin, VolterraSystem):
        if rhs is None:
            rhs = ExpressionRhs(lin)
        lin = linearize(lin)
    elif rhs is None:
        rhs = ExpressionRhs(lin.system)
    disc = CollocationDiscretization(lin, degree, panels=panels)
    return disc.solve(rhs)
