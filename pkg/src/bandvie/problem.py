"""Problem data model: curves, kernels, nonlinearities, validation, linearization.

A system here is

    sum_j  integral over band j of  K_ij(t, s) * G_ij(s, x_{u(j)}(s)) ds = f_i(t)

for equations i = 1..n_equations, where band j is the region between the
curves alpha_{j-1}(t) and alpha_j(t) (alpha_0 = 0, alpha_{n_bands} = t) and
``u`` maps bands to unknown components.  The map is the identity for
ordinary systems; a scalar equation with a two-piece kernel maps both
bands to the single unknown.

Linearization freezes the kernels at an initial guess X0:

    Ktilde_ij(t, s) = K_ij(t, s) * dG_ij/dx (s, x0_{u(j)}(s)),

which is the operator inverted at every outer iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import ProblemDefinitionError
from .expr import Expression, parse

#: sample count used by validate() for the sampled invariants
VALIDATION_SAMPLES = 1000

_FD_STEP = 1e-6
_FD_TOL = 1e-6


def _as_expression(value):
    if isinstance(value, Expression):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float)):
        return parse(repr(float(value)))
    raise ProblemDefinitionError(f"cannot interpret {value!r} as an expression")


@dataclass(frozen=True)
class CurveFamily:
    """Discontinuity curves alpha_1..alpha_{n-1} on [0, T].

    alpha_0 == 0 and alpha_{n_bands}(t) == t are implicit.  Derivatives are
    obtained symbolically at construction.
    """

    horizon: float
    interior: tuple
    interior_prime: tuple = field(default=())

    def __post_init__(self):
        exprs = tuple(_as_expression(e) for e in self.interior)
        object.__setattr__(self, "interior", exprs)
        if not self.interior_prime:
            object.__setattr__(
                self, "interior_prime", tuple(e.diff("t") for e in exprs)
            )

    @property
    def n_bands(self):
        return len(self.interior) + 1

    def alpha(self, j, t):
        """Value of curve j at t (vectorized); j ranges over 0..n_bands."""
        if j == 0:
            return np.zeros_like(np.asarray(t, dtype=float))
        if j == self.n_bands:
            return np.asarray(t, dtype=float)
        return self.interior[j - 1](t=np.asarray(t, dtype=float))

    def alpha_prime(self, j, t):
        if j == 0:
            return np.zeros_like(np.asarray(t, dtype=float))
        if j == self.n_bands:
            return np.ones_like(np.asarray(t, dtype=float))
        return self.interior_prime[j - 1](t=np.asarray(t, dtype=float))


class VolterraSystem:
    """A validated-on-demand first-kind system with banded kernels.

    Parameters
    ----------
    curves : CurveFamily
    kernels : sequence of sequences
        K_ij expressions in (t, s); one row per equation, one column per band.
    nonlinearities : sequence of sequences
        G_ij expressions in (s, x), same shape as ``kernels``.
    rhs : sequence
        f_i expressions in t, one per equation.
    unknown_of_band : sequence of int, optional
        1-based component index per band; identity when omitted.
    exact : sequence, optional
        Exact solution expressions in t, one per component.
    guess : sequence, optional
        Initial-guess expressions in t, one per component (defaults to 0).
    name : str, optional
    """

    def __init__(self, curves, kernels, nonlinearities, rhs,
                 unknown_of_band=None, exact=None, guess=None, name=""):
        self.curves = curves
        self.kernels = tuple(tuple(_as_expression(k) for k in row) for row in kernels)
        self.nonlinearities = tuple(
            tuple(_as_expression(g) for g in row) for row in nonlinearities
        )
        self.rhs = tuple(_as_expression(f) for f in rhs)
        self.name = name

        n_eq = len(self.rhs)
        n_bands = curves.n_bands
        if len(self.kernels) != n_eq or len(self.nonlinearities) != n_eq:
            raise ProblemDefinitionError(
                f"need one kernel/nonlinearity row per equation "
                f"({n_eq} equations, {len(self.kernels)} kernel rows)"
            )
        for row in self.kernels + self.nonlinearities:
            if len(row) != n_bands:
                raise ProblemDefinitionError(
                    f"kernel/nonlinearity rows must have {n_bands} bands, "
                    f"got {len(row)}"
                )

        if unknown_of_band is None:
            unknown_of_band = tuple(range(1, n_bands + 1))
        self.unknown_of_band = tuple(int(u) for u in unknown_of_band)
        if len(self.unknown_of_band) != n_bands:
            raise ProblemDefinitionError(
                f"unknown_of_band must list {n_bands} bands"
            )
        comps = sorted(set(self.unknown_of_band))
        if comps != list(range(1, len(comps) + 1)):
            raise ProblemDefinitionError(
                "unknown_of_band must use the contiguous component indices 1..n"
            )
        self.n_components = len(comps)

        self.rhs_prime = tuple(f.diff("t") for f in self.rhs)
        self.g_x = tuple(
            tuple(g.diff("x") for g in row) for row in self.nonlinearities
        )

        self.exact = None
        if exact is not None:
            self.exact = tuple(_as_expression(e) for e in exact)
            if len(self.exact) != self.n_components:
                raise ProblemDefinitionError(
                    f"exact solution needs {self.n_components} components"
                )
        if guess is None:
            guess = ["0"] * self.n_components
        self.guess = tuple(_as_expression(g) for g in guess)
        if len(self.guess) != self.n_components:
            raise ProblemDefinitionError(
                f"initial guess needs {self.n_components} components"
            )

    @property
    def n_equations(self):
        return len(self.rhs)

    @property
    def n_bands(self):
        return self.curves.n_bands

    @property
    def n(self):
        """Number of bands (equals the number of equations for square systems)."""
        return self.n_bands

    @property
    def horizon(self):
        return self.curves.horizon

    def component_domain(self, i):
        """Right end of the interval where component i is determined:
        the largest alpha_j(T) over the bands feeding that component."""
        T = self.horizon
        return max(
            float(self.curves.alpha(j + 1, T))
            for j in range(self.n_bands)
            if self.unknown_of_band[j] == i
        )

    def component_domains(self):
        return tuple(self.component_domain(i) for i in range(1, self.n_components + 1))

    def exact_iterate(self):
        if self.exact is None:
            raise ProblemDefinitionError(f"system {self.name!r} has no exact solution")
        return ExpressionIterate(self.exact, self.component_domains())

    def guess_iterate(self):
        return ExpressionIterate(self.guess, self.component_domains())


class ExpressionIterate:
    """Smooth candidate solution given by one expression in t per component."""

    def __init__(self, exprs, domains):
        self.exprs = tuple(_as_expression(e) for e in exprs)
        self.component_domains = tuple(domains)
        self.n_components = len(self.exprs)

    def component_values(self, i, ts):
        ts = np.asarray(ts, dtype=float)
        return np.broadcast_to(
            np.asarray(self.exprs[i - 1](t=ts), dtype=float), ts.shape
        ).copy()

    def value_at_zero(self, i):
        return float(self.exprs[i - 1](t=0.0))

    def breakpoints_in(self, lo, hi):
        return np.empty(0)


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: the violated condition, a witness point, values."""

    condition: str
    witness: float
    detail: str

    def __str__(self):
        return f"{self.condition} at t = {self.witness:.6g}: {self.detail}"


def validate(system, samples=VALIDATION_SAMPLES):
    """Check the sampled problem invariants; returns a list of diagnostics.

    An empty list means the system passed: curves start at 0, stay ordered
    and nondecreasing, their t=0 slopes are ordered below 1, f_i(0) = 0,
    the last-band kernels do not vanish on the diagonal, the band-to-unknown
    map is usable, and the stored symbolic derivatives agree with central
    finite differences.
    """
    out = []
    curves = system.curves
    T = curves.horizon
    ts = np.linspace(0.0, T, samples)

    for j in range(1, curves.n_bands):
        a0 = float(curves.alpha(j, 0.0))
        if abs(a0) > 1e-12:
            out.append(Diagnostic(
                f"alpha_{j}(0) != 0", 0.0, f"value {a0:.3e}"))

    prev = np.zeros_like(ts)
    for j in range(1, curves.n_bands + 1):
        vals = np.broadcast_to(np.asarray(curves.alpha(j, ts), float), ts.shape)
        below = vals < prev - 1e-12
        if below.any():
            k = int(np.argmax(below))
            out.append(Diagnostic(
                f"curve ordering alpha_{j - 1} <= alpha_{j} violated",
                float(ts[k]),
                f"alpha_{j - 1} = {prev[k]:.6g}, alpha_{j} = {vals[k]:.6g}",
            ))
        if j < curves.n_bands:
            dec = np.diff(vals) < -1e-12
            if dec.any():
                k = int(np.argmax(dec))
                out.append(Diagnostic(
                    f"alpha_{j} not nondecreasing", float(ts[k + 1]),
                    f"drops from {vals[k]:.6g} to {vals[k + 1]:.6g}"))
        prev = vals

    slopes = [float(curves.alpha_prime(j, 0.0)) for j in range(1, curves.n_bands)]
    for j in range(1, len(slopes)):
        if slopes[j] < slopes[j - 1] - 1e-12:
            out.append(Diagnostic(
                "curve slopes at 0 out of order", 0.0,
                f"alpha'_{j}(0) = {slopes[j - 1]:.6g} > "
                f"alpha'_{j + 1}(0) = {slopes[j]:.6g}"))
    if slopes and slopes[-1] >= 1.0 - 1e-12:
        out.append(Diagnostic(
            "alpha'_{n-1}(0) must stay below 1", 0.0,
            f"value {slopes[-1]:.6g}"))

    for i, f in enumerate(system.rhs, start=1):
        f0 = float(f(t=0.0))
        if abs(f0) > 1e-12:
            out.append(Diagnostic(f"f_{i}(0) != 0", 0.0, f"value {f0:.6g}"))

    last = system.n_bands - 1
    for i in range(system.n_equations):
        vals = np.abs(np.broadcast_to(
            np.asarray(system.kernels[i][last](t=ts, s=ts), float), ts.shape))
        if (vals <= 1e-10).any():
            k = int(np.argmax(vals <= 1e-10))
            out.append(Diagnostic(
                f"K_{i + 1},{system.n_bands}(t, t) vanishes", float(ts[k]),
                f"|value| = {vals[k]:.3e}"))

    if system.n_components != system.n_equations:
        out.append(Diagnostic(
            "band-to-unknown map size mismatch", 0.0,
            f"{system.n_components} components for {system.n_equations} "
            f"equations; the per-step systems cannot be square"))

    out.extend(_derivative_diagnostics(system, ts))
    return out


def _fd_check(expr, dexpr, points, label, out):
    for kwargs in points:
        var = kwargs.pop("_wrt")
        lo = dict(kwargs)
        hi = dict(kwargs)
        lo[var] = kwargs[var] - _FD_STEP
        hi[var] = kwargs[var] + _FD_STEP
        try:
            fd = (expr.evaluate(hi) - expr.evaluate(lo)) / (2 * _FD_STEP)
            sym = dexpr.evaluate(kwargs)
        except Exception:
            continue  # derivative check only applies where both sides evaluate
        if abs(fd - sym) > _FD_TOL * max(1.0, abs(fd)):
            out.append(Diagnostic(
                f"symbolic derivative of {label} disagrees with finite difference",
                float(kwargs.get("t", kwargs.get("s", 0.0))),
                f"symbolic {sym:.8g}, finite difference {fd:.8g}"))
            return


def _derivative_diagnostics(system, ts):
    out = []
    T = system.curves.horizon
    tpts = np.linspace(0.05 * T, 0.95 * T, 7)
    for i, (f, fp) in enumerate(zip(system.rhs, system.rhs_prime), start=1):
        _fd_check(f, fp, [{"t": float(t), "_wrt": "t"} for t in tpts],
                  f"f_{i}", out)
    for j, (a, ap) in enumerate(
            zip(system.curves.interior, system.curves.interior_prime), start=1):
        _fd_check(a, ap, [{"t": float(t), "_wrt": "t"} for t in tpts],
                  f"alpha_{j}", out)
    xpts = np.linspace(-1.5, 1.5, 5)
    for i in range(system.n_equations):
        for j in range(system.n_bands):
            pts = [{"s": float(t), "x": float(x), "_wrt": "x"}
                   for t in tpts[::3] for x in xpts]
            _fd_check(system.nonlinearities[i][j], system.g_x[i][j], pts,
                      f"G_{i + 1},{j + 1}", out)
    return out


class LinearizedSystem:
    """Kernels frozen along an initial guess, ready for the inner solvers.

    The frozen kernels depend only on X0 and never change while the outer
    iteration runs; only the right-hand side is rebuilt per iteration.
    """

    def __init__(self, system, x0):
        self.system = system
        self.x0 = x0
        self.curves = system.curves
        self.unknown_of_band = system.unknown_of_band
        self.n_equations = system.n_equations
        self.n_bands = system.n_bands
        self.n_components = system.n_components

    def frozen_kernel(self, i, j):
        """Callable (t, s-array) -> K_ij(t, s) * G'_ij(s, x0_{u(j)}(s)); 1-based i, j."""
        kernel = self.system.kernels[i - 1][j - 1]
        gx = self.system.g_x[i - 1][j - 1]
        comp = self.unknown_of_band[j - 1]
        x0 = self.x0

        def ktilde(t, s):
            s = np.asarray(s, dtype=float)
            x0_vals = x0.component_values(comp, s)
            return (np.broadcast_to(np.asarray(kernel(t=t, s=s), float), s.shape)
                    * np.broadcast_to(np.asarray(gx(s=s, x=x0_vals), float), s.shape))

        return ktilde

    def frozen_kernel_at_origin(self):
        """Matrix of Ktilde_ij(0, 0), shape (n_equations, n_bands)."""
        out = np.empty((self.n_equations, self.n_bands))
        zero = np.zeros(1)
        for i in range(self.n_equations):
            for j in range(self.n_bands):
                out[i, j] = self.frozen_kernel(i + 1, j + 1)(0.0, zero)[0]
        return out

    def start_value_matrix(self):
        """Coefficient matrix of the start-value system at t = 0.

        Entry (i, u) accumulates Ktilde_ij(0,0) * (alpha'_j(0) - alpha'_{j-1}(0))
        over the bands j mapped to component u.
        """
        k00 = self.frozen_kernel_at_origin()
        slopes = [float(self.curves.alpha_prime(j, 0.0))
                  for j in range(self.n_bands + 1)]
        mat = np.zeros((self.n_equations, self.n_components))
        for j in range(self.n_bands):
            dal = slopes[j + 1] - slopes[j]
            mat[:, self.unknown_of_band[j] - 1] += k00[:, j] * dal
        return mat


def linearize(system, x0=None):
    """Freeze the kernels of ``system`` along ``x0`` (default: its initial guess)."""
    if x0 is None:
        x0 = system.guess_iterate()
    return LinearizedSystem(system, x0)


class ExpressionRhs:
    """Right-hand side built from the f_i expressions of a system.

    Used when the inner solvers run directly on a linear system; the outer
    iteration substitutes its own iteration-dependent right-hand side with
    the same interface.
    """

    def __init__(self, system):
        self._f = system.rhs
        self._fp = system.rhs_prime

    def values(self, ts):
        ts = np.asarray(ts, dtype=float)
        return np.vstack([
            np.broadcast_to(np.asarray(f(t=ts), float), ts.shape) for f in self._f
        ])

    def derivative_at_zero(self):
        return np.array([float(fp(t=0.0)) for fp in self._fp])


class CallableRhs:
    """Right-hand side from plain callables plus an explicit t=0 derivative.

    Handy for manufactured problems where f is only known through quadrature.
    """

    def __init__(self, functions, derivative_at_zero):
        self._functions = tuple(functions)
        self._d0 = np.asarray(derivative_at_zero, dtype=float)

    def values(self, ts):
        ts = np.asarray(ts, dtype=float)
        return np.vstack([
            np.broadcast_to(np.asarray([f(t) for t in ts], float), ts.shape)
            for f in self._functions
        ])

    def derivative_at_zero(self):
        return self._d0.copy()


def band_quadrature_residual(system, solution, t, panels=2000):
    """Residual of the original equations at time t for a candidate solution.

    Evaluates sum_j integral K_ij * G_ij(s, x_{u(j)}(s)) ds - f_i(t) with
    band-split composite midpoint quadrature on ``panels`` panels per band
    segment (split further at solution breakpoints), independent of any
    solver path.
    """
    segments = quadrature.decompose(t, system.curves)
    out = -np.array([float(f(t=t)) for f in system.rhs])
    for seg in segments:
        if seg.is_empty:
            continue
        comp = system.unknown_of_band[seg.band - 1]
        cuts = solution.breakpoints_in(seg.lo, seg.hi)
        pieces = quadrature.split_interval(seg.lo, seg.hi, cuts)
        for lo, hi in pieces:
            n_panels = max(1, int(round(panels * (hi - lo) / seg.length)))
            mids, width = quadrature.midpoints(lo, hi, n_panels)
            xvals = solution.component_values(comp, mids)
            for i in range(system.n_equations):
                kern = system.kernels[i][seg.band - 1]
                g = system.nonlinearities[i][seg.band - 1]
                kv = np.broadcast_to(np.asarray(kern(t=t, s=mids), float), mids.shape)
                gv = np.broadcast_to(np.asarray(g(s=mids, x=xvals), float), mids.shape)
                out[i] += float((kv * gv).sum() * width)
    return out
