"""Outer iteration: frozen-derivative Newton steps in function space.

The integral operator is linearized once, at the initial guess, and the
same discretized linear operator is solved at every step; only the
right-hand side

    psi_i(t) = f_i(t) + sum_j integral K_ij(t,s) *
               [ dG_ij/dx(s, x0_j(s)) * xm_j(s) - G_ij(s, xm_j(s)) ] ds

is rebuilt from the current iterate xm.  (Writing the step for the new
iterate rather than the correction puts the bracket on the right with the
sign above; with it, the exact solution is a fixed point.)

One run is sequential in the iteration index; independent runs can share
the immutable problem data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .collocation import DEFAULT_MOMENT_PANELS, CollocationDiscretization
from .errors import DivergenceError, ProblemDefinitionError
from .pc import HISTORY_PANELS, Mesh, PCDiscretization
from .problem import linearize, validate
from .report import measure_errors

#: midpoint panels per smooth band segment for the right-hand-side integrals
DEFAULT_PSI_PANELS = 8000

#: panels per mesh-aligned piece when the iterate is piecewise constant
PSI_PIECE_PANELS = HISTORY_PANELS

#: sample count per component for the correction sup-norm
NORM_SAMPLES = 1001

#: growth factor over three consecutive iterations that flags divergence
DIVERGENCE_FACTOR = 1e3


@dataclass(frozen=True)
class IterationRecord:
    """One outer step: correction norm plus errors when the exact is known."""

    index: int
    correction: float
    ratio: float = None              # correction / previous correction
    component_errors: tuple = ()
    aggregate_error: float = None


@dataclass
class IterationReport:
    records: list = field(default_factory=list)
    stop_reason: str = None          # "tolerance" | "max-iterations" | "divergence"

    @property
    def correction_ratios(self):
        """Empirical geometric-rate sequence ||dX^{m+1}|| / ||dX^m||."""
        return tuple(r.ratio for r in self.records if r.ratio is not None)

    @property
    def final_aggregate_error(self):
        for rec in reversed(self.records):
            if rec.aggregate_error is not None:
                return rec.aggregate_error
        return None


def correction_norm(prev, nxt, samples=NORM_SAMPLES):
    """Sup over components of the sup over sampled t of |next - prev|.

    Each component is sampled uniformly on its own interval of definition
    (endpoints included).
    """
    worst = 0.0
    for i in range(1, nxt.n_components + 1):
        ts = np.linspace(0.0, nxt.component_domains[i - 1], samples)
        a = np.asarray(prev.component_values(i, ts), dtype=float)
        b = np.asarray(nxt.component_values(i, ts), dtype=float)
        worst = max(worst, float(np.max(np.abs(b - a))))
    return worst


class PsiEvaluator:
    """Right-hand-side evaluator with a precomputed quadrature plan.

    The plan (abscissas, weights, kernel values, frozen-slope values) only
    depends on the linearized system and the evaluation times, so one
    evaluator serves every outer iteration; per iteration only the iterate
    and the nonlinearity are re-evaluated on the fixed abscissas.

    ``cuts`` lists global breakpoints (mesh nodes for piecewise-constant
    iterates) at which band segments are split; without cuts each band
    segment is one smooth piece with ``panels`` midpoint panels.
    """

    def __init__(self, lin, times, cuts=None, panels=DEFAULT_PSI_PANELS,
                 piece_panels=PSI_PIECE_PANELS):
        self.lin = lin
        self.times = np.asarray(times, dtype=float)
        system = lin.system
        n_eq = lin.n_equations
        n_bands = lin.n_bands
        cuts = None if cuts is None else np.asarray(cuts, dtype=float)

        starts = [[] for _ in range(n_bands)]
        ends = [[] for _ in range(n_bands)]
        absc = [[] for _ in range(n_bands)]
        tvals = [[] for _ in range(n_bands)]
        weights = [[] for _ in range(n_bands)]
        counts = [0] * n_bands
        for t in self.times:
            decomp = quadrature.decompose(float(t), lin.curves)
            for seg in decomp:
                jj = seg.band - 1
                starts[jj].append(counts[jj])
                if not seg.is_empty:
                    if cuts is None:
                        pieces = [(seg.lo, seg.hi)]
                        per_piece = panels
                    else:
                        pieces = quadrature.split_interval(seg.lo, seg.hi, cuts)
                        per_piece = piece_panels
                    for lo, hi in pieces:
                        mids, width = quadrature.midpoints(lo, hi, per_piece)
                        absc[jj].append(mids)
                        tvals[jj].append(np.full(mids.size, float(t)))
                        weights[jj].append(np.full(mids.size, width))
                        counts[jj] += mids.size
                ends[jj].append(counts[jj])

        self._starts = [np.asarray(s, dtype=int) for s in starts]
        self._ends = [np.asarray(e, dtype=int) for e in ends]
        self._absc = [
            np.concatenate(a) if a else np.empty(0) for a in absc]
        self._tvals = [
            np.concatenate(a) if a else np.empty(0) for a in tvals]
        self._weights = [
            np.concatenate(a) if a else np.empty(0) for a in weights]

        # iterate-independent values on the plan abscissas
        self._kernel_vals = []
        self._gx0_vals = []
        for j in range(n_bands):
            s = self._absc[j]
            tv = self._tvals[j]
            comp = lin.unknown_of_band[j]
            x0v = lin.x0.component_values(comp, s) if s.size else s
            krow, grow = [], []
            for i in range(n_eq):
                kv = np.broadcast_to(np.asarray(
                    system.kernels[i][j](t=tv, s=s), float), s.shape)
                gv = np.broadcast_to(np.asarray(
                    system.g_x[i][j](s=s, x=x0v), float), s.shape)
                krow.append(kv * self._weights[j])
                grow.append(gv)
            self._kernel_vals.append(krow)
            self._gx0_vals.append(grow)

        self._f_vals = np.vstack([
            np.broadcast_to(np.asarray(f(t=self.times), float),
                            self.times.shape)
            for f in system.rhs])
        self._fp0 = np.array([float(fp(t=0.0)) for fp in system.rhs_prime])
        self._k00 = np.array([
            [float(system.kernels[i][j](t=0.0, s=0.0))
             for j in range(n_bands)] for i in range(n_eq)])
        self._gx0_at0 = np.array([
            [float(system.g_x[i][j](
                s=0.0, x=lin.x0.value_at_zero(lin.unknown_of_band[j])))
             for j in range(n_bands)] for i in range(n_eq)])
        slopes = [float(lin.curves.alpha_prime(j, 0.0))
                  for j in range(n_bands + 1)]
        self._dslopes = np.diff(np.asarray(slopes))

    def values(self, iterate):
        """Psi at the planned times for the given iterate; shape (n_eq, n_times)."""
        lin = self.lin
        system = lin.system
        out = self._f_vals.copy()
        for j in range(lin.n_bands):
            s = self._absc[j]
            if not s.size:
                continue
            comp = lin.unknown_of_band[j]
            xm = np.asarray(iterate.component_values(comp, s), dtype=float)
            for i in range(lin.n_equations):
                gm = np.broadcast_to(np.asarray(
                    system.nonlinearities[i][j](s=s, x=xm), float), s.shape)
                contrib = self._kernel_vals[j][i] * (
                    self._gx0_vals[j][i] * xm - gm)
                csum = np.concatenate(([0.0], np.cumsum(contrib)))
                out[i] += csum[self._ends[j]] - csum[self._starts[j]]
        return out

    def derivative_at_zero(self, iterate):
        """d(psi)/dt at t = 0: only the band boundary terms survive."""
        lin = self.lin
        system = lin.system
        out = self._fp0.copy()
        for j in range(lin.n_bands):
            comp = lin.unknown_of_band[j]
            xm0 = iterate.value_at_zero(comp)
            for i in range(lin.n_equations):
                g0 = float(system.nonlinearities[i][j](s=0.0, x=xm0))
                out[i] += (self._k00[i, j] * self._dslopes[j]
                           * (self._gx0_at0[i, j] * xm0 - g0))
        return out


class _PsiRhs:
    """Adapter binding a PsiEvaluator to one iterate (RightHandSide shape)."""

    def __init__(self, evaluator, iterate):
        self._ev = evaluator
        self._it = iterate

    def values(self, ts):
        ts = np.asarray(ts, dtype=float)
        if ts.shape != self._ev.times.shape or not np.array_equal(
                ts, self._ev.times):
            raise ValueError("psi evaluator was planned for different times")
        return self._ev.values(self._it)

    def derivative_at_zero(self):
        return self._ev.derivative_at_zero(self._it)


def psi(system, x0, xm, ts, panels=DEFAULT_PSI_PANELS):
    """Right-hand side Psi at the times ts for guess x0 and iterate xm.

    ``x0`` and ``xm`` follow the iterate protocol (ExpressionIterate,
    piecewise-constant or polynomial solutions).  Band segments are split
    at the iterate's breakpoints before integration.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    lin = linearize(system, x0)
    horizon = system.curves.horizon
    cuts = np.asarray(xm.breakpoints_in(0.0, horizon), dtype=float)
    if cuts.size:
        ev = PsiEvaluator(lin, ts, cuts=cuts)
    else:
        ev = PsiEvaluator(lin, ts, panels=panels)
    return ev.values(xm)


def iterate(system, method="collocation", degree=None, n_segments=None,
            max_iters=20, tol=1e-12, panels=None, psi_panels=None,
            history_panels=HISTORY_PANELS, norm_samples=NORM_SAMPLES,
            skip_validation=False):
    """Run the frozen-derivative outer iteration with an inner linear solver.

    Parameters
    ----------
    system : VolterraSystem
    method : "collocation" or "pc"
    degree : polynomial degree for the collocation inner solver
    n_segments : mesh segments for the piecewise-constant inner solver
    max_iters : iteration cap
    tol : stop once the sampled correction sup-norm drops this low
    panels : inner-solver quadrature panels (moment/coefficient integrals)
    psi_panels : panels per band segment for the right-hand-side integrals
        (smooth iterates only; piecewise-constant iterates integrate piece
        by piece along the mesh)

    Returns
    -------
    (solution, IterationReport)

    Raises
    ------
    DivergenceError
        If the correction norm grows by more than a factor of 1e3 over
        three consecutive iterations; the partial report is attached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not skip_validation:
        diagnostics = validate(system)
        if diagnostics:
            raise ProblemDefinitionError(
                "system failed validation: "
                + "; ".join(str(d) for d in diagnostics))

    lin = linearize(system)
    if method == "pc":
        if n_segments is None:
            raise ValueError("the pc method needs n_segments")
        mesh = Mesh.uniform(system.curves.horizon, n_segments)
        disc = PCDiscretization(
            lin, mesh,
            panels=quadrature.DEFAULT_PANELS if panels is None else panels,
            history_panels=history_panels)
        evaluator = PsiEvaluator(lin, mesh.nodes[1:], cuts=mesh.nodes[1:-1])
    elif method == "collocation":
        if degree is None:
            raise ValueError("the collocation method needs degree")
        disc = CollocationDiscretization(
            lin, degree,
            panels=DEFAULT_MOMENT_PANELS if panels is None else panels)
        evaluator = PsiEvaluator(
            lin, disc.nodes,
            panels=DEFAULT_PSI_PANELS if psi_panels is None else psi_panels)
    else:
        raise ValueError(f"unknown inner method {method!r}")

    report = IterationReport()
    current = system.guess_iterate()
    prev_correction = None
    solution = None
    for step in range(1, max_iters + 1):
        rhs = _PsiRhs(evaluator, current)
        solution = disc.solve(rhs)
        corr = correction_norm(current, solution, samples=norm_samples)
        ratio = None if prev_correction in (None, 0.0) else corr / prev_correction
        comp_errors, aggregate = (), None
        if system.exact is not None:
            comp_errors, aggregate = measure_errors(solution, system)
        report.records.append(IterationRecord(
            index=step, correction=corr, ratio=ratio,
            component_errors=comp_errors, aggregate_error=aggregate))
        current = solution
        prev_correction = corr
        if corr <= tol:
            report.stop_reason = "tolerance"
            break
        if step >= 4:
            base = report.records[step - 4].correction
            if base > 0.0 and corr > DIVERGENCE_FACTOR * base:
                report.stop_reason = "divergence"
                raise DivergenceError(
                    f"correction norm grew from {base:.3e} to {corr:.3e} "
                    f"over three iterations (step {step})", report)
    if report.stop_reason is None:
        report.stop_reason = "max-iterations"
    return solution, report
