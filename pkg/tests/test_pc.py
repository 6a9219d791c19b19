import numpy as np
import pytest

from bandvie.errors import SolverError
from bandvie.newton import PsiEvaluator
from bandvie.pc import (
    Mesh,
    PCDiscretization,
    PiecewiseConstantSolution,
    eval_pc,
    initial_values,
    segment_index,
    solve_linear_pc,
)
from bandvie.problem import (
    CurveFamily,
    ExpressionRhs,
    VolterraSystem,
    band_quadrature_residual,
    linearize,
)
from bandvie.registry import builtin


def sup_errors(system, solution, samples=2001):
    out = []
    for i in range(1, system.n_components + 1):
        ts = np.linspace(0.0, system.component_domain(i), samples)
        exact = np.broadcast_to(
            np.asarray(system.exact[i - 1](t=ts), float), ts.shape)
        out.append(float(np.max(np.abs(exact - solution.component_values(i, ts)))))
    return out


def test_segment_index_examples():
    mesh = Mesh.uniform(1.0, 4)
    assert segment_index(mesh, 0.3) == 2
    assert segment_index(mesh, 0.5) == 2   # node belongs to the left segment
    assert segment_index(mesh, 0.0) == 1
    assert segment_index(mesh, 1.0) == 4
    with pytest.raises(ValueError):
        segment_index(mesh, -0.1)
    with pytest.raises(ValueError):
        segment_index(mesh, 1.2)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Mesh(np.array([0.1, 0.5, 1.0]))
    assert Mesh.uniform(2.0, 8).h == pytest.approx(0.25)


def test_initial_values_match_exact_starts(model01, model02, scalar, sys1):
    assert np.allclose(initial_values(model01), [1.0, 0.0], atol=1e-10)
    assert np.allclose(initial_values(model02), [1.0, 0.0, 0.0], atol=1e-10)
    # zero right-hand-side derivative at 0 gives the zero vector
    assert np.allclose(initial_values(scalar), [0.0], atol=1e-14)
    assert np.allclose(initial_values(sys1), [0.0, 0.0], atol=1e-14)


def test_initial_values_match_exact_for_all_builtins():
    # with the iteration right-hand side taken at the exact solution, the
    # start-value system reproduces x*(0) for every builtin
    for name in ("model01", "model02", "nonlinear-scalar",
                 "nonlinear-sys1", "nonlinear-sys2"):
        system = builtin(name)
        lin = linearize(system)
        exact = system.exact_iterate()
        evaluator = PsiEvaluator(lin, np.array([system.curves.horizon]),
                                 panels=200)

        class _Rhs:
            def values(self, ts):  # pragma: no cover - unused here
                return evaluator.values(exact)

            def derivative_at_zero(self):
                return evaluator.derivative_at_zero(exact)

        x0 = initial_values(lin, _Rhs())
        expected = [float(system.exact[i](t=0.0))
                    for i in range(system.n_components)]
        assert np.allclose(x0, expected, atol=1e-10), name


def test_singular_start_system_reports():
    system = VolterraSystem(
        curves=CurveFamily(1.0, ("t/2",)),
        kernels=[["1", "-1"], ["1", "-1"]],
        nonlinearities=[["x", "x"], ["x", "x"]],
        rhs=["t", "t"],
    )
    with pytest.raises(SolverError, match="t = 0"):
        initial_values(system)


def test_eval_pc_conventions():
    mesh = Mesh.uniform(1.0, 4)
    sol = PiecewiseConstantSolution(
        mesh, start=[7.0], values=[[1.0, 2.0, 3.0, 4.0]],
        component_domains=(1.0,))
    assert eval_pc(sol, 1, 0.0) == 7.0
    assert eval_pc(sol, 1, 1.0) == 4.0
    assert eval_pc(sol, 1, 0.6) == 3.0   # inside segment 3
    assert eval_pc(sol, 1, 0.5) == 2.0   # node belongs to the left segment
    with pytest.raises(ValueError):
        eval_pc(sol, 1, 1.5)
    assert list(sol.breakpoints_in(0.0, 1.0)) == [0.25, 0.5, 0.75]


def test_constant_problem_is_exact_for_any_mesh():
    system = VolterraSystem(
        curves=CurveFamily(1.5, ()),
        kernels=[["1"]],
        nonlinearities=[["x"]],
        rhs=["2*t"],
        exact=["2"],
    )
    for n in (5, 17, 64):
        sol = solve_linear_pc(system, n_segments=n)
        assert sup_errors(system, sol)[0] <= 1e-10


def test_model01_accuracy_and_first_order_convergence(model01):
    errors = {}
    for n in (64, 128, 256, 512):
        sol = solve_linear_pc(model01, n_segments=n)
        errors[n] = max(sup_errors(model01, sol))
    assert errors[128] <= 0.05
    for n in (64, 128, 256):
        ratio = errors[n] / errors[2 * n]
        assert 1.4 <= ratio <= 3.0, (n, ratio)


def test_scalar_linearized_at_exact_matches_table_order(scalar):
    # the linear inner solve alone, frozen and driven at the exact solution,
    # must show the same first-order error level as the full iteration
    lin = linearize(scalar, scalar.exact_iterate())
    evaluator = PsiEvaluator(
        lin, Mesh.uniform(1.0, 128).nodes[1:],
        cuts=Mesh.uniform(1.0, 128).nodes[1:-1])
    exact = scalar.exact_iterate()

    class _Rhs:
        def values(self, ts):
            return evaluator.values(exact)

        def derivative_at_zero(self):
            return evaluator.derivative_at_zero(exact)

    sol = PCDiscretization(lin, Mesh.uniform(1.0, 128)).solve(_Rhs())
    err = sup_errors(scalar, sol)[0]
    assert 7.30057e-4 <= err <= 7.30057e-2  # within a factor 10 of 7.30057e-3


def test_residual_oracle_decreases_with_mesh(model01):
    previous = None
    for n in (32, 64, 128):
        sol = solve_linear_pc(model01, n_segments=n)
        worst = max(
            abs(v)
            for t in np.linspace(0.1, 2.0, 20)
            for v in band_quadrature_residual(model01, sol, float(t),
                                              panels=2000))
        h = 2.0 / n
        assert worst <= 0.5 * h
        if previous is not None:
            assert worst < previous
        previous = worst


def test_scalar_shared_unknown_assigns_every_segment(scalar):
    sol = solve_linear_pc(scalar, rhs=ExpressionRhs(scalar), n_segments=40)
    assert np.all(np.isfinite(sol.values))


def test_model01_components_assigned_up_to_their_domains(model01):
    sol = solve_linear_pc(model01, n_segments=64)
    # component 1 is only determined on [0, 1]: segments 1..32
    assert np.all(np.isfinite(sol.values[0][:32]))
    assert np.all(np.isnan(sol.values[0][32:]))
    assert np.all(np.isfinite(sol.values[1]))


def test_discretization_solve_is_deterministic(model01):
    lin = linearize(model01)
    disc = PCDiscretization(lin, Mesh.uniform(2.0, 32))
    rhs = ExpressionRhs(model01)
    a = disc.solve(rhs)
    b = disc.solve(rhs)
    assert np.array_equal(a.values, b.values, equal_nan=True)
    assert np.array_equal(a.start, b.start)


def test_history_gap_raises_for_too_fast_curves():
    # this curve has slope > 1 later on, so alpha jumps across two mesh
    # segments in one step, skips one, and the skipped value is demanded by
    # a later history integral
    system = VolterraSystem(
        curves=CurveFamily(2.0, ("0.3*t + t^2/3",)),
        kernels=[["1", "1"], ["1+t", "-1"]],
        nonlinearities=[["x", "x"], ["x", "x"]],
        rhs=["t", "t^2"],
    )
    with pytest.raises(SolverError, match="too coarse|never assigned"):
        solve_linear_pc(system, n_segments=16)


def test_non_square_band_map_rejected(model01):
    system = VolterraSystem(
        curves=model01.curves,
        kernels=model01.kernels,
        nonlinearities=model01.nonlinearities,
        rhs=model01.rhs,
        unknown_of_band=(1, 1),
        guess=["0"],
    )
    with pytest.raises(SolverError, match="cannot be solved|band-to-unknown"):
        solve_linear_pc(system, n_segments=16)
