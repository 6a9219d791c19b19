import numpy as np
import pytest

from bandvie import quadrature
from bandvie.errors import DivergenceError, ProblemDefinitionError
from bandvie.newton import correction_norm, iterate, psi
from bandvie.problem import CurveFamily, ExpressionIterate, VolterraSystem
from bandvie.registry import builtin


def brute_force_psi(system, x0, xm, t, panels=2000):
    """Independent Psi oracle: raw band-split quadrature of the bracket."""
    out = np.array([float(f(t=t)) for f in system.rhs])
    for seg in quadrature.decompose(t, system.curves):
        if seg.is_empty:
            continue
        comp = system.unknown_of_band[seg.band - 1]
        for i in range(system.n_equations):
            kern = system.kernels[i][seg.band - 1]
            g = system.nonlinearities[i][seg.band - 1]
            gx = system.g_x[i][seg.band - 1]

            def integrand(s):
                x0v = np.asarray(x0.component_values(comp, s), float)
                xmv = np.asarray(xm.component_values(comp, s), float)
                kv = np.broadcast_to(np.asarray(kern(t=t, s=s), float), s.shape)
                gxv = np.broadcast_to(np.asarray(gx(s=s, x=x0v), float), s.shape)
                gv = np.broadcast_to(np.asarray(g(s=s, x=xmv), float), s.shape)
                return kv * (gxv * xmv - gv)

            out[i] += quadrature.composite_midpoint(
                integrand, seg.lo, seg.hi, panels)
    return out


def test_psi_at_zero_is_zero(scalar):
    x0 = scalar.guess_iterate()
    vals = psi(scalar, x0, x0, np.array([0.0]))
    assert vals.shape == (1, 1)
    assert vals[0, 0] == 0.0


def test_psi_reduces_to_f_for_linear_g(model02):
    x0 = model02.guess_iterate()
    xm = ExpressionIterate(["1+t", "sin(t)", "t^2"],
                           model02.component_domains())
    ts = np.linspace(0.1, 2.0, 20)
    vals = psi(model02, x0, xm, ts)
    expected = np.vstack([
        np.broadcast_to(np.asarray(f(t=ts), float), ts.shape)
        for f in model02.rhs])
    assert np.max(np.abs(vals - expected)) <= 1e-10


def test_psi_matches_brute_force_oracle(scalar, sys1):
    for system in (scalar, sys1):
        x0 = system.guess_iterate()
        for xm in (x0, system.exact_iterate()):
            ts = np.linspace(0.15, system.curves.horizon, 10)
            vals = psi(system, x0, xm, ts)
            for col, t in enumerate(ts):
                ref = brute_force_psi(system, x0, xm, float(t))
                # 1e-7 absorbs the 2000-panel error of the oracle itself
                assert np.max(np.abs(vals[:, col] - ref)) <= 1e-7


def test_psi_square_bracket_case():
    # G = x^2 frozen at x0 gives bracket 2 x0 xm - xm^2, which equals x0^2
    # when the iterate sits at the guess
    system = VolterraSystem(
        curves=CurveFamily(1.0, ()),
        kernels=[["1+t"]], nonlinearities=[["x^2"]], rhs=["t^3/3"],
        guess=["t"])
    x0 = system.guess_iterate()
    ts = np.linspace(0.2, 1.0, 5)
    vals = psi(system, x0, x0, ts)
    for col, t in enumerate(ts):
        expected = float(system.rhs[0](t=t)) + (1 + t) * t ** 3 / 3
        assert vals[0, col] == pytest.approx(expected, abs=1e-8)


def test_correction_norm_cases():
    domains = (2.0,)
    a = ExpressionIterate(["cos(t)"], domains)
    assert correction_norm(a, a) == 0.0
    b = ExpressionIterate(["cos(t) + 0.25"], domains)
    assert correction_norm(a, b) == pytest.approx(0.25, abs=1e-14)
    c = ExpressionIterate(["0.9*cos(t)"], domains)
    assert correction_norm(a, c) == pytest.approx(0.1, abs=1e-12)


def test_linear_problem_converges_in_one_step(model01):
    for kwargs in (dict(method="collocation", degree=5),
                   dict(method="pc", n_segments=32)):
        sol, rep = iterate(model01, max_iters=20, tol=1e-12, **kwargs)
        assert rep.stop_reason == "tolerance"
        assert len(rep.records) == 2
        # the first step does all the work, the second changes nothing
        assert rep.records[1].correction <= 1e-10


def test_scalar_pc_matches_reference_order(scalar):
    sol, rep = iterate(scalar, method="pc", n_segments=32, max_iters=10,
                       tol=1e-12)
    eps = rep.records[-1].aggregate_error
    assert 0.0286877 / 10 <= eps <= 0.0286877 * 10
    assert len(rep.records) <= 10


def test_sys1_matches_reference_and_decreases(sys1):
    sol, rep = iterate(sys1, method="collocation", degree=3, max_iters=20,
                       tol=1e-14)
    by_index = {r.index: r.aggregate_error for r in rep.records}
    assert 0.446955 / 10 <= by_index[1] <= 0.446955 * 10
    assert 2.98137e-9 / 10 <= by_index[20] <= 2.98137e-9 * 10
    assert by_index[20] < by_index[10] < by_index[1]


def test_sys2_ratio_sequence_is_contractive(sys2):
    sol, rep = iterate(sys2, method="collocation", degree=5, max_iters=12,
                       tol=1e-14)
    ratios = rep.correction_ratios
    assert len(ratios) >= 5
    # the first step may overshoot; from then on the map contracts
    assert all(r < 1.0 for r in ratios[1:6])


def test_frozen_operator_reuse(model01, monkeypatch):
    # the inner discretization must be assembled exactly once per run
    import bandvie.newton as newton_mod

    built = []
    original = newton_mod.CollocationDiscretization

    class Counting(original):
        def __init__(self, *args, **kwargs):
            built.append(1)
            super().__init__(*args, **kwargs)

    monkeypatch.setattr(newton_mod, "CollocationDiscretization", Counting)
    iterate(model01, method="collocation", degree=4, max_iters=6, tol=1e-15)
    assert sum(built) == 1


def test_divergence_guard_raises_with_report():
    system = VolterraSystem(
        curves=CurveFamily(1.0, ("t/2",)),
        kernels=[["1", "1"]],
        nonlinearities=[["x+10*x^2", "x"]],
        rhs=["t^3/3 + 10*t^5/80"],
        unknown_of_band=(1, 1),
        exact=["t^2"],
        guess=["20"],
    )
    with pytest.raises(DivergenceError) as exc:
        iterate(system, method="pc", n_segments=24, max_iters=15, tol=1e-12)
    report = exc.value.report
    assert report.stop_reason == "divergence"
    assert len(report.records) >= 4
    assert report.records[-1].correction > 1e3 * report.records[-4].correction


def test_invalid_system_rejected(model01):
    broken = VolterraSystem(
        curves=model01.curves,
        kernels=model01.kernels,
        nonlinearities=model01.nonlinearities,
        rhs=["1+t", str(model01.rhs[1])],
    )
    with pytest.raises(ProblemDefinitionError, match="validation"):
        iterate(broken, method="collocation", degree=3)


def test_iterate_argument_validation(model01):
    with pytest.raises(ValueError):
        iterate(model01, method="pc")  # missing n_segments
    with pytest.raises(ValueError):
        iterate(model01, method="collocation")  # missing degree
    with pytest.raises(ValueError):
        iterate(model01, method="bogus", degree=3)
    with pytest.raises(ValueError):
        iterate(model01, method="collocation", degree=3, tol=0.0)


def test_records_are_indexed_from_one(sys2):
    _, rep = iterate(sys2, method="collocation", degree=4, max_iters=5,
                     tol=1e-14)
    assert [r.index for r in rep.records] == [1, 2, 3, 4, 5]
    assert rep.stop_reason == "max-iterations"
