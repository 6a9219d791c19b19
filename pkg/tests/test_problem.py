import numpy as np
import pytest

from bandvie.config import load_problem, problem_from_mapping
from bandvie.errors import ProblemDefinitionError
from bandvie.problem import (
    CurveFamily,
    ExpressionIterate,
    ExpressionRhs,
    VolterraSystem,
    band_quadrature_residual,
    linearize,
    validate,
)
from bandvie.registry import builtin, list_builtins

ALL_BUILTINS = ("model01", "model02", "nonlinear-scalar",
                "nonlinear-sys1", "nonlinear-sys2")


def test_all_builtins_validate_clean():
    for name in ALL_BUILTINS:
        assert validate(builtin(name)) == [], name


def test_registry_metadata(model01, model02, scalar):
    assert model01.n == 2
    assert model01.horizon == 2.0
    assert model02.n == 3
    assert scalar.n_components == 1
    assert scalar.n_bands == 2
    assert scalar.n_equations == 1
    assert scalar.unknown_of_band == (1, 1)
    assert scalar.horizon == 1.0


def test_unknown_builtin_rejected():
    with pytest.raises(ProblemDefinitionError, match="unknown builtin"):
        builtin("model99")


def test_list_builtins():
    names = [n for n, _ in list_builtins()]
    assert len(names) == 5
    assert "model01" in names and "nonlinear-sys2" in names


def test_identity_band_map_everywhere_but_scalar():
    for name in ALL_BUILTINS:
        system = builtin(name)
        if name == "nonlinear-scalar":
            continue
        assert system.unknown_of_band == tuple(
            range(1, system.n_bands + 1)), name


def test_component_domains(model01, model02, scalar):
    assert model01.component_domains() == pytest.approx((1.0, 2.0))
    assert model02.component_domains() == pytest.approx((2 / 3, 4 / 3, 2.0))
    assert scalar.component_domains() == pytest.approx((1.0,))


def test_builtin_right_hand_sides_match_band_quadrature_oracle():
    # independent check of the stored closed forms: plugging the exact
    # solution into the original banded equations must give ~zero residual
    for name in ALL_BUILTINS:
        system = builtin(name)
        exact = system.exact_iterate()
        for t in np.linspace(0.08, system.curves.horizon, 9):
            res = band_quadrature_residual(system, exact, float(t), panels=4000)
            assert np.max(np.abs(res)) <= 5e-8, (name, t)


def test_registered_initial_guesses_stored(sys1, sys2):
    ts = np.linspace(0.0, 1.0, 7)
    g1 = sys1.guess_iterate()
    assert np.allclose(g1.component_values(1, ts), 0.4 * ts ** 2)
    assert np.allclose(g1.component_values(2, ts), 0.5 * ts ** 3)
    g2 = sys2.guess_iterate()
    assert np.allclose(g2.component_values(1, ts), 0.9 * np.cos(ts))
    assert np.allclose(g2.component_values(2, ts), 0.9 * np.sin(ts))


def test_validate_flags_bad_rhs(model01):
    broken = VolterraSystem(
        curves=model01.curves,
        kernels=model01.kernels,
        nonlinearities=model01.nonlinearities,
        rhs=["1+t", str(model01.rhs[1])],
        exact=model01.exact,
    )
    diags = validate(broken)
    assert any("f_1(0)" in str(d) for d in diags)


def test_validate_flags_swapped_curves(model02):
    swapped = VolterraSystem(
        curves=CurveFamily(2.0, ("t", "t/2")),
        kernels=model02.kernels,
        nonlinearities=model02.nonlinearities,
        rhs=model02.rhs,
    )
    diags = validate(swapped)
    assert any("ordering" in str(d) or "slopes" in str(d) for d in diags)


def test_validate_flags_component_count_mismatch(model01):
    broken = VolterraSystem(
        curves=model01.curves,
        kernels=model01.kernels,
        nonlinearities=model01.nonlinearities,
        rhs=model01.rhs,
        unknown_of_band=(1, 1),
        guess=["0"],
    )
    diags = validate(broken)
    assert any("map" in str(d) for d in diags)


def test_linearize_linear_system_freezes_to_plain_kernels(model01):
    lin = linearize(model01)
    rng = np.random.default_rng(1)
    for _ in range(10):
        t = float(rng.uniform(0.1, 2.0))
        s = rng.uniform(0.0, t, size=5)
        for i in (1, 2):
            for j in (1, 2):
                frozen = lin.frozen_kernel(i, j)(t, s)
                raw = np.broadcast_to(np.asarray(
                    model01.kernels[i - 1][j - 1](t=t, s=s), float), s.shape)
                assert np.allclose(frozen, raw, atol=1e-15)


def test_linearize_scalar_frozen_kernel_spot_check(scalar):
    # freezing G(s, x) = x + x^2 along x0(s) = s^2 multiplies the first-band
    # kernel by 1 + 2 s^2
    lin = linearize(scalar, scalar.exact_iterate())
    s = np.array([0.0, 0.3, 0.9])
    got = lin.frozen_kernel(1, 1)(0.5, s)
    assert np.allclose(got, (1 + 0.5 + s) * (1 + 2 * s ** 2), atol=1e-14)


def test_expression_rhs(model01):
    rhs = ExpressionRhs(model01)
    ts = np.linspace(0.0, 2.0, 5)
    vals = rhs.values(ts)
    assert vals.shape == (2, 5)
    assert abs(vals[0, 0]) <= 1e-12 and abs(vals[1, 0]) <= 1e-12
    assert rhs.derivative_at_zero() == pytest.approx([0.5, 0.5])


def test_expression_iterate_protocol(model01):
    it = ExpressionIterate(model01.exact, model01.component_domains())
    assert it.n_components == 2
    assert it.value_at_zero(1) == 1.0
    assert it.breakpoints_in(0.0, 2.0).size == 0
    ts = np.linspace(0, 1, 5)
    assert np.allclose(it.component_values(1, ts), np.cos(ts))


def test_start_value_matrix_model01(model01):
    lin = linearize(model01)
    assert np.allclose(lin.start_value_matrix(),
                       [[0.5, 0.5], [0.5, -0.5]], atol=1e-14)


def test_shape_validation():
    curves = CurveFamily(1.0, ("t/2",))
    with pytest.raises(ProblemDefinitionError):
        VolterraSystem(curves, [["1"]], [["x", "x"]], ["t"])
    with pytest.raises(ProblemDefinitionError):
        VolterraSystem(curves, [["1", "1"]], [["x", "x"]], ["t"],
                       unknown_of_band=(1,))
    with pytest.raises(ProblemDefinitionError):
        VolterraSystem(curves, [["1", "1"]], [["x", "x"]], ["t"],
                       unknown_of_band=(1, 3))


MODEL01_YAML = """\
name: model01-copy
n: 2
T: 2.0
alpha: ["t/2"]
K:
  - ["1+t+s", "1"]
  - ["1+t-s", "-1"]
G:
  - ["x", "x"]
  - ["x", "x"]
f:
  - "3*t*sin(t/2)/2 + sin(t/2) + 2*cos(t/2) - cos(t) - 1"
  - "t*sin(t/2)/2 + sin(t/2) - 2*cos(t/2) + cos(t) + 1"
exact: ["cos(t)", "sin(t)"]
"""


def test_config_round_trip(tmp_path):
    path = tmp_path / "model01.yaml"
    path.write_text(MODEL01_YAML)
    system = load_problem(path)
    assert system.name == "model01-copy"
    assert validate(system) == []
    exact = system.exact_iterate()
    res = band_quadrature_residual(system, exact, 1.3, panels=2000)
    assert np.max(np.abs(res)) <= 1e-6


def test_config_errors(tmp_path):
    with pytest.raises(ProblemDefinitionError, match="missing"):
        problem_from_mapping({"n": 2, "T": 1.0})
    with pytest.raises(ProblemDefinitionError, match="unknown config keys"):
        problem_from_mapping({"n": 1, "T": 1.0, "K": [["1"]], "G": [["x"]],
                              "f": ["t"], "bogus": 1})
    with pytest.raises(ProblemDefinitionError, match="mapping"):
        problem_from_mapping(["not", "a", "mapping"])
    with pytest.raises(ProblemDefinitionError):
        problem_from_mapping({"n": 2, "T": 1.0, "alpha": ["t/2"],
                              "K": [["1"]], "G": [["x", "x"]], "f": ["t"]})
    bad = tmp_path / "bad.yaml"
    bad.write_text("n: [unclosed")
    with pytest.raises(ProblemDefinitionError, match="cannot parse"):
        load_problem(bad)
