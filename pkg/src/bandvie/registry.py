"""Builtin example problems with known exact solutions.

The linear systems exercise the inner solvers directly; the nonlinear ones
drive the outer iteration.  Right-hand sides are stored in closed form so
that f_i(0) = 0 holds exactly and derivative expressions stay symbolic.
"""

from __future__ import annotations

from .errors import ProblemDefinitionError
from .problem import CurveFamily, VolterraSystem


def _model01():
    return VolterraSystem(
        name="model01",
        curves=CurveFamily(horizon=2.0, interior=("t/2",)),
        kernels=[["1+t+s", "1"],
                 ["1+t-s", "-1"]],
        nonlinearities=[["x", "x"],
                        ["x", "x"]],
        rhs=["3*t*sin(t/2)/2 + sin(t/2) + 2*cos(t/2) - cos(t) - 1",
             "t*sin(t/2)/2 + sin(t/2) - 2*cos(t/2) + cos(t) + 1"],
        exact=["cos(t)", "sin(t)"],
        guess=["0", "0"],
    )


def _model02():
    return VolterraSystem(
        name="model02",
        curves=CurveFamily(horizon=2.0, interior=("t/3", "2*t/3")),
        kernels=[["1+t+s", "1", "1+s"],
                 ["1+t-s", "-1", "1-t"],
                 ["1+t/5+s", "1+t-s", "-(1+s)"]],
        nonlinearities=[["x", "x", "x"],
                        ["x", "x", "x"],
                        ["x", "x", "x"]],
        rhs=[
            "4*t*sin(t/3)/3 + t*cos(2*t/3)/6 - t*cos(t)/4 + sin(t/3)"
            " - sin(2*t/3)/4 + sin(t)/4 + 2*cos(t/3) - 3*cos(2*t/3)/4"
            " - cos(t)/4 - 1",
            "2*t*sin(t/3)/3 - t*cos(2*t/3)/4 + t*cos(t)/4 + sin(t/3)"
            " - 2*cos(t/3) + 5*cos(2*t/3)/4 - cos(t)/4 + 1",
            "8*t*sin(t/3)/15 + 2*t*cos(t/3)/3 - t*cos(2*t/3)/2 + t*cos(t)/4"
            " + 2*sin(t/3) - 3*sin(2*t/3)/4 - sin(t)/4 + 2*cos(t/3)"
            " - 5*cos(2*t/3)/4 + cos(t)/4 - 1",
        ],
        exact=["cos(t)", "sin(t)", "sin(t)/4"],
        guess=["0", "0", "0"],
    )


def _nonlinear_scalar():
    # One unknown shared by two kernel bands; the guess below is a free
    # choice (far from the exact t^2 but inside the convergence region).
    return VolterraSystem(
        name="nonlinear-scalar",
        curves=CurveFamily(horizon=1.0, interior=("t/2",)),
        kernels=[["1+t+s", "1+2*t"]],
        nonlinearities=[["x+x^2", "x"]],
        rhs=["t^3/3 + 41*t^4/64 + t^5/160 + 17*t^6/1920"],
        unknown_of_band=(1, 1),
        exact=["t^2"],
        guess=["0.5*t^2"],
    )


def _nonlinear_sys1():
    return VolterraSystem(
        name="nonlinear-sys1",
        curves=CurveFamily(horizon=1.0, interior=("t/2",)),
        kernels=[["s*(t+s)", "1"],
                 ["1+t-s", "-1"]],
        nonlinearities=[["x^2", "3*x+x^3"],
                        ["x-x^2", "x+x^4"]],
        rhs=["1023*t^10/10240 + 5*t^7/1344 + 45*t^4/64",
             "-8191*t^13/106496 - 7*t^6/1920 - t^5/160 - 5*t^4/24 + t^3/24"],
        exact=["t^2", "t^3"],
        guess=["0.4*t^2", "0.5*t^3"],
    )


def _nonlinear_sys2():
    return VolterraSystem(
        name="nonlinear-sys2",
        curves=CurveFamily(horizon=1.0, interior=("t/2",)),
        kernels=[["s*(t+s)", "1"],
                 ["1+t-s", "-1"]],
        nonlinearities=[["x^2", "3*x+x^3"],
                        ["x-x^2", "x+x^4"]],
        rhs=[
            "t^3/12 + 3*t^2*sin(t)/16 + t*cos(t)/4 - t/8 - sin(t)/8"
            " + 15*cos(t/2)/4 + cos(t)^3/3 - 4*cos(t) - cos(3*t/2)/12",
            "-3*t^2/16 + t*sin(t/2)/2 - t*sin(t)/8 - 7*t/16 + sin(t/2)"
            " + sin(t)^3*cos(t)/4 + 7*sin(t)*cos(t)/16 - sin(t)/2"
            " - 2*cos(t/2) + 9*cos(t)/8 + 7/8",
        ],
        exact=["cos(t)", "sin(t)"],
        guess=["0.9*cos(t)", "0.9*sin(t)"],
    )


_BUILTINS = {
    "model01": (
        _model01,
        "linear 2x2 system on [0, 2], kernel jump at t/2, exact (cos, sin)",
    ),
    "model02": (
        _model02,
        "linear 3x3 system on [0, 2], jumps at t/3 and 2t/3, "
        "exact (cos, sin, sin/4)",
    ),
    "nonlinear-scalar": (
        _nonlinear_scalar,
        "scalar equation on [0, 1] with one unknown across two bands, "
        "exact t^2",
    ),
    "nonlinear-sys1": (
        _nonlinear_sys1,
        "nonlinear 2x2 system on [0, 1], polynomial exact (t^2, t^3), "
        "far initial guess",
    ),
    "nonlinear-sys2": (
        _nonlinear_sys2,
        "nonlinear 2x2 system on [0, 1], exact (cos, sin), near initial guess",
    ),
}


def builtin(name):
    """Construct the builtin system registered under ``name``."""
    try:
        factory, _ = _BUILTINS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise ProblemDefinitionError(
            f"unknown builtin problem {name!r} (known: {known})"
        ) from None
    return factory()


def list_builtins():
    """(name, one-line description) pairs for every builtin problem."""
    return [(name, desc) for name, (_, desc) in _BUILTINS.items()]
