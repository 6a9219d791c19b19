"""Outer iteration plus piecewise-constant inner solver on a scalar equation.

The equation has one unknown under a kernel that switches representation at
s = t/2: a nonlinear piece (1+t+s)(x + x^2) below the curve and a linear
piece (1+2t) x above it.  The exact solution is t^2 on [0, 1].

Each outer step solves a linear first-kind system whose kernels were frozen
at the initial guess 0.5 t^2; the inner solver marches over a uniform mesh
carrying one step value per segment.  The method is first order in the mesh
width, so halving h should roughly halve the error; the iteration itself
converges much faster than that (geometric with a small ratio), so a
handful of outer steps reaches the discretization floor.

Run:  python demos/02_scalar_newton_pc.py
"""

from bandvie import SolveReport, builtin, format_table, iterate, measure_errors


def main():
    system = builtin("nonlinear-scalar")
    print(f"problem: {system.name}, guess 0.5*t^2, exact t^2 on [0, 1]\n")

    reports = []
    errors = {}
    for n in (32, 64, 128, 256, 512):
        solution, history = iterate(system, method="pc", n_segments=n,
                                    max_iters=10, tol=1e-12)
        rep = SolveReport(problem=system.name, method="pc",
                          parameter_name="N", parameter_value=n,
                          iterations=history)
        rep.component_errors, rep.aggregate_error = measure_errors(
            solution, system)
        reports.append(rep)
        errors[n] = rep.aggregate_error
    print(format_table(reports))

    print("empirical convergence order (error ratio per mesh doubling):")
    for n in (32, 64, 128, 256):
        print(f"  err(N={n}) / err(N={2 * n}) = {errors[n] / errors[2 * n]:.3f}")

    print("\ncorrection norms of the outer iteration at N = 128:")
    _, history = iterate(system, method="pc", n_segments=128,
                         max_iters=10, tol=1e-12)
    for rec in history.records:
        ratio = "" if rec.ratio is None else f"  (ratio {rec.ratio:.2e})"
        print(f"  step {rec.index}: ||dX|| = {rec.correction:.3e}{ratio}")
    print(f"  stopped on: {history.stop_reason}")


if __name__ == "__main__":
    main()
