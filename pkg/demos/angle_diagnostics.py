"""Tour of the dense-oracle diagnostics.

Each section runs one of the verification drivers on a desk-scale
problem and prints what it measures:

- the exact per-step factorization of the subspace angle to the target
  eigenvector, and its product form over a whole run;
- the spectral bound on each expansion direction's angle when the shift
  sits close to an isolated eigenvalue;
- the rank-one eigen-expansion of the resolvent at random probe points;
- the two perturbation identities tying an inexact expansion vector to
  its exact counterpart;
- the tangent-ordering statistics for inexact directions, where the
  ordering's lower comparison is only a first-order approximation and
  the measured violation rate shows it.
"""

import numpy as np

from qri import full_eig, wave2d
from qri.diagnostics import (
    pick_isolated_index,
    run_angle_bound_check,
    run_angle_identity_check,
    run_perturbation_trials,
    run_resolvent_spot_check,
    run_sandwich_trials,
    shift_at_distance,
)

PROBE = 0.1234 + 0.4321j


def main():
    p = wave2d(6)

    print("== per-step angle factorization ==")
    report = run_angle_identity_check(p, PROBE, steps=12, seed=0)
    worst = max(s.gap for s in report.steps)
    print(f"12 expansion steps: worst identity gap = {worst:.3e}")
    print(f"product of per-step factors vs final angle: {report.product_gap:.3e}")
    print(f"final angle to the target eigenvector: {report.final_sin:.3e}\n")

    print("== expansion angle bound near an isolated eigenvalue ==")
    d = full_eig(p, PROBE)
    sigma = shift_at_distance(d.lams, pick_isolated_index(d.lams), 1e-2)
    steps = run_angle_bound_check(p, sigma, max_steps=20, seed=0)
    margin = min(s.rhs - s.lhs for s in steps)
    print(f"shift = {sigma}")
    print(f"{len(steps)} steps, smallest bound margin = {margin:.3e}\n")

    print("== resolvent eigen-expansion spot check ==")
    for pt in run_resolvent_spot_check(wave2d(4), PROBE, n_points=3, seed=0):
        print(f"mu = {pt.mu:+.4f}: relative error = {pt.error:.3e}")
    print()

    print("== perturbation identities for inexact expansions ==")
    trials = run_perturbation_trials(n=40, k=8, trials=50, seed=0)
    worst = max(max(t.gap_scale, t.gap_direction) for t in trials)
    print(f"50 random trials: worst identity gap = {worst:.3e}\n")

    print("== tangent-ordering statistics ==")
    summary = run_sandwich_trials(wave2d(4), ratio=0.01, trials=100,
                                  gmres_tol=1e-2, seed=0)
    print(f"shift distance ratio = {summary.ratio:.3e}")
    print(f"hypothesis held in {summary.hypothesis_count}/{summary.trials} trials")
    print(f"ordering violated in {summary.violation_count} of those "
          f"({100.0 * summary.violation_rate:.1f}%)")
    print("the lower comparison is first-order only; violations this common"
          "\nare expected and their margins are of the order of the inexact"
          "\nsolve's relative error")


if __name__ == "__main__":
    main()
