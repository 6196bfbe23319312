"""From a covariance target to a scale-vector, and where that fails.

Three short exhibits:

1. round-trip accuracy on random feasible targets,
2. the elongation ceiling as a function of orientation, including
   the closed-form minimum midway between the principal directions,
3. what an infeasible request looks like to the caller.

Run:  python3 demos/moment_matching.py
"""

import math

import numpy as np

from rubs import (
    covariance_from_params,
    covariance_of,
    elongation_bound,
    optimize_scale_vector,
)
from rubs.solver import Infeasible


def main():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        theta = rng.uniform(0.0, math.pi)
        rho = rng.uniform(1.0, min(0.9 * elongation_bound(theta), 5.0))
        c = covariance_from_params(rng.uniform(0.5, 8.0), rho, theta)
        a = optimize_scale_vector(c)
        worst = max(worst, np.linalg.norm(covariance_of(a) - c) / np.linalg.norm(c))
    print(f"200 random targets, worst covariance error: {worst:.2e} (relative)")

    print("\nelongation ceiling by orientation:")
    for deg in (5, 10, 15, 22.5, 30, 40, 44):
        phi = math.radians(deg)
        print(f"  {deg:5.1f} deg  ->  {elongation_bound(phi):8.2f}")
    floor = elongation_bound(math.pi / 8.0)
    print(f"  minimum at 22.5 deg: {floor:.6f} == 3 + 2*sqrt(2) "
          f"({3.0 + 2.0 * math.sqrt(2.0):.6f})")

    print("\nasking for elongation 8 at 22.5 deg (ceiling is 5.83):")
    c = covariance_from_params(2.0, 8.0, math.pi / 8.0)
    try:
        optimize_scale_vector(c)
    except Infeasible as e:
        print(f"  Infeasible: wanted {e.elongation:.2f}, "
              f"ceiling {e.bound:.2f} at {e.orientation:.3f} rad")


if __name__ == "__main__":
    main()
