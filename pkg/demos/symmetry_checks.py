"""
Symmetries of the field
=======================

Relabelling the beables or rotating the Hilbert space leaves the field value
unchanged as long as every ingredient of the field is transformed
consistently.  A general invertible mixing of the rows does change the
field, but the residual vectors ``omega - M A_j`` transform covariantly.
Permutations additionally commute with the time evolution.
"""

import numpy as np

from prequantum import (BeableTransform, IntegratorSettings, Scenario, covariance_residual,
                        equivariance_check, generate_commuting_set, invariance_check,
                        random_unitary)

rng = np.random.default_rng(12)
cset = generate_commuting_set(3, 2, (-1.0, 1.0), seed=12)
M = np.array([[1.0, 0.3], [-0.2, 1.0]])
omega = rng.uniform(-1, 1, 2)

swap = BeableTransform.permutation([1, 0])
mix = BeableTransform.general([[2.0, 1.0], [0.5, -1.0]])
V = random_unitary(3, rng)

# The general mixing is included to show that F is not one of its invariants
for kind, probe in (("permutation", swap), ("unitary", V), ("general", mix)):
    before, after, delta = invariance_check(kind, probe, cset, M, omega)
    print(f"{kind:12s} F = {before:.12f} -> {after:.12f}  (|delta| = {delta:.1e})")

# The general mixing only preserves the residual vectors up to the map S
print("covariance residual:", covariance_residual(mix, cset.eigen_table, omega, M))

# Run the flow and its relabelled twin, then compare them sample by sample
settings = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12)
scenario = Scenario(kappa=50.0, M_star=M, omega0=[0.4, -0.3], phi0=[0.0, 0.5],
                    t_span=(0.0, 30.0), integrator=settings)
result = equivariance_check(swap, scenario, cset.eigen_table)
deviation, indices_match = result
print("max |omega' - P omega| :", deviation)
print("fixed point relabelled :", indices_match)
