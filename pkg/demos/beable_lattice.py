"""
Several frequencies on a product lattice
========================================

Two commuting operators with eigenvalue rows (1, 2) and (5, 7) define a lattice
of candidate frequency vectors.  The flow minimises the square of the summed
row residuals, so it slows down algebraically near the lattice and the
dissipation strength is chosen from the target resolution.
"""

import numpy as np

from prequantum import (IntegratorSettings, Scenario, build_hamiltonian, classify_fixed_point,
                        compare_emergent_phase, field_value, integrate_beable_flow,
                        kappa_for_resolution, mode_phase, random_unitary, row_lattice)
from prequantum.operators import commuting_set_from_table

rows = np.array([[1.0, 2.0], [5.0, 7.0]])
cset = commuting_set_from_table(rows, random_unitary(2, np.random.default_rng(0)))
M = np.eye(2)
lattice = row_lattice(M, cset.eigen_table)

# kappa large enough that the residual reaches 1e-10 by t = 40
kappa = kappa_for_resolution(lattice, 1e-10, 40.0)
print(f"kappa           : {kappa:.3e}")

settings = IntegratorSettings(rel_tol=1e-10, abs_tol=1e-12, convergence_eps=1e-11)
scenario = Scenario(kappa=kappa, M_star=M, omega0=[1.9, 6.8], phi0=[0.0, 0.0],
                    t_span=(0.0, 150.0), integrator=settings, output_interval=0.01)
traj = integrate_beable_flow(scenario, lattice)
report = classify_fixed_point(traj.omega_final, lattice, 1e-8)
print("final omega     :", traj.omega_final)
print("field at start  :", field_value(np.array([1.9, 6.8]), lattice))
print("field at end    :", field_value(traj.omega_final, lattice))
print("column indices  :", report.j, "coherent:", report.coherent)

# The combined phase n.phi then advances like a Schrodinger phase of n.A
n = [2, 3]
H = build_hamiltonian("general", n, M, cset)
cmp = compare_emergent_phase(mode_phase(traj, n), H, report)
print("emergent energy :", cmp.E_star)
print("max phase dev   :", cmp.max_phase_dev)
