"""
Finding eigenvalues with a one-frequency flow
=============================================

A single frequency ``omega`` is driven towards the roots of the characteristic
polynomial ``f`` of a Hermitian matrix.  Every root attracts the starting
values on its side of the nearest critical point of ``f``.
"""

import numpy as np

from prequantum import (IntegratorSettings, Scenario, basin_map, bisect_basin_boundary,
                        fit_convergence_rate, integrate_single, row_lattice)
from prequantum.operators import EigenTable

# A diagonal matrix with eigenvalues 1 and 2: f(w) = (1 - w)(2 - w)
eigs = [1.0, 2.0]
settings = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-13, convergence_eps=1e-10)

# Start between the two roots but closer to 2
traj = integrate_single(eigs, 1.0, 1.6, 0.0, settings, (0.0, 60.0))
print("final frequency :", traj.omega_final[0])
print("converged at t  :", traj.t_converged)

# Near the root the distance shrinks like exp(-kappa f'(E)^2 t), here rate 1
print("fitted rate     :", fit_convergence_rate(traj, 2.0))

# Once settled, the phase advances linearly at the eigenvalue
tail = traj.tail()
print("phase slope     :", np.polyfit(traj.times[tail], traj.phi[tail, 0], 1)[0])

# Sweep starting values and locate the boundary between the two basins
template = Scenario(kappa=1.0, M_star=np.eye(1), omega0=[0.0], phi0=[0.0],
                    t_span=(0.0, 80.0), integrator=settings)
lattice = row_lattice(np.eye(1), EigenTable([eigs]))
starts = np.linspace(0.5, 2.5, 9)
bmap = basin_map(template, lattice, [starts], model="single")
for w0, j in zip(starts, bmap.indices[:, 0]):
    print(f"  start {w0:5.2f} -> column {j}")

boundary = bisect_basin_boundary(template, lattice, 1.2, 1.8)
print("basin boundary  :", boundary)
