"""
Beats between converged branches
================================

An ensemble of flows that settled at different frequencies carries phases
``n * omega_k * t``.  Summing the unit phasors with weights ``p_k`` gives an
intensity that beats at the frequency differences.
"""

import numpy as np

from prequantum import beat_frequency, interference_ensemble, integrate_single, limit_cycle_period
from prequantum.flow import IntegratorSettings

settings = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-13, convergence_eps=1e-10)

# Two starts that end on different roots of (1 - w)(1.3 - w); the root slope is
# only 0.3, so kappa = 20 keeps the relaxation time short
eigs = [1.0, 1.3]
finals = [float(integrate_single(eigs, 20.0, w0, 0.0, settings, (0.0, 200.0)).omega_final[0])
          for w0 in (0.9, 1.4)]
print("settled frequencies:", finals)

# Each settled flow traces a limit cycle of period 2 pi / omega
traj = integrate_single(eigs, 20.0, 1.4, 0.0, settings, (0.0, 200.0))
print("period             :", limit_cycle_period(traj), "expected", 2 * np.pi / 1.3)

t = np.linspace(0.0, 40.0, 4001)
n = 2
intensity = interference_ensemble([0.5, 0.5], finals, n, t)
print("intensity at t=0   :", intensity[0])
print("beat frequency     :", beat_frequency(t, intensity),
      "expected", n * abs(finals[1] - finals[0]))
