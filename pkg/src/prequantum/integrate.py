"""Explicit Dormand-Prince 5(4) integrator with dense output.

Two features go beyond a textbook adaptive stepper:

* an optional clamp on the per-step change of selected state components
  (a step moving them by more than ``clamp`` in max-norm is rejected and
  retried with a proportionally shorter step), and
* a convergence monitor that flags the first accepted step at which the
  max-norm of selected derivative components has stayed below ``eps`` for
  a full ``window`` of time.

Samples are produced on a uniform output grid from the continuous
extension, plus one exact sample at the convergence event.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError

__all__ = ["IntegrationResult", "dopri45"]

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension, Shampine (1986) coefficients as used in Hairer & Wanner
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray
    converged: bool
    t_converged: float | None
    nsteps: int
    nrejected: int
    nfev: int


def _initial_step(fun, t0, y0, f0, rtol, atol, direction, max_step):
    scale = atol + np.abs(y0) * rtol
    d0 = np.max(np.abs(y0 / scale))
    d1 = np.max(np.abs(f0 / scale))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    with np.errstate(over="ignore", invalid="ignore"):
        f1 = fun(t0 + direction * h0, y1)
        d2 = np.max(np.abs((f1 - f0) / scale)) / h0
    if not np.isfinite(d2):
        return min(1e-3 * h0, max_step)
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def dopri45(fun, t_span, y0, *, rtol=1e-10, atol=1e-12, max_step=np.inf,
            output_interval=None, clamp=None, monitor=None,
            stop_on_convergence=False, max_steps=2_000_000):
    """Integrate ``y' = fun(t, y)`` over ``t_span`` (forward in time only).

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> ndarray``, same shape as ``y``.
    t_span : (float, float)
        Start and end time, ``t0 < t1``.
    y0 : array_like
        Initial state.
    rtol, atol : float
        Local error tolerances (max-norm of ``err / (atol + rtol*|y|)``).
    max_step : float
        Upper bound on the time step.
    output_interval : float, optional
        Spacing of the recorded samples. ``None`` records every accepted step.
    clamp : (index array, float), optional
        Reject steps moving ``y[index]`` by more than the bound (max-norm).
    monitor : (index array, eps, window), optional
        Convergence criterion on ``max |fun(t, y)[index]|``.
    stop_on_convergence : bool
        End the integration at the convergence event.

    Returns
    -------
    IntegrationResult
    """
    t0, t1 = (float(v) for v in t_span)
    if not t1 > t0:
        raise ValueError(f"t_span must be increasing, got {t_span}")
    y = np.array(y0, dtype=float)
    n = y.size
    nfev = 1
    f = np.asarray(fun(t0, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("non-finite derivative at initial state", t=t0, state=y.copy())

    clamp_idx, clamp_bound = (None, np.inf) if clamp is None else clamp
    if monitor is not None:
        mon_idx, mon_eps, mon_window = monitor

    times = [t0]
    states = [y.copy()]
    if output_interval is not None:
        n_out = int(np.floor((t1 - t0) / output_interval + 1e-9))
        out_grid = t0 + output_interval * np.arange(1, n_out + 1)
        out_grid = out_grid[out_grid < t1 - 1e-9 * output_interval]
        out_grid = np.append(out_grid, t1)
        next_out = 0

    converged = False
    t_conv = None
    below_since = None
    if monitor is not None and np.max(np.abs(f[mon_idx])) < mon_eps:
        below_since = t0

    t = t0
    h = _initial_step(fun, t0, y, f, rtol, atol, 1.0, max_step)
    nfev += 1
    K = np.empty((7, n))
    nsteps = nrejected = 0

    while t < t1:
        if nsteps + nrejected >= max_steps:
            raise IntegrationError(
                f"step budget of {max_steps} exhausted at t={t:.6g}", t=t, state=y.copy(), step=h
            )
        min_step = 10 * np.spacing(abs(t))
        h = min(h, max_step, t1 - t)
        if h < min_step:
            raise IntegrationError(
                f"step size underflow at t={t:.6g} (h={h:.3e})", t=t, state=y.copy(), step=h
            )
        t_new = t + h
        if t1 - t_new < min_step:
            t_new = t1
            h = t1 - t

        K[0] = f
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 6):
                dy = _A[s] @ K[:s] * h
                K[s] = fun(t + _C[s] * h, y + dy)
            y_new = y + h * (_B @ K[:6])
            f_new = fun(t_new, y_new)
            K[6] = f_new
            nfev += 6
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.max(np.abs(h * (_E @ K) / scale))

        if not (np.isfinite(err) and np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            nrejected += 1
            h *= 0.1
            continue

        if err > 1.0:
            nrejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        if clamp_idx is not None:
            jump = np.max(np.abs(y_new[clamp_idx] - y[clamp_idx]))
            if jump > clamp_bound:
                nrejected += 1
                h *= 0.9 * clamp_bound / jump
                continue

        # accepted
        nsteps += 1
        if output_interval is None:
            times.append(t_new)
            states.append(y_new.copy())
        else:
            if next_out < out_grid.size and out_grid[next_out] <= t_new:
                Q = K.T @ _P
                while next_out < out_grid.size and out_grid[next_out] <= t_new:
                    to = out_grid[next_out]
                    if to == t_new:
                        times.append(t_new)
                        states.append(y_new.copy())
                    else:
                        theta = (to - t) / h
                        times.append(to)
                        states.append(y + h * (Q @ (theta ** np.arange(1, 5))))
                    next_out += 1

        if monitor is not None and not converged:
            if np.max(np.abs(f_new[mon_idx])) < mon_eps:
                if below_since is None:
                    below_since = t_new
                if t_new - below_since >= mon_window:
                    converged = True
                    t_conv = t_new
                    if output_interval is not None and times[-1] != t_new:
                        # convergence event sample; output samples never run ahead of t_new
                        times.append(t_new)
                        states.append(y_new.copy())
            else:
                below_since = None

        t, y, f = t_new, y_new, f_new
        if err == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        h *= factor

        if converged and stop_on_convergence:
            if output_interval is not None and times[-1] != t:
                times.append(t)
                states.append(y.copy())
            break

    return IntegrationResult(
        t=np.array(times),
        y=np.array(states),
        converged=converged,
        t_converged=t_conv,
        nsteps=nsteps,
        nrejected=nrejected,
        nfev=nfev,
    )
