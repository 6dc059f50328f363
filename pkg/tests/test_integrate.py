import numpy as np
import pytest
from scipy.integrate import solve_ivp

from prequantum import IntegrationError
from prequantum.integrate import dopri45


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def test_harmonic_oscillator_exact_solution():
    res = dopri45(oscillator, (0, 10), [1.0, 0.0], rtol=1e-11, atol=1e-13, output_interval=0.1)
    assert res.t[0] == 0.0 and res.t[-1] == 10.0
    np.testing.assert_allclose(res.t, np.linspace(0, 10, 101), atol=1e-12)
    # dense output between steps included
    np.testing.assert_allclose(res.y[:, 0], np.cos(res.t), atol=1e-9)
    np.testing.assert_allclose(res.y[:, 1], -np.sin(res.t), atol=1e-9)


def test_matches_scipy_on_nonlinear_problem():
    def fun(t, y):
        return np.array([y[1], -np.sin(y[0]) - 0.1 * y[1]])

    grid = np.linspace(0, 20, 41)
    ref = solve_ivp(fun, (0, 20), [2.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14, t_eval=grid)
    res = dopri45(fun, (0, 20), [2.0, 0.0], rtol=1e-10, atol=1e-12, output_interval=0.5)
    np.testing.assert_allclose(res.t, grid, atol=1e-12)
    np.testing.assert_allclose(res.y, ref.y.T, atol=1e-7)


def test_every_step_recorded_without_output_interval():
    res = dopri45(oscillator, (0, 1), [1.0, 0.0], max_step=0.1)
    assert np.all(np.diff(res.t) <= 0.1 + 1e-15)
    assert len(res.t) == res.nsteps + 1


def test_clamp_bounds_each_step():
    res = dopri45(lambda t, y: np.array([5.0]), (0, 1), [0.0], clamp=(np.array([0]), 0.01))
    assert np.max(np.abs(np.diff(res.y[:, 0]))) <= 0.01 + 1e-15
    assert res.y[-1, 0] == pytest.approx(5.0, rel=1e-12)


def test_convergence_monitor_and_event_sample():
    # y' = -y: |y'| < 1e-6 once t > ln(1e6) ~ 13.8155, sustained for 1 time unit
    res = dopri45(lambda t, y: -y, (0, 30), [1.0], rtol=1e-10, atol=1e-14,
                  output_interval=1.0, monitor=(np.array([0]), 1e-6, 1.0))
    assert res.converged
    assert np.log(1e6) + 1.0 <= res.t_converged <= np.log(1e6) + 1.0 + 0.5
    assert res.t_converged in res.t
    assert np.all(np.diff(res.t) > 0)
    assert res.t[-1] == 30.0


def test_stop_on_convergence():
    res = dopri45(lambda t, y: -y, (0, 30), [1.0], output_interval=1.0,
                  monitor=(np.array([0]), 1e-6, 1.0), stop_on_convergence=True)
    assert res.converged and res.t[-1] == res.t_converged < 30


def test_not_converged_reported():
    res = dopri45(oscillator, (0, 5), [1.0, 0.0], monitor=(np.array([0, 1]), 1e-6, 1.0))
    assert not res.converged and res.t_converged is None


def test_step_budget_raises_with_state():
    with pytest.raises(IntegrationError) as info:
        dopri45(oscillator, (0, 100), [1.0, 0.0], max_step=0.01, max_steps=50)
    assert info.value.t > 0
    assert info.value.state.shape == (2,)


def test_non_finite_initial_derivative():
    with pytest.raises(IntegrationError):
        dopri45(lambda t, y: np.full_like(y, np.nan), (0, 1), [0.0])


def test_rejects_backward_span():
    with pytest.raises(ValueError):
        dopri45(oscillator, (1, 0), [1.0, 0.0])
