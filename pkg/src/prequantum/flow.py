"""Dissipative flows whose attractors are eigenvalues.

Two models are integrated here.

Single model (one frequency ``omega`` and one angle ``phi``)::

    phi'   = omega
    omega' = -kappa * f(omega) * f'(omega),    f(w) = det(H - w) = prod_i (E_i - w)

Beable model (``N`` frequencies and angles), driven by the row lattice
``lam = M* @ A``::

    F(omega)   = sum_n g_n(omega_n)**2,          g_n(w) = prod_j (lam[n, j] - w)
    omega'     = -kappa * dF^2/domega
    phi'       = omega

Every zero of ``f`` (resp. every lattice point of ``lam``) is an attractor.
The single model converges exponentially with rate ``kappa * f'(E)**2``; the
beable model has a quartic minimum at each lattice point and therefore
approaches it algebraically, ``|omega - omega*| ~ (kappa t)**-0.5``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
import itertools
import json
import math

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, NumericError
from .integrate import dopri45
from .operators import RowLattice, row_lattice
from .polynomial import Polynomial, characteristic_polynomial

__all__ = [
    "IntegratorSettings",
    "Scenario",
    "Trajectory",
    "FixedPointReport",
    "BasinMap",
    "single_flow_rhs",
    "integrate_single",
    "integrate_polynomial_flow",
    "row_polynomials",
    "field_value",
    "field_grad_sq",
    "integrate_beable_flow",
    "classify_fixed_point",
    "basin_map",
    "bisect_basin_boundary",
    "fit_convergence_rate",
    "min_root_slope",
    "kappa_for_resolution",
]


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances and convergence criterion.

    ``h_max`` bounds the max-norm change of ``omega`` in one accepted step;
    ``None`` means 0.1 times the smallest lattice (or root) gap.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    h_max: float | None = None
    convergence_eps: float = 1e-10
    convergence_window: float = 1.0

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "convergence_eps", "convergence_window"):
            value = getattr(self, name)
            if not (value > 0):
                raise ConfigurationError(f"integrator.{name} must be positive, got {value}")
        if self.h_max is not None and not self.h_max > 0:
            raise ConfigurationError(f"integrator.h_max must be positive, got {self.h_max}")


@dataclass(frozen=True, eq=False)
class Scenario:
    kappa: float
    M_star: np.ndarray
    omega0: np.ndarray
    phi0: np.ndarray
    t_span: tuple
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    n_vec: np.ndarray | None = None
    seed: int = 0
    output_interval: float = 0.05

    def __post_init__(self):
        M = np.array(self.M_star, dtype=float, ndmin=2)
        N = M.shape[0]
        if M.shape != (N, N):
            raise ConfigurationError(f"M_star must be square, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ConfigurationError("M_star has non-finite entries")
        norm = np.linalg.norm(M, 2)
        if not abs(np.linalg.det(M)) > 1e-12 * norm ** N or norm == 0:
            raise ConfigurationError("M_star not regular")
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        omega0 = np.array(self.omega0, dtype=float, ndmin=1)
        phi0 = np.array(self.phi0, dtype=float, ndmin=1)
        n_vec = np.ones(N, dtype=int) if self.n_vec is None else np.array(self.n_vec, ndmin=1)
        for name, arr in (("omega0", omega0), ("phi0", phi0), ("n_vec", n_vec)):
            if arr.shape != (N,):
                raise ConfigurationError(f"{name} must have length N={N}, got {arr.shape[0]}")
        if not np.all(np.asarray(n_vec) == np.round(n_vec)):
            raise ConfigurationError("n_vec must be integer")
        t0, t1 = (float(v) for v in self.t_span)
        if not t1 > t0:
            raise ConfigurationError(f"t_span must be increasing, got {self.t_span}")
        if not self.output_interval > 0:
            raise ConfigurationError("output_interval must be positive")
        for arr in (M, omega0, phi0):
            arr.setflags(write=False)
        n_vec = n_vec.astype(int)
        n_vec.setflags(write=False)
        object.__setattr__(self, "M_star", M)
        object.__setattr__(self, "omega0", omega0)
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "n_vec", n_vec)
        object.__setattr__(self, "t_span", (t0, t1))

    @property
    def num_beables(self):
        return self.M_star.shape[0]

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution ``(omega(t), phi(t), F(t))``.

    ``phi`` is stored unwrapped. For the single model ``field_F`` holds
    ``f(omega)**2``; for the beable model it holds ``F(omega)``.
    ``stationary`` marks an initial state where the right-hand side vanishes
    identically.
    """

    times: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    field_F: np.ndarray
    converged: bool
    t_converged: float | None
    stationary: bool = False
    model: str = "beable"
    polynomial: Polynomial | None = None
    kappa: float | None = None

    @property
    def num_beables(self):
        return self.omega.shape[1]

    @property
    def omega_final(self):
        return self.omega[-1].copy()

    def tail(self, t_from=None):
        """Index mask of samples at or after ``t_from`` (default ``t_converged``)."""
        t_from = self.t_converged if t_from is None else t_from
        if t_from is None:
            return np.zeros(self.times.shape, dtype=bool)
        return self.times >= t_from


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    """Classification of an asymptotic frequency vector against the row lattice.

    ``j`` holds 0-based column indices, one per component. ``ambiguous`` lists,
    per component, every column within ``2*tol`` when that is more than one.
    """

    omega_star: np.ndarray
    j: np.ndarray
    coherent: bool
    residual: float
    converged: bool
    tol: float
    ambiguous: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "omega_star": [float(v) for v in self.omega_star],
            "j": [int(v) for v in self.j],
            "coherent": bool(self.coherent),
            "residual": float(self.residual),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, doc, tol=1e-8):
        residual = float(doc["residual"])
        return cls(np.array(doc["omega_star"], dtype=float), np.array(doc["j"], dtype=int),
                   bool(doc["coherent"]), residual, residual <= tol, tol)


# ----------------------------------------------------------------------------
# single model


def single_flow_rhs(omega, f, kappa):
    """``-kappa * f(omega) * f'(omega)``."""
    return -kappa * f(omega) * f.deriv()(omega)


def _default_h_max(values):
    gaps = []
    for row in np.atleast_2d(values):
        diffs = np.diff(np.unique(row))
        if diffs.size:
            gaps.append(diffs.min())
    return 0.1 * min(gaps) if gaps else 0.1 * max(1.0, float(np.max(np.abs(values))))


def integrate_polynomial_flow(f, kappa, omega0, phi0, settings, t_span, *,
                              output_interval=0.05, stop_on_convergence=False, h_max=None):
    """Single-model flow driven by an arbitrary polynomial ``f``."""
    kappa = float(kappa)
    if not kappa > 0:
        raise ConfigurationError(f"kappa must be positive, got {kappa}")
    fp = f.deriv()
    omega0 = float(omega0)
    if not np.isfinite(omega0):
        raise ConfigurationError("omega0 must be finite")

    def rhs(t, y):
        w = y[0]
        return np.array([-kappa * f(w) * fp(w), w])

    if h_max is None:
        h_max = settings.h_max
    if h_max is None:
        real_roots = np.roots(f.coefficients[::-1]) if f.degree > 0 else np.zeros(0)
        real_roots = np.sort(real_roots[np.abs(real_roots.imag) < 1e-9].real)
        h_max = _default_h_max(real_roots) if real_roots.size else 0.1

    rate = -kappa * f(omega0) * fp(omega0)
    stationary = rate == 0.0
    if stationary:
        t0, t1 = (float(v) for v in t_span)
        times = np.arange(t0, t1, output_interval)
        times = np.append(times[times < t1 - 1e-9 * output_interval], t1)
        omega = np.full((times.size, 1), omega0)
        phi = (phi0 + omega0 * (times - t0))[:, None]
        converged = f(omega0) == 0.0
        return Trajectory(times, omega, phi, np.full(times.size, f(omega0) ** 2),
                          converged, t0 if converged else None, True, "single", f, kappa)

    res = dopri45(
        rhs, t_span, [omega0, float(phi0)],
        rtol=settings.rel_tol, atol=settings.abs_tol, max_step=settings.max_step,
        output_interval=output_interval,
        clamp=(np.array([0]), h_max),
        monitor=(np.array([0]), settings.convergence_eps, settings.convergence_window),
        stop_on_convergence=stop_on_convergence,
    )
    omega = res.y[:, :1]
    return Trajectory(res.t, omega, res.y[:, 1:], f(omega[:, 0]) ** 2,
                      res.converged, res.t_converged, False, "single", f, kappa)


def integrate_single(H_eigs, kappa, omega0, phi0, settings, t_span, **kwargs):
    """Integrate the single model for the Hamiltonian with eigenvalues ``H_eigs``.

    ``omega`` moves monotonically towards a root of ``f``; which one is fixed
    by the side of the nearest separatrix (root of ``f'``) it starts on.
    Starting exactly on a zero of the right-hand side gives a constant
    trajectory flagged ``stationary``; it counts as converged only if the
    start is a root of ``f``.
    """
    return integrate_polynomial_flow(characteristic_polynomial(H_eigs), kappa, omega0,
                                     phi0, settings, t_span, **kwargs)


# ----------------------------------------------------------------------------
# beable model


def row_polynomials(lattice):
    """Per-row polynomials ``g_n(w) = prod_j (lam[n, j] - w)``."""
    return [characteristic_polynomial(row) for row in lattice.lam]


def _row_coeffs(lattice):
    polys = row_polynomials(lattice)
    deg = lattice.dim_hilbert
    c = np.zeros((len(polys), deg + 1))
    for n, p in enumerate(polys):
        c[n, : p.degree + 1] = p.coefficients
    dc = c[:, 1:] * np.arange(1, deg + 1)
    return c, dc


def _horner_rows(coeffs, w):
    acc = coeffs[:, -1].copy()
    for k in range(coeffs.shape[1] - 2, -1, -1):
        acc = acc * w + coeffs[:, k]
    return acc


def field_value(omega, lattice):
    """``F = sum_n g_n(omega_n)**2`` for the row lattice ``lattice``."""
    c, _ = _row_coeffs(lattice)
    g = _horner_rows(c, np.asarray(omega, dtype=float))
    return math.fsum(g * g)


def field_grad_sq(omega, lattice):
    """Gradient of ``F**2``: component ``n`` is ``4 F g_n g_n'``."""
    c, dc = _row_coeffs(lattice)
    w = np.asarray(omega, dtype=float)
    g = _horner_rows(c, w)
    gp = _horner_rows(dc, w)
    F = math.fsum(g * g)
    return 4.0 * F * g * gp


def integrate_beable_flow(scenario, lattice=None, *, table=None, stop_on_convergence=False):
    """Integrate ``omega' = -kappa grad F^2``, ``phi' = omega`` for ``scenario``.

    Either ``lattice`` (built from ``scenario.M_star``) or the eigen ``table``
    must be given.
    """
    if lattice is None:
        if table is None:
            raise ConfigurationError("need a row lattice or an eigen table")
        lattice = row_lattice(scenario.M_star, table)
    if not np.array_equal(lattice.source_M, scenario.M_star):
        raise ConfigurationError("lattice was not built from scenario.M_star")
    N = scenario.num_beables
    if lattice.num_beables != N:
        raise ConfigurationError(f"lattice has {lattice.num_beables} rows, scenario N={N}")

    settings = scenario.integrator
    kappa = float(scenario.kappa)
    c, dc = _row_coeffs(lattice)

    def rhs(t, y):
        w = y[:N]
        g = _horner_rows(c, w)
        gp = _horner_rows(dc, w)
        # exactly rounded sum keeps the flow equivariant under row permutations
        F = math.fsum(g * g)
        return np.concatenate((-4.0 * kappa * F * g * gp, w))

    h_max = settings.h_max if settings.h_max is not None else _default_h_max(lattice.lam)
    y0 = np.concatenate((scenario.omega0, scenario.phi0))
    t0, t1 = scenario.t_span
    dt = scenario.output_interval
    f0 = rhs(t0, y0)
    if not np.any(f0[:N]):
        times = np.arange(t0, t1, dt)
        times = np.append(times[times < t1 - 1e-9 * dt], t1)
        omega = np.tile(scenario.omega0, (times.size, 1))
        phi = scenario.phi0 + np.outer(times - t0, scenario.omega0)
        F0 = field_value(scenario.omega0, lattice)
        converged = F0 == 0.0
        return Trajectory(times, omega, phi, np.full(times.size, F0), converged,
                          t0 if converged else None, True, "beable", None, kappa)

    res = dopri45(
        rhs, scenario.t_span, y0,
        rtol=settings.rel_tol, atol=settings.abs_tol, max_step=settings.max_step,
        output_interval=dt,
        clamp=(np.arange(N), h_max),
        monitor=(np.arange(N), settings.convergence_eps, settings.convergence_window),
        stop_on_convergence=stop_on_convergence,
    )
    omega = res.y[:, :N]
    F = np.array([math.fsum(_horner_rows(c, w) ** 2) for w in omega])
    return Trajectory(res.t, omega, res.y[:, N:], F, res.converged, res.t_converged,
                      False, "beable", None, kappa)


# ----------------------------------------------------------------------------
# fixed points, basins, rates


def classify_fixed_point(omega_star, lattice, tol=1e-8):
    """Match each component of ``omega_star`` to its nearest row-lattice value.

    When a component has several lattice values within ``2*tol`` (degenerate
    or nearly degenerate rows) all of them are kept as candidates, and the
    point counts as coherent if one column is a candidate for every component.
    """
    w = np.asarray(omega_star, dtype=float)
    lam = lattice.lam if isinstance(lattice, RowLattice) else np.atleast_2d(lattice)
    dist = np.abs(lam - w[:, None])
    j = np.argmin(dist, axis=1)
    residual = float(np.max(dist[np.arange(len(w)), j]))
    candidates = [set(np.flatnonzero(row <= 2 * tol)) | {int(jn)} for row, jn in zip(dist, j)]
    ambiguous = {n: sorted(int(v) for v in cand) for n, cand in enumerate(candidates)
                 if len(cand) > 1}
    common = set.intersection(*candidates)
    if common and len(set(j.tolist())) > 1:
        j = np.full(len(w), min(common))
    coherent = bool(common)
    return FixedPointReport(w.copy(), j.astype(int), coherent, residual, residual <= tol,
                            float(tol), ambiguous)


@dataclass(frozen=True, eq=False)
class BasinMap:
    """Per-grid-point outcome of a basin sweep.

    ``points`` has shape ``(P, N)`` in C order of the axis grids;
    ``indices`` holds the lattice column per component, ``-1`` rows marking
    points that did not converge onto the lattice.
    """

    axes: tuple
    points: np.ndarray
    indices: np.ndarray
    reports: tuple

    def labels(self):
        return [tuple(row) for row in self.indices.tolist()]


def _basin_point(point, scenario, lattice, model, tol):
    if model == "single":
        traj = integrate_polynomial_flow(
            characteristic_polynomial(lattice.lam[0]), scenario.kappa, point[0],
            scenario.phi0[0], scenario.integrator, scenario.t_span,
            output_interval=scenario.output_interval, stop_on_convergence=True)
    else:
        traj = integrate_beable_flow(scenario.replace(omega0=np.asarray(point)), lattice,
                                     stop_on_convergence=True)
    report = classify_fixed_point(traj.omega_final, lattice, tol)
    if not (traj.converged and report.converged):
        return None
    return report


def basin_map(scenario, lattice, grid, *, model="beable", tol=1e-6, jobs=1):
    """Integrate one trajectory per grid point and record where it ends.

    Parameters
    ----------
    scenario : Scenario
        Template; ``omega0`` is replaced by each grid point.
    lattice : RowLattice
    grid : sequence of 1-D sequences
        One axis per beable; the sweep covers their Cartesian product.
    model : {"beable", "single"}
        ``"single"`` requires ``N == 1`` and uses the polynomial flow on row 0.
    tol : float
        Classification tolerance.
    jobs : int
        Worker processes. Results are collected in grid order, so the output
        does not depend on ``jobs``.
    """
    if model not in ("beable", "single"):
        raise ConfigurationError(f"unknown model {model!r}")
    axes = tuple(np.asarray(a, dtype=float).ravel() for a in grid)
    if len(axes) != lattice.num_beables:
        raise ConfigurationError(f"grid has {len(axes)} axes, lattice has N={lattice.num_beables}")
    if model == "single" and lattice.num_beables != 1:
        raise ConfigurationError("single-model basin maps need N == 1")
    for a in axes:
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("grid values must be finite")
    points = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(axes))
    work = partial(_basin_point, scenario=scenario, lattice=lattice, model=model, tol=tol)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(work, points, chunksize=max(1, len(points) // (4 * jobs))))
    else:
        reports = [work(p) for p in points]
    indices = np.array([r.j if r is not None else np.full(len(axes), -1) for r in reports],
                       dtype=int).reshape(len(points), len(axes))
    return BasinMap(axes, points, indices, tuple(reports))


def bisect_basin_boundary(scenario, lattice, lo, hi, *, model="single", tol=1e-6, xtol=1e-5):
    """Locate the basin boundary between ``lo`` and ``hi`` (N == 1) by bisection."""
    def label(x):
        rep = _basin_point(np.array([x]), scenario, lattice, model, tol)
        return None if rep is None else int(rep.j[0])

    a, b = float(lo), float(hi)
    la, lb = label(a), label(b)
    if la is None or lb is None:
        raise NumericError(f"bracket end does not converge (labels {la}, {lb})")
    if la == lb:
        raise ConfigurationError(f"both ends flow to lattice index {la}; no boundary bracketed")
    while b - a > xtol:
        m = 0.5 * (a + b)
        lm = label(m)
        if lm is None:
            # stationary start: the midpoint sits on the separatrix itself
            return m
        if lm == la:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def fit_convergence_rate(traj, E_star, *, lo=1e-10, hi=1e-2):
    """Exponential approach rate of a converged single-model trajectory to ``E_star``.

    Least-squares slope of ``log|omega - E_star|`` over samples with
    ``lo < |omega - E_star| < hi``; the result should be ``kappa * f'(E*)**2``.
    """
    if traj.num_beables != 1:
        raise ConfigurationError("rate fit needs a one-component trajectory")
    if traj.polynomial is not None:
        f = traj.polynomial
        slope_at_root = abs(f.deriv()(E_star))
        if slope_at_root <= 1e-8 * f.scale():
            raise NumericError(f"E_star={E_star!r} is not a simple root; approach is not exponential",
                               residual=slope_at_root)
    delta = np.abs(traj.omega[:, 0] - E_star)
    mask = (delta > lo) & (delta < hi)
    if np.count_nonzero(mask) < 3:
        raise InsufficientDataError(
            f"only {np.count_nonzero(mask)} samples in the fit window ({lo:g}, {hi:g})")
    slope, _ = np.polyfit(traj.times[mask], np.log(delta[mask]), 1)
    return float(-slope)


def min_root_slope(lattice):
    """Smallest ``|g_n'(lam[n, j])|`` over the lattice (zero for repeated values)."""
    polys = row_polynomials(lattice)
    return float(min(np.min(np.abs(p.deriv()(row))) for p, row in zip(polys, lattice.lam)))


def kappa_for_resolution(lattice, resolution, t):
    """Dissipation strength at which the beable flow is within ``resolution`` by time ``t``.

    Near a lattice point the slowest component obeys
    ``delta' = -4 kappa s**4 delta**3`` (``s`` the smallest root slope), so
    ``delta(t) ~ (8 kappa s**4 t)**-0.5``.
    """
    s = min_root_slope(lattice)
    if s == 0.0:
        raise NumericError("lattice has repeated row values; approach is slower than algebraic")
    return 1.0 / (8.0 * s ** 4 * resolution ** 2 * t)
