"""Small independent reference solvers.

* closed-form decay of one emitter,
* single-excitation delay equations for two emitters (and for one emitter
  in front of a mirror), integrated at the amplitude level with fixed-step
  RK4 and a cubic Hermite history,
* a 2x2 Lindblad integrator for a driven emitter, with two-time functions
  from the quantum regression theorem.

All integrators use fixed steps so results are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError

STABILITY_LIMIT = 0.1
DDE_STEP = 0.005

_SM = np.array([[0, 1], [0, 0]], dtype=np.complex128)
_SP = _SM.conj().T
_NE = _SP @ _SM


@dataclass(frozen=True)
class OracleSeries:
    """``values`` has one column per emitter (or a single column)."""

    times: np.ndarray
    values: np.ndarray
    labels: tuple[str, ...] = ("n",)

    def column(self, i: int = 0) -> np.ndarray:
        v = np.asarray(self.values)
        return v if v.ndim == 1 else v[:, i]


def analytic_decay(gamma: float, t_grid) -> OracleSeries:
    """``exp(-gamma t)``."""
    if gamma < 0:
        raise ConfigError("gamma must be non-negative")
    t = np.asarray(t_grid, dtype=float)
    return OracleSeries(t, np.exp(-gamma * t), ("n_tls",))


# delay equations


def _hermite(t0, h, y0, y1, f0, f1, s):
    """Cubic Hermite interpolant on ``[t0, t0 + h]`` at local fraction ``s``."""
    s2, s3 = s * s, s * s * s
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1


class _History:
    """Node values and derivatives of a fixed-step solution, with Hermite lookup.

    ``f`` holds right limits of the derivative at each node and ``f_left``
    left limits; they differ only where the delayed term switches on.
    """

    def __init__(self, h: float, n_nodes: int, dim: int):
        self.h = h
        self.y = np.zeros((n_nodes, dim), dtype=np.complex128)
        self.f = np.zeros((n_nodes, dim), dtype=np.complex128)
        self.f_left = np.zeros((n_nodes, dim), dtype=np.complex128)

    def at(self, t: float, left: bool = False) -> np.ndarray:
        """Solution at ``t``; zero before t = 0, and at t = 0 itself when ``left``."""
        if t < 0 or (left and t <= 0):
            return np.zeros(self.y.shape[1], dtype=np.complex128)
        x = t / self.h
        k = int(np.floor(x + 1e-9))
        s = x - k
        if abs(s) < 1e-9:
            return self.y[k]
        return _hermite(k * self.h, self.h, self.y[k], self.y[k + 1], self.f[k], self.f_left[k + 1], s)


def _integrate_delay(rhs, y0, tau: float, t_end: float, h_target: float) -> tuple[_History, float]:
    """RK4 for ``y' = rhs(t, y, y(t - tau))`` with zero history before t = 0.

    The step grid contains ``t = tau``, where the delayed term jumps on;
    end-of-step stages use the left limit so no step straddles the jump.
    """
    if tau > 0:
        m = max(1, int(np.ceil(tau / h_target - 1e-9)))
        h = tau / m
    else:
        h = h_target
    n = int(np.ceil(t_end / h - 1e-9)) + 2
    hist = _History(h, n + 1, len(y0))
    if tau > 0:
        delayed = lambda t: hist.at(t - tau)  # noqa: E731
        delayed_left = lambda t: hist.at(t - tau, left=True)  # noqa: E731
    else:
        delayed = delayed_left = lambda t: None  # noqa: E731
    y = np.asarray(y0, dtype=np.complex128)
    hist.y[0] = y
    hist.f[0] = hist.f_left[0] = rhs(0.0, y, delayed(0.0))
    for k in range(n):
        t = k * h
        k1 = hist.f[k]
        k2 = rhs(t + h / 2, y + h / 2 * k1, delayed(t + h / 2))
        k3 = rhs(t + h / 2, y + h / 2 * k2, delayed(t + h / 2))
        k4 = rhs(t + h, y + h * k3, delayed_left(t + h))
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        hist.y[k + 1] = y
        hist.f[k + 1] = rhs(t + h, y, delayed(t + h))
        hist.f_left[k + 1] = rhs(t + h, y, delayed_left(t + h))
    return hist, h


def _sample(hist: _History, t_grid: np.ndarray) -> np.ndarray:
    return np.array([hist.at(t) for t in t_grid])


def dde_two_tls(gamma, tau: float, phi: float, t_grid, c0=(1.0, 0.0), h: float = DDE_STEP) -> OracleSeries:
    """Populations of two emitters exchanging one excitation through a delay.

    ``c_i' = -(gamma_i / 2) c_i - (sqrt(gamma_1 gamma_2) / 2) e^{i phi} c_j(t - tau)``,
    where the delayed term vanishes for ``t < tau``. ``gamma`` is a scalar or
    one total rate per emitter.
    """
    g1, g2 = (float(gamma), float(gamma)) if np.isscalar(gamma) else map(float, gamma)
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    t = np.asarray(t_grid, dtype=float)
    phase = np.exp(1j * phi)
    gc = np.sqrt(g1 * g2) / 2
    decay = np.array([g1 / 2, g2 / 2])

    if tau == 0:
        def rhs(_t, y, _d):
            return -decay * y - gc * phase * y[::-1]
    else:
        def rhs(_t, y, d):
            return -decay * y - gc * phase * d[::-1]

    hist, _ = _integrate_delay(rhs, np.asarray(c0, dtype=np.complex128), tau, float(t.max()), h)
    amps = _sample(hist, t)
    return OracleSeries(t, np.abs(amps) ** 2, ("n_tls1", "n_tls2"))


def dde_mirror_tls(gamma: float, tau: float, phi: float, t_grid, h: float = DDE_STEP) -> OracleSeries:
    """One emitter in front of a mirror, excited at t = 0.

    ``c' = -(gamma / 2) (c + e^{i phi} c(t - tau))`` with the delayed term off for ``t < tau``.
    """
    if tau <= 0:
        raise ConfigError("mirror feedback needs tau > 0")
    t = np.asarray(t_grid, dtype=float)
    phase = np.exp(1j * phi)

    def rhs(_t, y, d):
        return -(gamma / 2) * (y + phase * d)

    hist, _ = _integrate_delay(rhs, np.array([1.0 + 0j]), tau, float(t.max()), h)
    return OracleSeries(t, np.abs(_sample(hist, t)[:, 0]) ** 2, ("n_tls",))


# driven emitter master equation


def _liouvillian(omega: float, detuning: float, gamma: float):
    h = omega * (_SP + _SM) + detuning * _NE

    def rhs(rho):
        out = -1j * (h @ rho - rho @ h)
        out += gamma * (_SM @ rho @ _SP - 0.5 * (_NE @ rho + rho @ _NE))
        return out

    return rhs


def _rk4(rhs, rho, h: float, n: int):
    for _ in range(n):
        k1 = rhs(rho)
        k2 = rhs(rho + h / 2 * k1)
        k3 = rhs(rho + h / 2 * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _substeps(delta_t: float, rates: Sequence[float], substeps: int | None) -> int:
    worst = max(abs(r) for r in rates)
    if substeps is None:
        return max(1, int(np.ceil(worst * delta_t / (STABILITY_LIMIT / 2))))
    if worst * delta_t / substeps >= STABILITY_LIMIT:
        raise ConfigError(
            f"oracle step {delta_t / substeps:g} too large for rate {worst:g} (need rate*h < {STABILITY_LIMIT})"
        )
    return int(substeps)


@dataclass(frozen=True)
class LindbladResult:
    times: np.ndarray
    population: np.ndarray
    rho: np.ndarray
    omega: np.ndarray

    @property
    def series(self) -> OracleSeries:
        return OracleSeries(self.times, self.population, ("n_tls",))


def lindblad_driven_tls(
    omega_pump,
    detuning: float,
    gamma: float,
    t_grid,
    rho0=None,
    substeps: int | None = None,
) -> LindbladResult:
    """Master equation of a driven emitter on a uniform grid.

    ``H = Omega(t) (s+ + s-) + detuning s+ s-`` with decay ``gamma``. The
    drive is held at ``Omega(t_k)`` over ``[t_k, t_k+1)``, matching the
    stepping engine. Starts in the ground state unless ``rho0`` is given.
    """
    if not gamma > 0:
        raise ConfigError("gamma must be positive")
    t = np.asarray(t_grid, dtype=float)
    dt = float(t[1] - t[0])
    n = len(t) - 1
    omega = np.full(n, float(omega_pump)) if np.isscalar(omega_pump) else np.asarray(omega_pump, dtype=float)[:n]
    if len(omega) < n:
        raise ConfigError(f"drive has {len(omega)} samples, the grid needs {n}")
    m = _substeps(dt, [gamma, *omega, detuning], substeps)
    rho = np.diag([1.0, 0.0]).astype(np.complex128) if rho0 is None else np.asarray(rho0, dtype=np.complex128)
    rhos = np.empty((n + 1, 2, 2), dtype=np.complex128)
    rhos[0] = rho
    cache = {}
    for k in range(n):
        key = omega[k]
        rhs = cache.get(key)
        if rhs is None:
            rhs = cache[key] = _liouvillian(key, detuning, gamma)
        rho = _rk4(rhs, rho, dt / m, m)
        rhos[k + 1] = rho
    return LindbladResult(t, rhos[:, 1, 1].real.copy(), rhos, omega)


def regression_g1(rho_ss, omega: float, detuning: float, gamma: float, delta_t: float, n_span: int, substeps=None):
    """``<s+(t) s-(t + t')>`` for ``t' = k dt``, ``k < n_span``, from state ``rho_ss`` at ``t``."""
    rhs = _liouvillian(omega, detuning, gamma)
    m = _substeps(delta_t, [gamma, omega, detuning], substeps)
    x = np.asarray(rho_ss) @ _SP
    out = np.empty(n_span, dtype=np.complex128)
    for k in range(n_span):
        out[k] = np.trace(_SM @ x)
        x = _rk4(rhs, x, delta_t / m, m)
    return out


def regression_g2(rho_ss, omega: float, detuning: float, gamma: float, delta_t: float, n_span: int, substeps=None):
    """``<s+(t) s+(t + t') s-(t + t') s-(t)>`` on the same grid as :func:`regression_g1`."""
    rhs = _liouvillian(omega, detuning, gamma)
    m = _substeps(delta_t, [gamma, omega, detuning], substeps)
    x = _SM @ np.asarray(rho_ss) @ _SP
    out = np.empty(n_span)
    for k in range(n_span):
        out[k] = np.trace(_NE @ x).real
        x = _rk4(rhs, x, delta_t / m, m)
    return out


def write_oracle_csv(path, series: OracleSeries) -> None:
    """``t,<label>...`` with 17 significant digits, same layout as the engine's CSVs."""
    v = np.asarray(series.values)
    v = v[:, None] if v.ndim == 1 else v
    lines = ["t," + ",".join(series.labels)]
    for t, row in zip(series.times, v):
        lines.append(",".join(f"{x:.17g}" for x in (t, *row.real)))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
