"""Two-time correlations of the output field and the spectra built from them.

Operators passed in are bin noise operators (``dB = sqrt(dt) a`` and its
adjoint). Each operator is divided by ``dt``, turning the bin integral
``dB`` into the field ``b(t)``, so that ``G1(t, t)`` equals the photon flux.

Contractions run on the final chain of a record. For a fixed first bin the
scan over the second bin is a transfer-matrix sweep with cached right
environments, so a full grid costs ``O(N^2)`` small contractions.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import operators as ops
from .errors import ContractViolation, DimensionError
from .observables import populations

SS_WINDOW = 1.0
SS_TOL = 1e-3
DEFAULT_PAD = 4


@dataclass(frozen=True)
class CorrelationGrid:
    """``values[i, j] = G(t_i, t_i + t'_j)``; zero where ``t_i + t'_j`` is off the grid."""

    t_values: np.ndarray
    tprime_values: np.ndarray
    values: np.ndarray
    kind: str = "G1"
    channels: tuple = ("R", "R")

    @property
    def delta_t(self) -> float:
        return float(self.t_values[1] - self.t_values[0]) if len(self.t_values) > 1 else float(self.tprime_values[1])


@dataclass(frozen=True)
class Spectrum:
    omega_values: np.ndarray
    values: np.ndarray
    normalization: str = "raw"


@dataclass(frozen=True)
class TimeDependentSpectrum:
    """``intensity[i]`` is ``I(omega, t_values[i])``; ``spectrum[n]`` is ``S(omega, s_times[n])``."""

    omega_values: np.ndarray
    t_values: np.ndarray
    intensity: np.ndarray
    s_times: np.ndarray
    spectrum: np.ndarray


def field_operators(params, channel="R") -> tuple[np.ndarray, np.ndarray]:
    """``(dB^dag, dB)`` of one channel on the full bin space."""
    b = ops.noise_annihilator(params.d_t, params.delta_t, channel)
    return b.conj().T, b


class _Chain:
    """Environments of the final chain for bins ``0..n_out-1``."""

    def __init__(self, record):
        mps = record.final_state
        if mps is None:
            raise ContractViolation("record has no final state")
        self.tensors = [s.data for s in mps.sites]
        self.conj = [a.conj() for a in self.tensors]
        self.n_out = len(record.output_field_states)
        self.d = self.tensors[0].shape[1]
        n = len(self.tensors)
        right = [None] * (n + 1)
        right[n] = np.ones((1, 1), dtype=np.complex128)
        for m in range(n - 1, -1, -1):
            a = self.tensors[m]
            right[m] = np.einsum("asb,bc,tsc->at", a, right[m + 1], a.conj(), optimize=True)
        self.right = right
        left = [None] * (self.n_out + 1)
        left[0] = np.ones((1, 1), dtype=np.complex128)
        for m in range(self.n_out):
            left[m + 1] = self._transfer(left[m], m, None)
        self.left = left
        self.norm2 = float(np.real(np.trace(left[0] @ right[0])))
        if self.norm2 <= 0:
            raise ContractViolation("final state has zero norm")

    def _transfer(self, env: np.ndarray, m: int, op) -> np.ndarray:
        """Push a ``(ket, bra)`` left environment through site ``m`` with ``op`` inserted."""
        a = self.tensors[m]
        ket = a if op is None else np.tensordot(op, a, axes=(1, 1)).transpose(1, 0, 2)
        tmp = np.tensordot(env, ket, axes=(0, 0))  # (bra, s, ket right)
        return np.tensordot(tmp, self.conj[m], axes=([0, 1], [0, 1]))

    def close(self, env: np.ndarray, m: int) -> complex:
        """Contract a left environment sitting on bond ``m`` with the right part."""
        return complex(np.sum(env * self.right[m])) / self.norm2

    def row(self, i: int, op_i, op_j, op_same, j_stop: int) -> np.ndarray:
        """``<op_i(i) op_j(j)>`` for ``j = i..j_stop-1`` (``op_same`` at ``j == i``)."""
        out = np.zeros(j_stop - i, dtype=np.complex128)
        out[0] = self.close(self._transfer(self.left[i], i, op_same), i + 1)
        env = self._transfer(self.left[i], i, op_i)
        for j in range(i + 1, j_stop):
            out[j - i] = self.close(self._transfer(env, j, op_j), j + 1)
            env = self._transfer(env, j, None)
        return out


def _check_ops(d: int, *op_list) -> list[np.ndarray]:
    out = []
    for op in op_list:
        op = np.asarray(op, dtype=np.complex128)
        if op.shape != (d, d):
            raise DimensionError(f"operator shape {op.shape} does not match bin extent {d}")
        out.append(op)
    return out


def _grid_bounds(n_out: int, n_t: int | None, n_tprime: int | None) -> tuple[int, int]:
    n_t = n_out if n_t is None else int(n_t)
    n_tprime = n_out if n_tprime is None else int(n_tprime)
    if not 1 <= n_t <= n_out or n_tprime < 1:
        raise ContractViolation(f"grid of {n_t} times exceeds the {n_out} finalized bins")
    return n_t, n_tprime


def _grid(chain: _Chain, op_i, op_j, op_same, scale: float, n_t, n_tprime, dt, kind, channels) -> CorrelationGrid:
    n_t, n_tprime = _grid_bounds(chain.n_out, n_t, n_tprime)
    values = np.zeros((n_t, n_tprime), dtype=np.complex128)
    for i in range(n_t):
        stop = min(chain.n_out, i + n_tprime)
        values[i, : stop - i] = chain.row(i, op_i, op_j, op_same, stop) / scale
    t = np.arange(n_t) * dt
    tp = np.arange(n_tprime) * dt
    return CorrelationGrid(t, tp, values, kind, channels)


def correlation_2op_2t(record, a_op, b_op, params, n_t=None, n_tprime=None, channels=("R", "R")) -> CorrelationGrid:
    """``<A(t) B(t + t')> / dt^2`` over the output bins, e.g. ``A = dB^dag``, ``B = dB``."""
    chain = _Chain(record)
    a_op, b_op = _check_ops(chain.d, a_op, b_op)
    dt = params.delta_t
    return _grid(chain, a_op, b_op, a_op @ b_op, dt**2, n_t, n_tprime, dt, "G1", tuple(channels))


def correlation_4op_2t(
    record, a_op, b_op, c_op, d_op, params, n_t=None, n_tprime=None, channels=("R", "R")
) -> CorrelationGrid:
    """``<A(t) B(t + t') C(t + t') D(t)> / dt^4`` over the output bins."""
    chain = _Chain(record)
    a_op, b_op, c_op, d_op = _check_ops(chain.d, a_op, b_op, c_op, d_op)
    dt = params.delta_t
    return _grid(chain, a_op @ d_op, b_op @ c_op, a_op @ b_op @ c_op @ d_op, dt**4, n_t, n_tprime, dt, "G2", tuple(channels))


def g1_grid(record, params, channels=("R", "R"), **kw) -> CorrelationGrid:
    bd, _ = field_operators(params, channels[0])
    _, b = field_operators(params, channels[1])
    return correlation_2op_2t(record, bd, b, params, channels=channels, **kw)


def g2_grid(record, params, channels=("R", "R"), **kw) -> CorrelationGrid:
    ad, a = field_operators(params, channels[0])
    bd, b = field_operators(params, channels[1])
    return correlation_4op_2t(record, ad, bd, b, a, params, channels=channels, **kw)


def steady_state_time(record, window: float = SS_WINDOW, tol: float = SS_TOL) -> float | None:
    """Earliest grid time whose trailing ``window`` of total emitter population varies by less than ``tol``."""
    pop = sum(s.values for s in populations(record))
    dt = record.delta_t
    w = max(1, int(round(window / dt)))
    for n in range(w, len(pop)):
        seg = pop[n - w : n + 1]
        if seg.max() - seg.min() < tol:
            return n * dt
    return None


def _resolve_tss(record, params, t_ss, span):
    n_out = len(record.output_field_states)
    dt = params.delta_t
    if t_ss is None:
        t_ss = steady_state_time(record)
        if t_ss is None:
            raise ContractViolation("steady state not reached; run longer or pass t_ss")
    i = int(round(t_ss / dt))
    n_span = (n_out - i) if span is None else int(round(span / dt)) + 1
    if i >= n_out or i + n_span > n_out or n_span < 1:
        raise ContractViolation(
            f"steady state at t={i * dt:g} leaves too little of the run (t_max={n_out * dt:g}) for the requested span"
        )
    return i, n_span


def correlation_ss_2op(record, a_ops, b_ops, params, t_ss: float | None = None, span: float | None = None):
    """Steady-state ``<A(t_ss) B(t_ss + t')> / dt^2`` for each operator pair.

    Returns ``(correlations, t_primes, t_ss)``.
    """
    chain = _Chain(record)
    if isinstance(a_ops, np.ndarray) and a_ops.ndim == 2:
        a_ops, b_ops = [a_ops], [b_ops]
    i, n_span = _resolve_tss(record, params, t_ss, span)
    dt = params.delta_t
    out = []
    for a, b in zip(a_ops, b_ops):
        a, b = _check_ops(chain.d, a, b)
        out.append(chain.row(i, a, b, a @ b, i + n_span) / dt**2)
    return out, np.arange(n_span) * dt, i * dt


def correlation_ss_4op(record, op_sets, params, t_ss: float | None = None, span: float | None = None):
    """Steady-state ``<A(t_ss) B(t_ss + t') C(t_ss + t') D(t_ss)> / dt^4``.

    ``op_sets`` is one ``(A, B, C, D)`` tuple or a list of them.
    """
    chain = _Chain(record)
    if len(op_sets) == 4 and isinstance(op_sets[0], np.ndarray) and op_sets[0].ndim == 2:
        op_sets = [op_sets]
    i, n_span = _resolve_tss(record, params, t_ss, span)
    dt = params.delta_t
    out = []
    for a, b, c, d in op_sets:
        a, b, c, d = _check_ops(chain.d, a, b, c, d)
        out.append(chain.row(i, a @ d, b @ c, a @ b @ c @ d, i + n_span) / dt**4)
    return out, np.arange(n_span) * dt, i * dt


def normalize_g(correlation, flux_at_tss: float, order: int) -> np.ndarray:
    """``g1 = G1 / n`` or ``g2 = G2 / n^2`` for the flux ``n`` at the reference time."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if not abs(flux_at_tss) > 0:
        raise ContractViolation("cannot normalize by a zero flux")
    return np.asarray(correlation) / flux_at_tss**order


def _transform(samples: np.ndarray, delta_t: float, pad: int) -> tuple[np.ndarray, np.ndarray]:
    """``sum_k g_k exp(i w k dt) dt`` on the full shifted FFT grid."""
    n = samples.shape[-1]
    m = max(1, int(pad)) * n
    vals = np.fft.ifft(samples, n=m, axis=-1) * m * delta_t
    omega = 2 * np.pi * np.fft.fftfreq(m, d=delta_t)
    return np.fft.fftshift(omega), np.fft.fftshift(vals, axes=-1)


def spectrum_w(delta_t: float, g1_ss, pad: int = DEFAULT_PAD, normalize: bool = False) -> Spectrum:
    """``S(w) = Re sum_k g1(t'_k) exp(i w t'_k) dt`` with ``w`` measured from the drive frequency."""
    g = np.asarray(g1_ss, dtype=np.complex128).reshape(-1)
    if g.size == 0:
        raise ValueError("empty correlation")
    omega, vals = _transform(g, delta_t, pad)
    s = vals.real
    if normalize:
        peak = np.max(s)
        if peak <= 0:
            raise ContractViolation("spectrum has no positive maximum to normalize by")
        return Spectrum(omega, s / peak, "max1")
    return Spectrum(omega, s, "raw")


def time_dependent_spectrum(grid: CorrelationGrid, center_frequency_offset: float = 0.0, pad: int = DEFAULT_PAD):
    """Time-resolved spectral intensity ``I(w, t)`` and accumulated spectrum ``S(w, t)``.

    ``I(w, t_i) = Re sum_j G(t_i, t_i + t'_j) exp(i w t'_j) dt`` and
    ``S(w, t_n) = Re sum_{i + j < n} G(t_i, t_i + t'_j) exp(i w t'_j) dt^2``,
    both truncated at the grid edge. ``w`` is measured from
    ``center_frequency_offset``.
    """
    g = np.asarray(grid.values)
    n_t, n_tp = g.shape
    if n_tp < 4:
        raise ValueError("time-dependent spectra need at least 4 t' points")
    dt = grid.delta_t
    phase = np.exp(1j * center_frequency_offset * np.arange(n_tp) * dt)
    omega, rows = _transform(g * phase[None, :], dt, pad)
    intensity = rows.real
    # S accumulates anti-diagonals i + j = l of the grid
    n_max = min(n_t, n_tp)
    diag = np.zeros((n_max, n_tp), dtype=np.complex128)
    for l in range(n_max):
        j = np.arange(l + 1)
        diag[l, j] = g[l - j, j] * phase[j]
    _, d_fft = _transform(diag, dt, pad)
    spec = np.concatenate([np.zeros((1, len(omega))), np.cumsum(d_fft.real * dt, axis=0)])
    return TimeDependentSpectrum(omega, grid.t_values, intensity, np.arange(n_max + 1) * dt, spec)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_grid_csv(path, grid: CorrelationGrid) -> None:
    lines = ["t,t_prime,re,im"]
    for i, t in enumerate(grid.t_values):
        for j, tp in enumerate(grid.tprime_values):
            v = grid.values[i, j]
            lines.append(",".join(_fmt(x) for x in (t, tp, v.real, v.imag)))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_spectrum_csv(path, spectrum: Spectrum) -> None:
    lines = ["omega,value"] + [f"{_fmt(w)},{_fmt(v)}" for w, v in zip(spectrum.omega_values, spectrum.values)]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_ss_csv(path, t_primes: Sequence[float], values, t_ss: float) -> None:
    """``t_prime,re,im`` plus a sidecar ``<path>.t_ss`` holding the steady-state time."""
    values = np.asarray(values, dtype=np.complex128)
    lines = ["t_prime,re,im"] + [
        ",".join(_fmt(x) for x in (tp, v.real, v.imag)) for tp, v in zip(t_primes, values)
    ]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    Path(str(path) + ".t_ss").write_text(f"t_ss,{_fmt(t_ss)}\n", newline="\n")
