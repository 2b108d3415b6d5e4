"""Single-time observables computed from stored snapshots.

Fluxes are ``<dB^dag dB> / dt^2``, the photon number of a bin divided by its
length, so integrating a flux over time counts photons. Integrals are left Riemann sums, matching the
left-endpoint sampling of the gates.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import operators as ops
from .errors import ContractViolation, DimensionError
from .mps import SchmidtSpectrum, Snapshot, local_expectation

IMAG_TOL = 1e-8
NORM_TOL = 1e-6
_ENTROPY_FLOOR = 1e-15


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    label: str = "value"
    units: str = "dimensionless"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.shape != v.shape[:1]:
            raise DimensionError(f"{len(t)} times but {len(v)} values for {self.label!r}")
        if not np.all(np.isfinite(v)):
            raise ContractViolation(f"non-finite values in {self.label!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)

    def at(self, t: float) -> float:
        """Value at the grid point nearest ``t``."""
        return self.values[int(np.argmin(np.abs(self.times - t)))]


def _real(values: np.ndarray, label: str) -> np.ndarray:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        worst = np.max(np.abs(values.imag)) if values.size else 0.0
        if worst > IMAG_TOL:
            raise ContractViolation(f"{label!r} has imaginary residue {worst:.2e}; is the operator Hermitian?")
        values = values.real
    return values.astype(float)


def single_time_expectation(
    states: Sequence[Snapshot],
    op_list,
    delta_t: float,
    labels: Sequence[str] | None = None,
) -> list[TimeSeries]:
    """One series per operator, evaluated on every snapshot.

    A snapshot taken at step ``k`` is placed at ``t = k * delta_t``.
    """
    if isinstance(op_list, np.ndarray) and op_list.ndim == 2:
        op_list = [op_list]
    labels = list(labels) if labels is not None else [f"op{i}" for i in range(len(op_list))]
    times = np.array([s.step for s in states], dtype=float) * delta_t
    out = []
    for op, label in zip(op_list, labels):
        op = np.asarray(op, dtype=np.complex128)
        vals = np.empty(len(states), dtype=np.complex128)
        for k, s in enumerate(states):
            if s.physical != op.shape[0]:
                raise DimensionError(f"operator extent {op.shape[0]} != snapshot extent {s.physical}")
            vals[k] = local_expectation(s.data, op)
        out.append(TimeSeries(times, _real(vals, label), label))
    return out


def populations(record) -> list[TimeSeries]:
    """Excited-state population of each emitter at the grid times."""
    d_sys = record.params.d_sys
    labels = ["n_tls"] if len(d_sys) == 1 else [f"n_tls{i + 1}" for i in range(len(d_sys))]
    return single_time_expectation(record.system_states, ops.tls_pop_ops(d_sys), record.delta_t, labels)


def flux(bins: Sequence[Snapshot], channel, d_t: Sequence[int], delta_t: float) -> TimeSeries:
    """Photon flux of one channel for a sequence of bin snapshots."""
    ch = ops.channel_index(channel)
    name = "RL"[ch] if len(d_t) == 2 else str(ch)
    series = single_time_expectation(bins, [ops.b_pop(d_t, delta_t, ch)], delta_t, [f"flux_{name}"])[0]
    return TimeSeries(series.times, series.values, series.label, "gamma")


def output_fluxes(record) -> list[TimeSeries]:
    p = record.params
    return [flux(record.output_field_states, c, p.d_t, p.delta_t) for c in range(len(p.d_t))]


def integrated_flux(f: TimeSeries, delta_t: float | None = None, label: str | None = None) -> TimeSeries:
    """``N(t_k) = dt * sum_{j<k} flux_j``; one point longer than the input.

    For a flux recorded per step this lines up with the system grid
    ``t_0 .. t_N``.
    """
    if len(f) == 0:
        return TimeSeries(np.zeros(1), np.zeros(1), label or "N", "photons")
    dt = _spacing(f.times) if delta_t is None else float(delta_t)
    values = np.concatenate([[0.0], np.cumsum(f.values) * dt])
    times = np.concatenate([f.times, [f.times[-1] + dt]])
    name = label or (f.label.replace("flux", "N") if f.label.startswith("flux") else f"N_{f.label}")
    return TimeSeries(times, values, name, "photons")


def _spacing(times: np.ndarray) -> float:
    if len(times) < 2:
        raise ValueError("pass delta_t explicitly for series shorter than two points")
    steps = np.diff(times)
    if np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError("integrated quantities need a uniform time grid")
    return float(steps[0])


def loop_flux(record) -> TimeSeries:
    """Total photon flux of each bin as it entered the delay line, per step."""
    if record.markovian:
        raise ContractViolation("loop statistics need a run with a delay line")
    p = record.params
    total = ops.b_pop_total(p.d_t, p.delta_t)
    s = single_time_expectation(record.loop_field_states, [total], p.delta_t, ["flux_loop"])[0]
    return TimeSeries(s.times, s.values, s.label, "gamma")


def loop_integrated_statistics(loop: "TimeSeries | object", params=None) -> TimeSeries:
    """Photons inside the delay line, ``N_loop(t_k) = dt * sum`` over bins in ``(t_k - tau, t_k]``.

    ``loop`` is either a run record or the per-step flux of the bins entering
    the loop. A bin is not touched while it travels through the delay line,
    so its flux at entry holds for the whole window.
    """
    if not isinstance(loop, TimeSeries):
        params = loop.params
        loop = loop_flux(loop)
    if params is None:
        raise ValueError("params are required with a flux series")
    d = params.delay_steps
    if d < 1:
        raise ContractViolation("loop statistics need tau >= delta_t")
    dt = params.delta_t
    csum = np.concatenate([[0.0], np.cumsum(loop.values)])
    n = len(loop.values)
    k = np.arange(n + 1)
    values = (csum[k] - csum[np.maximum(k - d, 0)]) * dt
    times = np.arange(n + 1) * dt
    return TimeSeries(times, values, "N_loop", "photons")


def quanta_conservation(record) -> TimeSeries:
    """Emitter excitations plus photons emitted so far (and in the loop)."""
    p = record.params
    n_sys = sum(s.values for s in populations(record))
    total = np.array(n_sys, dtype=float)
    for f in output_fluxes(record):
        total = total + integrated_flux(f, p.delta_t).values
    if not record.markovian:
        total = total + loop_integrated_statistics(record).values
    return TimeSeries(p.times, total, "N_total", "photons")


def entanglement(spectra: Sequence[SchmidtSpectrum], delta_t: float = 1.0, label: str = "S") -> TimeSeries:
    """Von Neumann entropy in bits of each Schmidt spectrum."""
    vals = np.empty(len(spectra))
    times = np.empty(len(spectra))
    for i, sp in enumerate(spectra):
        p = np.asarray(sp.values, dtype=float) ** 2
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ContractViolation(f"spectrum {i} is not normalized (sum of squares {p.sum():.8f})")
        p = p[p >= _ENTROPY_FLOOR]
        vals[i] = max(0.0, float(-np.sum(p * np.log2(p))))
        times[i] = (sp.time_index if sp.time_index is not None else i) * delta_t
    return TimeSeries(times, vals, label, "bits")


def write_csv(path, series: Sequence[TimeSeries]) -> None:
    """Write series on a shared grid as ``t,<label>,...`` with 17 significant digits."""
    if not series:
        raise ValueError("nothing to write")
    n = min(len(s) for s in series)
    times = series[0].times[:n]
    lines = ["t," + ",".join(s.label for s in series)]
    for k in range(n):
        lines.append(",".join(f"{x:.17g}" for x in [times[k], *(float(s.values[k]) for s in series)]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
