"""Time stepping of the emitter + time-bin chain.

Chain layout is oldest bin on the left. The system site sits just left of
the next bin to interact and moves one slot to the right per step. For
delayed feedback, ``d = tau / dt`` vacuum bins labelled ``-d..-1`` are put in
front so the step-``k`` feedback bin (label ``k - d``) always exists; after a
run the bin finalized at step ``k`` sits at chain position ``k``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, TruncationWarning
from .model import FEEDBACK, PRESENT, SYSTEM, SimParams, StepGenerator, StepPropagator
from .mps import SYSTEM as SYSTEM_KIND
from .mps import TIME_BIN, Mps, SchmidtSpectrum, SiteTensor, Snapshot
from .states import SystemState

TRUNCATION_ALARM = 1e-8


@dataclass
class BinsRecord:
    """Everything a run produces.

    ``system_states`` and the two Schmidt lists have one entry per grid time
    ``t_0 .. t_N``; ``output_field_states`` and ``loop_field_states`` have one
    entry per step, the bin that left the interaction region (or entered the
    delay line) during ``[t_k, t_k+1)``.
    """

    params: SimParams
    times: np.ndarray
    system_states: list[Snapshot] = field(default_factory=list)
    output_field_states: list[Snapshot] = field(default_factory=list)
    loop_field_states: list[Snapshot] = field(default_factory=list)
    schmidt: list[SchmidtSpectrum] = field(default_factory=list)
    schmidt_tau: list[SchmidtSpectrum] = field(default_factory=list)
    step_discarded: list[float] = field(default_factory=list)
    final_state: Mps | None = None
    delay_steps: int = 0

    @property
    def markovian(self) -> bool:
        return self.delay_steps == 0

    @property
    def delta_t(self) -> float:
        return self.params.delta_t

    @property
    def discarded_weight(self) -> float:
        return float(np.sum(self.step_discarded))

    @property
    def peak_bond(self) -> int:
        return self.final_state.peak_bond if self.final_state is not None else 1

    def output_position(self, step: int) -> int:
        """Chain position in ``final_state`` of the bin finalized at ``step``."""
        return step


def _gate_source(gates) -> Callable[[int], StepPropagator]:
    if isinstance(gates, StepGenerator):
        return gates.propagator
    if isinstance(gates, StepPropagator):
        return lambda k: gates
    if callable(gates):
        return gates
    seq = list(gates)
    return lambda k: seq[k]


def _system_site(sys0, params: SimParams) -> SiteTensor:
    amp = np.asarray(sys0.amplitudes if isinstance(sys0, SystemState) else sys0, dtype=np.complex128).reshape(-1)
    if amp.size != params.d_system:
        raise DimensionError(f"initial system state has {amp.size} amplitudes, params.d_sys={params.d_sys}")
    return SiteTensor(amp.reshape(1, -1, 1), SYSTEM_KIND, None)


def _check_field(field0: Sequence[SiteTensor], params: SimParams) -> list[SiteTensor]:
    n = params.n_steps
    if len(field0) < n:
        raise DimensionError(f"field chain has {len(field0)} bins but {n} steps are requested")
    for s in field0:
        if s.physical != params.d_bin:
            raise DimensionError(f"bin extent {s.physical} != {params.d_bin} implied by d_t={params.d_t}")
    return [s.copy() for s in field0]


def _check_prop(prop: StepPropagator, arity: int, dims: tuple[int, ...]) -> None:
    if prop.arity != arity:
        raise DimensionError(f"expected a {arity}-site propagator, got arity {prop.arity}")
    if tuple(prop.dims) != dims:
        raise DimensionError(f"propagator dims {prop.dims} do not match chain extents {dims}")


def _spectrum(values, label: str, step: int) -> SchmidtSpectrum:
    return SchmidtSpectrum(np.asarray(values, dtype=float), label, step)


class _Alarm:
    def __init__(self, threshold: float):
        self.threshold = threshold
        self.steps: list[int] = []

    def check(self, step: int, weight: float) -> None:
        if weight > self.threshold:
            self.steps.append(step)

    def emit(self) -> None:
        if self.steps:
            warnings.warn(
                f"discarded weight exceeded {self.threshold:g} in {len(self.steps)} step(s), "
                f"first at step {self.steps[0]}; consider a larger bond_max",
                TruncationWarning,
                stacklevel=3,
            )


def t_evol_mar(gates, sys0, field0, params: SimParams, alarm: float = TRUNCATION_ALARM) -> BinsRecord:
    """Markovian evolution: one two-site gate on (system, bin k) per step."""
    next_gate = _gate_source(gates)
    n = params.n_steps
    sites = [_system_site(sys0, params)] + _check_field(field0, params)
    mps = Mps(sites, 0, params.bond_max, params.cutoff)
    record = BinsRecord(params, params.times, delay_steps=0)
    record.system_states.append(mps.snapshot(0, 0))
    record.schmidt.append(_spectrum([1.0], "system_cut", 0))
    record.schmidt_tau.append(_spectrum([1.0], "feedback_cut", 0))
    dims = (params.d_system, params.d_bin)
    watch = _Alarm(alarm)

    for k in range(n):
        prop = next_gate(k)
        _check_prop(prop, 2, dims)
        report = mps.apply_gate(prop.ordered([0, 1]), k, n=2, out_order=(1, 0))
        record.step_discarded.append(report.discarded_weight)
        watch.check(k, report.discarded_weight)
        record.output_field_states.append(mps.snapshot(k, k))
        record.system_states.append(mps.snapshot(k + 1, k + 1))
        s = report.spectra[k + 1]
        record.schmidt.append(_spectrum(s, "system_cut", k + 1))
        record.schmidt_tau.append(_spectrum(s, "feedback_cut", k + 1))

    record.final_state = mps
    watch.emit()
    return record


def t_evol_nmar(gates, sys0, field0, params: SimParams, alarm: float = TRUNCATION_ALARM) -> BinsRecord:
    """Evolution with one delay line of ``tau / dt`` bins.

    Each step swaps the feedback bin next to the system, applies the
    three-site gate on (feedback, system, present), advances the system past
    the present bin and swaps the feedback bin back to its time slot.
    """
    next_gate = _gate_source(gates)
    d = params.delay_steps
    if d < 1:
        raise DimensionError("t_evol_nmar needs tau >= delta_t")
    n = params.n_steps
    pre = [SiteTensor(_vacuum_bin(params.d_bin), TIME_BIN, j) for j in range(-d, 0)]
    sites = pre + [_system_site(sys0, params)] + _check_field(field0, params)
    mps = Mps(sites, d, params.bond_max, params.cutoff)
    record = BinsRecord(params, params.times, delay_steps=d)
    record.system_states.append(mps.snapshot(d, 0))
    record.schmidt.append(_spectrum([1.0], "system_cut", 0))
    record.schmidt_tau.append(_spectrum([1.0], "feedback_cut", 0))
    dims = (params.d_system, params.d_bin, params.d_bin)
    watch = _Alarm(alarm)
    # propagator roles are (system, present, feedback); the window is (feedback, system, present)
    chain_order = [2, 0, 1]

    for k in range(n):
        p_f, p_s = k, k + d
        prop = next_gate(k)
        _check_prop(prop, 3, dims)
        if prop.site_roles != (SYSTEM, PRESENT, FEEDBACK):
            raise DimensionError(f"unexpected propagator roles {prop.site_roles}")
        before = mps.discarded_weight

        mps.move_oc(p_f)
        for i in range(p_f, p_s - 1):
            mps.swap_adjacent(i)
        mps.apply_gate(prop.ordered(chain_order), p_s - 1, n=3, out_order=(0, 2, 1))
        mps.move_oc(p_s - 1)
        for i in range(p_s - 1, p_f, -1):
            mps.swap_adjacent(i - 1)

        record.output_field_states.append(mps.snapshot(p_f, k))
        tau_spectra = mps.sweep_oc_right(p_s)
        record.loop_field_states.append(mps.snapshot(p_s, k))
        sys_spectra = mps.sweep_oc_right(p_s + 1)
        record.system_states.append(mps.snapshot(p_s + 1, k + 1))
        record.schmidt_tau.append(_spectrum(tau_spectra[p_f + 1], "feedback_cut", k + 1))
        record.schmidt.append(_spectrum(sys_spectra[p_s + 1], "system_cut", k + 1))

        step_weight = mps.discarded_weight - before
        record.step_discarded.append(step_weight)
        watch.check(k, step_weight)

    record.final_state = mps
    watch.emit()
    return record


def _vacuum_bin(d_bin: int) -> np.ndarray:
    v = np.zeros((1, d_bin, 1), dtype=np.complex128)
    v[0, 0, 0] = 1.0
    return v


def evolve(gates, sys0, field0, params: SimParams, **kwargs) -> BinsRecord:
    """Dispatch to the Markovian or delayed stepper by gate arity."""
    prop = _gate_source(gates)(0)
    if prop.arity == 2:
        return t_evol_mar(gates, sys0, field0, params, **kwargs)
    return t_evol_nmar(gates, sys0, field0, params, **kwargs)
