"""Command-line front end: ``wgmps run|validate --config FILE --out DIR``.

Config files are INI style::

    [run]
    scenario = feedback

    [params]
    tau = 1.0
    phi = 3.141592653589793

    [outputs]
    write = populations, loop, entropy

Sections and keys are listed in ``KNOWN_KEYS``; anything else is rejected.
All quantities are in units of the decay rate.
"""
from __future__ import annotations

import argparse
import configparser
import difflib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import correlations as corr
from . import observables as obs
from . import oracles
from . import states
from .errors import ConfigError, ScenarioError
from .evolution import BinsRecord, t_evol_mar, t_evol_nmar
from .model import (
    PumpSpec,
    SimParams,
    coupling,
    gaussian_pulse_pump,
    hamiltonian_1tls,
    hamiltonian_1tls_feedback,
    hamiltonian_2tls_mar,
    hamiltonian_2tls_nmar,
)

log = logging.getLogger("wgmps")

SCENARIOS = ("decay", "feedback", "two_tls_mar", "two_tls_nmar", "drive_cw", "drive_pulse", "fock")
OUTPUTS = (
    "populations", "fluxes", "conservation", "entropy", "g1_ss", "g2_ss",
    "spectrum", "g1_grid", "g2_grid", "loop",
)
KNOWN_KEYS = {
    "run": {"scenario"},
    "params": {
        "delta_t", "t_max", "gamma_l", "gamma_r", "coupling", "tau", "phi",
        "bond_max", "cutoff", "detuning", "d_t",
    },
    "pump": {"kind", "omega", "area", "t_c", "sigma"},
    "initial": {"system", "photon_num", "t_c", "sigma", "pulse_time", "direction", "envelope_csv"},
    "outputs": {"write", "channel", "t_ss", "span", "pad"},
}
FLOAT_KEYS = {
    "delta_t", "t_max", "gamma_l", "gamma_r", "tau", "phi", "cutoff", "detuning",
    "omega", "area", "t_c", "sigma", "pulse_time", "t_ss", "span",
}
INT_KEYS = {"bond_max", "photon_num", "pad"}

# (t_max, bond_max) per scenario, matching the reference run tables
_DEFAULTS = {
    "decay": (8.0, 4),
    "feedback": (8.0, 4),
    "two_tls_mar": (8.0, 4),
    "two_tls_nmar": (8.0, 4),
    "drive_cw": (40.0, 18),
    "drive_pulse": (8.0, 4),
    "fock": (8.0, 4),
}
_REQUIRED = {"feedback": ("tau", "phi"), "two_tls_nmar": ("tau", "phi"), "two_tls_mar": ("phi",)}

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


@dataclass
class RunConfig:
    scenario: str
    params: SimParams
    pump: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    output_opts: dict = field(default_factory=dict)
    source: str = ""

    def echo(self) -> dict:
        p = asdict(self.params)
        return {
            "scenario": self.scenario,
            "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in p.items()},
            "pump": self.pump,
            "initial": self.initial,
            "outputs": self.outputs,
            "output_options": self.output_opts,
        }


def _suggest(word: str, choices) -> str:
    close = difflib.get_close_matches(word, sorted(choices), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _convert(key: str, raw: str):
    try:
        if key in INT_KEYS:
            return int(raw)
        if key in FLOAT_KEYS:
            return float(raw)
    except ValueError:
        kind = "an integer" if key in INT_KEYS else "a number"
        raise ConfigError(f"{key} must be {kind}, got {raw!r}") from None
    if key == "d_t":
        try:
            return tuple(int(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"d_t must be a list of integers, got {raw!r}") from None
    if key == "write":
        return [x.strip() for x in raw.replace("\n", ",").split(",") if x.strip()]
    return raw.strip()


def _read_sections(path) -> dict[str, dict]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    out = {}
    for name in cp.sections():
        if name not in KNOWN_KEYS:
            raise ConfigError(f"unknown section [{name}]{_suggest(name, KNOWN_KEYS)}")
        sec = {}
        for key, raw in cp.items(name):
            if key not in KNOWN_KEYS[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]{_suggest(key, KNOWN_KEYS[name])}")
            sec[key] = _convert(key, raw)
        out[name] = sec
    return out


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a run configuration, filling scenario defaults."""
    sections = _read_sections(path)
    scenario = sections.get("run", {}).get("scenario")
    if scenario is None:
        raise ConfigError("missing required key 'scenario' in [run]")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}{_suggest(scenario, SCENARIOS)}")
    raw = dict(sections.get("params", {}))
    pump = dict(sections.get("pump", {}))
    initial = dict(sections.get("initial", {}))
    out_sec = dict(sections.get("outputs", {}))

    for key in _REQUIRED.get(scenario, ()):
        if key not in raw:
            raise ConfigError(f"scenario {scenario!r} requires key {key!r} in [params]")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    t_max, bond = _DEFAULTS[scenario]
    photons = int(initial.get("photon_num", 1))
    if scenario == "fock":
        if photons not in (1, 2):
            raise ConfigError("photon_num must be 1 or 2")
        bond = 4 * photons
    kwargs = {"delta_t": 0.05, "t_max": t_max, "bond_max": bond}
    if scenario in ("feedback",) or (scenario.startswith("drive") and raw.get("tau", 0) > 0):
        kwargs["d_t"] = (2,)
    else:
        kwargs["d_t"] = (3, 3) if scenario == "fock" and photons == 2 else (2, 2)
    if scenario.startswith("two_tls"):
        kwargs["d_sys"] = (2, 2)
    kind = raw.pop("coupling", "chiral" if scenario == "fock" else "symmetrical")
    kwargs["gamma_l"], kwargs["gamma_r"] = coupling(kind, 1.0)
    kwargs.update(raw)
    try:
        params = SimParams(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    if scenario == "drive_cw":
        pump.setdefault("kind", "cw")
        pump.setdefault("omega", 2 * np.pi)
    elif scenario == "drive_pulse":
        pump.setdefault("kind", "gaussian")
        pump.setdefault("area", np.pi)
        pump.setdefault("t_c", 1.5)
        pump.setdefault("sigma", 0.5)
    else:
        pump.setdefault("kind", "none")
    if pump["kind"] not in ("none", "cw", "gaussian"):
        raise ConfigError(f"unknown pump kind {pump['kind']!r}{_suggest(pump['kind'], ('none', 'cw', 'gaussian'))}")
    if pump["kind"] != "none" and scenario.startswith("two_tls"):
        raise ConfigError("pumped two-emitter runs are not supported")

    default_system = {
        "decay": "excited", "feedback": "excited", "two_tls_mar": "excited_ground",
        "two_tls_nmar": "excited_ground", "drive_cw": "ground", "drive_pulse": "ground", "fock": "ground",
    }[scenario]
    initial.setdefault("system", default_system)
    if scenario == "fock":
        initial.setdefault("photon_num", photons)
        initial.setdefault("t_c", 1.5)
        initial.setdefault("sigma", 0.5)
        initial.setdefault("direction", "R")

    default_out = {
        "decay": ["populations", "fluxes"],
        "feedback": ["populations", "loop"],
        "two_tls_mar": ["populations", "entropy"],
        "two_tls_nmar": ["populations", "loop", "entropy"],
        "drive_cw": ["populations", "g1_ss", "g2_ss", "spectrum"],
        "drive_pulse": ["populations", "g2_grid"],
        "fock": ["populations", "g1_grid" if photons == 1 else "g2_grid"],
    }[scenario]
    outputs = out_sec.pop("write", default_out)
    for name in outputs:
        if name not in OUTPUTS:
            raise ConfigError(f"unknown output {name!r}{_suggest(name, OUTPUTS)}")
    if "loop" in outputs and params.delay_steps == 0:
        raise ConfigError("the 'loop' output needs tau > 0")
    out_sec.setdefault("channel", "R")
    return RunConfig(scenario, params, pump, initial, list(outputs), out_sec, str(path))


# scenario execution


def _system_state(name: str):
    table = {
        "ground": states.tls_ground,
        "excited": states.tls_excited,
        "excited_ground": lambda: states.product_state(states.tls_excited(), states.tls_ground()),
        "ground_excited": lambda: states.product_state(states.tls_ground(), states.tls_excited()),
        "both_excited": lambda: states.product_state(states.tls_excited(), states.tls_excited()),
        "both_ground": lambda: states.product_state(states.tls_ground(), states.tls_ground()),
    }
    if name not in table:
        raise ConfigError(f"unknown initial system {name!r}{_suggest(name, table)}")
    return table[name]()


def _pump(cfg: RunConfig):
    p = cfg.pump
    if p["kind"] == "cw":
        return PumpSpec("cw", float(p.get("omega", 0.0)))
    if p["kind"] == "gaussian":
        return gaussian_pulse_pump(p.get("area", np.pi), p.get("t_c", 1.5), p.get("sigma", 0.5), cfg.params)
    return PumpSpec()


def _field(cfg: RunConfig):
    params = cfg.params
    if cfg.scenario != "fock":
        return states.vacuum(params.n_steps, params)
    ini = cfg.initial
    if "envelope_csv" in ini:
        env = states.read_envelope_csv(ini["envelope_csv"], params)
    else:
        env = states.gaussian_envelope(ini["t_c"], ini["sigma"], params, ini.get("pulse_time"))
    return states.fock_pulse(env, int(ini["photon_num"]), params, ini.get("direction", "R"))


def simulate(cfg: RunConfig) -> BinsRecord:
    params = cfg.params
    sys0 = _system_state(cfg.initial["system"])
    if sys0.dims != params.d_sys:
        raise ConfigError(f"initial system {cfg.initial['system']!r} does not fit scenario {cfg.scenario!r}")
    field0 = _field(cfg)
    if cfg.scenario.startswith("two_tls"):
        if params.delay_steps == 0:
            return t_evol_mar(hamiltonian_2tls_mar(params), sys0, field0, params)
        return t_evol_nmar(hamiltonian_2tls_nmar(params), sys0, field0, params)
    pump = _pump(cfg)
    if params.delay_steps > 0:
        return t_evol_nmar(hamiltonian_1tls_feedback(params, pump), sys0, field0, params)
    return t_evol_mar(hamiltonian_1tls(params, pump), sys0, field0, params)


def _write_outputs(cfg: RunConfig, record: BinsRecord, out_dir: Path, timings: dict) -> list[str]:
    params = cfg.params
    opts = cfg.output_opts
    written = []

    def target(name):
        written.append(name)
        return out_dir / name

    t0 = time.perf_counter()
    pops = obs.populations(record)
    fluxes = obs.output_fluxes(record)
    integrated = [obs.integrated_flux(f, params.delta_t) for f in fluxes]
    loop = obs.loop_integrated_statistics(record) if not record.markovian else None
    total = obs.quanta_conservation(record)
    if "populations" in cfg.outputs:
        cols = pops + integrated + ([loop] if loop is not None else []) + [total]
        obs.write_csv(target("populations.csv"), cols)
    if "fluxes" in cfg.outputs:
        obs.write_csv(target("fluxes.csv"), fluxes)
    if "conservation" in cfg.outputs:
        obs.write_csv(target("conservation.csv"), [total])
    if "loop" in cfg.outputs:
        obs.write_csv(target("loop.csv"), [loop])
    if "entropy" in cfg.outputs:
        s_sys = obs.entanglement(record.schmidt, params.delta_t, "S_system")
        s_cir = obs.entanglement(record.schmidt_tau, params.delta_t, "S_circuit")
        obs.write_csv(target("entropy.csv"), [s_sys, s_cir])
    timings["observables"] = time.perf_counter() - t0

    channel = opts.get("channel", "R")
    wants_ss = [o for o in ("g1_ss", "g2_ss", "spectrum") if o in cfg.outputs]
    if wants_ss:
        t0 = time.perf_counter()
        bd, b = corr.field_operators(params, channel)
        ch_flux = fluxes[0 if channel in ("R", "r", 0) or len(fluxes) == 1 else 1].values
        (g1,), tp, t_ss = corr.correlation_ss_2op(record, bd, b, params, opts.get("t_ss"), opts.get("span"))
        n_ss = ch_flux[int(round(t_ss / params.delta_t))]
        if "g1_ss" in cfg.outputs:
            corr.write_ss_csv(target("g1_ss.csv"), tp, corr.normalize_g(g1, n_ss, 1), t_ss)
        if "g2_ss" in cfg.outputs:
            (g2,), tp2, _ = corr.correlation_ss_4op(record, (bd, bd, b, b), params, t_ss, opts.get("span"))
            corr.write_ss_csv(target("g2_ss.csv"), tp2, corr.normalize_g(g2, n_ss, 2), t_ss)
        if "spectrum" in cfg.outputs:
            spec = corr.spectrum_w(params.delta_t, g1, pad=opts.get("pad", corr.DEFAULT_PAD), normalize=True)
            corr.write_spectrum_csv(target("spectrum.csv"), spec)
        timings["steady_state_correlations"] = time.perf_counter() - t0
    for name, fn in (("g1_grid", corr.g1_grid), ("g2_grid", corr.g2_grid)):
        if name in cfg.outputs:
            t0 = time.perf_counter()
            grid = fn(record, params, channels=(channel, channel))
            corr.write_grid_csv(target(f"{name}.csv"), grid)
            timings[name] = time.perf_counter() - t0
    return written


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", newline="\n")


def run(cfg: RunConfig, out_dir) -> dict:
    """Execute a scenario and write its CSV files plus ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    try:
        record = simulate(cfg)
    except Exception as exc:
        raise ScenarioError(f"scenario {cfg.scenario!r}: {exc}") from exc
    timings["evolution"] = time.perf_counter() - t0
    files = _write_outputs(cfg, record, out_dir, timings)
    manifest = {
        "config": cfg.echo(),
        "files": files,
        "timings_s": timings,
        "discarded_weight": record.discarded_weight,
        "peak_bond": record.peak_bond,
        "n_steps": cfg.params.n_steps,
    }
    _dump_json(out_dir / "manifest.json", manifest)
    return manifest


# oracle comparison

THRESHOLDS = {"decay": 0.01, "feedback": 0.02, "two_tls_mar": 0.02, "two_tls_nmar": 0.02, "drive_cw": 0.02, "drive_pulse": 0.02}


def _oracle(cfg: RunConfig, record: BinsRecord) -> tuple[np.ndarray, np.ndarray]:
    p = cfg.params
    t = p.times
    mps = np.column_stack([s.values for s in obs.populations(record)])
    total = p.gamma_l[0] + p.gamma_r[0]
    scenario = cfg.scenario
    if scenario == "decay":
        if cfg.initial["system"] != "excited":
            raise ConfigError("decay validation needs an excited emitter")
        return mps, oracles.analytic_decay(total, t).values[:, None]
    if scenario == "feedback":
        if cfg.pump["kind"] != "none" or cfg.initial["system"] != "excited":
            raise ConfigError("feedback validation needs an undriven, excited emitter")
        if abs(p.gamma_l[0] - p.gamma_r[0]) > 1e-12:
            raise ConfigError("feedback validation needs gamma_l == gamma_r")
        return mps, oracles.dde_mirror_tls(total, p.tau, p.phi, t).values[:, None]
    if scenario.startswith("two_tls"):
        starts = {"excited_ground": (1.0, 0.0), "ground_excited": (0.0, 1.0)}
        if cfg.initial["system"] not in starts:
            raise ConfigError("two-emitter validation covers single-excitation starts only")
        if len(set(p.gamma_l + p.gamma_r)) != 1:
            raise ConfigError("two-emitter validation needs equal rates in both channels")
        o = oracles.dde_two_tls(total, p.tau, p.phi, t, c0=starts[cfg.initial["system"]])
        return mps, o.values
    if scenario in ("drive_cw", "drive_pulse"):
        if p.delay_steps > 0:
            raise ConfigError("the master-equation oracle covers Markovian drives only")
        pump = _pump(cfg)
        omega = pump.omega if pump.kind == "cw" else pump.samples
        rho0 = np.diag([0.0, 1.0]) if cfg.initial["system"] == "excited" else None
        o = oracles.lindblad_driven_tls(omega, p.detuning, total, t, rho0=rho0)
        return mps, o.population[:, None]
    raise ConfigError(f"no oracle for scenario {scenario!r}")


def validate(cfg: RunConfig, out_dir) -> dict:
    """Run the engine and its oracle; report the largest population deviation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.scenario not in THRESHOLDS:
        raise ConfigError(f"no oracle for scenario {cfg.scenario!r}")
    t0 = time.perf_counter()
    record = simulate(cfg)
    elapsed = time.perf_counter() - t0
    mps, ref = _oracle(cfg, record)
    dev = float(np.max(np.abs(mps - ref)))
    thr = THRESHOLDS[cfg.scenario]
    report = {
        "scenario": cfg.scenario,
        "max_abs_deviation": dev,
        "threshold": thr,
        "passed": dev <= thr,
        "evolution_s": elapsed,
    }
    cols = [obs.TimeSeries(cfg.params.times, mps[:, i], f"n_mps{i + 1}") for i in range(mps.shape[1])]
    cols += [obs.TimeSeries(cfg.params.times, ref[:, i], f"n_oracle{i + 1}") for i in range(ref.shape[1])]
    obs.write_csv(out_dir / "validation.csv", cols)
    _dump_json(out_dir / "validation.json", report)
    return report


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wgmps", description="Time-bin MPS simulations of waveguide emitters.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run a scenario and write CSV outputs"), ("validate", "compare a run with its oracle")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--bond-max", type=int, help="override params.bond_max")
        sp.add_argument("--delta-t", type=float, help="override params.delta_t")
        sp.add_argument("--t-max", type=float, help="override params.t_max")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {"bond_max": args.bond_max, "delta_t": args.delta_t, "t_max": args.t_max}
    try:
        cfg = parse_config(args.config, overrides)
        if args.command == "run":
            manifest = run(cfg, args.out)
            log.info("wrote %d file(s) to %s", len(manifest["files"]), args.out)
            return EXIT_OK
        report = validate(cfg, args.out)
        status = "PASS" if report["passed"] else "FAIL"
        print(f"{cfg.scenario}: max deviation {report['max_abs_deviation']:.3e} "
              f"(threshold {report['threshold']:g}) {status}")
        return EXIT_OK if report["passed"] else EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - reported on stderr with exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
