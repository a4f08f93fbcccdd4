"""Command-line front end: constraint-curve sweeps, schedule simulation,
gate synthesis reports, and speed-vs-accuracy comparisons.

Exit codes: 0 on success, 2 on parse/config errors, 3 when a gate fails
its fidelity gate. Numeric output is deterministic: fixed 12-significant-
digit formatting and a '#'-prefixed header echoing the effective
configuration and tool version.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .gates import (
    cnot_recipe,
    conditional_recipe,
    format_matrix,
    phase_gate,
    phase_gate_recipe,
    solve_hadamard,
    solve_not,
    verify_gate,
)
from .hamiltonians import FieldParams
from .linalg import bloch_vector
from .phases import cone_eigenstate
from .propagation import adiabatic_error, loop_duration, propagator_compensated
from .sequences import (
    SINGLE_QUBIT,
    FieldLoop,
    s_operation_params,
    sequence_from_dict,
    sequence_trajectory,
)

DEFAULT_STEPS = 10_000
GATE_FIDELITY_GATE = 1.0 - 1e-5
CONFIG_ERROR = 2
VERIFICATION_ERROR = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    values: dict

    def header_lines(self) -> list[str]:
        lines = [f"# conegate {__version__}", f"# command = {self.command}"]
        for key in sorted(self.values):
            lines.append(f"# {key} = {self.values[key]}")
        return lines


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_range(text: str) -> np.ndarray:
    try:
        start_s, stop_s, step_s = text.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError as exc:
        raise ConfigError(f"range must look like start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"empty or descending range {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    values = start + step * np.arange(count)
    if values.size == 0:
        raise ConfigError(f"range {text!r} contains no points")
    return values


def _write_output(config: RunConfig, columns: dict, out: str | None, fmt: str) -> None:
    if fmt == "csv":
        lines = config.header_lines()
        names = list(columns)
        lines.append(",".join(names))
        n_rows = len(next(iter(columns.values()))) if columns else 0
        for k in range(n_rows):
            lines.append(",".join(_fmt(columns[name][k]) for name in names))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "tool": f"conegate {__version__}",
            "command": config.command,
            "config": config.values,
            "columns": {name: [float(v) for v in vals] for name, vals in columns.items()},
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_scurve(config: RunConfig) -> int:
    v = config.values
    omega1_values = _parse_range(v["omega1_range"])
    delta_text = str(v["delta_over_j"])
    delta_values = _parse_range(delta_text) if ":" in delta_text else np.array(
        [float(delta_text)]
    )
    cols = {"omega1_over_J": [], "delta_over_J": [], "J_tc": [], "phi_prime_rad": []}
    for delta in delta_values:
        for omega1 in omega1_values:
            sol = s_operation_params(float(delta), 1.0, float(omega1))
            cols["omega1_over_J"].append(float(omega1))
            cols["delta_over_J"].append(float(delta))
            cols["J_tc"].append(sol.t_c)
            cols["phi_prime_rad"].append(sol.phi_prime)
    _write_output(config, cols, v.get("out"), v.get("format", "csv"))
    return 0


def _initial_state(doc: dict, seq) -> np.ndarray:
    if "initial_state" in doc:
        pairs = doc["initial_state"]
        psi = np.array([complex(re, im) for re, im in pairs])
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ConfigError("initial_state must be a nonzero vector")
        return psi / norm
    dim = 2 if seq.frame == SINGLE_QUBIT else 4
    for step in seq.steps:
        if isinstance(step, FieldLoop) and isinstance(step.params, FieldParams):
            geom = cone_eigenstate(step.params.omega0, step.params.omega1)
            psi2 = geom.psi0 * np.array([1.0, np.exp(1j * step.params.phase0)])
            if dim == 2:
                return psi2
            return np.kron(np.array([1.0, 0.0]), psi2)
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def cmd_evolve(config: RunConfig) -> int:
    v = config.values
    path = v.get("schedule")
    if not path:
        raise ConfigError("evolve needs --schedule pointing to a sequence JSON file")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read schedule: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"schedule parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    seq = sequence_from_dict(doc)
    dim = 2 if seq.frame == SINGLE_QUBIT else 4

    if not seq.steps:
        _write_output(config, _trajectory_columns(None, dim), v.get("out"), v.get("format", "csv"))
        return 0

    psi0 = _initial_state(doc, seq)
    steps = int(v["steps"])
    traj = sequence_trajectory(seq, dim, psi0, steps_per_loop=steps)

    t_end = v.get("t_end")
    mask = slice(None)
    if t_end is not None:
        mask = traj.times <= float(t_end) + 1e-15

    has_loop = any(isinstance(s, FieldLoop) for s in seq.steps)
    if has_loop:
        overlap = abs(complex(traj.states[0].conj() @ traj.states[-1]))
        defect = abs(1.0 - overlap)
        if defect > 1e-6:
            print(
                f"warning: declared loop is not cyclic, overlap defect {defect:.3e}",
                file=sys.stderr,
            )

    cols = _trajectory_columns(traj, dim, mask)
    _write_output(config, cols, v.get("out"), v.get("format", "csv"))
    return 0


def _trajectory_columns(traj, dim: int, mask=slice(None)) -> dict:
    cols: dict = {"t": []}
    for k in range(dim):
        cols[f"re_amp{k}"] = []
        cols[f"im_amp{k}"] = []
    if dim == 2:
        cols["bloch_x"] = []
        cols["bloch_y"] = []
        cols["bloch_z"] = []
    cols["dynamical_phase"] = []
    if traj is None:
        return cols
    times = traj.times[mask]
    states = traj.states[mask]
    running = np.zeros(times.size)
    if times.size > 1:
        # evaluate each interval's endpoint Hamiltonians nudged inside the
        # interval, so samples shared between a hard pulse and two timed
        # segments pair with the segment that actually covers the interval
        dt = np.diff(times)
        t_left = times[:-1] + 1e-9 * dt
        t_right = times[1:] - 1e-9 * dt
        h_left = np.asarray(traj.hamiltonian_at(t_left), dtype=complex)
        h_right = np.asarray(traj.hamiltonian_at(t_right), dtype=complex)
        e_left = np.einsum("ki,kij,kj->k", states[:-1].conj(), h_left, states[:-1]).real
        e_right = np.einsum("ki,kij,kj->k", states[1:].conj(), h_right, states[1:]).real
        running[1:] = -np.cumsum(0.5 * (e_left + e_right) * dt)
    cols["t"] = list(times)
    for k in range(dim):
        cols[f"re_amp{k}"] = list(states[:, k].real)
        cols[f"im_amp{k}"] = list(states[:, k].imag)
    if dim == 2:
        bloch = np.array([bloch_vector(s) for s in states])
        cols["bloch_x"] = list(bloch[:, 0])
        cols["bloch_y"] = list(bloch[:, 1])
        cols["bloch_z"] = list(bloch[:, 2])
    cols["dynamical_phase"] = list(running)
    return cols


def cmd_gate(config: RunConfig) -> int:
    v = config.values
    name = v["name"]
    steps = int(v["steps"])
    theta = float(v.get("theta") or np.pi / 3)
    loops = int(v.get("loops") or 1)

    if name == "phase":
        if abs(np.cos(theta)) < 1e-12:
            target = phase_gate(theta, loops)
            _print_gate_report(config, target, {"theta0": theta, "loops": loops,
                                                "note": "degenerate tilt: identity gate, "
                                                        "no loop is required"}, 1.0)
            return 0
        recipe = phase_gate_recipe(theta, loops)
    elif name == "hadamard":
        recipe = solve_hadamard(steps_per_loop=steps)
    elif name == "not":
        recipe = solve_not(steps_per_loop=steps)
    elif name == "cphase":
        recipe = conditional_recipe(float(v.get("delta_over_j") or 1.058))
    elif name == "cnot":
        recipe = cnot_recipe()
    else:
        raise ConfigError(f"unknown gate {name!r}")

    fidelity_value = verify_gate(recipe, steps_per_loop=steps)
    _print_gate_report(config, recipe.target, recipe.parameters, fidelity_value,
                       out=v.get("out"))
    if fidelity_value < GATE_FIDELITY_GATE:
        print(f"verification FAILED: fidelity {fidelity_value:.12g} below "
              f"{GATE_FIDELITY_GATE}", file=sys.stderr)
        return VERIFICATION_ERROR
    return 0


def _print_gate_report(config: RunConfig, target, parameters: dict, fid: float,
                       out: str | None = None) -> None:
    lines = config.header_lines()
    lines.append("target matrix:")
    lines.append(format_matrix(target))
    lines.append("parameters:")
    for key in sorted(parameters):
        val = parameters[key]
        lines.append(f"  {key} = {_fmt(val) if isinstance(val, float) else val}")
    lines.append(f"simulated fidelity = {fid:.12g}")
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_compare_adiabatic(config: RunConfig) -> int:
    v = config.values
    theta = float(v.get("theta") or np.pi / 4)
    if not 0 < theta < np.pi / 2:
        raise ConfigError("theta must lie in (0, pi/2) so the field has a vertical part")
    gammas = _parse_range(v["gamma_range"])
    omega0, omega1 = float(np.cos(theta)), float(np.sin(theta))
    geom = cone_eigenstate(omega0, omega1)
    cols = {"gamma_over_omega0": [], "infidelity_uncompensated": [],
            "infidelity_compensated": []}
    for g in gammas:
        gamma = float(g) * omega0
        if gamma == 0.0:
            raise ConfigError("gamma range must exclude zero (no loop at zero speed)")
        p_un = FieldParams(omega0, omega1, gamma)
        p_co = FieldParams(omega0, omega1, gamma, omega_z=gamma)
        u_co = propagator_compensated(p_co, loop_duration(p_co))
        overlap = abs(geom.psi0.conj() @ (u_co @ geom.psi0))
        cols["gamma_over_omega0"].append(float(g))
        cols["infidelity_uncompensated"].append(adiabatic_error(p_un))
        cols["infidelity_compensated"].append(max(0.0, 1.0 - overlap * overlap))
    _write_output(config, cols, v.get("out"), v.get("format", "csv"))
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conegate",
        description="Simulate exactly controlled conical spin evolution and "
                    "the geometric gates built from it.",
    )
    parser.add_argument("--version", action="version", version=f"conegate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"], help="output format")
        sp.add_argument("--steps", type=int, help="integrator steps per loop")
        sp.add_argument("--seed", type=int, help="seed echoed into the header "
                                                 "(reserved for sampling commands)")
        sp.add_argument("--config", help="JSON file with default flag values")

    sp = sub.add_parser("scurve", help="preparation timing and tilt versus RF amplitude")
    sp.add_argument("--delta-over-j", dest="delta_over_j",
                    help="offset/coupling ratio, a single value or start:stop:step")
    sp.add_argument("--omega1-range", dest="omega1_range", help="start:stop:step sweep")
    common(sp)

    sp = sub.add_parser("evolve", help="simulate a pulse-sequence schedule file")
    sp.add_argument("--schedule", help="sequence JSON document")
    sp.add_argument("--t-end", dest="t_end", type=float, help="truncate output at this time")
    common(sp)

    sp = sub.add_parser("gate", help="synthesize and verify a gate")
    sp.add_argument("name", choices=["phase", "hadamard", "not", "cphase", "cnot"])
    sp.add_argument("--theta", type=float, help="tilt angle for the phase gate")
    sp.add_argument("--loops", type=int, help="loop count for the phase gate")
    sp.add_argument("--delta-over-j", dest="delta_over_j", type=float,
                    help="offset/coupling ratio for cphase")
    common(sp)

    sp = sub.add_parser("compare-adiabatic",
                        help="uncompensated vs compensated loop infidelity")
    sp.add_argument("--theta", type=float, help="cone angle of the tracked eigenstate")
    sp.add_argument("--gamma-range", dest="gamma_range",
                    help="start:stop:step sweep of gamma in units of omega0")
    common(sp)
    return parser


_REQUIRED = {
    "scurve": ["delta_over_j", "omega1_range"],
    "evolve": ["schedule"],
    "gate": [],
    "compare-adiabatic": ["gamma_range"],
}

_DEFAULTS = {"format": "csv"}


def _effective_config(args: argparse.Namespace) -> RunConfig:
    values = dict(_DEFAULTS)
    env_steps = os.environ.get("CONEGATE_STEPS")
    if env_steps is not None:
        try:
            values["steps"] = int(env_steps)
        except ValueError as exc:
            raise ConfigError(f"CONEGATE_STEPS must be an integer, got {env_steps!r}") from exc
    else:
        values["steps"] = DEFAULT_STEPS

    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        values.update(file_values)

    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            values[key] = val

    for key in _REQUIRED[args.command]:
        if values.get(key) in (None, ""):
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
    if int(values["steps"]) < 1:
        raise ConfigError("steps must be positive")
    return RunConfig(command=args.command, values=values)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, matching the config-error code
        return int(exc.code or 0)
    try:
        config = _effective_config(args)
        if args.command == "scurve":
            return cmd_scurve(config)
        if args.command == "evolve":
            return cmd_evolve(config)
        if args.command == "gate":
            return cmd_gate(config)
        return cmd_compare_adiabatic(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
