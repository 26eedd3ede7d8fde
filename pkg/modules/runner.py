"""
Command Runner
One entry point behind both the command line and the REST service: parses
the network, runs a command and returns the JSON payload, artifact texts and
an exit status.

Exit status: 0 success, 1 negative analysis outcome (no certificate, failed
validation, no trapping cycle), 2 input or parameter error.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from modules.certifier import certify_nonexponential
from modules.corollaries import check_corollary_class
from modules.ctmc_engine import TransitionKernel, simulate_ssa
from modules.diagnostics import (
    congestion_ratio, find_trapping_cycle, slope_separation, tv_decay_report,
)
from modules.errors import CRNError
from modules.graph_structure import (
    balance_witness, conservation_laws, deficiency, is_reversible, is_weakly_reversible,
    linkage_classes,
)
from modules.net_model import validate_network
from modules.net_parser import parse_network

try:
    from config import (
        DEFAULT_U_MAX, DEFAULT_MAX_CYCLE_LEN, DEFAULT_N_MAX, DEFAULT_N_CHECK,
        DEFAULT_SEED, DEFAULT_T_MAX, DEFAULT_GRID,
    )
except ImportError:
    DEFAULT_U_MAX = 4
    DEFAULT_MAX_CYCLE_LEN = 6
    DEFAULT_N_MAX = 200
    DEFAULT_N_CHECK = 5
    DEFAULT_SEED = 0
    DEFAULT_T_MAX = 10.0
    DEFAULT_GRID = 50

logger = logging.getLogger(__name__)

COMMANDS = ('validate', 'analyze', 'certify', 'simulate', 'tvnorm', 'congestion', 'trapping')

SUFFIXES = {
    'certify': '.cert.json',
    'simulate': '.traj.csv',
    'tvnorm': '.tv.csv',
    'congestion': '.congestion.json',
}

TRAPPING_CYCLE_LEN = 3


class OptionError(CRNError):
    code = 'bad_option'


@dataclass
class RunConfig:
    command: str
    input: str = None
    text: str = None
    initial: list = None
    box: tuple = None
    rho: float = None
    u_max: int = DEFAULT_U_MAX
    max_len: int = DEFAULT_MAX_CYCLE_LEN
    n_max: int = DEFAULT_N_MAX
    n_check: int = DEFAULT_N_CHECK
    t_max: float = DEFAULT_T_MAX
    grid: int = DEFAULT_GRID
    seed: int = DEFAULT_SEED
    format: str = 'json'
    write_files: bool = True

    def check(self):
        if self.command not in COMMANDS:
            raise OptionError(f"unknown command {self.command!r}")
        if self.format not in ('json', 'csv'):
            raise OptionError(f"format must be json or csv, got {self.format!r}")
        for name in ('u_max', 'max_len', 'n_max', 'grid'):
            if getattr(self, name) < 1:
                raise OptionError(f"{name} must be positive")
        if self.n_check < 0:
            raise OptionError("n_check must be nonnegative")
        if not self.t_max > 0:
            raise OptionError("tmax must be positive")
        if self.box is not None and any(b < 0 for b in self.box):
            raise OptionError("box bounds must be nonnegative")


@dataclass
class RunResult:
    exit_code: int
    payload: dict
    artifacts: dict = field(default_factory=dict)
    stdout: str = ''

    def to_json(self):
        return dumps(self.payload)


# =============================================================================
# Option parsing
# =============================================================================

def parse_state(text):
    try:
        return tuple(int(v) for v in text.split(','))
    except ValueError:
        raise OptionError(f"state must be comma-separated integers, got {text!r}")


def parse_states(text):
    """'10,0;15,0' -> [(10, 0), (15, 0)]"""
    if text is None or text == '':
        return None
    return [parse_state(part.strip()) for part in str(text).split(';') if part.strip()]


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    if isinstance(value, np.generic):
        return _finite(value.item())
    return value


def dumps(payload):
    """Deterministic JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_finite(payload), sort_keys=True, indent=2)


def error_payload(error):
    payload = {'code': error.code, 'message': error.message}
    if error.span is not None:
        payload['span'] = error.span.to_dict()
    return payload


# =============================================================================
# Commands
# =============================================================================

def _initial(config, system, default=None):
    states = config.initial or ([default] if default is not None else None)
    if states is None:
        return None
    for x in states:
        if len(x) != system.dim or any(v < 0 for v in x):
            raise OptionError(f"initial state {x} must be {system.dim} nonnegative integers")
    return states


def _box(config, system, states):
    if config.box is not None:
        if len(config.box) != system.dim:
            raise OptionError(f"box needs {system.dim} bounds, got {len(config.box)}")
        return tuple(config.box)
    top = [max(x[i] for x in states) for i in range(system.dim)] if states else [0] * system.dim
    return tuple(2 * v + 20 for v in top)


def run_validate(system, config):
    report = validate_network(system)
    payload = dict(report.to_dict(), species=list(system.species), reactions=len(system.reactions))
    return RunResult(0 if report.ok else 1, payload)


def run_analyze(system, config):
    witness = balance_witness(system)
    payload = {
        'ok': True,
        'species': list(system.species),
        'complexes': [system.complex_label(y) for y in system.complexes],
        'linkage_classes': [[system.complex_label(y) for y in c] for c in linkage_classes(system)],
        'weakly_reversible': is_weakly_reversible(system),
        'reversible': is_reversible(system),
        'deficiency': deficiency(system).to_dict(),
        'balance': witness.to_dict() if witness else None,
        'conservation_laws': [list(c) for c in conservation_laws(system)],
        'corollary': check_corollary_class(system).to_dict(),
    }
    return RunResult(0, payload)


def run_certify(system, config):
    states = _initial(config, system)
    result = certify_nonexponential(
        system, states[0] if states else None, rho=config.rho, u_max=config.u_max,
        max_len=config.max_len, n_max=config.n_max, n_check=config.n_check,
    )
    payload = result.to_dict()
    artifacts = {'certify': dumps(payload)} if result.ok else {}
    return RunResult(0 if result.ok else 1, payload, artifacts)


def run_simulate(system, config):
    x0 = _initial(config, system, default=(0,) * system.dim)[0]
    trajectory = simulate_ssa(TransitionKernel(system, cache_size=100_000), x0, config.t_max,
                              seed=config.seed)
    csv = trajectory.to_csv(system.species)
    payload = {
        'ok': True,
        'species': list(system.species),
        'seed': config.seed,
        't_end': config.t_max,
        'jumps': len(trajectory.times) - 1,
        'final_state': list(trajectory.final_state),
        'times': list(trajectory.times),
        'states': [list(s) for s in trajectory.states],
    }
    return RunResult(0, payload, {'simulate': csv}, stdout=csv if config.format == 'csv' else '')


def run_tvnorm(system, config):
    states = _initial(config, system, default=(0,) * system.dim)
    box = _box(config, system, states)
    times = np.linspace(0.0, config.t_max, config.grid + 1)
    curves = tv_decay_report(system, states, box, times)
    blocks = [f"# initial={','.join(str(v) for v in c.initial)}\n{c.to_csv()}" for c in curves]
    csv = ''.join(blocks)
    payload = {
        'ok': True,
        'box': list(box),
        'curves': [c.to_dict() for c in curves],
        'separation': slope_separation(curves),
    }
    return RunResult(0, payload, {'tvnorm': csv}, stdout=csv if config.format == 'csv' else '')


def run_congestion(system, config):
    box = _box(config, system, config.initial)
    report = congestion_ratio(system, box)
    payload = dict(report.to_dict(), ok=True)
    return RunResult(0, payload, {'congestion': dumps(payload)})


def run_trapping(system, config):
    box = _box(config, system, config.initial)
    rho = config.rho if config.rho is not None else 0.5 * system.min_rate
    base = config.initial[0] if config.initial else None
    found = find_trapping_cycle(TransitionKernel(system), rho, box,
                                min(config.max_len, TRAPPING_CYCLE_LEN), base=base)
    payload = {'ok': found is not None, 'box': list(box), 'rho': rho,
               'cycle': found.to_dict() if found else None}
    return RunResult(0 if found else 1, payload)


_HANDLERS = {
    'validate': run_validate,
    'analyze': run_analyze,
    'certify': run_certify,
    'simulate': run_simulate,
    'tvnorm': run_tvnorm,
    'congestion': run_congestion,
    'trapping': run_trapping,
}


def _artifact_path(input_path, command):
    root, _ = os.path.splitext(input_path)
    return root + SUFFIXES[command]


def run(config):
    """
    Run one command.

    Returns:
        RunResult; CRNError and unreadable input map to exit status 2 with
        the {code, message, span?} payload
    """
    try:
        config.check()
        if config.text is None:
            if config.input is None:
                raise OptionError("no network given")
            with open(config.input, 'r', encoding='utf-8') as handle:
                config.text = handle.read()
        system = parse_network(config.text)
        result = _HANDLERS[config.command](system, config)
    except CRNError as e:
        logger.error(f"{config.command}: {e}")
        return RunResult(2, error_payload(e))
    except OSError as e:
        logger.error(f"cannot read {config.input}: {e}")
        return RunResult(2, {'code': 'io_error', 'message': str(e)})

    if config.write_files and config.input is not None:
        for command, text in result.artifacts.items():
            path = _artifact_path(config.input, command)
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(text)
            logger.info(f"wrote {path}")
    return result
