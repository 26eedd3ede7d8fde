#!/usr/bin/env python3
"""
Reaction Network Ergodicity Toolkit - Command Line
Validate, analyze and certify .crn networks, and run the numerical diagnostics.

    python3 cli.py certify networks/abb.crn --from 0,0
    python3 cli.py tvnorm networks/abb.crn --from "10,0;15,0;20,0" --box 40,40 --tmax 60
"""

import argparse
import json
import logging
import sys

from modules.runner import COMMANDS, OptionError, RunConfig, error_payload, parse_state, parse_states, run

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


def build_parser():
    parser = argparse.ArgumentParser(
        prog='cli.py',
        description='Structural and numerical (non-)exponential ergodicity checks for reaction networks.',
    )
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('input', help='network file (.crn)')
    parser.add_argument('--from', dest='initial',
                        help="initial state(s): '0,0', or several separated by ';'")
    parser.add_argument('--box', help='truncation bounds, e.g. 40,40')
    parser.add_argument('--rho', type=float, help='exponent of the trapping factor')
    parser.add_argument('--umax', type=int, default=DEFAULT_U_MAX, help='growth exponent bound')
    parser.add_argument('--cyclemax', type=int, default=DEFAULT_MAX_CYCLE_LEN,
                        help='longest reaction cycle searched')
    parser.add_argument('--nmax', type=int, default=DEFAULT_N_MAX, help='last sequence index scanned')
    parser.add_argument('--ncheck', type=int, default=DEFAULT_N_CHECK,
                        help='sequence indices with reachability witnesses')
    parser.add_argument('--tmax', type=float, default=DEFAULT_T_MAX, help='time horizon')
    parser.add_argument('--grid', type=int, default=DEFAULT_GRID, help='time grid intervals')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED, help='random seed')
    parser.add_argument('--format', choices=('json', 'csv'), default='json')
    parser.add_argument('--no-write', action='store_true', help='do not write artifacts beside the input')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging')
    return parser


def config_from_args(args):
    return RunConfig(
        command=args.command,
        input=args.input,
        initial=parse_states(args.initial),
        box=parse_state(args.box) if args.box else None,
        rho=args.rho,
        u_max=args.umax,
        max_len=args.cyclemax,
        n_max=args.nmax,
        n_check=args.ncheck,
        t_max=args.tmax,
        grid=args.grid,
        seed=args.seed,
        format=args.format,
        write_files=not args.no_write,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        config = config_from_args(args)
    except OptionError as e:
        print(json.dumps(error_payload(e), sort_keys=True), file=sys.stderr)
        return 2

    result = run(config)
    if result.exit_code == 2:
        print(json.dumps(result.payload, sort_keys=True), file=sys.stderr)
    elif result.stdout:
        sys.stdout.write(result.stdout)
    else:
        print(result.to_json())
    return result.exit_code


if __name__ == '__main__':
    sys.exit(main())
