#!/usr/bin/env python3
"""
Reaction Network Ergodicity Toolkit - REST Service
JSON endpoints for the validate / analyze / certify / simulate / tvnorm /
congestion / trapping commands.
"""

import logging

from flask import Flask, jsonify, request

from modules.errors import CRNError
from modules.runner import RunConfig, parse_state, parse_states, run

try:
    from config import (
        LOG_LEVEL, SERVER_HOST, SERVER_PORT, DEFAULT_U_MAX, DEFAULT_MAX_CYCLE_LEN,
        DEFAULT_N_MAX, DEFAULT_N_CHECK, DEFAULT_SEED, DEFAULT_T_MAX, DEFAULT_GRID,
    )
except ImportError:
    LOG_LEVEL = 'INFO'
    SERVER_HOST = '0.0.0.0'
    SERVER_PORT = 5000
    DEFAULT_U_MAX = 4
    DEFAULT_MAX_CYCLE_LEN = 6
    DEFAULT_N_MAX = 200
    DEFAULT_N_CHECK = 5
    DEFAULT_SEED = 0
    DEFAULT_T_MAX = 10.0
    DEFAULT_GRID = 50

# CORS support for browser clients
try:
    from flask_cors import CORS
    CORS_AVAILABLE = True
except ImportError:
    CORS_AVAILABLE = False

VERSION = '1.0.0'

logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

app = Flask(__name__)

if CORS_AVAILABLE:
    CORS(app, resources={r"/api/*": {"origins": "*"}})
else:
    logger.warning("flask-cors not installed; cross-origin requests will be refused")


# =============================================================================
# Request handling
# =============================================================================

def _state_option(value):
    if value is None:
        return None
    if isinstance(value, str):
        return parse_state(value)
    return tuple(int(v) for v in value)


def _initial_option(value):
    """'0,0', '10,0;15,0', [0, 0] or [[10, 0], [15, 0]]"""
    if value is None or isinstance(value, str):
        return parse_states(value)
    if value and isinstance(value[0], (list, tuple)):
        return [tuple(int(v) for v in x) for x in value]
    return [tuple(int(v) for v in value)]


def config_from_request(command, data):
    return RunConfig(
        command=command,
        text=data.get('network', ''),
        initial=_initial_option(data.get('from')),
        box=_state_option(data.get('box')),
        rho=data.get('rho'),
        u_max=int(data.get('umax', DEFAULT_U_MAX)),
        max_len=int(data.get('cyclemax', DEFAULT_MAX_CYCLE_LEN)),
        n_max=int(data.get('nmax', DEFAULT_N_MAX)),
        n_check=int(data.get('ncheck', DEFAULT_N_CHECK)),
        t_max=float(data.get('tmax', DEFAULT_T_MAX)),
        grid=int(data.get('grid', DEFAULT_GRID)),
        seed=int(data.get('seed', DEFAULT_SEED)),
        write_files=False,
    )


def handle(command):
    """Run a command on the request body; input errors answer 400."""
    data = request.get_json(silent=True) or {}
    if 'network' not in data:
        return jsonify({'ok': False, 'code': 'missing_network', 'error': "'network' is required"}), 400
    try:
        config = config_from_request(command, data)
        result = run(config)
    except CRNError as e:
        return jsonify(e.to_dict()), 400
    except (TypeError, ValueError) as e:
        return jsonify({'ok': False, 'code': 'bad_option', 'error': str(e)}), 400
    except Exception as e:
        logger.exception(f"{command} failed")
        return jsonify({'ok': False, 'error': str(e)}), 500
    if result.exit_code == 2:
        payload = result.payload
        return jsonify({'ok': False, 'code': payload['code'], 'error': payload['message'],
                        **({'span': payload['span']} if 'span' in payload else {})}), 400
    return app.response_class(result.to_json(), mimetype='application/json')


# =============================================================================
# Routes
# =============================================================================

@app.route('/api/status')
def get_status():
    """Service version and configured defaults"""
    return jsonify({
        'ok': True,
        'version': VERSION,
        'defaults': {
            'umax': DEFAULT_U_MAX,
            'cyclemax': DEFAULT_MAX_CYCLE_LEN,
            'nmax': DEFAULT_N_MAX,
            'ncheck': DEFAULT_N_CHECK,
            'seed': DEFAULT_SEED,
            'tmax': DEFAULT_T_MAX,
            'grid': DEFAULT_GRID,
        },
    })


@app.route('/api/validate', methods=['POST'])
def validate():
    """Parse the network and list violated invariants"""
    return handle('validate')


@app.route('/api/analyze', methods=['POST'])
def analyze():
    """Linkage classes, weak reversibility, deficiency and balance witnesses"""
    return handle('analyze')


@app.route('/api/certify', methods=['POST'])
def certify():
    """Non-exponential ergodicity certificate"""
    return handle('certify')


@app.route('/api/simulate', methods=['POST'])
def simulate():
    """Gillespie trajectory"""
    return handle('simulate')


@app.route('/api/tvnorm', methods=['POST'])
def tvnorm():
    """Total-variation decay curves"""
    return handle('tvnorm')


@app.route('/api/congestion', methods=['POST'])
def congestion():
    """Congestion ratio on a box"""
    return handle('congestion')


@app.route('/api/trapping', methods=['POST'])
def trapping():
    """Closed path with trapping factor above 1"""
    return handle('trapping')


if __name__ == '__main__':
    app.run(host=SERVER_HOST, port=SERVER_PORT, debug=False, threaded=True)
