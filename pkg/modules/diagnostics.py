"""
Diagnostics
Numerical cross-checks of (non-)exponential ergodicity on a truncated box:
total-variation decay curves, divergence of exponential return-time moments,
trapping-cycle search and congestion ratios.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from modules.ctmc_engine import (
    Path, TransitionKernel, TruncatedSpace, forward_distribution_grid,
    path_mgf, product_poisson, reachable, stationary_estimate, tv_distance,
)
from modules.errors import DiagnosticsError
from modules.graph_structure import balance_witness

try:
    from config import (
        LEAK_LIMIT, DECAY_WINDOW, SLOPE_SEPARATION, SLOPE_AGREEMENT, WORKERS,
    )
except ImportError:
    LEAK_LIMIT = 0.1
    DECAY_WINDOW = (1e-6, 0.5)
    SLOPE_SEPARATION = 0.25
    SLOPE_AGREEMENT = 0.10
    WORKERS = 1

logger = logging.getLogger(__name__)

LEAK_WARNING = 1e-3


def reference_law(system, box, x0=None, t_long=100.0):
    """
    pi on the box: product Poisson from a balance witness, otherwise a
    long-time forward solve from x0 (flagged approximate).

    Returns:
        (DistributionVector, source) with source 'detailed', 'complex' or 'numerical'
    """
    space = TruncatedSpace.of(box)
    witness = balance_witness(system)
    if witness is not None:
        return product_poisson(witness.c, space), witness.kind
    x0 = x0 if x0 is not None else (0,) * system.dim
    logger.warning("no balance witness; using a long-time forward solve as pi")
    return stationary_estimate(TransitionKernel(system), x0, space, t_long), 'numerical'


# =============================================================================
# TV decay
# =============================================================================

@dataclass
class DecayCurve:
    initial: tuple
    times: list
    intervals: list
    slope: float = None
    window: tuple = DECAY_WINDOW
    max_leak: float = 0.0

    def to_dict(self):
        return {
            'initial': list(self.initial),
            'times': list(self.times),
            'tv': [iv.to_dict() for iv in self.intervals],
            'slope': self.slope,
            'window': list(self.window),
            'max_leak': self.max_leak,
        }

    def to_csv(self):
        lines = ['t,tv_lower,tv_upper']
        for t, iv in zip(self.times, self.intervals):
            lines.append(f"{t!r},{iv.lower!r},{iv.upper!r}")
        return '\n'.join(lines) + '\n'


def _fit_slope(times, uppers, window):
    lo, hi = window
    points = [(t, math.log(v)) for t, v in zip(times, uppers) if lo <= v <= hi]
    if len(points) < 2:
        return None
    t, y = zip(*points)
    return float(np.polyfit(np.array(t), np.array(y), 1)[0])


def tv_decay_report(system, initials, box, t_grid, pi=None, window=DECAY_WINDOW):
    """
    TV(P^t(x, .), pi) intervals on a time grid for each initial state, with a
    least-squares log-slope over the window where the upper bound lies in
    [window[0], window[1]].

    Raises:
        DiagnosticsError: leaked mass above LEAK_LIMIT ('truncation_too_small')
    """
    space = TruncatedSpace.of(box)
    if pi is None:
        pi, _ = reference_law(system, space, initials[0] if initials else None)
    kernel = TransitionKernel(system)
    curves = []
    for x in initials:
        space.require(x, 'initial state')
        dists = forward_distribution_grid(kernel, x, t_grid, space)
        max_leak = max(d.leaked for d in dists)
        if max_leak > LEAK_LIMIT:
            raise DiagnosticsError(f"truncation too small: leaked mass {max_leak:.3g} from {tuple(x)}",
                                   code='truncation_too_small',
                                   details={'initial': list(x), 'leaked': max_leak})
        if max_leak > LEAK_WARNING:
            logger.warning(f"leaked mass {max_leak:.3g} from {tuple(x)}")
        intervals = [tv_distance(d, pi) for d in dists]
        slope = _fit_slope(list(t_grid), [iv.upper for iv in intervals], window)
        logger.debug(f"decay curve from {tuple(x)}: slope={slope}")
        curves.append(DecayCurve(tuple(x), [float(t) for t in t_grid], intervals, slope,
                                 tuple(window), max_leak))
    return curves


def slope_separation(curves):
    """Largest pairwise relative difference of fitted slopes, with the decision thresholds."""
    slopes = [c.slope for c in curves if c.slope is not None]
    spread = 0.0
    for a, b in itertools.combinations(slopes, 2):
        scale = max(abs(a), abs(b))
        if scale > 0:
            spread = max(spread, abs(a - b) / scale)
    return {
        'slopes': slopes,
        'max_relative_difference': spread,
        'separation_threshold': SLOPE_SEPARATION,
        'agreement_threshold': SLOPE_AGREEMENT,
        'separated': spread > SLOPE_SEPARATION,
        'agree': spread < SLOPE_AGREEMENT,
    }


# =============================================================================
# Divergence of exponential moments
# =============================================================================

@dataclass
class DivergenceWitness:
    n: int
    rho: float
    cycle_factor: float
    bounds: list
    to_cycle: Path
    from_cycle: Path

    def steps_to_exceed(self, factor):
        """Least j with bounds[j] > factor * bounds[0], or None within the computed range."""
        return next((j for j, v in enumerate(self.bounds) if v > factor * self.bounds[0]), None)

    def to_dict(self):
        return {
            'n': self.n, 'rho': self.rho, 'cycle_factor': self.cycle_factor,
            'bounds': list(self.bounds),
            'to_cycle': self.to_cycle.to_list(), 'from_cycle': self.from_cycle.to_list(),
        }


def _slack_box(states, system):
    top = max((max(y.coeffs) for y in system.complexes), default=1)
    slack = 2 * top + 2
    return TruncatedSpace(tuple(max(s[i] for s in states) + slack for i in range(system.dim)))


def mgf_divergence_witness(kernel, cert, j_max, box=None, n=None):
    """
    Lower bounds L_j = F(g1) F(cycle)^j F(g2) on E[exp(rho tau_x0)] for j = 0..j_max.

    g1 runs x0 -> cycle start and g2 back, both shortest active paths in the box.
    """
    n = cert.n_star if n is None else n
    cycle_path = cert.cycle_path(n)
    x0 = tuple(cert.x0)
    space = TruncatedSpace.of(box) if box is not None else \
        _slack_box(list(cycle_path.states) + [x0], kernel.system)
    start = cycle_path.start
    if not space.contains(start) or not space.contains(x0):
        raise DiagnosticsError(f"box {space.upper} does not hold x0 and the cycle start",
                               code='connectors_not_found')
    to_cycle = reachable(kernel, x0, start, space)
    from_cycle = reachable(kernel, start, x0, space)
    if to_cycle is None or from_cycle is None:
        raise DiagnosticsError(f"no connector between {x0} and {start} inside {space.upper}",
                               code='connectors_not_found')
    rho = cert.rho
    head = path_mgf(kernel, to_cycle, rho) if len(to_cycle) > 1 else 1.0
    tail = path_mgf(kernel, from_cycle, rho) if len(from_cycle) > 1 else 1.0
    factor = path_mgf(kernel, cycle_path, rho)
    bounds = [head * factor ** j * tail for j in range(j_max + 1)]
    return DivergenceWitness(n, rho, factor, bounds, to_cycle, from_cycle)


# =============================================================================
# Trapping cycles
# =============================================================================

@dataclass
class TrappingCycle:
    path: Path
    F_value: float
    avoids_base: bool = True

    def to_dict(self):
        return {'path': self.path.to_list(), 'F_value': self.F_value,
                'avoids_base': self.avoids_base}


def find_trapping_cycle(kernel, rho, box, max_len, base=None):
    """
    Closed active path inside the box maximizing F(gamma, rho), among those with F > 1.

    Only interior states are used, so every holding rate is the true one.
    Each closed path is enumerated once, from its smallest state. With a base
    state, paths through it are skipped.

    Returns:
        TrappingCycle, or None
    """
    space = TruncatedSpace.of(box)
    interior = set(space.interior(kernel))
    totals = [kernel.total_rate(s) for s in interior]
    floor = min((q for q in totals if q > 0), default=0.0)
    if rho < 0 or (floor and rho >= floor):
        raise DiagnosticsError(f"rho must lie in [0, {floor}), got {rho}", code='rho_out_of_range')
    base = tuple(base) if base is not None else None
    best = None

    def extend(states, value):
        nonlocal best
        z = states[-1]
        q_z = kernel.total_rate(z)
        for w, rate in kernel.out_transitions(z):
            step = value * rate / (q_z - rho)
            if w == states[0] and len(states) >= 2:
                if step > 1.0 and (best is None or step > best.F_value):
                    best = TrappingCycle(Path(tuple(states) + (w,)), step)
                continue
            if len(states) >= max_len or w in states or w not in interior or w < states[0]:
                continue
            if base is not None and w == base:
                continue
            extend(states + [w], step)

    for s in sorted(interior):
        if base is not None and s == base:
            continue
        if kernel.total_rate(s) > 0:
            extend([s], 1.0)
    if best is not None:
        logger.info(f"trapping cycle from {best.path.start}: F={best.F_value:.6g}")
    return best


# =============================================================================
# Congestion ratio
# =============================================================================

@dataclass
class CongestionReport:
    terms: dict
    supremum: float
    argmax: tuple
    pairs: int
    disconnected: int
    box: tuple
    pi_source: str = 'given'
    species: tuple = field(default_factory=tuple)

    def term(self, z, w):
        return self.terms.get((tuple(z), tuple(w)), 0.0)

    def to_dict(self):
        return {
            'box': list(self.box),
            'species': list(self.species),
            'pi': self.pi_source,
            'supremum': self.supremum,
            'argmax': [list(self.argmax[0]), list(self.argmax[1])] if self.argmax else None,
            'pairs': self.pairs,
            'disconnected': self.disconnected,
            'edges': [{'from': list(z), 'to': list(w), 'term': v}
                      for (z, w), v in sorted(self.terms.items())],
        }


def _canonical_key(system):
    order = sorted(range(system.dim), key=lambda i: system.species[i])
    return lambda z: tuple(z[i] for i in order)


def _source_loads(kernel, space, pi, key, source):
    """
    Edge loads from the shortest-path tree of `source` to every state with a
    smaller key: sum over targets t of |gamma| pi(source) pi(t), where |gamma|
    counts the states on the path (edges + 1).
    """
    s_key = key(source)
    parent = {source: None}
    depth = {source: 0}
    order = [source]
    head = 0
    while head < len(order):
        z = order[head]
        head += 1
        for w in sorted((w for w, _ in kernel.out_transitions(z)), key=key):
            if w not in parent and space.contains(w):
                parent[w] = z
                depth[w] = depth[z] + 1
                order.append(w)
    p_source = pi.mass_at(source)
    below = {z: ((depth[z] + 1) * pi.mass_at(z) if key(z) < s_key else 0.0) for z in order}
    loads = {}
    for z in reversed(order[1:]):
        if below[z]:
            loads[(parent[z], z)] = below[z] * p_source
            below[parent[z]] += below[z]
    targets = sum(1 for z in space.states if key(z) < s_key)
    reached = sum(1 for z in order if key(z) < s_key)
    return loads, targets - reached


def congestion_ratio(system, box, pi=None, workers=WORKERS):
    """
    Per-edge congestion terms for shortest active paths between every pair of box states.

    Each unordered pair contributes once, oriented from the larger to the
    smaller canonical key (coordinates ordered by species name). The term of
    edge (s, u) is sum |gamma| pi(z) pi(w) / (q_{s,u} pi(s)) over the paths
    through it.

    Returns:
        CongestionReport; unreachable pairs are counted in `disconnected`
    """
    space = TruncatedSpace.of(box)
    pi_source = 'given'
    if pi is None:
        pi, pi_source = reference_law(system, space)
    kernel = TransitionKernel(system)
    key = _canonical_key(system)
    sources = sorted(space.states, key=key)

    def run_block(block):
        return [_source_loads(kernel, space, pi, key, s) for s in block]

    if workers > 1:
        blocks = [sources[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            block_results = list(pool.map(run_block, blocks))
        results = [None] * len(sources)
        for offset, block in enumerate(block_results):
            for j, item in enumerate(block):
                results[offset + j * workers] = item
    else:
        results = run_block(sources)

    load = {}
    disconnected = 0
    for loads, missing in results:
        disconnected += missing
        for edge, value in loads.items():
            load[edge] = load.get(edge, 0.0) + value
    terms = {}
    for (z, w), value in load.items():
        capacity = kernel.rate(z, w) * pi.mass_at(z)
        terms[(z, w)] = value / capacity if capacity > 0 else math.inf
    argmax = max(terms, key=lambda e: (terms[e], key(e[0]), key(e[1])), default=None)
    supremum = terms[argmax] if argmax else 0.0
    n = len(space)
    if disconnected:
        logger.warning(f"{disconnected} pair(s) disconnected inside the box")
    logger.debug(f"congestion on {space.upper}: sup={supremum:.6g}")
    return CongestionReport(terms, supremum, argmax, n * (n - 1) // 2, disconnected,
                            space.upper, pi_source, tuple(system.species))
