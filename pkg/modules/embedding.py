"""
Sequence Embedding
Moves a symbolic tier sequence into the communicating class of a start state.

x_n generally leaves the class of x (conserved quantities, lattice parity).
For a weakly reversible network the sequence is rebuilt as

    xbar_n = x + sum_l floor(b_l(n)) w_l

where {w_l} is an integer basis of the stoichiometric lattice restricted to
the growth coordinates and b(n) are the exact coordinates of x_n - x_0 in that
basis. xbar_n stays within bounded distance of x_n with the constant
coordinates untouched, so the strong tier-1 cycle survives, and reachability
from x is witnessed explicitly for small n.
"""

import logging
import math
from dataclasses import dataclass, field

from modules.ctmc_engine import Path, TransitionKernel, TruncatedSpace, reachable
from modules.errors import EmbeddingError, KernelError
from modules.graph_structure import (
    complex_path, in_integer_span, is_weakly_reversible, rational_coordinates,
    stoichiometric_lattice,
)

try:
    from config import DEFAULT_N_CHECK
except ImportError:
    DEFAULT_N_CHECK = 5

logger = logging.getLogger(__name__)

BFS_ATTEMPTS = 3


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _scale(k, v):
    return tuple(k * a for a in v)


def _through(connector, path):
    """Witness from the start state: the connector, then the path from the sequence base."""
    return connector.compose(path) if connector is not None else path


# =============================================================================
# Embedded sequences
# =============================================================================

@dataclass
class EmbeddedSequence:
    """
    A tier sequence placed in the class of `base`.

    method 'adjusted' floors lattice coordinates (see module docstring);
    method 'direct' keeps x + (x_n - x_0) and relies on explicit witnesses.
    """
    system: object
    tier: object
    base: tuple
    method: str = 'adjusted'
    basis: list = field(default_factory=list)
    growth_coords: dict = field(default_factory=dict)
    lattice: bool = True
    witnesses: dict = field(default_factory=dict)
    connector: Path = None

    def drift(self, n):
        """x_n - x_0."""
        return _sub(self.tier.state(n), self.tier.state(0))

    def coordinates(self, n):
        """Exact coordinates b(n) of x_n - x_0 over the lattice basis."""
        values = [0] * len(self.basis)
        for power, coords in self.growth_coords.items():
            for l, beta in enumerate(coords):
                values[l] += beta * n ** power
        return values

    def state(self, n):
        if self.method == 'direct':
            return _add(self.base, self.drift(n))
        x = self.base
        for b, w in zip(self.coordinates(n), self.basis):
            x = _add(x, _scale(math.floor(b), w.vector))
        return x

    def multiplicities(self, n):
        """
        Nonnegative firing counts d with state(n) = base + sum_r d_r (y'_r - y_r).

        Returns None when a negative count cannot be rewritten (network not
        weakly reversible) or the direct drift is off the lattice.
        """
        count = len(self.system.reactions)
        if self.method == 'direct':
            counts = lattice_coefficients(self.system, self.drift(n))
            if counts is None:
                return None
        else:
            counts = [0] * count
            for b, w in zip(self.coordinates(n), self.basis):
                k = math.floor(b)
                counts = [c + k * a for c, a in zip(counts, w.coeffs)]
        return rewrite_nonnegative(self.system, counts)

    def witness(self, n, slack=None):
        path = witness_path(self.system, self.base, self.state(n), slack=slack,
                            multiplicities=self.multiplicities(n))
        if path is not None:
            self.witnesses[n] = path
        return path

    def to_dict(self):
        return {
            'method': self.method,
            'lattice': self.lattice,
            'basis': [list(w.vector) for w in self.basis],
            'connector': self.connector.to_list() if self.connector else None,
            'witnesses': {str(n): (_through(self.connector, p).to_list() if p else None)
                          for n, p in sorted(self.witnesses.items())},
        }


@dataclass
class LiftedSequence:
    """Embedded sequence of a species subnetwork, padded with fixed counts elsewhere."""
    inner: EmbeddedSequence
    species: tuple
    full_base: tuple
    connector: Path = None

    @property
    def method(self):
        return self.inner.method

    @property
    def lattice(self):
        return self.inner.lattice

    def _lift(self, z):
        x = list(self.full_base)
        for i, v in zip(self.species, z):
            x[i] = v
        return tuple(x)

    def state(self, n):
        return self._lift(self.inner.state(n))

    def witness(self, n, slack=None):
        path = self.inner.witness(n, slack)
        return Path(tuple(self._lift(z) for z in path.states)) if path else None

    @property
    def witnesses(self):
        return {n: (Path(tuple(self._lift(z) for z in p.states)) if p else None)
                for n, p in self.inner.witnesses.items()}

    def to_dict(self):
        result = self.inner.to_dict()
        result['connector'] = self.connector.to_list() if self.connector else None
        result['witnesses'] = {str(n): (_through(self.connector, p).to_list() if p else None)
                               for n, p in sorted(self.witnesses.items())}
        result['lifted_from'] = list(self.species)
        return result


# =============================================================================
# Lattice arithmetic
# =============================================================================

def lattice_coefficients(system, vector):
    """Integer reaction counts c with sum_r c_r (y'_r - y_r) = vector, or None."""
    basis = stoichiometric_lattice(system)
    residual = list(vector)
    counts = [0] * len(system.reactions)
    for element in basis:
        value = residual[element.pivot]
        if value % element.vector[element.pivot]:
            return None
        q = value // element.vector[element.pivot]
        residual = [a - q * b for a, b in zip(residual, element.vector)]
        counts = [c + q * a for c, a in zip(counts, element.coeffs)]
    return None if any(residual) else counts


def rewrite_nonnegative(system, counts):
    """
    Replace each negative count -k on y -> y' by k firings of a return path
    y' -> ... -> y, which weak reversibility guarantees.
    """
    counts = list(counts)
    for index, c in enumerate(list(counts)):
        if c >= 0:
            continue
        reaction = system.reactions[index]
        back = complex_path(system, reaction.product, reaction.source)
        if back is None:
            return None
        counts[index] = 0
        for step in back:
            counts[step] += -c
    return counts


def _fire_greedy(system, start, counts):
    """Fire every counted reaction, lowest enabled index first; None if stuck."""
    kernel = TransitionKernel(system)
    remaining = list(counts)
    states = [tuple(start)]
    while any(remaining):
        z = states[-1]
        for index, left in enumerate(remaining):
            if left and all(a >= b for a, b in zip(z, system.reactions[index].source.coeffs)):
                w = _add(z, system.reactions[index].net_change)
                if kernel.rate(z, w) > 0:
                    states.append(w)
                    remaining[index] -= 1
                    break
        else:
            return None
    return Path(tuple(states))


def witness_path(system, start, goal, slack=None, multiplicities=None):
    """
    Active path start -> goal.

    The counted firings are tried greedily first; otherwise a breadth-first
    search runs in a box around both ends, widened on failure.
    """
    start, goal = tuple(start), tuple(goal)
    if any(v < 0 for v in goal):
        return None
    if start == goal:
        return Path((start,))
    if multiplicities is not None and all(c >= 0 for c in multiplicities):
        path = _fire_greedy(system, start, multiplicities)
        if path is not None and path.end == goal:
            return path
    top = max((max(y.coeffs) for y in system.complexes), default=1)
    slack = slack if slack is not None else max(2, 2 * top)
    kernel = TransitionKernel(system, cache_size=100_000)
    for attempt in range(BFS_ATTEMPTS):
        upper = tuple(max(a, b) + slack * (attempt + 1) for a, b in zip(start, goal))
        path = reachable(kernel, start, goal, TruncatedSpace(upper))
        if path is not None:
            return path
    logger.debug(f"no witness {start} -> {goal} within slack {slack * BFS_ATTEMPTS}")
    return None


# =============================================================================
# Construction
# =============================================================================

def _growth_groups(tier):
    """Unit-sum direction per distinct growth exponent: x_n - x_0 = sum_p n^p g_p."""
    groups = {}
    for i in tier.growth:
        vector = groups.setdefault(tier.u[i], [0] * len(tier.u))
        vector[i] = 1
    return {p: tuple(v) for p, v in sorted(groups.items())}


def _check_base(tier, x, cycle_source):
    if len(x) != len(tier.u):
        raise EmbeddingError(f"base state {tuple(x)} has the wrong dimension", code='bad_base_state')
    if any(a < b for a, b in zip(x, cycle_source)):
        raise EmbeddingError(f"base state {tuple(x)} is not above {tuple(cycle_source)}",
                             code='bad_base_state')
    for i in tier.constant:
        if x[i] != tier.b[i]:
            raise EmbeddingError(f"base state coordinate {i} is {x[i]}, the sequence keeps {tier.b[i]}",
                                 code='bad_base_state')


def base_accepts(tier, z, cycle_source):
    """z can start the sequence: above the cycle source, equal to b on the constant coordinates."""
    return (all(a >= b for a, b in zip(z, cycle_source))
            and all(z[i] == tier.b[i] for i in tier.constant))


def connect_to_base(system, tier, x, cycle_source, slack=None):
    """
    Shortest active path from x to a state accepted by `base_accepts`.

    The sequence built from the end of this path lies in the class of x, with
    the connector prepended to every membership witness. Returns the trivial
    path when x is accepted already, None when the search box holds no
    accepted state.
    """
    x = tuple(int(v) for v in x)
    if base_accepts(tier, x, cycle_source):
        return Path((x,))
    top = max((max(y.coeffs) for y in system.complexes), default=1)
    slack = slack if slack is not None else max(2, 2 * top)
    kernel = TransitionKernel(system, cache_size=100_000)
    floor = tuple(max(a, b, c) for a, b, c in zip(x, tier.b, cycle_source))
    for attempt in range(BFS_ATTEMPTS):
        upper = tuple(v + slack * (attempt + 1) for v in floor)
        path = reachable(kernel, x, lambda z: base_accepts(tier, z, cycle_source),
                         TruncatedSpace(upper))
        if path is not None:
            logger.info(f"start {x} connects to sequence base {path.end} in {len(path) - 1} jumps")
            return path
    logger.debug(f"no sequence base reachable from {x} within slack {slack * BFS_ATTEMPTS}")
    return None


def _has_comparable_pair(complexes):
    return any(a.strictly_below(b) for a in complexes for b in complexes if a != b)


def embed_sequence(system, tier, x, n_check=DEFAULT_N_CHECK, cycle=None):
    """
    Rebuild the tier sequence inside the class of x.

    Args:
        system: weakly reversible ReactionSystem
        tier: TierSpec of the sequence
        x: base state, above y*_1 and equal to b on the constant coordinates
        n_check: witnesses are built for n = 1..n_check
        cycle: the strong tier-1 cycle (comparable pair taken from its complexes)

    Returns:
        EmbeddedSequence with method 'adjusted'

    Raises:
        EmbeddingError: not_weakly_reversible, bad_base_state,
            conservation_obstruction, no_comparable_pair
    """
    x = tuple(int(v) for v in x)
    if not is_weakly_reversible(system):
        raise EmbeddingError("network is not weakly reversible", code='not_weakly_reversible')
    complexes = cycle.complexes(system) if cycle is not None else system.complexes
    _check_base(tier, x, complexes[0].coeffs if cycle is not None else tier.b)

    groups = _growth_groups(tier)
    for power, direction in groups.items():
        if rational_coordinates(system.net_changes, direction) is None:
            raise EmbeddingError(f"sequence direction {direction} leaves the stoichiometric span",
                                 code='conservation_obstruction',
                                 details={'direction': list(direction)})
    if not _has_comparable_pair(complexes):
        raise EmbeddingError("no comparable pair among the cycle complexes", code='no_comparable_pair')

    order = list(tier.constant) + list(tier.growth)
    lattice = stoichiometric_lattice(system, order)
    basis = [w for w in lattice if w.pivot in tier.growth]
    growth_coords = {}
    for power, direction in groups.items():
        coords = rational_coordinates([w.vector for w in basis], direction)
        if coords is None:
            raise EmbeddingError(f"direction {direction} not spanned by the restricted lattice",
                                 code='conservation_obstruction')
        growth_coords[power] = coords

    sequence = EmbeddedSequence(system, tier, x, 'adjusted', basis, growth_coords)
    logger.debug(f"embedding basis {[w.vector for w in basis]} for u={tier.u}")
    for n in range(1, n_check + 1):
        if sequence.witness(n) is None:
            sequence.witnesses[n] = None
            logger.warning(f"no reachability witness for n={n}")
    return sequence


def direct_sequence(system, tier, x, n_values):
    """
    Unadjusted x + (x_n - x_0) with the lattice check and explicit witnesses
    for each n in n_values.
    """
    x = tuple(int(v) for v in x)
    sequence = EmbeddedSequence(system, tier, x, 'direct')
    sequence.lattice = True
    basis = stoichiometric_lattice(system)
    for n in n_values:
        if not in_integer_span(sequence.drift(n), basis):
            sequence.lattice = False
            sequence.witnesses[n] = None
            continue
        try:
            path = sequence.witness(n)
        except KernelError:
            path = None
        if path is None:
            sequence.witnesses[n] = None
    return sequence


def membership_verified(sequence):
    return sequence.lattice and all(p is not None for p in sequence.witnesses.values())
