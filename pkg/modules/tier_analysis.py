"""
Tier Analysis Module
Strong tier-1 cycles along symbolic tier sequences.

A TierSpec describes x_n with (x_n)_i = n^{u_i} + b_i on the growth set I and
b_i elsewhere. Along such a sequence every mass-action intensity is either
identically zero ("blocked" by a constant coordinate) or a polynomial in n of
degree <u, y>, so the dominance condition that traps the chain on a reaction
cycle reduces to exact integer inequalities.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from modules.ctmc_engine import Path
from modules.errors import TierError
from modules.graph_structure import complex_graph
from modules.net_model import falling_product_exact

try:
    from config import DEFAULT_U_MAX, DEFAULT_MAX_CYCLE_LEN, RATIO_CHECK_POINTS, WORKERS
except ImportError:
    DEFAULT_U_MAX = 4
    DEFAULT_MAX_CYCLE_LEN = 6
    RATIO_CHECK_POINTS = (100, 1000, 10000)
    WORKERS = 1

logger = logging.getLogger(__name__)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


# =============================================================================
# Tier sequences and cycles
# =============================================================================

@dataclass(frozen=True)
class TierSpec:
    u: tuple
    b: tuple

    def __post_init__(self):
        u = tuple(int(v) for v in self.u)
        b = tuple(int(v) for v in self.b)
        if len(u) != len(b):
            raise TierError(f"u and b differ in length ({len(u)} vs {len(b)})", code='invalid_tier')
        if any(v < 0 for v in u) or any(v < 0 for v in b):
            raise TierError("u and b must be nonnegative", code='invalid_tier')
        growth = sum(1 for v in u if v > 0)
        if growth == 0 or growth == len(u):
            raise TierError(f"growth set of u={u} must be a nonempty proper subset",
                            code='invalid_tier')
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 'b', b)

    @property
    def growth(self):
        return tuple(i for i, v in enumerate(self.u) if v > 0)

    @property
    def constant(self):
        return tuple(i for i, v in enumerate(self.u) if v == 0)

    def state(self, n):
        return tuple(n ** ui + bi if ui > 0 else bi for ui, bi in zip(self.u, self.b))

    def shifted(self, n, shift):
        return _add(self.state(n), shift)

    def degree(self, y):
        return sum(ui * yi for ui, yi in zip(self.u, y))

    def to_dict(self):
        return {'u': list(self.u), 'b': list(self.b), 'growth': list(self.growth)}


@dataclass(frozen=True)
class ReactionCycle:
    """Reaction indices y*_1 -> y*_2 -> ... -> y*_M -> y*_1."""
    reactions: tuple

    def __len__(self):
        return len(self.reactions)

    def validate(self, system):
        if len(self.reactions) < 2:
            raise TierError("a reaction cycle needs at least two reactions", code='invalid_cycle')
        for m, index in enumerate(self.reactions):
            following = system.reactions[self.reactions[(m + 1) % len(self.reactions)]]
            if system.reactions[index].product != following.source:
                raise TierError(f"step {m} does not feed step {(m + 1) % len(self.reactions)}",
                                code='invalid_cycle')

    def complexes(self, system):
        return tuple(system.reactions[i].source for i in self.reactions)

    def shift(self, system, m):
        """y*_m - y*_1: offset of the m-th shifted sequence."""
        ys = self.complexes(system)
        return _sub(ys[m].coeffs, ys[0].coeffs)

    def path(self, system, x):
        """Cycle path x -> x + y*_2 - y*_1 -> ... -> x."""
        states = [tuple(x)]
        for m in range(1, len(self.reactions)):
            states.append(_add(x, self.shift(system, m)))
        states.append(tuple(x))
        return Path(tuple(states))

    def firing(self, start, stop):
        """Reaction indices fired going from position `start` to position `stop` (cyclically)."""
        order = []
        m = start
        while m != stop:
            order.append(self.reactions[m])
            m = (m + 1) % len(self.reactions)
        return order

    def to_list(self, system):
        return [[system.complex_label(system.reactions[i].source),
                 system.complex_label(system.reactions[i].product)] for i in self.reactions]


def enumerate_cycles(system, max_len=DEFAULT_MAX_CYCLE_LEN):
    """
    Directed cycles of the complex digraph with at most max_len reactions.

    Each cycle is rotated to start at its smallest reaction index; the list
    is ordered by (length, reaction indices).
    """
    if max_len < 2:
        raise TierError(f"max_len must be at least 2, got {max_len}", code='invalid_bound')
    graph = complex_graph(system)
    cycles = []
    for nodes in nx.simple_cycles(graph, length_bound=max_len):
        if len(nodes) < 2:
            continue
        indices = [graph.edges[a, b]['reaction'] for a, b in zip(nodes, nodes[1:] + nodes[:1])]
        k = indices.index(min(indices))
        cycles.append(ReactionCycle(tuple(indices[k:] + indices[:k])))
    cycles.sort(key=lambda c: (len(c), c.reactions))
    return cycles


# =============================================================================
# Degree arithmetic
# =============================================================================

def intensity_degree(y, tier, shift):
    """
    Degree in n of lambda_y along x_n + shift.

    Returns:
        None when some constant coordinate is below y (intensity identically
        zero), otherwise <u, y>
    """
    coeffs = getattr(y, 'coeffs', y)
    for i in tier.constant:
        value = tier.b[i] + shift[i]
        if value < 0:
            raise TierError(f"constant coordinate {i} is negative after shift ({value})",
                            code='negative_constant')
        if value < coeffs[i]:
            return None
    return tier.degree(coeffs)


@dataclass(frozen=True)
class TierViolation:
    m: int
    reaction: int
    lhs: int
    rhs: int
    kind: str = 'dominance'

    def to_dict(self):
        return {'m': self.m, 'reaction': self.reaction, 'lhs': self.lhs, 'rhs': self.rhs,
                'kind': self.kind}


@dataclass(frozen=True)
class TierCheck:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def verify_strong_tier1(system, cycle, tier, m0, stop_early=False):
    """
    Degree form of the strong tier-1 condition.

    For every position m and every reaction y -> y' other than the cycle step
    at m: the competitor is blocked along x^m_n, or
    <u, y*_{m0}> + <u, y> < <u, y*_m>.

    Returns:
        TierCheck with the violating (m, reaction) pairs
    """
    cycle.validate(system)
    if not 0 <= m0 < len(cycle):
        raise TierError(f"m0={m0} out of range for a cycle of length {len(cycle)}",
                        code='m0_out_of_range')
    ys = cycle.complexes(system)
    violations = []
    if any(bi < yi for bi, yi in zip(tier.b, ys[0].coeffs)):
        violations.append(TierViolation(0, cycle.reactions[0], 0, 0, kind='base_below_source'))
        return TierCheck(False, tuple(violations))
    anchor = tier.degree(ys[m0].coeffs)
    for m, step in enumerate(cycle.reactions):
        shift = cycle.shift(system, m)
        bound = tier.degree(ys[m].coeffs)
        for index, reaction in enumerate(system.reactions):
            if index == step:
                continue
            degree = intensity_degree(reaction.source, tier, shift)
            if degree is None:
                continue
            if not anchor + degree < bound:
                violations.append(TierViolation(m, index, anchor + degree, bound))
                if stop_early:
                    return TierCheck(False, tuple(violations))
    return TierCheck(not violations, tuple(violations))


# =============================================================================
# Structural search
# =============================================================================

@dataclass(frozen=True)
class StructuralCandidate:
    cycle: ReactionCycle
    tier: TierSpec
    m0: int
    source: str = 'search'
    witnesses: dict = field(default_factory=dict, compare=False)

    def to_dict(self, system):
        return {'cycle': self.cycle.to_list(system), 'u': list(self.tier.u),
                'b': list(self.tier.b), 'm0': self.m0, 'source': self.source}


def _singleton_sources(system, cycle):
    return all(system.reactions_from(system.reactions[i].source) == (i,) for i in cycle.reactions)


def _u_grid(dim, u_max):
    for u in itertools.product(range(u_max + 1), repeat=dim):
        growth = sum(1 for v in u if v > 0)
        if 0 < growth < dim:
            yield u


def _search_cycle(system, cycle, u_max):
    if not _singleton_sources(system, cycle):
        return None
    base = cycle.complexes(system)[0].coeffs
    for u in _u_grid(system.dim, u_max):
        tier = TierSpec(u, base)
        for m0 in range(len(cycle)):
            if verify_strong_tier1(system, cycle, tier, m0, stop_early=True).ok:
                return StructuralCandidate(cycle, tier, m0)
    return None


def search_structural_certificate(system, u_max=DEFAULT_U_MAX, max_len=DEFAULT_MAX_CYCLE_LEN,
                                  workers=WORKERS):
    """
    Exhaustive search for (cycle, u, m0) passing verify_strong_tier1 with b = y*_1.

    Cycles are tried in (length, reaction indices) order, u lexicographically
    over {0..u_max}^d with a nonempty proper growth set, then m0. Cycles are
    searched concurrently; the first hit in that order is returned.
    """
    if u_max < 1:
        raise TierError(f"u_max must be at least 1, got {u_max}", code='invalid_bound')
    if system.dim < 2:
        return None
    cycles = enumerate_cycles(system, max_len)
    logger.debug(f"searching {len(cycles)} cycle(s) with u_max={u_max}")
    if workers > 1 and len(cycles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _search_cycle(system, c, u_max), cycles))
    else:
        results = []
        for cycle in cycles:
            found = _search_cycle(system, cycle, u_max)
            results.append(found)
            if found is not None:
                break
    for candidate in results:
        if candidate is not None:
            logger.info(f"strong tier-1 cycle found: reactions {candidate.cycle.reactions}, "
                        f"u={candidate.tier.u}, m0={candidate.m0}")
            return candidate
    return None


# =============================================================================
# Certificate post-checks
# =============================================================================

def strong_tier1_postchecks(system, cycle, tier, m0, sample_n=(1, 10, 100)):
    """
    Consequences a strong tier-1 cycle must have, checked at sampled n.

    Returns:
        list of failure messages (empty when all hold)
    """
    failures = []
    ys = cycle.complexes(system)
    if not tier.constant:
        failures.append("constant index set is empty")
    for m, step in enumerate(cycle.reactions):
        if system.reactions_from(ys[m]) != (step,):
            failures.append(f"source {system.complex_label(ys[m])} has more than one reaction")
    for n in sample_n:
        for m in range(len(cycle)):
            x = tier.shifted(n, cycle.shift(system, m))
            if falling_product_exact(ys[m].coeffs, x) <= 0:
                failures.append(f"cycle step {m} not enabled at n={n}")
        anchor_state = tier.shifted(n, cycle.shift(system, m0))
        for y in system.source_complexes:
            if y != ys[m0] and falling_product_exact(y.coeffs, anchor_state) > 0:
                failures.append(f"source {system.complex_label(y)} enabled at the anchor state, n={n}")
    return failures


def dominance_ratios(system, cycle, tier, m0, points=RATIO_CHECK_POINTS):
    """
    lambda_{y*_m0}(x^m0_n) * lambda_y(x^m_n) / lambda_{y*_m}(x^m_n) at each n in points.

    Evaluated from exact integer falling factorials. Keys are (m, reaction)
    for every competitor that is not blocked.
    """
    ys = cycle.complexes(system)
    rates = [r.rate for r in system.reactions]
    anchor_step = cycle.reactions[m0]
    table = {}
    for m, step in enumerate(cycle.reactions):
        shift = cycle.shift(system, m)
        for index, reaction in enumerate(system.reactions):
            if index == step or intensity_degree(reaction.source, tier, shift) is None:
                continue
            values = []
            for n in points:
                x_anchor = tier.shifted(n, cycle.shift(system, m0))
                x_m = tier.shifted(n, shift)
                ratio = Fraction(falling_product_exact(ys[m0].coeffs, x_anchor)
                                 * falling_product_exact(reaction.source.coeffs, x_m),
                                 falling_product_exact(ys[m].coeffs, x_m))
                values.append(float(ratio) * rates[anchor_step] * rates[index] / rates[step])
            table[(m, index)] = values
    return table


def ratio_check(system, cycle, tier, m0, points=RATIO_CHECK_POINTS, threshold=0.1):
    """Failures of 'ratio below threshold and decreasing' over the sample points."""
    failures = []
    for (m, index), values in dominance_ratios(system, cycle, tier, m0, points).items():
        if any(v >= threshold for v in values) or any(b >= a for a, b in zip(values, values[1:])):
            failures.append(f"competitor {system.reaction_label(index)} at step {m}: ratios {values}")
    return failures
