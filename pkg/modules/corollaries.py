"""
Corollary Checks
Readable structural classes that guarantee a strong tier-1 cycle, and the
catalytic subnetwork reduction.

    cor1  weakly reversible, all complexes totally ordered, a cycle through 0
          with singleton reaction sets, some unit vector in the span
    cor2  two species, the network is one totally ordered cycle with the
          ordered-gap inequality and a two-dimensional span
    cor3  two species, weakly reversible, a totally ordered cycle as in cor2
          and every other complex above the staircase f
    cor4  a two-species weakly reversible cor3 subnetwork, every other complex
          above f or carrying a third species

Complex order is strict in every coordinate. Each satisfied class yields
u = e_{i1}, b = y*_1 and m0 at the smallest cycle complex (0 for cor1).
"""

import bisect
import itertools
import logging
from dataclasses import dataclass, field

import sympy

from modules.graph_structure import is_weakly_reversible, stoichiometric_rank
from modules.tier_analysis import (
    StructuralCandidate, TierSpec, enumerate_cycles, search_structural_certificate,
    verify_strong_tier1,
)

try:
    from config import DEFAULT_U_MAX, DEFAULT_MAX_CYCLE_LEN
except ImportError:
    DEFAULT_U_MAX = 4
    DEFAULT_MAX_CYCLE_LEN = 6

logger = logging.getLogger(__name__)

COROLLARY_RANK = {'cor1': 1, 'cor2': 2, 'cor3': 3, 'cor4': 4, 'search': 5}


@dataclass(frozen=True)
class StaircaseF:
    """
    Piecewise-constant f built from ordered complexes on axes (i1, i2).

    f(l) = 0 below the first breakpoint, (y_m)_{i2} on [(y_m)_{i1}, (y_{m+1})_{i1})
    and (y_M)_{i2} from the last breakpoint on.
    """
    ordered: tuple
    i1: int
    i2: int

    @property
    def breakpoints(self):
        return [(y[self.i1], y[self.i2]) for y in self.ordered]

    def __call__(self, level):
        firsts = [y[self.i1] for y in self.ordered]
        if level < firsts[0]:
            return 0
        return self.ordered[bisect.bisect_right(firsts, level) - 1][self.i2]


@dataclass
class CorollaryReport:
    kind: str = 'none'
    candidate: StructuralCandidate = None
    witnesses: dict = field(default_factory=dict)

    @property
    def found(self):
        return self.kind != 'none'

    def to_dict(self):
        return {'corollary': self.kind, 'witnesses': self.witnesses}


# =============================================================================
# Helpers
# =============================================================================

def _chain(complexes):
    """Complexes sorted increasingly if they form a strict chain, else None."""
    ordered = sorted((tuple(y.coeffs) for y in complexes), key=sum)
    for a, b in zip(ordered, ordered[1:]):
        if not all(x < y for x, y in zip(a, b)):
            return None
    return ordered


def _gap_holds(ordered, i1):
    base = ordered[0][i1]
    return all(ordered[lo][i1] < ordered[hi][i1] - base
               for lo, hi in itertools.combinations(range(len(ordered)), 2))


def _unit_directions(system):
    """Indices i with e_i in the span of the net changes."""
    matrix = sympy.Matrix(system.stoichiometric_matrix().tolist())
    rank = matrix.rank()
    found = []
    for i in range(system.dim):
        unit = sympy.Matrix([[int(i == j)] for j in range(system.dim)])
        if matrix.row_join(unit).rank() == rank:
            found.append(i)
    return found


def _singleton_sources(system, cycle):
    return all(system.reactions_from(system.reactions[i].source) == (i,) for i in cycle.reactions)


def _all_cycles(system):
    return enumerate_cycles(system, max(2, len(system.complexes)))


def _candidate(system, cycle, i1, anchor, source):
    """Tier u = e_{i1}, b = y*_1, m0 at `anchor`; kept only if the degree test agrees."""
    ys = cycle.complexes(system)
    u = tuple(int(j == i1) for j in range(system.dim))
    tier = TierSpec(u, ys[0].coeffs)
    m0 = next(m for m, y in enumerate(ys) if tuple(y.coeffs) == tuple(anchor))
    if not verify_strong_tier1(system, cycle, tier, m0).ok:
        logger.warning(f"{source}: hypotheses hold but degree test failed for cycle {cycle.reactions}")
        return None
    return StructuralCandidate(cycle, tier, m0, source=source)


# =============================================================================
# Corollary classes
# =============================================================================

def _check_cor1(system):
    if not is_weakly_reversible(system) or _chain(system.complexes) is None:
        return None
    directions = _unit_directions(system)
    if not directions:
        return None
    empty = (0,) * system.dim
    for cycle in _all_cycles(system):
        ys = [tuple(y.coeffs) for y in cycle.complexes(system)]
        if empty not in ys or not _singleton_sources(system, cycle):
            continue
        for i1 in directions:
            candidate = _candidate(system, cycle, i1, empty, 'cor1')
            if candidate:
                return candidate, {'i1': i1, 'unit_directions': directions}
    return None


def _cor3_options(system, require_wr=True):
    """All (cycle, i1, ordered) meeting the two-species cycle conditions 1-4."""
    if system.dim != 2 or (require_wr and not is_weakly_reversible(system)):
        return []
    if stoichiometric_rank(system) != 2:
        return []
    options = []
    for cycle in _all_cycles(system):
        if not _singleton_sources(system, cycle):
            continue
        ordered = _chain(cycle.complexes(system))
        if ordered is None:
            continue
        for i1 in (0, 1):
            if _gap_holds(ordered, i1):
                options.append((cycle, i1, ordered))
    return options


def _check_cor2(system):
    if system.dim != 2 or stoichiometric_rank(system) != 2:
        return None
    for cycle in _all_cycles(system):
        if sorted(cycle.reactions) != list(range(len(system.reactions))):
            continue
        if set(cycle.complexes(system)) != set(system.complexes):
            continue
        ordered = _chain(cycle.complexes(system))
        if ordered is None:
            continue
        for i1 in (0, 1):
            if _gap_holds(ordered, i1):
                candidate = _candidate(system, cycle, i1, ordered[0], 'cor2')
                if candidate:
                    return candidate, {'i1': i1, 'i2': 1 - i1, 'ordered': [list(y) for y in ordered]}
    return None


def _above_staircase(y, f, i1, i2, base):
    return y[i2] > f(y[i1] + base)


def _check_cor3(system):
    for cycle, i1, ordered in _cor3_options(system):
        i2 = 1 - i1
        f = StaircaseF(tuple(ordered), i1, i2)
        cycle_complexes = set(cycle.complexes(system))
        others = [y for y in system.complexes if y not in cycle_complexes]
        if all(_above_staircase(y.coeffs, f, i1, i2, ordered[0][i1]) for y in others):
            candidate = _candidate(system, cycle, i1, ordered[0], 'cor3')
            if candidate:
                return candidate, {'i1': i1, 'i2': i2, 'breakpoints': [list(p) for p in f.breakpoints]}
    return None


def _supported_reactions(system, species):
    return [i for i, r in enumerate(system.reactions)
            if system.is_species_supported(r.source, species)
            and system.is_species_supported(r.product, species)]


def _check_cor4(system):
    if system.dim < 3 or not is_weakly_reversible(system):
        return None
    for pair in itertools.combinations(range(system.dim), 2):
        reactions = _supported_reactions(system, pair)
        if not reactions:
            continue
        sub = system.project(pair, reactions)
        for cycle, i1_local, ordered in _cor3_options(sub):
            i2_local = 1 - i1_local
            f = StaircaseF(tuple(ordered), i1_local, i2_local)
            others_sub = set(sub.complexes) - set(cycle.complexes(sub))
            if not all(_above_staircase(y.coeffs, f, i1_local, i2_local, ordered[0][i1_local])
                       for y in others_sub):
                continue
            i1, i2 = pair[i1_local], pair[i2_local]
            sub_complexes = {system.reactions[i].source for i in reactions} | \
                            {system.reactions[i].product for i in reactions}
            rest = [k for k in range(system.dim) if k not in pair]
            escaped = all(
                y[i2] > f(y[i1] + ordered[0][i1_local]) or any(y[k] > 0 for k in rest)
                for y in system.complexes if y not in sub_complexes
            )
            if not escaped:
                continue
            lifted = type(cycle)(tuple(reactions[k] for k in cycle.reactions))
            anchor = [0] * system.dim
            anchor[i1], anchor[i2] = ordered[0][i1_local], ordered[0][i2_local]
            candidate = _candidate(system, lifted, i1, anchor, 'cor4')
            if candidate:
                return candidate, {
                    'i1': i1, 'i2': i2,
                    'breakpoints': [list(p) for p in f.breakpoints],
                    'subnetwork': {'species': [system.species[k] for k in pair],
                                   'reactions': list(reactions)},
                }
    return None


_CHECKS = (('cor1', _check_cor1), ('cor2', _check_cor2), ('cor3', _check_cor3), ('cor4', _check_cor4))


def check_corollary_class(system):
    """
    First corollary class (cor1..cor4) whose hypotheses the network meets.

    Returns:
        CorollaryReport; kind 'none' when no class applies
    """
    if system.dim < 2 or not system.reactions:
        return CorollaryReport()
    for kind, check in _CHECKS:
        hit = check(system)
        if hit is not None:
            candidate, witnesses = hit
            candidate.witnesses.update(witnesses)
            witnesses = dict(witnesses, cycle=candidate.cycle.to_list(system),
                             u=list(candidate.tier.u), m0=candidate.m0)
            logger.info(f"network satisfies {kind}")
            return CorollaryReport(kind, candidate, witnesses)
    return CorollaryReport()


# =============================================================================
# Catalytic reduction
# =============================================================================

@dataclass
class Reduction:
    species: tuple
    reactions: tuple
    subnetwork: object
    kind: str
    candidate: StructuralCandidate
    full_dim: int = 0

    @property
    def is_proper(self):
        return len(self.species) < self.full_dim

    def restrict_state(self, x):
        return tuple(x[i] for i in self.species)

    def to_dict(self, system):
        return {
            'species': [system.species[i] for i in self.species],
            'reactions': list(self.reactions),
            'corollary': self.kind,
        }


def catalytic_reduction(system, proper_only=False, u_max=DEFAULT_U_MAX,
                        max_len=DEFAULT_MAX_CYCLE_LEN):
    """
    Largest species subset whose own reactions pass a corollary or the search
    while every other reaction leaves those species unchanged.

    Args:
        proper_only: skip the trivial decomposition (all species)

    Returns:
        Reduction, or None
    """
    top = system.dim - 1 if proper_only else system.dim
    for size in range(top, 0, -1):
        for species in itertools.combinations(range(system.dim), size):
            reactions = _supported_reactions(system, species)
            if not reactions:
                continue
            inside = set(reactions)
            catalytic = all(
                all(system.reactions[j].net_change[i] == 0 for i in species)
                for j in range(len(system.reactions)) if j not in inside
            )
            if not catalytic:
                continue
            sub = system.project(species, reactions)
            report = check_corollary_class(sub)
            if report.found:
                kind, candidate = report.kind, report.candidate
            else:
                candidate = search_structural_certificate(sub, u_max, max_len)
                kind = 'search'
            if candidate is None:
                continue
            logger.info(f"catalytic reduction onto {[system.species[i] for i in species]} ({kind})")
            return Reduction(tuple(species), tuple(reactions), sub, kind, candidate, system.dim)
    return None
