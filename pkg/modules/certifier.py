"""
Certifier
End-to-end non-exponential ergodicity certificate for a network and a start
state: structural cycle, sequence embedding, trapping factor F(gamma, rho) > 1
and the ergodicity basis.
"""

import logging
from dataclasses import dataclass, field

from modules.corollaries import COROLLARY_RANK, catalytic_reduction, check_corollary_class
from modules.ctmc_engine import TransitionKernel, path_mgf
from modules.embedding import (
    LiftedSequence, connect_to_base, direct_sequence, embed_sequence, membership_verified,
)
from modules.errors import CertificationError, EmbeddingError, KernelError
from modules.graph_structure import deficiency, is_weakly_reversible
from modules.tier_analysis import (
    ReactionCycle, TierSpec, ratio_check, search_structural_certificate, strong_tier1_postchecks,
)

try:
    from config import DEFAULT_U_MAX, DEFAULT_MAX_CYCLE_LEN, DEFAULT_N_MAX, DEFAULT_N_CHECK
except ImportError:
    DEFAULT_U_MAX = 4
    DEFAULT_MAX_CYCLE_LEN = 6
    DEFAULT_N_MAX = 200
    DEFAULT_N_CHECK = 5

logger = logging.getLogger(__name__)

NO_CYCLE = "no strong tier-1 cycle"
CONSERVATION = "conservation obstruction"
NOT_VERIFIED = "membership not verified"
NO_N_STAR = "no n* up to n_max"


@dataclass
class StrongTier1Certificate:
    system: object          # chain the factor is evaluated on (reduced when a reduction applies)
    cycle: ReactionCycle
    tier: TierSpec
    m0: int
    rho: float
    n_star: int
    F_value: float
    sequence: object
    corollary: str
    ergodicity_basis: str
    x0: tuple
    full_system: object = None
    x0_full: tuple = None
    reduction: object = None
    search_bounds: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def F_margin(self):
        return self.F_value - 1.0

    def start_state(self, n=None):
        return self.sequence.state(self.n_star if n is None else n)

    def cycle_path(self, n=None):
        return self.cycle.path(self.system, self.start_state(n))

    def to_dict(self):
        system = self.system
        return {
            'cycle': self.cycle.to_list(system),
            'species': list(system.species),
            'u': list(self.tier.u),
            'b': list(self.tier.b),
            'm0': self.m0,
            'm0_complex': system.complex_label(self.cycle.complexes(system)[self.m0]),
            'rho': self.rho,
            'n_star': self.n_star,
            'x_star': list(self.start_state()),
            'F_value': self.F_value,
            'F_margin': self.F_margin,
            'membership': self.sequence.to_dict(),
            'ergodicity_basis': self.ergodicity_basis,
            'corollary': self.corollary,
            'reduction': (self.reduction.to_dict(self.full_system) if self.reduction else None),
            'search_bounds': self.search_bounds,
            'x0': list(self.x0_full if self.x0_full is not None else self.x0),
            'warnings': list(self.warnings),
        }


@dataclass
class CertificationResult:
    certificate: StrongTier1Certificate = None
    reason: str = None
    corollary: str = None

    @property
    def ok(self):
        return self.certificate is not None

    def to_dict(self):
        if self.ok:
            return {'ok': True, 'certificate': self.certificate.to_dict()}
        return {'ok': False, 'reason': self.reason, 'corollary': self.corollary}


# =============================================================================
# Pipeline stages
# =============================================================================

def _select_candidate(system, u_max, max_len):
    """
    (kind, candidate, reduction) by corollary rank; direct check wins ties.

    Returns (None, None, None) when nothing is found.
    """
    direct = check_corollary_class(system)
    reduction = catalytic_reduction(system, proper_only=True, u_max=u_max, max_len=max_len)
    direct_rank = COROLLARY_RANK.get(direct.kind, float('inf'))
    reduced_rank = COROLLARY_RANK.get(reduction.kind, float('inf')) if reduction else float('inf')
    if direct.found and direct_rank <= reduced_rank:
        return direct.kind, direct.candidate, None
    if reduction is not None:
        return reduction.kind, reduction.candidate, reduction
    candidate = search_structural_certificate(system, u_max, max_len)
    if candidate is None:
        return None, None, None
    return 'search', candidate, None


def _embed(system, candidate, x, n_check):
    """Embedded sequence for the candidate; cor4 embeds on its two-species subnetwork."""
    cycle, tier = candidate.cycle, candidate.tier
    sub_info = candidate.witnesses.get('subnetwork') if candidate.source == 'cor4' else None
    if sub_info is not None:
        species = tuple(system.species.index(name) for name in sub_info['species'])
        reactions = list(sub_info['reactions'])
        sub = system.project(species, reactions)
        sub_cycle = ReactionCycle(tuple(reactions.index(i) for i in cycle.reactions))
        sub_tier = TierSpec(tuple(tier.u[i] for i in species), tuple(tier.b[i] for i in species))
        inner = _embed_on(sub, sub_cycle, sub_tier, tuple(x[i] for i in species), n_check)
        return LiftedSequence(inner, species, tuple(x))
    return _embed_on(system, cycle, tier, x, n_check)


def _embed_on(system, cycle, tier, x, n_check):
    try:
        return embed_sequence(system, tier, x, n_check, cycle=cycle)
    except EmbeddingError as e:
        if e.code == 'conservation_obstruction':
            raise
        logger.warning(f"embedding unavailable ({e.code}); using direct membership evidence")
        return direct_sequence(system, tier, x, range(1, n_check + 1))


def _scan_n_star(kernel, cycle, sequence, rho, n_max):
    for n in range(1, n_max + 1):
        path = cycle.path(kernel.system, sequence.state(n))
        if any(v < 0 for state in path.states for v in state) or not path.is_active(kernel):
            continue
        try:
            value = path_mgf(kernel, path, rho)
        except KernelError:
            continue
        if value > 1.0:
            return n, value
    return None, None


def ergodicity_basis(system):
    if is_weakly_reversible(system) and deficiency(system).delta == 0:
        return 'zero-deficiency-weakly-reversible'
    return 'assumed'


# =============================================================================
# Entry point
# =============================================================================

def certify_nonexponential(system, x0=None, rho=None, u_max=DEFAULT_U_MAX,
                           max_len=DEFAULT_MAX_CYCLE_LEN, n_max=DEFAULT_N_MAX,
                           n_check=DEFAULT_N_CHECK):
    """
    Search for a certificate that the chain started at x0 is not exponentially ergodic.

    Args:
        system: ReactionSystem
        x0: start state; defaults to the base b of the tier sequence. Other
            starts are first connected to a state the sequence can start from
        rho: exponent of the trapping factor; defaults to half the smallest rate
        u_max, max_len: structural search bounds
        n_max: last sequence index scanned for F > 1
        n_check: sequence indices with explicit reachability witnesses

    Returns:
        CertificationResult; `reason` is set when no certificate is issued

    Raises:
        CertificationError: rho outside (0, min rate), negative x0
    """
    if x0 is not None:
        x0 = tuple(int(v) for v in x0)
        if len(x0) != system.dim or any(v < 0 for v in x0):
            raise CertificationError(f"initial state {x0} must be {system.dim} nonnegative integers")
    if not system.reactions:
        return CertificationResult(reason=NO_CYCLE)

    kind, candidate, reduction = _select_candidate(system, u_max, max_len)
    if candidate is None:
        logger.info("no strong tier-1 cycle found")
        return CertificationResult(reason=NO_CYCLE)

    chain = reduction.subnetwork if reduction else system
    cycle, tier, m0 = candidate.cycle, candidate.tier, candidate.m0
    if x0 is None:
        x_chain = tuple(tier.b)
        if reduction:
            full = [0] * system.dim
            for i, v in zip(reduction.species, x_chain):
                full[i] = v
            x_full = tuple(full)
        else:
            x_full = x_chain
    else:
        x_full = x0
        x_chain = reduction.restrict_state(x0) if reduction else x0

    min_rate = chain.min_rate
    rho = 0.5 * min_rate if rho is None else float(rho)
    if not 0 < rho < min_rate:
        raise CertificationError(f"rho must lie in (0, {min_rate}), got {rho}",
                                 details={'rho': rho, 'min_rate': min_rate})

    connector = connect_to_base(chain, tier, x_chain, cycle.complexes(chain)[0].coeffs)
    base = connector.end if connector is not None else x_chain
    try:
        sequence = _embed(chain, candidate, base, n_check)
    except EmbeddingError as e:
        logger.info(f"embedding failed: {e.message}")
        return CertificationResult(reason=CONSERVATION, corollary=kind)
    if connector is not None and len(connector) > 1:
        sequence.connector = connector
    if not membership_verified(sequence):
        return CertificationResult(reason=NOT_VERIFIED, corollary=kind)

    kernel = TransitionKernel(chain, cache_size=10_000)
    n_star, value = _scan_n_star(kernel, cycle, sequence, rho, n_max)
    if n_star is None:
        return CertificationResult(reason=NO_N_STAR, corollary=kind)
    if sequence.method == 'direct' and n_star not in sequence.witnesses:
        if sequence.witness(n_star) is None:
            return CertificationResult(reason=NOT_VERIFIED, corollary=kind)

    warnings = strong_tier1_postchecks(chain, cycle, tier, m0)
    warnings += ratio_check(chain, cycle, tier, m0)
    for message in warnings:
        logger.warning(f"post-check: {message}")

    certificate = StrongTier1Certificate(
        system=chain, cycle=cycle, tier=tier, m0=m0, rho=rho, n_star=n_star, F_value=value,
        sequence=sequence, corollary=kind, ergodicity_basis=ergodicity_basis(system),
        x0=x_chain, full_system=system, x0_full=x_full, reduction=reduction,
        search_bounds={'u_max': u_max, 'max_len': max_len, 'n_max': n_max, 'n_check': n_check},
        warnings=warnings,
    )
    logger.info(f"certificate issued ({kind}): n*={n_star}, F={value:.6g}, rho={rho}")
    return CertificationResult(certificate, corollary=kind)
