"""
Network Model
Value types for chemical reaction networks and mass-action intensities.

Complexes are nonnegative integer vectors in species declaration order.
All types are frozen after construction and safe to share across threads.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from modules.errors import NetworkError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Complex:
    """A formal nonnegative integer combination of species."""
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if any(c < 0 for c in coeffs):
            raise NetworkError(f"complex has a negative coefficient: {coeffs}",
                               code='invalid_complex')
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def zero(cls, dim):
        return cls((0,) * dim)

    @property
    def dim(self):
        return len(self.coeffs)

    @property
    def is_empty(self):
        return not any(self.coeffs)

    def dominated_by(self, x):
        """True when x >= self componentwise (the source can fire from x)."""
        return all(xi >= yi for xi, yi in zip(x, self.coeffs))

    def strictly_below(self, other):
        """Strict order used for cycle complexes: every coordinate smaller."""
        return all(a < b for a, b in zip(self.coeffs, other.coeffs))

    def comparable(self, other):
        return self.strictly_below(other) or other.strictly_below(self)

    def dot(self, u):
        return sum(a * b for a, b in zip(self.coeffs, u))

    def restrict(self, indices):
        return Complex(tuple(self.coeffs[i] for i in indices))

    def label(self, species):
        """Render as DSL text with species in alphabetical order, e.g. 'A+2B'."""
        terms = []
        for name, coeff in sorted(zip(species, self.coeffs)):
            if coeff == 1:
                terms.append(name)
            elif coeff > 1:
                terms.append(f"{coeff}{name}")
        return '+'.join(terms) if terms else '0'

    def __getitem__(self, i):
        return self.coeffs[i]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)


@dataclass(frozen=True)
class Reaction:
    source: Complex
    product: Complex
    rate: float = 1.0

    @property
    def net_change(self):
        return tuple(p - s for s, p in zip(self.source.coeffs, self.product.coeffs))

    @property
    def is_self_loop(self):
        return self.source == self.product

    def label(self, species):
        return f"{self.source.label(species)} -> {self.product.label(species)}"


@dataclass(frozen=True)
class ReactionSystem:
    """(species, complexes, reactions, rates) of a stochastic mass-action network."""
    species: tuple
    reactions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'species', tuple(self.species))
        object.__setattr__(self, 'reactions', tuple(self.reactions))

    @property
    def dim(self):
        return len(self.species)

    def __len__(self):
        return len(self.reactions)

    @cached_property
    def complexes(self):
        """Distinct complexes in order of first appearance (source before product)."""
        seen = {}
        for reaction in self.reactions:
            seen.setdefault(reaction.source, None)
            seen.setdefault(reaction.product, None)
        return tuple(seen)

    @cached_property
    def source_complexes(self):
        seen = {}
        for reaction in self.reactions:
            seen.setdefault(reaction.source, None)
        return tuple(seen)

    @cached_property
    def _by_source(self):
        table = {}
        for index, reaction in enumerate(self.reactions):
            table.setdefault(reaction.source, []).append(index)
        return {key: tuple(value) for key, value in table.items()}

    @cached_property
    def _by_pair(self):
        return {(r.source, r.product): i for i, r in enumerate(self.reactions)}

    def reactions_from(self, y):
        """Indices of the reactions with source complex y."""
        return self._by_source.get(y, ())

    def reaction_index(self, source, product):
        return self._by_pair.get((source, product))

    @cached_property
    def net_changes(self):
        return tuple(r.net_change for r in self.reactions)

    @property
    def min_rate(self):
        return min(r.rate for r in self.reactions) if self.reactions else 0.0

    def stoichiometric_matrix(self):
        """Integer d x |R| matrix whose columns are the net changes y' - y."""
        if not self.reactions:
            return np.zeros((self.dim, 0), dtype=np.int64)
        return np.array(self.net_changes, dtype=np.int64).T

    def complex_label(self, y):
        return y.label(self.species)

    def reaction_label(self, index):
        return self.reactions[index].label(self.species)

    def is_species_supported(self, y, species_indices):
        keep = set(species_indices)
        return all(c == 0 for i, c in enumerate(y.coeffs) if i not in keep)

    def project(self, species_indices, reaction_indices):
        """Subnetwork on a species subset, keeping the listed reactions."""
        species_indices = tuple(species_indices)
        reactions = []
        for index in reaction_indices:
            reaction = self.reactions[index]
            reactions.append(Reaction(reaction.source.restrict(species_indices),
                                      reaction.product.restrict(species_indices),
                                      reaction.rate))
        return ReactionSystem(tuple(self.species[i] for i in species_indices), tuple(reactions))

    def restrict(self, reaction_indices):
        return ReactionSystem(self.species, tuple(self.reactions[i] for i in reaction_indices))

    def _named(self):
        def as_dict(y):
            return tuple(sorted((self.species[i], c) for i, c in enumerate(y.coeffs) if c))
        return sorted((as_dict(r.source), as_dict(r.product), float(r.rate)) for r in self.reactions)

    def same_network(self, other):
        """Equality by species names, ignoring declaration and reaction order."""
        return set(self.species) == set(other.species) and self._named() == other._named()


# =============================================================================
# Mass-action intensities
# =============================================================================

def falling_product(y, x):
    """prod_i x_i!/(x_i - y_i)! in floating point; 0.0 when x is below y."""
    value = 1.0
    for yi, xi in zip(y, x):
        if xi < yi:
            return 0.0
        for k in range(yi):
            value *= (xi - k)
    return value


def falling_product_exact(y, x):
    value = 1
    for yi, xi in zip(y, x):
        if xi < yi:
            return 0
        for k in range(yi):
            value *= (xi - k)
    return value


def _check_dim(system, index, x):
    if len(x) != system.dim:
        raise NetworkError(
            f"state has dimension {len(x)} but reaction {index} expects {system.dim}",
            code='dimension_mismatch',
            details={'reaction': index, 'expected': system.dim, 'got': len(x)},
        )
    reaction = system.reactions[index]
    if reaction.source.dim != system.dim:
        raise NetworkError(
            f"reaction {index} has source dimension {reaction.source.dim}, expected {system.dim}",
            code='dimension_mismatch',
            details={'reaction': index, 'expected': system.dim, 'got': reaction.source.dim},
        )


def evaluate_intensity(system, index, x):
    """
    Mass-action intensity of reaction `index` at state x.

    Args:
        system: ReactionSystem
        index: reaction index
        x: nonnegative integer state vector

    Returns:
        kappa * prod_i x_i!/(x_i - y_i)!, or 0.0 when x does not dominate the source
    """
    _check_dim(system, index, x)
    reaction = system.reactions[index]
    return reaction.rate * falling_product(reaction.source.coeffs, x)


def evaluate_intensity_exact(system, index, x):
    """Combinatorial part of the intensity as an exact integer (rate excluded)."""
    _check_dim(system, index, x)
    return falling_product_exact(system.reactions[index].source.coeffs, x)


# =============================================================================
# Validation
# =============================================================================

@dataclass(frozen=True)
class Violation:
    kind: str
    reaction: int
    message: str

    def to_dict(self):
        return {'kind': self.kind, 'reaction': self.reaction, 'message': self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def kinds(self):
        return {v.kind for v in self.violations}

    def to_dict(self):
        return {'ok': self.ok, 'violations': [v.to_dict() for v in self.violations]}


def validate_network(system):
    """List every violated type invariant of a ReactionSystem."""
    violations = []
    seen = {}
    for index, reaction in enumerate(system.reactions):
        if reaction.source.dim != system.dim or reaction.product.dim != system.dim:
            violations.append(Violation(
                'dimension mismatch', index,
                f"reaction {index} has complexes of dimension "
                f"{reaction.source.dim}/{reaction.product.dim}, network has {system.dim} species"))
            continue
        if reaction.is_self_loop:
            violations.append(Violation('self-loop', index,
                                        f"reaction {index} ({reaction.label(system.species)}) is a self-loop"))
        if not reaction.rate > 0:
            violations.append(Violation('nonpositive rate', index,
                                        f"reaction {index} has rate {reaction.rate}"))
        key = (reaction.source, reaction.product)
        if key in seen:
            violations.append(Violation('duplicate reaction', index,
                                        f"reaction {index} duplicates reaction {seen[key]}"))
        else:
            seen[key] = index
    if violations:
        logger.debug(f"validation found {len(violations)} violation(s)")
    return ValidationReport(tuple(violations))
