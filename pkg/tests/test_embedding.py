"""Sequence embedding into the class of a start state, lattice arithmetic and witnesses."""

import pytest

from modules.ctmc_engine import Path, TransitionKernel
from modules.embedding import (
    direct_sequence, embed_sequence, lattice_coefficients, membership_verified,
    rewrite_nonnegative, witness_path,
)
from modules.errors import EmbeddingError
from modules.tier_analysis import ReactionCycle, TierSpec


def _net(system, counts):
    return tuple(sum(c * r.net_change[i] for c, r in zip(counts, system.reactions))
                 for i in range(system.dim))


def test_structural4_sequence_moves_in_steps_of_three(networks):
    system = networks('structural4')
    sequence = embed_sequence(system, TierSpec((1, 0, 0), (0, 0, 0)), (0, 0, 0), n_check=5,
                              cycle=ReactionCycle((0, 1, 2)))
    assert sequence.method == 'adjusted'
    assert sequence.to_dict()['basis'] == [[3, 0, 0]]
    assert [sequence.state(n) for n in range(6)] == [(0, 0, 0)] * 3 + [(3, 0, 0)] * 3
    assert sequence.state(10) == (9, 0, 0)
    assert membership_verified(sequence)
    kernel = TransitionKernel(system)
    for n in (3, 4, 5):
        path = sequence.witnesses[n]
        assert path.start == (0, 0, 0) and path.end == (3, 0, 0)
        assert path.is_active(kernel)


# creation, two cycle steps, then 3C -> 2C three times: net (3, 0, 0)
LATTICE_STEP = (0, 1, 1, 4, 4, 4)


def test_lattice_step_order(networks):
    system = networks('structural4')
    assert system.reaction_label(4) == '3C -> 2C'
    kernel = TransitionKernel(system)
    path = Path.from_reactions(system, (1, 1, 3), LATTICE_STEP)
    assert path.end == (4, 1, 3)
    assert path.is_active(kernel)
    # the last 3C -> 2C would fire with two C
    short = Path.from_reactions(system, (1, 1, 1), LATTICE_STEP)
    assert short.end == (4, 1, 1)
    assert short.first_inactive(kernel) == 5
    # the second cycle step needs two B
    assert Path.from_reactions(system, (0, 0, 0), LATTICE_STEP).first_inactive(kernel) == 2


def test_example_sequence_runs_along_the_axis(abb):
    sequence = embed_sequence(abb, TierSpec((1, 0), (0, 0)), (0, 0), n_check=3,
                              cycle=ReactionCycle((0, 1)))
    assert [sequence.state(n) for n in range(4)] == [(0, 0), (1, 0), (2, 0), (3, 0)]
    path = sequence.witnesses[2]
    assert path.end == (2, 0)
    assert path.is_active(TransitionKernel(abb))


def test_conserved_difference_is_an_obstruction(networks):
    with pytest.raises(EmbeddingError) as exc:
        embed_sequence(networks('ab_only'), TierSpec((1, 0), (0, 0)), (0, 0),
                       cycle=ReactionCycle((0, 1)))
    assert exc.value.code == 'conservation_obstruction'
    assert exc.value.details['direction'] == [1, 0]


def test_base_state_must_match_constant_coordinates(abb):
    with pytest.raises(EmbeddingError) as exc:
        embed_sequence(abb, TierSpec((1, 0), (0, 0)), (3, 2), cycle=ReactionCycle((0, 1)))
    assert exc.value.code == 'bad_base_state'


def test_embedding_requires_weak_reversibility(networks):
    with pytest.raises(EmbeddingError) as exc:
        embed_sequence(networks('non_cycle'), TierSpec((1, 0), (0, 0)), (0, 0))
    assert exc.value.code == 'not_weakly_reversible'


def test_direct_sequence_with_explicit_witnesses(networks):
    system = networks('four_species')
    sequence = direct_sequence(system, TierSpec((1, 0, 1, 0), (0, 0, 0, 0)), (0, 0, 0, 0),
                               range(1, 4))
    assert sequence.method == 'direct'
    assert sequence.state(2) == (2, 0, 2, 0)
    assert membership_verified(sequence)
    assert sequence.witnesses[1].end == (1, 0, 1, 0)


def test_direct_sequence_off_the_lattice(networks):
    sequence = direct_sequence(networks('ab_only'), TierSpec((1, 0), (0, 0)), (0, 0), [1, 2])
    assert not sequence.lattice
    assert not membership_verified(sequence)


def test_lattice_coefficients_reproduce_the_vector(abb):
    counts = lattice_coefficients(abb, (1, 0))
    assert counts is not None
    assert all(isinstance(c, int) for c in counts)
    assert _net(abb, counts) == (1, 0)
    assert lattice_coefficients(abb, (0, 0)) == [0, 0, 0, 0]


def test_lattice_coefficients_off_lattice(networks):
    assert lattice_coefficients(networks('ab_only'), (1, 0)) is None


def test_rewrite_uses_return_paths(abb):
    counts = [1, 0, -1, 0]
    rewritten = rewrite_nonnegative(abb, counts)
    assert rewritten == [1, 0, 0, 1]
    assert _net(abb, rewritten) == _net(abb, counts)


def test_rewrite_fails_without_return_path(networks):
    assert rewrite_nonnegative(networks('non_cycle'), [-1, 0, 0, 0]) is None


def test_witness_path_edge_cases(abb):
    assert witness_path(abb, (2, 2), (2, 2)).states == ((2, 2),)
    assert witness_path(abb, (2, 2), (-1, 0)) is None
    path = witness_path(abb, (0, 0), (4, 0), multiplicities=[4, 0, 0, 0])
    assert path is not None and path.end == (4, 0)
