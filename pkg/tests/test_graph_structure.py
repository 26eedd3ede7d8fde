"""Complex digraph structure, deficiency, balance witnesses and integer lattices."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from modules.ctmc_engine import TransitionKernel, TruncatedSpace, product_poisson
from modules.graph_structure import (
    complex_path, conservation_laws, deficiency, in_integer_span, integer_kernel_basis,
    is_reversible, is_weakly_reversible, lattice_basis, linkage_classes, rational_coordinates,
    solve_complex_balance, solve_detailed_balance,
)
from modules.net_model import Complex
from modules.net_parser import parse_network


def test_linkage_classes_of_example(abb):
    classes = linkage_classes(abb)
    assert [[abb.complex_label(y) for y in c] for c in classes] == [['0', 'A+B'], ['B', '2B']]


def test_weak_reversibility(abb, networks):
    assert is_weakly_reversible(abb)
    assert is_reversible(abb)
    assert is_weakly_reversible(networks('structure2'))
    assert not is_reversible(networks('structure2'))
    assert not is_weakly_reversible(networks('non_cycle'))


def test_complex_path_follows_reactions(networks):
    system = networks('structure2')
    start, end = system.reactions[0].source, system.reactions[2].source
    assert complex_path(system, start, end) == [0, 1]
    assert complex_path(system, start, Complex((9, 9))) is None


def test_deficiency_of_complex_balanced_network(networks):
    report = deficiency(networks('complex_balanced'))
    assert (report.n, report.linkage, report.s, report.delta) == (5, 2, 3, 0)
    assert report.to_dict() == {'n': 5, 'linkage_classes': 2, 's': 3, 'deficiency': 0}


@pytest.mark.parametrize('name, delta', [
    ('abb', 0), ('structural1', 0), ('structure2', 0), ('comparison', 0), ('ab_only', 0),
])
def test_deficiency_of_reference_networks(networks, name, delta):
    assert deficiency(networks(name)).delta == delta


def test_detailed_balance_of_example(abb):
    witness = solve_detailed_balance(abb)
    assert witness is not None
    assert witness.kind == 'detailed'
    assert witness.c == pytest.approx((1.0, 1.0), abs=1e-12)


def test_detailed_balance_with_rates():
    system = parse_network("0 <-> A [2, 1]\nA <-> 2A [3, 1.5]")
    witness = solve_detailed_balance(system)
    assert witness.c == pytest.approx((2.0,), rel=1e-10)


def test_detailed_balance_absent_for_irreversible(networks):
    assert solve_detailed_balance(networks('structure2')) is None


def test_detailed_balance_inconsistent_cycle():
    system = parse_network("0 <-> A [1, 1]\nA <-> 2A [5, 1]")
    assert solve_detailed_balance(system) is None


def test_product_poisson_satisfies_detailed_balance(abb):
    kernel = TransitionKernel(abb)
    space = TruncatedSpace((20, 20))
    pi = product_poisson((1.0, 1.0), space)
    for z in space.states:
        for w, rate in kernel.out_transitions(z):
            if space.contains(w):
                back = kernel.rate(w, z)
                assert rate * pi.mass_at(z) == pytest.approx(back * pi.mass_at(w), abs=1e-10)


def test_complex_balance_of_zero_deficiency_cycle(networks):
    system = networks('structure2')
    witness = solve_complex_balance(system)
    assert witness is not None
    assert witness.kind == 'complex'
    assert all(v > 0 for v in witness.c)
    assert witness.residual < 1e-8


def test_complex_balance_requires_weak_reversibility(networks):
    assert solve_complex_balance(networks('non_cycle')) is None


def test_integer_kernel_basis_anchor():
    basis = integer_kernel_basis([[1, 2, 3]])
    assert len(basis) == 2
    A = np.array([[1, 2, 3]])
    for v in basis:
        assert (A @ np.array(v) == 0).all()
    assert np.linalg.matrix_rank(np.array(basis)) == 2
    assert integer_kernel_basis([[1, 0], [0, 1]]) == []


def test_conservation_laws(networks):
    assert conservation_laws(networks('ab_only')) == [(1, -1)]
    assert conservation_laws(networks('abb')) == []


def test_lattice_basis_detects_index():
    # 2-species part of the structural4 net changes spans an index-3 sublattice
    generators = [(1, 2), (1, -1), (-2, -1)]
    basis = lattice_basis(generators, [1, 0])
    assert [w.pivot for w in basis] == [1, 0]
    assert basis[1].vector == (3, 0)
    for w in basis:
        combo = tuple(sum(c * g[i] for c, g in zip(w.coeffs, generators)) for i in range(2))
        assert combo == w.vector
    assert in_integer_span((3, 0), basis)
    assert not in_integer_span((1, 0), basis)


def test_rational_coordinates():
    coords = rational_coordinates([(3, 0, 0)], (1, 0, 0))
    assert coords == [Fraction(1, 3)]
    assert rational_coordinates([(1, 1)], (1, 0)) is None


@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=1, max_size=3))
def test_kernel_vectors_are_integer_and_in_kernel(rows):
    A = np.array(rows)
    basis = integer_kernel_basis(rows)
    assert len(basis) == 3 - np.linalg.matrix_rank(A)
    for v in basis:
        assert all(isinstance(a, int) for a in v)
        assert (A @ np.array(v, dtype=np.int64) == 0).all()
