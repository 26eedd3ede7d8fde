"""Decay curves, moment-divergence witnesses, trapping cycles and congestion ratios."""

import math

import numpy as np
import pytest

from modules.certifier import certify_nonexponential
from modules.ctmc_engine import DistributionVector, TransitionKernel, TruncatedSpace
from modules.diagnostics import (
    congestion_ratio, find_trapping_cycle, mgf_divergence_witness, reference_law,
    slope_separation, tv_decay_report,
)
from modules.errors import DiagnosticsError
from modules.net_parser import parse_network


# =============================================================================
# Reference law and decay curves
# =============================================================================

def test_reference_law_sources(abb, networks):
    pi, source = reference_law(abb, (10, 10))
    assert source == 'detailed'
    assert pi.mass_at((0, 0)) == pytest.approx(math.exp(-2))
    _, source = reference_law(networks('structure2'), (6, 6))
    assert source == 'complex'
    pi, source = reference_law(networks('non_cycle'), (5, 5), t_long=1.0)
    assert source == 'numerical'
    assert pi.approximate


def test_decay_curves_fall_towards_stationarity(abb):
    curves = tv_decay_report(abb, [(0, 0), (3, 0)], (15, 15), np.linspace(0.0, 6.0, 13))
    assert [c.initial for c in curves] == [(0, 0), (3, 0)]
    for curve in curves:
        uppers = [iv.upper for iv in curve.intervals]
        assert uppers[-1] < uppers[0]
        assert all(iv.lower <= iv.point <= iv.upper for iv in curve.intervals)
        assert curve.max_leak < 0.1
    assert curves[0].to_csv().splitlines()[0] == 't,tv_lower,tv_upper'


def test_decay_report_rejects_small_box(abb):
    with pytest.raises(DiagnosticsError) as exc:
        tv_decay_report(abb, [(0, 0)], (2, 2), [0.0, 5.0])
    assert exc.value.code == 'truncation_too_small'


def test_slope_separation_thresholds():
    class Curve:
        def __init__(self, slope):
            self.slope = slope

    report = slope_separation([Curve(-1.0), Curve(-0.5), Curve(None)])
    assert report['slopes'] == [-1.0, -0.5]
    assert report['max_relative_difference'] == pytest.approx(0.5)
    assert report['separated'] and not report['agree']
    assert slope_separation([Curve(-1.0), Curve(-0.95)])['agree']


@pytest.mark.slow
def test_trapped_chain_decays_at_initial_dependent_rates(abb, comparison):
    initials = [(10, 0), (15, 0), (20, 0)]
    grid = np.linspace(0.5, 60.0, 120)
    trapped = slope_separation(tv_decay_report(abb, initials, (40, 40), grid))
    regular = slope_separation(tv_decay_report(comparison, initials, (40, 40), grid))
    assert trapped['separated']
    assert regular['agree']


# =============================================================================
# Divergence witness
# =============================================================================

@pytest.fixture
def example_certificate(abb):
    return certify_nonexponential(abb).certificate


def test_divergence_witness_grows_geometrically(abb, example_certificate):
    witness = mgf_divergence_witness(TransitionKernel(abb), example_certificate, j_max=30, n=10)
    assert witness.cycle_factor == pytest.approx(1.76, abs=1e-12)
    assert witness.to_cycle.start == (0, 0) and witness.to_cycle.end == (10, 0)
    assert witness.from_cycle.end == (0, 0)
    for a, b in zip(witness.bounds, witness.bounds[1:]):
        assert b > a
        assert b / a == pytest.approx(1.76, abs=1e-9)
    assert witness.steps_to_exceed(1e6) == math.floor(math.log(1e6) / math.log(1.76)) + 1
    assert witness.to_dict()['n'] == 10


def test_divergence_witness_needs_connectors(abb, example_certificate):
    with pytest.raises(DiagnosticsError) as exc:
        mgf_divergence_witness(TransitionKernel(abb), example_certificate, j_max=5, box=(5, 5), n=10)
    assert exc.value.code == 'connectors_not_found'


# =============================================================================
# Trapping cycles
# =============================================================================

def test_trapping_cycle_on_example(abb):
    found = find_trapping_cycle(TransitionKernel(abb), 0.5, (12, 12), 3)
    assert found.path.states == ((10, 0), (11, 1), (10, 0))
    assert found.F_value == pytest.approx(1.76)


def test_trapping_cycle_avoids_base_state(abb):
    found = find_trapping_cycle(TransitionKernel(abb), 0.5, (12, 12), 3, base=(10, 0))
    assert (10, 0) not in found.path.states
    assert found.path.states == ((9, 0), (10, 1), (9, 0))
    assert found.F_value == pytest.approx(2 * 10 / 11.5)


def test_no_trapping_cycle_for_comparison(comparison):
    assert find_trapping_cycle(TransitionKernel(comparison), 0.5, (12, 12), 3) is None


def test_longer_trapping_cycle(networks):
    kernel = TransitionKernel(networks('non_cycle'))
    found = find_trapping_cycle(kernel, 0.5, (12, 12), 3)
    assert found is not None
    assert found.F_value > 1.0
    assert found.path.is_closed and found.path.is_active(kernel)


def test_trapping_rho_range(abb):
    with pytest.raises(DiagnosticsError) as exc:
        find_trapping_cycle(TransitionKernel(abb), 1.0, (6, 6), 3)
    assert exc.value.code == 'rho_out_of_range'


# =============================================================================
# Congestion
# =============================================================================

def test_congestion_two_state_with_given_pi(two_state):
    space = TruncatedSpace((1,))
    pi = DistributionVector(space, np.array([0.5, 0.5]))
    report = congestion_ratio(two_state, space, pi=pi)
    assert report.term((1,), (0,)) == pytest.approx(1.0)
    assert report.pairs == 1 and report.disconnected == 0
    assert report.argmax == ((1,), (0,))
    assert report.pi_source == 'given'


def test_congestion_counts_states_on_each_path(two_state):
    space = TruncatedSpace((2,))
    pi = DistributionVector(space, np.full(3, 1 / 3))
    report = congestion_ratio(two_state, space, pi=pi)
    # paths 2->1 and 2->1->0 cross (2,1); 1->0 and 2->1->0 cross (1,0)
    assert report.term((2,), (1,)) == pytest.approx((2 + 3) / 9 / (2 / 3))
    assert report.term((1,), (0,)) == pytest.approx((2 + 3) / 9 / (1 / 3))
    assert report.argmax == ((1,), (0,))


def test_congestion_two_state_with_poisson_pi(two_state):
    report = congestion_ratio(two_state, (1,))
    assert report.pi_source == 'detailed'
    assert report.term((1,), (0,)) == pytest.approx(2 * math.exp(-1))


def test_congestion_counts_disconnected_pairs(networks):
    report = congestion_ratio(networks('ab_only'), (2, 2))
    assert report.disconnected > 0


def test_congestion_is_independent_of_worker_count(abb):
    serial = congestion_ratio(abb, (5, 5), workers=1)
    threaded = congestion_ratio(abb, (5, 5), workers=3)
    assert serial.terms == threaded.terms


def test_congestion_is_equivariant_under_relabeling(abb):
    permuted = parse_network("B <-> 2B\n0 <-> A+B")
    assert permuted.species == ('B', 'A')
    original = congestion_ratio(abb, (5, 5))
    relabeled = congestion_ratio(permuted, (5, 5))
    assert len(original.terms) == len(relabeled.terms)
    for (z, w), value in original.terms.items():
        assert relabeled.term(z[::-1], w[::-1]) == pytest.approx(value, rel=1e-9)


def test_congestion_report_matches_schema(abb, schema):
    import jsonschema
    report = congestion_ratio(abb, (3, 3))
    jsonschema.validate(dict(report.to_dict(), ok=True), schema('congestion'))


@pytest.mark.slow
def test_escape_edge_congestion_grows(abb):
    report = congestion_ratio(abb, (30, 30))
    terms = [report.term((n, 0), (n + 1, 1)) for n in range(5, 29)]
    assert all(b > a for a, b in zip(terms, terms[1:]))
    suprema = [congestion_ratio(abb, (size, size)).supremum for size in (15, 20, 25)]
    suprema.append(report.supremum)
    assert all(b > a for a, b in zip(suprema, suprema[1:]))
