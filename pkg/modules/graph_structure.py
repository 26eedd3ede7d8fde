"""
Graph Structure Module
Structural analysis of the complex digraph: linkage classes, weak
reversibility, deficiency, detailed/complex balance witnesses and exact
integer kernels and lattices.

Ranks, kernels and lattices are exact (sympy / Python integers). Balance
witnesses are floating point with explicit residual thresholds.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np
import sympy
from scipy import linalg, optimize

try:
    from config import DETAILED_BALANCE_TOL, COMPLEX_BALANCE_TOL
except ImportError:
    DETAILED_BALANCE_TOL = 1e-10
    COMPLEX_BALANCE_TOL = 1e-8

logger = logging.getLogger(__name__)


# =============================================================================
# Complex digraph
# =============================================================================

def complex_graph(system):
    """Directed graph on complexes; each edge carries its reaction index."""
    graph = nx.DiGraph()
    graph.add_nodes_from(system.complexes)
    for index, reaction in enumerate(system.reactions):
        graph.add_edge(reaction.source, reaction.product, reaction=index)
    return graph


def linkage_classes(system):
    """Weakly connected components of the complex digraph, in order of first appearance."""
    graph = complex_graph(system)
    order = {y: i for i, y in enumerate(system.complexes)}
    classes = [sorted(component, key=order.get)
               for component in nx.weakly_connected_components(graph)]
    classes.sort(key=lambda component: order[component[0]])
    return [tuple(component) for component in classes]


def is_weakly_reversible(system):
    """True iff every linkage class is strongly connected."""
    graph = complex_graph(system)
    return all(nx.is_strongly_connected(graph.subgraph(component))
               for component in nx.weakly_connected_components(graph))


def is_reversible(system):
    return all(system.reaction_index(r.product, r.source) is not None for r in system.reactions)


def complex_path(system, start, end, graph=None):
    """Reaction indices along a shortest directed complex path start -> end, or None."""
    graph = graph if graph is not None else complex_graph(system)
    try:
        nodes = nx.shortest_path(graph, start, end)
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return None
    return [graph.edges[a, b]['reaction'] for a, b in zip(nodes, nodes[1:])]


# =============================================================================
# Deficiency
# =============================================================================

@dataclass(frozen=True)
class DeficiencyReport:
    n: int
    linkage: int
    s: int

    @property
    def delta(self):
        return self.n - self.linkage - self.s

    def to_dict(self):
        return {'n': self.n, 'linkage_classes': self.linkage, 's': self.s, 'deficiency': self.delta}


def stoichiometric_rank(system):
    if not system.reactions:
        return 0
    return int(sympy.Matrix(system.stoichiometric_matrix().tolist()).rank())


def deficiency(system):
    report = DeficiencyReport(len(system.complexes), len(linkage_classes(system)),
                              stoichiometric_rank(system))
    logger.debug(f"deficiency n={report.n} l={report.linkage} s={report.s} -> {report.delta}")
    return report


# =============================================================================
# Balance witnesses
# =============================================================================

@dataclass(frozen=True)
class BalanceWitness:
    c: tuple
    kind: str
    family: bool = False
    residual: float = 0.0

    def to_dict(self):
        return {'c': list(self.c), 'kind': self.kind, 'family': self.family,
                'residual': self.residual}


def solve_detailed_balance(system):
    """
    Positive c with kappa_fwd c^y = kappa_bwd c^y' for every reversible pair.

    Solves <y'-y, log c> = log(kappa_fwd/kappa_bwd) by minimum-norm least
    squares.

    Returns:
        BalanceWitness, or None if the network is not reversible or the
        system is inconsistent
    """
    if not system.reactions or not is_reversible(system):
        return None
    rows, rhs = [], []
    for index, reaction in enumerate(system.reactions):
        back = system.reaction_index(reaction.product, reaction.source)
        if back < index:
            continue
        rows.append(reaction.net_change)
        rhs.append(math.log(reaction.rate / system.reactions[back].rate))
    A = np.array(rows, dtype=float)
    b = np.array(rhs, dtype=float)
    log_c, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.max(np.abs(A @ log_c - b))) if len(b) else 0.0
    if residual >= DETAILED_BALANCE_TOL:
        logger.debug(f"detailed balance inconsistent (residual {residual:.3e})")
        return None
    family = int(np.linalg.matrix_rank(A)) < system.dim
    return BalanceWitness(tuple(float(v) for v in np.exp(log_c)), 'detailed', family, residual)


def _laplacian(system, complexes):
    index = {y: i for i, y in enumerate(complexes)}
    L = np.zeros((len(complexes), len(complexes)))
    for reaction in system.reactions:
        i, j = index[reaction.source], index[reaction.product]
        L[i, i] -= reaction.rate
        L[j, i] += reaction.rate
    return L


def _complex_balance_residual(L, Y, log_c):
    psi = np.exp(Y @ log_c)
    outflow = -np.diag(L) * psi
    net = L @ psi
    inflow = net + outflow
    return net / (inflow + outflow)


def solve_complex_balance(system):
    """
    Positive c balancing in- and out-flux at every complex.

    A log-linear start is built from the kernel of each linkage-class
    Laplacian, then refined by nonlinear least squares on log c. Zero
    deficiency plus weak reversibility guarantees a solution.
    """
    if not system.reactions or not is_weakly_reversible(system):
        return None
    complexes = system.complexes
    index = {y: i for i, y in enumerate(complexes)}
    L = _laplacian(system, complexes)
    Y = np.array([y.coeffs for y in complexes], dtype=float)
    classes = linkage_classes(system)

    rows, rhs = [], []
    for k, component in enumerate(classes):
        ids = [index[y] for y in component]
        kernel = linalg.null_space(L[np.ix_(ids, ids)])
        tree = np.abs(kernel[:, 0]) if kernel.shape[1] else np.ones(len(ids))
        tree = np.where(tree > 0, tree, 1.0)
        for local, i in enumerate(ids):
            row = np.zeros(system.dim + len(classes))
            row[:system.dim] = Y[i]
            row[system.dim + k] = -1.0
            rows.append(row)
            rhs.append(math.log(tree[local]))
    start, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    log_c = start[:system.dim]

    fit = optimize.least_squares(lambda a: _complex_balance_residual(L, Y, a), log_c,
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    residual = float(np.max(np.abs(_complex_balance_residual(L, Y, fit.x))))
    if residual >= COMPLEX_BALANCE_TOL:
        logger.warning(f"complex balance residual {residual:.3e} above tolerance")
        return None
    return BalanceWitness(tuple(float(v) for v in np.exp(fit.x)), 'complex',
                          stoichiometric_rank(system) < system.dim, residual)


def balance_witness(system):
    """Detailed balance when available, complex balance otherwise."""
    return solve_detailed_balance(system) or solve_complex_balance(system)


# =============================================================================
# Exact integer linear algebra
# =============================================================================

def _primitive(vector):
    """Scale a rational vector to a primitive integer vector with positive leading entry."""
    fractions = [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in vector]
    scale = math.lcm(*(f.denominator for f in fractions)) if fractions else 1
    ints = [int(f * scale) for f in fractions]
    divisor = math.gcd(*ints) or 1
    ints = [v // divisor for v in ints]
    lead = next((v for v in ints if v), 0)
    if lead < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def integer_kernel_basis(A):
    """
    Integer basis of ker A over the rationals.

    Exact rational elimination, then denominator clearing; each vector is
    primitive with a positive leading entry.
    """
    if hasattr(A, 'tolist'):
        A = A.tolist()
    matrix = sympy.Matrix(A)
    if matrix.cols == 0:
        return []
    if matrix.rows == 0:
        return [tuple(int(i == j) for j in range(matrix.cols)) for i in range(matrix.cols)]
    return [_primitive(list(v)) for v in matrix.nullspace()]


def conservation_laws(system):
    """Integer vectors c with <c, y'-y> = 0 for every reaction."""
    if not system.reactions:
        return [tuple(int(i == j) for j in range(system.dim)) for i in range(system.dim)]
    return integer_kernel_basis(system.stoichiometric_matrix().T.tolist())


@dataclass(frozen=True)
class LatticeVector:
    pivot: int
    vector: tuple
    coeffs: tuple


def lattice_basis(generators, order):
    """
    Echelon basis of the integer lattice spanned by `generators`.

    Coordinates are eliminated in `order` by Euclidean row operations, so
    each basis vector vanishes on every coordinate ordered before its pivot.
    `coeffs` expresses each basis vector over the generators.
    """
    count = len(generators)
    rows = [(list(g), [int(i == j) for j in range(count)]) for i, g in enumerate(generators)]
    basis = []
    for coord in order:
        active = [row for row in rows if row[0][coord] != 0]
        rows = [row for row in rows if row[0][coord] == 0]
        while len(active) > 1:
            active.sort(key=lambda row: abs(row[0][coord]))
            pivot_vec, pivot_coef = active[0]
            reduced = [active[0]]
            for vec, coef in active[1:]:
                q = vec[coord] // pivot_vec[coord]
                vec = [a - q * b for a, b in zip(vec, pivot_vec)]
                coef = [a - q * b for a, b in zip(coef, pivot_coef)]
                if vec[coord] != 0:
                    reduced.append((vec, coef))
                elif any(vec):
                    rows.append((vec, coef))
            active = reduced
        if active:
            vec, coef = active[0]
            if vec[coord] < 0:
                vec, coef = [-a for a in vec], [-a for a in coef]
            basis.append(LatticeVector(coord, tuple(vec), tuple(coef)))
    return basis


def stoichiometric_lattice(system, order=None):
    order = list(order) if order is not None else list(range(system.dim))
    return lattice_basis(system.net_changes, order)


def in_integer_span(vector, basis):
    """Exact membership of an integer vector in the lattice of an echelon basis."""
    residual = list(vector)
    for element in basis:
        value = residual[element.pivot]
        if value % element.vector[element.pivot]:
            return False
        q = value // element.vector[element.pivot]
        residual = [a - q * b for a, b in zip(residual, element.vector)]
    return not any(residual)


def rational_coordinates(vectors, target):
    """Exact rational coefficients expressing target in the span of vectors, or None."""
    if not vectors:
        return [] if not any(target) else None
    M = sympy.Matrix([list(v) for v in vectors]).T
    try:
        solution, params = M.gauss_jordan_solve(sympy.Matrix(list(target)))
    except ValueError:
        return None
    solution = solution.subs({p: 0 for p in params})
    return [Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in solution]
