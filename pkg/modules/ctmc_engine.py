"""
CTMC Engine
The continuous-time Markov chain induced by a mass-action network.

Transition rates, active paths and their moment generating factor, box-bounded
reachability, Gillespie simulation, transient distributions by uniformization
and total-variation intervals. Distributions on a truncated box carry the mass
that left the box as `leaked`, and TV distances are reported as intervals that
treat that mass adversarially.
"""

import itertools
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from modules.errors import JumpBudgetExceeded, KernelError
from modules.net_model import falling_product

try:
    from config import SSA_MAX_JUMPS, POISSON_TAIL_TOL, WORKERS
except ImportError:
    SSA_MAX_JUMPS = 10_000_000
    POISSON_TAIL_TOL = 1e-12
    WORKERS = 1

logger = logging.getLogger(__name__)


def as_state(z):
    return tuple(int(v) for v in z)


# =============================================================================
# Transition kernel
# =============================================================================

class TransitionKernel:
    """
    q_{z,w} = sum of intensities of reactions with net change w - z.

    Reactions sharing a net change are aggregated into one transition. An
    optional bounded memo of out-transitions speeds up repeated queries
    (SSA, BFS); it never changes results.
    """

    def __init__(self, system, cache_size=0):
        self.system = system
        self.cache_size = cache_size
        self._cache = {} if cache_size else None
        groups = {}
        for index, reaction in enumerate(system.reactions):
            groups.setdefault(reaction.net_change, []).append(
                (reaction.source.coeffs, reaction.rate))
        self._groups = tuple((change, tuple(members)) for change, members in groups.items())

    @property
    def dim(self):
        return self.system.dim

    def _check(self, z):
        if len(z) != self.dim:
            raise KernelError(f"state {tuple(z)} has dimension {len(z)}, expected {self.dim}",
                              code='dimension_mismatch')

    def out_transitions(self, z):
        """List of (w, q_{z,w}) with positive rate, one entry per distinct net change."""
        z = as_state(z)
        if self._cache is not None and z in self._cache:
            return self._cache[z]
        self._check(z)
        result = []
        for change, members in self._groups:
            rate = 0.0
            for source, kappa in members:
                rate += kappa * falling_product(source, z)
            if rate > 0:
                result.append((tuple(a + b for a, b in zip(z, change)), rate))
        if self._cache is not None:
            if len(self._cache) >= self.cache_size:
                self._cache.clear()
            self._cache[z] = result
        return result

    def total_rate(self, z):
        return sum(rate for _, rate in self.out_transitions(z))

    def rate(self, z, w):
        w = as_state(w)
        for target, rate in self.out_transitions(z):
            if target == w:
                return rate
        return 0.0


# =============================================================================
# Paths
# =============================================================================

@dataclass(frozen=True)
class Path:
    states: tuple

    def __post_init__(self):
        object.__setattr__(self, 'states', tuple(as_state(s) for s in self.states))

    def __len__(self):
        return len(self.states)

    @property
    def start(self):
        return self.states[0]

    @property
    def end(self):
        return self.states[-1]

    @property
    def is_closed(self):
        return len(self.states) >= 2 and self.states[0] == self.states[-1]

    def compose(self, other):
        """gamma1 o gamma2: follow self, then other (which must start where self ends)."""
        if self.end != other.start:
            raise KernelError(f"cannot compose paths ending at {self.end} and starting at {other.start}",
                              code='path_mismatch')
        return Path(self.states + other.states[1:])

    def translate(self, v):
        return Path(tuple(tuple(a + b for a, b in zip(s, v)) for s in self.states))

    def first_inactive(self, kernel):
        for m, (z, w) in enumerate(zip(self.states, self.states[1:])):
            if kernel.rate(z, w) <= 0:
                return m
        return None

    def is_active(self, kernel):
        return self.first_inactive(kernel) is None

    def to_list(self):
        return [list(s) for s in self.states]

    @classmethod
    def from_reactions(cls, system, start, reaction_indices):
        states = [as_state(start)]
        for index in reaction_indices:
            change = system.reactions[index].net_change
            states.append(tuple(a + b for a, b in zip(states[-1], change)))
        return cls(tuple(states))


def path_mgf(kernel, path, rho):
    """
    F(gamma, rho) = prod_m q_{x(m),x(m+1)} / (q_{x(m)} - rho).

    At rho = 0 this is the probability of the jump sequence given X(0) = x(1).

    Raises:
        KernelError: inactive edge, or rho not below a holding rate on the path
    """
    if rho < 0:
        raise KernelError(f"rho must be nonnegative, got {rho}", code='rho_out_of_range')
    value = 1.0
    for m, (z, w) in enumerate(zip(path.states, path.states[1:])):
        transitions = kernel.out_transitions(z)
        q_zw = next((rate for target, rate in transitions if target == w), 0.0)
        if q_zw <= 0:
            raise KernelError(f"inactive edge at index {m}", code='inactive_path',
                              details={'index': m, 'from': list(z), 'to': list(w)})
        q_z = sum(rate for _, rate in transitions)
        if rho >= q_z:
            raise KernelError(f"rho exceeds holding rate at index {m}", code='rho_out_of_range',
                              details={'index': m, 'holding_rate': q_z, 'rho': rho})
        value *= q_zw / (q_z - rho)
    return value


# =============================================================================
# Truncated state space
# =============================================================================

class TruncatedSpace:
    """Axis-aligned box [0, upper_1] x ... x [0, upper_d] with a lexicographic state index."""

    def __init__(self, upper):
        self.upper = as_state(upper)
        if any(b < 0 for b in self.upper):
            raise KernelError(f"box bounds must be nonnegative: {self.upper}", code='bad_box')
        self.shape = tuple(b + 1 for b in self.upper)
        self.states = list(itertools.product(*(range(n) for n in self.shape)))
        self.index = {s: i for i, s in enumerate(self.states)}

    @classmethod
    def of(cls, box):
        return box if isinstance(box, TruncatedSpace) else cls(box)

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        return isinstance(other, TruncatedSpace) and self.upper == other.upper

    def __hash__(self):
        return hash(self.upper)

    def contains(self, z):
        return len(z) == len(self.upper) and all(0 <= a <= b for a, b in zip(z, self.upper))

    def require(self, z, what='state'):
        if not self.contains(z):
            raise KernelError(f"{what} {tuple(z)} is outside the box {self.upper}",
                              code='outside_box')

    def interior(self, kernel):
        """States whose every out-transition stays inside the box."""
        return [s for s in self.states
                if all(self.contains(w) for w, _ in kernel.out_transitions(s))]


@dataclass
class DistributionVector:
    space: TruncatedSpace
    mass: np.ndarray
    leaked: float = 0.0
    approximate: bool = False

    def mass_at(self, z):
        i = self.space.index.get(as_state(z))
        return 0.0 if i is None else float(self.mass[i])

    @property
    def total(self):
        return float(self.mass.sum())

    def to_csv(self, species):
        lines = [f"# leaked={self.leaked!r}", ','.join(list(species) + ['mass'])]
        for state, value in zip(self.space.states, self.mass):
            lines.append(','.join(str(v) for v in state) + f",{float(value)!r}")
        return '\n'.join(lines) + '\n'


def point_mass(space, x0):
    space.require(x0, 'initial state')
    mass = np.zeros(len(space))
    mass[space.index[as_state(x0)]] = 1.0
    return DistributionVector(space, mass, 0.0)


# =============================================================================
# Reachability
# =============================================================================

def reachable(kernel, start, goal, box, key=None):
    """
    Shortest active path start -> goal confined to the box, or None.

    `goal` is a state or a predicate on states; with a predicate the nearest
    accepted state is returned. Neighbors are expanded in increasing order of
    `key` (default: the coordinate tuple), so the returned witness is
    deterministic.
    """
    space = TruncatedSpace.of(box)
    start = as_state(start)
    space.require(start, 'start state')
    if callable(goal):
        accept = goal
    else:
        target = as_state(goal)
        space.require(target, 'goal state')
        accept = lambda z: z == target
    key = key or (lambda s: s)
    parent = {start: None}
    queue = deque([start])
    while queue:
        z = queue.popleft()
        if accept(z):
            states = []
            while z is not None:
                states.append(z)
                z = parent[z]
            return Path(tuple(reversed(states)))
        for w in sorted((w for w, _ in kernel.out_transitions(z)), key=key):
            if w not in parent and space.contains(w):
                parent[w] = z
                queue.append(w)
    return None


# =============================================================================
# Stochastic simulation
# =============================================================================

@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    t_end: float = 0.0

    def state_at(self, t):
        current = self.states[0]
        for time, state in zip(self.times, self.states):
            if time > t:
                break
            current = state
        return current

    @property
    def final_state(self):
        return self.states[-1]

    def to_csv(self, species):
        lines = [','.join(['t'] + list(species))]
        for time, state in zip(self.times, self.states):
            lines.append(f"{time!r}," + ','.join(str(v) for v in state))
        return '\n'.join(lines) + '\n'


def _jump(kernel, z, rng):
    transitions = kernel.out_transitions(z)
    total = sum(rate for _, rate in transitions)
    if total <= 0:
        return None, 0.0, total
    dt = rng.exponential(1.0 / total)
    threshold = rng.random() * total
    acc = 0.0
    for w, rate in transitions:
        acc += rate
        if threshold < acc:
            return w, dt, total
    return transitions[-1][0], dt, total


def simulate_ssa(kernel, x0, t_end, seed=None, rng=None, max_jumps=SSA_MAX_JUMPS):
    """
    Gillespie direct-method trajectory on [0, t_end].

    Args:
        kernel: TransitionKernel
        x0: initial state
        t_end: horizon (> 0)
        seed: seed for numpy's default_rng (ignored when rng is given)
        max_jumps: explosion guard

    Returns:
        Trajectory of jump times and states (first entry is (0, x0))
    """
    if not t_end > 0:
        raise KernelError(f"t_end must be positive, got {t_end}", code='bad_time')
    rng = rng if rng is not None else np.random.default_rng(seed)
    z = as_state(x0)
    kernel._check(z)
    trajectory = Trajectory([0.0], [z], t_end)
    t = 0.0
    jumps = 0
    while True:
        w, dt, total = _jump(kernel, z, rng)
        if w is None or t + dt > t_end:
            break
        t += dt
        z = w
        trajectory.times.append(t)
        trajectory.states.append(z)
        jumps += 1
        if jumps >= max_jumps:
            raise JumpBudgetExceeded(f"jump budget of {max_jumps} exceeded at t={t}",
                                     trajectory=trajectory)
    return trajectory


def _final_state(kernel, x0, t_end, rng, max_jumps):
    z = as_state(x0)
    t = 0.0
    for _ in range(max_jumps):
        w, dt, _ = _jump(kernel, z, rng)
        if w is None or t + dt > t_end:
            return z
        t += dt
        z = w
    raise JumpBudgetExceeded(f"jump budget of {max_jumps} exceeded at t={t}")


def simulate_ensemble(kernel, x0, t_end, n_runs, seed=None, workers=WORKERS,
                      max_jumps=SSA_MAX_JUMPS):
    """End states of n_runs independent trajectories, one spawned RNG stream per run."""
    if not t_end > 0:
        raise KernelError(f"t_end must be positive, got {t_end}", code='bad_time')
    streams = np.random.SeedSequence(seed).spawn(n_runs)

    def run_block(block):
        return [_final_state(kernel, x0, t_end, np.random.default_rng(s), max_jumps)
                for s in block]

    blocks = [streams[i::max(workers, 1)] for i in range(max(workers, 1))]
    if workers <= 1:
        results = [run_block(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, blocks))
    ordered = [None] * n_runs
    for offset, block in enumerate(results):
        for j, state in enumerate(block):
            ordered[offset + j * max(workers, 1)] = state
    logger.debug(f"ensemble of {n_runs} runs finished (workers={workers})")
    return ordered


def empirical_distribution(space, states):
    mass = np.zeros(len(space))
    outside = 0
    for state in states:
        i = space.index.get(as_state(state))
        if i is None:
            outside += 1
        else:
            mass[i] += 1
    n = max(len(states), 1)
    return DistributionVector(space, mass / n, outside / n, approximate=True)


# =============================================================================
# Transient distributions (uniformization)
# =============================================================================

def _uniformized_chain(kernel, space):
    """Transposed substochastic jump matrix on the box and the uniformization rate."""
    rows, cols, vals = [], [], []
    totals = np.zeros(len(space))
    for i, z in enumerate(space.states):
        for w, rate in kernel.out_transitions(z):
            totals[i] += rate
            j = space.index.get(w)
            if j is not None:
                rows.append(j)
                cols.append(i)
                vals.append(rate)
    uniform_rate = float(totals.max()) if len(totals) else 0.0
    if uniform_rate <= 0:
        return None, 0.0
    jump = sparse.csr_matrix((np.array(vals) / uniform_rate, (rows, cols)),
                             shape=(len(space), len(space)))
    jump = jump + sparse.diags(1.0 - totals / uniform_rate)
    return jump.tocsr(), uniform_rate


def _propagate(jump_T, uniform_rate, p, dt, tol=POISSON_TAIL_TOL):
    mu = uniform_rate * dt
    if jump_T is None or mu <= 0:
        return p.copy()
    left = int(poisson.ppf(tol / 2, mu))
    right = int(poisson.isf(tol / 2, mu)) + 1
    weights = poisson.pmf(np.arange(left, right + 1), mu)
    v = p.copy()
    acc = np.zeros_like(p)
    for k in range(right + 1):
        if k >= left:
            acc += weights[k - left] * v
        v = jump_T @ v
    logger.debug(f"uniformization: rate={uniform_rate:.4g} dt={dt:.4g} terms={right + 1}")
    return acc


def forward_distribution_grid(kernel, x0, times, box):
    """P^t(x0, .) on the box for each t in a nondecreasing time grid."""
    space = TruncatedSpace.of(box)
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise KernelError("time must be nonnegative", code='bad_time')
    if any(b < a for a, b in zip(times, times[1:])):
        raise KernelError("time grid must be nondecreasing", code='bad_time')
    current = point_mass(space, x0)
    jump_T, uniform_rate = _uniformized_chain(kernel, space)
    result = []
    t_prev = 0.0
    p = current.mass
    for t in times:
        p = _propagate(jump_T, uniform_rate, p, t - t_prev)
        p = np.maximum(p, 0.0)
        t_prev = t
        result.append(DistributionVector(space, p, max(0.0, 1.0 - float(p.sum()))))
    return result


def forward_distribution(kernel, x0, t, box):
    """
    Solve the forward equation on a box by uniformization.

    Mass that leaves the box is absorbed and reported as `leaked`, a
    rigorous bound on the truncation error in total variation.
    """
    if t < 0:
        raise KernelError(f"time must be nonnegative, got {t}", code='bad_time')
    return forward_distribution_grid(kernel, x0, [t], box)[0]


def stationary_estimate(kernel, x0, box, t_long):
    """Long-time forward solve used as pi when no balance witness exists."""
    dist = forward_distribution(kernel, x0, t_long, box)
    dist.approximate = True
    return dist


# =============================================================================
# Distances and reference laws
# =============================================================================

@dataclass(frozen=True)
class TVInterval:
    lower: float
    upper: float
    point: float

    def to_dict(self):
        return {'lower': self.lower, 'upper': self.upper, 'point': self.point}


def tv_distance(p, q):
    """Half-l1 distance with both leaked masses folded in as worst case."""
    if p.space != q.space:
        raise KernelError(f"box mismatch: {p.space.upper} vs {q.space.upper}", code='box_mismatch')
    point = 0.5 * float(np.sum(np.abs(p.mass - q.mass)))
    slack = 0.5 * (p.leaked + q.leaked)
    return TVInterval(max(0.0, point - slack), min(1.0, point + slack), min(1.0, point))


def product_poisson(c, box):
    """prod_i Poisson(c_i) restricted to the box; leaked is the mass outside."""
    space = TruncatedSpace.of(box)
    c = [float(v) for v in c]
    if len(c) != len(space.upper) or any(v <= 0 for v in c):
        raise KernelError(f"product_poisson needs {len(space.upper)} positive means, got {c}",
                          code='bad_means')
    mass = np.ones(1)
    for mean, n in zip(c, space.shape):
        mass = np.multiply.outer(mass, poisson.pmf(np.arange(n), mean)).ravel()
    return DistributionVector(space, mass, max(0.0, 1.0 - float(mass.sum())))
