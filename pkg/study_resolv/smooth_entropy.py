"""
Smooth entropy: the least Shannon entropy found within variational distance
delta of a distribution, computed exactly with the majorization construction.

The minimizer moves delta of probability onto the most likely outcome and
removes the same amount from the least likely ones. This module builds it for
explicit vectors, evaluates it over type classes for long binary memoryless
blocks, and handles the mixed ("dagger") variant where every component gets its
own share delta_i of the distance budget.
"""
import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import entr, gammaln, logsumexp, xlogy

from .decorators import log_runtime, unit_interval
from .dist_core import (FiniteDist, IIDSpec, MixedSourceSpec, InvariantViolationException, as_probability_vector,
                        entropy, materialize, sorted_descending, variational_distance)

LOG = logging.getLogger('study_resolv.smooth_entropy')

# Slack in the "kept mass >= 1 - delta" test, absorbs round off in cumulative sums
TRUNCATION_TOLERANCE = 1e-12

# Largest kept-sequence count inside a class we still resolve exactly
_EXACT_RATIO_LIMIT = 1e15

# Most components the grid oracle will enumerate
MAX_GRID_COMPONENTS = 3

# Entropy gap allowed between the mixture truncation and the smooth entropy, in bits
MIXTURE_SLACK_BITS = 2 * math.log2(math.e) / math.e

_LN2 = math.log(2.0)


class NonBinaryAlphabetException(ValueError):
    """Exception to raise when a type class path receives a non-binary source"""
    pass


class BlocklengthMismatchException(ValueError):
    """Exception to raise when memoryless components use different blocklengths"""
    pass


class TooManyComponentsException(ValueError):
    """Exception to raise when the grid oracle is asked for too many components"""
    pass


@dataclass(frozen=True, eq=False)
class SmoothedResult:
    """Minimizer of the entropy over the delta ball around a distribution"""
    v_delta: FiniteDist
    h_bits: float
    j_star: int  # 1-based rank of the last kept outcome
    epsilon: float  # mass removed from the outcome at rank j_star
    sort_perm: np.ndarray  # sorted rank -> original index


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """A split of the distance budget delta over mixture components"""
    deltas: np.ndarray  # per component, original order
    objective: float  # bits
    i_star: Optional[int] = None  # 1-based rank of the component taking the remainder
    active_index: Optional[int] = None  # original index of that component
    order: Optional[np.ndarray] = None  # components by decreasing entropy


@dataclass(frozen=True, eq=False)
class TypeClassTable:
    """
    Binary memoryless (or mixed memoryless) block described by its n + 1 type
    classes. Class k holds the sequences with k occurrences of symbol 1.
    """
    n: int
    log_counts: np.ndarray  # ln C(n, k)
    component_log_probs: np.ndarray  # (components, n + 1), ln of one sequence's probability
    mixed_log_probs: np.ndarray  # (n + 1,)
    weights: np.ndarray

    @property
    def log_masses(self) -> np.ndarray:
        """ln of the total mixed probability of each class"""
        return self.log_counts + self.mixed_log_probs

    def total_mass(self) -> float:
        return float(np.exp(logsumexp(self.log_masses)))


@dataclass(frozen=True, eq=False)
class ClassTruncation:
    """The smallest set of most likely sequences holding mass 1 - delta, over type classes"""
    n: int
    order: np.ndarray  # class indices k by decreasing sequence probability
    masses: np.ndarray  # class masses in that order
    log_probs: np.ndarray  # ln sequence probability in that order
    pivot: int  # position in order of the class holding the last kept sequence
    log_kept: float  # ln number of sequences kept from the pivot class
    kept_mass: float  # mass kept from the pivot class
    tail_mass: float  # mass of all dropped sequences
    epsilon: float
    log_j_star: float  # ln of the 1-based rank of the last kept sequence

    @property
    def is_point_mass(self) -> bool:
        """True when only the single most likely sequence is kept"""
        return self.pivot == 0 and self.log_kept == 0.0

    @property
    def j_star(self) -> Optional[int]:
        """Exact rank of the last kept sequence, None once it passes the exact count limit"""
        if self.log_j_star >= math.log(_EXACT_RATIO_LIMIT):
            return None
        return sum(math.comb(self.n, int(k)) for k in self.order[:self.pivot]) + round(math.exp(self.log_kept))


@dataclass(frozen=True, eq=False)
class ComponentTruncation:
    """Per component truncations sharing the pivot of the mixture"""
    components: List[FiniteDist]
    mixture: FiniteDist
    j_star: int
    etas: np.ndarray
    distances: np.ndarray
    average_distance: float
    tail_mass: float
    smooth_entropy: float  # smooth entropy of the mixture, bits
    mixture_entropy_bound: float  # smooth_entropy + MIXTURE_SLACK_BITS


def pivot_position(sorted_probs: np.ndarray, delta: float) -> int:
    """0-based position of the first outcome at which the kept mass reaches 1 - delta"""
    cum = np.cumsum(sorted_probs)
    position = int(np.searchsorted(cum, 1.0 - delta - TRUNCATION_TOLERANCE, side='left'))
    return min(position, sorted_probs.size - 1)


@unit_interval(check='delta')
def smooth_min_entropy_dist(p: FiniteDist, delta: float) -> SmoothedResult:
    """
    Build the entropy minimizer over the variational ball of radius delta.
    Outcomes are ranked by decreasing probability (ties to the smaller index),
    delta is added to the top one, everything past rank j* is dropped and the
    outcome at j* gives up epsilon so the result sums to one.

    Args:
        p: FiniteDist to smooth
        delta: Ball radius in [0, 1)

    Returns:
        result: SmoothedResult holding the minimizer and its entropy in bits
    """
    order = sorted_descending(p)
    ps = p.probs[order]
    position = pivot_position(ps, delta)
    tail = ps[position + 1:].sum()
    epsilon = float(np.clip(delta - tail, 0.0, ps[position]))

    vs = ps.copy()
    vs[position + 1:] = 0.0
    vs[position] -= epsilon
    vs[0] += delta

    v = np.empty_like(vs)
    v[order] = vs
    v_delta = FiniteDist(v)
    LOG.debug(f'Smoothed {p.alphabet_size} outcomes with delta={delta}: j*={position + 1}, eps={epsilon:0.3g}')
    return SmoothedResult(v_delta=v_delta, h_bits=entropy(v_delta), j_star=position + 1,
                          epsilon=epsilon, sort_perm=order)


def smooth_entropy_curve(p: FiniteDist, deltas):
    """
    Smooth entropy in bits for many radii at once. Uses one sort and prefix sums
    of the per outcome entropy terms, giving the same values as
    smooth_min_entropy_dist. Radii are clipped to [0, 1], radius 1 gives 0.

    Args:
        p: FiniteDist
        deltas: scalar or array of radii

    Returns:
        h: float or array of entropies in bits
    """
    ps = p.probs[sorted_descending(p)]
    cum = np.cumsum(ps)
    suffix = np.concatenate([np.cumsum(ps[::-1])[::-1], [0.0]])
    h_prefix = np.concatenate([[0.0], np.cumsum(entr(ps))]) / _LN2

    d = np.clip(np.asarray(deltas, dtype=float), 0.0, 1.0)
    position = np.minimum(np.searchsorted(cum, 1.0 - d - TRUNCATION_TOLERANCE, side='left'), ps.size - 1)
    epsilon = np.clip(d - suffix[position + 1], 0.0, ps[position])

    h = (entr(ps[0] + d) + entr(np.clip(ps[position] - epsilon, 0.0, None))) / _LN2
    h = h + h_prefix[position] - h_prefix[np.minimum(position, 1)]
    h = np.where(position == 0, 0.0, h)
    if np.ndim(h) == 0:
        return float(h)
    return h


def _binary_components(source):
    """Components and weights of a binary memoryless (mixed) source"""
    if isinstance(source, IIDSpec):
        components, weights = [source], np.ones(1)
    else:
        components, weights = source.components, source.weights

    for c in components:
        if not isinstance(c, IIDSpec):
            raise ValueError('Type class computations need memoryless (IIDSpec) components.')
        if c.single_letter.alphabet_size != 2:
            raise NonBinaryAlphabetException(f'Type class computations support binary sources, received an '
                                             f'alphabet of size {c.single_letter.alphabet_size}. Use the '
                                             f'explicit path instead.')
    blocklengths = {c.n for c in components}
    if len(blocklengths) > 1:
        raise BlocklengthMismatchException(f'Components use different blocklengths {sorted(blocklengths)}.')
    return components, weights


def type_class_table(source) -> TypeClassTable:
    """
    Tabulate the type classes of a binary memoryless source or a mixture of
    them, all in the log domain.

    Args:
        source: IIDSpec or MixedSourceSpec of binary IIDSpecs with one blocklength

    Returns:
        table: TypeClassTable
    """
    components, weights = _binary_components(source)
    n = components[0].n
    k = np.arange(n + 1, dtype=float)
    log_counts = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    component_log_probs = np.vstack([xlogy(n - k, c.single_letter.probs[0]) + xlogy(k, c.single_letter.probs[1])
                                     for c in components])
    with np.errstate(divide='ignore'):
        mixed_log_probs = logsumexp(component_log_probs, axis=0, b=weights[:, None])

    table = TypeClassTable(n=n, log_counts=log_counts, component_log_probs=component_log_probs,
                           mixed_log_probs=mixed_log_probs, weights=np.asarray(weights, dtype=float))
    total = table.total_mass()
    if abs(total - 1.0) > 1e-9:
        raise InvariantViolationException(f'Type classes carry total mass {total}, expected 1.')
    LOG.debug(f'Built {n + 1} type classes for {len(components)} component(s)')
    return table


def _compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """Kahan compensated running sum"""
    out = np.empty(len(values))
    total = 0.0
    compensation = 0.0
    for i, v in enumerate(values.tolist()):
        y = v - compensation
        t = total + y
        compensation = (t - total) - y
        total = t
        out[i] = total
    return out


@unit_interval(check='delta')
def truncate_classes(table: TypeClassTable, delta: float) -> ClassTruncation:
    """
    Locate rank j* over type classes: classes are visited by decreasing sequence
    probability (ties to the smaller k) and sequences are kept until their mass
    reaches 1 - delta. Counts too large for a float are tracked by logarithm.

    Args:
        table: TypeClassTable
        delta: Budget in [0, 1)

    Returns:
        truncation: ClassTruncation
    """
    log_masses = table.log_masses
    classes = np.flatnonzero(np.isfinite(log_masses))
    order = classes[np.lexsort((classes, -table.mixed_log_probs[classes]))]

    # Renormalize so the class masses sum to one to within the running sum error
    log_total = float(logsumexp(log_masses[order]))
    masses = np.exp(log_masses[order] - log_total)
    log_probs = table.mixed_log_probs[order] - log_total
    cum = _compensated_cumsum(masses)

    target = 1.0 - delta - TRUNCATION_TOLERANCE
    pivot = min(int(np.searchsorted(cum, target, side='left')), order.size - 1)
    before = cum[pivot - 1] if pivot > 0 else 0.0
    needed = max(target - before, 0.0)
    log_q = log_probs[pivot]
    log_count = table.log_counts[order[pivot]]

    q = math.exp(log_q)
    ratio_log = math.log(needed) - log_q if needed > 0 else -math.inf
    if ratio_log < math.log(_EXACT_RATIO_LIMIT):
        ratio = needed / q if q > 0 else math.exp(ratio_log)
        count = round(math.exp(log_count)) if log_count < math.log(_EXACT_RATIO_LIMIT) else math.inf
        kept = max(1, min(math.ceil(ratio), count))
        log_kept = math.log(kept)
        kept_mass = kept * q
    else:
        log_kept = min(ratio_log, log_count)
        kept_mass = max(1.0 - delta - before, 0.0)
    kept_mass = min(kept_mass, masses[pivot])

    tail_mass = float((masses[pivot] - kept_mass) + masses[pivot + 1:].sum())
    epsilon = float(np.clip(delta - tail_mass, 0.0, q))
    log_j_star = float(logsumexp(np.append(table.log_counts[order[:pivot]], log_kept)))
    LOG.debug(f'Pivot class k={order[pivot]} at position {pivot}, ln(j*)={log_j_star:0.4g}, eps={epsilon:0.3g}')
    return ClassTruncation(n=table.n, order=order, masses=masses, log_probs=log_probs, pivot=pivot,
                           log_kept=log_kept, kept_mass=kept_mass, tail_mass=tail_mass, epsilon=epsilon,
                           log_j_star=log_j_star)


def class_smooth_entropy(tr: ClassTruncation, delta: float) -> float:
    """Smooth entropy in bits of the whole block, from the truncation of its type classes at delta"""
    if tr.is_point_mass:
        return 0.0

    self_info = -tr.log_probs / _LN2
    p = tr.pivot
    h = float(np.dot(tr.masses[:p], self_info[:p]))

    q = math.exp(tr.log_probs[p])
    h += (tr.kept_mass - q) * self_info[p] + entr(max(q - tr.epsilon, 0.0)) / _LN2

    # The most likely sequence carries the extra delta
    q_top = math.exp(tr.log_probs[0])
    h += (entr(q_top + delta) - entr(q_top)) / _LN2
    return float(h)


@log_runtime
@unit_interval(check='delta')
def smooth_entropy_iid(p: IIDSpec, delta: float) -> float:
    """
    Smooth entropy per symbol, in bits, of a binary memoryless block computed
    over its n + 1 type classes. Matches smooth_min_entropy_dist on the explicit
    product wherever both can run.
    """
    if not isinstance(p, IIDSpec):
        raise ValueError('smooth_entropy_iid needs an IIDSpec, use smooth_min_entropy_dist for explicit vectors.')
    return class_smooth_entropy(truncate_classes(type_class_table(p), delta), delta) / p.n


@log_runtime
@unit_interval(check='delta')
def smooth_entropy_mixed_iid(spec: MixedSourceSpec, delta: float) -> float:
    """
    Smooth entropy per symbol, in bits, of a mixture of binary memoryless
    blocks. The components share type classes so the mixed law is evaluated
    class by class.
    """
    table = type_class_table(spec)
    return class_smooth_entropy(truncate_classes(table, delta), delta) / table.n


def allocation_pivot(sorted_weights: np.ndarray, delta: float):
    """
    For weights listed by decreasing component entropy, find the first rank
    whose cumulative weight exceeds delta.

    Returns:
        tuple:
            **position**: 0-based rank of the pivot component
            **a_istar**: cumulative weight up to and including the pivot
            **delta_istar**: share of the pivot's own budget spent, in [0, 1]
    """
    cumulative = np.cumsum(sorted_weights)
    position = min(int(np.searchsorted(cumulative, delta, side='right')), cumulative.size - 1)
    before = cumulative[position - 1] if position > 0 else 0.0
    weight = sorted_weights[position]
    delta_istar = float(np.clip((delta - before) / weight, 0.0, 1.0)) if weight > 0 else 0.0
    return position, float(cumulative[position]), delta_istar


@unit_interval(check='delta')
def dagger_allocation(entropies: Sequence[float], weights: Sequence[float], delta: float) -> AllocationResult:
    """
    Greedy solution of the allocation linear program: spend the whole budget of
    the highest entropy components first. Components ahead of i* get delta_i = 1,
    i* takes the remainder and the rest get 0.

    Args:
        entropies: Per component entropies in bits (any order)
        weights: Mixture weights
        delta: Average distance budget in [0, 1)

    Returns:
        result: AllocationResult with the objective sum_i alpha_i (1 - delta_i) H_i
    """
    h = np.asarray(entropies, dtype=float)
    w = as_probability_vector(weights, name='weights')
    if h.size != w.size:
        raise ValueError(f'Received {h.size} entropies for {w.size} weights.')

    order = np.argsort(-h, kind='stable')
    position, a_istar, delta_istar = allocation_pivot(w[order], delta)

    sorted_deltas = np.zeros(h.size)
    sorted_deltas[:position] = 1.0
    sorted_deltas[position] = delta_istar
    deltas = np.empty(h.size)
    deltas[order] = sorted_deltas

    objective = float(np.sum(w * (1.0 - deltas) * h))
    LOG.debug(f'Allocation pivot i*={position + 1}, A_i*={a_istar:0.4g}, delta_i*={delta_istar:0.4g}')
    return AllocationResult(deltas=deltas, objective=objective, i_star=position + 1,
                            active_index=int(order[position]), order=order)


@unit_interval(check='delta')
def solve_allocation_lp(entropies: Sequence[float], weights: Sequence[float], delta: float) -> AllocationResult:
    """
    Solve the allocation linear program numerically with HiGHS, independent of
    the greedy rule.
    """
    h = np.asarray(entropies, dtype=float)
    w = as_probability_vector(weights, name='weights')
    res = linprog(c=-(w * h), A_eq=w[None, :], b_eq=[delta], bounds=[(0.0, 1.0)] * h.size, method='highs')
    if not res.success:
        raise InvariantViolationException(f'Allocation LP failed: {res.message}')
    return AllocationResult(deltas=np.asarray(res.x), objective=float(np.sum(w * h) + res.fun))


@unit_interval(check='delta')
def dagger_grid_oracle(curves: Sequence[Callable], weights: Sequence[float], delta: float,
                       grid_step: float = 1e-3) -> AllocationResult:
    """
    Minimize sum_i alpha_i f_i(delta_i) subject to sum_i alpha_i delta_i = delta
    by enumerating delta_i on a grid. The heaviest component absorbs the
    remainder so every grid point is exactly feasible.

    Args:
        curves: Per component vectorized functions of delta_i
        weights: Mixture weights
        delta: Budget in [0, 1)
        grid_step: Grid spacing in (0, 0.1]

    Returns:
        result: AllocationResult at the best grid point
    """
    w = as_probability_vector(weights, name='weights')
    if len(curves) != w.size:
        raise ValueError(f'Received {len(curves)} curves for {w.size} weights.')
    if not 0 < grid_step <= 0.1:
        raise ValueError(f'grid_step = {grid_step} is invalid, use a value in (0, 0.1].')

    active = np.flatnonzero(w > 0)
    if active.size > MAX_GRID_COMPONENTS:
        raise TooManyComponentsException(f'The grid oracle handles at most {MAX_GRID_COMPONENTS} components, '
                                         f'received {active.size}.')

    last = active[np.argmax(w[active])]
    free = [i for i in active if i != last]
    grid = np.unique(np.append(np.arange(0.0, 1.0, grid_step), 1.0))
    mesh = np.meshgrid(*([grid] * len(free)), indexing='ij') if free else []
    columns = [m.ravel() for m in mesh]

    spent = sum((w[i] * c for i, c in zip(free, columns)), np.zeros(columns[0].size if columns else 1))
    last_delta = (delta - spent) / w[last]
    feasible = (last_delta >= -1e-12) & (last_delta <= 1.0 + 1e-12)
    if not np.any(feasible):
        raise InvariantViolationException('No feasible grid point found for the allocation.')

    columns = [c[feasible] for c in columns]
    last_delta = np.clip(last_delta[feasible], 0.0, 1.0)
    values = w[last] * np.asarray(curves[last](last_delta), dtype=float)
    for i, c in zip(free, columns):
        values = values + w[i] * np.asarray(curves[i](c), dtype=float)

    best = int(np.argmin(values))
    deltas = np.zeros(w.size)
    deltas[last] = last_delta[best]
    for i, c in zip(free, columns):
        deltas[i] = c[best]
    LOG.debug(f'Grid oracle searched {values.size} feasible allocations')
    return AllocationResult(deltas=deltas, objective=float(values[best]))


def _component_curve(component) -> Callable:
    """Vectorized smooth entropy (bits, whole block) of one component as a function of its radius"""
    if isinstance(component, IIDSpec) and component.alphabet_size > 2 ** 16:
        table = type_class_table(component)
        lookup = {}

        def curve(deltas):
            d = np.clip(np.atleast_1d(np.asarray(deltas, dtype=float)), 0.0, 1.0)
            out = np.empty(d.size)
            for i, x in enumerate(d.tolist()):
                if x not in lookup:
                    lookup[x] = 0.0 if x >= 1.0 else class_smooth_entropy(truncate_classes(table, x), x)
                out[i] = lookup[x]
            return out
        return curve

    return partial(smooth_entropy_curve, materialize(component))


@log_runtime
@unit_interval(check='delta')
def dagger_smooth_entropy_finite(components: Sequence, weights: Sequence[float], delta: float,
                                 grid_step: float = 1e-3) -> float:
    """
    Grid estimate of the dagger smooth entropy: the least average of component
    smooth entropies over splits of the budget with sum_i alpha_i delta_i = delta.
    Finite n smooth entropies need not be convex in delta_i, so this oracle is
    kept separate from the greedy allocation.

    Args:
        components: FiniteDist or binary IIDSpec components, at most three
        weights: Mixture weights
        delta: Budget in [0, 1)
        grid_step: Grid spacing in (0, 0.1]

    Returns:
        h: grid minimum in bits for the whole block
    """
    if len(components) > MAX_GRID_COMPONENTS:
        raise TooManyComponentsException(f'The grid oracle handles at most {MAX_GRID_COMPONENTS} components, '
                                         f'received {len(components)}.')
    curves = [_component_curve(c) for c in components]
    return dagger_grid_oracle(curves, weights, delta, grid_step=grid_step).objective


@unit_interval(check='delta')
def truncate_components(spec: MixedSourceSpec, delta: float) -> ComponentTruncation:
    """
    Truncate every component at the rank j* of the mixture. Outcomes ranked
    before j* keep their probability, the outcome at j* collects the whole
    remaining mass eta_i of the component and later outcomes are dropped. The
    truncations mix back to the truncated mixture and their average distance to
    the components equals the mixture mass past j*.

    Args:
        spec: MixedSourceSpec with explicit (or small memoryless) components
        delta: Budget in [0, 1)

    Returns:
        result: ComponentTruncation
    """
    dists = [materialize(c) for c in spec.components]
    stacked = np.vstack([d.probs for d in dists])
    mixed = FiniteDist(spec.weights @ stacked)

    order = sorted_descending(mixed)
    position = pivot_position(mixed.probs[order], delta)
    kept, pivot, rest = order[:position], order[position], order[position:]

    def truncate(probs):
        v = np.zeros_like(probs)
        v[kept] = probs[kept]
        v[pivot] = probs[rest].sum()
        return v

    truncated = [FiniteDist(truncate(d.probs)) for d in dists]
    etas = np.array([d.probs[rest].sum() for d in dists])
    distances = np.array([variational_distance(d, v) for d, v in zip(dists, truncated)])
    mixture_truncation = FiniteDist(truncate(mixed.probs))

    smoothed = smooth_min_entropy_dist(mixed, delta)
    LOG.debug(f'Component truncation at j*={position + 1}, average distance {spec.weights @ distances:0.4g}')
    return ComponentTruncation(components=truncated, mixture=mixture_truncation, j_star=position + 1, etas=etas,
                               distances=distances, average_distance=float(spec.weights @ distances),
                               tail_mass=float(mixed.probs[order[position + 1:]].sum()),
                               smooth_entropy=smoothed.h_bits,
                               mixture_entropy_bound=smoothed.h_bits + MIXTURE_SLACK_BITS)
