"""
Variable-length resolvability codes and delta-error fixed-to-variable codes.

A resolvability code draws a random length L_n, then a uniform K-ary string of
that length, and maps the string to a target sequence. Target sequences are
grouped by their length m(x) = ceil(log_K 1/P_V(x) + n gamma); all K^m strings
of length m are shared among the sequences of that group by largest remainder
apportionment. Codewords are kept as counts, only the induced distribution and
the length statistics matter.
"""
import itertools
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .decorators import coding_parameters, unit_interval
from .dist_core import (DMC, FiniteDist, MixedSourceSpec, AlphabetMismatchException, InvariantViolationException,
                        as_probability_vector, dmc_product_output, entropy, materialize, sorted_descending,
                        variational_distance)
from .smooth_entropy import (SmoothedResult, ComponentTruncation, TRUNCATION_TOLERANCE, pivot_position,
                             smooth_min_entropy_dist, truncate_components, truncate_classes,
                             type_class_table)

LOG = logging.getLogger('study_resolv.resolv_code')

# Slack on ceilings of logarithms that should land on an integer
LENGTH_TOLERANCE = 1e-9

# Largest blocklength and class size the codeword listing will write out
MAX_DEBUG_BLOCKLENGTH = 8
MAX_DEBUG_STRINGS = 2 ** 16


class BoundViolationException(InvariantViolationException):
    """
    Exception to raise when a built code breaks the distance or length bound
    or an apportionment invariant.
    """
    pass


@dataclass(frozen=True, eq=False)
class LengthPartition:
    lengths: np.ndarray  # m(x) per outcome, 0 outside the support
    classes: Dict[int, np.ndarray]  # m -> outcome indices, ascending
    length_pmf: Dict[int, float]  # m -> Pr[L_n = m]


@dataclass(frozen=True, eq=False)
class VLCode:
    K: int
    n: int
    gamma: float
    target: FiniteDist
    partition: LengthPartition
    apportionment: Dict[int, Dict[int, int]]  # m -> {outcome index: number of strings}
    induced: FiniteDist
    expected_length: float  # K-ary symbols
    distance: float
    distance_bound: float
    length_bound: float

    @property
    def length_pmf(self) -> Dict[int, float]:
        return self.partition.length_pmf

    @property
    def expected_length_rate(self) -> float:
        return self.expected_length / self.n

    def encode(self, string: Sequence[int]) -> int:
        """
        Map a K-ary string to its target outcome. Strings of one length are
        ranked lexicographically and handed out in consecutive blocks to the
        outcomes of the class in index order.
        """
        m = len(string)
        if m not in self.apportionment:
            raise ValueError(f'No outcomes use strings of length {m}.')
        if any(s < 0 or s >= self.K for s in string):
            raise ValueError(f'String {tuple(string)} has letters outside 0..{self.K - 1}.')
        rank = reduce(lambda acc, s: acc * self.K + int(s), string, 0)
        indices = list(self.apportionment[m].keys())
        boundaries = list(itertools.accumulate(self.apportionment[m].values()))
        return indices[bisect_right(boundaries, rank)]


@dataclass(frozen=True, eq=False)
class MixedVLCode:
    codes: List[VLCode]
    weights: np.ndarray
    length_pmf: Dict[int, float]
    expected_length: float
    average_distance: float  # sum_i alpha_i d(V_i, induced_i)
    mixture_distance: float  # d(sum_i alpha_i V_i, sum_i alpha_i induced_i)


@dataclass(frozen=True, eq=False)
class FVCode:
    K: int
    n: int
    kept: np.ndarray  # outcome indices by decreasing probability
    lengths: np.ndarray  # codeword length per kept outcome
    error_probability: float
    expected_length: float  # K-ary symbols, errors cost nothing
    kraft_sum: float

    @property
    def rate(self) -> float:
        return self.expected_length / self.n


@dataclass(frozen=True, eq=False)
class TypeClassFVCode:
    K: int
    n: int
    error_probability: float
    expected_length: float
    log_kept_count: float
    log_kraft_sum: float

    @property
    def rate(self) -> float:
        return self.expected_length / self.n

    @property
    def rate_bits(self) -> float:
        return self.rate * math.log2(self.K)


@dataclass(frozen=True, eq=False)
class ResolvabilityResult:
    smoothed: SmoothedResult
    code: VLCode
    source_distance: float  # d(P_X, induced)
    bound: float  # delta + distance bound of the code


@dataclass(frozen=True, eq=False)
class MixedResolvabilityResult:
    truncation: ComponentTruncation
    code: MixedVLCode
    source_distances: np.ndarray
    average_source_distance: float
    bound: float


def largest_remainder(weights: Sequence[float], seats: int) -> List[int]:
    """
    Hamilton apportionment in exact rational arithmetic. Every weight gets the
    floor of its quota seats * w / sum(w); leftover seats go to the largest
    remainders, ties to the lower position.

    Args:
        weights: Non-negative weights, not all zero
        seats: Number of seats to hand out

    Returns:
        counts: Seats per weight, summing to seats
    """
    fractions = [Fraction(w) for w in weights]
    total = sum(fractions)
    if total <= 0:
        raise ValueError('Apportionment needs a positive total weight.')
    quotas = [seats * f / total for f in fractions]
    counts = [math.floor(q) for q in quotas]
    leftover = seats - sum(counts)
    ranked = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in ranked[:leftover]:
        counts[i] += 1
    return counts


@coding_parameters
def partition_lengths(p_v: FiniteDist, K: int, n: int, gamma: float) -> LengthPartition:
    """
    Group the support of the target by codeword length
    m(x) = ceil(log_K(1 / P_V(x)) + n gamma).
    """
    K = int(K)
    support = p_v.support
    raw = -np.log(p_v.probs[support]) / math.log(K) + n * gamma
    m = np.maximum(np.ceil(raw - LENGTH_TOLERANCE), 1).astype(int)

    lengths = np.zeros(p_v.alphabet_size, dtype=int)
    lengths[support] = m
    classes = {int(length): support[m == length] for length in np.unique(m)}
    length_pmf = {length: math.fsum(p_v.probs[idx]) for length, idx in classes.items()}
    return LengthPartition(lengths=lengths, classes=classes, length_pmf=length_pmf)


@coding_parameters
def build_vlcode(p_v: FiniteDist, K: int, n: int, gamma: float) -> VLCode:
    """
    Build the resolvability code for a target distribution and evaluate it
    exactly.

    Args:
        p_v: Target distribution
        K: Coin alphabet size
        n: Blocklength, only enters through the slack n * gamma
        gamma: Slack > 0

    Returns:
        code: VLCode with its induced distribution, expected length and distance
    """
    K = int(K)
    partition = partition_lengths(p_v, K, n, gamma)
    apportionment = {}
    induced = np.zeros(p_v.alphabet_size)

    for m, idx in partition.classes.items():
        strings = K ** m
        if idx.size > strings:
            raise BoundViolationException(f'Length {m} class holds {idx.size} outcomes but only {strings} strings.')
        counts = largest_remainder(p_v.probs[idx].tolist(), strings)
        if sum(counts) != strings:
            raise BoundViolationException(f'Length {m} apportionment hands out {sum(counts)} of {strings} strings.')
        apportionment[m] = dict(zip(idx.tolist(), counts))
        induced[idx] = [partition.length_pmf[m] * float(Fraction(c, strings)) for c in counts]

    induced = FiniteDist(induced)
    expected_length = math.fsum(m * pm for m, pm in partition.length_pmf.items())
    distance = variational_distance(p_v, induced)
    slack = float(K) ** (-n * gamma)
    distance_bound = 0.5 * slack + gamma
    length_bound = (1 + slack) * (entropy(p_v, base=K) + n * gamma + 1)

    if distance > distance_bound + 1e-12:
        raise BoundViolationException(f'Code distance {distance} exceeds the bound {distance_bound}.')
    if expected_length > length_bound + 1e-12:
        raise BoundViolationException(f'Expected length {expected_length} exceeds the bound {length_bound}.')

    LOG.debug(f'Built code with K={K}, n={n}, gamma={gamma}: {len(apportionment)} lengths, '
              f'E[L]={expected_length:0.6g}, d={distance:0.3g}')
    return VLCode(K=K, n=n, gamma=gamma, target=p_v, partition=partition, apportionment=apportionment,
                  induced=induced, expected_length=expected_length, distance=distance,
                  distance_bound=distance_bound, length_bound=length_bound)


def gamma_sweep(p_v: FiniteDist, K: int, n: int, gammas: Sequence[float]) -> List[VLCode]:
    """Codes for one target over a list of slacks"""
    return [build_vlcode(p_v, K, n, g) for g in gammas]


def materialize_codewords(code: VLCode) -> Dict[Tuple[int, ...], int]:
    """
    List every string with its target outcome, for debugging small codes.

    Returns:
        mapping: K-ary string tuple -> outcome index
    """
    if code.n > MAX_DEBUG_BLOCKLENGTH:
        raise ValueError(f'Codeword listing is limited to n <= {MAX_DEBUG_BLOCKLENGTH}, received n = {code.n}.')
    mapping = {}
    for m, counts in code.apportionment.items():
        if code.K ** m > MAX_DEBUG_STRINGS:
            raise ValueError(f'Length {m} holds {code.K ** m} strings, more than {MAX_DEBUG_STRINGS}.')
        strings = itertools.product(range(code.K), repeat=m)
        for index, count in counts.items():
            for string in itertools.islice(strings, count):
                mapping[string] = index
    return mapping


def sample_code(code: VLCode, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw (L_n, uniform string) pairs and push them through the encoder"""
    ms = np.array(list(code.length_pmf.keys()))
    pmf = np.array(list(code.length_pmf.values()))
    lengths = rng.choice(ms, p=pmf / pmf.sum(), size=size)
    return np.array([code.encode(rng.integers(0, code.K, size=m).tolist()) for m in lengths.tolist()])


@coding_parameters
def build_mixed_vlcode(targets: Sequence[FiniteDist], weights: Sequence[float], K: int, n: int,
                       gamma: float) -> MixedVLCode:
    """
    One code per mixture component, with the weighted length distribution,
    expected length and average distance. The distance between the mixtures is
    reported too; joint convexity keeps it below the average distance.
    """
    w = as_probability_vector(weights, name='weights')
    if len(targets) != w.size:
        raise ValueError(f'Received {len(targets)} targets for {w.size} weights.')
    if len({t.alphabet_size for t in targets}) > 1:
        raise AlphabetMismatchException('Component targets live on different alphabets.')

    codes = [build_vlcode(t, K, n, gamma) for t in targets]
    length_pmf = {}
    for alpha, code in zip(w, codes):
        for m, pm in code.length_pmf.items():
            length_pmf[m] = length_pmf.get(m, 0.0) + alpha * pm
    length_pmf = dict(sorted(length_pmf.items()))

    target_mixture = FiniteDist(w @ np.vstack([t.probs for t in targets]))
    induced_mixture = FiniteDist(w @ np.vstack([c.induced.probs for c in codes]))
    return MixedVLCode(codes=codes, weights=w, length_pmf=length_pmf,
                       expected_length=float(np.dot(w, [c.expected_length for c in codes])),
                       average_distance=float(np.dot(w, [c.distance for c in codes])),
                       mixture_distance=variational_distance(target_mixture, induced_mixture))


def _shannon_lengths(log_probs: np.ndarray, K: int) -> np.ndarray:
    """ceil(log_K 1/p) from natural log probabilities, never negative"""
    return np.maximum(np.ceil(-log_probs / math.log(K) - LENGTH_TOLERANCE), 0).astype(int)


@unit_interval(check='delta')
@coding_parameters
def build_fv_code(p: FiniteDist, K: int, n: int, delta: float) -> FVCode:
    """
    Fixed-to-variable code with error probability at most delta: keep the
    most likely outcomes up to rank j*, drop the rest and give every kept
    outcome a Shannon length for the renormalized kept distribution.

    Args:
        p: Source distribution over blocks
        K: Code alphabet size
        n: Blocklength, used for the rate
        delta: Error budget in [0, 1)

    Returns:
        code: FVCode
    """
    order = sorted_descending(p)
    ps = p.probs[order]
    position = pivot_position(ps, delta)
    kept_probs = ps[:position + 1]
    error = float(ps[position + 1:].sum())

    lengths = _shannon_lengths(np.log(kept_probs / kept_probs.sum()), K)
    kraft = float(np.sum(np.power(float(K), -lengths)))
    if error > delta + TRUNCATION_TOLERANCE or kraft > 1 + 1e-12:
        raise InvariantViolationException(f'FV code broke an invariant: error {error}, Kraft sum {kraft}.')

    return FVCode(K=K, n=n, kept=order[:position + 1], lengths=lengths, error_probability=error,
                  expected_length=float(np.dot(kept_probs, lengths)), kraft_sum=kraft)


@unit_interval(check='delta')
@coding_parameters
def build_fv_code_iid(source, K: int, delta: float) -> TypeClassFVCode:
    """
    The same fixed-to-variable code for a binary memoryless (or mixed
    memoryless) block, summarized over type classes.

    Args:
        source: IIDSpec or MixedSourceSpec of binary IIDSpecs
        K: Code alphabet size
        delta: Error budget in [0, 1)

    Returns:
        code: TypeClassFVCode
    """
    table = type_class_table(source)
    tr = truncate_classes(table, delta)
    p = tr.pivot
    kept_total = 1.0 - tr.tail_mass

    lengths = _shannon_lengths(tr.log_probs[:p + 1] - math.log(kept_total), K)
    expected = float(np.dot(tr.masses[:p], lengths[:p]) + tr.kept_mass * lengths[p])
    log_terms = np.append(table.log_counts[tr.order[:p]], tr.log_kept) - lengths * math.log(K)
    log_kraft = float(logsumexp(log_terms))
    if tr.tail_mass > delta + TRUNCATION_TOLERANCE or log_kraft > 1e-12:
        raise InvariantViolationException(f'FV code broke an invariant: error {tr.tail_mass}, '
                                          f'ln Kraft sum {log_kraft}.')
    return TypeClassFVCode(K=K, n=table.n, error_probability=tr.tail_mass, expected_length=expected,
                           log_kept_count=tr.log_j_star, log_kraft_sum=log_kraft)


@unit_interval(check='delta')
@coding_parameters
def resolve_source(p: FiniteDist, delta: float, K: int, n: int, gamma: float) -> ResolvabilityResult:
    """
    Approximate a source within delta plus the code slack: smooth it to the
    entropy minimizer of the delta ball, then build the code for that target.
    """
    smoothed = smooth_min_entropy_dist(p, delta)
    code = build_vlcode(smoothed.v_delta, K, n, gamma)
    return ResolvabilityResult(smoothed=smoothed, code=code, source_distance=variational_distance(p, code.induced),
                               bound=delta + code.distance_bound)


@unit_interval(check='delta')
@coding_parameters
def resolve_mixed_source(spec: MixedSourceSpec, delta: float, K: int, n: int,
                         gamma: float) -> MixedResolvabilityResult:
    """
    Approximate every mixture component with its own code. Components are
    truncated at the pivot of the mixture, so the average distance to the
    components stays within delta plus the code slack.
    """
    truncation = truncate_components(spec, delta)
    code = build_mixed_vlcode(truncation.components, spec.weights, K, n, gamma)
    source_distances = np.array([variational_distance(materialize(c), vc.induced)
                                 for c, vc in zip(spec.components, code.codes)])
    average = float(spec.weights @ source_distances)
    return MixedResolvabilityResult(truncation=truncation, code=code, source_distances=source_distances,
                                    average_source_distance=average,
                                    bound=delta + code.codes[0].distance_bound)


def channel_output_distance(code: VLCode, w: DMC) -> float:
    """
    Distance between the channel outputs for the target and for the code,
    with the channel used once per letter of the block. It never exceeds the
    input side distance.
    """
    return variational_distance(dmc_product_output(code.target, w, code.n),
                                dmc_product_output(code.induced, w, code.n))
