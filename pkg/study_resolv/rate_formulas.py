"""
Closed form first and second order rates for mixtures of memoryless sources.

Components are ranked by decreasing single letter entropy. The pivot i* is the
first rank whose cumulative weight A_i* exceeds delta; the first order rate is
(A_i* - delta) H(X_i*) + sum_{i > i*} alpha_i H(X_i) and the second order term
depends on the pivot alone through its varentropy. Finite alphabets always have
a finite third absolute moment of the self information, so that regularity
condition needs no check.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .decorators import unit_interval
from .dist_core import FiniteDist, IIDSpec, MixedSourceSpec, entropy
from .smooth_entropy import allocation_pivot
from .stats import q_inverse

LOG = logging.getLogger('study_resolv.rate_formulas')

# Entropies closer than this are treated as tied
ENTROPY_TIE_TOLERANCE = 1e-12


class EntropyTieException(ValueError):
    """
    Exception to raise when the second order formula is asked for components
    with equal entropies, which it does not cover.
    """
    pass


@dataclass(frozen=True, eq=False)
class RateReport:
    i_star: int  # 1-based rank of the pivot component
    active_index: int  # original index of the pivot component
    order: np.ndarray  # components by decreasing entropy
    a_istar: float
    delta_istar: float
    first_order: float  # bits / symbol
    second_order: Optional[float]  # bits / sqrt(symbol)
    per_component: List[Tuple[float, float]]  # (H bits, V bits^2) in original order


def _single_letters(spec) -> Tuple[List[FiniteDist], np.ndarray]:
    if isinstance(spec, IIDSpec):
        spec = MixedSourceSpec.single(spec)
    if not isinstance(spec, MixedSourceSpec):
        raise ValueError('Rate formulas need a MixedSourceSpec of memoryless components.')
    letters = [c.single_letter if isinstance(c, IIDSpec) else c for c in spec.components]
    return letters, spec.weights


def varentropy(p: FiniteDist, base: float = 2.0) -> float:
    """
    Variance of the self information log 1/p(X).

    Args:
        p: FiniteDist
        base: Logarithm base, 2 gives bits^2

    Returns:
        v: varentropy in squared log-base units
    """
    if not base > 1:
        raise ValueError(f'base = {base} is invalid, use a logarithm base > 1.')
    support = p.probs[p.probs > 0]
    info = -np.log(support) / math.log(base)
    h = np.dot(support, info)
    return float(max(np.dot(support, (info - h) ** 2), 0.0))


def to_kary(value_bits: float, K: int) -> float:
    """Convert a quantity in bits to K-ary symbols"""
    if K < 2:
        raise ValueError(f'K = {K} is invalid, use an alphabet size >= 2.')
    return value_bits / math.log2(K)


@unit_interval(check='delta')
def first_order_rate(spec: MixedSourceSpec, delta: float) -> RateReport:
    """
    First order rate of a mixed memoryless source with budget delta.

    Args:
        spec: MixedSourceSpec of IIDSpecs (single letter laws are used)
        delta: Budget in [0, 1)

    Returns:
        report: RateReport with second_order left as None
    """
    letters, weights = _single_letters(spec)
    h = np.array([entropy(p) for p in letters])
    v = np.array([varentropy(p) for p in letters])

    order = np.argsort(-h, kind='stable')
    hs, ws = h[order], weights[order]
    position, a_istar, delta_istar = allocation_pivot(ws, delta)
    first = (a_istar - delta) * hs[position] + float(np.sum(ws[position + 1:] * hs[position + 1:]))

    LOG.debug(f'i*={position + 1}, A_i*={a_istar:0.4g}, first order rate {first:0.6g} bits')
    return RateReport(i_star=position + 1, active_index=int(order[position]), order=order, a_istar=a_istar,
                      delta_istar=delta_istar, first_order=max(first, 0.0), second_order=None,
                      per_component=list(zip(h.tolist(), v.tolist())))


def dispersion_term(alpha_istar: float, v_istar: float, delta_istar: float) -> float:
    """
    The second order term -alpha sqrt(V / 2 pi) exp(-Q^-1(delta)^2 / 2). It is
    zero when delta_istar is 0, reading exp(-Q^-1(0)^2 / 2) as 0.
    """
    if not 0 < delta_istar < 1 or v_istar == 0:
        return 0.0
    return -alpha_istar * math.sqrt(v_istar / (2 * math.pi)) * math.exp(-q_inverse(delta_istar) ** 2 / 2)


@unit_interval(check='delta')
def second_order_rate(spec: MixedSourceSpec, delta: float) -> RateReport:
    """
    Second order rate, in bits per sqrt(symbol), at the first order rate.
    Components with positive weight must have distinct entropies.
    """
    report = first_order_rate(spec, delta)
    letters, weights = _single_letters(spec)
    h = np.array([c[0] for c in report.per_component])
    positive = np.sort(h[weights > 0])
    if np.any(np.diff(positive) <= ENTROPY_TIE_TOLERANCE):
        raise EntropyTieException('Components share an entropy, the second order formula needs a strict ordering.')

    v_istar = report.per_component[report.active_index][1]
    second = dispersion_term(weights[report.active_index], v_istar, report.delta_istar)
    return replace(report, second_order=second)


def second_order_estimate(spec: MixedSourceSpec, n: int, delta: float) -> float:
    """Two term estimate n R1 + sqrt(n) R2 of the smooth entropy of a block, in bits"""
    if int(n) != n or n < 1:
        raise ValueError(f'n = {n} is invalid, the blocklength must be a positive integer.')
    report = second_order_rate(spec, delta)
    return n * report.first_order + math.sqrt(n) * report.second_order


@unit_interval(check='delta', closed_low=False)
def kpv_estimate(p: FiniteDist, n: int, delta: float) -> float:
    """
    Two term expansion of the smooth entropy of n memoryless draws,
    (1 - delta) n H - sqrt(n V / 2 pi) exp(-Q^-1(delta)^2 / 2), in bits.
    Only interior budgets are accepted.
    """
    if int(n) != n or n < 1:
        raise ValueError(f'n = {n} is invalid, the blocklength must be a positive integer.')
    h = entropy(p)
    v = varentropy(p)
    return (1 - delta) * n * h - math.sqrt(n * v / (2 * math.pi)) * math.exp(-q_inverse(delta) ** 2 / 2)
