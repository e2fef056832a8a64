"""
Exact arithmetic on explicit finite distributions: validation, variational
distance, entropy, mixtures, i.i.d. extensions and discrete memoryless channels.

Everything here works on plain probability vectors in double precision. Vectors
over product alphabets are kept in lexicographic order with the first letter
most significant, which is the order ``np.kron`` produces.
"""
import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Union

import numpy as np
from scipy.special import entr

LOG = logging.getLogger('study_resolv.dist_core')

# Inputs further than this from a unit sum are rejected, closer ones are renormalized
NORMALIZATION_TOLERANCE = 1e-9

# Negative entries this small are treated as round off
NEGATIVE_TOLERANCE = 1e-12

# Largest alphabet the explicit paths will materialize
MAX_EXPLICIT_SIZE = 2 ** 24


class InvalidDistributionException(ValueError):
    """
    Exception to raise when a vector can not be interpreted as a probability
    distribution.
    """
    pass


class AlphabetMismatchException(ValueError):
    """
    Exception to raise when distributions, channels or mixture components do not
    share the alphabet an operation needs.
    """
    pass


class ExplicitSizeException(ValueError):
    """
    Exception to raise when an explicit product alphabet would be too large to
    materialize.
    """
    pass


class InvariantViolationException(Exception):
    """
    Exception to raise when a computed object breaks a property that holds by
    construction. Seeing one means a bug, not a bad input.
    """
    pass


def as_probability_vector(values, name='probs') -> np.ndarray:
    """
    Validate and return a read only probability vector.

    Args:
        values: array-like of non-negative numbers summing to one
        name: Name used in error messages

    Returns:
        arr: 1-D float array renormalized to sum to one
    """
    arr = np.array(values, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidDistributionException(f'{name} is empty, a distribution needs at least one outcome.')
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionException(f'{name} contains non-finite entries.')
    if np.any(arr < -NEGATIVE_TOLERANCE):
        raise InvalidDistributionException(f'{name} contains negative entries (min = {arr.min()}).')
    arr[arr < 0] = 0.0

    total = arr.sum()
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise InvalidDistributionException(f'{name} sums to {total}, which is not within '
                                           f'{NORMALIZATION_TOLERANCE} of 1.')
    if abs(total - 1.0) > 1e-12:
        LOG.warning(f'{name} sums to {total!r}, renormalizing.')
    if total != 1.0:
        arr = arr / total

    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """Probability vector over the alphabet {0, ..., N-1}"""
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'probs', as_probability_vector(self.probs))

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> np.ndarray:
        """Indices with non-zero probability"""
        return np.flatnonzero(self.probs > 0)

    def __len__(self):
        return self.alphabet_size

    def __getitem__(self, item):
        return self.probs[item]

    def allclose(self, other, atol=1e-12) -> bool:
        other = other.probs if isinstance(other, FiniteDist) else np.asarray(other)
        return self.probs.shape == other.shape and bool(np.allclose(self.probs, other, rtol=0, atol=atol))


@dataclass(frozen=True)
class IIDSpec:
    """A memoryless source given by its single letter law and a blocklength"""
    single_letter: FiniteDist
    n: int

    def __post_init__(self):
        if not isinstance(self.single_letter, FiniteDist):
            object.__setattr__(self, 'single_letter', FiniteDist(self.single_letter))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f'n = {self.n} is invalid, the blocklength must be a positive integer.')
        object.__setattr__(self, 'n', int(self.n))

    @property
    def alphabet_size(self) -> int:
        """Size of the product alphabet, as an exact python int"""
        return self.single_letter.alphabet_size ** self.n


Component = Union[FiniteDist, IIDSpec]


@dataclass(frozen=True, eq=False)
class MixedSourceSpec:
    """
    A finite mixture of component sources sharing one alphabet. Components are
    explicit distributions or memoryless specs.
    """
    components: List[Component]
    weights: np.ndarray

    def __post_init__(self):
        components = [c if isinstance(c, (FiniteDist, IIDSpec)) else FiniteDist(c) for c in self.components]
        if len(components) == 0:
            raise ValueError('A mixed source needs at least one component.')

        weights = as_probability_vector(self.weights, name='weights')
        if weights.size != len(components):
            raise ValueError(f'Received {weights.size} weights for {len(components)} components.')

        sizes = {c.alphabet_size for c in components}
        if len(sizes) > 1:
            raise AlphabetMismatchException(f'Mixture components live on different alphabets (sizes {sorted(sizes)}).')

        object.__setattr__(self, 'components', components)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def single(cls, component: Component):
        return cls([component], [1.0])

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def alphabet_size(self) -> int:
        return self.components[0].alphabet_size

    @property
    def is_iid(self) -> bool:
        return all(isinstance(c, IIDSpec) for c in self.components)


@dataclass(frozen=True, eq=False)
class DMC:
    """Discrete memoryless channel given by its stochastic matrix W(y|x)"""
    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise InvalidDistributionException('A channel needs a 2-D matrix of transition probabilities.')
        rows = np.vstack([as_probability_vector(r, name=f'row {i}') for i, r in enumerate(rows)])
        rows.setflags(write=False)
        object.__setattr__(self, 'rows', rows)

    @classmethod
    def identity(cls, size: int):
        return cls(np.eye(size))

    @property
    def input_size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def output_size(self) -> int:
        return int(self.rows.shape[1])


def bernoulli(p: float) -> FiniteDist:
    """Binary distribution placing mass p on symbol 0"""
    return FiniteDist([p, 1.0 - p])


def _check_same_alphabet(p: FiniteDist, q: FiniteDist):
    if p.alphabet_size != q.alphabet_size:
        raise AlphabetMismatchException(f'Distributions have alphabet sizes {p.alphabet_size} '
                                        f'and {q.alphabet_size}.')


def variational_distance(p: FiniteDist, q: FiniteDist) -> float:
    """
    Half the L1 distance between two distributions on one alphabet.

    Args:
        p: FiniteDist
        q: FiniteDist on the same alphabet

    Returns:
        d: float in [0, 1]
    """
    _check_same_alphabet(p, q)
    d = 0.5 * np.abs(p.probs - q.probs).sum()
    return float(min(d, 1.0))


def entropy(p: FiniteDist, base: float = 2.0) -> float:
    """
    Shannon entropy with the convention 0 log(1/0) = 0.

    Args:
        p: FiniteDist
        base: Logarithm base, 2 gives bits

    Returns:
        h: entropy in log-base units
    """
    if not base > 1:
        raise ValueError(f'base = {base} is invalid, use a logarithm base > 1.')
    return float(entr(p.probs).sum() / np.log(base))


def product_extension(spec: IIDSpec) -> FiniteDist:
    """
    Explicit distribution of n independent draws of the single letter law, in
    lexicographic order.
    """
    if spec.alphabet_size > MAX_EXPLICIT_SIZE:
        raise ExplicitSizeException(f'The product alphabet has {spec.alphabet_size} outcomes, more than '
                                    f'{MAX_EXPLICIT_SIZE}. Use the type class functions in '
                                    f'study_resolv.smooth_entropy for long blocks.')
    p = spec.single_letter.probs
    return FiniteDist(reduce(np.kron, [p] * spec.n))


def materialize(component: Component) -> FiniteDist:
    """Explicit distribution of a mixture component"""
    if isinstance(component, IIDSpec):
        return product_extension(component)
    return component


def mixture(spec: MixedSourceSpec) -> FiniteDist:
    """Entrywise weighted sum of the (materialized) components"""
    stacked = np.vstack([materialize(c).probs for c in spec.components])
    return FiniteDist(spec.weights @ stacked)


def dmc_output(p: FiniteDist, w: DMC) -> FiniteDist:
    """Output law q(y) = sum_x p(x) W(y|x) of a single channel use"""
    if p.alphabet_size != w.input_size:
        raise AlphabetMismatchException(f'Input distribution has {p.alphabet_size} outcomes but the channel '
                                        f'accepts {w.input_size}.')
    return FiniteDist(p.probs @ w.rows)


def dmc_product_output(p: FiniteDist, w: DMC, n: int) -> FiniteDist:
    """
    Output law of n uses of a memoryless channel for an input law on the
    product alphabet, applied one letter position at a time.

    Args:
        p: FiniteDist over the input alphabet to the power n (lexicographic)
        w: DMC applied to each letter
        n: Blocklength

    Returns:
        q: FiniteDist over the output alphabet to the power n
    """
    if p.alphabet_size != w.input_size ** n:
        raise AlphabetMismatchException(f'Input distribution has {p.alphabet_size} outcomes, expected '
                                        f'{w.input_size}^{n}.')
    if w.output_size ** n > MAX_EXPLICIT_SIZE:
        raise ExplicitSizeException(f'The output alphabet has {w.output_size ** n} outcomes, more than '
                                    f'{MAX_EXPLICIT_SIZE}.')
    tensor = p.probs.reshape((w.input_size,) * n)
    for axis in range(n):
        tensor = np.moveaxis(np.tensordot(tensor, w.rows, axes=([axis], [0])), -1, axis)
    return FiniteDist(tensor.reshape(-1))


def sorted_descending(p: FiniteDist) -> np.ndarray:
    """
    Permutation listing indices by descending probability, ties broken by the
    smaller index.
    """
    return np.argsort(-p.probs, kind='stable')


def majorizes(u, v, tol=1e-12) -> bool:
    """
    True when u majorizes v, i.e. every partial sum of u sorted in decreasing
    order is at least the matching partial sum of v.
    """
    u = np.sort(np.asarray(u.probs if isinstance(u, FiniteDist) else u, dtype=float))[::-1]
    v = np.sort(np.asarray(v.probs if isinstance(v, FiniteDist) else v, dtype=float))[::-1]
    if u.size != v.size:
        raise AlphabetMismatchException(f'Cannot compare vectors of lengths {u.size} and {v.size}.')
    return bool(np.all(np.cumsum(u) >= np.cumsum(v) - tol))


def sample_ball(p: FiniteDist, delta: float, rng: np.random.Generator, size: int = 1,
                concentration: float = 1.0) -> np.ndarray:
    """
    Draw distributions within variational distance delta of p. Dirichlet draws
    further than delta are pulled back along the segment to p onto the ball
    boundary. This is a statistical oracle, not an exhaustive search.

    Args:
        p: Center of the ball
        delta: Radius
        rng: numpy random generator
        size: Number of draws
        concentration: Dirichlet concentration, small values give spiky draws

    Returns:
        samples: array of shape (size, N), one distribution per row
    """
    draws = rng.dirichlet(np.full(p.alphabet_size, concentration), size=size)
    offsets = draws - p.probs
    dist = 0.5 * np.abs(offsets).sum(axis=1)
    scale = np.ones_like(dist)
    far = dist > delta
    scale[far] = delta / dist[far]
    samples = p.probs + scale[:, None] * offsets
    return np.clip(samples, 0.0, None)
