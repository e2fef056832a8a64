import pytest
import numpy as np
from numpy.testing import assert_allclose

from study_resolv.dist_core import (DMC, FiniteDist, IIDSpec, MixedSourceSpec, AlphabetMismatchException,
                                    ExplicitSizeException, InvalidDistributionException, as_probability_vector,
                                    bernoulli, dmc_output, dmc_product_output, entropy, majorizes, materialize,
                                    mixture, product_extension, sample_ball, sorted_descending, variational_distance)


class TestProbabilityVector:

    @pytest.mark.parametrize('values', [
        # Negative entry
        [0.5, 0.6, -0.1],
        # Sum too far from one
        [0.5, 0.4],
        # Empty
        [],
        # Not finite
        [np.nan, 1.0],
    ])
    def test_rejects(self, values):
        with pytest.raises(InvalidDistributionException):
            as_probability_vector(values)

    def test_renormalizes_within_tolerance(self):
        arr = as_probability_vector([0.5, 0.5 + 1e-10])
        assert arr.sum() == pytest.approx(1.0, abs=1e-15)

    def test_read_only(self):
        p = FiniteDist([0.25, 0.75])
        with pytest.raises(ValueError):
            p.probs[0] = 1.0

    def test_support(self):
        p = FiniteDist([0.5, 0.0, 0.5])
        assert p.support.tolist() == [0, 2]
        assert len(p) == 3


@pytest.mark.parametrize('p, q, expected', [
    ([0.5, 0.3, 0.2], [0.5, 0.3, 0.2], 0.0),
    ([0.5, 0.5], [1.0, 0.0], 0.5),
    ([0.5, 0.3, 0.2], [0.75, 0.25, 0.0], 0.25),
])
def test_variational_distance(p, q, expected):
    assert variational_distance(FiniteDist(p), FiniteDist(q)) == pytest.approx(expected, abs=1e-12)


def test_variational_distance_mismatch():
    with pytest.raises(AlphabetMismatchException):
        variational_distance(FiniteDist([0.5, 0.5]), FiniteDist([1.0, 0.0, 0.0]))


@pytest.mark.parametrize('p, base, expected', [
    ([1.0, 0.0, 0.0], 2, 0.0),
    ([0.75, 0.25], 2, 0.811278),
    ([0.5, 0.3, 0.2], 2, 1.485475),
    ([0.25] * 4, 2, 2.0),
    ([0.25] * 4, 4, 1.0),
])
def test_entropy(p, base, expected):
    assert entropy(FiniteDist(p), base=base) == pytest.approx(expected, abs=1e-6)


def test_entropy_invalid_base():
    with pytest.raises(ValueError):
        entropy(FiniteDist([0.5, 0.5]), base=1)


@pytest.mark.parametrize('components, weights, expected', [
    ([[1, 0], [0, 1]], [0.5, 0.5], [0.5, 0.5]),
    ([[0.2, 0.8]], [1.0], [0.2, 0.8]),
    ([[0.5, 0.5], [0.9, 0.1]], [0.3, 0.7], [0.78, 0.22]),
])
def test_mixture(components, weights, expected):
    result = mixture(MixedSourceSpec(components, weights))
    assert_allclose(result.probs, expected, atol=1e-12)


class TestMixedSourceSpec:

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetMismatchException):
            MixedSourceSpec([[0.5, 0.5], [0.2, 0.3, 0.5]], [0.5, 0.5])

    def test_weight_count(self):
        with pytest.raises(ValueError):
            MixedSourceSpec([[0.5, 0.5], [0.2, 0.8]], [1.0])

    def test_memoryless_components(self):
        spec = MixedSourceSpec([IIDSpec(bernoulli(0.1), 3), IIDSpec(bernoulli(0.4), 3)], [0.3, 0.7])
        assert spec.is_iid
        assert spec.n_components == 2
        assert spec.alphabet_size == 8


class TestProductExtension:

    @pytest.mark.parametrize('p, n, expected', [
        (0.75, 2, [0.5625, 0.1875, 0.1875, 0.0625]),
        (0.5, 3, [0.125] * 8),
        (0.3, 1, [0.3, 0.7]),
    ])
    def test_values(self, p, n, expected):
        result = product_extension(IIDSpec(bernoulli(p), n))
        assert_allclose(result.probs, expected, atol=1e-12)

    def test_size_guard(self):
        with pytest.raises(ExplicitSizeException):
            product_extension(IIDSpec(bernoulli(0.5), 25))

    def test_exact_alphabet_size(self):
        assert IIDSpec(bernoulli(0.5), 100).alphabet_size == 2 ** 100

    @pytest.mark.parametrize('n', [0, -1, 2.5])
    def test_invalid_blocklength(self, n):
        with pytest.raises(ValueError):
            IIDSpec(bernoulli(0.5), n)

    def test_materialize_passthrough(self):
        p = FiniteDist([0.2, 0.8])
        assert materialize(p) is p


class TestChannels:
    @pytest.fixture(scope='function')
    def w(self):
        return DMC([[0.9, 0.1], [0.2, 0.8]])

    @pytest.mark.parametrize('p, expected', [
        ([1.0, 0.0], [0.9, 0.1]),
        ([0.5, 0.5], [0.55, 0.45]),
    ])
    def test_output(self, w, p, expected):
        assert_allclose(dmc_output(FiniteDist(p), w).probs, expected, atol=1e-12)

    def test_identity(self):
        p = FiniteDist([0.2, 0.3, 0.5])
        assert dmc_output(p, DMC.identity(3)).allclose(p)

    def test_mismatch(self, w):
        with pytest.raises(AlphabetMismatchException):
            dmc_output(FiniteDist([0.2, 0.3, 0.5]), w)

    def test_product_of_memoryless_input(self, w):
        """A memoryless input gives a memoryless output"""
        letter = bernoulli(0.3)
        q = dmc_output(letter, w).probs
        result = dmc_product_output(product_extension(IIDSpec(letter, 3)), w, 3)
        assert_allclose(result.probs, np.kron(np.kron(q, q), q), atol=1e-12)

    def test_product_identity(self, rng):
        p = FiniteDist(rng.dirichlet(np.ones(8)))
        assert dmc_product_output(p, DMC.identity(2), 3).allclose(p)

    def test_rejects_bad_rows(self):
        with pytest.raises(InvalidDistributionException):
            DMC([[0.5, 0.6], [0.5, 0.5]])


def test_joint_convexity(rng):
    """d(sum a_i P_i, sum a_i Q_i) never exceeds sum a_i d(P_i, Q_i)"""
    for _ in range(200):
        k = rng.integers(2, 5)
        size = rng.integers(2, 7)
        weights = rng.dirichlet(np.ones(k))
        ps = rng.dirichlet(np.ones(size), size=k)
        qs = rng.dirichlet(np.ones(size), size=k)
        lhs = variational_distance(FiniteDist(weights @ ps), FiniteDist(weights @ qs))
        rhs = sum(w * variational_distance(FiniteDist(p), FiniteDist(q)) for w, p, q in zip(weights, ps, qs))
        assert lhs <= rhs + 1e-12


def test_sorted_descending_ties():
    assert sorted_descending(FiniteDist([0.25, 0.5, 0.25])).tolist() == [1, 0, 2]


@pytest.mark.parametrize('u, v, expected', [
    ([1.0, 0.0, 0.0], [0.2, 0.3, 0.5], True),
    ([1 / 3, 1 / 3, 1 / 3], [0.2, 0.3, 0.5], False),
    ([0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3], True),
    ([0.5, 0.3, 0.2], [0.2, 0.5, 0.3], True),
])
def test_majorizes(u, v, expected):
    assert majorizes(u, v) == expected


def test_sample_ball(rng):
    p = FiniteDist([0.5, 0.3, 0.2])
    samples = sample_ball(p, 0.1, rng, size=500)
    assert samples.shape == (500, 3)
    assert_allclose(samples.sum(axis=1), 1.0, atol=1e-12)
    distances = 0.5 * np.abs(samples - p.probs).sum(axis=1)
    assert np.all(distances <= 0.1 + 1e-12)
    assert np.all(samples >= 0)


def test_metric_axioms(rng):
    for _ in range(1000):
        size = rng.integers(2, 9)
        p, q, r = (FiniteDist(v) for v in rng.dirichlet(np.ones(size), size=3))
        d_pq = variational_distance(p, q)
        assert d_pq == pytest.approx(variational_distance(q, p), abs=1e-15)
        assert 0.0 <= d_pq <= 1.0
        assert variational_distance(p, p) == 0.0
        assert d_pq <= variational_distance(p, r) + variational_distance(r, q) + 1e-12


def test_entropy_concavity(rng):
    for _ in range(500):
        size = rng.integers(2, 9)
        p, q = rng.dirichlet(np.ones(size), size=2)
        lam = rng.uniform()
        mixed = entropy(FiniteDist(lam * p + (1 - lam) * q))
        assert mixed >= lam * entropy(FiniteDist(p)) + (1 - lam) * entropy(FiniteDist(q)) - 1e-12


def test_data_processing(rng):
    """A channel never increases the distance between its inputs"""
    for _ in range(500):
        size_in, size_out = rng.integers(2, 7, size=2)
        w = DMC(rng.dirichlet(np.ones(size_out), size=size_in))
        p, q = (FiniteDist(v) for v in rng.dirichlet(np.ones(size_in), size=2))
        assert variational_distance(dmc_output(p, w), dmc_output(q, w)) <= variational_distance(p, q) + 1e-12


@pytest.mark.parametrize('n', [1, 2, 5, 8])
def test_product_entropy_additive(rng, n):
    letter = FiniteDist(rng.dirichlet(np.ones(3)))
    assert entropy(product_extension(IIDSpec(letter, n))) == pytest.approx(n * entropy(letter), abs=1e-9)
