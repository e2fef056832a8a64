from os.path import join

import pytest

from study_resolv.config import ExperimentSpec, InvalidSpecException, MAX_CONVERGE_N, thread_count
from study_resolv.dist_core import DMC, FiniteDist, IIDSpec, MixedSourceSpec


class TestFromJson:

    def test_load(self, data_dir):
        spec = ExperimentSpec.from_json(join(data_dir, 'experiment.json'))
        assert spec.command == 'rates'
        assert spec.alphas == [0.3, 0.7]
        assert spec.delta == [0.0, 0.1]
        spec.validate()

    def test_unknown_keys(self, data_dir):
        with pytest.raises(InvalidSpecException, match='blocklength'):
            ExperimentSpec.from_json(join(data_dir, 'bad_keys.json'))

    def test_not_an_object(self, tmp_path):
        f = tmp_path / 'list.json'
        f.write_text('[1, 2]')
        with pytest.raises(InvalidSpecException):
            ExperimentSpec.from_json(str(f))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            ExperimentSpec.from_json(str(tmp_path / 'missing.json'))


class TestMerged:

    def test_flags_win(self, data_dir):
        spec = ExperimentSpec.from_json(join(data_dir, 'experiment.json'))
        merged = spec.merged({'delta': [0.25], 'grid_step': None, 'command': 'rates'})
        assert merged.delta == [0.25]
        assert merged.grid_step == 0.001
        # The file spec is untouched
        assert spec.delta == [0.0, 0.1]

    def test_source_replaced(self, data_dir):
        spec = ExperimentSpec.from_json(join(data_dir, 'experiment.json'))
        merged = spec.merged({'iid': [0.3]})
        assert merged.components is None
        assert merged.iid == [0.3]

    def test_scalar_delta(self):
        assert ExperimentSpec().merged({'delta': 0.2}).delta == [0.2]
        assert ExperimentSpec(delta=0.3).delta == [0.3]


class TestValidate:

    @pytest.mark.parametrize('kwargs, match', [
        ({'command': 'plot', 'probs': [1.0]}, 'Unknown command'),
        ({'command': 'smooth'}, 'exactly one source'),
        ({'command': 'smooth', 'probs': [1.0], 'iid': 0.5}, 'exactly one source'),
        ({'command': 'smooth', 'components': []}, 'empty'),
        ({'command': 'smooth', 'components': [{'p': 0.5}]}, 'alpha'),
        ({'command': 'smooth', 'probs': [1.0], 'delta': [1.0]}, 'delta'),
        ({'command': 'code', 'probs': [1.0], 'gamma': 0}, 'gamma'),
        ({'command': 'code', 'probs': [1.0], 'K': 1}, 'K'),
        ({'command': 'code', 'probs': [1.0], 'K': 2.5}, 'K'),
        ({'command': 'smooth', 'iid': 0.5, 'n': 0}, 'n = 0'),
        ({'command': 'smooth', 'iid': 0.5, 'n_sweep': [10, -1]}, 'n = -1'),
        ({'command': 'rates', 'iid': 0.5, 'grid_step': 0.5}, 'grid_step'),
        ({'command': 'smooth', 'probs': [1.0], 'channel': [[1.0]]}, 'channel'),
        ({'command': 'rates', 'probs': [0.5, 0.5]}, 'memoryless'),
        ({'command': 'converge', 'iid': 0.3}, 'n_sweep'),
        ({'command': 'converge', 'iid': [0.2, 0.3, 0.5], 'n_sweep': [10]}, 'binary'),
        ({'command': 'converge', 'probs': [0.5, 0.5], 'n_sweep': [10]}, 'binary'),
        ({'command': 'converge', 'iid': 0.3, 'n_sweep': [10, MAX_CONVERGE_N + 1]}, 'limit'),
        ({'command': 'code', 'probs': [1.0], 'delta': [0.1, 0.2]}, 'delta list'),
        ({'command': 'code', 'iid': 0.3, 'n_sweep': [2, 4]}, 'n_sweep'),
    ])
    def test_rejects(self, kwargs, match):
        with pytest.raises(InvalidSpecException, match=match):
            ExperimentSpec(**kwargs).validate()

    def test_integer_fields(self):
        spec = ExperimentSpec(command='converge', iid=0.3, K=2.0, n=3.0, n_sweep=[10.0, 100.0])
        spec.validate()
        assert isinstance(spec.K, int)
        assert isinstance(spec.n, int)
        assert all(isinstance(n, int) for n in spec.n_sweep)

    def test_blocklengths(self):
        assert ExperimentSpec(n=4).blocklengths == [4]
        assert ExperimentSpec(n=4, n_sweep=[10, 20]).blocklengths == [10, 20]


class TestSource:

    def test_explicit(self):
        source = ExperimentSpec(probs=[0.5, 0.3, 0.2]).source()
        assert isinstance(source, FiniteDist)

    @pytest.mark.parametrize('iid, size', [(0.3, 2), ([0.3], 2), ([0.2, 0.3, 0.5], 3)])
    def test_iid(self, iid, size):
        source = ExperimentSpec(iid=iid, n=4).source()
        assert isinstance(source, IIDSpec)
        assert source.n == 4
        assert source.single_letter.alphabet_size == size

    def test_iid_bernoulli_convention(self):
        """Bernoulli(p) places mass p on the first symbol"""
        source = ExperimentSpec(iid=0.3).source()
        assert source.single_letter.probs.tolist() == pytest.approx([0.3, 0.7])

    def test_components(self):
        spec = ExperimentSpec(components=[{'p': 0.1, 'alpha': 0.3}, {'p': 0.4, 'alpha': 0.7}], n=10)
        source = spec.source(100)
        assert isinstance(source, MixedSourceSpec)
        assert source.is_iid
        assert all(c.n == 100 for c in source.components)
        assert spec.is_memoryless()
        assert spec.is_binary_memoryless()

    def test_explicit_components(self):
        spec = ExperimentSpec(components=[{'p': [0.75, 0.25], 'alpha': 0.5}, {'p': [0.25, 0.75], 'alpha': 0.5}])
        source = spec.source()
        assert all(isinstance(c, FiniteDist) for c in source.components)
        assert not spec.is_memoryless()
        assert not spec.is_binary_memoryless()

    def test_letter_source(self):
        spec = ExperimentSpec(components=[{'p': 0.1, 'alpha': 0.3}, {'p': 0.4, 'alpha': 0.7}], n=1000)
        letters = spec.letter_source()
        assert all(c.n == 1 for c in letters.components)
        assert letters.weights.tolist() == pytest.approx([0.3, 0.7])

    def test_letter_source_explicit(self):
        letters = ExperimentSpec(probs=[0.5, 0.3, 0.2]).letter_source()
        assert letters.n_components == 1
        assert letters.components[0].single_letter.alphabet_size == 3

    def test_dmc(self):
        assert ExperimentSpec(probs=[1.0]).dmc() is None
        assert isinstance(ExperimentSpec(channel=[[0.9, 0.1], [0.2, 0.8]]).dmc(), DMC)

    def test_metadata(self):
        meta = ExperimentSpec(command='smooth', probs=[0.5, 0.5], out='results.csv').metadata()
        assert meta['command'] == '"smooth"'
        assert meta['probs'] == '[0.5, 0.5]'
        assert 'out' not in meta
        assert 'iid' not in meta


@pytest.mark.parametrize('env, tasks, expected', [
    ('1', 10, 1),
    ('4', 10, 4),
    ('4', 2, 2),
    (None, 1, 1),
])
def test_thread_count(monkeypatch, env, tasks, expected):
    if env is None:
        monkeypatch.delenv('RESOLV_THREADS', raising=False)
    else:
        monkeypatch.setenv('RESOLV_THREADS', env)
    assert thread_count(tasks) == expected


@pytest.mark.parametrize('env', ['0', 'many', '-2'])
def test_thread_count_invalid(monkeypatch, env):
    monkeypatch.setenv('RESOLV_THREADS', env)
    with pytest.raises(InvalidSpecException):
        thread_count(4)
