import json
import logging
import numbers
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Union

from .dist_core import DMC, FiniteDist, IIDSpec, MixedSourceSpec, bernoulli

LOG = logging.getLogger('study_resolv.config')

COMMANDS = ('smooth', 'rates', 'code', 'fv', 'converge')
SOURCE_KEYS = ('probs', 'iid', 'components')

# Largest blocklength the convergence sweep will evaluate over type classes
MAX_CONVERGE_N = 10 ** 6


class InvalidSpecException(ValueError):
    """
    Exception to raise when an experiment spec is malformed or does not meet
    the needs of the command it targets.
    """
    pass


def _letter(p) -> FiniteDist:
    """A scalar is a Bernoulli parameter, a list is a full single letter law"""
    if isinstance(p, numbers.Number):
        return bernoulli(float(p))
    letter = list(p)
    if len(letter) == 1:
        return bernoulli(float(letter[0]))
    return FiniteDist(letter)


def _is_scalar(p) -> bool:
    return isinstance(p, numbers.Number) or (isinstance(p, (list, tuple)) and len(p) == 1)


@dataclass
class ExperimentSpec:
    """
    Everything one command needs: a source, its parameters and where to write.

    Sources come in three forms, exactly one of which is given:

        * probs: an explicit distribution over blocks
        * iid: a single letter law (a scalar is Bernoulli(p)) repeated n times
        * components: list of {"p": ..., "alpha": ...}. A scalar or single
          letter p is a memoryless component of blocklength n, a longer list
          is an explicit component distribution
    """
    command: Optional[str] = None
    probs: Optional[List[float]] = None
    iid: Optional[Union[float, List[float]]] = None
    components: Optional[List[dict]] = None
    n: int = 1
    delta: List[float] = field(default_factory=lambda: [0.0])
    gamma: float = 1.0
    K: int = 2
    n_sweep: Optional[List[int]] = None
    grid_step: float = 1e-3
    out: Optional[str] = None
    channel: Optional[List[List[float]]] = None

    def __post_init__(self):
        if isinstance(self.delta, numbers.Number):
            self.delta = [float(self.delta)]

    @classmethod
    def from_json(cls, filename: Path):
        """Read a spec from a json file of the same keys"""
        with open(filename, mode='r') as fp:
            info = json.load(fp)

        if not isinstance(info, dict):
            raise InvalidSpecException(f'{filename} must hold a json object.')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(info.keys()) - known)
        if unknown:
            raise InvalidSpecException(f'Unknown keys in {filename}: {", ".join(unknown)}.')
        LOG.info(f'Experiment spec loaded from {filename}')
        return cls(**info)

    def merged(self, overrides: dict):
        """
        New spec with every override that is not None applied, flags win over
        file values. A source given as an override replaces the file's source.
        """
        values = {k: v for k, v in overrides.items() if v is not None}
        if any(k in values for k in SOURCE_KEYS):
            values = {**dict.fromkeys(SOURCE_KEYS), **values}
        if 'delta' in values and isinstance(values['delta'], numbers.Number):
            values['delta'] = [float(values['delta'])]
        return replace(self, **values)

    @property
    def alphas(self) -> List[float]:
        return [c['alpha'] for c in self.components]

    @property
    def blocklengths(self) -> List[int]:
        """Blocklengths to evaluate, the sweep when given"""
        return list(self.n_sweep) if self.n_sweep else [self.n]

    def is_memoryless(self) -> bool:
        """True when every part of the source is a single letter law repeated n times"""
        return self.iid is not None or (self.components is not None and
                                        all(_is_scalar(c['p']) for c in self.components))

    def is_binary_memoryless(self) -> bool:
        """True when every part of the source is a binary letter repeated n times"""
        if self.iid is not None:
            return _letter(self.iid).alphabet_size == 2
        if self.components is not None:
            return all(_is_scalar(c['p']) for c in self.components)
        return False

    def validate(self):
        """Check the spec against the needs of its command, raising InvalidSpecException"""
        if self.command not in COMMANDS:
            raise InvalidSpecException(f'Unknown command {self.command!r}, use one of {", ".join(COMMANDS)}.')

        given = [name for name in SOURCE_KEYS if getattr(self, name) is not None]
        if len(given) != 1:
            raise InvalidSpecException(f'Give exactly one source (probs, iid or components), received '
                                       f'{", ".join(given) or "none"}.')

        if self.components is not None:
            if len(self.components) == 0:
                raise InvalidSpecException('components is empty.')
            for i, c in enumerate(self.components):
                if not isinstance(c, dict) or 'p' not in c or 'alpha' not in c:
                    raise InvalidSpecException(f'Component {i} needs both "p" and "alpha".')

        for d in self.delta:
            if not 0 <= d < 1:
                raise InvalidSpecException(f'delta = {d} is out of range, use values in [0, 1).')
        if not self.gamma > 0:
            raise InvalidSpecException(f'gamma = {self.gamma} is invalid, use a value > 0.')
        if int(self.K) != self.K or self.K < 2:
            raise InvalidSpecException(f'K = {self.K} is invalid, use an integer >= 2.')
        for n in self.blocklengths:
            if int(n) != n or n < 1:
                raise InvalidSpecException(f'n = {n} is invalid, blocklengths are positive integers.')
        if not 0 < self.grid_step <= 0.1:
            raise InvalidSpecException(f'grid_step = {self.grid_step} is invalid, use a value in (0, 0.1].')
        if self.channel is not None and self.command != 'code':
            raise InvalidSpecException('A channel is only used by the code command.')

        if self.command == 'rates' and self.probs is not None:
            raise InvalidSpecException('rates needs a memoryless source, give iid or components.')

        if self.command == 'converge':
            if not self.n_sweep:
                raise InvalidSpecException('converge needs a list of blocklengths (n_sweep).')
            if not self.is_binary_memoryless():
                raise InvalidSpecException('converge needs a binary memoryless source, give iid or components '
                                           'with Bernoulli parameters.')
            too_long = [n for n in self.n_sweep if n > MAX_CONVERGE_N]
            if too_long:
                raise InvalidSpecException(f'n = {too_long[0]} exceeds the type class limit of {MAX_CONVERGE_N}.')

        if self.command == 'code' and len(self.delta) > 1:
            raise InvalidSpecException('code builds a single code, it takes no delta list.')
        if self.command == 'code' and self.n_sweep:
            raise InvalidSpecException('code builds a single code, it takes no n_sweep list, use n.')

        large = [n for n in self.blocklengths if n > MAX_CONVERGE_N // 10]
        if large and self.is_binary_memoryless():
            LOG.warning(f'Blocklength {max(large)} is close to the type class limit, expect long run times.')

        # Json numbers like 2.0 are accepted for integer fields
        self.K = int(self.K)
        self.n = int(self.n)
        if self.n_sweep:
            self.n_sweep = [int(n) for n in self.n_sweep]

    def source(self, n: int = None):
        """
        Build the source at blocklength n (defaults to the spec's n).

        Returns:
            source: FiniteDist, IIDSpec or MixedSourceSpec
        """
        n = self.n if n is None else n
        if self.probs is not None:
            return FiniteDist(self.probs)
        if self.iid is not None:
            return IIDSpec(_letter(self.iid), n)
        parts = [IIDSpec(_letter(c['p']), n) if _is_scalar(c['p']) else FiniteDist(c['p'])
                 for c in self.components]
        return MixedSourceSpec(parts, self.alphas)

    def letter_source(self) -> MixedSourceSpec:
        """
        Single letter laws for the rate formulas. Explicit distributions are read
        as single letters too.
        """
        if self.probs is not None:
            return MixedSourceSpec.single(IIDSpec(FiniteDist(self.probs), 1))
        if self.iid is not None:
            return MixedSourceSpec.single(IIDSpec(_letter(self.iid), 1))
        return MixedSourceSpec([IIDSpec(_letter(c['p']), 1) for c in self.components], self.alphas)

    def dmc(self) -> Optional[DMC]:
        return None if self.channel is None else DMC(self.channel)

    def metadata(self) -> dict:
        """Spec values worth recording above a results table"""
        return {k: json.dumps(v) for k, v in asdict(self).items() if v is not None and k != 'out'}


def thread_count(tasks: int) -> int:
    """
    Worker count for a sweep of the given size. RESOLV_THREADS caps it,
    otherwise one worker per task up to the cpu count.
    """
    limit = os.environ.get('RESOLV_THREADS')
    if limit is not None:
        try:
            limit = int(limit)
        except ValueError:
            raise InvalidSpecException(f'RESOLV_THREADS = {limit!r} is not an integer.')
        if limit < 1:
            raise InvalidSpecException(f'RESOLV_THREADS = {limit} is invalid, use a value >= 1.')
    else:
        limit = os.cpu_count() or 1
    return max(1, min(tasks, limit))
