"""
Result rows and the fixed column layout each command writes.
"""
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional

from .dist_core import InvariantViolationException

# Columns left empty when the value is too large to write exactly
NULLABLE_COLUMNS = ('j_star',)


@dataclass
class ResultRow:
    """One line of command output, unused fields stay None"""
    command: str
    n: Optional[int] = None
    delta: Optional[float] = None
    gamma: Optional[float] = None
    K: Optional[int] = None
    h_delta: Optional[float] = None
    h_delta_per_n: Optional[float] = None
    j_star: Optional[int] = None
    log2_j_star: Optional[float] = None
    epsilon: Optional[float] = None
    rate_first: Optional[float] = None
    rate_second: Optional[float] = None
    i_star: Optional[int] = None
    delta_istar: Optional[float] = None
    oracle_rate: Optional[float] = None
    e_len: Optional[float] = None
    e_len_per_n: Optional[float] = None
    distance: Optional[float] = None
    bound_rhs: Optional[float] = None
    length_bound_rhs: Optional[float] = None
    mixture_distance: Optional[float] = None
    channel_distance: Optional[float] = None
    log2_kept_count: Optional[float] = None
    error: Optional[float] = None
    rate_bits: Optional[float] = None
    residual: Optional[float] = None
    wall_time_ms: Optional[float] = None


class ResultSchema(Enum):
    """
    Columns written per command, and the (value, bound, tolerance) column
    checks the harness runs on every record
    """
    SMOOTH = 'smooth', ('command', 'n', 'delta', 'h_delta', 'h_delta_per_n', 'j_star', 'log2_j_star', 'epsilon'), ()
    RATES = 'rates', ('command', 'delta', 'rate_first', 'rate_second', 'i_star', 'delta_istar', 'oracle_rate'), \
        (('rate_first', 'oracle_rate', 1e-6),)
    CODE = 'code', ('command', 'n', 'gamma', 'K', 'e_len', 'e_len_per_n', 'distance', 'bound_rhs',
                    'length_bound_rhs', 'mixture_distance', 'channel_distance'), \
        (('distance', 'bound_rhs', 1e-12), ('e_len', 'length_bound_rhs', 1e-12),
         ('mixture_distance', 'distance', 1e-12), ('channel_distance', 'distance', 1e-12))
    FV = 'fv', ('command', 'n', 'delta', 'K', 'log2_kept_count', 'error', 'e_len', 'e_len_per_n', 'rate_bits',
                'rate_first'), (('error', 'delta', 1e-12),)
    CONVERGE = 'converge', ('command', 'n', 'delta', 'h_delta_per_n', 'rate_first', 'rate_second', 'residual'), ()
    UNKNOWN = 'UNKNOWN', (), ()

    @property
    def command(self):
        return self.value[0]

    @property
    def columns(self):
        return self.value[1]

    @property
    def bounded(self):
        return self.value[2]

    @classmethod
    def from_name(cls, name):
        result = cls.UNKNOWN
        for e in cls:
            if e.command == name.lower():
                result = e
                break
        return result

    def record(self, row: ResultRow, timing=False) -> dict:
        """
        Pick this schema's columns from a row. Every numeric entry has to be
        present and finite, apart from the nullable columns.
        """
        values = asdict(row)
        columns = list(self.columns) + (['wall_time_ms'] if timing else [])
        record = {}
        for c in columns:
            v = values[c]
            if v is None and c in NULLABLE_COLUMNS:
                record[c] = None
                continue
            if v is None or (isinstance(v, float) and not math.isfinite(v)):
                raise InvariantViolationException(f'{self.command} produced an invalid {c} value ({v}).')
            record[c] = v
        return record

    def check_bounds(self, records: List[dict]):
        """Raise when a value column exceeds its bound column"""
        for record in records:
            for value, bound, atol in self.bounded:
                if record[value] > record[bound] + atol:
                    raise InvariantViolationException(f'{self.command}: {value} = {record[value]} exceeds '
                                                      f'{bound} = {record[bound]}.')
