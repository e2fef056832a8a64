import math

import pytest

from study_resolv.dist_core import InvariantViolationException
from study_resolv.schemas import ResultRow, ResultSchema


@pytest.mark.parametrize('name, expected', [
    ('smooth', ResultSchema.SMOOTH),
    ('RATES', ResultSchema.RATES),
    ('Code', ResultSchema.CODE),
    ('fv', ResultSchema.FV),
    ('converge', ResultSchema.CONVERGE),
    ('plot', ResultSchema.UNKNOWN),
])
def test_from_name(name, expected):
    assert ResultSchema.from_name(name) == expected


@pytest.fixture()
def code_row():
    return ResultRow(command='code', n=1, gamma=0.5, K=2, e_len=2.5, e_len_per_n=2.5, distance=0.0125,
                     bound_rhs=0.853553, length_bound_rhs=7.0, mixture_distance=0.0125, channel_distance=0.0125)


class TestRecord:

    def test_columns(self, code_row):
        record = ResultSchema.CODE.record(code_row)
        assert list(record.keys()) == list(ResultSchema.CODE.columns)
        assert record['distance'] == 0.0125

    def test_timing(self, code_row):
        code_row.wall_time_ms = 1.5
        record = ResultSchema.CODE.record(code_row, timing=True)
        assert list(record.keys())[-1] == 'wall_time_ms'

    def test_timing_missing(self, code_row):
        with pytest.raises(InvariantViolationException):
            ResultSchema.CODE.record(code_row, timing=True)

    @pytest.mark.parametrize('value', [None, math.inf, math.nan])
    def test_invalid_values(self, code_row, value):
        code_row.distance = value
        with pytest.raises(InvariantViolationException):
            ResultSchema.CODE.record(code_row)

    def test_unused_fields_ignored(self):
        row = ResultRow(command='smooth', n=1, delta=0.25, h_delta=0.811278, h_delta_per_n=0.811278,
                        log2_j_star=1.0, epsilon=0.05, distance=math.nan)
        assert 'distance' not in ResultSchema.SMOOTH.record(row)

    @pytest.mark.parametrize('j_star', [2, None])
    def test_nullable_j_star(self, j_star):
        row = ResultRow(command='smooth', n=1, delta=0.25, h_delta=0.811278, h_delta_per_n=0.811278,
                        j_star=j_star, log2_j_star=1.0, epsilon=0.05)
        assert ResultSchema.SMOOTH.record(row)['j_star'] == j_star

    def test_only_j_star_nullable(self):
        row = ResultRow(command='smooth', n=1, delta=0.25, h_delta=0.811278, h_delta_per_n=0.811278, j_star=2,
                        epsilon=0.05)
        with pytest.raises(InvariantViolationException):
            ResultSchema.SMOOTH.record(row)


class TestCheckBounds:

    def test_passes(self, code_row):
        ResultSchema.CODE.check_bounds([ResultSchema.CODE.record(code_row)])

    def test_within_tolerance(self):
        ResultSchema.FV.check_bounds([{'error': 0.2 + 1e-13, 'delta': 0.2}])

    @pytest.mark.parametrize('column, value', [
        ('distance', 0.9),
        ('e_len', 7.5),
        ('mixture_distance', 0.02),
        ('channel_distance', 0.02),
    ])
    def test_violation(self, code_row, column, value):
        setattr(code_row, column, value)
        with pytest.raises(InvariantViolationException):
            ResultSchema.CODE.check_bounds([ResultSchema.CODE.record(code_row)])

    def test_rates_oracle(self):
        with pytest.raises(InvariantViolationException):
            ResultSchema.RATES.check_bounds([{'rate_first': 0.6, 'oracle_rate': 0.55}])
