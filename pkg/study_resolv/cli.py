"""
Command line surface. Each subcommand builds a source from flags and/or a
json spec, runs one operation (or a sweep of it) and writes one csv row per
result, or json with --json.

Exit codes: 0 on success, 2 for invalid specs or inputs, 3 when a computed
result breaks one of its guaranteed bounds.
"""
import argparse
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from functools import partial
from typing import Callable, List

import numpy as np

from . import __version__
from .config import ExperimentSpec, InvalidSpecException, thread_count
from .dist_core import FiniteDist, IIDSpec, MixedSourceSpec, InvariantViolationException, materialize, mixture
from .io import records_to_json, write_results
from .logging import setup_log
from .rate_formulas import first_order_rate, second_order_estimate, second_order_rate
from .resolv_code import build_fv_code, build_fv_code_iid, build_mixed_vlcode, build_vlcode, channel_output_distance
from .schemas import ResultRow, ResultSchema
from .smooth_entropy import (MAX_GRID_COMPONENTS, class_smooth_entropy, dagger_grid_oracle, smooth_entropy_iid,
                             smooth_entropy_mixed_iid, smooth_min_entropy_dist, solve_allocation_lp, truncate_classes,
                             type_class_table)

LOG = logging.getLogger('study_resolv.cli')


def uses_type_classes(source) -> bool:
    """True when the source is binary memoryless, so its type classes can stand in for the product alphabet"""
    if isinstance(source, IIDSpec):
        return source.single_letter.alphabet_size == 2
    if isinstance(source, MixedSourceSpec):
        return source.is_iid and all(c.single_letter.alphabet_size == 2 for c in source.components)
    return False


def explicit(source) -> FiniteDist:
    if isinstance(source, MixedSourceSpec):
        return mixture(source)
    return materialize(source)


def _timed(func: Callable, *args) -> ResultRow:
    start = time.perf_counter()
    row = func(*args)
    row.wall_time_ms = (time.perf_counter() - start) * 1000
    return row


def run_sweep(func: Callable, tasks: List[tuple]) -> List[ResultRow]:
    """
    Evaluate func on every task, fanning out over threads when there is more
    than one. Rows come back in task order.
    """
    workers = thread_count(len(tasks))
    if workers == 1:
        return [_timed(func, *t) for t in tasks]

    LOG.debug(f'Running {len(tasks)} tasks on {workers} threads')
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: _timed(func, *t), tasks))


def smooth_row(source, n: int, delta: float) -> ResultRow:
    if uses_type_classes(source):
        tr = truncate_classes(type_class_table(source), delta)
        h = class_smooth_entropy(tr, delta)
        j_star, log2_j_star, epsilon = tr.j_star, tr.log_j_star / math.log(2), tr.epsilon
    else:
        result = smooth_min_entropy_dist(explicit(source), delta)
        h, j_star, epsilon = result.h_bits, result.j_star, result.epsilon
        log2_j_star = math.log2(j_star)

    return ResultRow(command='smooth', n=n, delta=delta, h_delta=h, h_delta_per_n=h / n, j_star=j_star,
                     log2_j_star=log2_j_star, epsilon=epsilon)


def cmd_smooth(spec: ExperimentSpec) -> List[ResultRow]:
    """Smooth entropy, one row per (n, delta)"""
    tasks = [(spec.source(n), n, d) for n in spec.blocklengths for d in spec.delta]
    return run_sweep(smooth_row, tasks)


def _linear_curve(h: float, deltas):
    return (1.0 - np.asarray(deltas, dtype=float)) * h


def rates_row(letters: MixedSourceSpec, delta: float, grid_step: float) -> ResultRow:
    report = second_order_rate(letters, delta)
    h = [c[0] for c in report.per_component]

    # Independent value of the allocation problem
    if np.count_nonzero(letters.weights > 0) <= MAX_GRID_COMPONENTS:
        curves = [partial(_linear_curve, hi) for hi in h]
        oracle = dagger_grid_oracle(curves, letters.weights, delta, grid_step=grid_step).objective
    else:
        oracle = solve_allocation_lp(h, letters.weights, delta).objective

    return ResultRow(command='rates', delta=delta, rate_first=report.first_order, rate_second=report.second_order,
                     i_star=report.i_star, delta_istar=report.delta_istar, oracle_rate=oracle)


def cmd_rates(spec: ExperimentSpec) -> List[ResultRow]:
    """First and second order rates of a memoryless (mixed) source, one row per delta"""
    letters = spec.letter_source()
    return [_timed(rates_row, letters, d, spec.grid_step) for d in spec.delta]


def code_row(spec: ExperimentSpec) -> ResultRow:
    n, K, gamma = spec.n, spec.K, spec.gamma
    source = spec.source()
    w = spec.dmc()

    if isinstance(source, MixedSourceSpec):
        code = build_mixed_vlcode([materialize(c) for c in source.components], source.weights, K, n, gamma)
        e_len = code.expected_length
        distance = code.average_distance
        bound = code.codes[0].distance_bound
        length_bound = float(np.dot(source.weights, [c.length_bound for c in code.codes]))
        mixture_distance = code.mixture_distance
        if w is None:
            channel_distance = distance
        else:
            channel_distance = float(np.dot(source.weights, [channel_output_distance(c, w) for c in code.codes]))
    else:
        code = build_vlcode(materialize(source), K, n, gamma)
        e_len, distance = code.expected_length, code.distance
        bound, length_bound = code.distance_bound, code.length_bound
        mixture_distance = distance
        channel_distance = distance if w is None else channel_output_distance(code, w)

    return ResultRow(command='code', n=n, gamma=gamma, K=K, e_len=e_len, e_len_per_n=e_len / n, distance=distance,
                     bound_rhs=bound, length_bound_rhs=length_bound, mixture_distance=mixture_distance,
                     channel_distance=channel_distance)


def cmd_code(spec: ExperimentSpec) -> List[ResultRow]:
    """Resolvability code for an explicit target, or one code per mixture component"""
    return [_timed(code_row, spec)]


def fv_row(spec: ExperimentSpec, n: int, delta: float) -> ResultRow:
    source = spec.source(n)
    K = spec.K
    if uses_type_classes(source):
        code = build_fv_code_iid(source, K, delta)
        log2_kept = code.log_kept_count / math.log(2)
    else:
        code = build_fv_code(explicit(source), K, n, delta)
        log2_kept = math.log2(code.kept.size)

    # First order rate of the same source as reference, explicit laws count as one letter of the block
    reference = first_order_rate(spec.letter_source(), delta).first_order
    if not spec.is_memoryless():
        reference = reference / n

    return ResultRow(command='fv', n=n, delta=delta, K=K, log2_kept_count=log2_kept, error=code.error_probability,
                     e_len=code.expected_length, e_len_per_n=code.rate, rate_bits=code.rate * math.log2(K),
                     rate_first=reference)


def cmd_fv(spec: ExperimentSpec) -> List[ResultRow]:
    """delta-error fixed-to-variable code, one row per (n, delta)"""
    tasks = [(spec, n, d) for n in spec.blocklengths for d in spec.delta]
    return run_sweep(fv_row, tasks)


def converge_row(spec: ExperimentSpec, n: int, delta: float) -> ResultRow:
    source = spec.source(n)
    letters = spec.letter_source()
    if isinstance(source, IIDSpec):
        h_per_n = smooth_entropy_iid(source, delta)
    else:
        h_per_n = smooth_entropy_mixed_iid(source, delta)

    report = second_order_rate(letters, delta)
    residual = (n * h_per_n - second_order_estimate(letters, n, delta)) / math.sqrt(n)
    return ResultRow(command='converge', n=n, delta=delta, h_delta_per_n=h_per_n, rate_first=report.first_order,
                     rate_second=report.second_order, residual=residual)


def cmd_converge(spec: ExperimentSpec) -> List[ResultRow]:
    """
    Exact smooth entropy per symbol over a blocklength sweep, next to the
    first and second order rates and the residual of the two term expansion
    scaled by 1/sqrt(n)
    """
    tasks = [(spec, n, d) for n in spec.n_sweep for d in spec.delta]
    return run_sweep(converge_row, tasks)


COMMANDS = {'smooth': cmd_smooth, 'rates': cmd_rates, 'code': cmd_code, 'fv': cmd_fv, 'converge': cmd_converge}


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'{text!r} is not a comma separated list of numbers')


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'{text!r} is not a comma separated list of integers')


def _rows(text: str) -> List[List[float]]:
    return [_floats(row) for row in text.split(';') if row.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_argument_group('source')
    source.add_argument('--probs', type=_floats, help='Explicit distribution, e.g. 0.5,0.3,0.2')
    source.add_argument('--iid', type=_floats,
                        help='Single letter law repeated n times, a single value p means Bernoulli(p)')
    source.add_argument('--components', type=_floats, help='Bernoulli parameters of memoryless mixture components')
    source.add_argument('--mixed', type=_rows, help='Explicit mixture components, rows separated by ";"')
    source.add_argument('--alphas', type=_floats, help='Mixture weights, equal weights when omitted')

    params = common.add_argument_group('parameters')
    params.add_argument('--n', type=int, help='Blocklength (default 1)')
    params.add_argument('--n-sweep', dest='n_sweep', type=_ints, help='Blocklengths to sweep, e.g. 100,1000')
    params.add_argument('--delta', type=_floats, help='Distance or error budget(s) in [0, 1)')
    params.add_argument('--gamma', type=float, help='Code slack > 0 (default 1)')
    params.add_argument('--K', dest='K', type=int, help='Code alphabet size (default 2)')
    params.add_argument('--grid-step', dest='grid_step', type=float, help='Allocation grid spacing (default 1e-3)')
    params.add_argument('--channel', type=_rows, help='Channel matrix rows separated by ";"')

    output = common.add_argument_group('output')
    output.add_argument('--config', help='Json experiment spec, flags win over its values')
    output.add_argument('--out', help='Write results to this path instead of stdout')
    output.add_argument('--json', action='store_true', help='Write json instead of csv')
    output.add_argument('--with-meta', dest='with_meta', action='store_true',
                        help='Write the spec as key = value lines above the csv header')
    output.add_argument('--timing', action='store_true', help='Add a wall_time_ms column')
    output.add_argument('--debug', action='store_true', help='Debug logging')
    output.add_argument('--log-file', dest='log_file', help='Also write the log to this path')

    parser = argparse.ArgumentParser(prog='study-resolv', description='Exact smooth entropy, resolvability code '
                                                                      'and rate computations')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('smooth', parents=[common], help='Smooth entropy of a source')
    sub.add_parser('rates', parents=[common], help='First and second order rates of a mixed memoryless source')
    sub.add_parser('code', parents=[common], help='Build a resolvability code and check its bounds')
    sub.add_parser('fv', parents=[common], help='delta-error fixed-to-variable code')
    sub.add_parser('converge', parents=[common], help='Smooth entropy over a blocklength sweep')
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    """Spec values given as flags, None where a flag was left out"""
    values = {k: getattr(args, k) for k in ('command', 'probs', 'n', 'delta', 'gamma', 'K', 'n_sweep', 'grid_step',
                                             'out', 'channel')}
    values['iid'] = args.iid

    if args.components is not None and args.mixed is not None:
        raise InvalidSpecException('Use either --components or --mixed, not both.')
    parts = args.components if args.components is not None else args.mixed
    if parts is not None:
        alphas = args.alphas if args.alphas is not None else [1.0 / len(parts)] * len(parts)
        if len(alphas) != len(parts):
            raise InvalidSpecException(f'Received {len(alphas)} weights for {len(parts)} components.')
        values['components'] = [{'p': p, 'alpha': a} for p, a in zip(parts, alphas)]
    elif args.alphas is not None:
        raise InvalidSpecException('--alphas needs --components or --mixed.')
    return values


def emit(records: List[dict], out: str = None, as_json=False, meta: dict = None):
    """Write records to a path, or stdout when out is None"""
    with (open(out, mode='w', newline='') if out else nullcontext(sys.stdout)) as fp:
        if as_json:
            fp.write(records_to_json(records) + '\n')
        else:
            write_results(records, fp, meta=meta)
    if out:
        LOG.info(f'Wrote {len(records)} row(s) to {out}')


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_log(debug=args.debug, log_file=args.log_file)

    try:
        spec = ExperimentSpec.from_json(args.config) if args.config else ExperimentSpec()
        spec = spec.merged(overrides_from_args(args))
        spec.validate()

        schema = ResultSchema.from_name(spec.command)
        rows = COMMANDS[spec.command](spec)
        records = [schema.record(r, timing=args.timing) for r in rows]
        schema.check_bounds(records)

        meta = {'version': __version__, **spec.metadata()} if args.with_meta else None
        emit(records, spec.out, as_json=args.json, meta=meta)

    except InvariantViolationException as e:
        LOG.error(f'Internal invariant violated: {e}')
        return 3

    except (ValueError, TypeError, OSError) as e:
        LOG.error(str(e))
        return 2

    return 0


if __name__ == '__main__':
    sys.exit(main())
