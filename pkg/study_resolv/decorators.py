import functools
import inspect
import logging
import time

LOG = logging.getLogger('study_resolv.decorators')


def _bound_value(func, check, args, kwargs):
    """Look up the value passed for the parameter named check"""
    bound = inspect.signature(func).bind(*args, **kwargs)
    bound.apply_defaults()
    if check not in bound.arguments:
        raise TypeError(f'{func.__name__} has no parameter named {check}')
    return bound.arguments[check]


def unit_interval(_func=None, *, check='delta', closed_low=True, closed_high=False):
    """
    Decorator to check a probability-like parameter lies in the unit interval,
    use this to standardize the range checking on delta, x, etc. By default
    the interval is [0, 1).
    """
    def decorator_unit_interval(func):
        @functools.wraps(func)
        def check_unit_interval(*args, **kwargs):
            value = _bound_value(func, check, args, kwargs)
            low_ok = value >= 0 if closed_low else value > 0
            high_ok = value <= 1 if closed_high else value < 1
            if not (low_ok and high_ok):
                low = '[' if closed_low else '('
                high = ']' if closed_high else ')'
                raise ValueError(f'{check} = {value} is out of range, use a value in {low}0, 1{high}.')

            result = func(*args, **kwargs)
            return result
        return check_unit_interval

    if _func is None:
        return decorator_unit_interval
    else:
        return decorator_unit_interval(_func)


def coding_parameters(func):
    """
    Decorator for code builders taking K, n and gamma. Checks the coin
    alphabet has at least two letters, the blocklength is positive and the
    slack gamma is strictly positive.
    """

    @functools.wraps(func)
    def check_coding_parameters(*args, **kwargs):
        bound = inspect.signature(func).bind(*args, **kwargs)
        bound.apply_defaults()
        params = bound.arguments
        if 'K' in params and (int(params['K']) != params['K'] or params['K'] < 2):
            raise ValueError(f"K = {params['K']} is invalid, the coin alphabet needs an integer size >= 2.")
        if 'n' in params and (int(params['n']) != params['n'] or params['n'] < 1):
            raise ValueError(f"n = {params['n']} is invalid, the blocklength must be a positive integer.")
        if 'gamma' in params and not params['gamma'] > 0:
            raise ValueError(f"gamma = {params['gamma']} is invalid, use a strictly positive slack.")

        result = func(*args, **kwargs)
        return result

    return check_coding_parameters


def log_runtime(func):
    """Log the wall time of the wrapped call at debug level"""

    @functools.wraps(func)
    def timed(*args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        LOG.debug(f'{func.__name__} took {1000 * (time.perf_counter() - start):0.1f} ms')
        return result

    return timed
