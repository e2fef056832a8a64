"""
Standard Gaussian tail function Q and its inverse.
"""
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .decorators import unit_interval

# Round trip accuracy |Q(q_inverse(x)) - x| guaranteed on [1e-12, 1 - 1e-12]
Q_INVERSE_TOLERANCE = 1e-10

# Q(-40) and Q(40) are 1 and 0 in double precision
_BRACKET = 40.0


def q_function(x):
    """Complementary Gaussian CDF, Q(x) = erfc(x / sqrt(2)) / 2"""
    result = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    if np.ndim(result) == 0:
        return float(result)
    return result


def gaussian_density(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)


@unit_interval(check='x', closed_low=False)
def q_inverse(x: float) -> float:
    """
    Invert Q by bracketed root finding on the forward function followed by a
    single Newton step.

    Args:
        x: Tail probability in (0, 1)

    Returns:
        y: The point with Q(y) = x
    """
    y = brentq(lambda t: q_function(t) - x, -_BRACKET, _BRACKET, xtol=1e-15, rtol=4 * np.finfo(float).eps,
               maxiter=200)
    density = float(gaussian_density(y))
    if density > 0:
        y += (q_function(y) - x) / density
    return float(y)
