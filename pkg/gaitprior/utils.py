"""Various small utilities shared across modules.
"""
import math

import numpy as np


def wrap_angle(angle):
    """Wrap an angle (or array of angles) into ``(-pi, pi]``.

    Args:
        angle (float or ndarray): angle in radians.

    Returns:
        float or ndarray: the equivalent angle in ``(-pi, pi]``.

    >>> round(wrap_angle(3 * math.pi / 2), 12) == round(-math.pi / 2, 12)
    True

    >>> wrap_angle(math.pi) == math.pi
    True

    >>> float(wrap_angle(-math.pi)) == math.pi
    True
    """
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=np.float64),
                             2 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def steps_per_period(frequency, dt, tol=1e-9):
    """Number of control steps in one period of ``frequency``.

    Args:
        frequency (float): frequency in Hz.
        dt (float): control period in seconds.
        tol (float): allowed deviation from an integer.

    Returns:
        int or None: the step count, or ``None`` when the period is not an
        integer multiple of ``dt``.

    >>> steps_per_period(2.0, 0.02)
    25

    >>> steps_per_period(3.0, 0.02) is None
    True
    """
    n = 1.0 / (frequency * dt)
    rounded = int(round(n))
    if rounded < 1 or abs(n - rounded) > tol * max(1.0, n):
        return None
    return rounded


def format_float(value):
    """Format a float with 17 significant digits for exact text round trip.

    >>> format_float(0.1)
    '0.10000000000000001'

    >>> float(format_float(1.0 / 3)) == 1.0 / 3
    True
    """
    return '%.17g' % (value)


def interquartile_range(values):
    """Distance between the 75th and 25th percentile.

    >>> interquartile_range([1.0, 2.0, 3.0, 4.0, 5.0])
    2.0
    """
    if len(values) == 0:
        return float('nan')
    q75, q25 = np.percentile(np.asarray(values, dtype=np.float64), [75, 25])
    return float(q75 - q25)
