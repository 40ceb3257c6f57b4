"""Helper utilities for tables and reports"""

import math


def format_uncertainty(mean: float, std: float) -> str:
    """Format a timing as ``mean(σ)`` with σ in units of the last digit.

    Parameters
    ----------
    mean : float
        Mean value.
    std : float
        Standard deviation.

    Returns
    -------
    str
        At least two decimals, more for means below one so that three
        significant digits remain.

    Examples
    --------
    >>> format_uncertainty(20.4412, 0.0712)
    '20.44(7)'
    >>> format_uncertainty(0.01234, 0.0004)
    '0.0123(4)'
    """
    decimals = 2
    if mean > 0:
        decimals = max(2, 2 - math.floor(math.log10(mean)))
    digits = round(std * 10**decimals)
    return f"{mean:.{decimals}f}({digits})"


def format_count(value: int | None) -> str:
    """Format a count with thousands separators, or ``N/A``.

    Examples
    --------
    >>> format_count(2042908)
    '2,042,908'
    >>> format_count(None)
    'N/A'
    """
    if value is None:
        return "N/A"
    return f"{value:,}"
