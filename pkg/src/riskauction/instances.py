"""Named instances used by the CLI and the test-suite."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import List

import numpy as np

from .core import Instance, MenuOption, Utility

# Two-option menu that beats every randomized take-it-or-leave-it price on the
# quadratic instance.  The values are exact: the first option leaves v = 0.4
# exactly indifferent, the second leaves v = 0.6 indifferent between options.
MENU_X1 = Fraction(100, 196)  # 1 / 1.96
MENU_W1 = Fraction(1536, 2695)


def counterexample_instance() -> Instance:
    """Ten uniform values 0, 0.1, ..., 0.9; ``u(x) = (x + 1)^2 - 1``; payments {0, 1}."""
    values = np.round(np.arange(10) * 0.1, 12)
    return Instance(values, np.full(10, 0.1), [0.0, 1.0], 1, Utility.quadratic(L=1.0))


def counterexample_menu() -> List[MenuOption]:
    return [
        MenuOption(float(MENU_X1), 0.0, 1.0),
        MenuOption(1.0, float(MENU_W1), 0.0),
    ]


def two_buyer_instance(alpha: float = 0.1, z_max: float = 100.0, beta: float = 1.0) -> Instance:
    """Two buyers with values 0 or 1 equally likely."""
    return Instance([0.0, 1.0], [0.5, 0.5], [0.0, z_max], 2, Utility.exponential(alpha, beta))


def two_buyer_revenue(alpha: float, z_max: float) -> float:
    """Closed-form loser-pay revenue on :func:`two_buyer_instance`."""
    return 0.75 * math.expm1(alpha) / -math.expm1(-alpha * z_max) * z_max


def two_buyer_loser_payment(alpha: float, z_max: float) -> float:
    """Closed-form probability that the losing high bidder pays ``z_max``."""
    return 3.0 * math.expm1(alpha) / -math.expm1(-alpha * z_max)


def two_point_instance() -> Instance:
    """One buyer, values 0 or 1, ``alpha = ln 2``, payments {0, 2}."""
    return Instance([0.0, 1.0], [0.5, 0.5], [0.0, 2.0], 1, Utility.exponential(math.log(2.0)))
