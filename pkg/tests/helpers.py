"""Shared constructors and independent oracles for the test suite."""

from fractions import Fraction

import numpy as np

from localdim.net import Architecture, Params

TOY = Architecture((1, 1, 1))
X3 = np.array([[0.0, 1.0, 2.0]])

# one (w, b) per region of the (1,1,1) example on X = (0, 1, 2)
REGION_WB = {
    1: (0.0, -1.0),   # dead
    2: (-1.0, 0.5),   # (1,0,0)
    3: (-1.0, 1.5),   # (1,1,0)
    4: (1.0, 1.0),    # (1,1,1)
    5: (1.0, -0.5),   # (0,1,1)
    6: (1.0, -1.5),   # (0,0,1)
}


def toy(w, b, v=1.0, c=0.0) -> Params:
    """(1,1,1) network v * relu(w x + b) + c."""
    return Params(([[w]], [[v]]), ([b], [c]))


def exact_rank(rows) -> int:
    """Rank over the rationals by fraction-exact Gaussian elimination."""
    M = [[Fraction(x).limit_denominator(10**12) for x in row] for row in rows]
    rank, ncols = 0, len(M[0]) if M else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(M)) if M[r][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for r in range(len(M)):
            if r != rank and M[r][col] != 0:
                f = M[r][col] / M[rank][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank
