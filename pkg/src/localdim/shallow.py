"""Closed-form theory for shallow networks with one input and one linear output.

For a sorted sample x_1 < ... < x_n every hidden neuron realizes one of the
2n threshold patterns ``1_i`` (zeros then ones, first one at i) or
``1_{n+i}`` (ones then zeros, first zero at i); ``1_1`` is all ones and
``1_{n+1}`` all zeros. The code ``alpha_k`` of neuron k is that index, and
the local dimension equals rank(1, e_{alpha_1 - 1}, e_{alpha_1}, ...), with
the hinge vectors ``e_i = relu(X - x_i)``, ``e_{n+i} = relu(x_i - X)``,
``e_0 = e_{2n}``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dimension import numerical_rank
from .errors import ConfigurationError, DomainError, InvariantError
from .net import Architecture, OutAct, Params, activation_pattern, boundary_margin, forward

SQRT2, SQRT3, SQRT6 = np.sqrt(2.0), np.sqrt(3.0), np.sqrt(6.0)

# Cone index -> label of the matching region in the (1,1,1) example with
# X = (0, 1, 2): regions 1..6 are dead, (1,0,0), (1,1,0), all-on, (0,1,1), (0,0,1).
TOY_X = (0.0, 1.0, 2.0)
CONE_TO_TOY_REGION = {1: 4, 2: 5, 3: 6, 4: 1, 5: 2, 6: 3}
TOY_REGION_TO_CONE = {v: k for k, v in CONE_TO_TOY_REGION.items()}
TOY_REGION_RANKS = {1: 1, 2: 2, 3: 3, 4: 2, 5: 3, 6: 2}


@dataclass(frozen=True, eq=False)
class OrderedSample:
    xs: np.ndarray
    order: np.ndarray  # xs == original[order]

    @property
    def n(self) -> int:
        return self.xs.size

    @classmethod
    def from_values(cls, values) -> "OrderedSample":
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        if v.size < 1:
            raise DomainError("sample must contain at least one value")
        order = np.argsort(v, kind="stable")
        xs = v[order]
        if np.any(np.diff(xs) == 0):
            raise DomainError("sample values must be distinct")
        return cls(xs, order)


def dedupe(values) -> tuple[np.ndarray, int]:
    """Unique values (first occurrence order kept) and the number dropped."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    _, first = np.unique(v, return_index=True)
    keep = np.sort(first)
    return v[keep], int(v.size - keep.size)


def _as_ordered(xs) -> OrderedSample:
    return xs if isinstance(xs, OrderedSample) else OrderedSample.from_values(xs)


def e_vectors(xs) -> np.ndarray:
    """Array of shape (2n+1, n); row i is e_i, row 0 duplicates row 2n."""
    x = _as_ordered(xs).xs
    n = x.size
    E = np.zeros((2 * n + 1, n))
    diff = x[None, :] - x[:, None]  # diff[i, j] = x_j - x_i
    E[1:n + 1] = np.maximum(diff, 0.0)
    E[n + 1:] = np.maximum(-diff, 0.0)
    E[0] = E[2 * n]
    return E


def threshold_pattern(i: int, n: int) -> np.ndarray:
    """The row ``1_i`` for i in 1..2n."""
    if not 1 <= i <= 2 * n:
        raise DomainError(f"pattern index {i} outside 1..{2 * n}")
    row = np.zeros(n, dtype=np.int8)
    if i <= n:
        row[i - 1:] = 1
    else:
        row[:i - n - 1] = 1
    return row


def _codes_from_rows(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P).astype(np.int8)
    n = P.shape[1]
    ones = P.sum(axis=1)
    first = P[:, 0] == 1
    codes = np.where(first, np.where(ones == n, 1, n + ones + 1), np.where(ones == 0, n + 1, n - ones + 1))
    # each row must be exactly its threshold pattern
    pos = np.arange(1, n + 1)[None, :]
    c = codes[:, None]
    expected = np.where(c <= n, pos >= c, pos < c - n).astype(np.int8)
    bad = np.any(expected != P, axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise InvariantError(f"pattern row {k} is not monotone along the sorted sample: {P[k].tolist()}")
    return codes.astype(np.int64)


def alpha_of(pattern, xs=None) -> np.ndarray:
    """Alpha code (values in 1..2n) of every row of an activation pattern whose
    columns follow the sorted sample."""
    P = np.atleast_2d(np.asarray(pattern))
    if xs is not None and P.shape[1] != _as_ordered(xs).n:
        raise ConfigurationError("pattern width does not match the sample size")
    return _codes_from_rows(P)


def classify_cones(w, b, xs) -> np.ndarray:
    """Vectorized cone index of every (w_k, b_k) pair for the sorted sample."""
    x = _as_ordered(xs).xs
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    P = (w[:, None] * x[None, :] + b[:, None]) >= 0
    return _codes_from_rows(P)


def classify_cone(w: float, b: float, xs) -> int:
    return int(classify_cones([w], [b], xs)[0])


def cone_generators(i: int, xs) -> tuple[np.ndarray, np.ndarray]:
    """Rays (y, z) such that cone i is the positive hull of the segment [y, z]
    (endpoints included or excluded depending on i)."""
    x = _as_ordered(xs).xs
    n = x.size
    if n < 2:
        raise DomainError("cone parameterization needs n >= 2")
    if i == 1:
        return np.array([-1.0, x[-1]]), np.array([1.0, -x[0]])
    if 2 <= i <= n:
        return np.array([1.0, -x[i - 2]]), np.array([1.0, -x[i - 1]])
    if i == n + 1:
        return np.array([1.0, -x[-1]]), np.array([-1.0, x[0]])
    if n + 2 <= i <= 2 * n:
        k = i - n
        return np.array([-1.0, x[k - 2]]), np.array([-1.0, x[k - 1]])
    raise DomainError(f"cone index {i} outside 1..{2 * n}")


def cone_coordinates(w: float, b: float, i: int, xs) -> tuple[float, float]:
    """(lambda, t) with (w, b) = lambda * ((1 - t) y + t z) for cone i's rays."""
    y, z = cone_generators(i, xs)
    a, c = np.linalg.solve(np.column_stack([y, z]), np.array([w, b], dtype=np.float64))
    lam = a + c
    t = c / lam if lam != 0 else 0.0
    return float(lam), float(t)


def rank_matrix(alpha, ev: np.ndarray) -> np.ndarray:
    n = ev.shape[1]
    rows = [np.ones(n)]
    for a in np.asarray(alpha).reshape(-1):
        rows += [ev[a - 1], ev[a]]
    return np.vstack(rows)


def closed_form_rank(alpha, ev: np.ndarray) -> int:
    return numerical_rank(rank_matrix(alpha, ev)).rank


def seen_regions(pattern) -> int:
    P = np.atleast_2d(np.asarray(pattern))
    return int(np.unique(P.T, axis=0).shape[0])


def index_sets(alpha, n: int) -> tuple[set, set, set]:
    """The sets L(alpha), L'(alpha) and L''(alpha) used by the rank bounds."""
    alpha = [int(a) for a in np.asarray(alpha).reshape(-1)]
    excluded = {n, n + 1}
    # e_0 and e_2n are the same vector, so index 0 is counted as 2n; counting
    # both would make the lower rank bound fail (e.g. n = 2, alpha = (1, 4))
    L = {2 * n if l == 0 else l for a in alpha for l in (a, a - 1)} - excluded
    Lp = set(alpha) - excluded

    def fold(l):
        if l == 0:
            return n
        if 1 <= l <= n - 1:
            return l
        return l - n

    Lpp = {fold(l) for l in Lp}
    return L, Lp, Lpp


def l0_quantities(alpha, pattern, n: int) -> tuple[int, int]:
    """(number of effective neurons, number of linear pieces perceived by X)."""
    L, _, _ = index_sets(alpha, n)
    P = np.atleast_2d(np.asarray(pattern))
    _, counts = np.unique(P.T, axis=0, return_counts=True)
    return len(L), int(np.minimum(counts, 2).sum())


@dataclass
class ShallowAnalysis:
    closed_form_rank: int
    seen_regions: int
    l0_neurons: int
    l0_linear: int
    bounds: dict
    alpha: list[int]
    numeric_rank: int | None = None
    margin: float | None = None
    n: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def shallow_bounds_check(analysis: ShallowAnalysis) -> bool:
    r = analysis.closed_form_rank
    lo15, hi15 = analysis.bounds["seen_regions"]
    lo40, hi40 = analysis.bounds["l0"]
    return lo15 <= r <= hi15 and lo40 <= r <= hi40


def _require_shallow(arch: Architecture) -> None:
    if arch.depth != 2 or arch.widths[0] != 1 or arch.widths[-1] != 1:
        raise ConfigurationError(f"closed form needs a (1, N_1, 1) network, got {arch.widths}")
    if arch.out_act is not OutAct.IDENTITY:
        raise ConfigurationError("closed form holds for identity output only")


def analyze_shallow(arch: Architecture, params: Params, X, with_numeric: bool = True) -> ShallowAnalysis:
    _require_shallow(arch)
    xs = OrderedSample.from_values(X)
    trace = forward(arch, params, xs.xs[None, :])
    pattern = activation_pattern(trace)
    alpha = alpha_of(pattern, xs)
    ev = e_vectors(xs)
    rank = closed_form_rank(alpha, ev)
    seen = seen_regions(pattern)
    l0n, l0l = l0_quantities(alpha, pattern, xs.n)
    bounds = {
        "seen_regions": (0.5 * seen, 2.0 * seen),
        "l0": (1.0 + 0.5 * l0n, float(min(1 + l0n, l0l))),
    }
    numeric = None
    if with_numeric:
        from .dimension import local_dimension

        numeric = local_dimension(arch, params, xs.xs[None, :]).rank
    return ShallowAnalysis(
        closed_form_rank=rank,
        seen_regions=seen,
        l0_neurons=l0n,
        l0_linear=l0l,
        bounds=bounds,
        alpha=[int(a) for a in alpha],
        numeric_rank=numeric,
        margin=boundary_margin(trace),
        n=xs.n,
    )


# --- the (1,1,1) example on X = (0, 1, 2) ---------------------------------

def project_to_P(Y) -> tuple[float, float]:
    """Coordinates of Y in the plane orthogonal to (1,1,1), basis
    (1,1,-2)/sqrt6 and (-1,1,0)/sqrt2."""
    Y = np.asarray(Y, dtype=np.float64)
    return float(Y @ np.array([1.0, 1.0, -2.0]) / SQRT6), float(Y @ np.array([-1.0, 1.0, 0.0]) / SQRT2)


def project_many(Y: np.ndarray) -> np.ndarray:
    """Row-wise projection of an (m, 3) array onto the plane; returns (m, 2)."""
    Y = np.asarray(Y, dtype=np.float64)
    B = np.column_stack([np.array([1.0, 1.0, -2.0]) / SQRT6, np.array([-1.0, 1.0, 0.0]) / SQRT2])
    return Y @ B


# Projected image set of each region: (affine dimension, description).
_TOY_IMAGE_SETS = {
    1: (0, "point (0, 0)"),
    2: (1, "line sqrt(3) x + y = 0"),
    3: (2, "cone between x + sqrt(3) y = 0 and sqrt(3) x + y = 0"),
    4: (1, "line x + sqrt(3) y = 0"),
    5: (2, "cone between x + sqrt(3) y = 0 and y = 0"),
    6: (1, "line y = 0"),
}


def image_set_dim_111(j: int) -> int:
    if j not in _TOY_IMAGE_SETS:
        raise DomainError(f"region index {j} outside 1..6")
    return _TOY_IMAGE_SETS[j][0]


def image_set_description(j: int) -> str:
    if j not in _TOY_IMAGE_SETS:
        raise DomainError(f"region index {j} outside 1..6")
    return _TOY_IMAGE_SETS[j][1]


def image_line_residual(j: int, point) -> float:
    """Residual of the line equation bounding region j's projected image
    (0 for points on the line); defined for the line regions 2, 4, 6."""
    x, y = point
    if j == 2:
        return SQRT3 * x + y
    if j == 4:
        return x + SQRT3 * y
    if j == 6:
        return y
    raise DomainError(f"region {j} does not map onto a line")


def toy_region(w, b) -> np.ndarray:
    """Region label 1..6 of (w, b) for the (1,1,1) example on X = (0, 1, 2)."""
    cones = classify_cones(w, b, TOY_X)
    return np.vectorize(CONE_TO_TOY_REGION.get)(cones)


def toy_region_of(w: float, b: float) -> int:
    """Scalar form of :func:`toy_region`."""
    return int(toy_region([w], [b])[0])
