"""Local dimension: numerical rank of the parameter Jacobian, the max-rank
bound and a sampling estimate of the semi-continuous envelopes dim+/dim-."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from numpy.linalg import LinAlgError

from .errors import DomainError, NumericError
from .jacobian import DEFAULT_SUB_BATCH, JacobianMatrix, jacobian
from .net import Architecture, Params, as_sample, boundary_margin, forward

EPS = np.finfo(np.float64).eps


def spectral_tolerance(s: np.ndarray, shape) -> float:
    smax = float(s[0]) if s.size else 0.0
    return smax * max(shape) * EPS


def gap_tolerance(s: np.ndarray, shape, min_decades: float = 2.0) -> float:
    """Cut at the largest drop of log10 singular values.

    Falls back to the spectral tolerance when no drop spans ``min_decades``.
    """
    spectral = spectral_tolerance(s, shape)
    if s.size == 0 or s[0] == 0:
        return spectral
    floor = s[0] * EPS * 1e-3
    logs = np.log10(np.maximum(s, floor))
    drops = logs[:-1] - logs[1:]
    if drops.size == 0 or drops.max() < min_decades:
        return spectral
    k = int(np.argmax(drops))
    return float(np.sqrt(max(s[k + 1], floor) * s[k]))


TOL_POLICIES: dict[str, Callable] = {"spectral": spectral_tolerance, "gap": gap_tolerance}


def resolve_policy(tol_policy) -> Callable:
    if tol_policy is None:
        return spectral_tolerance
    if callable(tol_policy):
        return tol_policy
    try:
        return TOL_POLICIES[tol_policy]
    except KeyError:
        raise DomainError(f"unknown tolerance policy {tol_policy!r}; choose from {sorted(TOL_POLICIES)}") from None


@dataclass
class LocalDimReport:
    rank: int
    singular_values: list[float]
    tolerance_used: float
    margin: float = float("nan")
    max_rank: int | None = None

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "max_rank": self.max_rank,
            "margin": self.margin,
            "tolerance": self.tolerance_used,
            "singular_values": list(self.singular_values),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class DimEnvelope:
    dim_plus: int
    dim_minus: int
    epsilon: float
    samples: int
    ranks: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def singular_values(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(M)):
        raise NumericError("matrix has non-finite entries")
    try:
        return np.linalg.svd(M, compute_uv=False)
    except LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc


def numerical_rank(J, tol_policy="spectral", tol: float | None = None) -> LocalDimReport:
    """Rank = number of singular values strictly above the tolerance.

    ``tol`` overrides the policy with an absolute threshold (used to compare
    ranks across symmetry orbits with the tolerance of a reference matrix).
    """
    M = J.data if isinstance(J, JacobianMatrix) else np.asarray(J, dtype=np.float64)
    s = singular_values(M)
    tau = float(tol) if tol is not None else float(resolve_policy(tol_policy)(s, M.shape))
    return LocalDimReport(int(np.count_nonzero(s > tau)), s.tolist(), tau)


def local_dimension(
    arch: Architecture,
    params: Params,
    X,
    tol_policy="spectral",
    tol: float | None = None,
    sub_batch: int = DEFAULT_SUB_BATCH,
) -> LocalDimReport:
    X = as_sample(X, arch)
    rep = numerical_rank(jacobian(arch, params, X, sub_batch=sub_batch), tol_policy, tol)
    rep.margin = boundary_margin(forward(arch, params, X))
    rep.max_rank = arch.max_rank()
    return rep


def _uniform_ball(rng: np.random.Generator, center: np.ndarray, radius: float, m: int) -> np.ndarray:
    d = center.size
    g = rng.standard_normal((m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(m, 1)) ** (1.0 / d)
    return center + r * g


def dim_envelope(
    arch: Architecture,
    params: Params,
    X,
    epsilon: float,
    m_samples: int,
    tol_policy="spectral",
    seed=None,
) -> DimEnvelope:
    """Max/min rank over ``theta`` and ``m_samples`` uniform draws from B(theta, eps).

    Sampling can only miss regions, so ``dim_plus`` is a lower estimate of the
    true dim+ and ``dim_minus`` an upper estimate of dim-.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if m_samples < 0:
        raise DomainError("m_samples must be non-negative")
    X = as_sample(X, arch)
    theta = params.flatten()
    ranks = [local_dimension(arch, params, X, tol_policy).rank]
    rng = np.random.default_rng(seed)
    for point in _uniform_ball(rng, theta, epsilon, m_samples):
        ranks.append(local_dimension(arch, Params.from_flat(arch, point), X, tol_policy).rank)
    return DimEnvelope(max(ranks), min(ranks), float(epsilon), int(m_samples), ranks)
