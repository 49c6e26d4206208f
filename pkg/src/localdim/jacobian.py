"""Jacobian of theta -> f_theta(X) built row by row with backpropagation.

Row ``i * N_L + v`` holds the gradient of output coordinate ``v`` on example
``i``; columns follow the flat parameter order of :mod:`localdim.net`.
ReLU derivative convention: sigma'(t) = 1 if t > 0 else 0 (so sigma'(0) = 0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, PreconditionError
from .net import (
    Architecture,
    ForwardTrace,
    OutAct,
    Params,
    as_sample,
    boundary_margin,
    forward,
)

DEFAULT_SUB_BATCH = 256


@dataclass(frozen=True, eq=False)
class JacobianMatrix:
    data: np.ndarray
    arch: Architecture
    n: int

    @property
    def shape(self):
        return self.data.shape

    def rows_for_example(self, i: int) -> np.ndarray:
        k = self.arch.widths[-1]
        return self.data[i * k:(i + 1) * k]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.arch.param_names())
            for row in self.data:
                writer.writerow([repr(float(x)) for x in row])


def output_seed(trace: ForwardTrace, v: int) -> np.ndarray:
    """eta^L = (J sigma_L(y^L))^T e_v for every example, shape (N_L, n)."""
    NL, n = trace.output.shape
    if trace.arch.out_act is OutAct.SOFTMAX:
        s = trace.output
        e = np.zeros((NL, 1))
        e[v] = 1.0
        # softmax Jacobian diag(s) - s s^T is symmetric
        return s * (e - s[v][None, :])
    eta = np.zeros((NL, n))
    eta[v] = 1.0
    return eta


def _check_finite(arr: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(arr)):
        idx = np.argwhere(~np.isfinite(arr))[0]
        raise NumericError(f"non-finite value in {where} at index {tuple(int(i) for i in idx)}")


def _backprop_errors(trace: ForwardTrace, eta_top: np.ndarray) -> list[np.ndarray]:
    """Error vectors eta^l for l = 1..L, each of shape (N_l, n)."""
    params = trace.params
    L = trace.arch.depth
    etas = [None] * L
    etas[L - 1] = eta_top
    for l in range(L - 1, 0, -1):
        back = params.weights[l].T @ etas[l]
        etas[l - 1] = (trace.preacts[l - 1] > 0) * back
        _check_finite(etas[l - 1], f"error vector of layer {l}")
    return etas


def per_example_gradients(trace: ForwardTrace, eta_top: np.ndarray) -> np.ndarray:
    """Gradient rows (n, P) obtained by backpropagating ``eta_top`` column by column."""
    etas = _backprop_errors(trace, eta_top)
    n = trace.n
    blocks = []
    for l, eta in enumerate(etas):
        prev = trace.acts[l]
        blocks.append(np.einsum("vi,ui->ivu", eta, prev).reshape(n, -1))
        blocks.append(eta.T)
    return np.hstack(blocks)


def backprop_row(trace: ForwardTrace, i: int, v: int) -> np.ndarray:
    """Gradient of output coordinate ``v`` on example ``i`` w.r.t. the flat parameters."""
    sub = ForwardTrace(
        trace.arch,
        trace.params,
        tuple(p[:, i:i + 1] for p in trace.preacts),
        tuple(a[:, i:i + 1] for a in trace.acts),
        trace.output[:, i:i + 1],
    )
    return per_example_gradients(sub, output_seed(sub, v))[0]


def _jacobian_block(trace: ForwardTrace) -> np.ndarray:
    NL, n = trace.output.shape
    J = np.empty((n * NL, trace.arch.param_count()))
    for v in range(NL):
        J[v::NL] = per_example_gradients(trace, output_seed(trace, v))
    return J


def jacobian(arch: Architecture, params: Params, X, sub_batch: int = DEFAULT_SUB_BATCH) -> JacobianMatrix:
    X = as_sample(X, arch)
    n = X.shape[1]
    sub_batch = max(1, int(sub_batch))
    blocks = []
    for start in range(0, n, sub_batch):
        trace = forward(arch, params, X[:, start:start + sub_batch])
        _check_finite(trace.output, "network output")
        blocks.append(_jacobian_block(trace))
    data = np.vstack(blocks)
    _check_finite(data, "Jacobian")
    return JacobianMatrix(data, arch, n)


def gradient(trace: ForwardTrace, seed: np.ndarray) -> np.ndarray:
    """Flat gradient of a scalar loss given ``dR/dy^L`` at the output
    pre-activations (shape (N_L, n)); backprop summed over examples."""
    etas = _backprop_errors(trace, np.asarray(seed, dtype=np.float64))
    parts = []
    for l, eta in enumerate(etas):
        parts.append((eta @ trace.acts[l].T).ravel())
        parts.append(eta.sum(axis=1))
    g = np.concatenate(parts)
    _check_finite(g, "gradient")
    return g


def output_vjp(trace: ForwardTrace, dR_dout: np.ndarray) -> np.ndarray:
    """Map ``dR/df`` (gradient w.r.t. the network output) to ``dR/dy^L``."""
    G = np.asarray(dR_dout, dtype=np.float64)
    if trace.arch.out_act is OutAct.SOFTMAX:
        s = trace.output
        return s * (G - (s * G).sum(axis=0, keepdims=True))
    return G


def vjp(trace: ForwardTrace, dR_dout: np.ndarray) -> np.ndarray:
    """``J^T vec(dR/df)`` computed by one seeded backward pass."""
    return gradient(trace, output_vjp(trace, dR_dout))


def finite_diff_jacobian(arch: Architecture, params: Params, X, h: float = 1e-5) -> JacobianMatrix:
    """Central differences, step ``h * (1 + |theta_k|)`` per parameter."""
    X = as_sample(X, arch)
    margin = boundary_margin(forward(arch, params, X))
    if not margin > 10 * h:
        raise PreconditionError(f"boundary margin {margin:.3g} <= 10*h = {10 * h:.3g}")
    theta = params.flatten()
    NL, n = arch.widths[-1], X.shape[1]
    J = np.empty((n * NL, theta.size))
    for k in range(theta.size):
        step = h * (1.0 + abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += step
        tm[k] -= step
        fp = forward(arch, Params.from_flat(arch, tp), X).output
        fm = forward(arch, Params.from_flat(arch, tm), X).output
        # example-major rows: vec of the transposed output
        J[:, k] = ((fp - fm) / ((tp[k] - tm[k]))).T.ravel()
    return JacobianMatrix(J, arch, n)
