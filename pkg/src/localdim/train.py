"""Full-batch gradient descent and Adam with trajectory recording.

Two execution paths share the same arithmetic:

* :func:`gd_step` / :func:`adam_step` / :func:`run_trajectory` work on one
  :class:`~localdim.net.Params` and take gradients through
  :func:`localdim.jacobian.gradient`;
* :class:`Ensemble` trains many parameter vectors of one architecture at
  once with batched numpy kernels (used by the Monte-Carlo drivers).
"""

from __future__ import annotations

import csv
import enum
import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dimension import local_dimension
from .errors import ConfigurationError, DomainError, NumericError
from .jacobian import gradient
from .net import Architecture, OutAct, Params, activation_pattern, as_sample, forward
from .shallow import TOY_X, alpha_of, CONE_TO_TOY_REGION, OrderedSample, project_to_P, seen_regions

DIVERGENCE_LOSS = 1e12


class LossKind(str, enum.Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"


@dataclass(frozen=True, eq=False)
class Objective:
    """Loss on a fixed sample ``X`` (N_0 x n) with targets ``Y`` (N_L x n).

    MSE is ``(1/n) sum_i ||f(x_i) - y_i||^2``; cross-entropy is
    ``-(1/n) sum_i sum_v Y_vi log f_vi`` and needs a softmax output.
    """

    kind: LossKind
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if Y.ndim == 1:
            Y = Y[None, :]
        if X.shape[1] != Y.shape[1]:
            raise ConfigurationError(f"X has {X.shape[1]} examples but Y has {Y.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def check(self, arch: Architecture) -> None:
        as_sample(self.X, arch)
        if self.Y.shape[0] != arch.widths[-1]:
            raise ConfigurationError(f"targets have {self.Y.shape[0]} rows, output width is {arch.widths[-1]}")
        if self.kind is LossKind.CROSS_ENTROPY and arch.out_act is not OutAct.SOFTMAX:
            raise ConfigurationError("cross-entropy requires a softmax output layer")

    def value(self, out: np.ndarray) -> float:
        if self.kind is LossKind.MSE:
            return float(((out - self.Y) ** 2).sum() / self.n)
        return float(-(self.Y * np.log(np.maximum(out, 1e-300))).sum() / self.n)

    def preact_seed(self, arch: Architecture, out: np.ndarray) -> np.ndarray:
        """dR/dy^L at the output pre-activations."""
        if self.kind is LossKind.CROSS_ENTROPY:
            return (out * self.Y.sum(axis=0, keepdims=True) - self.Y) / self.n
        G = 2.0 * (out - self.Y) / self.n
        if arch.out_act is OutAct.SOFTMAX:
            return out * (G - (out * G).sum(axis=0, keepdims=True))
        return G


def loss(arch: Architecture, params: Params, objective: Objective) -> float:
    return objective.value(forward(arch, params, objective.X).output)


def loss_and_grad(arch: Architecture, params: Params, objective: Objective) -> tuple[float, np.ndarray]:
    trace = forward(arch, params, objective.X)
    g = gradient(trace, objective.preact_seed(arch, trace.output))
    return objective.value(trace.output), g


def _finite_grad(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient")
    return g


def gd_step(arch: Architecture, params: Params, objective: Objective, lr: float) -> Params:
    if not lr > 0:
        raise DomainError("learning rate must be positive")
    _, g = loss_and_grad(arch, params, objective)
    return Params.from_flat(arch, params.flatten() - lr * _finite_grad(g))


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_update(state: AdamState, theta: np.ndarray, g: np.ndarray, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    return AdamState(m, v, t), theta - lr * m_hat / (np.sqrt(v_hat) + eps)


def adam_step(
    state: AdamState | None,
    arch: Architecture,
    params: Params,
    objective: Objective,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[AdamState, Params]:
    if not lr > 0:
        raise DomainError("learning rate must be positive")
    theta = params.flatten()
    state = state or AdamState.zeros(theta.size)
    _, g = loss_and_grad(arch, params, objective)
    state, theta = adam_update(state, theta, _finite_grad(g), lr, beta1, beta2, eps)
    return state, Params.from_flat(arch, theta)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "gd"  # "gd" or "adam"
    lr: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("gd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.kind!r}")
        if not self.lr > 0:
            raise DomainError("learning rate must be positive")


# --- trajectories ------------------------------------------------------------

@dataclass
class Snapshot:
    iteration: int
    theta_hash: str
    loss: float
    region: str = ""
    local_dim: int | None = None
    seen_regions: int | None = None
    proj_x: float | None = None
    proj_y: float | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    snapshots: list[Snapshot]
    config: dict
    final_params: Params | None = None
    aborted: bool = False

    CSV_FIELDS = ("iteration", "loss", "region", "local_dim", "seen_regions", "proj_x", "proj_y")

    @property
    def iterations(self) -> np.ndarray:
        return np.array([s.iteration for s in self.snapshots])

    @property
    def losses(self) -> np.ndarray:
        return np.array([s.loss for s in self.snapshots])

    def regions(self) -> list[str]:
        return [s.region for s in self.snapshots]

    def region_sequence(self) -> list[str]:
        """Regions visited, consecutive repeats collapsed."""
        seq = []
        for r in self.regions():
            if not seq or seq[-1] != r:
                seq.append(r)
        return seq

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_FIELDS)
            for s in self.snapshots:
                writer.writerow(["" if getattr(s, k) is None else getattr(s, k) for k in self.CSV_FIELDS])


def theta_hash(params: Params) -> str:
    return hashlib.sha1(np.ascontiguousarray(params.flatten()).tobytes()).hexdigest()[:16]


Hook = Callable[[Architecture, Params, Objective], dict]


def is_shallow_scalar(arch: Architecture) -> bool:
    return arch.depth == 2 and arch.widths[0] == 1 and arch.widths[-1] == 1 and arch.out_act is OutAct.IDENTITY


def region_label(arch: Architecture, params: Params, X) -> str:
    """Toy region number for the (1,1,1) example on X = (0,1,2); the alpha
    code for other shallow scalar nets; a pattern digest otherwise."""
    X = as_sample(X, arch)
    if is_shallow_scalar(arch):
        xs = OrderedSample.from_values(X)
        pattern = activation_pattern(forward(arch, params, xs.xs[None, :]))
        alpha = alpha_of(pattern, xs)
        if arch.widths[1] == 1 and np.array_equal(xs.xs, TOY_X):
            return str(CONE_TO_TOY_REGION[int(alpha[0])])
        return "-".join(str(int(a)) for a in alpha)
    pattern = activation_pattern(forward(arch, params, X))
    return hashlib.sha1(np.packbits(pattern).tobytes()).hexdigest()[:10]


def region_hook(arch, params, objective) -> dict:
    return {"region": region_label(arch, params, objective.X)}


def local_dim_hook(arch, params, objective) -> dict:
    return {"local_dim": local_dimension(arch, params, objective.X).rank}


def seen_regions_hook(arch, params, objective) -> dict:
    return {"seen_regions": seen_regions(activation_pattern(forward(arch, params, objective.X)))}


def theta_hook(arch, params, objective) -> dict:
    return {"theta": params.flatten()}


def projection_hook(arch, params, objective) -> dict:
    out = forward(arch, params, objective.X).output
    if out.shape != (1, 3):
        return {}
    px, py = project_to_P(out[0])
    return {"proj_x": px, "proj_y": py}


DEFAULT_HOOKS: tuple[Hook, ...] = (region_hook, local_dim_hook, seen_regions_hook, projection_hook)


def _snapshot(it, arch, params, objective, value, hooks) -> Snapshot:
    snap = Snapshot(it, theta_hash(params), value)
    for hook in hooks:
        for k, v in hook(arch, params, objective).items():
            if k in Snapshot.__dataclass_fields__ and k != "extra":
                setattr(snap, k, v)
            else:
                snap.extra[k] = v
    return snap


def run_trajectory(
    arch: Architecture,
    params0: Params,
    objective: Objective,
    optimizer: OptimizerConfig,
    iters: int,
    record_every: int = 1,
    hooks: Sequence[Hook] = DEFAULT_HOOKS,
    seed=None,
    stop_loss: float | None = None,
) -> Trajectory:
    """Run ``iters`` optimizer steps, recording a snapshot at iteration 0,
    every ``record_every`` iterations and at the last iteration."""
    if iters < 1:
        raise DomainError("iters must be >= 1")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    objective.check(arch)
    params = params0.check(arch)
    state = None
    config = {
        "optimizer": optimizer.kind,
        "lr": optimizer.lr,
        "iterations": iters,
        "seed": seed,
        "record_every": record_every,
    }
    snaps = [_snapshot(0, arch, params, objective, loss(arch, params, objective), hooks)]
    aborted = False
    for it in range(1, iters + 1):
        value, g = loss_and_grad(arch, params, objective)
        if stop_loss is not None and value < stop_loss:
            if snaps[-1].iteration != it - 1:
                snaps.append(_snapshot(it - 1, arch, params, objective, value, hooks))
            break
        g = _finite_grad(g)
        theta = params.flatten()
        if optimizer.kind == "gd":
            theta = theta - optimizer.lr * g
        else:
            state = state or AdamState.zeros(theta.size)
            state, theta = adam_update(state, theta, g, optimizer.lr, optimizer.beta1, optimizer.beta2, optimizer.eps)
        params = Params.from_flat(arch, theta)
        value = loss(arch, params, objective)
        if not np.isfinite(value) or value > DIVERGENCE_LOSS:
            aborted = True
            break
        if it % record_every == 0 or it == iters:
            snaps.append(_snapshot(it, arch, params, objective, value, hooks))
    return Trajectory(snaps, config, params, aborted)


def detect_plateaus(traj: Trajectory, window: int = 20, rel_drop: float = 1e-3) -> list[tuple[int, int]]:
    """Maximal iteration intervals on which the loss moves by less than
    ``rel_drop`` (relative) over every ``window`` iterations.

    A snapshot at iteration t is flagged when the snapshot at the first
    iteration >= t + window differs from it by less than ``rel_drop`` in
    relative terms (an increase is not flat);
    each run of consecutive flagged snapshots gives (t_first, t_last + window).
    """
    its = traj.iterations
    ls = traj.losses
    flagged = []
    for k, t in enumerate(its):
        j = int(np.searchsorted(its, t + window))
        if j >= its.size:
            break
        change = abs(ls[k] - ls[j]) / max(abs(ls[k]), 1e-300)
        flagged.append((int(t), int(its[j]), change < rel_drop))
    out: list[tuple[int, int]] = []
    start = end = None
    for t, tw, flat in flagged:
        if flat:
            if start is None:
                start = t
            end = tw
        elif start is not None:
            out.append((start, end))
            start = None
    if start is not None:
        out.append((start, end))
    return out


# --- batched training --------------------------------------------------------

@dataclass
class EnsembleResult:
    thetas: np.ndarray  # (B, P)
    losses: np.ndarray  # (B,) loss at the final parameters
    steps: np.ndarray  # (B,) optimizer steps taken
    stopped: np.ndarray  # (B,) reached the stopping loss
    diverged: np.ndarray  # (B,)
    history: list = field(default_factory=list)


class Ensemble:
    """Batched forward/backward for B parameter vectors of one architecture."""

    def __init__(self, arch: Architecture, objective: Objective):
        objective.check(arch)
        self.arch = arch
        self.objective = objective
        self.slices = arch.param_slices()
        self.shapes = arch.layer_shapes()

    def unpack(self, thetas: np.ndarray):
        B = thetas.shape[0]
        Ws = [thetas[:, ws].reshape(B, r, c) for (ws, _), (r, c) in zip(self.slices, self.shapes)]
        bs = [thetas[:, bsl] for _, bsl in self.slices]
        return Ws, bs

    def forward(self, thetas: np.ndarray, X: np.ndarray | None = None):
        X = self.objective.X if X is None else X
        Ws, bs = self.unpack(thetas)
        h = np.broadcast_to(X, (thetas.shape[0],) + X.shape)
        acts, preacts = [h], []
        L = len(Ws)
        for l in range(L):
            y = Ws[l] @ h + bs[l][:, :, None]
            preacts.append(y)
            if l < L - 1:
                h = np.maximum(y, 0.0)
                acts.append(h)
        y = preacts[-1]
        if self.arch.out_act is OutAct.SOFTMAX:
            e = np.exp(y - y.max(axis=1, keepdims=True))
            out = e / e.sum(axis=1, keepdims=True)
        else:
            out = y
        return Ws, acts, preacts, out

    def losses(self, out: np.ndarray) -> np.ndarray:
        obj = self.objective
        if obj.kind is LossKind.MSE:
            return ((out - obj.Y) ** 2).sum(axis=(1, 2)) / obj.n
        return -(obj.Y * np.log(np.maximum(out, 1e-300))).sum(axis=(1, 2)) / obj.n

    def loss_and_grad(self, thetas: np.ndarray):
        obj = self.objective
        Ws, acts, preacts, out = self.forward(thetas)
        if obj.kind is LossKind.CROSS_ENTROPY:
            eta = (out * obj.Y.sum(axis=0, keepdims=True) - obj.Y) / obj.n
        else:
            G = 2.0 * (out - obj.Y) / obj.n
            if self.arch.out_act is OutAct.SOFTMAX:
                eta = out * (G - (out * G).sum(axis=1, keepdims=True))
            else:
                eta = G
        grad = np.empty_like(thetas)
        B = thetas.shape[0]
        for l in range(len(Ws) - 1, -1, -1):
            ws, bsl = self.slices[l]
            grad[:, ws] = (eta @ acts[l].transpose(0, 2, 1)).reshape(B, -1)
            grad[:, bsl] = eta.sum(axis=2)
            if l > 0:
                eta = (preacts[l - 1] > 0) * (Ws[l].transpose(0, 2, 1) @ eta)
        return self.losses(out), grad

    def train(
        self,
        thetas0: np.ndarray,
        optimizer: OptimizerConfig,
        iters: int,
        stop_loss: float | None = None,
        callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
        callback_every: int = 0,
    ) -> EnsembleResult:
        """Train every row of ``thetas0``; a row stops updating once its loss is
        below ``stop_loss`` or it diverges."""
        thetas = np.array(thetas0, dtype=np.float64, copy=True)
        B, P = thetas.shape
        active = np.ones(B, dtype=bool)
        stopped = np.zeros(B, dtype=bool)
        diverged = np.zeros(B, dtype=bool)
        steps = np.zeros(B, dtype=np.int64)
        m = np.zeros((B, P))
        v = np.zeros((B, P))
        for it in range(1, iters + 1):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            cur = thetas[idx]
            values, g = self.loss_and_grad(cur)
            bad = ~np.isfinite(values) | (values > DIVERGENCE_LOSS) | ~np.all(np.isfinite(g), axis=1)
            done = values < stop_loss if stop_loss is not None else np.zeros(idx.size, dtype=bool)
            stopped[idx[done & ~bad]] = True
            diverged[idx[bad]] = True
            go = ~(done | bad)
            active[idx[~go]] = False
            idx, cur, g = idx[go], cur[go], g[go]
            if idx.size == 0:
                break
            if optimizer.kind == "gd":
                thetas[idx] = cur - optimizer.lr * g
            else:
                t = steps[idx] + 1
                m[idx] = optimizer.beta1 * m[idx] + (1 - optimizer.beta1) * g
                v[idx] = optimizer.beta2 * v[idx] + (1 - optimizer.beta2) * g * g
                m_hat = m[idx] / (1 - optimizer.beta1 ** t)[:, None]
                v_hat = v[idx] / (1 - optimizer.beta2 ** t)[:, None]
                thetas[idx] = cur - optimizer.lr * m_hat / (np.sqrt(v_hat) + optimizer.eps)
            steps[idx] += 1
            if callback is not None and callback_every and it % callback_every == 0:
                callback(it, thetas, active)
        final_losses = self.losses(self.forward(thetas)[3])
        if stop_loss is not None:
            stopped |= final_losses < stop_loss
        return EnsembleResult(thetas, final_losses, steps, stopped, diverged)


# --- mini-batch SGD (classification sweeps) ----------------------------------

def sgd_epoch(arch: Architecture, params: Params, X: np.ndarray, Y: np.ndarray, kind, lr: float,
              batch_size: int, rng: np.random.Generator) -> Params:
    """One pass over a shuffled sample in mini-batches of ``batch_size``."""
    if not lr > 0:
        raise DomainError("learning rate must be positive")
    if batch_size < 1:
        raise DomainError("batch size must be positive")
    n = X.shape[1]
    order = rng.permutation(n)
    theta = params.flatten()
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        obj = Objective(kind, X[:, idx], Y[:, idx])
        _, g = loss_and_grad(arch, Params.from_flat(arch, theta), obj)
        theta = theta - lr * _finite_grad(g)
    return Params.from_flat(arch, theta)
