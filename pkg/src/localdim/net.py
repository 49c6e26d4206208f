"""Fully-connected ReLU networks: parameters, forward pass, activation patterns
and the two parameterization symmetries (positive rescaling, permutation).

Conventions
-----------
* Samples are stored column-wise: ``X`` has shape ``(N_0, n)``.
* ``W[l]`` has shape ``(N_{l+1}, N_l)`` and ``b[l]`` has length ``N_{l+1}``.
* The flat parameter vector (and the Jacobian column order) is
  layer 1 weights (row-major), layer 1 biases, layer 2 weights, ...
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError


class OutAct(str, enum.Enum):
    IDENTITY = "identity"
    SOFTMAX = "softmax"


class InitScheme(str, enum.Enum):
    STD_NORMAL = "std_normal"
    HE_NORMAL = "he_normal"
    GLOROT_UNIFORM_ZERO_BIAS = "glorot_uniform_zero_bias"


@dataclass(frozen=True)
class Architecture:
    widths: tuple[int, ...]
    out_act: OutAct = OutAct.IDENTITY

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "out_act", OutAct(self.out_act))
        if len(widths) < 3:
            raise ConfigurationError(f"need at least one hidden layer, got widths {widths}")
        if min(widths) < 1:
            raise ConfigurationError(f"layer widths must be >= 1, got {widths}")

    @property
    def depth(self) -> int:
        """Number of weight layers L."""
        return len(self.widths) - 1

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return self.widths[1:-1]

    @property
    def n_hidden(self) -> int:
        return sum(self.hidden_widths)

    def param_count(self) -> int:
        return sum(a * b + b for a, b in zip(self.widths[:-1], self.widths[1:]))

    def max_rank(self) -> int:
        return self.param_count() - self.n_hidden

    def layer_shapes(self) -> list[tuple[int, int]]:
        return [(b, a) for a, b in zip(self.widths[:-1], self.widths[1:])]

    def param_names(self) -> list[str]:
        names = []
        for l, (rows, cols) in enumerate(self.layer_shapes(), start=1):
            names += [f"L{l}.w{r}.{c}" for r in range(rows) for c in range(cols)]
            names += [f"L{l}.b{r}" for r in range(rows)]
        return names

    def param_slices(self) -> list[tuple[slice, slice]]:
        """(weight slice, bias slice) into the flat vector for every layer."""
        out, pos = [], 0
        for rows, cols in self.layer_shapes():
            ws = slice(pos, pos + rows * cols)
            pos += rows * cols
            bs = slice(pos, pos + rows)
            pos += rows
            out.append((ws, bs))
        return out


@dataclass(frozen=True, eq=False)
class Params:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64).reshape(-1) for b in self.biases)
        for a in ws + bs:
            a.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    def check(self, arch: Architecture) -> "Params":
        if len(self.weights) != arch.depth or len(self.biases) != arch.depth:
            raise ConfigurationError(
                f"expected {arch.depth} layers, got {len(self.weights)} weights / {len(self.biases)} biases"
            )
        for l, (rows, cols) in enumerate(arch.layer_shapes()):
            if self.weights[l].shape != (rows, cols):
                raise ConfigurationError(
                    f"layer {l + 1}: weight shape {self.weights[l].shape}, expected {(rows, cols)}"
                )
            if self.biases[l].shape != (rows,):
                raise ConfigurationError(
                    f"layer {l + 1}: bias shape {self.biases[l].shape}, expected {(rows,)}"
                )
        if not all(np.all(np.isfinite(a)) for a in self.weights + self.biases):
            raise ConfigurationError("parameters contain non-finite entries")
        return self

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b]
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, arch: Architecture, vec) -> "Params":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (arch.param_count(),):
            raise ConfigurationError(f"flat vector has shape {vec.shape}, expected ({arch.param_count()},)")
        ws, bs = [], []
        for (rows, cols), (wsl, bsl) in zip(arch.layer_shapes(), arch.param_slices()):
            ws.append(vec[wsl].reshape(rows, cols))
            bs.append(vec[bsl])
        return cls(tuple(ws), tuple(bs))

    def allclose(self, other: "Params", atol=0.0, rtol=0.0) -> bool:
        a, b = self.flatten(), other.flatten()
        return a.shape == b.shape and np.allclose(a, b, atol=atol, rtol=rtol)


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    """Pre-activations ``preacts[l]`` (layers 1..L) and post-activations
    ``acts[l]`` (layers 0..L-1, ``acts[0] = X``); ``output = sigma_L(preacts[-1])``."""

    arch: Architecture
    params: Params
    preacts: tuple[np.ndarray, ...]
    acts: tuple[np.ndarray, ...]
    output: np.ndarray

    @property
    def n(self) -> int:
        return self.output.shape[1]

    def hidden_preacts(self) -> np.ndarray:
        """Stacked hidden pre-activations, shape ``(N_1+...+N_{L-1}, n)``."""
        return np.vstack(self.preacts[:-1])


def as_sample(X, arch: Architecture | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1) if arch is None or arch.widths[0] == 1 else X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ConfigurationError(f"sample must be a non-empty (N_0, n) matrix, got shape {X.shape}")
    if arch is not None and X.shape[0] != arch.widths[0]:
        raise ConfigurationError(f"sample has {X.shape[0]} rows, architecture expects N_0={arch.widths[0]}")
    if not np.all(np.isfinite(X)):
        raise ConfigurationError("sample contains non-finite entries")
    return X


def softmax(Y: np.ndarray) -> np.ndarray:
    Z = Y - Y.max(axis=0, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=0, keepdims=True)


def output_activation(arch: Architecture, Y: np.ndarray) -> np.ndarray:
    if arch.out_act is OutAct.SOFTMAX:
        return softmax(Y)
    return Y


def forward(arch: Architecture, params: Params, X) -> ForwardTrace:
    params.check(arch)
    X = as_sample(X, arch)
    acts = [X]
    preacts = []
    h = X
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        y = W @ h + b[:, None]
        preacts.append(y)
        if l < arch.depth - 1:
            h = np.maximum(y, 0.0)
            acts.append(h)
    out = output_activation(arch, preacts[-1])
    return ForwardTrace(arch, params, tuple(preacts), tuple(acts), out)


def predict(arch: Architecture, params: Params, X) -> np.ndarray:
    return forward(arch, params, X).output


def activation_pattern(trace: ForwardTrace) -> np.ndarray:
    """Binary matrix (hidden neurons x examples); 1 iff pre-activation >= 0."""
    return (trace.hidden_preacts() >= 0).astype(np.int8)


def boundary_margin(trace: ForwardTrace) -> float:
    P = trace.hidden_preacts()
    scale = 1.0 + np.abs(P).max(axis=1, keepdims=True)
    return float((np.abs(P) / scale).min())


def _hidden_split(arch: Architecture, values, name: str) -> list[np.ndarray]:
    if len(values) == len(arch.hidden_widths) and all(
        np.ndim(v) == 1 and len(v) == w for v, w in zip(values, arch.hidden_widths)
    ):
        return [np.asarray(v) for v in values]
    flat = np.asarray(values).reshape(-1) if np.ndim(values) <= 1 else None
    if flat is None or flat.shape[0] != arch.n_hidden:
        raise DomainError(f"{name} must give one entry per hidden neuron ({arch.hidden_widths})")
    return np.split(flat, np.cumsum(arch.hidden_widths)[:-1])


def rescale(arch: Architecture, params: Params, lam) -> Params:
    """Positive rescaling: ``w'_{u->v} = (lam_v / lam_u) w_{u->v}``,
    ``b'_v = lam_v b_v``; ``lam`` is 1 on input and output neurons.

    ``lam`` is either a flat vector over all hidden neurons (layer order) or a
    list with one vector per hidden layer.
    """
    params.check(arch)
    lam_h = [np.asarray(v, dtype=np.float64) for v in _hidden_split(arch, lam, "lambda")]
    if any(np.any(~(v > 0)) for v in lam_h):
        raise DomainError("rescaling factors must be strictly positive")
    lams = [np.ones(arch.widths[0])] + lam_h + [np.ones(arch.widths[-1])]
    ws = [lams[l + 1][:, None] / lams[l][None, :] * W for l, W in enumerate(params.weights)]
    bs = [lams[l + 1] * b for l, b in enumerate(params.biases)]
    return Params(tuple(ws), tuple(bs))


def permute(arch: Architecture, params: Params, perms: Sequence) -> Params:
    """Permute hidden neurons; ``perms[k]`` is a permutation of hidden layer k+1.

    Neuron ``j`` of the new network is neuron ``perms[k][j]`` of the old one.
    """
    params.check(arch)
    if len(perms) != len(arch.hidden_widths):
        raise DomainError(f"need one permutation per hidden layer ({len(arch.hidden_widths)})")
    ps = []
    for p, w in zip(perms, arch.hidden_widths):
        p = np.asarray(p)
        if p.shape != (w,) or not np.array_equal(np.sort(p), np.arange(w)):
            raise DomainError(f"{p.tolist()} is not a permutation of range({w})")
        ps.append(p)
    full = [np.arange(arch.widths[0])] + ps + [np.arange(arch.widths[-1])]
    ws = [W[np.ix_(full[l + 1], full[l])] for l, W in enumerate(params.weights)]
    bs = [b[full[l + 1]] for l, b in enumerate(params.biases)]
    return Params(tuple(ws), tuple(bs))


def inverse_permutations(perms: Sequence) -> list[np.ndarray]:
    return [np.argsort(np.asarray(p)) for p in perms]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _truncated_normal(rng, std, shape):
    # resample until every draw lies within two standard deviations
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2 * std
    while np.any(bad):
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2 * std
    return out


def init_params(arch: Architecture, scheme=InitScheme.STD_NORMAL, seed=None) -> Params:
    """Draw parameters. ``he_normal`` and ``glorot_uniform_zero_bias`` follow the
    Keras initializers (truncated-normal He, uniform Glorot), biases set to 0."""
    scheme = InitScheme(scheme)
    rng = _rng(seed)
    ws, bs = [], []
    for rows, cols in arch.layer_shapes():
        if scheme is InitScheme.STD_NORMAL:
            ws.append(rng.standard_normal((rows, cols)))
            bs.append(rng.standard_normal(rows))
        elif scheme is InitScheme.HE_NORMAL:
            # 0.8796... is the std of a unit normal truncated at +-2
            std = np.sqrt(2.0 / cols) / 0.87962566103423978
            ws.append(_truncated_normal(rng, std, (rows, cols)))
            bs.append(np.zeros(rows))
        else:
            limit = np.sqrt(6.0 / (rows + cols))
            ws.append(rng.uniform(-limit, limit, size=(rows, cols)))
            bs.append(np.zeros(rows))
    return Params(tuple(ws), tuple(bs))


# --- persistence -----------------------------------------------------------

def model_to_dict(arch: Architecture, params: Params) -> dict:
    params.check(arch)
    return {
        "widths": list(arch.widths),
        "out_act": arch.out_act.value,
        "weights": [W.tolist() for W in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def model_from_dict(doc: dict) -> tuple[Architecture, Params]:
    try:
        arch = Architecture(tuple(doc["widths"]), OutAct(doc.get("out_act", "identity")))
        params = Params(
            tuple(np.array(W, dtype=np.float64).reshape(r, c) for W, (r, c) in zip(doc["weights"], arch.layer_shapes())),
            tuple(np.array(b, dtype=np.float64) for b in doc["biases"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"malformed model document: {exc}") from exc
    return arch, params.check(arch)


def save_model(path, arch: Architecture, params: Params) -> None:
    # json writes floats with repr(), the shortest round-trip decimal
    Path(path).write_text(json.dumps(model_to_dict(arch, params)))


def load_model(path) -> tuple[Architecture, Params]:
    return model_from_dict(json.loads(Path(path).read_text()))
