"""Network definition, forward pass, and backpropagation through time.

Architecture: a time-distributed dense layer (tanh) lifts each 4-feature
timestep to m units, k stacked LSTM layers carry the sequence, and a
linear head on the final hidden state emits the scalar one-step
prediction.  Gates use the standard sigmoid/tanh cell equations.

The backward pass is hand-derived BPTT returning exact analytic
gradients; clipping is a separate operation so finite-difference checks
compare against the raw gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError, TopologyError

FEATURE_DIM = 4


@dataclass(frozen=True)
class NetworkTopology:
    input_len: int = 50   # n: sequence length (samples)
    dense_units: int = 118  # m
    lstm_depth: int = 2   # k
    lstm_units: int = 162  # l
    feature_dim: int = FEATURE_DIM
    output_dim: int = 1

    def __post_init__(self):
        if min(self.input_len, self.dense_units, self.lstm_depth, self.lstm_units) < 1:
            raise TopologyError("all topology dimensions must be >= 1")
        if self.feature_dim != FEATURE_DIM or self.output_dim != 1:
            raise TopologyError("feature_dim is fixed at 4 and output_dim at 1")


def _sigmoid(x):
    # split form avoids overflow warnings for large negative arguments
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmLayerParams:
    W_f: np.ndarray
    U_f: np.ndarray
    b_f: np.ndarray
    W_c: np.ndarray
    U_c: np.ndarray
    b_c: np.ndarray
    W_i: np.ndarray
    U_i: np.ndarray
    b_i: np.ndarray
    W_o: np.ndarray
    U_o: np.ndarray
    b_o: np.ndarray

    GATES = ("f", "c", "i", "o")

    def items(self, prefix: str):
        for g in self.GATES:
            yield f"{prefix}.W_{g}", getattr(self, f"W_{g}")
            yield f"{prefix}.U_{g}", getattr(self, f"U_{g}")
            yield f"{prefix}.b_{g}", getattr(self, f"b_{g}")


@dataclass
class ModelParams:
    topology: NetworkTopology
    W_in: np.ndarray
    b_in: np.ndarray
    layers: list[LstmLayerParams] = field(default_factory=list)
    W_out: np.ndarray = None
    b_out: np.ndarray = None

    def items(self):
        """Ordered (name, array) pairs; the flattening order is the
        checkpoint and optimizer contract."""
        yield "W_in", self.W_in
        yield "b_in", self.b_in
        for j, layer in enumerate(self.layers):
            yield from layer.items(f"lstm{j}")
        yield "W_out", self.W_out
        yield "b_out", self.b_out

    def copy(self) -> "ModelParams":
        return ModelParams(
            topology=self.topology,
            W_in=self.W_in.copy(), b_in=self.b_in.copy(),
            layers=[LstmLayerParams(**{
                f"{kind}_{g}": getattr(layer, f"{kind}_{g}").copy()
                for g in LstmLayerParams.GATES for kind in ("W", "U", "b")
            }) for layer in self.layers],
            W_out=self.W_out.copy(), b_out=self.b_out.copy(),
        )

    def zeros_like(self) -> "ModelParams":
        out = self.copy()
        for _, arr in out.items():
            arr[:] = 0.0
        return out


def init_params(topology: NetworkTopology, seed: int) -> ModelParams:
    """Uniform fan-in initialization; forget-gate bias starts at 1."""
    rng = np.random.default_rng(seed)
    m, l, nf = topology.dense_units, topology.lstm_units, topology.feature_dim

    def uni(shape, fan_in):
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, size=shape)

    layers = []
    for j in range(topology.lstm_depth):
        in_dim = m if j == 0 else l
        kw = {}
        for g in LstmLayerParams.GATES:
            kw[f"W_{g}"] = uni((l, in_dim), in_dim)
            kw[f"U_{g}"] = uni((l, l), l)
            kw[f"b_{g}"] = np.ones(l) if g == "f" else np.zeros(l)
        layers.append(LstmLayerParams(**kw))

    return ModelParams(
        topology=topology,
        W_in=uni((m, nf), nf), b_in=np.zeros(m),
        layers=layers,
        W_out=uni((1, l), l), b_out=np.zeros(1),
    )


def forward(params: ModelParams, sequences: np.ndarray, return_cache: bool = False):
    """Run the network on a batch of scaled sequences.

    ``sequences`` is (B, n, 4).  Returns predictions (B,) and, when
    requested, the activation cache needed by ``backward``.
    """
    topo = params.topology
    X = np.asarray(sequences, dtype=float)
    if X.ndim == 2:
        X = X[None, :, :]
    if X.shape[1:] != (topo.input_len, topo.feature_dim):
        raise TopologyError(
            f"expected sequences (B, {topo.input_len}, {topo.feature_dim}), got {X.shape}"
        )
    B, n, _ = X.shape
    l = topo.lstm_units

    Z = np.tanh(X @ params.W_in.T + params.b_in)  # (B, n, m)

    cache_layers = []
    inp = Z
    for layer in params.layers:
        h = np.zeros((B, l))
        c = np.zeros((B, l))
        gates_i = np.empty((n, B, l)); gates_f = np.empty((n, B, l))
        gates_o = np.empty((n, B, l)); gates_g = np.empty((n, B, l))
        cs = np.empty((n, B, l)); tanh_cs = np.empty((n, B, l))
        hs = np.empty((n, B, l)); h_prevs = np.empty((n, B, l))
        c_prevs = np.empty((n, B, l))
        for t in range(n):
            x_t = inp[:, t, :]
            h_prevs[t] = h; c_prevs[t] = c
            i_g = _sigmoid(x_t @ layer.W_i.T + h @ layer.U_i.T + layer.b_i)
            f_g = _sigmoid(x_t @ layer.W_f.T + h @ layer.U_f.T + layer.b_f)
            o_g = _sigmoid(x_t @ layer.W_o.T + h @ layer.U_o.T + layer.b_o)
            g_g = np.tanh(x_t @ layer.W_c.T + h @ layer.U_c.T + layer.b_c)
            c = f_g * c + i_g * g_g
            tc = np.tanh(c)
            h = o_g * tc
            gates_i[t] = i_g; gates_f[t] = f_g; gates_o[t] = o_g; gates_g[t] = g_g
            cs[t] = c; tanh_cs[t] = tc; hs[t] = h
        cache_layers.append({
            "inp": inp, "i": gates_i, "f": gates_f, "o": gates_o, "g": gates_g,
            "c": cs, "tanh_c": tanh_cs, "h": hs, "h_prev": h_prevs, "c_prev": c_prevs,
        })
        inp = np.moveaxis(hs, 0, 1)  # (B, n, l) feeds the next layer

    h_last = cache_layers[-1]["h"][n - 1]  # (B, l)
    y = h_last @ params.W_out.T + params.b_out  # (B, 1)
    y = y[:, 0]
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite network output")
    if not return_cache:
        return y
    cache = {"X": X, "Z": Z, "layers": cache_layers, "h_last": h_last, "B": B, "n": n}
    return y, cache


def backward(params: ModelParams, cache: dict, dy: np.ndarray) -> ModelParams:
    """Exact gradient of sum_b dy_b * y_b with respect to every parameter.

    ``dy`` is (B,): the loss derivative at each sequence's prediction.
    Returns a ModelParams holding gradients (raw, unclipped).
    """
    topo = params.topology
    dy = np.asarray(dy, dtype=float)
    B, n = cache["B"], cache["n"]
    if dy.shape != (B,):
        raise TopologyError(f"dy must be ({B},), got {dy.shape}")
    l = topo.lstm_units
    grads = params.zeros_like()

    h_last = cache["h_last"]
    grads.W_out[:] = (dy[:, None] * h_last).sum(axis=0)[None, :]
    grads.b_out[:] = dy.sum()
    dh_top_last = dy[:, None] * params.W_out[0][None, :]  # (B, l)

    # external dh per timestep for the layer being processed; for the top
    # layer only the final step receives a signal (the output head)
    dh_ext = np.zeros((n, B, l))
    dh_ext[n - 1] = dh_top_last

    for j in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[j]
        cl = cache["layers"][j]
        gl = grads.layers[j]
        in_dim = cl["inp"].shape[2]
        dX = np.empty((n, B, in_dim))
        dh_next = np.zeros((B, l))
        dc_next = np.zeros((B, l))
        for t in range(n - 1, -1, -1):
            dh = dh_ext[t] + dh_next
            i_g = cl["i"][t]; f_g = cl["f"][t]; o_g = cl["o"][t]; g_g = cl["g"][t]
            tc = cl["tanh_c"][t]
            dc = dc_next + dh * o_g * (1.0 - tc * tc)
            da_o = dh * tc * o_g * (1.0 - o_g)
            da_i = dc * g_g * i_g * (1.0 - i_g)
            da_g = dc * i_g * (1.0 - g_g * g_g)
            da_f = dc * cl["c_prev"][t] * f_g * (1.0 - f_g)
            dc_next = dc * f_g
            dh_next = da_i @ layer.U_i + da_f @ layer.U_f + da_o @ layer.U_o + da_g @ layer.U_c
            dX[t] = da_i @ layer.W_i + da_f @ layer.W_f + da_o @ layer.W_o + da_g @ layer.W_c
            x_t = cl["inp"][:, t, :]
            h_prev = cl["h_prev"][t]
            gl.W_i += da_i.T @ x_t; gl.U_i += da_i.T @ h_prev; gl.b_i += da_i.sum(axis=0)
            gl.W_f += da_f.T @ x_t; gl.U_f += da_f.T @ h_prev; gl.b_f += da_f.sum(axis=0)
            gl.W_o += da_o.T @ x_t; gl.U_o += da_o.T @ h_prev; gl.b_o += da_o.sum(axis=0)
            gl.W_c += da_g.T @ x_t; gl.U_c += da_g.T @ h_prev; gl.b_c += da_g.sum(axis=0)
        dh_ext = dX

    # dense layer: dh_ext now hold gradients at the lifted inputs Z
    Z = cache["Z"]
    dZpre = np.moveaxis(dh_ext, 0, 1) * (1.0 - Z * Z)  # (B, n, m)
    X = cache["X"]
    grads.W_in[:] = np.einsum("bnm,bnf->mf", dZpre, X)
    grads.b_in[:] = dZpre.sum(axis=(0, 1))
    return grads


def clip_global_norm(grads: ModelParams, threshold: float) -> tuple[ModelParams, float]:
    """Rescale all gradient arrays so the global L2 norm is at most
    ``threshold``.  Returns (grads, pre-clip norm); mutates in place."""
    if threshold <= 0:
        raise ValueError("clip threshold must be positive")
    sq = 0.0
    for _, arr in grads.items():
        sq += float(np.sum(arr * arr))
    norm = np.sqrt(sq)
    if norm > threshold:
        scale = threshold / norm
        for _, arr in grads.items():
            arr *= scale
    return grads, norm


__all__ = [
    "NetworkTopology", "LstmLayerParams", "ModelParams",
    "init_params", "forward", "backward", "clip_global_norm", "FEATURE_DIM",
]
