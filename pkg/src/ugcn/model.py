"""The network: complex spatio-temporal graph convolutions, adaptive pooling,
and a position-broadcast decoder head, with hand-rolled reverse-mode gradients.

Every learnable tensor has a shape independent of the graph size, so one
parameter set runs on any system.  Convolution layers apply
sigma(sum_k sum_tau S^k X[t-tau] H[k,tau]) where S is the normalized shift
operator of the system at hand and the taps H are shared across systems.
Temporal lags of the input window are realized by shifting the channel axis
(channel j holds the estimate j steps back), so a sample stays self-contained.

Complex tensors are differentiated in the split sense: gradients are taken
with respect to the real and imaginary parts independently and reassembled as
g = df/dRe + j df/dIm, which turns C-linear products Y = A X B into the
adjoint rules g_X = A^H g_Y B^H.  The activation is a split ReLU (real and
imaginary parts rectified independently).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoForwardRecorded, TooFewNodes
from .grid import Gso, shift_powers

CUSTOM = "custom"
LEARNABLE = "learnable"


@dataclass(frozen=True)
class LayerConfig:
    """Architecture hyperparameters; widths has one more entry than layers."""

    layers: int = 2
    k_spatial: int = 2
    k_temporal: int = 3
    widths: tuple[int, ...] = (10, 32, 32)
    pooled_nodes: int = 8
    hidden: int = 256
    pooling: str = LEARNABLE
    outputs: int = 2                    # 2 real heads = one complex output

    def __post_init__(self):
        if self.layers < 1 or len(self.widths) != self.layers + 1:
            raise DimensionMismatch(
                f"widths {self.widths} inconsistent with {self.layers} layers"
            )
        if self.k_spatial < 0 or self.k_temporal < 0:
            raise DimensionMismatch("filter orders must be nonnegative")
        if self.pooled_nodes < 1 or self.hidden < 1 or self.outputs < 1:
            raise DimensionMismatch("pooled_nodes, hidden and outputs must be positive")
        if self.pooling not in (CUSTOM, LEARNABLE):
            raise DimensionMismatch(f"unknown pooling {self.pooling!r}")

    @property
    def pooled_width(self) -> int:
        """Complex feature width after pooling (custom concatenates avg and max)."""
        return 2 * self.widths[-1] if self.pooling == CUSTOM else self.widths[-1]

    @property
    def head_inputs(self) -> int:
        """Real length of the flattened pooled block (re and im concatenated)."""
        return 2 * self.pooled_nodes * self.pooled_width

    def to_dict(self) -> dict:
        return {
            "layers": self.layers, "k_spatial": self.k_spatial,
            "k_temporal": self.k_temporal, "widths": list(self.widths),
            "pooled_nodes": self.pooled_nodes, "hidden": self.hidden,
            "pooling": self.pooling, "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LayerConfig":
        doc = dict(doc)
        doc["widths"] = tuple(doc["widths"])
        return cls(**doc)


def forecast_config(**overrides) -> LayerConfig:
    return LayerConfig(**{**dict(layers=2, widths=(10, 32, 32), pooling=LEARNABLE,
                                 outputs=2), **overrides})


def fdi_config(**overrides) -> LayerConfig:
    """Single spatial layer with hybrid avg/max pooling and one logit head."""
    return LayerConfig(**{**dict(layers=1, widths=(10, 32), k_temporal=0,
                                 pooling=CUSTOM, outputs=1), **overrides})


@dataclass
class UgcnParams:
    """All learnable tensors; shapes never depend on the graph size."""

    conv: list[np.ndarray]              # per layer: [K+1, Kt+1, F_in, F_out] complex
    assign: np.ndarray | None           # [N_p, F_L] complex (learnable pooling only)
    w_enc: np.ndarray                   # [d, head_inputs]
    b_enc: np.ndarray                   # [d]
    w_pos: np.ndarray                   # [d]
    b_pos: np.ndarray                   # [d]
    w_t: np.ndarray                     # [d, d]
    b_t: np.ndarray                     # [d]
    w_out: np.ndarray                   # [d, outputs]
    b_out: np.ndarray                   # [outputs]

    def tensors(self) -> dict[str, np.ndarray]:
        out = {f"conv.{i}": t for i, t in enumerate(self.conv)}
        if self.assign is not None:
            out["assign"] = self.assign
        out.update(
            w_enc=self.w_enc, b_enc=self.b_enc, w_pos=self.w_pos, b_pos=self.b_pos,
            w_t=self.w_t, b_t=self.b_t, w_out=self.w_out, b_out=self.b_out,
        )
        return out

    def copy(self) -> "UgcnParams":
        return UgcnParams(
            conv=[t.copy() for t in self.conv],
            assign=None if self.assign is None else self.assign.copy(),
            w_enc=self.w_enc.copy(), b_enc=self.b_enc.copy(),
            w_pos=self.w_pos.copy(), b_pos=self.b_pos.copy(),
            w_t=self.w_t.copy(), b_t=self.b_t.copy(),
            w_out=self.w_out.copy(), b_out=self.b_out.copy(),
        )

    def finite(self) -> bool:
        return all(np.all(np.isfinite(np.asarray(t).view(np.float64)))
                   for t in self.tensors().values())


def init_params(cfg: LayerConfig, seed: int = 0) -> UgcnParams:
    """Complex Glorot-style init, scaled by fan-in times the tap count."""
    rng = np.random.default_rng([seed, 41])
    conv = []
    for l in range(cfg.layers):
        f_in, f_out = cfg.widths[l], cfg.widths[l + 1]
        std = 1.0 / np.sqrt(f_in * (cfg.k_spatial + 1) * (cfg.k_temporal + 1))
        shape = (cfg.k_spatial + 1, cfg.k_temporal + 1, f_in, f_out)
        conv.append(
            (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (std / np.sqrt(2))
        )
    assign = None
    if cfg.pooling == LEARNABLE:
        std = 1.0 / np.sqrt(cfg.widths[-1])
        shape = (cfg.pooled_nodes, cfg.widths[-1])
        assign = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (std / np.sqrt(2))
    d, hin = cfg.hidden, cfg.head_inputs
    # Position units start as tanh thresholds spread over [0, 1] with mixed
    # sharpness, so the decoder has a localized basis over output positions
    # from the first step instead of a monotone family pinned at p = 0.
    w_pos = rng.standard_normal(d) * 6.0
    b_pos = -w_pos * rng.uniform(0.0, 1.0, size=d)
    return UgcnParams(
        conv=conv,
        assign=assign,
        w_enc=rng.standard_normal((d, hin)) / np.sqrt(hin),
        b_enc=np.zeros(d),
        w_pos=w_pos,
        b_pos=b_pos,
        w_t=rng.standard_normal((d, d)) / np.sqrt(d),
        b_t=np.zeros(d),
        w_out=rng.standard_normal((d, cfg.outputs)) / np.sqrt(d),
        b_out=np.zeros(cfg.outputs),
    )


# --------------------------------------------------------------------------
# Building blocks


def split_relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z.real, 0.0) + 1j * np.maximum(z.imag, 0.0)


def _relu_back(grad: np.ndarray, pre: np.ndarray) -> np.ndarray:
    return grad.real * (pre.real > 0) + 1j * (grad.imag * (pre.imag > 0))


def shift_channels(x: np.ndarray, lag: int) -> np.ndarray:
    """Delay the channel/time axis by `lag` steps, zero-filling the oldest slots."""
    if lag == 0:
        return x
    out = np.zeros_like(x)
    if lag < x.shape[1]:
        out[:, lag:] = x[:, : x.shape[1] - lag]
    return out


def _conv_pre(powers: list[np.ndarray], window: np.ndarray, taps: np.ndarray) -> np.ndarray:
    k1, t1, f_in, f_out = taps.shape
    n = powers[0].shape[0]
    pre = np.zeros((n, f_out), dtype=np.complex128)
    for k in range(k1):
        for tau in range(t1):
            pre += powers[k] @ window[tau] @ taps[k, tau]
    return pre


def conv_forward(s, window: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """One spatio-temporal graph convolution output slice.

    window[tau] holds the features lagged by tau; entry 0 is the current time.
    """
    s_mat = s.matrix if isinstance(s, Gso) else np.asarray(s, dtype=np.complex128)
    window = np.asarray(window, dtype=np.complex128)
    taps = np.asarray(taps, dtype=np.complex128)
    if taps.ndim != 4:
        raise DimensionMismatch(f"taps must be [K+1, Kt+1, F_in, F_out], got {taps.shape}")
    if window.ndim != 3 or window.shape[0] != taps.shape[1]:
        raise DimensionMismatch(
            f"window {window.shape} does not provide {taps.shape[1]} lags"
        )
    if window.shape[2] != taps.shape[2]:
        raise DimensionMismatch(
            f"window features {window.shape[2]} != taps input width {taps.shape[2]}"
        )
    if s_mat.shape[0] != window.shape[1]:
        raise DimensionMismatch(f"S is {s_mat.shape} but window has {window.shape[1]} nodes")
    powers = shift_powers(s_mat, taps.shape[0] - 1)
    return split_relu(_conv_pre(powers, window, taps))


def cluster_slices(n: int, n_p: int) -> list[np.ndarray]:
    """Contiguous cluster index blocks, sizes as even as possible, larger first."""
    if n < n_p:
        raise TooFewNodes(f"cannot pool {n} nodes into {n_p} clusters")
    base, rem = divmod(n, n_p)
    sizes = [base + 1] * rem + [base] * (n_p - rem)
    bounds = np.cumsum([0] + sizes)
    return [np.arange(bounds[i], bounds[i + 1]) for i in range(n_p)]


def pool_custom(x: np.ndarray, n_p: int, order: np.ndarray | None = None):
    """Average and split elementwise-max per BFS-ordered cluster, concatenated.

    Returns ([N_p, 2F] pooled, cache) where the cache carries what backward needs.
    """
    x = np.asarray(x, dtype=np.complex128)
    n, f = x.shape
    order = np.arange(n) if order is None else np.asarray(order)
    if n == n_p:
        # unit clusters: average and max both reduce to the ordered features
        ordered = x[order]
        pooled = np.concatenate([ordered, ordered], axis=1)
        idx = np.repeat(order[:, None], f, axis=1)
        cache = {"clusters": [order[i: i + 1] for i in range(n)],
                 "argmax_re": idx, "argmax_im": idx, "shape": (n, f)}
        return pooled, cache
    clusters = [order[sl] for sl in cluster_slices(n, n_p)]
    pooled = np.empty((n_p, 2 * f), dtype=np.complex128)
    argmax_re = np.empty((n_p, f), dtype=int)
    argmax_im = np.empty((n_p, f), dtype=int)
    for i, rows in enumerate(clusters):
        block = x[rows]
        pooled[i, :f] = block.mean(axis=0)
        ire = np.argmax(block.real, axis=0)
        iim = np.argmax(block.imag, axis=0)
        argmax_re[i] = rows[ire]
        argmax_im[i] = rows[iim]
        cols = np.arange(f)
        pooled[i, f:] = block.real[ire, cols] + 1j * block.imag[iim, cols]
    cache = {"clusters": clusters, "argmax_re": argmax_re, "argmax_im": argmax_im,
             "shape": (n, f)}
    return pooled, cache


def _pool_custom_back(grad: np.ndarray, cache: dict) -> np.ndarray:
    n, f = cache["shape"]
    clusters = cache["clusters"]
    if len(clusters) == n:
        # unit clusters: avg and max gradients land on the same single row
        g_x = np.zeros((n, f), dtype=np.complex128)
        rows = np.array([c[0] for c in clusters])
        g_x[rows] = grad[:, :f] + grad[:, f:]
        return g_x
    g_re = np.zeros((n, f))
    g_im = np.zeros((n, f))
    cols = np.arange(f)
    for i, rows in enumerate(clusters):
        g_avg = grad[i, :f] / len(rows)
        g_re[rows] += g_avg.real
        g_im[rows] += g_avg.imag
        g_max = grad[i, f:]
        np.add.at(g_re, (cache["argmax_re"][i], cols), g_max.real)
        np.add.at(g_im, (cache["argmax_im"][i], cols), g_max.imag)
    return g_re + 1j * g_im


def pool_learnable(x: np.ndarray, w_assign: np.ndarray):
    """Row-stochastic soft assignment: A = softmax_rows |W_A X^H|, pooled = A X.

    Returns (A [N_p, N] real, pooled [N_p, F], cache).
    """
    x = np.asarray(x, dtype=np.complex128)
    w_assign = np.asarray(w_assign, dtype=np.complex128)
    if w_assign.shape[1] != x.shape[1]:
        raise DimensionMismatch(
            f"assignment width {w_assign.shape[1]} != features {x.shape[1]}"
        )
    m = w_assign @ x.conj().T                 # [N_p, N]
    scores = np.abs(m)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    a = e / e.sum(axis=1, keepdims=True)
    pooled = a @ x
    cache = {"m": m, "scores": scores, "a": a, "x": x, "w": w_assign}
    return a, pooled, cache


def _pool_learnable_back(grad: np.ndarray, cache: dict):
    m, scores, a, x, w = cache["m"], cache["scores"], cache["a"], cache["x"], cache["w"]
    g_a = (grad @ x.conj().T).real
    g_x = a.T @ grad
    # softmax rows
    g_scores = a * (g_a - np.sum(g_a * a, axis=1, keepdims=True))
    # modulus
    safe = np.where(scores > 1e-300, scores, 1.0)
    g_m = g_scores * np.where(scores > 0, m / safe, 0.0)
    # m = w @ conj(x).T
    g_w = g_m @ x
    g_conj_x_t = w.conj().T @ g_m            # gradient w.r.t. conj(x).T
    g_x = g_x + np.conj(g_conj_x_t).T
    return g_w, g_x


# --------------------------------------------------------------------------
# Full model


def _lags_per_layer(cfg: LayerConfig) -> list[list[int]]:
    """Output lags evaluated at each layer so the last layer sees a full window."""
    return [list(range((cfg.layers - l) * cfg.k_temporal + 1)) for l in range(1, cfg.layers + 1)]


def model_forward(
    s,
    x: np.ndarray,
    params: UgcnParams,
    cfg: LayerConfig,
    n_out: int | None = None,
    node_order: np.ndarray | None = None,
    record: bool = False,
):
    """Run the network on one system's feature window.

    x is [N, m0] complex with channel m0-1 the newest estimate.  The output is
    a complex phasor prediction per bus (two real heads) or a real logit per
    bus, of length n_out (defaults to N).
    """
    s_mat = s.matrix if isinstance(s, Gso) else np.asarray(s, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape[1] != cfg.widths[0]:
        raise DimensionMismatch(f"input {x.shape} incompatible with width {cfg.widths[0]}")
    if s_mat.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"S {s_mat.shape} vs {x.shape[0]} nodes")
    n_out = x.shape[0] if n_out is None else int(n_out)
    powers = shift_powers(s_mat, cfg.k_spatial)

    lag_plan = _lags_per_layer(cfg)
    max_input_lag = cfg.layers * cfg.k_temporal
    feats: list[dict[int, np.ndarray]] = [
        {r: shift_channels(x, r) for r in range(max_input_lag + 1)}
    ]
    pres: list[dict[int, np.ndarray]] = [{}]
    for l in range(1, cfg.layers + 1):
        taps = params.conv[l - 1]
        layer_feats: dict[int, np.ndarray] = {}
        layer_pres: dict[int, np.ndarray] = {}
        for r in lag_plan[l - 1]:
            window = np.stack([feats[l - 1][r + tau] for tau in range(cfg.k_temporal + 1)])
            pre = _conv_pre(powers, window, taps)
            layer_pres[r] = pre
            layer_feats[r] = split_relu(pre)
        feats.append(layer_feats)
        pres.append(layer_pres)
    top = feats[cfg.layers][0]

    if cfg.pooling == CUSTOM:
        pooled, pool_cache = pool_custom(top, cfg.pooled_nodes, node_order)
    else:
        _, pooled, pool_cache = pool_learnable(top, params.assign)

    x_vec = np.concatenate([pooled.real.ravel(), pooled.imag.ravel()])
    # Decoder positions: with a node ordering available (and a matching output
    # length) each bus is coded by its normalized electrical rank, which makes
    # the decoded profile a function of feeder depth rather than label order.
    positions = np.arange(n_out, dtype=float) / max(n_out - 1, 1)
    if node_order is not None and n_out == x.shape[0]:
        rank = np.empty(n_out, dtype=float)
        rank[np.asarray(node_order)] = np.arange(n_out, dtype=float)
        positions = rank / max(n_out - 1, 1)
    out, head_cache = _head(x_vec, positions, params)

    if cfg.outputs == 2:
        y = out[:, 0] + 1j * out[:, 1]
    else:
        y = out[:, 0]
    if not record:
        return y
    tape = {
        "cfg": cfg, "params": params, "powers": powers, "feats": feats, "pres": pres,
        "pool_cache": pool_cache, "pooled_shape": pooled.shape, "lag_plan": lag_plan,
        **head_cache,
    }
    return y, tape


def _head(x_vec: np.ndarray, positions: np.ndarray, params: UgcnParams):
    pre_h = params.w_enc @ x_vec + params.b_enc
    h = np.maximum(pre_h, 0.0)
    pre_e = positions[:, None] * params.w_pos[None, :] + params.b_pos[None, :]
    e_pos = np.tanh(pre_e)
    c = h[None, :] + e_pos
    pre_t = c @ params.w_t + params.b_t[None, :]
    t_act = np.maximum(pre_t, 0.0)
    out = t_act @ params.w_out + params.b_out[None, :]
    cache = {"x_vec": x_vec, "pre_h": pre_h, "h": h, "positions": positions,
             "e_pos": e_pos, "c": c, "pre_t": pre_t, "t_act": t_act}
    return out, cache


def head_forward(x_pool: np.ndarray, n_out: int, params: UgcnParams) -> np.ndarray:
    """Decode a pooled block to n_out values with slot-order position codes.

    The standalone entry point for the broadcast decoder; the full model routes
    through the same math with electrically ordered positions.
    """
    x_pool = np.asarray(x_pool)
    if np.iscomplexobj(x_pool):
        x_vec = np.concatenate([x_pool.real.ravel(), x_pool.imag.ravel()])
    else:
        x_vec = x_pool.ravel()
    if x_vec.shape[0] != params.w_enc.shape[1]:
        raise DimensionMismatch(
            f"pooled block of {x_vec.shape[0]} values, encoder expects {params.w_enc.shape[1]}"
        )
    positions = np.arange(int(n_out), dtype=float) / max(int(n_out) - 1, 1)
    out, _ = _head(x_vec, positions, params)
    if params.w_out.shape[1] == 2:
        return out[:, 0] + 1j * out[:, 1]
    return out[:, 0]


def model_backward(tape: dict, grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients for a recorded forward pass.

    grad_out is the cogradient of the loss with respect to the model output:
    complex for the two-head phasor output, real for logits.
    """
    if not isinstance(tape, dict) or "cfg" not in tape:
        raise NoForwardRecorded("model_backward needs the tape from model_forward(record=True)")
    cfg: LayerConfig = tape["cfg"]
    params: UgcnParams = tape["params"]
    grad_out = np.asarray(grad_out)
    if cfg.outputs == 2:
        g_out = np.stack([grad_out.real, grad_out.imag], axis=1)
    else:
        g_out = grad_out.real[:, None]

    grads: dict[str, np.ndarray] = {}
    t_act, pre_t, c = tape["t_act"], tape["pre_t"], tape["c"]
    grads["w_out"] = t_act.T @ g_out
    grads["b_out"] = g_out.sum(axis=0)
    g_t = g_out @ params.w_out.T
    g_pre_t = g_t * (pre_t > 0)
    grads["w_t"] = c.T @ g_pre_t
    grads["b_t"] = g_pre_t.sum(axis=0)
    g_c = g_pre_t @ params.w_t.T
    g_h = g_c.sum(axis=0)
    g_pre_e = g_c * (1.0 - tape["e_pos"] ** 2)
    grads["w_pos"] = (g_pre_e * tape["positions"][:, None]).sum(axis=0)
    grads["b_pos"] = g_pre_e.sum(axis=0)
    g_pre_h = g_h * (tape["pre_h"] > 0)
    grads["w_enc"] = g_pre_h[:, None] * tape["x_vec"][None, :]
    grads["b_enc"] = g_pre_h
    g_x_vec = params.w_enc.T @ g_pre_h

    shape = tape["pooled_shape"]
    half = shape[0] * shape[1]
    g_pooled = g_x_vec[:half].reshape(shape) + 1j * g_x_vec[half:].reshape(shape)
    if cfg.pooling == CUSTOM:
        g_top = _pool_custom_back(g_pooled, tape["pool_cache"])
    else:
        g_assign, g_top = _pool_learnable_back(g_pooled, tape["pool_cache"])
        grads["assign"] = g_assign

    powers = tape["powers"]
    feats, pres = tape["feats"], tape["pres"]
    g_feats: list[dict[int, np.ndarray]] = [dict() for _ in range(cfg.layers + 1)]
    g_feats[cfg.layers][0] = g_top
    for i in range(cfg.layers):
        grads[f"conv.{i}"] = np.zeros_like(params.conv[i])
    for l in range(cfg.layers, 0, -1):
        taps = params.conv[l - 1]
        g_taps = grads[f"conv.{l - 1}"]
        for r in sorted(g_feats[l]):
            g_act = g_feats[l][r]
            g_pre = _relu_back(g_act, pres[l][r])
            for k in range(taps.shape[0]):
                pk_h = powers[k].conj().T
                propagated = pk_h @ g_pre
                for tau in range(taps.shape[1]):
                    src = feats[l - 1][r + tau]
                    g_taps[k, tau] += (powers[k] @ src).conj().T @ g_pre
                    if l > 1:
                        contrib = propagated @ taps[k, tau].conj().T
                        lag = r + tau
                        if lag in g_feats[l - 1]:
                            g_feats[l - 1][lag] += contrib
                        else:
                            g_feats[l - 1][lag] = contrib
    return grads


def output_length_positions(n_out: int) -> np.ndarray:
    """Normalized per-position code driving the decoder, [0, 1] inclusive."""
    return np.arange(n_out, dtype=float) / max(n_out - 1, 1)
