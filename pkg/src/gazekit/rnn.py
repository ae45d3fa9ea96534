"""Recurrent gaze classifiers (forward-only and bidirectional GRU stacks)
implemented directly in numpy: forward pass, backpropagation through time,
and Adam training with a linearly decayed learning rate.

Input is the six-channel velocity stream; a stack of fully connected feature
layers feeds a stack of GRU layers, and a final linear layer projects onto
the three collapsed gaze classes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

_FORMAT_VERSION = 1
IN_DIM = 6
N_CLASSES = 3


@dataclass(frozen=True)
class RnnConfig:
    k_fc: int = 3
    k_gru: int = 3
    hidden: int = 24            # per direction
    bidirectional: bool = True
    fc_width: int = 24
    in_dim: int = IN_DIM
    n_classes: int = N_CLASSES
    lr0: float = 0.01
    lr_end_factor: float = 0.01  # linear decay endpoint lr0 * factor
    epochs: int = 1000
    rng_seed: int = 0

    def __post_init__(self):
        if self.k_fc < 1 or self.k_gru < 1 or self.hidden < 1:
            raise ValueError("layer counts and hidden size must be positive")


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _uniform_init(rng, fan_in, shape):
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: RnnConfig) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(cfg.rng_seed)
    p: Dict[str, np.ndarray] = {}
    din = cfg.in_dim
    for i in range(cfg.k_fc):
        p[f"fc{i}_W"] = _uniform_init(rng, din, (din, cfg.fc_width))
        p[f"fc{i}_b"] = np.zeros(cfg.fc_width)
        din = cfg.fc_width
    dirs = ("f", "b") if cfg.bidirectional else ("f",)
    H = cfg.hidden
    for l in range(cfg.k_gru):
        lin = din if l == 0 else H * len(dirs)
        for d in dirs:
            p[f"gru{l}{d}_W"] = _uniform_init(rng, lin, (lin, 3 * H))
            p[f"gru{l}{d}_b"] = np.zeros(3 * H)
            p[f"gru{l}{d}_Uzr"] = _uniform_init(rng, H, (H, 2 * H))
            p[f"gru{l}{d}_Uh"] = _uniform_init(rng, H, (H, H))
    dout = H * len(dirs)
    p["out_W"] = _uniform_init(rng, dout, (dout, cfg.n_classes))
    p["out_b"] = np.zeros(cfg.n_classes)
    return p


@dataclass
class RnnModel:
    config: RnnConfig
    params: Dict[str, np.ndarray]
    loss_history: List[float] = field(default_factory=list)


def _flip(x: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Reverse each sequence within its true length; padding stays at the end,
    so recurrent state at real samples never traverses padding."""
    out = x.copy()
    for b, n in enumerate(lengths):
        out[b, :n] = x[b, :n][::-1]
    return out


class _GruLayerPass:
    """One direction of one GRU layer with cached activations for BPTT."""

    def __init__(self, params, prefix, reverse, lengths):
        self.p = params
        self.k = prefix
        self.reverse = reverse
        self.lengths = lengths

    def forward(self, x):
        if self.reverse:
            x = _flip(x, self.lengths)
        W, b = self.p[self.k + "_W"], self.p[self.k + "_b"]
        Uzr, Uh = self.p[self.k + "_Uzr"], self.p[self.k + "_Uh"]
        B, L, _ = x.shape
        H = Uh.shape[0]
        pre = x @ W + b
        z = np.empty((B, L, H)); r = np.empty((B, L, H))
        hc = np.empty((B, L, H)); h = np.empty((B, L, H))
        h_prev = np.zeros((B, H))
        hp = np.empty((B, L, H))
        for t in range(L):
            hp[:, t] = h_prev
            zr = h_prev @ Uzr
            z[:, t] = _sigmoid(pre[:, t, :H] + zr[:, :H])
            r[:, t] = _sigmoid(pre[:, t, H:2 * H] + zr[:, H:])
            hc[:, t] = np.tanh(pre[:, t, 2 * H:] + (r[:, t] * h_prev) @ Uh)
            h_prev = (1.0 - z[:, t]) * h_prev + z[:, t] * hc[:, t]
            h[:, t] = h_prev
        self.cache = (x, z, r, hc, h, hp)
        return _flip(h, self.lengths) if self.reverse else h

    def backward(self, dh_out, grads):
        x, z, r, hc, h, hp = self.cache
        if self.reverse:
            dh_out = _flip(dh_out, self.lengths)
        W = self.p[self.k + "_W"]
        Uzr, Uh = self.p[self.k + "_Uzr"], self.p[self.k + "_Uh"]
        B, L, H = z.shape
        dpre = np.empty((B, L, 3 * H))
        dUzr = np.zeros_like(Uzr)
        dUh = np.zeros_like(Uh)
        dh_next = np.zeros((B, H))
        for t in range(L - 1, -1, -1):
            dh = dh_out[:, t] + dh_next
            h_prev = hp[:, t]
            dz = dh * (hc[:, t] - h_prev)
            dhc = dh * z[:, t]
            dh_prev = dh * (1.0 - z[:, t])
            da_c = dhc * (1.0 - hc[:, t] ** 2)
            drh = da_c @ Uh.T
            dr = drh * h_prev
            dh_prev += drh * r[:, t]
            dUh += (r[:, t] * h_prev).T @ da_c
            da_z = dz * z[:, t] * (1.0 - z[:, t])
            da_r = dr * r[:, t] * (1.0 - r[:, t])
            da_zr = np.concatenate([da_z, da_r], axis=1)
            dh_prev += da_zr @ Uzr.T
            dUzr += h_prev.T @ da_zr
            dpre[:, t, :H] = da_z
            dpre[:, t, H:2 * H] = da_r
            dpre[:, t, 2 * H:] = da_c
            dh_next = dh_prev
        flat_x = x.reshape(-1, x.shape[-1])
        flat_dpre = dpre.reshape(-1, 3 * H)
        grads[self.k + "_W"] += flat_x.T @ flat_dpre
        grads[self.k + "_b"] += flat_dpre.sum(axis=0)
        grads[self.k + "_Uzr"] += dUzr
        grads[self.k + "_Uh"] += dUh
        dx = dpre @ W.T
        return _flip(dx, self.lengths) if self.reverse else dx


def rnn_forward(model: RnnModel, x: np.ndarray, lengths=None, _cache=None):
    """Class probabilities for a padded batch (B, L, 6).

    lengths gives each sequence's true length; positions beyond it are
    padding and must be ignored by the caller. Probability rows sum to one.
    """
    cfg = model.config
    p = model.params
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.shape[-1] != cfg.in_dim:
        raise ValueError(f"expected {cfg.in_dim} input channels, got {x.shape[-1]}")
    B, L, _ = x.shape
    lengths = np.full(B, L) if lengths is None else np.asarray(lengths)

    acts = [x]
    h = x
    for i in range(cfg.k_fc):
        pre = h @ p[f"fc{i}_W"] + p[f"fc{i}_b"]
        h = np.maximum(pre, 0.0)
        acts.append(h)
    dirs = ("f", "b") if cfg.bidirectional else ("f",)
    layers = []
    for l in range(cfg.k_gru):
        outs = []
        lps = []
        for d in dirs:
            lp = _GruLayerPass(p, f"gru{l}{d}", d == "b", lengths)
            outs.append(lp.forward(h))
            lps.append(lp)
        h = np.concatenate(outs, axis=2) if len(outs) > 1 else outs[0]
        layers.append(lps)
    logits = h @ p["out_W"] + p["out_b"]
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    probs = e / e.sum(axis=-1, keepdims=True)
    if _cache is not None:
        _cache.update(acts=acts, layers=layers, gru_out=h, probs=probs,
                      lengths=lengths)
    return probs


def rnn_backward(model: RnnModel, x, labels, weights=None, lengths=None):
    """Mean confidence-weighted cross-entropy loss and its gradients.

    labels: (B, L) in {0, 1, 2}, or -1 for masked positions. Padding beyond
    each sequence length is excluded automatically.
    """
    cfg = model.config
    p = model.params
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    labels = np.asarray(labels)
    if labels.ndim == 1:
        labels = labels[None]
    B, L, _ = x.shape
    lengths = np.full(B, L) if lengths is None else np.asarray(lengths)
    weights = np.ones((B, L)) if weights is None else np.asarray(weights, dtype=float)
    if weights.ndim == 1:
        weights = weights[None]

    mask = (labels >= 0) & (np.arange(L)[None, :] < lengths[:, None])
    w = np.where(mask, weights, 0.0)
    wsum = w.sum()
    if wsum <= 0:
        raise ValueError("no unmasked samples with positive weight")

    cache: dict = {}
    probs = rnn_forward(model, x, lengths, _cache=cache)
    safe_labels = np.where(mask, labels, 0)
    picked = np.take_along_axis(probs, safe_labels[..., None], axis=-1)[..., 0]
    loss = float(np.sum(w * -np.log(np.clip(picked, 1e-300, None))) / wsum)

    dlogits = probs.copy()
    onehot = np.zeros_like(probs)
    np.put_along_axis(onehot, safe_labels[..., None], 1.0, axis=-1)
    dlogits -= onehot
    dlogits *= (w / wsum)[..., None]

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    gru_out = cache["gru_out"]
    flat_out = gru_out.reshape(-1, gru_out.shape[-1])
    flat_dl = dlogits.reshape(-1, cfg.n_classes)
    grads["out_W"] += flat_out.T @ flat_dl
    grads["out_b"] += flat_dl.sum(axis=0)
    dh = dlogits @ p["out_W"].T

    H = cfg.hidden
    for l in range(cfg.k_gru - 1, -1, -1):
        lps = cache["layers"][l]
        if len(lps) == 2:
            dx = lps[0].backward(dh[..., :H], grads)
            dx += lps[1].backward(dh[..., H:], grads)
        else:
            dx = lps[0].backward(dh, grads)
        dh = dx

    acts = cache["acts"]
    for i in range(cfg.k_fc - 1, -1, -1):
        post = acts[i + 1]
        dpre = dh * (post > 0)
        flat_in = acts[i].reshape(-1, acts[i].shape[-1])
        flat_dpre = dpre.reshape(-1, dpre.shape[-1])
        grads[f"fc{i}_W"] += flat_in.T @ flat_dpre
        grads[f"fc{i}_b"] += flat_dpre.sum(axis=0)
        dh = dpre @ p[f"fc{i}_W"].T
    return loss, grads


def pad_batch(sequences: Sequence[np.ndarray], label_seqs: Sequence[np.ndarray],
              weight_seqs: Optional[Sequence[np.ndarray]] = None):
    """Stack variable-length sequences, zero-padded to the longest one."""
    B = len(sequences)
    L = max(len(s) for s in sequences)
    d = sequences[0].shape[1]
    x = np.zeros((B, L, d))
    y = np.full((B, L), -1, dtype=np.int64)
    w = np.zeros((B, L))
    lengths = np.zeros(B, dtype=np.int64)
    for i, seq in enumerate(sequences):
        n = len(seq)
        x[i, :n] = seq
        y[i, :n] = label_seqs[i]
        w[i, :n] = weight_seqs[i] if weight_seqs is not None else 1.0
        lengths[i] = n
    return x, y, w, lengths


def train_rnn(sequences, label_seqs, weight_seqs=None,
              cfg: RnnConfig = RnnConfig(), epochs: Optional[int] = None,
              verbose: bool = False) -> RnnModel:
    """Full-batch Adam training with per-epoch linear learning-rate decay
    from lr0 down to lr0 * lr_end_factor."""
    if len(sequences) == 0:
        raise ValueError("need at least one labelled sequence")
    x, y, w, lengths = pad_batch(sequences, label_seqs, weight_seqs)
    cfg = cfg if epochs is None else RnnConfig(**{**asdict(cfg), "epochs": epochs})
    model = RnnModel(cfg, init_params(cfg))
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(p) for k, p in model.params.items()}
    b1, b2, eps = 0.9, 0.999, 1e-8
    n_epochs = cfg.epochs
    for epoch in range(n_epochs):
        frac = epoch / max(1, n_epochs - 1)
        lr = cfg.lr0 * (1.0 - frac * (1.0 - cfg.lr_end_factor))
        loss, grads = rnn_backward(model, x, y, w, lengths)
        if not np.isfinite(loss):
            raise RuntimeError(f"training diverged (non-finite loss) at epoch {epoch}")
        model.loss_history.append(loss)
        t = epoch + 1
        for k, p_arr in model.params.items():
            g = grads[k]
            m[k] = b1 * m[k] + (1 - b1) * g
            v[k] = b2 * v[k] + (1 - b2) * g * g
            mhat = m[k] / (1 - b1 ** t)
            vhat = v[k] / (1 - b2 ** t)
            p_arr -= lr * mhat / (np.sqrt(vhat) + eps)
        if verbose and epoch % 25 == 0:
            print(f"epoch {epoch}: loss {loss:.4f}")
    return model


def classify_rnn(model: RnnModel, trace, none_id: int = 0,
                 class_offset: int = 1) -> np.ndarray:
    """Per-sample collapsed labels from a velocity trace; masked samples
    pass through as the none class. Network class c maps to label
    c + class_offset (the none class holds id 0)."""
    x = trace.channels()[None]
    probs = rnn_forward(model, x)[0]
    labels = np.argmax(probs, axis=-1) + class_offset
    labels = labels.astype(np.int64)
    labels[~trace.valid] = none_id
    return labels


def save_rnn(model: RnnModel, path):
    path = Path(path)
    header = {"format": "gazekit-rnn", "version": _FORMAT_VERSION,
              "config": asdict(model.config)}
    arrays = {k: v for k, v in model.params.items()}
    arrays["header"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
    np.savez_compressed(path, **arrays)


def load_rnn(path) -> RnnModel:
    data = np.load(Path(path), allow_pickle=False)
    header = json.loads(bytes(data["header"]).decode())
    if header.get("format") != "gazekit-rnn":
        raise ValueError("not an RNN model file")
    if header["version"] > _FORMAT_VERSION:
        raise ValueError(f"unsupported model version {header['version']}")
    cfg = RnnConfig(**header["config"])
    params = {k: data[k] for k in data.files if k != "header"}
    return RnnModel(cfg, params)
