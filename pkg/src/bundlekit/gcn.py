"""Bipartite product/customer graph network for purchase prediction.

The network consumes the complete bipartite graph between products and
customer segments (node features: unit cost and mean utility on the product
side, proportion and serving cost on the customer side; scalar edge
attribute: the segment's utility for the product).  Two bi-directional
message-passing layers aggregate relu messages with per-feature softmax
weights, merge the directions with a product/customer mask, and a bilinear
form plus a small edge correction network scores every (product, segment)
edge.  A sigmoid over the scores yields the probability that a segment's
optimal bundle contains a product.

Training minimizes mean binary cross-entropy between edge scores and
optimal-bundle membership labels computed by the exact solver on small
instances.  Everything is deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ParseError
from .formulations import PricingSolution
from .instance import Instance

__all__ = [
    "GraphData",
    "GcnParams",
    "ProbMatrix",
    "TrainConfig",
    "LabeledExample",
    "build_graph",
    "forward",
    "predict_probs",
    "loss_and_grad",
    "train",
    "make_labels",
    "serialize_params",
    "parse_params",
]

MODEL_HEADER = "bundlekit gcn-model v1"


@dataclass(frozen=True)
class GraphData:
    """Complete bipartite graph of one instance.

    ``x`` stacks product rows then customer rows, shape (n+m, 4):
    product j -> [unit cost, mean utility over segments, 0, 0];
    customer k -> [0, 0, proportion, serving cost].
    ``edge_attr[j, k]`` is segment k's utility for product j; forward edges
    run product->customer, backward edges reuse the same attribute.
    """

    n: int
    m: int
    x: np.ndarray
    edge_attr: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.n + self.m

    @property
    def n_edges(self) -> int:
        return self.n * self.m

    def product_mask(self) -> np.ndarray:
        """Diagonal (n+m, n+m) matrix marking product rows."""
        d = np.zeros(self.n + self.m)
        d[: self.n] = 1.0
        return np.diag(d)


def build_graph(inst: Instance) -> GraphData:
    x = np.zeros((inst.n + inst.m, 4))
    x[: inst.n, 0] = inst.c_unit
    x[: inst.n, 1] = inst.u.mean(axis=0)
    x[inst.n:, 2] = inst.alpha
    x[inst.n:, 3] = inst.c_serve
    return GraphData(n=inst.n, m=inst.m, x=x, edge_attr=inst.u.T.copy())


@dataclass
class GcnParams:
    """All learnable arrays, keyed by name; shapes derive from d_hidden."""

    d_hidden: int
    eps: float
    weights: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(cls, d_hidden: int = 128, seed: int = 0,
             eps: float = 1e-7) -> "GcnParams":
        rng = np.random.default_rng(seed)
        w: dict[str, np.ndarray] = {}

        def uniform(name, shape, fan_in):
            bound = 1.0 / math.sqrt(fan_in)
            w[name] = rng.uniform(-bound, bound, size=shape)

        for layer, f_in in ((1, 4), (2, d_hidden)):
            for d in ("fw", "bw"):
                uniform(f"l{layer}_{d}_w1", (f_in, d_hidden), f_in)
                uniform(f"l{layer}_{d}_b1", (d_hidden,), f_in)
                uniform(f"l{layer}_{d}_w2", (d_hidden, d_hidden), d_hidden)
                uniform(f"l{layer}_{d}_b2", (d_hidden,), d_hidden)
        uniform("bilinear_u", (d_hidden, d_hidden), d_hidden)
        uniform("edge_w1", (1, d_hidden), 1)
        uniform("edge_b1", (d_hidden,), 1)
        uniform("edge_w2", (d_hidden, 1), d_hidden)
        uniform("edge_b2", (1,), d_hidden)
        return cls(d_hidden=d_hidden, eps=eps, weights=w)

    def copy(self) -> "GcnParams":
        return GcnParams(self.d_hidden, self.eps,
                         {k: v.copy() for k, v in self.weights.items()})

    def validate(self) -> None:
        ref = GcnParams.init(self.d_hidden, seed=0, eps=self.eps)
        if set(ref.weights) != set(self.weights):
            raise ValueError("parameter names do not match the architecture")
        for name, arr in self.weights.items():
            if arr.shape != ref.weights[name].shape:
                raise ValueError(f"{name}: expected shape {ref.weights[name].shape}, "
                                 f"got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class ProbMatrix:
    """Predicted membership probabilities, shape (m, n), entries in (0, 1)."""

    probs: np.ndarray

    def __post_init__(self):
        p = self.probs
        if p.ndim != 2 or not np.all(np.isfinite(p)):
            raise ValueError("probability matrix must be a finite 2-D array")
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValueError("probabilities must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 500
    batch_size: int = 512      # edges per gradient step
    dropout: float = 0.5
    patience: int = 50         # epochs without validation improvement
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    seed: int = 0
    val_fraction: float = 0.2

    def __post_init__(self):
        if self.learning_rate < 0 or not (0 <= self.dropout < 1):
            raise ValueError("invalid rate")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size and patience must be >= 1")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


@dataclass(frozen=True)
class LabeledExample:
    graph: GraphData
    target: np.ndarray  # (m, n) 0/1; entry [k-1, j-1] = product j in segment k's bundle

    def __post_init__(self):
        if self.target.shape != (self.graph.m, self.graph.n):
            raise ValueError("target shape must match the graph")


def make_labels(inst: Instance, sol: PricingSolution) -> LabeledExample:
    """Membership labels from an exactly solved instance."""
    if len(sol.assignment) != inst.m:
        raise ValueError("solution does not cover every segment")
    t = np.zeros((inst.m, inst.n))
    for k in range(1, inst.m + 1):
        bundle = sol.assigned_bundle(k)
        for j in bundle.members():
            if j > inst.n:
                raise ValueError("solution references a product beyond n")
            t[k - 1, j - 1] = 1.0
    return LabeledExample(graph=build_graph(inst), target=t)


# ---------------------------------------------------------------------------
# Forward pass.
# ---------------------------------------------------------------------------

def _mlp(w: dict[str, Tensor], prefix: str, h: Tensor) -> Tensor:
    h = ad.relu(h @ w[f"{prefix}_w1"] + w[f"{prefix}_b1"])
    return h @ w[f"{prefix}_w2"] + w[f"{prefix}_b2"]


def _bilayer(w, layer, X, Z, n, m, eps, mode, rng, dropout, debug):
    g = Z.shape[0]
    f_in = X.shape[-1]
    Xp = X[:, :n, :]
    Xs = X[:, n:, :]
    Zt = Tensor(Z.reshape(g, n, m, 1))

    # product -> customer messages, softmax-weighted per feature dimension
    phi_p = ad.relu(Xp.reshape(g, n, 1, f_in) + Zt) + eps
    w_fw = ad.softmax_over_axis(phi_p, axis=1)
    if debug:
        np.testing.assert_allclose(w_fw.data.sum(axis=1), 1.0, atol=1e-9)
    agg_cust = (w_fw * phi_p).sum(axis=1)  # (g, m, f)
    h_fw = ad.concat([Xp, Xs + agg_cust], axis=1)
    x_fw = _mlp(w, f"l{layer}_fw", h_fw)

    # customer -> product messages (reversed edges reuse the same attribute)
    phi_s = ad.relu(Xs.reshape(g, 1, m, f_in) + Zt) + eps
    w_bw = ad.softmax_over_axis(phi_s, axis=2)
    if debug:
        np.testing.assert_allclose(w_bw.data.sum(axis=2), 1.0, atol=1e-9)
    agg_prod = (w_bw * phi_s).sum(axis=2)  # (g, n, f)
    h_bw = ad.concat([Xp + agg_prod, Xs], axis=1)
    x_bw = _mlp(w, f"l{layer}_bw", h_bw)

    mask = np.zeros(n + m)
    mask[:n] = 1.0
    m_mat = Tensor(np.diag(mask))
    i_mat = Tensor(np.diag(1.0 - mask))
    fused = i_mat @ x_fw + m_mat @ x_bw
    out = ad.relu(fused)
    if mode == "train" and dropout > 0.0:
        keep = rng.random(out.shape) >= dropout
        out = out * Tensor(keep / (1.0 - dropout))
    return out


def _forward_batched(params: GcnParams, X: np.ndarray, Z: np.ndarray,
                     n: int, m: int, mode: str, rng,
                     dropout: float, debug: bool = False):
    """Edge logits (G, n, m) plus the parameter tensors used to compute them."""
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode needs an rng for dropout")
    w = {name: Tensor(arr, requires_grad=True)
         for name, arr in params.weights.items()}
    g = Z.shape[0]
    h = Tensor(X)
    for layer in (1, 2):
        h = _bilayer(w, layer, h, Z, n, m, params.eps, mode, rng, dropout, debug)
    y_p = h[:, :n, :]
    y_s = h[:, n:, :]
    e_bil = (y_p @ w["bilinear_u"]) @ y_s.transpose(0, 2, 1)
    z_col = Tensor(Z.reshape(g, n * m, 1))
    corr = ad.relu(z_col @ w["edge_w1"] + w["edge_b1"]) @ w["edge_w2"] + w["edge_b2"]
    logits = e_bil + corr.reshape(g, n, m)
    return logits, w


def forward(params: GcnParams, graph: GraphData, mode: str = "eval",
            rng=None, dropout: float = 0.5, debug: bool = False) -> np.ndarray:
    """Edge logits of one graph, shape (n, m); eval mode is deterministic."""
    logits, _ = _forward_batched(
        params, graph.x[None, :, :], graph.edge_attr[None, :, :],
        graph.n, graph.m, mode, rng, dropout, debug)
    return logits.data[0]


def predict_probs(params: GcnParams, graph: GraphData) -> ProbMatrix:
    logits = forward(params, graph, mode="eval")
    p = 1.0 / (1.0 + np.exp(-logits.T))
    # float64 sigmoid saturates for |logit| > ~37; nudge inside the open interval
    tiny = 1e-12
    return ProbMatrix(np.clip(p, tiny, 1.0 - tiny))


# ---------------------------------------------------------------------------
# Loss and training.
# ---------------------------------------------------------------------------

def _bce_elements(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Element-wise binary cross-entropy from logits, numerically stable."""
    t = Tensor(targets)
    absl = ad.relu(logits) + ad.relu(-logits)
    return ad.relu(logits) - logits * t + ad.log(Tensor(1.0) + ad.exp(-absl))


def _group_by_shape(batch: list[LabeledExample]):
    buckets: dict[tuple[int, int], list[int]] = {}
    for i, ex in enumerate(batch):
        buckets.setdefault((ex.graph.n, ex.graph.m), []).append(i)
    return buckets


def loss_and_grad(params: GcnParams, batch: list[LabeledExample],
                  mode: str = "train", rng=None, dropout: float = 0.5,
                  edge_subset: dict[int, np.ndarray] | None = None):
    """Mean edge BCE over the batch and the gradient of every parameter.

    ``edge_subset`` optionally restricts the mean to chosen flat edge indices
    per example (used by mini-batch training); the dropout draw is shared
    between the value and the gradient by construction.
    """
    if not batch:
        raise ValueError("batch must not be empty")
    total = None
    count = 0
    grads = {name: np.zeros_like(arr) for name, arr in params.weights.items()}
    for (n, m), idxs in _group_by_shape(batch).items():
        X = np.stack([batch[i].graph.x for i in idxs])
        Z = np.stack([batch[i].graph.edge_attr for i in idxs])
        T = np.stack([batch[i].target.T for i in idxs])  # (g, n, m)
        logits, w = _forward_batched(params, X, Z, n, m, mode, rng, dropout)
        bce = _bce_elements(logits, T)
        if edge_subset is None:
            part = bce.sum()
            count += bce.data.size
        else:
            flat = []
            for pos, i in enumerate(idxs):
                sel = edge_subset.get(i)
                if sel is not None and len(sel):
                    flat.append(pos * n * m + np.asarray(sel, dtype=np.int64))
            if not flat:
                continue
            sel_all = np.concatenate(flat)
            part = bce.take_flat(sel_all).sum()
            count += sel_all.size
        total = part if total is None else total + part
        # Backprop this bucket immediately so tapes stay small.
        part.backward()
        for name in grads:
            if w[name].grad is not None:
                grads[name] += w[name].grad
    if total is None or count == 0:
        raise ValueError("no edges selected")
    loss = float(total.data) / count
    for name in grads:
        grads[name] /= count
    return loss, grads


def _eval_loss(params: GcnParams, batch: list[LabeledExample]) -> float:
    total = 0.0
    count = 0
    for (n, m), idxs in _group_by_shape(batch).items():
        X = np.stack([batch[i].graph.x for i in idxs])
        Z = np.stack([batch[i].graph.edge_attr for i in idxs])
        T = np.stack([batch[i].target.T for i in idxs])
        logits, _ = _forward_batched(params, X, Z, n, m, "eval", None, 0.0)
        total += float(_bce_elements(logits, T).sum().data)
        count += T.size
    return total / count


def train(dataset: list[LabeledExample], cfg: TrainConfig) -> GcnParams:
    """Adam training with early stopping; returns the best-validation weights."""
    if not dataset:
        raise ValueError("dataset must not be empty")
    rng = np.random.default_rng(cfg.seed)
    params = GcnParams.init(d_hidden=128, seed=cfg.seed)

    order = rng.permutation(len(dataset))
    n_val = int(round(cfg.val_fraction * len(dataset)))
    if len(dataset) > 1:
        n_val = min(max(n_val, 1), len(dataset) - 1)
    else:
        n_val = 0
    val = [dataset[i] for i in order[:n_val]] or list(dataset)
    tr = [dataset[i] for i in order[n_val:]] or list(dataset)

    edge_index = [(i, e) for i, ex in enumerate(tr)
                  for e in range(ex.graph.n_edges)]
    adam_m = {k: np.zeros_like(v) for k, v in params.weights.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.weights.items()}
    step = 0

    best_loss = _eval_loss(params, val)
    best_params = params.copy()
    stale = 0
    history = [best_loss]

    for _epoch in range(cfg.epochs):
        perm = rng.permutation(len(edge_index))
        for lo in range(0, len(perm), cfg.batch_size):
            chunk = [edge_index[i] for i in perm[lo: lo + cfg.batch_size]]
            subset: dict[int, list[int]] = {}
            for i, e in chunk:
                subset.setdefault(i, []).append(e)
            subset_arr = {i: np.array(v, dtype=np.int64) for i, v in subset.items()}
            sub_batch_idx = sorted(subset_arr)
            sub_batch = [tr[i] for i in sub_batch_idx]
            remap = {local: subset_arr[i]
                     for local, i in enumerate(sub_batch_idx)}
            _, grads = loss_and_grad(params, sub_batch, "train", rng,
                                     cfg.dropout, edge_subset=remap)
            step += 1
            b1, b2 = cfg.adam_beta1, cfg.adam_beta2
            for name, g in grads.items():
                adam_m[name] = b1 * adam_m[name] + (1 - b1) * g
                adam_v[name] = b2 * adam_v[name] + (1 - b2) * g * g
                m_hat = adam_m[name] / (1 - b1 ** step)
                v_hat = adam_v[name] / (1 - b2 ** step)
                params.weights[name] -= cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + 1e-8)
        val_loss = _eval_loss(params, val)
        history.append(val_loss)
        if val_loss < best_loss - 1e-12:
            best_loss = val_loss
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    best_params.meta.update(val_history=history, best_val_loss=best_loss)
    return best_params


# ---------------------------------------------------------------------------
# Model file format.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize_params(params: GcnParams) -> str:
    params.validate()
    lines = [MODEL_HEADER,
             f"d_hidden {params.d_hidden}",
             f"eps {_fmt(params.eps)}"]
    for name in sorted(params.weights):
        arr = params.weights[name]
        lines.append(f"param {name} " + " ".join(str(d) for d in arr.shape))
        mat = arr.reshape(arr.shape[0], -1) if arr.ndim > 1 else arr.reshape(1, -1)
        for row in mat:
            lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> GcnParams:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise ParseError(f"missing header {MODEL_HEADER!r}", 1)
    try:
        d_hidden = int(lines[1].split()[1])
        eps = float(lines[2].split()[1])
    except (IndexError, ValueError):
        raise ParseError("malformed d_hidden/eps header", 2) from None
    weights: dict[str, np.ndarray] = {}
    i = 3
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        parts = line.split()
        if parts[0] != "param" or len(parts) < 3:
            raise ParseError("expected a 'param NAME dims...' line", i + 1)
        name = parts[1]
        shape = tuple(int(d) for d in parts[2:])
        n_lines = shape[0] if len(shape) > 1 else 1
        rows = []
        for r in range(n_lines):
            try:
                rows.append([float(v) for v in lines[i + 1 + r].split()])
            except (IndexError, ValueError):
                raise ParseError(f"bad data row for {name}", i + 2 + r) from None
        arr = np.array(rows).reshape(shape)
        weights[name] = arr
        i += 1 + n_lines
    params = GcnParams(d_hidden=d_hidden, eps=eps, weights=weights)
    params.validate()
    return params
