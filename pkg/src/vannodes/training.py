"""Optimizers, softmax cross-entropy, and the instrumented training loop.

Every run owns an Rng stream derived from (master_seed, run_index), so runs
are bit-reproducible and may execute concurrently.  After each epoch the loop
records loss/accuracy, the node-correlation indicator on a fixed probe, the
per-layer gain sigma_w^2 mu_1, and the log-norm of the input gradient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from .analysis import vni_empirical
from .data import Dataset
from .initializers import InitializerSpec
from .linalg import Rng
from .network import NetworkSpec, NetworkState, backward, build_network, forward

__all__ = [
    "OptimizerKind",
    "OptimizerSpec",
    "Optimizer",
    "SuccessCriterion",
    "TrainRecord",
    "TrainResult",
    "softmax_cross_entropy",
    "train",
    "quartile_dynamics",
    "evaluate",
    "RECORD_CSV_COLUMNS",
]


class OptimizerKind(enum.Enum):
    SGD = "sgd"
    SGD_MOMENTUM = "sgd_momentum"
    ADAM = "adam"
    RMSPROP = "rmsprop"


@dataclass
class OptimizerSpec:
    kind: OptimizerKind = OptimizerKind.SGD
    learning_rate: float = 0.01
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("momentum", "adam_beta1", "adam_beta2", "rmsprop_decay"):
            v = getattr(self, name)
            if not (0 <= v < 1):
                raise ValueError(f"{name} must be in [0, 1)")


class Optimizer:
    """Updates a flat list of parameter arrays in place.  Householder layers
    expose their reflection-vector arrays as leaves, so the materialized
    weights stay exactly orthogonal."""

    def __init__(self, spec: OptimizerSpec):
        self.spec = spec
        self.t = 0
        self._m: list = []
        self._v: list = []

    def step(self, leaves: list):
        """``leaves`` is a list of (param, grad) array pairs of equal shape."""
        s = self.spec
        if not self._m:
            self._m = [np.zeros_like(p) for p, _ in leaves]
            self._v = [np.zeros_like(p) for p, _ in leaves]
        if len(leaves) != len(self._m):
            raise ValueError("leaf count changed between optimizer steps")
        self.t += 1
        for i, (p, g) in enumerate(leaves):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            if s.kind is OptimizerKind.SGD:
                p -= s.learning_rate * g
            elif s.kind is OptimizerKind.SGD_MOMENTUM:
                self._m[i] = s.momentum * self._m[i] + g
                p -= s.learning_rate * self._m[i]
            elif s.kind is OptimizerKind.ADAM:
                self._m[i] = s.adam_beta1 * self._m[i] + (1 - s.adam_beta1) * g
                self._v[i] = s.adam_beta2 * self._v[i] + (1 - s.adam_beta2) * g * g
                m_hat = self._m[i] / (1 - s.adam_beta1**self.t)
                v_hat = self._v[i] / (1 - s.adam_beta2**self.t)
                p -= s.learning_rate * m_hat / (np.sqrt(v_hat) + s.adam_eps)
            elif s.kind is OptimizerKind.RMSPROP:
                self._v[i] = s.rmsprop_decay * self._v[i] + (1 - s.rmsprop_decay) * g * g
                p -= s.learning_rate * g / (np.sqrt(self._v[i]) + s.rmsprop_eps)
            else:
                raise ValueError(f"unknown optimizer {s.kind!r}")


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its logits gradient (softmax - onehot)/batch."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},)")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels outside [0, {c})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float((log_z - shifted[np.arange(n), labels]).mean())
    probs = np.exp(shifted - log_z[:, None])
    probs[np.arange(n), labels] -= 1.0
    return loss, probs / n


@dataclass
class SuccessCriterion:
    metric: str = "test_accuracy"  # or "train_accuracy"
    threshold: float = 0.99
    max_epochs: int = 100

    def __post_init__(self):
        if not (0 < self.threshold <= 1):
            raise ValueError("threshold must be in (0, 1]")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.metric not in ("train_accuracy", "test_accuracy"):
            raise ValueError(f"unknown success metric {self.metric!r}")


@dataclass
class TrainRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float
    vni: float
    per_layer_gain: np.ndarray = field(repr=False)
    input_grad_log_norm: float = math.nan


RECORD_CSV_COLUMNS = (
    "epoch,loss,train_acc,test_acc,vni,gain_min,gain_median,gain_max,input_grad_log_norm"
)


def record_csv_row(r: TrainRecord) -> str:
    g = r.per_layer_gain
    return (
        f"{r.epoch},{r.train_loss:.10g},{r.train_accuracy:.6f},{r.test_accuracy:.6f},"
        f"{r.vni:.10g},{g.min():.10g},{np.median(g):.10g},{g.max():.10g},"
        f"{r.input_grad_log_norm:.10g}"
    )


@dataclass
class TrainResult:
    records: list
    success: bool
    reason: str  # "converged", "max_epochs", "diverged", "no_epochs"
    converged_epoch: int | None = None
    final_state: NetworkState | None = None


def _param_leaves(state: NetworkState, grads) -> list:
    leaves = []
    for l in range(state.spec.depth_L):
        if state.stacks is not None and state.stacks[l] is not None:
            leaves.append((state.stacks[l].vectors, grads.stacks[l]))
        else:
            leaves.append((state.weights[l], grads.weights[l]))
        leaves.append((state.biases[l], grads.biases[l]))
    if state.spec.num_classes > 0:
        leaves.append((state.readout_weight, grads.readout_weight))
        leaves.append((state.readout_bias, grads.readout_bias))
    return leaves


def evaluate(state: NetworkState, dataset: Dataset, batch_size: int = 1000):
    """(mean loss, accuracy) over a labeled dataset."""
    losses, correct = [], 0
    for start in range(0, dataset.num_samples, batch_size):
        x = dataset.inputs[start : start + batch_size]
        y = dataset.labels[start : start + batch_size]
        logits = forward(state, x).logits
        loss, _ = softmax_cross_entropy(logits, y)
        losses.append(loss * x.shape[0])
        correct += int((logits.argmax(axis=1) == y).sum())
    return sum(losses) / dataset.num_samples, correct / dataset.num_samples


def _epoch_stats(
    state: NetworkState,
    epoch: int,
    probe: np.ndarray,
    eval_batch_x: np.ndarray,
    eval_batch_y: np.ndarray,
    test_set: Dataset | None,
    train_loss: float,
    train_acc: float,
    mu1: float,
) -> TrainRecord:
    from .analysis import _headless  # backbone-only statistics

    headless = _headless(state)
    acts = forward(headless, probe).post[-1]
    vni, _, _ = vni_empirical(acts)
    gains = np.array(
        [state.spec.fan_in(l) * float(w.var()) * mu1 for l, w in enumerate(state.weights)]
    )
    trace = forward(state, eval_batch_x)
    _, grad = softmax_cross_entropy(trace.logits, eval_batch_y)
    g_in = backward(state, trace, grad).input_gradient
    sq_norm = float(np.sum(g_in * g_in) / g_in.shape[0])
    test_acc = math.nan
    if test_set is not None:
        _, test_acc = evaluate(state, test_set)
    return TrainRecord(
        epoch=epoch,
        train_loss=train_loss,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        vni=vni,
        per_layer_gain=gains,
        input_grad_log_norm=math.log10(sq_norm) if sq_norm > 0 else -math.inf,
    )


def train(
    spec: NetworkSpec,
    init: InitializerSpec,
    optimizer_spec: OptimizerSpec,
    train_set: Dataset,
    criterion: SuccessCriterion,
    rng: Rng,
    test_set: Dataset | None = None,
    batch_size: int = 100,
    probe: np.ndarray | None = None,
    mu1: float = 1.0,
    early_stop: bool = False,
    epochs: int | None = None,
) -> TrainResult:
    """Instrumented training of one run.

    ``probe`` defaults to the task inputs; a record is emitted at epoch 0
    (before any update) and after every epoch.  With ``early_stop`` the run
    ends at the first epoch meeting the criterion; otherwise it continues to
    ``epochs`` (default: criterion.max_epochs) and the success flag reflects
    whether the criterion was met at any epoch <= max_epochs.
    """
    if spec.num_classes != train_set.num_classes:
        raise ValueError("network num_classes does not match dataset")
    max_epochs = criterion.max_epochs if epochs is None else epochs
    if max_epochs == 0:
        return TrainResult([], False, "no_epochs")
    state = build_network(spec, init, rng.spawn(0))
    opt = Optimizer(optimizer_spec)
    data_rng = rng.spawn(1)
    if probe is None:
        probe = train_set.inputs[: min(1000, train_set.num_samples)]
    eval_n = min(1000, train_set.num_samples)
    eval_x, eval_y = train_set.inputs[:eval_n], train_set.labels[:eval_n]

    def metric_of(rec: TrainRecord) -> float:
        return rec.train_accuracy if criterion.metric == "train_accuracy" else rec.test_accuracy

    loss0, acc0 = evaluate(state, train_set)
    records = [_epoch_stats(state, 0, probe, eval_x, eval_y, test_set, loss0, acc0, mu1)]
    success = False
    converged_epoch = None
    reason = "max_epochs"
    for epoch in range(1, max_epochs + 1):
        order = data_rng.permutation(train_set.num_samples)
        epoch_loss = 0.0
        epoch_correct = 0
        diverged = False
        for start in range(0, train_set.num_samples, batch_size):
            idx = order[start : start + batch_size]
            x, y = train_set.inputs[idx], train_set.labels[idx]
            trace = forward(state, x)
            loss, grad = softmax_cross_entropy(trace.logits, y)
            if not math.isfinite(loss):
                diverged = True
                break
            epoch_loss += loss * x.shape[0]
            epoch_correct += int((trace.logits.argmax(axis=1) == y).sum())
            grads = backward(state, trace, grad)
            opt.step(_param_leaves(state, grads))
            state.rematerialize()
        if diverged or not all(np.all(np.isfinite(w)) for w in state.weights):
            reason = "diverged"
            break
        rec = _epoch_stats(
            state,
            epoch,
            probe,
            eval_x,
            eval_y,
            test_set,
            epoch_loss / train_set.num_samples,
            epoch_correct / train_set.num_samples,
            mu1,
        )
        records.append(rec)
        if not success and epoch <= criterion.max_epochs and metric_of(rec) > criterion.threshold:
            success = True
            converged_epoch = epoch
            reason = "converged"
            if early_stop:
                break
    return TrainResult(records, success, reason, converged_epoch, state)


def quartile_dynamics(runs: list):
    """Per-epoch (q1, median, q3) of the indicator across aligned runs.

    ``runs`` is a list of TrainRecord lists; epochs must agree across runs.
    Returns (epochs, q1, median, q3) arrays using the linear-interpolation
    quantile definition.
    """
    if len(runs) < 2:
        raise ValueError("need at least 2 runs")
    epochs = [r.epoch for r in runs[0]]
    for run in runs[1:]:
        if [r.epoch for r in run] != epochs:
            raise ValueError("runs have misaligned epochs")
    vni = np.array([[r.vni for r in run] for run in runs])
    q1, med, q3 = np.percentile(vni, [25, 50, 75], axis=0, method="linear")
    return np.array(epochs), q1, med, q3
