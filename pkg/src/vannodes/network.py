"""Feed-forward backbone: forward pass, back-propagation, input-output
Jacobian, and a binary checkpoint format.

The backbone is L layers of width N (layer 1 may be rectangular when
input_dim != N); an optional linear readout maps to num_classes.  Node
statistics (VNI etc.) are always taken at backbone layer L, before the
readout.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from . import activations as act
from .activations import ActivationKind
from .initializers import (
    HouseholderStack,
    InitializerSpec,
    InitKind,
    householder_backward,
    householder_materialize,
    init_scaled,
    init_weight,
)
from .linalg import Rng

__all__ = [
    "NetworkSpec",
    "NetworkState",
    "ForwardTrace",
    "Gradients",
    "Parametrization",
    "build_network",
    "forward",
    "backward",
    "jacobian",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_MAGIC = b"VNLB"
CHECKPOINT_VERSION = 1


class Parametrization(enum.Enum):
    DENSE = "dense"
    HOUSEHOLDER = "householder"


@dataclass(frozen=True)
class NetworkSpec:
    depth_L: int
    width_N: int
    input_dim: int
    num_classes: int = 0  # 0 = no readout head
    activation: ActivationKind = ActivationKind.TANH

    def __post_init__(self):
        if self.depth_L < 1 or self.width_N < 1 or self.input_dim < 1:
            raise ValueError("depth_L, width_N and input_dim must be >= 1")
        if self.num_classes < 0:
            raise ValueError("num_classes must be >= 0")

    def fan_in(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.width_N


@dataclass
class NetworkState:
    spec: NetworkSpec
    weights: list  # L materialized matrices (layer l: width_N x fan_in)
    biases: list  # L vectors of length width_N, zero at init
    parametrization: Parametrization = Parametrization.DENSE
    stacks: list | None = None  # per layer: HouseholderStack or None
    readout_weight: np.ndarray | None = None  # num_classes x width_N
    readout_bias: np.ndarray | None = None

    def rematerialize(self):
        """Refresh materialized weights from Householder stacks after an
        update to the reflection vectors."""
        if self.stacks is None:
            return
        for l, stack in enumerate(self.stacks):
            if stack is not None:
                self.weights[l] = householder_materialize(stack)


@dataclass
class ForwardTrace:
    inputs: np.ndarray  # batch x input_dim (x_0)
    pre: list = field(default_factory=list)  # h_1..h_L, each batch x width_N
    post: list = field(default_factory=list)  # x_1..x_L
    logits: np.ndarray | None = None


@dataclass
class Gradients:
    weights: list  # dLoss/dW_l for the materialized matrices
    biases: list
    stacks: list | None  # per layer: reflection-vector gradients or None
    readout_weight: np.ndarray | None
    readout_bias: np.ndarray | None
    input_gradient: np.ndarray  # dLoss/dx_0, batch x input_dim


def build_network(spec: NetworkSpec, init: InitializerSpec, rng: Rng) -> NetworkState:
    """Initialize all layers from an InitializerSpec; biases start at zero.

    For the Householder initializer, square backbone layers are stored as
    reflection stacks and stay exactly orthogonal under training updates.
    """
    weights, stacks = [], []
    any_stack = False
    for l in range(spec.depth_L):
        w = init_weight(init, spec.fan_in(l), spec.width_N, rng.spawn(l))
        if isinstance(w, HouseholderStack):
            stacks.append(w)
            weights.append(householder_materialize(w))
            any_stack = True
        else:
            stacks.append(None)
            weights.append(w)
    biases = [np.zeros(spec.width_N) for _ in range(spec.depth_L)]
    readout_w = readout_b = None
    if spec.num_classes > 0:
        readout_w = init_scaled(
            InitKind.SCALED_GAUSSIAN, spec.width_N, spec.num_classes, 1.0, rng.spawn(spec.depth_L)
        )
        readout_b = np.zeros(spec.num_classes)
    return NetworkState(
        spec=spec,
        weights=weights,
        biases=biases,
        parametrization=Parametrization.HOUSEHOLDER if any_stack else Parametrization.DENSE,
        stacks=stacks if any_stack else None,
        readout_weight=readout_w,
        readout_bias=readout_b,
    )


def forward(state: NetworkState, batch: np.ndarray) -> ForwardTrace:
    spec = state.spec
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ValueError(f"batch must be (n, {spec.input_dim}), got {x.shape}")
    trace = ForwardTrace(inputs=x)
    for w, b in zip(state.weights, state.biases):
        h = x @ w.T + b
        x = act.apply(spec.activation, h)
        trace.pre.append(h)
        trace.post.append(x)
    if spec.num_classes > 0:
        trace.logits = x @ state.readout_weight.T + state.readout_bias
    return trace


def backward(state: NetworkState, trace: ForwardTrace, loss_grad_at_output: np.ndarray) -> Gradients:
    """Back-propagate a loss gradient (w.r.t. logits if a readout exists,
    otherwise w.r.t. x_L) to all parameters and to the input."""
    spec = state.spec
    g = np.asarray(loss_grad_at_output, dtype=np.float64)
    batch = trace.inputs.shape[0]
    if len(trace.pre) != spec.depth_L or trace.pre[0].shape[0] != batch:
        raise ValueError("trace does not match network state")
    readout_gw = readout_gb = None
    if spec.num_classes > 0:
        if g.shape != (batch, spec.num_classes):
            raise ValueError(f"loss gradient must be {(batch, spec.num_classes)}, got {g.shape}")
        readout_gw = g.T @ trace.post[-1]
        readout_gb = g.sum(axis=0)
        g = g @ state.readout_weight
    elif g.shape != (batch, spec.width_N):
        raise ValueError(f"loss gradient must be {(batch, spec.width_N)}, got {g.shape}")
    weight_grads = [None] * spec.depth_L
    bias_grads = [None] * spec.depth_L
    stack_grads = [None] * spec.depth_L if state.stacks is not None else None
    for l in range(spec.depth_L - 1, -1, -1):
        gh = g * act.derivative(spec.activation, trace.pre[l])
        x_prev = trace.inputs if l == 0 else trace.post[l - 1]
        gw = gh.T @ x_prev
        weight_grads[l] = gw
        bias_grads[l] = gh.sum(axis=0)
        if state.stacks is not None and state.stacks[l] is not None:
            stack_grads[l] = householder_backward(state.stacks[l], gw)
        g = gh @ state.weights[l]
    return Gradients(
        weights=weight_grads,
        biases=bias_grads,
        stacks=stack_grads,
        readout_weight=readout_gw,
        readout_bias=readout_gb,
        input_gradient=g,
    )


def jacobian(state: NetworkState, x0: np.ndarray) -> np.ndarray:
    """Input-output Jacobian of the backbone at x0: the ordered product of
    diag(phi'(h_l)) W_l evaluated on the forward trace (readout excluded)."""
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape[0] != state.spec.input_dim:
        raise ValueError(f"x0 must have length {state.spec.input_dim}")
    trace = forward(state, x0[None, :])
    j = None
    for l, w in enumerate(state.weights):
        d = act.derivative(state.spec.activation, trace.pre[l][0])
        dw = d[:, None] * w
        j = dw if j is None else dw @ j
    return j


# -- checkpointing -----------------------------------------------------------

_ACT_CODES = {k: i for i, k in enumerate(ActivationKind)}
_ACT_FROM_CODE = {i: k for k, i in _ACT_CODES.items()}


def _write_array(f, a: np.ndarray):
    a = np.ascontiguousarray(a, dtype="<f8")
    f.write(struct.pack("<I", a.ndim))
    f.write(struct.pack(f"<{a.ndim}I", *a.shape))
    f.write(a.tobytes())


def _read_array(f) -> np.ndarray:
    (ndim,) = struct.unpack("<I", f.read(4))
    shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
    count = int(np.prod(shape))
    data = np.frombuffer(f.read(8 * count), dtype="<f8")
    if data.size != count:
        raise ValueError("truncated checkpoint file")
    return data.reshape(shape).astype(np.float64)


def save_checkpoint(state: NetworkState, path):
    """Binary layout: magic "VNLB", version, spec fields, then row-major
    little-endian float64 arrays (stacks store reflection vectors)."""
    spec = state.spec
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(
            struct.pack(
                "<IIIIIBB",
                CHECKPOINT_VERSION,
                spec.depth_L,
                spec.width_N,
                spec.input_dim,
                spec.num_classes,
                _ACT_CODES[spec.activation],
                1 if state.parametrization is Parametrization.HOUSEHOLDER else 0,
            )
        )
        for l in range(spec.depth_L):
            if state.stacks is not None and state.stacks[l] is not None:
                f.write(b"H")
                _write_array(f, state.stacks[l].vectors)
            else:
                f.write(b"D")
                _write_array(f, state.weights[l])
            _write_array(f, state.biases[l])
        if spec.num_classes > 0:
            _write_array(f, state.readout_weight)
            _write_array(f, state.readout_bias)


def load_checkpoint(path) -> NetworkState:
    with open(path, "rb") as f:
        if f.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("not a network checkpoint (bad magic bytes)")
        version, depth, width, input_dim, num_classes, act_code, householder = struct.unpack(
            "<IIIIIBB", f.read(22)
        )
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        spec = NetworkSpec(depth, width, input_dim, num_classes, _ACT_FROM_CODE[act_code])
        weights, biases = [], []
        stacks = [None] * depth if householder else None
        for l in range(depth):
            tag = f.read(1)
            if tag == b"H":
                stack = HouseholderStack(_read_array(f))
                stacks[l] = stack
                weights.append(householder_materialize(stack))
            elif tag == b"D":
                weights.append(_read_array(f))
            else:
                raise ValueError("corrupt checkpoint: unknown layer tag")
            biases.append(_read_array(f))
        readout_w = readout_b = None
        if num_classes > 0:
            readout_w = _read_array(f)
            readout_b = _read_array(f)
    return NetworkState(
        spec=spec,
        weights=weights,
        biases=biases,
        parametrization=Parametrization.HOUSEHOLDER if householder else Parametrization.DENSE,
        stacks=stacks,
        readout_weight=readout_w,
        readout_bias=readout_b,
    )
