"""Dense two-layer network with ReLU at both layers, squared TD loss, and Adam.

The Q-network maps an observation vector to one nonnegative value per action:
y = relu(W2 @ relu(W1 @ x + b1) + b2).  The output ReLU is deliberate; rewards
are nonnegative so the values it approximates are too.  Gradients are exact
(ReLU subgradient at 0 taken as 0) and everything is float64 for bitwise
reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MlpParams:
    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def arrays(self):
        return self.w1, self.b1, self.w2, self.b2


def init_params(input_dim: int, hidden_dim: int, output_dim: int, seed: int) -> MlpParams:
    """Fan-in-scaled uniform weights (|w| <= sqrt(3/fan_in)), zero biases."""
    if min(input_dim, hidden_dim, output_dim) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(3.0 / input_dim)
    lim2 = np.sqrt(3.0 / hidden_dim)
    return MlpParams(
        w1=rng.uniform(-lim1, lim1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
    )


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output for a single observation (1-D) or a batch (2-D, rows)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.dims[0]:
        raise ValueError(f"input dimension {x.shape[-1]} != {params.dims[0]}")
    h = np.maximum(x @ params.w1.T + params.b1, 0.0)
    return np.maximum(h @ params.w2.T + params.b2, 0.0)


def grad_td_loss(
    params: MlpParams,
    states: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
) -> tuple[MlpParams, float]:
    """Gradient of mean_i (Q(s_i, a_i) - Y_i)^2 over a batch, plus the loss.

    Only the selected action's output unit contributes per sample.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    batch = states.shape[0]
    if batch == 0:
        raise ValueError("batch must be nonempty")
    if not np.all(np.isfinite(targets)):
        raise ValueError("targets must be finite")

    z1 = states @ params.w1.T + params.b1        # (B, hidden)
    h = np.maximum(z1, 0.0)
    z2 = h @ params.w2.T + params.b2             # (B, output)
    y = np.maximum(z2, 0.0)

    rows = np.arange(batch)
    residual = y[rows, actions] - targets
    loss = float(np.mean(residual ** 2))

    dy = np.zeros_like(y)
    dy[rows, actions] = 2.0 * residual / batch
    dz2 = dy * (z2 > 0.0)
    dw2 = dz2.T @ h
    db2 = dz2.sum(axis=0)
    dh = dz2 @ params.w2
    dz1 = dh * (z1 > 0.0)
    dw1 = dz1.T @ states
    db1 = dz1.sum(axis=0)
    return MlpParams(dw1, db1, dw2, db2), loss


@dataclass
class AdamState:
    """First/second-moment accumulators congruent to MlpParams."""

    m: MlpParams
    v: MlpParams
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def zeros_like(params: MlpParams) -> "AdamState":
        z = lambda a: np.zeros_like(a)
        return AdamState(
            m=MlpParams(*[z(a) for a in params.arrays()]),
            v=MlpParams(*[z(a) for a in params.arrays()]),
        )


def adam_step(
    params: MlpParams,
    state: AdamState,
    grads: MlpParams,
    learning_rate: float,
) -> tuple[MlpParams, AdamState]:
    """Bias-corrected Adam update; mutates params and state in place."""
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for p, m, v, g in zip(params.arrays(), state.m.arrays(), state.v.arrays(), grads.arrays()):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def soft_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """target <- tau * target + (1 - tau) * online, elementwise in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    if target.dims != online.dims:
        raise ValueError("parameter shapes do not match")
    for t, o in zip(target.arrays(), online.arrays()):
        t *= tau
        t += (1.0 - tau) * o
    return target
