"""Double deep Q-learning: replay buffer, epsilon-greedy policy, training loop.

The trainer is environment-agnostic: anything with reset() -> obs,
step(action) -> (obs, reward, done), n_actions and obs_dim can be trained.
Environments may additionally expose episode_fidelity() and episode_schedule()
so the best control protocol seen during training can be recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import PhaseSchedule
from .nnet import AdamState, MlpParams, adam_step, forward, grad_td_loss, init_params, soft_update


@dataclass(frozen=True)
class Hyperparameters:
    discount: float = 0.999       # gamma
    soft_update: float = 0.999    # tau, target-network retention per step
    learning_rate: float = 0.001
    episodes: int = 20000
    epsilon_decay: float = 0.0001
    hidden_size: int = 98
    batch_size: int = 64
    epsilon_floor: float = 0.01
    buffer_capacity: int = 100_000
    stop_at_fidelity: float | None = None  # end training early once reached

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if not 0.0 <= self.soft_update <= 1.0:
            raise ValueError("soft_update must be in [0, 1]")
        if self.batch_size < 1 or self.episodes < 1:
            raise ValueError("batch_size and episodes must be >= 1")


def epsilon(episode: int, hyper: Hyperparameters) -> float:
    """Linear decay from 1 to the floor: max(1 - decay*episode, floor)."""
    if episode < 0:
        raise ValueError("episode must be nonnegative")
    return max(1.0 - hyper.epsilon_decay * episode, hyper.epsilon_floor)


def select_action(
    params: MlpParams,
    obs: np.ndarray,
    eps: float,
    rng: np.random.Generator,
    n_actions: int,
) -> int:
    """Epsilon-greedy: argmax of the Q outputs (ties -> lowest index), else uniform."""
    if rng.random() < eps:
        return int(rng.integers(0, n_actions))
    return int(np.argmax(forward(params, obs)))


class ReplayBuffer:
    """Bounded ring of transitions (s, a, s', r, d); oldest evicted first."""

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.size = 0
        self._next = 0
        self._s = None
        self._a = np.empty(capacity, dtype=np.int64)
        self._r = np.empty(capacity)
        self._s2 = None
        self._d = np.empty(capacity)

    def push(self, s, a, s2, r, d):
        if r < 0:
            raise ValueError("rewards are nonnegative by construction")
        if self._s is None:
            dim = len(s)
            self._s = np.empty((self.capacity, dim))
            self._s2 = np.empty((self.capacity, dim))
        i = self._next
        self._s[i] = s
        self._a[i] = a
        self._s2[i] = s2
        self._r[i] = r
        self._d[i] = float(d)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample without replacement; None if not enough stored yet."""
        if self.size < batch_size:
            return None
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self._s[idx], self._a[idx], self._s2[idx], self._r[idx], self._d[idx]


def td_targets(
    online: MlpParams,
    target: MlpParams,
    s2: np.ndarray,
    rewards: np.ndarray,
    dones: np.ndarray,
    discount: float,
) -> np.ndarray:
    """Double-DQN targets: online net picks the next action, target net scores it.

    Terminal transitions contribute the reward only.
    """
    a_star = np.argmax(forward(online, s2), axis=1)
    q_next = forward(target, s2)[np.arange(len(a_star)), a_star]
    return rewards + (1.0 - dones) * discount * q_next


@dataclass
class TrainingRecord:
    """Per-episode diagnostics plus the best protocol found."""

    fidelities: list[float] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    mean_losses: list[float] = field(default_factory=list)
    best_fidelity: float = -np.inf
    best_episode: int = -1
    best_actions: list[int] = field(default_factory=list)

    def log(self, fidelity, ep_return, eps, losses, actions, episode):
        self.fidelities.append(fidelity)
        self.returns.append(ep_return)
        self.epsilons.append(eps)
        self.mean_losses.append(float(np.mean(losses)) if losses else np.nan)
        if fidelity > self.best_fidelity:
            self.best_fidelity = fidelity
            self.best_episode = episode
            self.best_actions = list(actions)


def train(
    env,
    hyper: Hyperparameters,
    seed: int,
) -> tuple[MlpParams, TrainingRecord, PhaseSchedule | None]:
    """Run the double-DQN episode loop and return the best protocol observed.

    One gradient step per environment step; the target network starts as a
    copy of the online network and trails it by soft updates.
    """
    rng = np.random.default_rng(seed)
    online = init_params(env.obs_dim, hyper.hidden_size, env.n_actions, seed)
    target = online.copy()
    opt = AdamState.zeros_like(online)
    buffer = ReplayBuffer(hyper.buffer_capacity)
    record = TrainingRecord()
    best_schedule = None

    for episode in range(hyper.episodes):
        eps = epsilon(episode, hyper)
        obs = env.reset()
        done = False
        ep_return = 0.0
        losses = []
        actions = []
        while not done:
            action = select_action(online, obs, eps, rng, env.n_actions)
            obs2, reward, done = env.step(action)
            actions.append(action)
            ep_return += reward
            buffer.push(obs, action, obs2, reward, done)
            batch = buffer.sample(hyper.batch_size, rng)
            if batch is not None:
                s, a, s2, r, d = batch
                y = td_targets(online, target, s2, r, d, hyper.discount)
                grads, loss = grad_td_loss(online, s, a, y)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at episode {episode}: {loss}; "
                        "inspect rewards and learning rate"
                    )
                losses.append(loss)
                adam_step(online, opt, grads, hyper.learning_rate)
                soft_update(target, online, hyper.soft_update)
            obs = obs2

        fidelity = env.episode_fidelity() if hasattr(env, "episode_fidelity") else ep_return
        prev_best = record.best_fidelity
        record.log(fidelity, ep_return, eps, losses, actions, episode)
        if fidelity > prev_best and hasattr(env, "episode_schedule"):
            best_schedule = env.episode_schedule()
        if hyper.stop_at_fidelity is not None and record.best_fidelity >= hyper.stop_at_fidelity:
            break

    return online, record, best_schedule
