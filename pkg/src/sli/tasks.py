"""The two control environments: beam splitter (target state) and mirror (target operator).

Splitter: start in the ground Bloch state, shake with one of five constant
phases per step, and reach the band-3 Bloch state at zero quasimomentum (the
lattice eigenstate closest to an equal +-4 hbar kL superposition).

Mirror: drive phi(t) = Amp(t) * sin(12 t) choosing the amplitude each
half-cycle, and steer the evolution operator toward a swap of the +-4 hbar kL
momentum states, scored by channel fidelity on that 2-dimensional subspace.

Both reward with F/(1-F) at episode end (terminal step or fidelity > threshold)
and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    HALF_CYCLE,
    ConstantPhase,
    LatticeConfig,
    PhaseSchedule,
    SinusoidHalfCycle,
    bloch_state,
    propagator,
)

# Action decodings, index order fixed for reproducibility.
SPLITTER_PHASES = (-np.pi, -np.pi / 2, -np.pi / 4, 0.0, np.pi / 2)
MIRROR_AMPLITUDES = (0.4, 0.6, 0.8, 1.0, 1.2)

# Observations track populations for comb indices -3..3 (momenta -6..6 hbar kL);
# anything further out stays negligible during sanctioned protocols.
OBS_COMB_INDICES = tuple(range(-3, 4))


@dataclass(frozen=True)
class SubspaceTarget:
    """Swap target on the span of two comb states (+p0 and -p0)."""

    index_plus: int
    index_minus: int

    @staticmethod
    def for_momentum(cfg: LatticeConfig, n0: int = 2) -> "SubspaceTarget":
        return SubspaceTarget(cfg.index_of(n0), cfg.index_of(-n0))

    def block(self, u: np.ndarray) -> np.ndarray:
        """2x2 block of u on (plus, minus), rows and columns in that order."""
        idx = [self.index_plus, self.index_minus]
        return u[np.ix_(idx, idx)]


def splitter_fidelity(state: np.ndarray, target: np.ndarray) -> float:
    """Modulus-squared overlap with the target state."""
    return float(abs(np.vdot(target, state)) ** 2)


def channel_fidelity(u: np.ndarray, target: SubspaceTarget) -> float:
    """Average fidelity of u against the subspace swap.

    F = [Tr(M M^dag) + |Tr M|^2] / (d(d+1)) with d = 2 and M the 2x2 block of
    U_target^dag U on the subspace; leakage out of the subspace lowers F
    through the projector.
    """
    block = target.block(u)
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = swap @ block
    return float((np.trace(m @ m.conj().T) + abs(np.trace(m)) ** 2).real / 6.0)


def reward_from_fidelity(fidelity: float, done: bool) -> float:
    if not done:
        return 0.0
    # F -> 1 would diverge; protocols terminate just above threshold in practice
    return min(fidelity, 1.0 - 1e-12) / (1.0 - min(fidelity, 1.0 - 1e-12))


class SplitterTask:
    """Target-state environment: ground band to band 3 via constant-phase steps."""

    def __init__(
        self,
        cfg: LatticeConfig | None = None,
        action_time: float = 0.25,
        max_steps: int = 60,
        threshold: float = 0.95,
    ):
        self.cfg = cfg or LatticeConfig()
        if self.cfg.accel != 0.0:
            raise ValueError("splitter training assumes zero acceleration")
        self.action_time = action_time
        self.max_steps = max_steps
        self.threshold = threshold
        self.n_actions = len(SPLITTER_PHASES)
        self.obs_dim = len(OBS_COMB_INDICES)
        self._obs_idx = np.array([self.cfg.index_of(n) for n in OBS_COMB_INDICES])
        self._start = bloch_state(self.cfg, 0)
        self._target = bloch_state(self.cfg, 3)
        self._step_ops = [
            propagator(PhaseSchedule([ConstantPhase(phi, action_time)]), self.cfg)
            for phi in SPLITTER_PHASES
        ]
        self._state = None
        self._actions: list[int] = []
        self._done = True

    def _observe(self) -> np.ndarray:
        return np.abs(self._state[self._obs_idx]) ** 2

    def reset(self) -> np.ndarray:
        self._state = self._start.copy()
        self._actions = []
        self._done = False
        return self._observe()

    def fidelity(self) -> float:
        return splitter_fidelity(self._state, self._target)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise RuntimeError("episode already terminated; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action index {action} out of range")
        self._state = self._step_ops[action] @ self._state
        self._actions.append(action)
        fid = self.fidelity()
        self._done = len(self._actions) >= self.max_steps or fid > self.threshold
        return self._observe(), reward_from_fidelity(fid, self._done), self._done

    def episode_fidelity(self) -> float:
        return self.fidelity()

    def episode_schedule(self) -> PhaseSchedule:
        return PhaseSchedule(
            [ConstantPhase(SPLITTER_PHASES[a], self.action_time) for a in self._actions]
        )


class MirrorTask:
    """Target-operator environment: swap +-4 hbar kL with a 12 wr sinusoidal drive."""

    def __init__(
        self,
        cfg: LatticeConfig | None = None,
        max_half_cycles: int = 16,
        threshold: float = 0.95,
    ):
        self.cfg = cfg or LatticeConfig()
        if self.cfg.accel != 0.0:
            raise ValueError("mirror training assumes zero acceleration")
        self.max_half_cycles = max_half_cycles
        self.threshold = threshold
        self.target = SubspaceTarget.for_momentum(self.cfg)
        self.n_actions = len(MIRROR_AMPLITUDES)
        self.obs_dim = 2 * len(OBS_COMB_INDICES)
        self._obs_idx = np.array([self.cfg.index_of(n) for n in OBS_COMB_INDICES])
        # At zero acceleration a half-cycle propagator depends on its origin
        # k*pi/12 only through the parity of k: sin(12(k*pi/12 + s)) = (-1)^k sin(12 s).
        self._half_cycle_ops = {
            (parity, i): propagator(
                PhaseSchedule([SinusoidHalfCycle(amp, origin=parity * HALF_CYCLE)]), self.cfg
            )
            for parity in (0, 1)
            for i, amp in enumerate(MIRROR_AMPLITUDES)
        }
        self._u = None
        self._actions: list[int] = []
        self._done = True

    def _observe(self) -> np.ndarray:
        cols = self._u[self._obs_idx][:, [self.target.index_plus, self.target.index_minus]]
        return (np.abs(cols) ** 2).T.reshape(-1)

    def reset(self) -> np.ndarray:
        self._u = np.eye(self.cfg.dim, dtype=complex)
        self._actions = []
        self._done = False
        return self._observe()

    def fidelity(self) -> float:
        return channel_fidelity(self._u, self.target)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._done:
            raise RuntimeError("episode already terminated; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action index {action} out of range")
        parity = len(self._actions) % 2
        self._u = self._half_cycle_ops[(parity, action)] @ self._u
        self._actions.append(action)
        fid = self.fidelity()
        self._done = len(self._actions) >= self.max_half_cycles or fid > self.threshold
        return self._observe(), reward_from_fidelity(fid, self._done), self._done

    def episode_fidelity(self) -> float:
        return self.fidelity()

    def episode_schedule(self) -> PhaseSchedule:
        return PhaseSchedule(
            [
                SinusoidHalfCycle(MIRROR_AMPLITUDES[a], origin=k * HALF_CYCLE)
                for k, a in enumerate(self._actions)
            ]
        )


def fixed_amplitude_scan(
    cfg: LatticeConfig | None = None,
    amplitudes=MIRROR_AMPLITUDES,
    max_half_cycles: int = 16,
) -> np.ndarray:
    """Channel fidelity of constant-amplitude 12 wr driving.

    Returns F[i, k] for amplitudes[i] after k+1 half-cycles; the best entry
    is the no-learning mirror baseline.
    """
    cfg = cfg or LatticeConfig()
    target = SubspaceTarget.for_momentum(cfg)
    out = np.zeros((len(amplitudes), max_half_cycles))
    for i, amp in enumerate(amplitudes):
        u = np.eye(cfg.dim, dtype=complex)
        for k in range(max_half_cycles):
            seg = SinusoidHalfCycle(amp, origin=(k % 2) * HALF_CYCLE)
            u = propagator(PhaseSchedule([seg]), cfg) @ u
            out[i, k] = channel_fidelity(u, target)
    return out
