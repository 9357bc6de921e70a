"""Single atom in a shaken 1D optical lattice, on the momentum comb {2n hbar kL}.

Recoil units throughout: hbar = m = kL = 1, energies in Er = hbar^2 kL^2 / 2m,
times in 1/wr with wr = Er/hbar, velocities in vr = hbar kL / m, accelerations
in wr*vr.  A comb index n corresponds to momentum 2n hbar kL, kinetic energy
(2n)^2 Er, and group velocity 2n vr.  Positions are measured in units of 1/kL;
one lattice site is pi in these units.

Acceleration is handled in the kinetic-drift gauge: the comb stays fixed and
the kinetic diagonal becomes (2n - a*t)^2.  The comoving-phase gauge (diagonal
(2n)^2, control phase phi - 2*a*t^2) is provided as an independent cross-check;
the two agree bin-by-bin in momentum populations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Sinusoidal shaking runs at 12 wr, resonant with the 16 Er - 4 Er kinetic gap.
SINUSOID_FREQUENCY = 12.0
HALF_CYCLE = np.pi / SINUSOID_FREQUENCY


@dataclass(frozen=True)
class UnitsConvention:
    """Documented recoil-unit constants (all equal to one in code)."""

    hbar: float = 1.0
    mass: float = 1.0
    laser_wavenumber: float = 1.0
    recoil_energy: float = 1.0     # Er = hbar^2 kL^2 / 2m
    recoil_frequency: float = 1.0  # wr = Er / hbar
    recoil_velocity: float = 1.0   # vr = hbar kL / m

    @staticmethod
    def comb_momentum(n: int) -> float:
        """Physical momentum of comb index n, in units of hbar kL."""
        return 2.0 * n


class TruncationError(RuntimeError):
    """Momentum population reached the edge of the truncated comb."""

    def __init__(self, edge_population: float, note: str = ""):
        msg = (
            f"edge population {edge_population:.3e} exceeds 1e-6; "
            "increase n_max or reduce drive/acceleration"
        )
        super().__init__(msg + (f" ({note})" if note else ""))
        self.edge_population = edge_population


class BoxOverflowError(RuntimeError):
    """Real-space density reached the edge of the position box."""


@dataclass(frozen=True)
class LatticeConfig:
    depth: float = 10.0       # V0 in Er
    n_max: int = 16           # comb half-width; basis dimension is 2*n_max + 1
    substeps: int = 32        # integrator substeps per schedule segment
    accel: float = 0.0        # inertial acceleration in wr*vr

    def __post_init__(self):
        if not self.depth > 0:
            raise ValueError("lattice depth must be positive")
        if self.n_max < 8:
            raise ValueError("n_max must be at least 8")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if not np.isfinite(self.accel):
            raise ValueError("accel must be finite")

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1

    @property
    def comb(self) -> np.ndarray:
        """Comb indices n = -n_max .. n_max."""
        return np.arange(-self.n_max, self.n_max + 1)

    def index_of(self, n: int) -> int:
        if abs(n) > self.n_max:
            raise ValueError(f"comb index {n} outside +-{self.n_max}")
        return n + self.n_max


@dataclass(frozen=True)
class ConstantPhase:
    """Hold the lattice phase fixed for `duration`."""

    phi: float
    duration: float

    def __post_init__(self):
        if not (np.isfinite(self.phi) and np.isfinite(self.duration)):
            raise ValueError("phase and duration must be finite")
        if self.duration <= 0:
            raise ValueError("segment duration must be positive")

    def phase_at(self, s: float) -> float:
        return self.phi


@dataclass(frozen=True)
class SinusoidHalfCycle:
    """One half-cycle of phi = amplitude * sin(12*(origin + s)), s in [0, pi/12].

    `origin` is the phase origin of the sinusoid; an episode built from
    consecutive half-cycles uses origins k*pi/12 so the drive is continuous
    in global time.  Duration is fixed to a half period of the 12 wr drive.
    """

    amplitude: float
    origin: float = 0.0
    duration: float = field(default=HALF_CYCLE, init=False)

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and np.isfinite(self.origin)):
            raise ValueError("amplitude and origin must be finite")

    def phase_at(self, s: float) -> float:
        return self.amplitude * np.sin(SINUSOID_FREQUENCY * (self.origin + s))


PhaseSegment = ConstantPhase | SinusoidHalfCycle


@dataclass(frozen=True)
class PhaseSchedule:
    """Ordered piecewise description of the control phase phi(t)."""

    segments: tuple[PhaseSegment, ...]

    def __init__(self, segments):
        object.__setattr__(self, "segments", tuple(segments))

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    def __len__(self) -> int:
        return len(self.segments)

    def phase_at(self, t: float) -> float:
        """phi at local schedule time t in [0, total duration]."""
        if t < 0:
            raise ValueError("schedule time must be nonnegative")
        acc = 0.0
        for seg in self.segments:
            if t <= acc + seg.duration:
                return seg.phase_at(t - acc)
            acc += seg.duration
        if t <= acc * (1 + 1e-12) + 1e-12:
            last = self.segments[-1]
            return last.phase_at(last.duration)
        raise ValueError(f"time {t} beyond schedule end {acc}")

    def then(self, other: "PhaseSchedule") -> "PhaseSchedule":
        return PhaseSchedule(self.segments + other.segments)


def constant_schedule(phi: float, duration: float, chunk: float | None = None) -> PhaseSchedule:
    """Constant-phase schedule, optionally chopped into <= chunk pieces.

    Chopping matters only at nonzero acceleration, where integrator accuracy
    is set by the substep length; at a = 0 a single segment is exact.
    """
    if chunk is None or duration <= chunk:
        return PhaseSchedule([ConstantPhase(phi, duration)])
    pieces = int(np.ceil(duration / chunk))
    dt = duration / pieces
    return PhaseSchedule([ConstantPhase(phi, dt) for _ in range(pieces)])


def time_reverse(schedule: PhaseSchedule, negate: bool = False) -> PhaseSchedule:
    """Play a schedule backwards, optionally negating every phase value.

    The reversal of amplitude*sin(12*(origin + s)) on [0, d] is again a
    half-cycle sinusoid, with origin pi/12 - origin - d.
    """
    out = []
    for seg in reversed(schedule.segments):
        if isinstance(seg, ConstantPhase):
            out.append(ConstantPhase(-seg.phi if negate else seg.phi, seg.duration))
        else:
            amp = -seg.amplitude if negate else seg.amplitude
            out.append(SinusoidHalfCycle(amp, HALF_CYCLE - seg.origin - seg.duration))
    return PhaseSchedule(out)


def build_hamiltonian(phi: float, t: float, cfg: LatticeConfig) -> np.ndarray:
    """Drift-gauge Hamiltonian matrix on the momentum comb, in Er.

    Diagonal (2n - a*t)^2; the lattice couples neighbouring comb states with
    -(V0/4) e^{i phi} upward and the conjugate downward.
    """
    if not (np.isfinite(phi) and np.isfinite(t)):
        raise ValueError("phi and t must be finite")
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = cfg.comb
    h = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    np.fill_diagonal(h, (2.0 * n - cfg.accel * t) ** 2)
    coupling = -(cfg.depth / 4.0) * np.exp(1j * phi)
    idx = np.arange(cfg.dim - 1)
    h[idx + 1, idx] = coupling
    h[idx, idx + 1] = np.conj(coupling)
    return h


def _step_matrix(phi: float, t: float, dt: float, cfg: LatticeConfig) -> np.ndarray:
    """exp(-i H(phi, t) dt) via Hermitian eigendecomposition (exactly unitary)."""
    w, v = np.linalg.eigh(build_hamiltonian(phi, t, cfg))
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def _substeps(schedule: PhaseSchedule, cfg: LatticeConfig, t0: float):
    """Yield (phi, t_mid, dt) integrator substeps; collapses exact segments.

    A constant-phase segment at zero acceleration has a time-independent
    Hamiltonian, so a single exponential of the full duration is exact and
    equal to the substep product.
    """
    t = t0
    for seg in schedule.segments:
        if isinstance(seg, ConstantPhase) and cfg.accel == 0.0:
            yield seg.phi, t, seg.duration
            t += seg.duration
            continue
        dt = seg.duration / cfg.substeps
        for k in range(cfg.substeps):
            s_mid = (k + 0.5) * dt
            yield seg.phase_at(s_mid), t + s_mid, dt
        t += seg.duration


def _check_state(state: np.ndarray, cfg: LatticeConfig) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape != (cfg.dim,):
        raise ValueError(f"state must have shape ({cfg.dim},)")
    norm = np.sum(np.abs(state) ** 2)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state norm^2 = {norm} is not 1 within 1e-10")
    return state


def _check_truncation(populations_at_edges: float):
    if populations_at_edges >= 1e-6:
        raise TruncationError(populations_at_edges)


def propagate(
    state: np.ndarray,
    schedule: PhaseSchedule,
    cfg: LatticeConfig,
    t0: float = 0.0,
) -> np.ndarray:
    """Evolve a normalized comb state through a schedule (drift gauge).

    t0 is the global time at which the schedule starts; it matters only at
    nonzero acceleration, where the kinetic diagonal depends on global time.
    """
    psi = _check_state(state, cfg).copy()
    for phi, t_mid, dt in _substeps(schedule, cfg, t0):
        u = _step_matrix(phi, t_mid, dt, cfg)
        psi = u @ psi
    _check_truncation(max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2))
    return psi


def propagator(
    schedule: PhaseSchedule,
    cfg: LatticeConfig,
    t0: float = 0.0,
) -> np.ndarray:
    """Unitary for a schedule: same stepping as `propagate`, applied to identity."""
    u = np.eye(cfg.dim, dtype=complex)
    for phi, t_mid, dt in _substeps(schedule, cfg, t0):
        u = _step_matrix(phi, t_mid, dt, cfg) @ u
    edge = max(np.max(np.abs(u[0, :]) ** 2), np.max(np.abs(u[-1, :]) ** 2))
    _check_truncation(edge)
    return u


def propagate_lattice_frame(
    state: np.ndarray,
    schedule: PhaseSchedule,
    cfg: LatticeConfig,
    t0: float = 0.0,
) -> np.ndarray:
    """Gauge cross-check: diagonal (2n)^2 with control phase phi - 2*a*t^2.

    Equivalent to `propagate` up to a global phase; momentum populations agree
    bin by bin.  Used only to validate the acceleration handling.
    """
    psi = _check_state(state, cfg).copy()
    frame_cfg = LatticeConfig(cfg.depth, cfg.n_max, cfg.substeps, accel=0.0)
    a = cfg.accel
    for seg in schedule.segments:
        dt = seg.duration / cfg.substeps
        for k in range(cfg.substeps):
            s_mid = (k + 0.5) * dt
            t_mid = t0 + s_mid
            phi = seg.phase_at(s_mid) - 2.0 * a * t_mid * t_mid
            psi = _step_matrix(phi, t_mid, dt, frame_cfg) @ psi
        t0 += seg.duration
    _check_truncation(max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2))
    return psi


@dataclass(frozen=True)
class BlochSpectrum:
    """q = 0 Bloch eigensystem: energies ascending, eigenvectors in columns."""

    energies: np.ndarray
    states: np.ndarray

    def band(self, b: int) -> np.ndarray:
        return self.states[:, b]


def bloch_eigensystem(cfg: LatticeConfig) -> BlochSpectrum:
    """Diagonalize the static (phi = 0, t = 0) lattice at zero quasimomentum.

    Band b is the (b+1)-th lowest eigenstate.  Global phases are fixed so the
    largest-magnitude amplitude of each eigenvector is real positive.
    """
    if cfg.accel != 0.0:
        raise ValueError("Bloch eigensystem is defined for accel = 0")
    w, v = np.linalg.eigh(build_hamiltonian(0.0, 0.0, cfg))
    for b in range(v.shape[1]):
        lead = v[np.argmax(np.abs(v[:, b])), b]
        v[:, b] *= np.conj(lead) / abs(lead)
    return BlochSpectrum(energies=w, states=v.astype(complex))


def bloch_state(cfg: LatticeConfig, band: int) -> np.ndarray:
    return bloch_eigensystem(cfg).band(band)


@dataclass(frozen=True)
class DensityMovie:
    """Real-space |psi(x,t)|^2 frames; x in lattice sites, t in 1/wr."""

    times: np.ndarray
    x_sites: np.ndarray
    frames: np.ndarray  # shape (len(times), len(x_sites))


def position_density_evolution(
    envelope_width: float,
    schedule: PhaseSchedule,
    cfg: LatticeConfig,
    x_points: int = 4096,
    x_extent: float = 1200.0,
    sample_stride: int = 20,
    dt: float = 0.02,
) -> DensityMovie:
    """Split-step real-space evolution of an enveloped ground Bloch state.

    The initial state is the ground Bloch state multiplied by a Gaussian of rms
    width `envelope_width` lattice sites, renormalized on the grid.  x_extent
    is the box length in units of 1/kL (grid spans [-x_extent/2, x_extent/2)),
    and must resolve the lattice: at least 16 points per site.
    """
    dx = x_extent / x_points
    if dx > np.pi / 16:
        raise ValueError("grid must resolve the lattice: >= 16 points per site")
    x = (np.arange(x_points) - x_points // 2) * dx
    k = 2.0 * np.pi * np.fft.fftfreq(x_points, d=dx)

    ground = bloch_state(cfg, 0)
    comb = cfg.comb
    bloch_x = ground @ np.exp(2j * np.outer(comb, x))
    sigma = envelope_width * np.pi
    psi = bloch_x * np.exp(-(x ** 2) / (4.0 * sigma ** 2))
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)

    edge = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
    if edge > 1e-8:
        raise ValueError("envelope does not fit inside the box (edge density > 1e-8)")

    total = schedule.total_duration
    steps = int(np.ceil(total / dt))
    dt = total / steps

    # frames hold probability density per lattice site: integrates to 1 over x_sites
    frames = [np.abs(psi) ** 2 * np.pi]
    times = [0.0]
    half_kin_base = np.exp(-0.5j * dt * k ** 2)
    t = 0.0
    for step in range(steps):
        t_mid = t + 0.5 * dt
        if cfg.accel == 0.0:
            half_kin = half_kin_base
        else:
            half_kin = np.exp(-0.5j * dt * (k - cfg.accel * t_mid) ** 2)
        phi = schedule.phase_at(min(t_mid, total))
        pot = np.exp(1j * dt * (cfg.depth / 2.0) * np.cos(2.0 * x + phi))
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        psi *= pot
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        t += dt
        if (step + 1) % sample_stride == 0 or step == steps - 1:
            dens = np.abs(psi) ** 2 * np.pi
            if max(dens[0], dens[-1]) > 1e-4:
                raise BoxOverflowError(
                    f"density {max(dens[0], dens[-1]):.2e} at box edge at t = {t:.2f}"
                )
            frames.append(dens)
            times.append(t)
    return DensityMovie(np.array(times), x / np.pi, np.array(frames))
