"""On-disk formats: protocol text files, binary network checkpoints, CSV output.

Protocol files are line-oriented text with a versioned header and one segment
per line; checkpoints are little-endian float64 binaries that round-trip
byte-exactly, so a reloaded network reproduces forward passes to the last bit.
"""

from __future__ import annotations

import struct
from importlib import resources
from pathlib import Path

import numpy as np

from .lattice import ConstantPhase, PhaseSchedule, SinusoidHalfCycle
from .nnet import AdamState, MlpParams

PROTOCOL_MAGIC = "# sli protocol v"
PROTOCOL_VERSION = 1
CHECKPOINT_MAGIC = b"SLIQ"
CHECKPOINT_VERSION = 1


class ProtocolFormatError(ValueError):
    pass


def save_protocol(path, schedule: PhaseSchedule, metadata: dict | None = None):
    """Write a schedule with a commented metadata header.

    Segment lines: `const <phi_rad> <duration>` or `sin <amplitude_rad>
    <duration> <origin>`; durations and origins in 1/wr.
    """
    lines = [f"{PROTOCOL_MAGIC}{PROTOCOL_VERSION}"]
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    for seg in schedule.segments:
        if isinstance(seg, ConstantPhase):
            lines.append(f"const {seg.phi!r} {seg.duration!r}")
        else:
            lines.append(f"sin {seg.amplitude!r} {seg.duration!r} {seg.origin!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_protocol(path) -> tuple[PhaseSchedule, dict]:
    """Read a protocol file back into a schedule plus its metadata."""
    text = Path(path).read_text()
    return parse_protocol(text, name=str(path))


def parse_protocol(text: str, name: str = "<protocol>") -> tuple[PhaseSchedule, dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(PROTOCOL_MAGIC):
        raise ProtocolFormatError(f"{name}: missing protocol header")
    version = lines[0][len(PROTOCOL_MAGIC):].strip()
    if version != str(PROTOCOL_VERSION):
        raise ProtocolFormatError(
            f"{name}: protocol version {version} unsupported (expected {PROTOCOL_VERSION})"
        )
    metadata = {}
    segments = []
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if ":" in body:
                key, _, value = body.partition(":")
                metadata[key.strip()] = value.strip()
            continue
        parts = stripped.split()
        try:
            if parts[0] == "const" and len(parts) == 3:
                segments.append(ConstantPhase(float(parts[1]), float(parts[2])))
            elif parts[0] == "sin" and len(parts) == 4:
                seg = SinusoidHalfCycle(float(parts[1]), origin=float(parts[3]))
                if abs(seg.duration - float(parts[2])) > 1e-12:
                    raise ValueError("sinusoid half-cycle duration must be pi/12")
                segments.append(seg)
            else:
                raise ValueError(f"unrecognized segment line {parts!r}")
        except ValueError as err:
            raise ProtocolFormatError(f"{name}: line {lineno}: {err}") from err
    if not segments:
        raise ProtocolFormatError(f"{name}: no segments found")
    return PhaseSchedule(segments), metadata


def bundled_protocol(kind: str) -> tuple[PhaseSchedule, dict]:
    """Load a protocol shipped with the package (kind: 'splitter' or 'mirror')."""
    text = resources.files("sli").joinpath(f"assets/{kind}.protocol").read_text()
    return parse_protocol(text, name=f"assets/{kind}.protocol")


def _write_array(handle, arr: np.ndarray):
    handle.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_array(buf: memoryview, offset: int, shape) -> tuple[np.ndarray, int]:
    count = int(np.prod(shape))
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
    return arr, offset + 8 * count


def save_checkpoint(path, params: MlpParams, opt: AdamState | None = None):
    """Binary layout: magic, version, dims, flag, then flat float64 LE arrays."""
    d_in, d_hidden, d_out = params.dims
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<IIIIB", CHECKPOINT_VERSION, d_in, d_hidden, d_out,
                                 1 if opt is not None else 0))
        for arr in params.arrays():
            _write_array(handle, arr)
        if opt is not None:
            for arr in (*opt.m.arrays(), *opt.v.arrays()):
                _write_array(handle, arr)
            handle.write(struct.pack("<Qddd", opt.step, opt.beta1, opt.beta2, opt.eps))


def load_checkpoint(path) -> tuple[MlpParams, AdamState | None]:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    version, d_in, d_hidden, d_out, has_opt = struct.unpack_from("<IIIIB", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: checkpoint version {version} unsupported")
    shapes = [(d_hidden, d_in), (d_hidden,), (d_out, d_hidden), (d_out,)]
    expected = 4 + struct.calcsize("<IIIIB") + 8 * sum(int(np.prod(s)) for s in shapes) * (
        3 if has_opt else 1
    ) + (struct.calcsize("<Qddd") if has_opt else 0)
    if len(raw) != expected:
        raise ValueError(f"{path}: payload length {len(raw)} != {expected} from header dims")
    buf = memoryview(raw)
    offset = 4 + struct.calcsize("<IIIIB")
    arrays = []
    reps = 3 if has_opt else 1
    for _ in range(reps):
        group = []
        for shape in shapes:
            arr, offset = _read_array(buf, offset, shape)
            group.append(arr)
        arrays.append(group)
    params = MlpParams(*arrays[0])
    opt = None
    if has_opt:
        step, beta1, beta2, eps = struct.unpack_from("<Qddd", raw, offset)
        opt = AdamState(m=MlpParams(*arrays[1]), v=MlpParams(*arrays[2]),
                        step=step, beta1=beta1, beta2=beta2, eps=eps)
    return params, opt


def format_cell(value) -> str:
    """Shortest exact decimal for floats; plain str otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: list[str], rows):
    """Plain CSV with a mandatory header row; float cells round-trip exactly."""
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(format_cell(cell) for cell in row) + "\n")
