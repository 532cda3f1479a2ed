"""Protocol files: JSON text with amplitudes stored as exact decimal strings.

Floats are written with ``repr``, which is the shortest string that parses
back to the same double, so a save/load round trip is bit-exact.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import OMEGA_S, STEPS_PER_SEGMENT, ControlProtocol

FORMAT_VERSION = 1
BUNDLED = ("accel_dsp", "accel_spp", "lattice_dsp")
_FIELDS = ("format_version", "omega_s_over_omega_R", "n_max", "q_list", "segment_amplitudes",
           "dt_over_segment", "metadata")


class ProtocolParseError(ValueError):
    """Malformed protocol file; the message names the offending line or field."""


@dataclass(frozen=True)
class ProtocolFile:
    protocol: ControlProtocol
    n_max: int = 10
    q_list: tuple = (0.0,)
    dt_over_segment: float = 1.0 / STEPS_PER_SEGMENT
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def steps_per_segment(self) -> int:
        return int(round(1.0 / self.dt_over_segment))

    @property
    def dt(self) -> float:
        return self.dt_over_segment * self.protocol.segment_duration


def _num(x: float) -> str:
    return repr(float(x))


def dumps(pf: ProtocolFile) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "omega_s_over_omega_R": _num(pf.protocol.omega_s),
        "n_max": int(pf.n_max),
        "q_list": [_num(q) for q in pf.q_list],
        "segment_amplitudes": [_num(a) for a in pf.protocol.segment_amplitudes],
        "dt_over_segment": _num(pf.dt_over_segment),
        "metadata": pf.metadata,
    }
    return json.dumps(doc, indent=1) + "\n"


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def _fail(text: str, key: str, msg: str):
    line = _line_of(text, key)
    where = f"line {line}, field '{key}'" if line else f"field '{key}'"
    raise ProtocolParseError(f"{where}: {msg}")


def _parse_num(text: str, key: str, value) -> float:
    if not isinstance(value, str):
        _fail(text, key, f"expected a decimal string, got {type(value).__name__}")
    try:
        x = float(value)
    except ValueError:
        _fail(text, key, f"not a number: {value!r}")
    if not math.isfinite(x):
        _fail(text, key, f"non-finite value {value!r}")
    return x


def loads(text: str) -> ProtocolFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProtocolParseError("line 1: top level must be a JSON object")
    for key in _FIELDS:
        if key not in doc:
            raise ProtocolParseError(f"field '{key}': missing")
    if doc["format_version"] != FORMAT_VERSION:
        _fail(text, "format_version", f"unsupported version {doc['format_version']!r}")
    omega = _parse_num(text, "omega_s_over_omega_R", doc["omega_s_over_omega_R"])
    if omega <= 0:
        _fail(text, "omega_s_over_omega_R", "must be positive")
    n_max = doc["n_max"]
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
        _fail(text, "n_max", f"expected an integer >= 1, got {n_max!r}")
    for key in ("q_list", "segment_amplitudes"):
        if not isinstance(doc[key], list) or not doc[key]:
            _fail(text, key, "expected a non-empty list")
    q_list = tuple(_parse_num(text, "q_list", q) for q in doc["q_list"])
    if any(not -1.0 <= q < 1.0 for q in q_list):
        _fail(text, "q_list", "quasimomenta must lie in [-1, 1)")
    amps = tuple(_parse_num(text, "segment_amplitudes", a) for a in doc["segment_amplitudes"])
    dts = _parse_num(text, "dt_over_segment", doc["dt_over_segment"])
    steps = round(1.0 / dts) if dts > 0 else 0
    if steps < 1 or abs(steps * dts - 1.0) > 1e-12:
        _fail(text, "dt_over_segment", f"{dts!r} is not 1/n for an integer n")
    if not isinstance(doc["metadata"], dict):
        _fail(text, "metadata", "expected an object")
    return ProtocolFile(ControlProtocol(amps, omega), n_max, q_list, dts, doc["metadata"])


def save_protocol(pf: ProtocolFile, path) -> Path:
    path = Path(path)
    path.write_text(dumps(pf))
    return path


def load_protocol(path) -> ProtocolFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProtocolParseError(f"{path}: {exc.strerror}") from None
    try:
        return loads(text)
    except ProtocolParseError as exc:
        raise ProtocolParseError(f"{path}: {exc}") from None


def protocol_hash(pf: ProtocolFile | ControlProtocol) -> str:
    """SHA-256 over the physics content (metadata excluded)."""
    if isinstance(pf, ControlProtocol):
        pf = ProtocolFile(pf)
    core = {
        "omega_s": _num(pf.protocol.omega_s),
        "amps": [_num(a) for a in pf.protocol.segment_amplitudes],
        "n_max": pf.n_max,
        "q": [_num(q) for q in pf.q_list],
        "dts": _num(pf.dt_over_segment),
    }
    return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()


def zero_protocol(n_segments: int = 32, omega_s: float = OMEGA_S) -> ControlProtocol:
    return ControlProtocol((0.0,) * n_segments, omega_s)


def bundled_path(name: str):
    if name not in BUNDLED:
        raise ValueError(f"unknown bundled protocol {name!r}; choose from {BUNDLED}")
    return resources.files("latticedsp") / "data" / f"{name}.json"


def load_bundled(name: str) -> ProtocolFile:
    return loads(bundled_path(name).read_text())
