"""Device parameters: transmons, exchange couplings and qubit roles.

Device files are JSON with human units::

    {
      "transmons": [
        {"label": "D1", "frequency_ghz": 4.99282, "anharmonicity_mhz": -340,
         "t1_us": 130.0, "t2_us": 110.0, "levels": 3},
        ...
      ],
      "couplings": [{"pair": [0, 1], "strength_mhz": 2.0}, ...],
      "roles": {"c1": 1, "t": 3, "c2": 5}
    }

``levels`` is optional (default 3), as is ``roles``.  Internally every
frequency is an angular frequency in rad/s and every time is in seconds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

TWO_PI = 2.0 * math.pi
GHZ = TWO_PI * 1e9
MHZ = TWO_PI * 1e6
US = 1e-6
NS = 1e-9

DEFAULT_LEVELS = 3
DEFAULT_T1 = 130.0 * US
DEFAULT_T2 = 110.0 * US
DEFAULT_COUPLING = 2.0 * MHZ
PAPER_ANHARMONICITY = -340.0 * MHZ


class DeviceConfigError(ValueError):
    """Raised for malformed or inconsistent device descriptions."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class TransmonParams:
    frequency: float
    anharmonicity: float
    t1: float = DEFAULT_T1
    t2: float = DEFAULT_T2
    levels: int = DEFAULT_LEVELS
    label: str = ""

    def validate(self, path: str = "transmon") -> None:
        if not (self.frequency > 0 and math.isfinite(self.frequency)):
            raise DeviceConfigError("frequency must be positive", f"{path}.frequency")
        if self.anharmonicity == 0 or not math.isfinite(self.anharmonicity):
            raise DeviceConfigError("anharmonicity must be nonzero", f"{path}.anharmonicity")
        if not self.t1 > 0:
            raise DeviceConfigError("t1 must be positive", f"{path}.t1")
        if not (0 < self.t2 <= 2 * self.t1):
            raise DeviceConfigError("t2 must satisfy 0 < t2 <= 2 t1", f"{path}.t2")
        if int(self.levels) != self.levels or self.levels < 2:
            raise DeviceConfigError("levels must be an integer >= 2", f"{path}.levels")


@dataclass(frozen=True)
class Coupling:
    pair: tuple[int, int]
    strength: float


@dataclass(frozen=True)
class DeviceConfig:
    transmons: tuple[TransmonParams, ...]
    couplings: tuple[Coupling, ...] = ()
    roles: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "transmons", tuple(self.transmons))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        object.__setattr__(self, "roles", dict(self.roles))
        self.validate()

    def validate(self) -> None:
        n = len(self.transmons)
        for i, tr in enumerate(self.transmons):
            tr.validate(f"transmons[{i}]")
        seen = set()
        for i, c in enumerate(self.couplings):
            a, b = c.pair
            if a == b:
                raise DeviceConfigError("coupling pair indices must differ", f"couplings[{i}].pair")
            if not (0 <= a < n and 0 <= b < n):
                raise DeviceConfigError("coupling index out of range", f"couplings[{i}].pair")
            key = frozenset((a, b))
            if key in seen:
                raise DeviceConfigError("duplicate coupling", f"couplings[{i}].pair")
            seen.add(key)
        for name, idx in self.roles.items():
            if not 0 <= idx < n:
                raise DeviceConfigError("role index out of range", f"roles.{name}")

    @property
    def n(self) -> int:
        return len(self.transmons)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(t.levels for t in self.transmons)

    def coupling(self, a: int, b: int) -> float:
        for c in self.couplings:
            if set(c.pair) == {a, b}:
                return c.strength
        return 0.0

    def is_coupled(self, a: int, b: int) -> bool:
        return any(set(c.pair) == {a, b} for c in self.couplings)

    def index(self, key: int | str) -> int:
        if isinstance(key, str):
            if key in self.roles:
                return self.roles[key]
            for i, t in enumerate(self.transmons):
                if t.label == key:
                    return i
            raise KeyError(key)
        return int(key)

    def subset(self, indices: Sequence[int | str]) -> "DeviceConfig":
        """Sub-device on ``indices`` (in that order) keeping couplings among them."""
        idx = [self.index(i) for i in indices]
        pos = {old: new for new, old in enumerate(idx)}
        couplings = [
            Coupling((pos[c.pair[0]], pos[c.pair[1]]), c.strength)
            for c in self.couplings
            if c.pair[0] in pos and c.pair[1] in pos
        ]
        roles = {k: pos[v] for k, v in self.roles.items() if v in pos}
        return DeviceConfig([self.transmons[i] for i in idx], couplings, roles)

    def with_levels(self, levels: int) -> "DeviceConfig":
        ts = [TransmonParams(t.frequency, t.anharmonicity, t.t1, t.t2, levels, t.label) for t in self.transmons]
        return DeviceConfig(ts, self.couplings, self.roles)

    def check_triplet(self, c1: int, t: int, c2: int) -> None:
        if len({c1, t, c2}) != 3:
            raise DeviceConfigError("triplet indices must be distinct")
        if not (self.is_coupled(c1, t) and self.is_coupled(c2, t)):
            raise DeviceConfigError(f"controls {c1}, {c2} must both couple to target {t}")
        if self.is_coupled(c1, c2):
            raise DeviceConfigError(f"controls {c1} and {c2} must not be coupled")


def _require(obj: Mapping, key: str, path: str):
    if key not in obj:
        raise DeviceConfigError("missing required field", f"{path}.{key}")
    return obj[key]


def device_from_dict(data: Mapping) -> DeviceConfig:
    if not isinstance(data, Mapping):
        raise DeviceConfigError("top level must be an object")
    transmons = []
    for i, tr in enumerate(_require(data, "transmons", "")):
        path = f"transmons[{i}]"
        try:
            transmons.append(
                TransmonParams(
                    frequency=float(_require(tr, "frequency_ghz", path)) * GHZ,
                    anharmonicity=float(_require(tr, "anharmonicity_mhz", path)) * MHZ,
                    t1=float(tr.get("t1_us", DEFAULT_T1 / US)) * US,
                    t2=float(tr.get("t2_us", DEFAULT_T2 / US)) * US,
                    levels=int(tr.get("levels", DEFAULT_LEVELS)),
                    label=str(tr.get("label", "")),
                )
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DeviceConfigError):
                raise
            raise DeviceConfigError(str(exc), path) from exc
    couplings = []
    for i, c in enumerate(data.get("couplings", [])):
        path = f"couplings[{i}]"
        pair = _require(c, "pair", path)
        if len(pair) != 2:
            raise DeviceConfigError("pair must have two entries", f"{path}.pair")
        couplings.append(Coupling((int(pair[0]), int(pair[1])), float(_require(c, "strength_mhz", path)) * MHZ))
    roles = {str(k): int(v) for k, v in data.get("roles", {}).items()}
    return DeviceConfig(transmons, couplings, roles)


def device_to_dict(device: DeviceConfig) -> dict:
    return {
        "transmons": [
            {
                "label": t.label,
                "frequency_ghz": t.frequency / GHZ,
                "anharmonicity_mhz": t.anharmonicity / MHZ,
                "t1_us": t.t1 / US,
                "t2_us": t.t2 / US,
                "levels": t.levels,
            }
            for t in device.transmons
        ],
        "couplings": [{"pair": list(c.pair), "strength_mhz": c.strength / MHZ} for c in device.couplings],
        "roles": dict(device.roles),
    }


def load_device_config(source: str) -> DeviceConfig:
    """Parse a JSON device description (text, not a path)."""
    try:
        data = json.loads(source)
    except json.JSONDecodeError as exc:
        raise DeviceConfigError(f"parse error: {exc}") from exc
    return device_from_dict(data)


def load_device_file(path: str | Path) -> DeviceConfig:
    return load_device_config(Path(path).read_text())


def dump_device_config(device: DeviceConfig) -> str:
    return json.dumps(device_to_dict(device), indent=2)


# Order (D1, F1, D2, S, D3, F2, D4) = ibm_auckland qubits (5, 8, 9, 11, 13, 14, 16).
PAPER_LABELS = ("D1", "F1", "D2", "S", "D3", "F2", "D4")
PAPER_HW_QUBITS = (5, 8, 9, 11, 13, 14, 16)
PAPER_FREQUENCIES_GHZ = (4.99282, 5.20360, 5.08839, 5.05517, 5.01678, 5.16698, 4.96965)
# Measured coherences exist only for qubits 8, 11, 14 (F1, S, F2).
PAPER_COHERENCES_US = {"F1": (122.7, 73.4), "S": (134.8, 111.4), "F2": (159.7, 170.3)}
PAPER_EDGES = (("D1", "F1"), ("D2", "F1"), ("F1", "S"), ("S", "F2"), ("D3", "F2"), ("D4", "F2"))


def paper_device(levels: int = DEFAULT_LEVELS, coupling: float = DEFAULT_COUPLING) -> DeviceConfig:
    """The seven-qubit heavy-hex patch used for the parity experiments."""
    transmons = []
    for label, f in zip(PAPER_LABELS, PAPER_FREQUENCIES_GHZ):
        t1, t2 = PAPER_COHERENCES_US.get(label, (DEFAULT_T1 / US, DEFAULT_T2 / US))
        transmons.append(TransmonParams(f * GHZ, PAPER_ANHARMONICITY, t1 * US, t2 * US, levels, label))
    pos = {lab: i for i, lab in enumerate(PAPER_LABELS)}
    couplings = [Coupling((pos[a], pos[b]), coupling) for a, b in PAPER_EDGES]
    roles = dict(pos)
    roles.update({"c1": pos["F1"], "t": pos["S"], "c2": pos["F2"]})
    return DeviceConfig(transmons, couplings, roles)


def paper_triplet(levels: int = DEFAULT_LEVELS, coupling: float = DEFAULT_COUPLING) -> DeviceConfig:
    """The IRB triplet (8, 11, 14) as a 3-transmon device ordered (c1, t, c2)."""
    return paper_device(levels, coupling).subset(["c1", "t", "c2"])
