"""Circulation constants: typed container plus the plain-text file format.

The on-disk format is one ``name = value`` per line, ``#`` comments, units
documented inline. ``pump_q0`` is a comma-separated 9-entry list.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, fields

from ..errors import ContractViolation


@dataclass(frozen=True)
class CircConstants:
    """Fixed element values of the lumped-parameter circulation."""

    e_min: float = 0.06       # diastolic LV elastance, mmHg/mL
    v0: float = 10.0          # LV unstressed volume, mL
    r_prox: float = 0.05      # characteristic aortic impedance, mmHg*s/mL
    r_sys: float = 1.0        # systemic resistance, mmHg*s/mL
    c_ao: float = 1.5         # aortic compliance, mL/mmHg
    p_ven: float = 11.0       # venous filling pressure, mmHg
    r_mitral: float = 0.012    # filling resistance, mmHg*s/mL
    pump_q0: tuple = (0.4, 1.0, 1.6, 2.2, 2.8, 3.4, 4.0, 4.6, 5.2)  # L/min per level
    pump_slope: float = 0.010  # (L/min)/mmHg
    diode_softness: float = 0.02  # mmHg
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "pump_q0", tuple(float(q) for q in self.pump_q0))
        if len(self.pump_q0) != 9:
            raise ContractViolation("pump_q0 must have 9 entries, one per level")
        diffs = [b - a for a, b in zip(self.pump_q0, self.pump_q0[1:])]
        if any(d <= 0 for d in diffs):
            raise ContractViolation("pump_q0 must be strictly increasing over levels")
        for name in ("r_prox", "r_sys", "c_ao", "r_mitral", "e_min", "pump_slope"):
            if getattr(self, name) <= 0:
                raise ContractViolation(f"{name} must be positive")


def _parse_value(raw: str):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) > 1:
        return tuple(float(p) for p in parts)
    try:
        return int(parts[0])
    except ValueError:
        return float(parts[0])


def load_constants(path) -> CircConstants:
    """Parse a constants file into a :class:`CircConstants`."""
    known = {f.name for f in fields(CircConstants)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractViolation(f"{path}:{lineno}: expected `name = value`")
            name, _, raw = line.partition("=")
            name = name.strip()
            if name not in known:
                raise ContractViolation(f"{path}:{lineno}: unknown constant {name!r}")
            values[name] = _parse_value(raw)
    if "version" not in values:
        raise ContractViolation(f"{path}: missing mandatory `version` field")
    return CircConstants(**values)


def _packaged(name: str) -> CircConstants:
    ref = importlib.resources.files("mcsim.cardio").joinpath("data", name)
    with importlib.resources.as_file(ref) as path:
        return load_constants(path)


def default_constants() -> CircConstants:
    """Constants shipped for the nominal simulated domain."""
    return _packaged("default_constants.txt")


def realproxy_constants() -> CircConstants:
    """Shifted constants used by the synthetic real-proxy cohort."""
    return _packaged("realproxy_constants.txt")
