"""Foster-ladder thermal networks for the MOSFET and the diode."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .device import ParameterError

# Case-to-ambient stage used when a profile gives none (not datasheet data).
CASE_PATH_DEFAULT = ((0.5, 50.0),)


@dataclass(frozen=True)
class FosterLadder:
    """Junction-to-case stages followed by an optional case-to-ambient path.

    Each entry is ``(r_th [K/W], c_th [J/K])``.
    """

    stages: tuple[tuple[float, float], ...]
    case_to_ambient: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple((float(r), float(c)) for r, c in self.stages))
        object.__setattr__(self, "case_to_ambient",
                           tuple((float(r), float(c)) for r, c in self.case_to_ambient))
        if not self.stages:
            raise ParameterError("a Foster ladder needs at least one junction-to-case stage")
        for r, c in self.stages + self.case_to_ambient:
            if not (r > 0 and c > 0):
                raise ParameterError(f"thermal stage values must be positive, got r={r}, c={c}")

    @property
    def r_junction_case(self) -> float:
        return sum(r for r, _ in self.stages)

    @property
    def r_total(self) -> float:
        return self.r_junction_case + sum(r for r, _ in self.case_to_ambient)

    def with_case_path(self, path=CASE_PATH_DEFAULT) -> FosterLadder:
        return FosterLadder(self.stages, tuple(path))


@dataclass(frozen=True)
class ThermalState:
    junction_drops: tuple[float, ...]
    case_drops: tuple[float, ...]
    t_amb: float

    @classmethod
    def ambient(cls, ladder: FosterLadder, t_amb: float) -> ThermalState:
        return cls((0.0,) * len(ladder.stages), (0.0,) * len(ladder.case_to_ambient), t_amb)

    @property
    def t_c(self) -> float:
        return self.t_amb + sum(self.case_drops)

    @property
    def t_j(self) -> float:
        return self.t_c + sum(self.junction_drops)


def _advance(drops, stages, p, dt):
    out = []
    for d, (r, c) in zip(drops, stages):
        rise = -math.expm1(-dt / (r * c))
        out.append(d * (1.0 - rise) + p * r * rise)
    return tuple(out)


def foster_advance(state: ThermalState, ladder: FosterLadder, p_loss: float, dt: float) -> ThermalState:
    """Exact update of every RC stage for power held constant over ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if p_loss < 0:
        raise ValueError(f"power must be non-negative, got {p_loss}")
    if len(state.junction_drops) != len(ladder.stages) or len(state.case_drops) != len(ladder.case_to_ambient):
        raise ValueError("thermal state does not match the ladder shape")
    return ThermalState(
        _advance(state.junction_drops, ladder.stages, p_loss, dt),
        _advance(state.case_drops, ladder.case_to_ambient, p_loss, dt),
        state.t_amb,
    )


def step_response(ladder: FosterLadder, p_loss: float, t: float) -> float:
    """Junction rise above ambient at time ``t`` after a power step from rest."""
    return sum(-p_loss * r * math.expm1(-t / (r * c))
               for r, c in ladder.stages + ladder.case_to_ambient)


def steady_state_rise(ladder: FosterLadder, p_loss: float, include_case: bool = True) -> float:
    if p_loss < 0:
        raise ValueError(f"power must be non-negative, got {p_loss}")
    return p_loss * (ladder.r_total if include_case else ladder.r_junction_case)
