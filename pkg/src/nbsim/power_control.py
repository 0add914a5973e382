"""Uplink and downlink transmit-power rules.

NPUSCH follows the TS 36.213 open-loop rule: below two repetitions the UE
picks min(P_CMAX, 10*log10(M) + P_O + alpha * PL); at two or more
repetitions it transmits at P_CMAX outright.  NPRACH mirrors the same
structure with a preamble receive target.  The remaining helpers cover the
small-cell P_CMAX policy, per-RE downlink power with the in-band boost,
and the CSG interference-driven uplift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .cell_selection import CeLevel
from .radio import BsKind, CarrierMode, Cell

M_VALUES = (0.25, 1.0, 3.0, 6.0, 12.0)

# Repetition counts at or above this transmit at full configured power.
FULL_POWER_REPETITIONS = 2


@dataclass(frozen=True)
class NpuschPowerParams:
    """Inputs to the NPUSCH power rule for one transmission.

    `j` selects which higher-layer (P_O, alpha) pair is in force; alpha is
    pinned to 1 whenever j = 2, so the value passed in is ignored there.
    """

    p_cmax_dbm: float
    p_o_npusch_dbm: float
    alpha: float
    m_npusch: float
    path_loss_db: float
    repetitions: int
    j: int = 1

    def __post_init__(self):
        if self.m_npusch not in M_VALUES:
            raise ValueError(f"m_npusch must be one of {M_VALUES}, got {self.m_npusch}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        if self.j == 2:
            object.__setattr__(self, "alpha", 1.0)
        elif not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1] for j = 1")


@dataclass(frozen=True)
class SubcarrierAllocation:
    """An NPUSCH allocation: spacing in kHz and tone count."""

    spacing_khz: float
    num_subcarriers: int

    def __post_init__(self):
        if self.spacing_khz not in (3.75, 15.0):
            raise ValueError("subcarrier spacing must be 3.75 or 15 kHz")
        if self.num_subcarriers not in (1, 3, 6, 12):
            raise ValueError("subcarrier count must be 1, 3, 6 or 12")
        if self.spacing_khz == 3.75 and self.num_subcarriers != 1:
            raise ValueError("3.75 kHz spacing permits only single-tone allocations")


def m_factor(alloc: SubcarrierAllocation) -> float:
    """Bandwidth factor M for the open-loop rule: 1/4 single-tone at
    3.75 kHz, otherwise the tone count."""
    if alloc.spacing_khz == 3.75:
        return 0.25
    return float(alloc.num_subcarriers)


def npusch_tx_power(p: NpuschPowerParams) -> float:
    """NPUSCH transmit power in dBm for one transmission."""
    if p.repetitions >= FULL_POWER_REPETITIONS:
        return p.p_cmax_dbm
    open_loop = 10.0 * math.log10(p.m_npusch) + p.p_o_npusch_dbm + p.alpha * p.path_loss_db
    return min(p.p_cmax_dbm, open_loop)


def nprach_tx_power(
    p_cmax_dbm: float,
    preamble_rx_target_dbm: float,
    path_loss_db: float,
    coverage_level: CeLevel,
) -> float:
    """NPRACH preamble power: open-loop toward a receive target in normal
    coverage, full power once repetitions kick in at the enhanced levels."""
    if coverage_level is CeLevel.CE0:
        return min(p_cmax_dbm, preamble_rx_target_dbm + path_loss_db)
    return p_cmax_dbm


class PCmaxPolicy(Enum):
    """How the effective P_CMAX is chosen in small-cell deployments."""

    INTERFERENCE_SAFE = "interference_safe"
    COVERAGE_FIRST = "coverage_first"


def small_cell_p_cmax(
    ue_max_dbm: float, cell_configured_dbm: float, policy: PCmaxPolicy
) -> float:
    """Effective P_CMAX: the serving cell's reduced value to contain uplink
    interference, or the UE hardware maximum to favour coverage and battery."""
    if cell_configured_dbm > ue_max_dbm:
        raise ValueError(
            f"cell-configured P_CMAX {cell_configured_dbm} dBm exceeds the UE "
            f"maximum of {ue_max_dbm} dBm"
        )
    if policy is PCmaxPolicy.INTERFERENCE_SAFE:
        return cell_configured_dbm
    return ue_max_dbm


@dataclass(frozen=True)
class DlPowerPolicy:
    """Per-RE downlink power with an optional 6 dB in-band/guard-band boost."""

    per_re_power_dbm: float
    boost_db: float = 0.0

    def __post_init__(self):
        if self.boost_db not in (0.0, 6.0):
            raise ValueError("boost must be 0 or 6 dB")


def dl_re_power(cell: Cell, policy: DlPowerPolicy) -> float:
    """Effective per-RE downlink power in dBm.

    The boost applies only to wide-area cells in in-band or guard-band
    operation; dense small-cell layouts cannot afford it, so it is
    suppressed for every other class.  Results above the class output cap
    are configuration errors.
    """
    boost = policy.boost_db
    if cell.bs_class.kind is not BsKind.WIDE_AREA or cell.mode is CarrierMode.STANDALONE:
        boost = 0.0
    result = policy.per_re_power_dbm + boost
    cap = cell.bs_class.max_output_power_dbm
    if cap is not None and result > cap:
        raise ValueError(
            f"cell {cell.id!r}: per-RE power {result} dBm exceeds the class cap of {cap} dBm"
        )
    return result


def csg_power_uplift(iot_db: float, cap_db: float) -> float:
    """Closed-subscriber-group uplift: grows with the measured
    interference-over-thermal, never negative, clamped at the cap."""
    if cap_db < 0:
        raise ValueError("uplift cap must be nonnegative")
    return min(max(iot_db, 0.0), cap_db)
