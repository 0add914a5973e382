"""Geometry, propagation, and link-budget arithmetic.

Everything here is a pure function of its inputs: path loss from a
log-distance model, per-RE RSRP, coupling loss with the TS 36.104 class
floor, Johnson-Nyquist noise, and uplink SINR.  All powers are dBm, all
gains dBi, all losses dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

# Thermal noise density at 290 K.
NOISE_DENSITY_DBM_PER_HZ = -174.0

# NB-IoT carriers are one PRB wide in every operation mode.
CARRIER_BANDWIDTH_HZ = 180_000.0

# Log-distance singularity guard.
MIN_DISTANCE_M = 10.0


class BsKind(Enum):
    WIDE_AREA = "wide_area"
    MEDIUM_RANGE = "medium_range"
    LOCAL_AREA = "local_area"
    HOME = "home"


# TS 36.104 base-station classes: (minimum coupling loss dB | None,
# max output power dBm | None for "no upper limit").
_MCL_DB = {
    BsKind.WIDE_AREA: 70.0,
    BsKind.MEDIUM_RANGE: 53.0,
    BsKind.LOCAL_AREA: 45.0,
    BsKind.HOME: None,
}
_MAX_POWER_DBM = {
    BsKind.WIDE_AREA: None,
    BsKind.MEDIUM_RANGE: 38.0,
    BsKind.LOCAL_AREA: 24.0,
}
_HOME_MAX_POWER_DBM = {1: 20.0, 2: 17.0, 4: 14.0, 8: 11.0}


@dataclass(frozen=True)
class BaseStationClass:
    """A TS 36.104 base-station class; home cells carry their port count."""

    kind: BsKind
    antenna_ports: int = 1

    def __post_init__(self):
        if self.kind is BsKind.HOME and self.antenna_ports not in _HOME_MAX_POWER_DBM:
            raise ValueError(
                f"home base station supports 1/2/4/8 antenna ports, got {self.antenna_ports}"
            )

    @property
    def min_coupling_loss_db(self) -> float | None:
        """Class coupling-loss floor; None when the class does not specify one."""
        return _MCL_DB[self.kind]

    @property
    def max_output_power_dbm(self) -> float | None:
        """Class output-power cap; None means unbounded."""
        if self.kind is BsKind.HOME:
            return _HOME_MAX_POWER_DBM[self.antenna_ports]
        return _MAX_POWER_DBM[self.kind]


WIDE_AREA = BaseStationClass(BsKind.WIDE_AREA)
MEDIUM_RANGE = BaseStationClass(BsKind.MEDIUM_RANGE)
LOCAL_AREA = BaseStationClass(BsKind.LOCAL_AREA)


def home_class(antenna_ports: int = 1) -> BaseStationClass:
    return BaseStationClass(BsKind.HOME, antenna_ports)


class CarrierMode(Enum):
    STANDALONE = "standalone"
    IN_BAND = "in_band"
    GUARD_BAND = "guard_band"


class CellRole(Enum):
    ANCHOR = "anchor"
    NON_ANCHOR = "non_anchor"


@dataclass(frozen=True)
class Position:
    """2-D point, metres."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("position coordinates must be finite")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class PropagationModel:
    """Log-distance model PL = a + b * log10(d_km), d clamped to >= 10 m."""

    a: float
    b: float


# Conventional system-simulation models: 2 GHz urban macro, and a steeper
# small-cell model standing in for indoor/below-rooftop deployments.
MACRO_PROPAGATION = PropagationModel(a=128.1, b=37.6)
SMALL_CELL_PROPAGATION = PropagationModel(a=140.7, b=36.7)


@dataclass(frozen=True)
class Cell:
    """One base station of the deployment."""

    id: str
    bs_class: BaseStationClass
    position: Position
    nrs_power_dbm: float
    antenna_gain_dbi: float = 0.0
    mode: CarrierMode = CarrierMode.STANDALONE
    frequency_index: int = 0
    role: CellRole = CellRole.ANCHOR
    cell_identity: int = 0
    anchor_prb: int | None = None
    non_anchor_prbs: tuple[int, ...] = ()
    boost_db: float = 0.0
    propagation: PropagationModel = field(default=MACRO_PROPAGATION)
    # UE-facing config the cell advertises: selection threshold broadcast for
    # non-anchors, and the serving-cell-configured uplink power cap.
    selection_threshold_dbm: float | None = None
    p_cmax_dbm: float | None = None
    s1: bool = False
    x2: tuple[str, ...] = ()

    def __post_init__(self):
        cap = self.bs_class.max_output_power_dbm
        if cap is not None and self.nrs_power_dbm + self.boost_db > cap:
            raise ValueError(
                f"cell {self.id!r}: per-RE power {self.nrs_power_dbm} dBm + boost "
                f"{self.boost_db} dB exceeds the {self.bs_class.kind.value} cap of {cap} dBm"
            )
        if self.role is CellRole.ANCHOR and self.anchor_prb is None:
            raise ValueError(f"cell {self.id!r}: anchor role requires an anchor PRB")
        if self.role is CellRole.NON_ANCHOR and self.anchor_prb is not None:
            raise ValueError(f"cell {self.id!r}: non-anchor role must not carry an anchor PRB")


@dataclass(frozen=True)
class LinkMeasure:
    """Per (UE, cell) link quantities."""

    path_loss_db: float
    coupling_loss_db: float
    rsrp_dbm: float


def path_loss(model: PropagationModel, tx: Position, rx: Position) -> float:
    """Log-distance path loss in dB, monotone nondecreasing in distance."""
    d_km = max(tx.distance_to(rx), MIN_DISTANCE_M) / 1000.0
    return model.a + model.b * math.log10(d_km)


def rsrp(cell: Cell, ue_pos: Position, model: PropagationModel) -> float:
    """Per-RE reference-signal received power in dBm."""
    return cell.nrs_power_dbm + cell.antenna_gain_dbi - path_loss(model, cell.position, ue_pos)


def coupling_loss(
    cell: Cell, ue_pos: Position, ue_antenna_gain_dbi: float, model: PropagationModel
) -> float:
    """Total loss between BS and UE ports, clamped to the class MCL floor."""
    raw = path_loss(model, cell.position, ue_pos) - cell.antenna_gain_dbi - ue_antenna_gain_dbi
    floor = cell.bs_class.min_coupling_loss_db
    if floor is not None:
        return max(raw, floor)
    return raw


def thermal_noise_dbm(bandwidth_hz: float) -> float:
    """Johnson-Nyquist noise over the given bandwidth, 0 dB noise figure."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return NOISE_DENSITY_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def ul_sinr_db(signal_dbm: float, interferers_dbm: list[float], bandwidth_hz: float) -> float:
    """Uplink SINR against the linear sum of interferers plus thermal noise.

    Callers are responsible for passing only co-frequency interferers.  With
    no interferers this reduces exactly to signal minus thermal noise.
    """
    noise_dbm = thermal_noise_dbm(bandwidth_hz)
    if not interferers_dbm:
        return signal_dbm - noise_dbm
    total_mw = sum(dbm_to_mw(p) for p in interferers_dbm) + dbm_to_mw(noise_dbm)
    return signal_dbm - mw_to_dbm(total_mw)
