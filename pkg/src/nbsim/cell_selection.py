"""Cell selection, decoupled DL/UL association, and coverage levels.

Four camping rules are provided: plain strongest-RSRP, least path loss,
a hybrid that falls back to RSRP outside normal coverage, and per-class
RSRP offsets that bias selection toward small cells.  Decoupled operation
associates the downlink with the strongest cell and the uplink with the
least-path-loss cell.  Ties always break toward the lowest cell id so
results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence, Union

from .radio import (
    BaseStationClass,
    BsKind,
    Cell,
    LinkMeasure,
    PropagationModel,
    path_loss,
)


@dataclass(frozen=True)
class RsrpOnly:
    """Camp on the strongest downlink."""


@dataclass(frozen=True)
class PathLossBased:
    """Camp on the least path loss, derived from broadcast NRS power."""


@dataclass(frozen=True)
class HybridSelection:
    """Least path loss while in normal coverage, strongest RSRP otherwise."""

    normal_coverage_rsrp_threshold_dbm: float


@dataclass(frozen=True)
class ClassOffsetSelection:
    """Strongest RSRP after adding a per-class offset; classes without an
    entry get 0 dB."""

    offsets_db: Mapping[BsKind, float] = field(default_factory=dict)


@dataclass(frozen=True)
class DecoupledSelection:
    """Split association: strongest cell downlink, least path loss uplink."""


SelectionPolicy = Union[
    RsrpOnly, PathLossBased, HybridSelection, ClassOffsetSelection, DecoupledSelection
]


class CeLevel(Enum):
    CE0 = "CE0"
    CE1 = "CE1"
    CE2 = "CE2"
    OUT_OF_COVERAGE = "OOC"


@dataclass(frozen=True)
class CoverageLevel:
    level: CeLevel
    repetitions: int | None

    def __post_init__(self):
        if self.level is CeLevel.OUT_OF_COVERAGE:
            if self.repetitions is not None:
                raise ValueError("out-of-coverage carries no repetition count")
        elif self.repetitions is None or self.repetitions < 1:
            raise ValueError("served coverage levels need a positive repetition count")


@dataclass(frozen=True)
class CoverageThresholds:
    """Coupling-loss boundaries for CE0/CE1/CE2 and their repetition counts.

    The outermost bound is the maximum coupling loss the system still
    serves; anything beyond it is out of coverage.
    """

    bounds_db: tuple[float, float, float] = (144.0, 154.0, 164.0)
    repetitions: tuple[int, int, int] = (1, 8, 32)

    def __post_init__(self):
        if not (self.bounds_db[0] < self.bounds_db[1] < self.bounds_db[2]):
            raise ValueError("coverage bounds must be strictly increasing")
        if not (1 <= self.repetitions[0] <= self.repetitions[1] <= self.repetitions[2]):
            raise ValueError("repetition counts must be positive and nondecreasing")

    @property
    def max_coupling_loss_db(self) -> float:
        return self.bounds_db[2]


@dataclass(frozen=True)
class Association:
    """Serving cells of one UE; dl == ul except under decoupled operation."""

    dl_cell_id: str
    ul_cell_id: str


@dataclass(frozen=True)
class CellMeasure:
    """One cell's link measurement as seen by one UE."""

    cell_id: str
    bs_class: BaseStationClass
    link: LinkMeasure


def measure_links(
    ue_pos,
    cells: Sequence[Cell],
    model: PropagationModel | None = None,
    *,
    ue_antenna_gain_dbi: float = 0.0,
    shadowing_db: Mapping[str, float] | None = None,
) -> list[CellMeasure]:
    """Measure every cell from the UE position.

    `model` overrides each cell's own propagation model when given.
    `shadowing_db` holds per-cell shadow-fading offsets already drawn for
    this drop, so repeated measurements of a link agree.
    """
    if not cells:
        raise ValueError("cannot measure an empty cell list")
    out = []
    for cell in cells:
        m = model if model is not None else cell.propagation
        shadow = shadowing_db.get(cell.id, 0.0) if shadowing_db else 0.0
        pl = path_loss(m, cell.position, ue_pos) + shadow
        out.append(
            CellMeasure(
                cell_id=cell.id,
                bs_class=cell.bs_class,
                link=LinkMeasure(
                    path_loss_db=pl,
                    coupling_loss_db=_floored(pl - cell.antenna_gain_dbi - ue_antenna_gain_dbi, cell),
                    rsrp_dbm=cell.nrs_power_dbm + cell.antenna_gain_dbi - pl,
                ),
            )
        )
    return out


def _floored(raw_cl: float, cell: Cell) -> float:
    floor = cell.bs_class.min_coupling_loss_db
    return max(raw_cl, floor) if floor is not None else raw_cl


def _best_rsrp(measures: Sequence[CellMeasure]) -> CellMeasure:
    return min(measures, key=lambda m: (-m.link.rsrp_dbm, m.cell_id))


def _least_path_loss(measures: Sequence[CellMeasure]) -> CellMeasure:
    return min(measures, key=lambda m: (m.link.path_loss_db, m.cell_id))


def select_cell(measures: Sequence[CellMeasure], policy: SelectionPolicy) -> str:
    """Pick the serving cell id under the given policy."""
    if not measures:
        raise ValueError("cannot select from an empty measurement list")
    if isinstance(policy, RsrpOnly):
        return _best_rsrp(measures).cell_id
    if isinstance(policy, PathLossBased):
        return _least_path_loss(measures).cell_id
    if isinstance(policy, HybridSelection):
        best = _best_rsrp(measures)
        if best.link.rsrp_dbm >= policy.normal_coverage_rsrp_threshold_dbm:
            return _least_path_loss(measures).cell_id
        return best.cell_id
    if isinstance(policy, ClassOffsetSelection):
        return min(
            measures,
            key=lambda m: (
                -(m.link.rsrp_dbm + policy.offsets_db.get(m.bs_class.kind, 0.0)),
                m.cell_id,
            ),
        ).cell_id
    if isinstance(policy, DecoupledSelection):
        return decoupled_association(measures).ul_cell_id
    raise TypeError(f"unknown selection policy: {policy!r}")


def decoupled_association(measures: Sequence[CellMeasure]) -> Association:
    """Strongest cell for the downlink, least path loss for the uplink."""
    if not measures:
        raise ValueError("cannot associate from an empty measurement list")
    return Association(
        dl_cell_id=_best_rsrp(measures).cell_id,
        ul_cell_id=_least_path_loss(measures).cell_id,
    )


def associate(measures: Sequence[CellMeasure], policy: SelectionPolicy) -> Association:
    """Full association under the policy; dl == ul unless decoupled."""
    if isinstance(policy, DecoupledSelection):
        return decoupled_association(measures)
    chosen = select_cell(measures, policy)
    return Association(dl_cell_id=chosen, ul_cell_id=chosen)


def assign_coverage_level(
    coupling_loss_db: float, thresholds: CoverageThresholds = CoverageThresholds()
) -> CoverageLevel:
    """Map a coupling loss onto a coverage level and repetition count."""
    for level, bound, reps in zip(
        (CeLevel.CE0, CeLevel.CE1, CeLevel.CE2), thresholds.bounds_db, thresholds.repetitions
    ):
        if coupling_loss_db <= bound:
            return CoverageLevel(level, reps)
    return CoverageLevel(CeLevel.OUT_OF_COVERAGE, None)


def escalate(level: CeLevel) -> CeLevel:
    """Next coverage level for a failed random-access attempt."""
    order = (CeLevel.CE0, CeLevel.CE1, CeLevel.CE2)
    if level is CeLevel.CE2:
        return CeLevel.CE2
    if level is CeLevel.OUT_OF_COVERAGE:
        raise ValueError("cannot escalate out of coverage")
    return order[order.index(level) + 1]


def repetitions_for(level: CeLevel, thresholds: CoverageThresholds) -> int:
    idx = (CeLevel.CE0, CeLevel.CE1, CeLevel.CE2).index(level)
    return thresholds.repetitions[idx]
