"""Deployment architectures, topology validation, and the UE attach flow.

Three ways of wiring small cells into the network are modeled:

* ``independent`` — every cell is a full base station with its own core
  link and its own broadcast; the UE treats all cells alike.
* ``anchored`` — only anchor cells reach the core and broadcast system
  information; the remaining cells transmit reference signals only and are
  reached through a sideband link to an anchor, which advertises them
  (frequency, NRS power, selection threshold) so UEs can measure and pick
  them before random access.
* ``shared_identity`` — small cells reuse the macro's cell identity and
  carry no random-access resources of their own; the UE always performs
  random access on the macro, whose attached small cells report preamble
  receptions back so the macro can hand the UE over in the final
  random-access message.

Attach runs the classic narrowband sequence — synchronize, read the
broadcast, random access with coverage-level escalation, grant — and
records every step as a trace event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence, Union

from .cell_selection import (
    Association,
    CellMeasure,
    CeLevel,
    CoverageLevel,
    CoverageThresholds,
    DecoupledSelection,
    SelectionPolicy,
    assign_coverage_level,
    associate,
    escalate,
    measure_links,
    repetitions_for,
)
from .power_control import nprach_tx_power
from .radio import (
    BsKind,
    CARRIER_BANDWIDTH_HZ,
    Cell,
    CellRole,
    Position,
    thermal_noise_dbm,
)


class ArchitectureKind(Enum):
    INDEPENDENT = "independent"
    ANCHORED = "anchored"
    SHARED_IDENTITY = "shared_identity"


@dataclass(frozen=True)
class Topology:
    """A fixed set of cells deployed under one architecture."""

    cells: tuple[Cell, ...]
    kind: ArchitectureKind

    def __post_init__(self):
        if not self.cells:
            raise ValueError("a topology needs at least one cell")

    @cached_property
    def by_id(self) -> Mapping[str, Cell]:
        return {c.id: c for c in self.cells}

    @property
    def anchors(self) -> tuple[Cell, ...]:
        return tuple(c for c in self.cells if c.role is CellRole.ANCHOR)

    @property
    def s1_links(self) -> frozenset[str]:
        return frozenset(c.id for c in self.cells if c.s1)

    @property
    def x2_links(self) -> frozenset[tuple[str, str]]:
        pairs = set()
        for c in self.cells:
            for peer in c.x2:
                pairs.add(tuple(sorted((c.id, peer))))
        return frozenset(pairs)

    def x2_peers(self, cell_id: str) -> tuple[Cell, ...]:
        """Cells reachable over the sideband link, in id order."""
        ids = set(self.by_id[cell_id].x2)
        ids.update(c.id for c in self.cells if cell_id in c.x2)
        ids.discard(cell_id)
        return tuple(self.by_id[i] for i in sorted(ids) if i in self.by_id)


@dataclass(frozen=True)
class Violation:
    """One broken deployment rule, as data rather than an exception."""

    rule: str
    cell_ids: tuple[str, ...]
    message: str


def validate_topology(t: Topology) -> list[Violation]:
    """Check every deployment rule; an empty list means the topology is valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for c in t.cells:
        if c.id in seen:
            out.append(Violation("duplicate-cell-id", (c.id,), f"cell id '{c.id}' appears more than once"))
        seen.add(c.id)
        for peer in c.x2:
            if peer == c.id:
                out.append(Violation("x2-self-peer", (c.id,), f"cell '{c.id}' lists itself as a sideband peer"))
            elif peer not in {x.id for x in t.cells}:
                out.append(Violation("unknown-x2-peer", (c.id,), f"cell '{c.id}' lists unknown sideband peer '{peer}'"))

    if t.kind is ArchitectureKind.INDEPENDENT:
        for c in t.cells:
            if not c.s1:
                out.append(
                    Violation(
                        "independent-missing-s1",
                        (c.id,),
                        f"cell '{c.id}' must hold its own core-network link in a stand-alone deployment",
                    )
                )
            if c.role is not CellRole.ANCHOR:
                out.append(
                    Violation(
                        "independent-not-broadcasting",
                        (c.id,),
                        f"cell '{c.id}' must broadcast its own system information in a stand-alone deployment",
                    )
                )
    elif t.kind is ArchitectureKind.ANCHORED:
        for c in t.cells:
            if c.role is CellRole.ANCHOR:
                if not c.s1:
                    out.append(
                        Violation(
                            "anchored-anchor-missing-s1",
                            (c.id,),
                            f"anchor cell '{c.id}' must hold the core-network link",
                        )
                    )
            else:
                if c.s1:
                    out.append(
                        Violation(
                            "anchored-non-anchor-has-s1",
                            (c.id,),
                            f"cell '{c.id}' must reach the core through its anchor, not a direct link",
                        )
                    )
                if not any(p.role is CellRole.ANCHOR for p in t.x2_peers(c.id)):
                    out.append(
                        Violation(
                            "anchored-non-anchor-missing-x2",
                            (c.id,),
                            f"cell '{c.id}' has no sideband link to any anchor",
                        )
                    )
    elif t.kind is ArchitectureKind.SHARED_IDENTITY:
        for c in t.cells:
            if c.bs_class.kind is BsKind.WIDE_AREA:
                if c.role is not CellRole.ANCHOR:
                    out.append(
                        Violation(
                            "shared-macro-not-broadcasting",
                            (c.id,),
                            f"wide-area cell '{c.id}' must broadcast in a shared-identity deployment",
                        )
                    )
                if not c.s1:
                    out.append(
                        Violation(
                            "shared-macro-missing-s1",
                            (c.id,),
                            f"wide-area cell '{c.id}' must hold the core-network link",
                        )
                    )
            else:
                if c.role is CellRole.ANCHOR:
                    out.append(
                        Violation(
                            "shared-small-cell-broadcasts",
                            (c.id,),
                            f"small cell '{c.id}' reuses the macro identity and must not run "
                            "random-access or paging resources of its own",
                        )
                    )
                if c.s1:
                    out.append(
                        Violation(
                            "shared-small-cell-has-s1",
                            (c.id,),
                            f"small cell '{c.id}' must not hold a core-network link",
                        )
                    )
                linked = [p for p in t.x2_peers(c.id) if p.role is CellRole.ANCHOR]
                if not linked:
                    out.append(
                        Violation(
                            "shared-small-cell-missing-x2",
                            (c.id,),
                            f"small cell '{c.id}' has no sideband link to a broadcasting macro",
                        )
                    )
                for a in linked:
                    if a.cell_identity != c.cell_identity:
                        out.append(
                            Violation(
                                "shared-identity-mismatch",
                                (c.id, a.id),
                                f"small cell '{c.id}' (identity {c.cell_identity}) does not share "
                                f"the identity of its macro '{a.id}' ({a.cell_identity})",
                            )
                        )
    return out


@dataclass(frozen=True)
class NonAnchorEntry:
    """What an anchor advertises about one attached non-anchor cell."""

    cell_id: str
    frequency_index: int
    nrs_ports: int
    nrs_power_dbm: float
    selection_threshold_dbm: float | None


@dataclass(frozen=True)
class BroadcastInfo:
    """System information an anchor broadcasts: its peer anchors plus the
    measurement data for every non-anchor it fronts."""

    source_cell_id: str
    anchor_ids: tuple[str, ...]
    non_anchors: tuple[NonAnchorEntry, ...]


def build_broadcast(anchor: Cell, t: Topology) -> BroadcastInfo:
    """Assemble the broadcast an anchor transmits in an anchored deployment."""
    if t.kind is not ArchitectureKind.ANCHORED:
        raise ValueError("broadcast lists exist only in anchored deployments")
    if anchor.role is not CellRole.ANCHOR:
        raise ValueError(f"cell '{anchor.id}' is not an anchor and broadcasts nothing")
    entries = tuple(
        NonAnchorEntry(
            cell_id=p.id,
            frequency_index=p.frequency_index,
            nrs_ports=p.bs_class.antenna_ports,
            nrs_power_dbm=p.nrs_power_dbm,
            selection_threshold_dbm=p.selection_threshold_dbm,
        )
        for p in t.x2_peers(anchor.id)
        if p.role is CellRole.NON_ANCHOR
    )
    return BroadcastInfo(
        source_cell_id=anchor.id,
        anchor_ids=tuple(c.id for c in t.anchors),
        non_anchors=entries,
    )


# --- UE attach state machine ------------------------------------------------

OUT_OF_COVERAGE = "out_of_coverage"
RACH_FAILED = "rach_failed"


@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class Synchronized:
    cell_id: str


@dataclass(frozen=True)
class BroadcastAcquired:
    cell_id: str


@dataclass(frozen=True)
class RachInProgress:
    attempt: int
    target: str


@dataclass(frozen=True)
class Granted:
    cell_id: str


@dataclass(frozen=True)
class Connected:
    association: Association
    coverage: CoverageLevel


@dataclass(frozen=True)
class Failed:
    reason: str


UeAttachState = Union[Idle, Synchronized, BroadcastAcquired, RachInProgress, Granted, Connected, Failed]


@dataclass(frozen=True)
class TraceEvent:
    """One line of the attach trace."""

    t: int
    ue_id: str
    label: str
    cell_id: str | None = None
    rsrp_dbm: float | None = None
    pl_db: float | None = None
    reason: str | None = None


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}"


def format_event(e: TraceEvent) -> str:
    line = (
        f"t={e.t} ue={e.ue_id} {e.label} cell={e.cell_id if e.cell_id is not None else '-'} "
        f"rsrp={_fmt(e.rsrp_dbm)} pl={_fmt(e.pl_db)}"
    )
    if e.reason is not None:
        line += f" reason={e.reason}"
    return line


def format_trace(events: Sequence[TraceEvent]) -> str:
    return "".join(format_event(e) + "\n" for e in events)


@dataclass(frozen=True)
class RachResources:
    """Random-access resources drawn by the UE before its first attempt."""

    prb: int
    subcarrier: int
    time_slot: int


@dataclass(frozen=True)
class PreambleReport:
    """A small cell's report on one overheard random-access preamble.

    The measured SNR is carried only when the preamble was detected.
    """

    small_cell_id: str
    ue_id: str
    received: bool
    measured_ul_snr_db: float | None

    def __post_init__(self):
        if self.received and self.measured_ul_snr_db is None:
            raise ValueError("a detected preamble must carry its measured SNR")
        if not self.received and self.measured_ul_snr_db is not None:
            raise ValueError("an undetected preamble carries no SNR")


class Msg4Decision(Enum):
    STAY = "stay"
    REDIRECT_TO_SMALL_CELL = "redirect_to_small_cell"


def msg4_redirect(report: PreambleReport, redirect_snr_threshold_db: float) -> Msg4Decision:
    """Decide, from one preamble report, whether the final random-access
    message moves the UE onto the reporting small cell."""
    if report.received and report.measured_ul_snr_db >= redirect_snr_threshold_db:
        return Msg4Decision.REDIRECT_TO_SMALL_CELL
    return Msg4Decision.STAY


@dataclass(frozen=True)
class AttachParams:
    """Knobs of the attach procedure shared by all architectures."""

    thresholds: CoverageThresholds = field(default_factory=CoverageThresholds)
    rach_detection_snr_db: float = 0.0
    msg4_redirect_snr_db: float = 0.0
    max_rach_attempts: int = 3
    preamble_rx_target_dbm: float = -110.0
    ue_p_cmax_dbm: float = 23.0
    ue_antenna_gain_dbi: float = 0.0

    def __post_init__(self):
        if self.max_rach_attempts < 1:
            raise ValueError("at least one random-access attempt is required")


@dataclass(frozen=True)
class AttachResult:
    """Final state plus everything the engine needs downstream."""

    state: UeAttachState
    events: tuple[TraceEvent, ...]
    measures: tuple[CellMeasure, ...]
    association: Association | None
    coverage: CoverageLevel | None
    rach_target: str | None
    rach_attempts: int
    rach_tx_power_dbm: float | None
    rach_resources: RachResources | None = None
    redirected: bool = False


class _Tracer:
    def __init__(self, ue_id: str):
        self.ue_id = ue_id
        self.events: list[TraceEvent] = []

    def add(self, label, cell_id=None, rsrp=None, pl=None, reason=None):
        self.events.append(
            TraceEvent(len(self.events), self.ue_id, label, cell_id, rsrp, pl, reason)
        )

    def measure(self, m: CellMeasure):
        self.add("MEASURE", m.cell_id, m.link.rsrp_dbm, m.link.path_loss_db)


def preamble_report(
    small_cell: Cell,
    ue_id: str,
    ue_pos: Position,
    tx_power_dbm: float,
    t: Topology,
    *,
    detection_snr_db: float = 0.0,
    ue_antenna_gain_dbi: float = 0.0,
    shadowing_db: Mapping[str, float] | None = None,
) -> PreambleReport:
    """What one small cell reports after listening for a macro-directed
    preamble in a shared-identity deployment."""
    if t.kind is not ArchitectureKind.SHARED_IDENTITY:
        raise ValueError("preamble reports exist only in shared-identity deployments")
    m = measure_links(
        ue_pos, [small_cell], ue_antenna_gain_dbi=ue_antenna_gain_dbi, shadowing_db=shadowing_db
    )[0]
    snr = tx_power_dbm - m.link.coupling_loss_db - thermal_noise_dbm(CARRIER_BANDWIDTH_HZ)
    received = snr >= detection_snr_db
    return PreambleReport(
        small_cell_id=small_cell.id,
        ue_id=ue_id,
        received=received,
        measured_ul_snr_db=snr if received else None,
    )


def _run_rach(
    tr: _Tracer,
    target: CellMeasure,
    grantor: CellMeasure,
    params: AttachParams,
) -> tuple[bool, int, CeLevel, float]:
    """Random access with escalation to the next coverage level on failure.

    Returns (granted, attempts used, final level, last preamble tx power).
    """
    noise = thermal_noise_dbm(CARRIER_BANDWIDTH_HZ)
    level = assign_coverage_level(target.link.coupling_loss_db, params.thresholds).level
    tx = params.ue_p_cmax_dbm
    for attempt in range(1, params.max_rach_attempts + 1):
        # The UE compensates its estimated uplink loss; the estimate is the
        # coupling loss so open-loop preambles land on the receive target
        # even where the class floor binds.
        tx = nprach_tx_power(
            params.ue_p_cmax_dbm, params.preamble_rx_target_dbm, target.link.coupling_loss_db, level
        )
        tr.add("RACH_IN_PROGRESS", target.cell_id, target.link.rsrp_dbm, target.link.path_loss_db)
        snr = tx - target.link.coupling_loss_db - noise
        if snr >= params.rach_detection_snr_db:
            tr.add("GRANTED", grantor.cell_id, grantor.link.rsrp_dbm, grantor.link.path_loss_db)
            return True, attempt, level, tx
        level = escalate(level)
    tr.add(
        "FAILED",
        target.cell_id,
        target.link.rsrp_dbm,
        target.link.path_loss_db,
        reason=RACH_FAILED,
    )
    return False, params.max_rach_attempts, level, tx


def _failed(tr: _Tracer, result_measures, reason, m: CellMeasure | None = None) -> AttachResult:
    tr.add(
        "FAILED",
        m.cell_id if m else None,
        m.link.rsrp_dbm if m else None,
        m.link.path_loss_db if m else None,
        reason=reason,
    )
    return AttachResult(
        state=Failed(reason),
        events=tuple(tr.events),
        measures=tuple(result_measures),
        association=None,
        coverage=None,
        rach_target=None,
        rach_attempts=0,
        rach_tx_power_dbm=None,
    )


def _pick_rach_resources(target: Cell, rng) -> RachResources:
    if target.role is CellRole.ANCHOR:
        prb = target.anchor_prb
    elif target.non_anchor_prbs:
        prb = (
            int(rng.choice(target.non_anchor_prbs)) if rng is not None else target.non_anchor_prbs[0]
        )
    else:
        prb = 0
    if rng is None:
        return RachResources(prb=prb, subcarrier=0, time_slot=0)
    return RachResources(
        prb=prb, subcarrier=int(rng.integers(0, 12)), time_slot=int(rng.integers(0, 40))
    )


def attach(
    ue_id: str,
    ue_pos: Position,
    t: Topology,
    policy: SelectionPolicy,
    params: AttachParams,
    *,
    rng=None,
    shadowing_db: Mapping[str, float] | None = None,
) -> AttachResult:
    """Run the attach sequence for one UE and return its outcome and trace."""
    if t.kind is ArchitectureKind.INDEPENDENT:
        return _attach_independent(ue_id, ue_pos, t, policy, params, shadowing_db)
    if t.kind is ArchitectureKind.ANCHORED:
        return _attach_anchored(ue_id, ue_pos, t, policy, params, rng, shadowing_db)
    return _attach_shared(ue_id, ue_pos, t, params, shadowing_db)


def _measure(ue_pos, cells, params, shadowing_db):
    return measure_links(
        ue_pos,
        cells,
        ue_antenna_gain_dbi=params.ue_antenna_gain_dbi,
        shadowing_db=shadowing_db,
    )


def _attach_independent(ue_id, ue_pos, t, policy, params, shadowing_db) -> AttachResult:
    tr = _Tracer(ue_id)
    tr.add("IDLE")
    measures = _measure(ue_pos, t.cells, params, shadowing_db)
    for m in measures:
        tr.measure(m)
    by_id = {m.cell_id: m for m in measures}
    assoc = associate(measures, policy)
    ul = by_id[assoc.ul_cell_id]
    if ul.link.coupling_loss_db > params.thresholds.max_coupling_loss_db:
        return _failed(tr, measures, OUT_OF_COVERAGE, ul)
    dl = by_id[assoc.dl_cell_id]
    tr.add("SYNCHRONIZED", dl.cell_id, dl.link.rsrp_dbm, dl.link.path_loss_db)
    tr.add("BROADCAST_ACQUIRED", dl.cell_id, dl.link.rsrp_dbm, dl.link.path_loss_db)
    granted, attempts, level, tx = _run_rach(tr, ul, ul, params)
    if not granted:
        return AttachResult(
            state=Failed(RACH_FAILED),
            events=tuple(tr.events),
            measures=tuple(measures),
            association=None,
            coverage=None,
            rach_target=ul.cell_id,
            rach_attempts=attempts,
            rach_tx_power_dbm=tx,
        )
    coverage = CoverageLevel(level, repetitions_for(level, params.thresholds))
    tr.add("CONNECTED", ul.cell_id, ul.link.rsrp_dbm, ul.link.path_loss_db)
    return AttachResult(
        state=Connected(assoc, coverage),
        events=tuple(tr.events),
        measures=tuple(measures),
        association=assoc,
        coverage=coverage,
        rach_target=ul.cell_id,
        rach_attempts=attempts,
        rach_tx_power_dbm=tx,
    )


def _attach_anchored(ue_id, ue_pos, t, policy, params, rng, shadowing_db) -> AttachResult:
    tr = _Tracer(ue_id)
    tr.add("IDLE")
    anchors = t.anchors
    if not anchors:
        raise ValueError("anchored topology has no broadcasting cell")
    anchor_measures = _measure(ue_pos, anchors, params, shadowing_db)
    for m in anchor_measures:
        tr.measure(m)
    sync = min(anchor_measures, key=lambda m: (-m.link.rsrp_dbm, m.cell_id))
    if sync.link.coupling_loss_db > params.thresholds.max_coupling_loss_db:
        return _failed(tr, anchor_measures, OUT_OF_COVERAGE, sync)
    tr.add("SYNCHRONIZED", sync.cell_id, sync.link.rsrp_dbm, sync.link.path_loss_db)
    tr.add("BROADCAST_ACQUIRED", sync.cell_id, sync.link.rsrp_dbm, sync.link.path_loss_db)
    binfo = build_broadcast(t.by_id[sync.cell_id], t)

    # NRS measurements on every advertised non-anchor before any random access.
    listed_cells = [t.by_id[e.cell_id] for e in binfo.non_anchors]
    listed_measures = _measure(ue_pos, listed_cells, params, shadowing_db) if listed_cells else []
    for m in listed_measures:
        tr.measure(m)
    eligible = [
        m
        for m, entry in zip(listed_measures, binfo.non_anchors)
        if entry.selection_threshold_dbm is None or m.link.rsrp_dbm >= entry.selection_threshold_dbm
    ]
    candidates = list(anchor_measures) + eligible
    measures = list(anchor_measures) + list(listed_measures)
    by_id = {m.cell_id: m for m in measures}

    assoc = associate(candidates, policy)
    ul = by_id[assoc.ul_cell_id]
    if ul.link.coupling_loss_db > params.thresholds.max_coupling_loss_db:
        return _failed(tr, measures, OUT_OF_COVERAGE, ul)

    target_cell = t.by_id[ul.cell_id]
    resources = _pick_rach_resources(target_cell, rng)
    if target_cell.role is CellRole.ANCHOR:
        grantor = ul
    else:
        # Grants ride the sideband link: the synced anchor fronts the
        # non-anchor if they are peers, else the lowest-id linked anchor.
        peers = [p for p in t.x2_peers(target_cell.id) if p.role is CellRole.ANCHOR]
        front = t.by_id[sync.cell_id] if any(p.id == sync.cell_id for p in peers) else peers[0]
        grantor = by_id.get(front.id) or _measure(ue_pos, [front], params, shadowing_db)[0]

    granted, attempts, level, tx = _run_rach(tr, ul, grantor, params)
    if not granted:
        return AttachResult(
            state=Failed(RACH_FAILED),
            events=tuple(tr.events),
            measures=tuple(measures),
            association=None,
            coverage=None,
            rach_target=ul.cell_id,
            rach_attempts=attempts,
            rach_tx_power_dbm=tx,
            rach_resources=resources,
        )
    coverage = CoverageLevel(level, repetitions_for(level, params.thresholds))
    tr.add("CONNECTED", ul.cell_id, ul.link.rsrp_dbm, ul.link.path_loss_db)
    return AttachResult(
        state=Connected(assoc, coverage),
        events=tuple(tr.events),
        measures=tuple(measures),
        association=assoc,
        coverage=coverage,
        rach_target=ul.cell_id,
        rach_attempts=attempts,
        rach_tx_power_dbm=tx,
        rach_resources=resources,
    )


def _attach_shared(ue_id, ue_pos, t, params, shadowing_db) -> AttachResult:
    tr = _Tracer(ue_id)
    tr.add("IDLE")
    measures = _measure(ue_pos, t.cells, params, shadowing_db)
    for m in measures:
        tr.measure(m)
    by_id = {m.cell_id: m for m in measures}
    anchors = t.anchors
    if not anchors:
        raise ValueError("shared-identity topology has no broadcasting cell")
    macro = min(
        (by_id[a.id] for a in anchors), key=lambda m: (-m.link.rsrp_dbm, m.cell_id)
    )
    if macro.link.coupling_loss_db > params.thresholds.max_coupling_loss_db:
        return _failed(tr, measures, OUT_OF_COVERAGE, macro)
    tr.add("SYNCHRONIZED", macro.cell_id, macro.link.rsrp_dbm, macro.link.path_loss_db)
    tr.add("BROADCAST_ACQUIRED", macro.cell_id, macro.link.rsrp_dbm, macro.link.path_loss_db)

    granted, attempts, level, tx = _run_rach(tr, macro, macro, params)
    if not granted:
        return AttachResult(
            state=Failed(RACH_FAILED),
            events=tuple(tr.events),
            measures=tuple(measures),
            association=None,
            coverage=None,
            rach_target=macro.cell_id,
            rach_attempts=attempts,
            rach_tx_power_dbm=tx,
        )

    # Attached small cells overheard the preamble; the best suitable one
    # takes the UE over in the final random-access message.
    smalls = [c for c in t.x2_peers(macro.cell_id) if c.role is CellRole.NON_ANCHOR]
    best = None
    for sc in smalls:
        report = preamble_report(
            sc,
            ue_id,
            ue_pos,
            tx,
            t,
            detection_snr_db=params.rach_detection_snr_db,
            ue_antenna_gain_dbi=params.ue_antenna_gain_dbi,
            shadowing_db=shadowing_db,
        )
        if msg4_redirect(report, params.msg4_redirect_snr_db) is Msg4Decision.STAY:
            continue
        m = by_id[sc.id]
        if m.link.coupling_loss_db > params.thresholds.max_coupling_loss_db:
            continue
        if best is None or (-report.measured_ul_snr_db, sc.id) < (-best[0], best[1]):
            best = (report.measured_ul_snr_db, sc.id)

    redirected = best is not None
    serving = by_id[best[1]] if redirected else macro
    if redirected:
        tr.add("REDIRECT", serving.cell_id, serving.link.rsrp_dbm, serving.link.path_loss_db)
        level = assign_coverage_level(serving.link.coupling_loss_db, params.thresholds).level
    assoc = Association(dl_cell_id=serving.cell_id, ul_cell_id=serving.cell_id)
    coverage = CoverageLevel(level, repetitions_for(level, params.thresholds))
    tr.add("CONNECTED", serving.cell_id, serving.link.rsrp_dbm, serving.link.path_loss_db)
    return AttachResult(
        state=Connected(assoc, coverage),
        events=tuple(tr.events),
        measures=tuple(measures),
        association=assoc,
        coverage=coverage,
        rach_target=macro.cell_id,
        rach_attempts=attempts,
        rach_tx_power_dbm=tx,
        redirected=redirected,
    )
