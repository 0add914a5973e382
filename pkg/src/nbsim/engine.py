"""Seeded Monte-Carlo drop engine.

One *drop* places UEs, runs the attach flow for each, applies the uplink
power rules, and accumulates co-channel interference at every cell.  A
campaign repeats drops with independent substreams of one 64-bit seed and
aggregates the per-drop metrics.  Everything is deterministic in
(config, seed): reruns produce identical reports bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .architecture import (
    ArchitectureKind,
    AttachParams,
    AttachResult,
    Connected,
    Failed,
    OUT_OF_COVERAGE,
    RACH_FAILED,
    Topology,
    TraceEvent,
    attach,
    validate_topology,
)
from .cell_selection import (
    CellMeasure,
    CeLevel,
    CoverageThresholds,
    DecoupledSelection,
    SelectionPolicy,
    measure_links,
)
from .power_control import (
    NpuschPowerParams,
    PCmaxPolicy,
    SubcarrierAllocation,
    csg_power_uplift,
    m_factor,
    npusch_tx_power,
    small_cell_p_cmax,
)
from .radio import (
    BsKind,
    CARRIER_BANDWIDTH_HZ,
    Cell,
    Position,
    dbm_to_mw,
    mw_to_dbm,
    thermal_noise_dbm,
)


class ConfigError(ValueError):
    """A scenario configuration failed validation; every problem is listed."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class UniformDisc:
    """UEs drop uniformly over a disc."""

    center: Position
    radius_m: float


@dataclass(frozen=True)
class HotspotAroundCell:
    """UEs drop uniformly over a disc centred on a named cell."""

    cell_id: str
    radius_m: float


DropRegion = Union[UniformDisc, HotspotAroundCell]


@dataclass(frozen=True)
class FixedUe:
    """A UE pinned to one spot in every drop."""

    x: float
    y: float
    csg_member: bool = True


@dataclass(frozen=True)
class Ue:
    id: str
    position: Position
    csg_member: bool = True


@dataclass(frozen=True)
class PowerParams:
    """Uplink power-rule settings shared by every UE."""

    p_o_npusch_dbm: float = -100.0
    alpha: float = 1.0
    j: int = 1
    subcarrier_spacing_khz: float = 15.0
    num_subcarriers: int = 1
    ue_p_cmax_dbm: float = 23.0
    p_cmax_policy: PCmaxPolicy = PCmaxPolicy.COVERAGE_FIRST


@dataclass(frozen=True)
class ScenarioConfig:
    """A complete, pure-data description of one simulation campaign."""

    seed: int
    kind: ArchitectureKind
    cells: tuple[Cell, ...]
    ue_count: int
    region: DropRegion
    policy: SelectionPolicy
    drops: int = 1
    fixed_ues: tuple[FixedUe, ...] = ()
    power: PowerParams = PowerParams()
    coverage: CoverageThresholds = CoverageThresholds()
    rach_detection_snr_db: float = 0.0
    msg4_redirect_snr_db: float = 0.0
    max_rach_attempts: int = 3
    preamble_rx_target_dbm: float = -110.0
    ue_antenna_gain_dbi: float = 0.0
    shadowing_sigma_db: float = 0.0
    protect_macro_ul: bool = False
    csg_mode: bool = False
    csg_uplift_cap_db: float = 10.0
    x2_latency_s: float = 0.0
    name: str = "custom"


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Collect every problem with a config; an empty list means runnable."""
    errors: list[str] = []
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        errors.append("seed: must be an unsigned 64-bit integer")
    if cfg.ue_count < 1:
        errors.append("ue.count: at least one dropped UE is required")
    if cfg.drops < 1:
        errors.append("run.drops: at least one drop is required")
    if not cfg.cells:
        errors.append("cell: at least one cell is required")

    if isinstance(cfg.region, UniformDisc):
        if cfg.region.radius_m < 0:
            errors.append("ue.radius_m: must be >= 0")
    elif isinstance(cfg.region, HotspotAroundCell):
        if cfg.region.radius_m < 0:
            errors.append("ue.radius_m: must be >= 0")
        if cfg.region.cell_id not in {c.id for c in cfg.cells}:
            errors.append(f"ue.hotspot_cell: unknown cell '{cfg.region.cell_id}'")
    else:
        errors.append(f"ue.region: unknown region kind {type(cfg.region).__name__}")

    p = cfg.power
    if p.j not in (1, 2):
        errors.append("power.j: must be 1 or 2")
    if p.j == 1 and not 0.0 <= p.alpha <= 1.0:
        errors.append("power.alpha: must lie in [0, 1]")
    try:
        SubcarrierAllocation(p.subcarrier_spacing_khz, p.num_subcarriers)
    except ValueError as e:
        errors.append(f"power.subcarriers: {e}")
    for c in cfg.cells:
        if c.p_cmax_dbm is not None and c.p_cmax_dbm > p.ue_p_cmax_dbm:
            errors.append(
                f"cell.{c.id}.p_cmax_dbm: exceeds the UE maximum of {p.ue_p_cmax_dbm} dBm"
            )
    if cfg.max_rach_attempts < 1:
        errors.append("attach.max_rach_attempts: must be >= 1")
    if cfg.shadowing_sigma_db < 0:
        errors.append("radio.shadowing_sigma_db: must be >= 0")
    if cfg.csg_uplift_cap_db < 0:
        errors.append("csg.uplift_cap_db: must be >= 0")
    if cfg.x2_latency_s < 0:
        errors.append("run.x2_latency_s: must be >= 0")
    if isinstance(cfg.policy, DecoupledSelection) and cfg.kind is ArchitectureKind.SHARED_IDENTITY:
        # Association under shared identity is dictated by the redirect flow.
        errors.append("selection.policy: decoupled operation has no effect under shared_identity")

    if cfg.cells:
        try:
            topo = Topology(cells=cfg.cells, kind=cfg.kind)
        except ValueError as e:
            errors.append(f"cell: {e}")
        else:
            for v in validate_topology(topo):
                errors.append(f"topology.{v.rule}: {v.message}")
    return errors


@dataclass(frozen=True)
class UeMetrics:
    ue_id: str
    x: float
    y: float
    dl_cell: str | None
    ul_cell: str | None
    ce_level: CeLevel | None
    repetitions: int | None
    tx_power_dbm: float | None
    energy_proxy_mj: float | None
    attach_outcome: str
    covered: bool
    redirected: bool


@dataclass(frozen=True)
class CellMetrics:
    cell_id: str
    interference_dbm: float | None
    iot_db: float | None


@dataclass(frozen=True)
class MetricsReport:
    per_ue: tuple[UeMetrics, ...]
    per_cell: tuple[CellMetrics, ...]
    coverage_probability: float
    mean_tx_power_dbm: float | None
    redirect_rate: float


@dataclass(frozen=True)
class DropReport:
    drop_index: int
    metrics: MetricsReport
    traces: tuple[tuple[TraceEvent, ...], ...]


@dataclass(frozen=True)
class StatSummary:
    mean: float
    p5: float
    p50: float
    p95: float


@dataclass(frozen=True)
class CampaignReport:
    config: ScenarioConfig
    drops: tuple[DropReport, ...]
    summary: Mapping[str, StatSummary | None]


def energy_proxy_mj(tx_power_dbm: float, repetitions: int) -> float:
    """Comparative energy figure: repetitions x linear power x 1 ms."""
    return repetitions * dbm_to_mw(tx_power_dbm) * 1e-3


def combine_interference_dbm(rx_powers_dbm: Iterable[float]) -> float | None:
    """Total received power of independent interferers; None when silent."""
    total_mw = sum(dbm_to_mw(p) for p in rx_powers_dbm)
    return mw_to_dbm(total_mw) if total_mw > 0.0 else None


def _region_center(cfg: ScenarioConfig) -> tuple[float, float, float]:
    if isinstance(cfg.region, UniformDisc):
        return cfg.region.center.x, cfg.region.center.y, cfg.region.radius_m
    cell = next(c for c in cfg.cells if c.id == cfg.region.cell_id)
    return cell.position.x, cell.position.y, cfg.region.radius_m


def drop_ues(cfg: ScenarioConfig, drop_index: int) -> tuple[Ue, ...]:
    """Place this drop's UEs; deterministic in (seed, drop_index)."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(drop_index, 0)))
    cx, cy, radius = _region_center(cfg)
    ues = []
    for i in range(cfg.ue_count):
        # Uniform over the disc: radius scales with sqrt of a uniform draw.
        r = radius * math.sqrt(rng.uniform())
        theta = rng.uniform(0.0, 2.0 * math.pi)
        ues.append(Ue(f"ue-{i:04d}", Position(cx + r * math.cos(theta), cy + r * math.sin(theta))))
    for k, f in enumerate(cfg.fixed_ues):
        ues.append(Ue(f"ue-{cfg.ue_count + k:04d}", Position(f.x, f.y), f.csg_member))
    return tuple(ues)


def _attach_params(cfg: ScenarioConfig) -> AttachParams:
    return AttachParams(
        thresholds=cfg.coverage,
        rach_detection_snr_db=cfg.rach_detection_snr_db,
        msg4_redirect_snr_db=cfg.msg4_redirect_snr_db,
        max_rach_attempts=cfg.max_rach_attempts,
        preamble_rx_target_dbm=cfg.preamble_rx_target_dbm,
        ue_p_cmax_dbm=cfg.power.ue_p_cmax_dbm,
        ue_antenna_gain_dbi=cfg.ue_antenna_gain_dbi,
    )


def _visible_cells(cfg: ScenarioConfig, ue: Ue) -> tuple[Cell, ...]:
    if cfg.csg_mode and not ue.csg_member:
        # Closed-group cells are invisible to outsiders; their interference
        # is still accumulated over the full topology below.
        return tuple(c for c in cfg.cells if c.bs_class.kind is not BsKind.HOME)
    return cfg.cells


def _ue_rng(cfg: ScenarioConfig, drop_index: int, ue_index: int):
    return np.random.default_rng(
        np.random.SeedSequence(cfg.seed, spawn_key=(drop_index, 1, ue_index))
    )


@dataclass(frozen=True)
class _UeRun:
    """Working state for one UE inside a drop."""

    ue: Ue
    result: AttachResult
    all_measures: tuple[CellMeasure, ...]
    tx_power_dbm: float | None


def _failed_synthetic(ue: Ue) -> AttachResult:
    events = (
        TraceEvent(0, ue.id, "IDLE"),
        TraceEvent(1, ue.id, "FAILED", reason=OUT_OF_COVERAGE),
    )
    return AttachResult(
        state=Failed(OUT_OF_COVERAGE),
        events=events,
        measures=(),
        association=None,
        coverage=None,
        rach_target=None,
        rach_attempts=0,
        rach_tx_power_dbm=None,
    )


def _base_tx_power(cfg: ScenarioConfig, run: _UeRun, serving: Cell) -> float:
    # The loss the UE compensates is its uplink estimate — the coupling
    # loss, so class floors and antenna gains are honoured end to end.
    by_id = {m.cell_id: m for m in run.all_measures}
    loss = by_id[serving.id].link.coupling_loss_db
    if cfg.protect_macro_ul:
        co = [
            m.link.coupling_loss_db
            for m in run.all_measures
            if cfg_cell_freq(cfg, m.cell_id) == serving.frequency_index
        ]
        loss = min(co)
    p_cmax = (
        small_cell_p_cmax(cfg.power.ue_p_cmax_dbm, serving.p_cmax_dbm, cfg.power.p_cmax_policy)
        if serving.p_cmax_dbm is not None
        else cfg.power.ue_p_cmax_dbm
    )
    alloc = SubcarrierAllocation(cfg.power.subcarrier_spacing_khz, cfg.power.num_subcarriers)
    return npusch_tx_power(
        NpuschPowerParams(
            p_cmax_dbm=p_cmax,
            p_o_npusch_dbm=cfg.power.p_o_npusch_dbm,
            alpha=cfg.power.alpha,
            m_npusch=m_factor(alloc),
            path_loss_db=loss,
            repetitions=run.result.coverage.repetitions,
            j=cfg.power.j,
        )
    )


def cfg_cell_freq(cfg: ScenarioConfig, cell_id: str) -> int:
    for c in cfg.cells:
        if c.id == cell_id:
            return c.frequency_index
    raise KeyError(cell_id)


def _interference(
    cfg: ScenarioConfig, runs: Sequence[_UeRun], noise_dbm: float
) -> list[CellMetrics]:
    """Per-cell uplink interference from every UE it does not serve."""
    out = []
    cl = {
        (r.ue.id, m.cell_id): m.link.coupling_loss_db for r in runs for m in r.all_measures
    }
    for cell in cfg.cells:
        rx = [
            r.tx_power_dbm - cl[(r.ue.id, cell.id)]
            for r in runs
            if r.tx_power_dbm is not None
            and r.result.association is not None
            and r.result.association.ul_cell_id != cell.id
            and cfg_cell_freq(cfg, r.result.association.ul_cell_id) == cell.frequency_index
        ]
        total = combine_interference_dbm(rx)
        out.append(
            CellMetrics(
                cell_id=cell.id,
                interference_dbm=total,
                iot_db=None if total is None else total - noise_dbm,
            )
        )
    return out


def run_drop(cfg: ScenarioConfig, drop_index: int) -> DropReport:
    """Execute one drop: place, attach, set powers, accumulate interference."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigError(errors)
    noise = thermal_noise_dbm(CARRIER_BANDWIDTH_HZ)
    params = _attach_params(cfg)
    sigma = cfg.shadowing_sigma_db
    ues = drop_ues(cfg, drop_index)

    runs: list[_UeRun] = []
    for idx, ue in enumerate(ues):
        rng = _ue_rng(cfg, drop_index, idx)
        shadow = (
            {c.id: float(rng.normal(0.0, sigma)) for c in cfg.cells} if sigma > 0.0 else None
        )
        visible = _visible_cells(cfg, ue)
        if visible:
            result = attach(
                ue.id,
                ue.position,
                Topology(cells=visible, kind=cfg.kind),
                cfg.policy,
                params,
                rng=rng,
                shadowing_db=shadow,
            )
        else:
            result = _failed_synthetic(ue)
        all_measures = tuple(
            measure_links(
                ue.position,
                cfg.cells,
                ue_antenna_gain_dbi=cfg.ue_antenna_gain_dbi,
                shadowing_db=shadow,
            )
        )
        runs.append(_UeRun(ue=ue, result=result, all_measures=all_measures, tx_power_dbm=None))

    # Base uplink powers for every connected UE.
    for i, run in enumerate(runs):
        if isinstance(run.result.state, Connected):
            serving = next(c for c in cfg.cells if c.id == run.result.association.ul_cell_id)
            runs[i] = replace(run, tx_power_dbm=_base_tx_power(cfg, run, serving))

    if cfg.csg_mode:
        # Closed-group cells first measure the interference they suffer,
        # then lift their own UEs' power by that margin (clamped), and the
        # interference map is rebuilt with the lifted powers.
        interim = {m.cell_id: m for m in _interference(cfg, runs, noise)}
        for i, run in enumerate(runs):
            if run.tx_power_dbm is None:
                continue
            serving = next(c for c in cfg.cells if c.id == run.result.association.ul_cell_id)
            if serving.bs_class.kind is not BsKind.HOME:
                continue
            iot = interim[serving.id].iot_db
            uplift = csg_power_uplift(iot if iot is not None else 0.0, cfg.csg_uplift_cap_db)
            runs[i] = replace(
                run, tx_power_dbm=min(run.tx_power_dbm + uplift, cfg.power.ue_p_cmax_dbm)
            )

    per_cell = _interference(cfg, runs, noise)

    per_ue = []
    for run in runs:
        r = run.result
        covered = False
        if isinstance(r.state, Connected):
            by_id = {m.cell_id: m for m in run.all_measures}
            covered = (
                by_id[r.association.ul_cell_id].link.coupling_loss_db
                <= cfg.coverage.max_coupling_loss_db
            )
        elif isinstance(r.state, Failed) and r.state.reason == RACH_FAILED:
            by_id = {m.cell_id: m for m in r.measures}
            covered = (
                by_id[r.rach_target].link.coupling_loss_db <= cfg.coverage.max_coupling_loss_db
            )
        connected = isinstance(r.state, Connected)
        per_ue.append(
            UeMetrics(
                ue_id=run.ue.id,
                x=run.ue.position.x,
                y=run.ue.position.y,
                dl_cell=r.association.dl_cell_id if connected else None,
                ul_cell=r.association.ul_cell_id if connected else None,
                ce_level=r.coverage.level if connected else (
                    CeLevel.OUT_OF_COVERAGE
                    if isinstance(r.state, Failed) and r.state.reason == OUT_OF_COVERAGE
                    else None
                ),
                repetitions=r.coverage.repetitions if connected else None,
                tx_power_dbm=run.tx_power_dbm,
                energy_proxy_mj=(
                    energy_proxy_mj(run.tx_power_dbm, r.coverage.repetitions)
                    if connected and run.tx_power_dbm is not None
                    else None
                ),
                attach_outcome="connected" if connected else r.state.reason,
                covered=covered,
                redirected=r.redirected,
            )
        )

    n = len(per_ue)
    tx_values = [u.tx_power_dbm for u in per_ue if u.tx_power_dbm is not None]
    metrics = MetricsReport(
        per_ue=tuple(per_ue),
        per_cell=tuple(per_cell),
        coverage_probability=sum(u.covered for u in per_ue) / n,
        mean_tx_power_dbm=sum(tx_values) / len(tx_values) if tx_values else None,
        redirect_rate=sum(u.redirected for u in per_ue) / n,
    )
    return DropReport(
        drop_index=drop_index,
        metrics=metrics,
        traces=tuple(r.result.events for r in runs),
    )


_SUMMARY_METRICS = ("coverage_probability", "mean_tx_power_dbm", "redirect_rate")


def run_campaign(cfg: ScenarioConfig) -> CampaignReport:
    """Run every drop and aggregate the per-drop metrics."""
    errors = validate_config(cfg)
    if errors:
        raise ConfigError(errors)
    drops = tuple(run_drop(cfg, i) for i in range(cfg.drops))
    summary: dict[str, StatSummary | None] = {}
    for name in _SUMMARY_METRICS:
        values = [
            getattr(d.metrics, name) for d in drops if getattr(d.metrics, name) is not None
        ]
        if not values:
            summary[name] = None
            continue
        arr = np.asarray(values, dtype=float)
        summary[name] = StatSummary(
            mean=float(arr.mean()),
            p5=float(np.percentile(arr, 5)),
            p50=float(np.percentile(arr, 50)),
            p95=float(np.percentile(arr, 95)),
        )
    return CampaignReport(config=cfg, drops=drops, summary=summary)
