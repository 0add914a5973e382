"""Deterministic system-level simulator for NB-IoT heterogeneous networks.

Small cells deployed under a macro layer can be wired up three ways —
as self-contained carriers, as non-anchor carriers advertised by a
macro anchor, or as invisible repeaters sharing the macro's identity —
and each wiring changes how devices select cells, how uplink and
downlink may decouple, and where interference lands.  This package
models those deployments with narrowband link budgets, open-loop
uplink power control, coverage-level repetition, and seed-reproducible
Monte-Carlo drops.
"""

from .architecture import (
    ArchitectureKind,
    AttachParams,
    AttachResult,
    BroadcastInfo,
    Topology,
    TraceEvent,
    attach,
    build_broadcast,
    format_trace,
    msg4_redirect,
    preamble_report,
    validate_topology,
)
from .cell_selection import (
    Association,
    CeLevel,
    ClassOffsetSelection,
    CoverageLevel,
    CoverageThresholds,
    DecoupledSelection,
    HybridSelection,
    PathLossBased,
    RsrpOnly,
    assign_coverage_level,
    decoupled_association,
    measure_links,
    select_cell,
)
from .config import apply_overrides, build_config, parse_config, serialize_config
from .engine import (
    CampaignReport,
    ConfigError,
    DropReport,
    FixedUe,
    HotspotAroundCell,
    MetricsReport,
    PowerParams,
    ScenarioConfig,
    UniformDisc,
    run_campaign,
    run_drop,
    validate_config,
)
from .power_control import (
    FULL_POWER_REPETITIONS,
    NpuschPowerParams,
    PCmaxPolicy,
    nprach_tx_power,
    npusch_tx_power,
    small_cell_p_cmax,
)
from .presets import PRESETS, expand_preset
from .radio import (
    CARRIER_BANDWIDTH_HZ,
    LOCAL_AREA,
    MACRO_PROPAGATION,
    MEDIUM_RANGE,
    SMALL_CELL_PROPAGATION,
    WIDE_AREA,
    BaseStationClass,
    BsKind,
    Cell,
    CellRole,
    LinkMeasure,
    Position,
    PropagationModel,
    coupling_loss,
    home_class,
    path_loss,
    rsrp,
    thermal_noise_dbm,
    ul_sinr_db,
)

__version__ = "0.1.0"
