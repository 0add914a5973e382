"""Scenario configuration: strict parsing, validation, and the resolved echo.

The on-disk format is TOML with dotted sections and repeated ``[[cell]]``
blocks.  Parsing is strict: unknown keys, type mismatches, and broken
invariants are all collected into one error list so a bad file can be
fixed in a single edit.  ``serialize_config`` writes the fully resolved
form with every default filled in, and re-parsing that text reproduces
the config object exactly.
"""

from __future__ import annotations

import copy
from typing import Any, Mapping, Sequence

import tomli

from .architecture import ArchitectureKind
from .cell_selection import (
    ClassOffsetSelection,
    CoverageThresholds,
    DecoupledSelection,
    HybridSelection,
    PathLossBased,
    RsrpOnly,
    SelectionPolicy,
)
from .engine import (
    ConfigError,
    FixedUe,
    HotspotAroundCell,
    PowerParams,
    ScenarioConfig,
    UniformDisc,
    validate_config,
)
from .power_control import PCmaxPolicy
from .radio import (
    BaseStationClass,
    BsKind,
    CarrierMode,
    Cell,
    CellRole,
    MACRO_PROPAGATION,
    SMALL_CELL_PROPAGATION,
    Position,
    PropagationModel,
)

_MISSING = object()

_ARCHITECTURES = {k.value: k for k in ArchitectureKind}
_CLASSES = {k.value: k for k in BsKind}
_MODES = {m.value: m for m in CarrierMode}
_ROLES = {r.value: r for r in CellRole}
_PCMAX_POLICIES = {p.value: p for p in PCmaxPolicy}
_POLICY_NAMES = ("rsrp", "path_loss", "hybrid", "class_offsets", "decoupled")


class _Table:
    """Typed, error-collecting reader over one parsed TOML table."""

    def __init__(self, raw: Any, path: str, errors: list[str]):
        self.path = path
        self.errors = errors
        self._used: set[str] = set()
        if raw is _MISSING:
            self.raw: Mapping[str, Any] = {}
        elif isinstance(raw, dict):
            self.raw = raw
        else:
            self.err("", f"expected a table, got {type(raw).__name__}")
            self.raw = {}

    def err(self, key: str, msg: str):
        where = ".".join(p for p in (self.path, key) if p)
        self.errors.append(f"{where}: {msg}")

    def take(self, key: str):
        self._used.add(key)
        return self.raw.get(key, _MISSING)

    def has(self, key: str) -> bool:
        return key in self.raw

    def float_(self, key: str, default, required=False):
        v = self.take(key)
        if v is _MISSING:
            if required:
                self.err(key, "required field is missing")
            return default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.err(key, f"expected a number, got {type(v).__name__}")
            return default
        return float(v)

    def int_(self, key: str, default, required=False):
        v = self.take(key)
        if v is _MISSING:
            if required:
                self.err(key, "required field is missing")
            return default
        if isinstance(v, bool) or not isinstance(v, int):
            self.err(key, f"expected an integer, got {type(v).__name__}")
            return default
        return v

    def bool_(self, key: str, default):
        v = self.take(key)
        if v is _MISSING:
            return default
        if not isinstance(v, bool):
            self.err(key, f"expected a boolean, got {type(v).__name__}")
            return default
        return v

    def str_(self, key: str, default, choices: Sequence[str] | None = None, required=False):
        v = self.take(key)
        if v is _MISSING:
            if required:
                self.err(key, "required field is missing")
            return default
        if not isinstance(v, str):
            self.err(key, f"expected a string, got {type(v).__name__}")
            return default
        if choices is not None and v not in choices:
            self.err(key, f"must be one of {', '.join(choices)}; got '{v}'")
            return default
        return v

    def floats(self, key: str, default, length: int | None = None):
        v = self.take(key)
        if v is _MISSING:
            return default
        if not isinstance(v, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v
        ):
            self.err(key, "expected a list of numbers")
            return default
        if length is not None and len(v) != length:
            self.err(key, f"expected exactly {length} entries, got {len(v)}")
            return default
        return tuple(float(x) for x in v)

    def ints(self, key: str, default, length: int | None = None):
        v = self.take(key)
        if v is _MISSING:
            return default
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in v):
            self.err(key, "expected a list of integers")
            return default
        if length is not None and len(v) != length:
            self.err(key, f"expected exactly {length} entries, got {len(v)}")
            return default
        return tuple(v)

    def strs(self, key: str, default):
        v = self.take(key)
        if v is _MISSING:
            return default
        if not isinstance(v, list) or any(not isinstance(x, str) for x in v):
            self.err(key, "expected a list of strings")
            return default
        return tuple(v)

    def finish(self):
        for k in self.raw:
            if k not in self._used:
                self.err(k, "unknown key")


def _build_selection(raw, errors) -> SelectionPolicy:
    t = _Table(raw, "selection", errors)
    kind = t.str_("policy", "path_loss", choices=_POLICY_NAMES)
    threshold = None
    if t.has("normal_coverage_rsrp_threshold_dbm") and kind != "hybrid":
        t.err("normal_coverage_rsrp_threshold_dbm", "only valid for the hybrid policy")
        t.take("normal_coverage_rsrp_threshold_dbm")
    elif kind == "hybrid":
        threshold = t.float_("normal_coverage_rsrp_threshold_dbm", -110.0)
    offsets_raw = t.take("offsets_db")
    offsets: dict[BsKind, float] = {}
    if offsets_raw is not _MISSING:
        if kind != "class_offsets":
            t.err("offsets_db", "only valid for the class_offsets policy")
        else:
            ot = _Table(offsets_raw, "selection.offsets_db", errors)
            for cls in _CLASSES:
                if ot.has(cls):
                    offsets[_CLASSES[cls]] = ot.float_(cls, 0.0)
            ot.finish()
    t.finish()
    if kind == "rsrp":
        return RsrpOnly()
    if kind == "hybrid":
        return HybridSelection(normal_coverage_rsrp_threshold_dbm=threshold)
    if kind == "class_offsets":
        return ClassOffsetSelection(offsets_db=offsets)
    if kind == "decoupled":
        return DecoupledSelection()
    return PathLossBased()


def _build_ue(raw, errors):
    t = _Table(raw, "ue", errors)
    count = t.int_("count", 1)
    gain = t.float_("antenna_gain_dbi", 0.0)
    kind = t.str_("region", "disc", choices=("disc", "hotspot"))
    if kind == "hotspot":
        for k in ("center_x", "center_y"):
            if t.has(k):
                t.err(k, "only valid for region='disc'")
                t.take(k)
        cell_id = t.str_("hotspot_cell", "", required=True)
        radius = t.float_("radius_m", 0.0)
        region: Any = HotspotAroundCell(cell_id=cell_id, radius_m=radius)
    else:
        if t.has("hotspot_cell"):
            t.err("hotspot_cell", "only valid for region='hotspot'")
            t.take("hotspot_cell")
        cx = t.float_("center_x", 0.0)
        cy = t.float_("center_y", 0.0)
        radius = t.float_("radius_m", 0.0)
        try:
            region = UniformDisc(center=Position(cx, cy), radius_m=radius)
        except ValueError as e:
            t.err("center_x", str(e))
            region = UniformDisc(center=Position(0.0, 0.0), radius_m=0.0)
    t.finish()
    return count, region, gain


def _build_cell(raw, idx, errors) -> Cell | None:
    t = _Table(raw, f"cell.{idx}", errors)
    cell_id = t.str_("id", f"cell-{idx}", required=True)
    cls_name = t.str_("class", "wide_area", choices=tuple(_CLASSES), required=True)
    ports = t.int_("antenna_ports", 1)
    x = t.float_("x", 0.0, required=True)
    y = t.float_("y", 0.0, required=True)
    nrs = t.float_("nrs_power_dbm", 0.0, required=True)
    gain = t.float_("antenna_gain_dbi", 0.0)
    mode = t.str_("mode", "standalone", choices=tuple(_MODES))
    freq = t.int_("frequency_index", 0)
    role = t.str_("role", "anchor", choices=tuple(_ROLES))
    identity = t.int_("cell_identity", 0)
    anchor_prb = t.int_("anchor_prb", 0 if role == "anchor" else None)
    non_anchor_prbs = t.ints("non_anchor_prbs", ())
    boost = t.float_("boost_db", 0.0)
    default_prop = "macro" if cls_name == "wide_area" else "small_cell"
    prop_name = t.str_("propagation", default_prop, choices=("macro", "small_cell", "custom"))
    if prop_name == "custom":
        a = t.float_("prop_a", 0.0, required=True)
        b = t.float_("prop_b", 0.0, required=True)
        prop = PropagationModel(a, b)
    else:
        for k in ("prop_a", "prop_b"):
            if t.has(k):
                t.err(k, "only valid when propagation='custom'")
                t.take(k)
        prop = MACRO_PROPAGATION if prop_name == "macro" else SMALL_CELL_PROPAGATION
    threshold = t.float_("selection_threshold_dbm", None)
    p_cmax = t.float_("p_cmax_dbm", None)
    s1 = t.bool_("s1", role == "anchor")
    x2 = t.strs("x2", ())
    if freq < 0:
        t.err("frequency_index", "must be >= 0")
    t.finish()
    try:
        return Cell(
            id=cell_id,
            bs_class=BaseStationClass(kind=_CLASSES[cls_name], antenna_ports=ports),
            position=Position(x, y),
            nrs_power_dbm=nrs,
            antenna_gain_dbi=gain,
            mode=_MODES[mode],
            frequency_index=freq,
            role=_ROLES[role],
            cell_identity=identity,
            anchor_prb=anchor_prb,
            non_anchor_prbs=non_anchor_prbs,
            boost_db=boost,
            propagation=prop,
            selection_threshold_dbm=threshold,
            p_cmax_dbm=p_cmax,
            s1=s1,
            x2=x2,
        )
    except ValueError as e:
        errors.append(f"cell.{idx} ({cell_id}): {e}")
        return None


def build_config(data: Mapping[str, Any]) -> ScenarioConfig:
    """Build and fully validate a ScenarioConfig from parsed TOML data."""
    errors: list[str] = []
    top = _Table(data, "", errors)

    name = top.str_("name", "custom")
    seed = top.take("seed")
    if seed is _MISSING:
        errors.append("seed: required field is missing")
        seed = 0
    elif isinstance(seed, bool) or not isinstance(seed, int):
        errors.append(f"seed: expected an integer, got {type(seed).__name__}")
        seed = 0
    arch_name = top.str_(
        "architecture", "independent", choices=tuple(_ARCHITECTURES), required=True
    )

    run = _Table(top.take("run"), "run", errors)
    drops = run.int_("drops", 1)
    x2_latency = run.float_("x2_latency_s", 0.0)
    run.finish()

    ue_count, region, ue_gain = _build_ue(top.take("ue"), errors)
    policy = _build_selection(top.take("selection"), errors)

    pw = _Table(top.take("power"), "power", errors)
    power = PowerParams(
        p_o_npusch_dbm=pw.float_("p_o_npusch_dbm", -100.0),
        alpha=pw.float_("alpha", 1.0),
        j=pw.int_("j", 1),
        subcarrier_spacing_khz=pw.float_("subcarrier_spacing_khz", 15.0),
        num_subcarriers=pw.int_("num_subcarriers", 1),
        ue_p_cmax_dbm=pw.float_("ue_p_cmax_dbm", 23.0),
        p_cmax_policy=_PCMAX_POLICIES[
            pw.str_("p_cmax_policy", "coverage_first", choices=tuple(_PCMAX_POLICIES))
        ],
    )
    pw.finish()

    cov = _Table(top.take("coverage"), "coverage", errors)
    bounds = cov.floats("bounds_db", (144.0, 154.0, 164.0), length=3)
    reps = cov.ints("repetitions", (1, 8, 32), length=3)
    cov.finish()
    try:
        coverage = CoverageThresholds(bounds_db=bounds, repetitions=reps)
    except ValueError as e:
        errors.append(f"coverage: {e}")
        coverage = CoverageThresholds()

    at = _Table(top.take("attach"), "attach", errors)
    rach_snr = at.float_("rach_detection_snr_db", 0.0)
    msg4_snr = at.float_("msg4_redirect_snr_db", 0.0)
    max_attempts = at.int_("max_rach_attempts", 3)
    preamble_target = at.float_("preamble_rx_target_dbm", -110.0)
    at.finish()

    rad = _Table(top.take("radio"), "radio", errors)
    sigma = rad.float_("shadowing_sigma_db", 0.0)
    rad.finish()

    fl = _Table(top.take("flags"), "flags", errors)
    protect = fl.bool_("protect_macro_ul", False)
    csg_mode = fl.bool_("csg_mode", False)
    fl.finish()

    cs = _Table(top.take("csg"), "csg", errors)
    uplift_cap = cs.float_("uplift_cap_db", 10.0)
    cs.finish()

    fixed_raw = top.take("fixed_ue")
    fixed: list[FixedUe] = []
    if fixed_raw is not _MISSING:
        if not isinstance(fixed_raw, list):
            errors.append("fixed_ue: expected an array of tables ([[fixed_ue]])")
        else:
            for i, entry in enumerate(fixed_raw):
                ft = _Table(entry, f"fixed_ue.{i}", errors)
                fx = ft.float_("x", 0.0, required=True)
                fy = ft.float_("y", 0.0, required=True)
                member = ft.bool_("csg_member", True)
                ft.finish()
                fixed.append(FixedUe(x=fx, y=fy, csg_member=member))

    cells_raw = top.take("cell")
    cells: list[Cell] = []
    if cells_raw is _MISSING:
        errors.append("cell: at least one [[cell]] block is required")
    elif not isinstance(cells_raw, list):
        errors.append("cell: expected an array of tables ([[cell]])")
    else:
        for i, entry in enumerate(cells_raw):
            built = _build_cell(entry, i, errors)
            if built is not None:
                cells.append(built)

    top.finish()
    if errors:
        raise ConfigError(errors)

    cfg = ScenarioConfig(
        seed=seed,
        kind=_ARCHITECTURES[arch_name],
        cells=tuple(cells),
        ue_count=ue_count,
        region=region,
        policy=policy,
        drops=drops,
        fixed_ues=tuple(fixed),
        power=power,
        coverage=coverage,
        rach_detection_snr_db=rach_snr,
        msg4_redirect_snr_db=msg4_snr,
        max_rach_attempts=max_attempts,
        preamble_rx_target_dbm=preamble_target,
        ue_antenna_gain_dbi=ue_gain,
        shadowing_sigma_db=sigma,
        protect_macro_ul=protect,
        csg_mode=csg_mode,
        csg_uplift_cap_db=uplift_cap,
        x2_latency_s=x2_latency,
        name=name,
    )
    deep = validate_config(cfg)
    if deep:
        raise ConfigError(deep)
    return cfg


def apply_overrides(data: dict, overrides: Mapping[str, str]) -> dict:
    """Apply dotted-path overrides (values parsed as TOML literals) to a
    parsed config dict; returns a new dict."""
    out = copy.deepcopy(data)
    for path, raw in overrides.items():
        try:
            value = tomli.loads(f"v = {raw}")["v"]
        except tomli.TOMLDecodeError:
            value = raw
        parts = path.split(".")
        node: Any = out
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            if isinstance(node, list):
                if not part.isdigit() or int(part) >= len(node):
                    raise ConfigError([f"override {path}: no element '{part}'"])
                if last:
                    node[int(part)] = value
                else:
                    node = node[int(part)]
            elif isinstance(node, dict):
                if last:
                    node[part] = value
                else:
                    node = node.setdefault(part, {})
            else:
                raise ConfigError([f"override {path}: '{part}' is not a table"])
    return out


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> ScenarioConfig:
    """Parse config text, apply any overrides, and validate everything."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError([f"config: invalid syntax: {e}"]) from None
    if overrides:
        data = apply_overrides(data, overrides)
    return build_config(data)


# --- serialization -----------------------------------------------------------


def _v(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_v(x) for x in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _kv(lines: list[str], key: str, value: Any):
    lines.append(f"{key} = {_v(value)}")


def _policy_fields(policy: SelectionPolicy) -> tuple[str, list[str]]:
    if isinstance(policy, RsrpOnly):
        return "rsrp", []
    if isinstance(policy, PathLossBased):
        return "path_loss", []
    if isinstance(policy, HybridSelection):
        return "hybrid", [
            f"normal_coverage_rsrp_threshold_dbm = {_v(policy.normal_coverage_rsrp_threshold_dbm)}"
        ]
    if isinstance(policy, DecoupledSelection):
        return "decoupled", []
    if isinstance(policy, ClassOffsetSelection):
        body = ["", "[selection.offsets_db]"]
        for kind in sorted(policy.offsets_db, key=lambda k: k.value):
            body.append(f"{kind.value} = {_v(float(policy.offsets_db[kind]))}")
        return "class_offsets", body
    raise TypeError(f"cannot serialize policy {policy!r}")


def serialize_config(cfg: ScenarioConfig) -> str:
    """Emit the fully resolved config; parse_config on the result round-trips."""
    lines: list[str] = []
    _kv(lines, "name", cfg.name)
    _kv(lines, "seed", cfg.seed)
    _kv(lines, "architecture", cfg.kind.value)

    lines += ["", "[run]"]
    _kv(lines, "drops", cfg.drops)
    _kv(lines, "x2_latency_s", cfg.x2_latency_s)

    lines += ["", "[ue]"]
    _kv(lines, "count", cfg.ue_count)
    if isinstance(cfg.region, UniformDisc):
        _kv(lines, "region", "disc")
        _kv(lines, "center_x", cfg.region.center.x)
        _kv(lines, "center_y", cfg.region.center.y)
    else:
        _kv(lines, "region", "hotspot")
        _kv(lines, "hotspot_cell", cfg.region.cell_id)
    _kv(lines, "radius_m", cfg.region.radius_m)
    _kv(lines, "antenna_gain_dbi", cfg.ue_antenna_gain_dbi)

    kind, extra = _policy_fields(cfg.policy)
    lines += ["", "[selection]"]
    _kv(lines, "policy", kind)
    lines += extra

    lines += ["", "[power]"]
    _kv(lines, "p_o_npusch_dbm", cfg.power.p_o_npusch_dbm)
    _kv(lines, "alpha", cfg.power.alpha)
    _kv(lines, "j", cfg.power.j)
    _kv(lines, "subcarrier_spacing_khz", cfg.power.subcarrier_spacing_khz)
    _kv(lines, "num_subcarriers", cfg.power.num_subcarriers)
    _kv(lines, "ue_p_cmax_dbm", cfg.power.ue_p_cmax_dbm)
    _kv(lines, "p_cmax_policy", cfg.power.p_cmax_policy.value)

    lines += ["", "[coverage]"]
    _kv(lines, "bounds_db", list(cfg.coverage.bounds_db))
    _kv(lines, "repetitions", list(cfg.coverage.repetitions))

    lines += ["", "[attach]"]
    _kv(lines, "rach_detection_snr_db", cfg.rach_detection_snr_db)
    _kv(lines, "msg4_redirect_snr_db", cfg.msg4_redirect_snr_db)
    _kv(lines, "max_rach_attempts", cfg.max_rach_attempts)
    _kv(lines, "preamble_rx_target_dbm", cfg.preamble_rx_target_dbm)

    lines += ["", "[radio]"]
    _kv(lines, "shadowing_sigma_db", cfg.shadowing_sigma_db)

    lines += ["", "[flags]"]
    _kv(lines, "protect_macro_ul", cfg.protect_macro_ul)
    _kv(lines, "csg_mode", cfg.csg_mode)

    lines += ["", "[csg]"]
    _kv(lines, "uplift_cap_db", cfg.csg_uplift_cap_db)

    for f in cfg.fixed_ues:
        lines += ["", "[[fixed_ue]]"]
        _kv(lines, "x", f.x)
        _kv(lines, "y", f.y)
        _kv(lines, "csg_member", f.csg_member)

    for c in cfg.cells:
        lines += ["", "[[cell]]"]
        _kv(lines, "id", c.id)
        _kv(lines, "class", c.bs_class.kind.value)
        _kv(lines, "antenna_ports", c.bs_class.antenna_ports)
        _kv(lines, "x", c.position.x)
        _kv(lines, "y", c.position.y)
        _kv(lines, "nrs_power_dbm", c.nrs_power_dbm)
        _kv(lines, "antenna_gain_dbi", c.antenna_gain_dbi)
        _kv(lines, "mode", c.mode.value)
        _kv(lines, "frequency_index", c.frequency_index)
        _kv(lines, "role", c.role.value)
        _kv(lines, "cell_identity", c.cell_identity)
        if c.anchor_prb is not None:
            _kv(lines, "anchor_prb", c.anchor_prb)
        _kv(lines, "non_anchor_prbs", list(c.non_anchor_prbs))
        _kv(lines, "boost_db", c.boost_db)
        if c.propagation == MACRO_PROPAGATION:
            _kv(lines, "propagation", "macro")
        elif c.propagation == SMALL_CELL_PROPAGATION:
            _kv(lines, "propagation", "small_cell")
        else:
            _kv(lines, "propagation", "custom")
            _kv(lines, "prop_a", c.propagation.a)
            _kv(lines, "prop_b", c.propagation.b)
        if c.selection_threshold_dbm is not None:
            _kv(lines, "selection_threshold_dbm", c.selection_threshold_dbm)
        if c.p_cmax_dbm is not None:
            _kv(lines, "p_cmax_dbm", c.p_cmax_dbm)
        _kv(lines, "s1", c.s1)
        _kv(lines, "x2", list(c.x2))
    return "\n".join(lines) + "\n"
