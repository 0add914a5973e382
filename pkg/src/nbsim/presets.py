"""Ready-made scenarios, stored in the config-file schema.

Each preset expands through the same strict parser as an on-disk config,
so overrides are validated identically either way.

* ``macro_only`` — one wide-area cell; the homogeneous baseline.
* ``pico_near_macro`` — a local-area cell deployed close to the macro
  with a selection offset that pulls UEs onto it even where the macro's
  path loss is lower; the stage for the uplink-protection flag.
* ``csg_femto_edge`` — a closed-group home cell at the macro's edge with
  member UEs clustered around it and one non-member stuck at the cell
  edge; exercises the closed-group power uplift.
* ``decoupled_hotspot`` — an anchored deployment with UEs around a
  non-anchor hotspot; downlink stays on the macro while the uplink moves
  to the closer cell.
"""

from __future__ import annotations

import copy
from typing import Mapping

from .config import apply_overrides, build_config
from .engine import ConfigError, ScenarioConfig

_MACRO = {
    "id": "macro-0",
    "class": "wide_area",
    "x": 0.0,
    "y": 0.0,
    "nrs_power_dbm": 32.0,
    "antenna_gain_dbi": 15.0,
    "anchor_prb": 0,
    "s1": True,
}

PRESETS: dict[str, dict] = {
    "macro_only": {
        "name": "macro_only",
        "seed": 1,
        "architecture": "independent",
        "ue": {"count": 100, "region": "disc", "center_x": 0.0, "center_y": 0.0, "radius_m": 1000.0},
        "selection": {"policy": "path_loss"},
        "cell": [copy.deepcopy(_MACRO)],
    },
    "pico_near_macro": {
        "name": "pico_near_macro",
        "seed": 42,
        "architecture": "independent",
        "ue": {"count": 100, "region": "disc", "center_x": 100.0, "center_y": 0.0, "radius_m": 100.0},
        # The offset expands the small cell far beyond its natural border,
        # so many of its UEs see less loss toward the macro.
        "selection": {"policy": "class_offsets", "offsets_db": {"local_area": 45.0}},
        "cell": [
            copy.deepcopy(_MACRO),
            {
                "id": "pico-0",
                "class": "local_area",
                "x": 200.0,
                "y": 0.0,
                "nrs_power_dbm": 13.0,
                "antenna_gain_dbi": 5.0,
                "cell_identity": 1,
                "anchor_prb": 0,
                "s1": True,
            },
        ],
    },
    "csg_femto_edge": {
        "name": "csg_femto_edge",
        "seed": 42,
        "architecture": "independent",
        "ue": {"count": 20, "region": "hotspot", "hotspot_cell": "femto-0", "radius_m": 50.0},
        "selection": {"policy": "path_loss"},
        "flags": {"csg_mode": True},
        "fixed_ue": [{"x": 1000.0, "y": 0.0, "csg_member": False}],
        "cell": [
            copy.deepcopy(_MACRO),
            {
                "id": "femto-0",
                "class": "home",
                "x": 800.0,
                "y": 0.0,
                "nrs_power_dbm": 10.0,
                "cell_identity": 1,
                "anchor_prb": 0,
                "s1": True,
            },
        ],
    },
    "decoupled_hotspot": {
        "name": "decoupled_hotspot",
        "seed": 42,
        "architecture": "anchored",
        "run": {"x2_latency_s": 10.0},
        "ue": {"count": 100, "region": "hotspot", "hotspot_cell": "pico-0", "radius_m": 150.0},
        "selection": {"policy": "decoupled"},
        "cell": [
            copy.deepcopy(_MACRO),
            {
                "id": "pico-0",
                "class": "local_area",
                "x": 300.0,
                "y": 0.0,
                "nrs_power_dbm": 13.0,
                "antenna_gain_dbi": 5.0,
                "cell_identity": 1,
                "role": "non_anchor",
                "non_anchor_prbs": [4],
                "x2": ["macro-0"],
                "s1": False,
            },
        ],
    },
}


def expand_preset(name: str, overrides: Mapping[str, str] | None = None) -> ScenarioConfig:
    """Expand a named preset (plus overrides) into a validated config."""
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError([f"preset: unknown preset '{name}' (available: {known})"])
    data = copy.deepcopy(PRESETS[name])
    if overrides:
        data = apply_overrides(data, overrides)
    return build_config(data)
