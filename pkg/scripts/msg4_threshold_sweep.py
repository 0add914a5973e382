#!/usr/bin/env python3
"""Sweep the final-message redirect threshold in a shared-identity
deployment and report how many UEs end up on the small cell.

Under shared identity the small cell is invisible to idle UEs: every
random access lands on the macro, which redirects a UE only when the
small cell overheard its preamble above the configured SNR threshold.
Raising the threshold therefore monotonically shrinks the redirected
share.

Usage:
    python3 scripts/msg4_threshold_sweep.py [--drops N] [--ues N] \
        [--thresholds -10 0 10]
"""

import argparse

from nbsim.architecture import ArchitectureKind
from nbsim.cell_selection import PathLossBased
from nbsim.engine import HotspotAroundCell, ScenarioConfig, run_campaign
from nbsim.radio import (
    Cell,
    CellRole,
    LOCAL_AREA,
    Position,
    SMALL_CELL_PROPAGATION,
    WIDE_AREA,
)


def build_config(threshold_db: float, drops: int, ues: int) -> ScenarioConfig:
    macro = Cell(
        id="macro-0", bs_class=WIDE_AREA, position=Position(0.0, 0.0),
        nrs_power_dbm=32.0, antenna_gain_dbi=15.0, cell_identity=7,
        anchor_prb=0, s1=True,
    )
    pico = Cell(
        id="pico-0", bs_class=LOCAL_AREA, position=Position(300.0, 0.0),
        nrs_power_dbm=13.0, antenna_gain_dbi=5.0, cell_identity=7,
        role=CellRole.NON_ANCHOR, non_anchor_prbs=(4,), x2=("macro-0",),
        propagation=SMALL_CELL_PROPAGATION,
    )
    return ScenarioConfig(
        seed=7,
        kind=ArchitectureKind.SHARED_IDENTITY,
        cells=(macro, pico),
        ue_count=ues,
        region=HotspotAroundCell("pico-0", 250.0),
        policy=PathLossBased(),
        drops=drops,
        msg4_redirect_snr_db=threshold_db,
        rach_detection_snr_db=-20.0,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--drops", type=int, default=100)
    parser.add_argument("--ues", type=int, default=30)
    parser.add_argument(
        "--thresholds", type=float, nargs="+", default=[-10.0, 0.0, 10.0],
        help="redirect SNR thresholds in dB",
    )
    args = parser.parse_args()

    print(f"{'threshold [dB]':>14}  {'redirect rate':>13}  {'small-cell share':>16}")
    for threshold in args.thresholds:
        report = run_campaign(build_config(threshold, args.drops, args.ues))
        redirected = total = on_pico = 0
        for drop in report.drops:
            for ue in drop.metrics.per_ue:
                total += 1
                redirected += ue.redirected
                on_pico += ue.ul_cell == "pico-0"
        print(f"{threshold:>14.1f}  {redirected / total:>13.4f}  {on_pico / total:>16.4f}")


if __name__ == "__main__":
    main()
