"""Report serialization: CSV/JSON tables, trace logs, and atomic writes.

All file contents are generated in memory first, written to temporary
files next to their targets, and renamed into place last — a failed run
never leaves fresh partial files behind, and reruns replace previous
outputs atomically.

CSV files use comma separators, ``.`` decimals, LF line endings, and a
mandatory header row; missing values are written as ``none``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .architecture import format_trace
from .engine import CampaignReport

_PER_UE_COLUMNS = (
    "drop",
    "ue_id",
    "x",
    "y",
    "dl_cell",
    "ul_cell",
    "ce_level",
    "reps",
    "tx_power_dbm",
    "energy_proxy",
)
_PER_CELL_COLUMNS = ("drop", "cell_id", "iot_db")
_PER_DROP_COLUMNS = ("drop", "coverage_probability", "mean_tx_power_dbm", "redirect_rate")


def _scalar(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(rows: list[tuple], header: tuple[str, ...]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_scalar(v) for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _per_ue_rows(report: CampaignReport) -> list[tuple]:
    return [
        (
            d.drop_index,
            u.ue_id,
            u.x,
            u.y,
            u.dl_cell,
            u.ul_cell,
            u.ce_level.value if u.ce_level is not None else None,
            u.repetitions,
            u.tx_power_dbm,
            u.energy_proxy_mj,
        )
        for d in report.drops
        for u in d.metrics.per_ue
    ]


def _per_cell_rows(report: CampaignReport) -> list[tuple]:
    return [
        (d.drop_index, c.cell_id, c.iot_db) for d in report.drops for c in d.metrics.per_cell
    ]


def _per_drop_rows(report: CampaignReport) -> list[tuple]:
    return [
        (
            d.drop_index,
            d.metrics.coverage_probability,
            d.metrics.mean_tx_power_dbm,
            d.metrics.redirect_rate,
        )
        for d in report.drops
    ]


def _summary_scalars(report: CampaignReport) -> list[tuple[str, object]]:
    cfg = report.config
    return [
        ("scenario", cfg.name),
        ("seed", cfg.seed),
        ("architecture", cfg.kind.value),
        ("drops", cfg.drops),
        ("ues_per_drop", cfg.ue_count + len(cfg.fixed_ues)),
        ("x2_latency_s", cfg.x2_latency_s),
    ]


def _summary_csv(report: CampaignReport) -> str:
    rows: list[tuple] = [(key, "value", value) for key, value in _summary_scalars(report)]
    for name, stats in report.summary.items():
        if stats is None:
            rows.append((name, "mean", None))
            continue
        for stat in ("mean", "p5", "p50", "p95"):
            rows.append((name, stat, getattr(stats, stat)))
    return _csv(rows, ("key", "stat", "value"))


def _summary_json(report: CampaignReport) -> str:
    metrics = {}
    for name, stats in report.summary.items():
        metrics[name] = (
            None
            if stats is None
            else {"mean": stats.mean, "p5": stats.p5, "p50": stats.p50, "p95": stats.p95}
        )
    doc = dict(_summary_scalars(report))
    doc["metrics"] = metrics
    return _json(doc)


def _per_ue_json(report: CampaignReport) -> str:
    rows = []
    for d in report.drops:
        for u in d.metrics.per_ue:
            rows.append(
                {
                    "drop": d.drop_index,
                    "ue_id": u.ue_id,
                    "x": u.x,
                    "y": u.y,
                    "dl_cell": u.dl_cell,
                    "ul_cell": u.ul_cell,
                    "ce_level": u.ce_level.value if u.ce_level is not None else None,
                    "reps": u.repetitions,
                    "tx_power_dbm": u.tx_power_dbm,
                    "energy_proxy": u.energy_proxy_mj,
                    "attach_outcome": u.attach_outcome,
                }
            )
    return _json(rows)


def _rows_json(rows: list[tuple], columns: tuple[str, ...]) -> str:
    return _json([dict(zip(columns, row)) for row in rows])


def write_outputs(
    report: CampaignReport,
    fmt: str,
    out_dir: str | os.PathLike,
    *,
    traces: bool = False,
    resolved_config_text: str,
) -> list[Path]:
    """Write the full output bundle; returns the paths written."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    out = Path(out_dir)

    files: dict[str, str] = {}
    if fmt == "csv":
        files["summary.csv"] = _summary_csv(report)
        files["per_drop.csv"] = _csv(_per_drop_rows(report), _PER_DROP_COLUMNS)
        files["per_ue.csv"] = _csv(_per_ue_rows(report), _PER_UE_COLUMNS)
        files["per_cell.csv"] = _csv(_per_cell_rows(report), _PER_CELL_COLUMNS)
    else:
        files["summary.json"] = _summary_json(report)
        files["per_drop.json"] = _rows_json(_per_drop_rows(report), _PER_DROP_COLUMNS)
        files["per_ue.json"] = _per_ue_json(report)
        files["per_cell.json"] = _rows_json(_per_cell_rows(report), _PER_CELL_COLUMNS)
    files["resolved_config.toml"] = resolved_config_text
    if traces:
        for d in report.drops:
            files[f"traces/trace_drop{d.drop_index:04d}.log"] = "".join(
                format_trace(t) for t in d.traces
            )

    # Stage everything, then rename into place.
    staged: list[tuple[str, Path]] = []
    try:
        for rel, text in files.items():
            final = out / rel
            final.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=final.parent, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, final))
    except BaseException:
        for tmp, _ in staged:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        raise
    written = []
    for tmp, final in staged:
        os.replace(tmp, final)
        written.append(final)
    return written
