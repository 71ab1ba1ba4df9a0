# app/services/report_writer.py
# Persistent outputs of a run: report.json, the Markdown summary rendered from a Jinja2
# template, field and horizon profile CSVs, and the sweep CSV.
# Date: 2026-10-19
# Version: 0.1.0

import csv
import json
import os
from typing import Any, Dict, List, Optional, Sequence

from jinja2 import Environment, FileSystemLoader

from app.core.config import settings
from app.core.logger import console, format_number
from app.schemas.horizon_schemas import HorizonSet
from app.schemas.pipeline_schemas import PenroseReport, SweepRow
from app.services.geometry.fields import ScalarField
from app.services.horizon.outermost import export_profiles

SWEEP_COLUMNS = [
    "m", "T", "h", "m_tilde", "Q_tilde", "A_tilde", "R_tilde", "deficit",
    "gauss_residual", "div_residual", "horizon_ok", "exclusion_ok", "wall_time", "status", "error",
]

# Initialize Jinja2 environment for rendering reports
template_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'templates')
jinja_env = Environment(loader=FileSystemLoader(template_dir), trim_blocks=True, lstrip_blocks=True)
jinja_env.filters["num"] = format_number


def save_json(filepath: str, data: Dict[str, Any]) -> bool:
    """Saves a dictionary to a JSON file; failures are logged, not raised."""
    try:
        os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
        return True
    except Exception as e:
        console.error(f"Failed to save JSON to {filepath}: {e}")
        return False


def render_markdown(report: PenroseReport) -> str:
    template = jinja_env.get_template("penrose_report.md.jinja2")
    return template.render(report=report, project=settings.PROJECT_NAME)


def write_report(report: PenroseReport, out_dir: str, fields: Optional[Dict[str, ScalarField]] = None,
                 horizon: Optional[HorizonSet] = None) -> List[str]:
    """
    Writes report.json and report.md into `out_dir`, plus field_<name>.csv for every
    field given and horizon_<chart>.csv for every horizon component.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    json_path = os.path.join(out_dir, "report.json")
    if save_json(json_path, report.model_dump(mode="json")):
        written.append(json_path)

    md_path = os.path.join(out_dir, "report.md")
    with open(md_path, "w", encoding="utf-8") as f:
        f.write(render_markdown(report))
    written.append(md_path)

    for name, field in (fields or {}).items():
        if field is not None:
            written.append(field.export_csv(os.path.join(out_dir, f"field_{name}.csv")))
    if horizon is not None:
        written += export_profiles(horizon, out_dir)
    console.info(f"[Report] Wrote {len(written)} files to {out_dir}")
    return written


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.{settings.FLOAT_DIGITS}g}"
    return str(value)


def write_sweep_csv(rows: Sequence[SweepRow], path: str) -> str:
    """One row per (m, T) in the given order; floats with FLOAT_DIGITS significant digits."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            data = row.model_dump()
            writer.writerow([_cell(data[column]) for column in SWEEP_COLUMNS])
    console.info(f"[Report] Wrote sweep table to {path}")
    return path
