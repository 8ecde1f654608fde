"""Write verdicts as JSON, CSV and gnuplot-ready .dat files."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .experiments import Verdict, _clean
from .sde_engine import write_paths_csv

FORMATS = ("json", "csv", "dat")


def _num(x) -> str:
    return repr(float(x))


def verdict_json(verdict: Verdict) -> str:
    return json.dumps(_clean(verdict.to_json_dict()), indent=2, sort_keys=True) + "\n"


def verdict_csv(verdict: Verdict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "t", "statistic", "value"])
    for lam, t, name, value in verdict.rows:
        w.writerow([_num(lam), _num(t), name, _num(value)])
    return buf.getvalue()


def verdict_dat(verdict: Verdict) -> str:
    """One block per series separated by two blank lines (gnuplot ``index``)."""
    blocks = []
    for label in sorted(verdict.series):
        lines = [f"# series: {label}", "# x y"]
        lines += [f"{_num(x)} {_num(y)}" for x, y in verdict.series[label]]
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + ("\n" if blocks else "")


def emit_report(verdict: Verdict, out_dir: str | Path, formats=FORMATS) -> list[Path]:
    """Write ``<experiment>.{json,csv,dat}`` plus ``<experiment>.timing.json``.

    Timing lives in its own file so the verdict itself is reproducible byte
    for byte. The simulate experiment also writes ``<experiment>.paths.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bad = set(formats) - set(FORMATS)
    if bad:
        raise ValueError(f"unknown output formats {sorted(bad)}; choose from {FORMATS}")
    stem = verdict.experiment
    written = []
    writers = {"json": verdict_json, "csv": verdict_csv, "dat": verdict_dat}
    for fmt in FORMATS:
        if fmt in formats:
            path = out / f"{stem}.{fmt}"
            path.write_text(writers[fmt](verdict))
            written.append(path)
    timing = out / f"{stem}.timing.json"
    timing.write_text(json.dumps(_clean(verdict.timing), indent=2, sort_keys=True) + "\n")
    written.append(timing)
    if verdict.ensemble is not None:
        written.append(write_paths_csv(verdict.ensemble, out / f"{stem}.paths.csv"))
    return written
