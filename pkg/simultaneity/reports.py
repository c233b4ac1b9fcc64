"""
Build and save result bundles for sampled runs.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from . import __version__
from .experiment import Mode
from .montecarlo import RunPlan, TrialRecord
from .stats import (
    ChshResult,
    Correlator,
    SignalingReport,
    SingleParticleReport,
    chsh,
    correlator,
    group_by_setting,
    infer_chsh_settings,
    no_signaling_test,
    single_particle_rates,
)
from .theories import JointDistribution, outcome_code

logger = logging.getLogger(__name__)

RECORDS_HEADER = "# simultaneity-records v1"
REPORT_FORMAT = "simultaneity-report v1"
RECORD_COLUMNS = ("setting", "trial", "alpha", "beta", "outcome")

Row = Tuple[int, int, float, float, str]


def _measured(value: float, stderr: float) -> Dict[str, float]:
    return {"value": value, "stderr": stderr}


def correlator_to_dict(c: Correlator) -> Dict[str, Any]:
    return {
        "settings": list(c.settings),
        "E": _measured(c.E, c.stderr),
        "counts": list(c.counts) if c.counts else None,
    }


def chsh_to_dict(result: ChshResult) -> Dict[str, Any]:
    return {
        "S": _measured(result.S, result.stderr),
        "k": result.k,
        "violates_local_bound": result.violates_local_bound,
        "correlators": [correlator_to_dict(c) for c in result.correlators],
    }


def signaling_to_dict(report: SignalingReport) -> Dict[str, Any]:
    return {
        "verdict": report.verdict,
        "k": report.k,
        "sides": [
            {
                "side": s.side,
                "max_delta": s.max_delta,
                "delta": s.delta,
                "threshold": s.threshold,
                "local_setting": s.local_setting,
                "remote_settings": list(s.remote_settings) if s.remote_settings else None,
            }
            for s in report.sides
        ],
    }


def single_particle_to_dict(report: SingleParticleReport) -> Dict[str, Any]:
    return {
        "n": report.n,
        "joint": _measured(report.joint, report.joint_stderr),
        "none": _measured(report.none, report.none_stderr),
        "exclusive": _measured(report.exclusive, report.exclusive_stderr),
    }


def distribution_to_dict(dist: JointDistribution) -> Dict[str, Any]:
    return {
        "theory": dist.theory.value if dist.theory else None,
        "timing": dist.timing.value if dist.timing else None,
        "mode": dist.mode.value,
        "settings": {"alpha": dist.settings[0], "beta": dist.settings[1]},
        "probabilities": dist.as_dict(),
        "summary": dist.summary(),
        "notes": list(dist.notes),
    }


def empirical_reports(mode: Mode, records: Sequence[TrialRecord], k: float) -> Dict[str, Any]:
    """
    Every estimator that applies to the records.

    Two-particle runs get one correlator per settings pair, CHSH when the
    settings form an (a, a', b, b') grid, and the no-signaling test when
    some local setting meets two remote ones.
    """
    groups = group_by_setting(records)
    if mode is Mode.SINGLE_PARTICLE:
        return {
            "single_particle": [
                {"settings": list(s), **single_particle_to_dict(single_particle_rates(rs))}
                for s, rs in groups.items()
            ],
        }

    reports: Dict[str, Any] = {
        "correlators": [correlator_to_dict(correlator(rs)) for rs in groups.values()],
        "chsh": None,
        "no_signaling": None,
    }
    chsh_settings = infer_chsh_settings(groups.keys())
    if chsh_settings is not None:
        reports["chsh"] = chsh_to_dict(chsh(records, chsh_settings, k))
    if len(groups) > 1:
        try:
            reports["no_signaling"] = signaling_to_dict(no_signaling_test(records, k))
        except ValueError as e:
            logger.info(f"No-signaling test skipped: {e}")
    return reports


def build_bundle(plan: RunPlan, dists: Sequence[JointDistribution],
                 records: Sequence[TrialRecord], k: float) -> Dict[str, Any]:
    """
    Assemble the ResultBundle of a run as a JSON-ready mapping.

    Holds no wall-clock data, so equal runs give byte-equal files.
    """
    timing = dists[0].timing.value if dists and dists[0].timing else None
    return {
        "format": REPORT_FORMAT,
        "run": {
            "seed": plan.seed,
            "model": plan.model.value,
            "mode": plan.config.mode.value,
            "trials_per_setting": plan.trials,
            "settings": [list(s) for s in plan.settings],
            "timing": timing,
            "versions": {"simultaneity": __version__, "numpy": np.__version__},
        },
        "analytic": [distribution_to_dict(d) for d in dists],
        "empirical": empirical_reports(plan.config.mode, records, k),
    }


def record_rows(mode: Mode, records: Sequence[TrialRecord]) -> List[Row]:
    return [
        (r.setting_index, r.trial, r.settings[0], r.settings[1], outcome_code(mode, r.outcome))
        for r in records
    ]


class ReportWriter:
    """Writes record and report files for one run into an output directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_records(self, mode: Mode, records: Sequence[TrialRecord], fmt: str = "csv") -> Path:
        """
        Save one row per trial.

        Args:
            mode: Mode the records were drawn in (fixes the outcome codes)
            records: Sampled trials
            fmt: 'csv' or 'json'

        Returns:
            Path to the records file
        """
        rows = record_rows(mode, records)
        if fmt == "csv":
            filepath = self.out_dir / "records.csv"
            with open(filepath, 'w', encoding='utf-8', newline='') as f:
                f.write(RECORDS_HEADER + "\n")
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(RECORD_COLUMNS)
                writer.writerows(rows)
        elif fmt == "json":
            filepath = self.out_dir / "records.json"
            with open(filepath, 'w', encoding='utf-8') as f:
                json.dump({
                    "format": RECORDS_HEADER.lstrip("# "),
                    "columns": list(RECORD_COLUMNS),
                    "rows": [list(row) for row in rows],
                }, f)
        else:
            raise ValueError(f"Unknown records format '{fmt}'")

        logger.info(f"Saved {len(rows)} records to {filepath}")
        return filepath

    def write_bundle(self, bundle: Dict[str, Any], name: str = "reports.json") -> Path:
        filepath = self.out_dir / name
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(bundle, f, indent=2, allow_nan=False)
            f.write("\n")
        logger.info(f"Saved report to {filepath}")
        return filepath


def read_records(filepath: Path) -> List[Row]:
    """Rows of a records file in either format."""
    if filepath.suffix == ".json":
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
        return [(int(s), int(t), float(a), float(b), str(o)) for s, t, a, b, o in data["rows"]]

    with open(filepath, 'r', encoding='utf-8', newline='') as f:
        header = f.readline().rstrip("\n")
        if header != RECORDS_HEADER:
            raise ValueError(f"Unexpected records header {header!r}")
        reader = csv.reader(f)
        columns = next(reader)
        if tuple(columns) != RECORD_COLUMNS:
            raise ValueError(f"Unexpected records columns {columns}")
        return [(int(s), int(t), float(a), float(b), o) for s, t, a, b, o in reader]


def load_bundle(filepath: Path) -> Dict[str, Any]:
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)
