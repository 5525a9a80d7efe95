"""
Comparison runs: modality ablation, backbone comparison and map
utilization. Every row is trained with the same budget and seeds and
evaluated on the same test split.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from trajreason.errors import ConfigError, DataError
from trajreason.harness.config import MODALITIES, TrainConfig
from trajreason.harness.evaluate import evaluate_scenes
from trajreason.harness.factory import load_dataset, split_scenes
from trajreason.harness.train import train_on_scenes
from trajreason.metrics import MetricsReport
from trajreason.scenes.types import Scene
from trajreason.telemetry import get_telemetry, trace_run

logger = logging.getLogger("trajreason.harness.ablation")


@dataclass
class AblationTable:
    """
    Rows of metrics, one per configuration.

    With several seeds every number is the median across seeds, and
    ``per_seed`` keeps the individual reports. Rows listed in ``baselines``
    also report the signed percentage change of their longest-horizon ADE
    against the named baseline row.
    """

    study: str
    rows: List[Tuple[str, MetricsReport]] = field(default_factory=list)
    seeds: Tuple[int, ...] = (0,)
    per_seed: Dict[str, List[MetricsReport]] = field(default_factory=dict)
    baselines: Dict[str, str] = field(default_factory=dict)

    def row(self, name: str) -> MetricsReport:
        for row_name, report in self.rows:
            if row_name == name:
                return report
        raise KeyError(name)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.rows]

    def delta_percent(self, name: str) -> Optional[float]:
        """Change in ADE at the longest horizon relative to the baseline row, in percent."""
        if name not in self.baselines:
            return None
        report, baseline = self.row(name), self.row(self.baselines[name])
        horizon = list(report.ade)[-1]
        reference = baseline.ade[horizon][0]
        if reference == 0:
            return None
        return 100.0 * (report.ade[horizon][0] - reference) / reference

    def _delta_column(self) -> Optional[str]:
        if not self.baselines:
            return None
        return f"Δ% ADE({list(self.rows[0][1].ade)[-1]})"

    @staticmethod
    def _delta_cell(delta: Optional[float]) -> str:
        return "" if delta is None else f"{delta:+.2f}"

    def to_dict(self) -> Dict:
        return {
            "study": self.study,
            "seeds": list(self.seeds),
            "rows": [self._row_dict(name, report) for name, report in self.rows],
        }

    def _row_dict(self, name: str, report: MetricsReport) -> Dict:
        row = dict(name=name, **report.to_dict())
        if name in self.baselines:
            row["baseline"] = self.baselines[name]
            row["delta_pct"] = self.delta_percent(name)
        return row

    def _columns(self) -> List[str]:
        first = self.rows[0][1]
        return (
            [f"ADE±STD({k})" for k in first.ade]
            + [f"FDE±STD({k})" for k in first.fde]
            + ["MR (%)", "IE (s)"]
        )

    def _cells(self, report: MetricsReport) -> List[str]:
        cells = [f"{m:.3f}±{s:.3f}" for m, s in report.ade.values()]
        cells += [f"{m:.3f}±{s:.3f}" for m, s in report.fde.values()]
        cells.append(f"{100 * report.miss_rate:.1f}")
        ie = report.inference_efficiency
        cells.append("" if ie is None else f"{ie:.4f}")
        return cells

    def to_markdown(self) -> str:
        delta = self._delta_column()
        header = ["Model"] + self._columns() + ([delta] if delta else [])
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join("---" for _ in header) + "|",
        ]
        for name, report in self.rows:
            cells = [name] + self._cells(report)
            if delta:
                cells.append(self._delta_cell(self.delta_percent(name)))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def save(self, output_dir: str, stem: Optional[str] = None) -> Dict[str, str]:
        """Write ``<stem>.json``, ``<stem>.csv`` and ``<stem>.md``; returns the paths."""
        os.makedirs(output_dir, exist_ok=True)
        stem = stem or self.study
        paths = {ext: os.path.join(output_dir, f"{stem}.{ext}") for ext in ("json", "csv", "md")}
        with open(paths["json"], "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        first = self.rows[0][1]
        with open(paths["csv"], "w", newline="") as f:
            writer = csv.writer(f)
            header = ["name"]
            header += [f"ade_{k}_{stat}" for k in first.ade for stat in ("mean", "std")]
            header += [f"fde_{k}_{stat}" for k in first.fde for stat in ("mean", "std")]
            header += ["mr", "ie_s", "n_scenes"]
            if self.baselines:
                header.append("delta_pct")
            writer.writerow(header)
            for name, report in self.rows:
                row = [name]
                row += [v for pair in report.ade.values() for v in pair]
                row += [v for pair in report.fde.values() for v in pair]
                row += [report.miss_rate, report.inference_efficiency, report.n_scenes]
                if self.baselines:
                    delta = self.delta_percent(name)
                    row.append("" if delta is None else delta)
                writer.writerow(row)
        with open(paths["md"], "w") as f:
            f.write(self.to_markdown())
        logger.info(f"Wrote {self.study} table to {output_dir}")
        return paths


def median_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Element-wise median of several reports over the same horizons."""
    if len(reports) == 1:
        return reports[0]
    first = reports[0]

    def med(values):
        return float(np.median(np.asarray(list(values), dtype=np.float64)))

    ies = [r.inference_efficiency for r in reports if r.inference_efficiency is not None]
    return MetricsReport(
        ade={k: (med(r.ade[k][0] for r in reports), med(r.ade[k][1] for r in reports)) for k in first.ade},
        fde={k: (med(r.fde[k][0] for r in reports), med(r.fde[k][1] for r in reports)) for k in first.fde},
        miss_rate=med(r.miss_rate for r in reports),
        n_scenes=first.n_scenes,
        inference_efficiency=med(ies) if ies else None,
    )


def _prepare(base: TrainConfig, scenes: Optional[Sequence[Scene]]) -> Tuple[List[Scene], List[Scene]]:
    base.validate()
    scenes = list(scenes) if scenes is not None else load_dataset(base)
    _, train_scenes, _, test_scenes = split_scenes(base, scenes)
    if not test_scenes:
        raise DataError("comparison runs need a non-empty test split")
    return train_scenes, test_scenes


def _run_rows(
    study: str,
    variants: Sequence[Tuple[str, TrainConfig]],
    train_scenes: Sequence[Scene],
    test_scenes: Sequence[Scene],
    seeds: Sequence[int],
) -> AblationTable:
    telemetry = get_telemetry()
    table = AblationTable(study=study, seeds=tuple(seeds))
    for name, config in variants:
        reports = []
        for seed in seeds:
            seeded = replace(config.with_seed(seed), checkpoint_path=None)
            with telemetry.start_span(
                name, "ABLATION", modality=seeded.modality.name, backbone=seeded.backbone.name
            ) as span:
                span.set_attribute("seed", seed)
                checkpoint = train_on_scenes(seeded, train_scenes)
                reports.append(evaluate_scenes(checkpoint, test_scenes))
        table.per_seed[name] = reports
        table.rows.append((name, median_report(reports)))
        logger.info(f"{study}: finished row {name}")
    return table


@trace_run("ablation")
def run_ablation(
    base: TrainConfig,
    modalities: Sequence[str] = tuple(MODALITIES),
    scenes: Optional[Sequence[Scene]] = None,
    seeds: Optional[Sequence[int]] = None,
    output_dir: Optional[str] = None,
) -> AblationTable:
    """One row per input modality; ``ego_only`` empties the neighbor lists of the same model."""
    unknown = [m for m in modalities if m not in MODALITIES]
    if unknown:
        raise ConfigError(f"Unknown modalities: {', '.join(unknown)}. Use {', '.join(MODALITIES)}")
    train_scenes, test_scenes = _prepare(base, scenes)
    variants = [(m, base.with_modality(m)) for m in modalities]
    table = _run_rows("modality", variants, train_scenes, test_scenes, seeds or (base.seed,))
    if output_dir:
        table.save(output_dir)
    return table


@trace_run("compare_backbones")
def compare_backbones(
    base: TrainConfig,
    names: Sequence[str],
    scenes: Optional[Sequence[Scene]] = None,
    seeds: Optional[Sequence[int]] = None,
    output_dir: Optional[str] = None,
) -> AblationTable:
    """One full-modality row per backbone name."""
    train_scenes, test_scenes = _prepare(base, scenes)
    full = base.with_modality("ego_neighbor_map")
    variants = [(name, full.with_backbone(name)) for name in names]
    table = _run_rows("backbones", variants, train_scenes, test_scenes, seeds or (base.seed,))
    if output_dir:
        table.save(output_dir)
    return table


@trace_run("map_utilization")
def run_map_utilization(
    base: TrainConfig,
    names: Sequence[str],
    scenes: Optional[Sequence[Scene]] = None,
    seeds: Optional[Sequence[int]] = None,
    output_dir: Optional[str] = None,
) -> AblationTable:
    """
    Rows ``<backbone>`` (ego + neighbors) and ``<backbone>+map`` per backbone;
    each ``+map`` row carries its change against the row without the map.
    """
    train_scenes, test_scenes = _prepare(base, scenes)
    variants = []
    for name in names:
        config = base.with_backbone(name)
        variants.append((name, config.with_modality("ego_neighbor")))
        variants.append((f"{name}+map", config.with_modality("ego_neighbor_map")))
    table = _run_rows("map_utilization", variants, train_scenes, test_scenes, seeds or (base.seed,))
    table.baselines = {f"{name}+map": name for name in names}
    if output_dir:
        table.save(output_dir)
    return table
