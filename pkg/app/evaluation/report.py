"""EvalReport: JSON with a stable key schema plus a plain-text table."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from app.evaluation.alignment import ErrorCounts
from app.evaluation.metrics import Rate

REPORT_FILE = "report.json"
TABLE_FILE = "report.txt"


class WerSummary(BaseModel):
    value: Optional[float] = Field(None, description="Percent; may exceed 100")
    substitutions: int
    deletions: int
    insertions: int
    reference_words: int

    @classmethod
    def from_counts(cls, counts: ErrorCounts) -> "WerSummary":
        return cls(
            value=counts.percent,
            substitutions=counts.substitutions,
            deletions=counts.deletions,
            insertions=counts.insertions,
            reference_words=counts.reference_words,
        )


class LevelSummary(BaseModel):
    """Metrics restricted to the samples masked at one probability (or all of them, ``aug``)."""

    n_samples: int
    wer: WerSummary
    rr: Optional[Rate] = None


class CategorySummary(BaseModel):
    rr: Optional[Rate] = None
    gr: Optional[Rate] = None
    word_accuracy: Optional[Rate] = None


class IouRow(BaseModel):
    k: int
    top_k: Rate
    random_k: Rate


class AttentionConcentration(BaseModel):
    mean_weight_by_rank: list[float]
    top1_mass: float
    top3_mass: float
    n_words: int


class EvalReport(BaseModel):
    dataset: str
    checkpoint: str
    variant: str
    n_samples: int
    metrics: list[str]
    wer: Optional[WerSummary] = None
    levels: dict[str, LevelSummary] = Field(default_factory=dict)
    rr: Optional[Rate] = None
    e_alpha_v: Optional[float] = Field(None, description="Mean alpha_v over this dataset's decode steps")
    gr_threshold: Optional[float] = None
    gr_threshold_source: Optional[str] = None
    gr: Optional[Rate] = None
    categories: dict[str, CategorySummary] = Field(default_factory=dict)
    iou: list[IouRow] = Field(default_factory=list)
    attention: Optional[AttentionConcentration] = None

    def write(self, out_dir: Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path, table_path = out_dir / REPORT_FILE, out_dir / TABLE_FILE
        json_path.write_text(json.dumps(self.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
        table_path.write_text(format_table(self), encoding="utf-8")
        return json_path, table_path

    @classmethod
    def read(cls, path: Path) -> "EvalReport":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _pct(value: Optional[float]) -> str:
    return "absent" if value is None else f"{value:.1f}"


def _rate(rate: Optional[Rate]) -> str:
    if rate is None:
        return "-"
    return f"{_pct(rate.value)} ({rate.numerator}/{rate.denominator})"


def format_table(report: EvalReport) -> str:
    lines = [
        f"dataset     {report.dataset}",
        f"checkpoint  {report.checkpoint}",
        f"variant     {report.variant}",
        f"samples     {report.n_samples}",
        "",
    ]
    if report.wer is not None:
        lines.append(f"WER         {_pct(report.wer.value)}")
    if report.rr is not None:
        lines.append(f"RR          {_rate(report.rr)}")
    if report.e_alpha_v is not None:
        lines.append(f"E[alpha_v]  {report.e_alpha_v:.4f}")
    if report.gr is not None:
        lines.append(f"GR          {_rate(report.gr)}  threshold {report.gr_threshold:.4f} from {report.gr_threshold_source}")
    if report.levels:
        lines += ["", f"{'level':<8}{'samples':>8}  {'WER':>8}  RR"]
        for level, summary in report.levels.items():
            lines.append(f"{level:<8}{summary.n_samples:>8}  {_pct(summary.wer.value):>8}  {_rate(summary.rr)}")
    if report.categories:
        lines += ["", f"{'category':<16}{'RR':<22}{'GR':<22}word accuracy"]
        for name, summary in report.categories.items():
            lines.append(f"{name:<16}{_rate(summary.rr):<22}{_rate(summary.gr):<22}{_rate(summary.word_accuracy)}")
    if report.iou:
        lines += ["", f"{'K':<4}{'top-K':<22}random-K"]
        for row in report.iou:
            lines.append(f"{row.k:<4}{_rate(row.top_k):<22}{_rate(row.random_k)}")
    if report.attention is not None:
        att = report.attention
        lines += [
            "",
            f"proposal attention over {att.n_words} recovered words: top-1 {att.top1_mass:.3f}, top-3 {att.top3_mass:.3f}",
        ]
    return "\n".join(lines) + "\n"
