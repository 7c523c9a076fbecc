"""Metric, evaluation and training-log records."""

from __future__ import annotations

from pydantic import BaseModel, Field

from t2net.models.configs import Variant


class MetricReport(BaseModel):
    """PSNR / SSIM / NMSE for one prediction-target pair (or their average)."""

    psnr_db: float
    ssim: float = Field(ge=-1.0, le=1.0)
    nmse: float = Field(ge=0.0)

    @classmethod
    def average(cls, reports: list[MetricReport]) -> MetricReport:
        n = len(reports)
        if n == 0:
            raise ValueError("Cannot average an empty list of metric reports")
        return cls(
            psnr_db=sum(r.psnr_db for r in reports) / n,
            ssim=sum(r.ssim for r in reports) / n,
            nmse=sum(r.nmse for r in reports) / n,
        )


class EvaluationReport(BaseModel):
    """Per-slice-averaged metrics of both outputs plus the input baselines."""

    sr: MetricReport
    rec: MetricReport | None = None
    sr_baseline: MetricReport
    rec_baseline: MetricReport
    num_slices: int = 0
    scale: int = 2
    variant: Variant = Variant.FULL


class StepRecord(BaseModel):
    step: int
    total: float
    sr_term: float
    rec_term: float


class TrainLog(BaseModel):
    """Loss history of one training run (one record per optimizer step)."""

    steps: list[StepRecord] = Field(default_factory=list)
    evaluations: list[EvaluationReport] = Field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.steps[0].total if self.steps else float("nan")

    @property
    def final_loss(self) -> float:
        return self.steps[-1].total if self.steps else float("nan")

    def to_csv(self) -> str:
        lines = ["step,total,sr_term,rec_term"]
        for s in self.steps:
            lines.append(f"{s.step},{s.total!r},{s.sr_term!r},{s.rec_term!r}")
        return "\n".join(lines) + "\n"


class AblationRow(BaseModel):
    variant: Variant
    evaluation: EvaluationReport
    final_loss: float
