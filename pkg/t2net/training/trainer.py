"""
Adam training loop over the joint loss.

Batches are drawn uniformly with replacement from a seeded generator, or, in
epoch mode, from one seeded permutation of the dataset per epoch. Training is
deterministic given ``TrainConfig.seed``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator, Sequence

import numpy as np

from t2net.engine.optim import Adam
from t2net.engine.tensor import Tape, Tensor
from t2net.errors import ContractError, DimensionError, NumericalError
from t2net.models.configs import TrainConfig, Variant
from t2net.models.reports import StepRecord, TrainLog
from t2net.mri.sample import SampleTriple
from t2net.network.params import T2NetParams
from t2net.network.t2net import t2net_forward
from t2net.training.evaluate import evaluate
from t2net.training.loss import loss_terms

logger = logging.getLogger("t2net.training.trainer")

StepCallback = Callable[[int, T2NetParams], None]


def stack_batch(samples: Sequence[SampleTriple]) -> tuple[Tensor, Tensor, Tensor]:
    """Concatenate B single-slice triples along the batch axis."""
    shapes = {(s.input_lr.shape, s.target_sr.shape) for s in samples}
    if len(shapes) != 1:
        raise DimensionError(f"batch mixes slice shapes: {sorted(shapes)}")
    return (
        Tensor.wrap(np.concatenate([s.input_lr.data for s in samples], axis=0)),
        Tensor.wrap(np.concatenate([s.target_rec.data for s in samples], axis=0)),
        Tensor.wrap(np.concatenate([s.target_sr.data for s in samples], axis=0)),
    )


def batch_schedule(dataset_size: int, cfg: TrainConfig) -> Iterator[np.ndarray]:
    """Slice indices for every optimizer step."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.epochs is None:
        for _ in range(cfg.steps):
            yield rng.integers(0, dataset_size, size=cfg.batch)
        return
    for _ in range(cfg.epochs):
        order = rng.permutation(dataset_size)
        for start in range(0, dataset_size, cfg.batch):
            yield order[start:start + cfg.batch]


class Trainer:
    """Owns the parameters and optimizer state of one training run."""

    def __init__(self, cfg: TrainConfig, params: T2NetParams | None = None) -> None:
        self.cfg = cfg
        self.params = params if params is not None else T2NetParams.init(cfg.model, cfg.seed)
        if self.params.config != cfg.model:
            raise ContractError("parameters were built for a different model config")
        self.optimizer = Adam(
            self.params.tensors,
            lr=cfg.lr,
            beta1=cfg.adam_beta1,
            beta2=cfg.adam_beta2,
            eps=cfg.adam_eps,
        )
        self.log = TrainLog()

    def step(self, batch: Sequence[SampleTriple], step: int) -> StepRecord:
        """One forward/backward/update on a batch; raises on a non-finite loss."""
        input_lr, target_rec, target_sr = stack_batch(batch)
        self.optimizer.zero_grad()
        with Tape() as tape:
            x_sr, x_rec = t2net_forward(input_lr, self.params)
            terms = loss_terms(
                x_sr,
                target_sr,
                x_rec,
                target_rec if self.cfg.variant != Variant.NO_REC else None,
                self.cfg.alpha,
                self.cfg.beta,
            )
        total, sr_term, rec_term = terms.as_floats()
        if not np.isfinite(total):
            raise NumericalError(
                f"non-finite loss at step {step} (sr_term={sr_term}, rec_term={rec_term})"
            )
        tape.backward(terms.total)
        self.optimizer.step()
        record = StepRecord(step=step, total=total, sr_term=sr_term, rec_term=rec_term)
        self.log.steps.append(record)
        return record

    def run(
        self,
        dataset: Sequence[SampleTriple],
        on_step: StepCallback | None = None,
    ) -> tuple[T2NetParams, TrainLog]:
        if not dataset:
            raise ContractError("cannot train on an empty dataset")
        budget = self.cfg.total_steps(len(dataset))
        logger.info(
            "Training %s: %d slices, %d steps, batch %d, lr %g, α=%g β=%g",
            self.cfg.variant.value, len(dataset), budget, self.cfg.batch,
            self.cfg.lr, self.cfg.alpha, self.cfg.beta,
        )
        for step, indices in enumerate(batch_schedule(len(dataset), self.cfg), start=1):
            record = self.step([dataset[int(i)] for i in indices], step)
            if step == 1 or step % self.cfg.log_every == 0 or step == budget:
                logger.info(
                    "step %d/%d loss %.6f (sr %.6f, rec %.6f)",
                    step, budget, record.total, record.sr_term, record.rec_term,
                )
            if self.cfg.eval_every and step % self.cfg.eval_every == 0:
                report = evaluate(self.params, dataset)
                self.log.evaluations.append(report)
                logger.info(
                    "step %d eval: SR %.3f dB, Rec %s",
                    step, report.sr.psnr_db,
                    f"{report.rec.psnr_db:.3f} dB" if report.rec else "-",
                )
            if on_step is not None:
                on_step(step, self.params)
        if self.log.steps:
            logger.info(
                "Finished: loss %.6f → %.6f", self.log.initial_loss, self.log.final_loss
            )
        return self.params, self.log


def train(
    dataset: Sequence[SampleTriple],
    cfg: TrainConfig,
    params: T2NetParams | None = None,
) -> tuple[T2NetParams, TrainLog]:
    """Train from ``params`` (or a fresh seeded initialization) and return the log."""
    return Trainer(cfg, params).run(dataset)
