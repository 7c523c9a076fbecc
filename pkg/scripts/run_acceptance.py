"""
Desk-scale acceptance run: train the default model on a simulated dataset,
compare it with the input baselines, then run the three-way ablation.

Usage:
    python scripts/run_acceptance.py [--steps 500] [--skip-ablation]
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv  # noqa: E402

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)
logger = logging.getLogger("t2net.acceptance")

from t2net.configs.loader import load_config  # noqa: E402
from t2net.mri.dataset import DatasetSpec, simulate_slices  # noqa: E402
from t2net.training.ablation import ablation_trend, format_ablation, run_ablation  # noqa: E402
from t2net.training.evaluate import evaluate, format_evaluation  # noqa: E402
from t2net.training.trainer import train  # noqa: E402

LOSS_RATIO_MAX = 0.5
SR_GAIN_MIN_DB = 1.0
REC_GAIN_MIN_DB = 0.5


def main() -> int:
    parser = argparse.ArgumentParser(description="Desk-scale acceptance run")
    parser.add_argument("--steps", type=int, default=None, help="Override the preset step count")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--skip-ablation", action="store_true")
    args = parser.parse_args()

    overrides = {"steps": args.steps} if args.steps is not None else {}
    cfg = load_config("desk", overrides)
    spec = DatasetSpec(slices=16, size=64, scale=cfg.model.scale, acceleration=6.0)

    print("=" * 70)
    print("DATASET")
    print("=" * 70)
    dataset = simulate_slices(spec, threads=args.threads)
    print(f"  {spec.slices} slices, {spec.size}x{spec.size}, scale {spec.scale}, "
          f"{spec.acceleration}x mask")

    print("\n" + "=" * 70)
    print("TRAINING")
    print("=" * 70)
    params, log = train(dataset, cfg)
    ratio = log.final_loss / log.initial_loss
    print(f"  loss {log.initial_loss:.6f} -> {log.final_loss:.6f} (ratio {ratio:.3f})")

    print("\n" + "=" * 70)
    print("EVALUATION")
    print("=" * 70)
    report = evaluate(params, dataset, threads=args.threads)
    print(format_evaluation(report))
    sr_gain = report.sr.psnr_db - report.sr_baseline.psnr_db
    rec_gain = (report.rec.psnr_db if report.rec else float("-inf")) - report.rec_baseline.psnr_db

    checks = {
        f"loss ratio <= {LOSS_RATIO_MAX}": ratio <= LOSS_RATIO_MAX,
        f"SR gain over bicubic >= {SR_GAIN_MIN_DB} dB ({sr_gain:+.2f})": sr_gain >= SR_GAIN_MIN_DB,
        f"Rec gain over zero-filled >= {REC_GAIN_MIN_DB} dB ({rec_gain:+.2f})":
            rec_gain >= REC_GAIN_MIN_DB,
    }

    if not args.skip_ablation:
        print("\n" + "=" * 70)
        print("ABLATION")
        print("=" * 70)
        rows = run_ablation(dataset, cfg)
        print(format_ablation(rows))
        trend = ablation_trend(rows)
        order = "holds" if trend.expected_order else "violated"
        print(f"  full >= no_tt >= no_rec {order}")
        checks["full within tolerance of no_rec"] = not trend.failed

    print("\n" + "=" * 70)
    print("SUMMARY")
    print("=" * 70)
    for name, ok in checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")

    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.error("%d acceptance check(s) failed", len(failed))
        return 1
    logger.info("All acceptance checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
