"""Score detections against ground truth and read the report.

Builds a toy ground-truth/prediction pair on disk, then runs the full
evaluation: per-class AP and mAP50, an F1-vs-confidence curve, the
adapted confusion matrix, and the two gap metrics.

Run:  python3 demos/evaluate_predictions.py
"""

from pathlib import Path

from synthdet.pipeline import evaluate, report_text

gt_dir = Path("demo_out/eval/gt")
pred_dir = Path("demo_out/eval/pred")
gt_dir.mkdir(parents=True, exist_ok=True)
pred_dir.mkdir(parents=True, exist_ok=True)

# Ground truth: YOLO format, one file per image.
(gt_dir / "img_000.txt").write_text(
    "0 0.30 0.30 0.20 0.20\n"  # class 0, found below
    "1 0.70 0.70 0.20 0.20\n"  # class 1, missed entirely
)
(gt_dir / "img_001.txt").write_text("0 0.50 0.50 0.40 0.40\n")

# Predictions add a confidence column after the class id.
(pred_dir / "img_000.txt").write_text("0 0.92 0.31 0.30 0.20 0.20\n")
(pred_dir / "img_001.txt").write_text(
    "0 0.88 0.50 0.50 0.40 0.40\n"
    "0 0.85 0.52 0.50 0.40 0.40\n"  # duplicate: counted as a false positive
)

report = evaluate(
    gt_dir,
    pred_dir,
    iou_thr=0.5,
    conf_thr=0.8,
    report_path="demo_out/eval/report.json",
    # Optional: supply mAP50 of train/valid/test runs to get the gap metrics.
    # g_ml = train - valid (overfitting); g_reality = valid - test (sim-to-real).
    map_train=99.84,
    map_valid=83.16,
    map_test=10.83,
    num_classes=2,
)

print(report_text(report))
print(f"g_ml = {report.g_ml:.2f}, g_reality = {report.g_reality:.2f}")

# The adapted confusion matrix is (c+1)x(c+1): the extra column collects
# ground truths no prediction matched, the extra row predictions that
# matched nothing.  Rows = true class, columns = predicted class.
print("confusion counts:")
print(report.confusion.counts)
print("\nfull JSON report: demo_out/eval/report.json")
