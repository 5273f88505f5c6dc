"""Speaker-disjoint folds and the two evaluation metrics.

Also reconstructs the degenerate constant-predictor cell: with class priors
{0.2, 6 x 0.1333} a model that always answers one minority class scores
13.33% accuracy and 3.36% macro F1 - the signature of selections that
collapse to empty segments.
"""

from surpsel import compute_metrics, make_folds


def main():
    speakers = [(i, "male" if i % 2 == 1 else "female") for i in range(1, 25)]
    folds = make_folds(speakers, k=10, seed=7)
    print("fold  test (M,F)   val (M,F)    train size")
    for fold in folds:
        print(f"{fold.fold_id:>4}  {fold.test_speakers}     {fold.val_speakers}"
              f"      {len(fold.train_speakers)}")
    tested = {s for fold in folds for s in fold.test_speakers}
    print(f"\nspeakers never tested under k=10: {sorted(set(range(1, 25)) - tested)}")

    pairs = [(c, c) for c in range(7) for _ in range(10)]
    print("\nperfect predictor:", compute_metrics(pairs))

    degenerate = []
    for _ in range(2):  # a 2-speaker test fold
        degenerate += [(0, 1)] * 12          # merged neutral+calm class
        for c in range(1, 7):
            degenerate += [(c, 1)] * 8
    accuracy, macro_f1 = compute_metrics(degenerate)
    print(f"constant-class predictor: accuracy {100 * accuracy:.2f}%  "
          f"macro F1 {100 * macro_f1:.2f}%")


if __name__ == "__main__":
    main()
