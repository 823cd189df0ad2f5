"""Convert a multi-label ARFF file (labels as the last N binary attributes,
as in the Scene and Yeast distributions) to the .mll text format.

    python demos/arff_to_mll.py scene-train.arff data/scene/train.mll --labels 6
    python demos/arff_to_mll.py scene-test.arff  data/scene/test.mll  --labels 6

With both files in data/scene/ the real-data acceptance test runs instead
of being skipped.
"""
import argparse
from pathlib import Path

import numpy as np
from scipy.io import arff

from treem3n.data_io import Dataset, write_dataset


def convert(src, dst, n_labels):
    rows, meta = arff.loadarff(src)
    names = meta.names()
    feat, lab = names[:-n_labels], names[-n_labels:]
    X = np.column_stack([rows[n].astype(float) for n in feat])
    # nominal {0,1} attributes load as bytes
    Y = np.column_stack([np.char.decode(rows[n].astype("S")).astype(int)
                         if rows[n].dtype.kind == "S" else rows[n].astype(int)
                         for n in lab])
    Path(dst).parent.mkdir(parents=True, exist_ok=True)
    write_dataset(Dataset(len(lab), len(feat), X, Y), dst)
    return X.shape[0], len(feat), len(lab)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src")
    ap.add_argument("dst")
    ap.add_argument("--labels", type=int, required=True,
                    help="number of trailing label attributes")
    args = ap.parse_args()
    m, d, L = convert(args.src, args.dst, args.labels)
    print(f"{args.dst}: {m} instances, {d} features, {L} labels")
