"""CSV dataset files: header row, feature columns f1..fd, optional y column."""

from __future__ import annotations

import csv

import numpy as np

from ..kernel import Dataset


def save_dataset(path, dataset: Dataset, include_outputs: bool = True) -> None:
    with_y = include_outputs and dataset.outputs is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{i+1}" for i in range(dataset.dim)]
        if with_y:
            header.append("y")
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.X[i]]
            if with_y:
                row.append(repr(float(dataset.outputs[i])))
            writer.writerow(row)


def load_dataset(path, prior_mean=None) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: expected a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    has_y = header[-1] == "y"
    d = len(header) - (1 if has_y else 0)
    if header[:d] != [f"f{i+1}" for i in range(d)]:
        raise ValueError(f"{path}: header must be f1..fd[,y], got {header}")
    body = rows[1:]
    X = np.array([[float(v) for v in r[:d]] for r in body])
    y = np.array([float(r[d]) for r in body]) if has_y else None
    return Dataset(X, outputs=y, prior_mean=prior_mean)
