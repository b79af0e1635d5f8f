"""Training dataset container and its CSV encoding.

Columns: t, q1..qm, qd1..qdm, x1..xp, xd1..xdp where xd is the measured
task velocity.  Decimal text with 17 significant digits round-trips
doubles exactly.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    x: np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("q", "qdot", "x", "xdot"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ValueError(f"{name} has {arr.shape[0]} rows, expected {n}")
        if self.q.shape != self.qdot.shape or self.x.shape != self.xdot.shape:
            raise ValueError("mismatched joint or task dimensions")

    def __len__(self):
        return len(self.t)

    @property
    def m(self):
        return self.q.shape[1]

    @property
    def p(self):
        return self.x.shape[1]


def dataset_header(m, p):
    cols = ["t"]
    cols += [f"q{i + 1}" for i in range(m)]
    cols += [f"qd{i + 1}" for i in range(m)]
    cols += [f"x{i + 1}" for i in range(p)]
    cols += [f"xd{i + 1}" for i in range(p)]
    return ",".join(cols)


def save_dataset(ds, path):
    with open(path, "w") as f:
        f.write(dataset_header(ds.m, ds.p) + "\n")
        for i in range(len(ds)):
            row = np.concatenate(([ds.t[i]], ds.q[i], ds.qdot[i], ds.x[i], ds.xdot[i]))
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_dataset(path, m=None, p=None):
    """Read a dataset CSV; m and p are inferred from the header if omitted."""
    with open(path) as f:
        header = f.readline().strip()
        names = header.split(",")
        if m is None:
            m = sum(1 for c in names if c.startswith("q") and not c.startswith("qd"))
        if p is None:
            p = sum(1 for c in names if c.startswith("x") and not c.startswith("xd"))
        if dataset_header(m, p) != header:
            raise ValueError(f"unexpected dataset header {header!r}")
        rows = np.loadtxt(f, delimiter=",", ndmin=2)
    want = 1 + 2 * m + 2 * p
    if rows.shape[1] != want:
        raise ValueError(f"dataset has {rows.shape[1]} columns, expected {want}")
    off = 1
    q = rows[:, off:off + m]; off += m
    qd = rows[:, off:off + m]; off += m
    x = rows[:, off:off + p]; off += p
    xd = rows[:, off:off + p]
    return Dataset(t=rows[:, 0], q=q, qdot=qd, x=x, xdot=xd)
