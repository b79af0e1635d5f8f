"""Per-joint deep network stacks and the assembled task-space Jacobian.

Each joint k owns an independent stack of weight matrices.  Stacking the
per-joint network outputs column by column yields the estimated Jacobian:
column k is ``W[n] @ sigmoid(W[n-1] @ ... sigmoid(W[1] @ q))`` for an
n-layer stack.  The inner layers double as the input weights of the
modular observer systems used during online learning; the observer
*output* weights (``Wo``) exist only for learning and never enter the
assembled Jacobian.

Weights are stored stacked across joints: ``W[l]`` has shape
``(m, size[l+1], size[l])`` so that ``W[l][k]`` is the 2-D matrix of
layer ``l+1`` (1-based) for joint ``k``.
"""

from dataclasses import dataclass, field

import numpy as np

WEIGHT_FILE_MAGIC = "jacnet v1"


@dataclass(frozen=True)
class NetConfig:
    """Architecture of the per-joint stacks.

    layer_sizes lists the input width, every hidden width and the output
    width, so a stack with n weight layers has n+1 entries.  Only sigmoid
    activations are supported; the field exists so configs stay explicit.
    """

    layer_sizes: tuple
    m: int
    activation: str = "sigmoid"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if self.activation != "sigmoid":
            raise ValueError(f"unsupported activation {self.activation!r}: only 'sigmoid' is accepted")
        if self.n < 3:
            raise ValueError(f"need at least 3 weight layers, got {self.n}")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {self.layer_sizes}")
        if self.m < 1:
            raise ValueError(f"column count must be >= 1, got {self.m}")

    @property
    def n(self):
        """Number of weight layers."""
        return len(self.layer_sizes) - 1

    @property
    def n_systems(self):
        """Number of modular observer systems (all layers except the last two)."""
        return self.n - 2

    @property
    def p(self):
        """Task-space dimension (output width)."""
        return self.layer_sizes[-1]

    @property
    def m_in(self):
        """Input width (joint-vector length)."""
        return self.layer_sizes[0]


@dataclass
class ColumnStack:
    """All weight matrices belonging to one Jacobian column.

    W[i] is the input weight matrix of layer i+1 (n entries), Wo[i] is the
    observer output weight matrix of modular system i+1 (n-2 entries).
    """

    W: list
    Wo: list


@dataclass
class JacNet:
    """Estimated Jacobian network: one ColumnStack per joint, stored stacked."""

    config: NetConfig
    W: list = field(repr=False)
    Wo: list = field(repr=False)

    def column(self, k):
        """View of joint k's stack (no copies; mutating it mutates the net)."""
        if not 0 <= k < self.config.m:
            raise IndexError(f"column {k} out of range for m={self.config.m}")
        return ColumnStack(W=[Wl[k] for Wl in self.W], Wo=[Wl[k] for Wl in self.Wo])

    def copy(self):
        return JacNet(
            config=self.config,
            W=[Wl.copy() for Wl in self.W],
            Wo=[Wl.copy() for Wl in self.Wo],
        )

    def allclose(self, other, rtol=0.0, atol=0.0):
        if self.config != other.config:
            return False
        return all(
            np.allclose(a, b, rtol=rtol, atol=atol)
            for a, b in zip(self.W + self.Wo, other.W + other.Wo)
        )

    def equal_bits(self, other):
        """Bit-for-bit weight equality."""
        if self.config != other.config:
            return False
        return all(
            a.shape == b.shape and np.array_equal(a.view(np.uint64), b.view(np.uint64))
            for a, b in zip(self.W + self.Wo, other.W + other.Wo)
        )

    def max_abs_weight(self):
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.W + self.Wo)


def expected_shapes(config):
    """(W shapes, Wo shapes) implied by a NetConfig, in storage order."""
    s = config.layer_sizes
    w_shapes = [(config.m, s[l + 1], s[l]) for l in range(config.n)]
    wo_shapes = [(config.m, config.p, s[l + 1]) for l in range(config.n_systems)]
    return w_shapes, wo_shapes


def sigma(v):
    """Elementwise logistic function 1 / (1 + exp(-v))."""
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-v))


def sigma_prime(v):
    """Elementwise derivative of sigma: sigma(v) * (1 - sigma(v))."""
    s = sigma(v)
    return s * (1.0 - s)


def sigma_prime_diag(v):
    """Derivative of sigma as a diagonal matrix."""
    return np.diag(sigma_prime(np.atleast_1d(v)))


def column_activations(net, k, q):
    """Activations of joint k's stack at q.

    Returns (acts, pre), where acts[0] = q and acts[l] = sigma(pre[l]) with
    pre[l] = W[l] @ acts[l-1] for l = 1..n-1 (the output layer is linear
    and not included).
    """
    q = np.asarray(q, dtype=float)
    cfg = net.config
    if q.shape != (cfg.m_in,):
        raise ValueError(f"q has shape {q.shape}, expected ({cfg.m_in},)")
    acts = [q]
    pre = [None]
    for l in range(cfg.n - 1):
        v = net.W[l][k] @ acts[-1]
        pre.append(v)
        acts.append(sigma(v))
    return acts, pre


def hidden_state(net, k, l, q):
    """Input vector of modular system l for joint k (1-based l).

    System 1 takes q itself; system l takes the previous system's hidden
    layer, i.e. sigma(W[l-1] @ ... sigma(W[1] @ q)).
    """
    cfg = net.config
    if not 1 <= l <= cfg.n - 1:
        raise IndexError(f"system index {l} out of range 1..{cfg.n - 1}")
    acts, _ = column_activations(net, k, q)
    return acts[l - 1]


def assemble_jacobian(net, q):
    """Estimated Jacobian at q: column k is W[n][k] @ (last hidden activation).

    Only the input weights W enter; the observer output weights Wo do not.
    """
    cfg = net.config
    J = np.empty((cfg.p, cfg.m))
    for k in range(cfg.m):
        acts, _ = column_activations(net, k, q)
        J[:, k] = net.W[cfg.n - 1][k] @ acts[cfg.n - 1]
    return J


def jacobian_velocity(net, q, qdot):
    """Predicted task velocity, assemble_jacobian(net, q) @ qdot."""
    qdot = np.asarray(qdot, dtype=float)
    if qdot.shape != (net.config.m,):
        raise ValueError(f"qdot has shape {qdot.shape}, expected ({net.config.m},)")
    return assemble_jacobian(net, q) @ qdot


def pseudoinverse(J, rcond=1e-8):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below rcond times the largest singular value are
    treated as zero, which keeps commands bounded near singularities.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("pseudoinverse input contains non-finite entries")
    return np.linalg.pinv(J, rcond=rcond)


def init_weights(config, seed, scale=0.1):
    """Fresh JacNet with i.i.d. uniform(-scale, scale) entries.

    Uses the seeded PCG64 generator, drawing the W layers in order and the
    Wo layers after them, so results are reproducible across platforms.
    """
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    rng = np.random.Generator(np.random.PCG64(seed))
    w_shapes, wo_shapes = expected_shapes(config)
    W = [rng.uniform(-scale, scale, size=sh) for sh in w_shapes]
    Wo = [rng.uniform(-scale, scale, size=sh) for sh in wo_shapes]
    return JacNet(config=config, W=W, Wo=Wo)


def zero_weights(config):
    w_shapes, wo_shapes = expected_shapes(config)
    return JacNet(
        config=config,
        W=[np.zeros(sh) for sh in w_shapes],
        Wo=[np.zeros(sh) for sh in wo_shapes],
    )


def _format_matrix(name, mat, out):
    out.append(f"{name} {mat.shape[0]} {mat.shape[1]}")
    for row in mat:
        out.append(" ".join(f"{v:.17g}" for v in row))


def save_weights(net, path):
    """Write a net to the versioned plain-text weight format.

    Values are decimal with 17 significant digits, which round-trips
    64-bit floats exactly.
    """
    cfg = net.config
    lines = [
        WEIGHT_FILE_MAGIC,
        f"n {cfg.n}",
        f"m {cfg.m}",
        "layer_sizes " + " ".join(str(s) for s in cfg.layer_sizes),
    ]
    for l in range(cfg.n):
        for k in range(cfg.m):
            _format_matrix(f"W[{l + 1}][{k + 1}]", net.W[l][k], lines)
    for l in range(cfg.n_systems):
        for k in range(cfg.m):
            _format_matrix(f"Wo[{l + 1}][{k + 1}]", net.Wo[l][k], lines)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


class WeightFileError(ValueError):
    """Malformed or inconsistent weight file."""


def _parse_header_line(lines, idx, key):
    if idx >= len(lines):
        raise WeightFileError(f"truncated weight file: missing '{key}' header line")
    parts = lines[idx].split()
    if not parts or parts[0] != key:
        raise WeightFileError(f"expected '{key}' header line, got {lines[idx]!r}")
    return parts[1:]


def load_weights(path):
    """Read a net written by save_weights, validating shapes against the header."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0] != WEIGHT_FILE_MAGIC:
        raise WeightFileError(f"not a '{WEIGHT_FILE_MAGIC}' weight file: {path}")
    n = int(_parse_header_line(lines, 1, "n")[0])
    m = int(_parse_header_line(lines, 2, "m")[0])
    sizes = [int(s) for s in _parse_header_line(lines, 3, "layer_sizes")]
    if len(sizes) != n + 1:
        raise WeightFileError(f"layer_sizes has {len(sizes)} entries, expected n+1 = {n + 1}")
    config = NetConfig(layer_sizes=tuple(sizes), m=m)
    w_shapes, wo_shapes = expected_shapes(config)

    idx = 4

    def read_matrix(name, rows, cols):
        nonlocal idx
        if idx >= len(lines):
            raise WeightFileError(f"truncated weight file: missing matrix {name}")
        parts = lines[idx].split()
        if len(parts) != 3 or parts[0] != name:
            raise WeightFileError(f"expected matrix header {name!r}, got {lines[idx]!r}")
        got = (int(parts[1]), int(parts[2]))
        if got != (rows, cols):
            raise WeightFileError(
                f"layer_sizes mismatch at {name}: file declares {got[0]}x{got[1]}, "
                f"header implies {rows}x{cols}"
            )
        idx += 1
        mat = np.empty((rows, cols))
        for r in range(rows):
            if idx >= len(lines):
                raise WeightFileError(f"truncated weight file inside matrix {name}")
            vals = lines[idx].split()
            if len(vals) != cols:
                raise WeightFileError(f"row {r} of {name} has {len(vals)} values, expected {cols}")
            mat[r] = [float(v) for v in vals]
            idx += 1
        return mat

    W = []
    for l in range(n):
        mk, rows, cols = m, w_shapes[l][1], w_shapes[l][2]
        W.append(np.stack([read_matrix(f"W[{l + 1}][{k + 1}]", rows, cols) for k in range(mk)]))
    Wo = []
    for l in range(config.n_systems):
        rows, cols = wo_shapes[l][1], wo_shapes[l][2]
        Wo.append(np.stack([read_matrix(f"Wo[{l + 1}][{k + 1}]", rows, cols) for k in range(m)]))
    if idx != len(lines):
        raise WeightFileError(f"trailing data after weights at line {idx + 1}")
    return JacNet(config=config, W=W, Wo=Wo)
