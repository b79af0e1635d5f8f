"""Ground-truth simulated plants.

Two plant kinds drive the experiments:

* ChainPlant: a serial revolute chain described by classic
  Denavit-Hartenberg parameters, with analytic forward kinematics and the
  geometric position Jacobian.
* TeacherPlant: a synthetic robot whose Jacobian IS a network with known
  weights, so the exact weight errors of a learner are observable.  Its
  task position is an integrated state (a generic network Jacobian field
  is not the gradient of any position map).

Both expose position/jacobian/step and integrate with explicit Euler.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import network


@dataclass(frozen=True)
class Link:
    """Classic DH row: T = Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha)."""

    a: float
    alpha: float
    d: float
    theta_offset: float = 0.0


@dataclass(frozen=True)
class DHChain:
    links: tuple
    task_dims: int = 3

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(
            ln if isinstance(ln, Link) else Link(*ln) for ln in self.links
        ))
        if self.m < 1:
            raise ValueError("chain needs at least one link")
        for ln in self.links:
            vals = (ln.a, ln.alpha, ln.d, ln.theta_offset)
            if not all(np.isfinite(v) for v in vals):
                raise ValueError(f"non-finite DH parameters: {ln}")
        if not 1 <= self.task_dims <= 3:
            raise ValueError(f"task_dims must be 1..3, got {self.task_dims}")

    @property
    def m(self):
        return len(self.links)


@dataclass(frozen=True)
class PlantState:
    """Joint angles and time; teacher plants carry the integrated position too."""

    q: np.ndarray
    t: float = 0.0
    x: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if not np.all(np.isfinite(self.q)):
            raise ValueError("non-finite joint vector")
        if self.x is not None:
            object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


def _link_transform(link, theta):
    ct, st = np.cos(theta + link.theta_offset), np.sin(theta + link.theta_offset)
    ca, sa = np.cos(link.alpha), np.sin(link.alpha)
    return np.array([
        [ct, -st * ca, st * sa, link.a * ct],
        [st, ct * ca, -ct * sa, link.a * st],
        [0.0, sa, ca, link.d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _frames(chain, q):
    """Cumulative transforms T_0^i for i = 0..m."""
    T = np.eye(4)
    frames = [T]
    for link, theta in zip(chain.links, q):
        T = T @ _link_transform(link, theta)
        frames.append(T)
    return frames


def forward_kinematics(chain, q):
    """End-effector position (first task_dims components of x, y, z)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.m,):
        raise ValueError(f"q has shape {q.shape}, expected ({chain.m},)")
    return _frames(chain, q)[-1][: chain.task_dims, 3].copy()


def analytic_jacobian(chain, q):
    """Geometric position Jacobian: column i is z_{i-1} x (p_e - p_{i-1})."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.m,):
        raise ValueError(f"q has shape {q.shape}, expected ({chain.m},)")
    frames = _frames(chain, q)
    p_end = frames[-1][:3, 3]
    J = np.empty((3, chain.m))
    for i in range(chain.m):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:, i] = np.cross(z, p_end - p)
    return J[: chain.task_dims].copy()


class ChainPlant:
    """DH chain with exact position feedback x = FK(q)."""

    kind = "chain"

    def __init__(self, chain):
        self.chain = chain
        self.m = chain.m
        self.p = chain.task_dims

    def initial_state(self, q0, x0=None, t0=0.0):
        return PlantState(q=np.asarray(q0, dtype=float), t=t0)

    def position(self, state):
        return forward_kinematics(self.chain, state.q)

    def jacobian(self, state):
        return analytic_jacobian(self.chain, state.q)

    def step(self, state, qdot, dt):
        return plant_step(self, state, qdot, dt)


class TeacherPlant:
    """Plant whose velocity map is a network with known (ideal) weights.

    ideal_net supplies both the true Jacobian and, for monitoring, the
    exact weight targets.  x evolves by integrating J(q) qdot.
    """

    kind = "teacher"

    def __init__(self, ideal_net):
        self.net = ideal_net
        self.m = ideal_net.config.m
        self.p = ideal_net.config.p

    def initial_state(self, q0, x0=None, t0=0.0):
        if x0 is None:
            x0 = np.zeros(self.p)
        return PlantState(q=np.asarray(q0, dtype=float), t=t0, x=np.asarray(x0, dtype=float))

    def position(self, state):
        return np.asarray(state.x, dtype=float)

    def jacobian(self, state):
        return network.assemble_jacobian(self.net, state.q)

    def step(self, state, qdot, dt):
        return plant_step(self, state, qdot, dt)


def teacher_velocity(plant, q, qdot):
    """Task velocity of a TeacherPlant: the stacked network columns times qdot."""
    return network.jacobian_velocity(plant.net, q, qdot)


def plant_step(plant, state, qdot_cmd, dt):
    """Advance a plant state by one explicit Euler step of q' = qdot_cmd."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    qdot_cmd = np.asarray(qdot_cmd, dtype=float)
    if qdot_cmd.shape != state.q.shape:
        raise ValueError(f"qdot has shape {qdot_cmd.shape}, expected {state.q.shape}")
    if not np.all(np.isfinite(qdot_cmd)):
        raise ValueError("non-finite joint velocity command")
    q_new = state.q + dt * qdot_cmd
    x_new = None
    if state.x is not None:
        x_new = state.x + dt * (plant.jacobian(state) @ qdot_cmd)
    return replace(state, q=q_new, t=state.t + dt, x=x_new)


DEFAULT_CHAIN = DHChain(links=(
    Link(a=0.0, alpha=np.pi / 2, d=0.1),
    Link(a=0.4, alpha=0.0, d=0.0),
    Link(a=0.4, alpha=0.0, d=0.0),
))


def make_teacher(config, seed, scale=0.5, fit_q_center=None, fit_halfwidth=1.5,
                 fit_samples=3000, ridge=1e-8):
    """Seeded teacher whose observer output weights are least-squares fits.

    The input weights are drawn uniformly.  A generic deep stack admits no
    output matrix that reproduces the end velocity exactly from an inner
    hidden layer (the remaining composition is nonlinear), so each Wo is
    fitted over a joint-space box to make the per-system representation
    error small; it cannot be made zero.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    w_shapes, wo_shapes = network.expected_shapes(config)
    W = [rng.uniform(-scale, scale, size=sh) for sh in w_shapes]
    net = network.JacNet(config=config, W=W, Wo=[np.zeros(sh) for sh in wo_shapes])

    if fit_q_center is None:
        fit_q_center = np.zeros(config.m_in)
    qs = fit_q_center + rng.uniform(-fit_halfwidth, fit_halfwidth,
                                    size=(fit_samples, config.m_in))
    feats = [np.empty((fit_samples, sh[2], config.m)) for sh in wo_shapes]
    cols = np.empty((fit_samples, config.p, config.m))
    for i, q in enumerate(qs):
        for k in range(config.m):
            acts, _ = network.column_activations(net, k, q)
            for l in range(config.n_systems):
                feats[l][i, :, k] = acts[l + 1]
            cols[i, :, k] = net.W[config.n - 1][k] @ acts[config.n - 1]
    for l in range(config.n_systems):
        size = wo_shapes[l][2]
        eye = np.sqrt(ridge) * np.eye(size)
        zeros = np.zeros((size, config.p))
        for k in range(config.m):
            A = np.vstack([feats[l][:, :, k], eye])
            Y = np.vstack([cols[:, :, k], zeros])
            sol, *_ = np.linalg.lstsq(A, Y, rcond=None)
            net.Wo[l][k] = sol.T
    return TeacherPlant(net)


def make_exact_teacher(config, seed, scale=0.5):
    """Teacher whose per-system representation error is identically zero.

    All hidden weights are zero, so every hidden activation is exactly 0.5
    and the Jacobian columns are constants; placing 2*jcol in the first
    column of each Wo then reproduces jcol with exact IEEE arithmetic
    (multiplying by 2 and by 0.5 are both exact).  Degenerate by
    necessity: a generic stack admits no exact shallow representation.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    w_shapes, wo_shapes = network.expected_shapes(config)
    W = [np.zeros(sh) for sh in w_shapes]
    W[-1] = rng.uniform(-scale, scale, size=w_shapes[-1])
    net = network.JacNet(config=config, W=W, Wo=[np.zeros(sh) for sh in wo_shapes])
    q_any = np.zeros(config.m_in)
    for k in range(config.m):
        acts, _ = network.column_activations(net, k, q_any)
        jcol = net.W[config.n - 1][k] @ acts[config.n - 1]
        for l in range(config.n_systems):
            Wo = np.zeros(wo_shapes[l][1:])
            Wo[:, 0] = 2.0 * jcol
            net.Wo[l][k] = Wo
    return TeacherPlant(net)
