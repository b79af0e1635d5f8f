"""Desired trajectories and training-data generation.

The main path is a three-dimensional lemniscate of Bernoulli traversed
once with smoothstep timing, so the sweep angle and its rate both vanish
at the endpoints.  The approach segment is a smoothstep point-to-point
move.  Training data comes from a bounded exploration run around a home
configuration of the ground-truth plant.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset


@dataclass(frozen=True)
class LemniscateSpec:
    center: np.ndarray = field(default_factory=lambda: np.array([-0.5, -0.3, -0.1]))
    r1: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.01, 0.05]))
    r2: np.ndarray = field(default_factory=lambda: np.array([0.01, 0.05, 0.1]))
    T: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "r1", np.asarray(self.r1, dtype=float))
        object.__setattr__(self, "r2", np.asarray(self.r2, dtype=float))
        if self.T <= 0:
            raise ValueError(f"end time must be positive, got {self.T}")
        if not self.center.shape == self.r1.shape == self.r2.shape:
            raise ValueError("center, r1 and r2 must have the same length")


def theta(t, T):
    """Sweep angle and rate: 2*pi*smoothstep(t/T), clamped after T."""
    if t >= T:
        return 2.0 * np.pi, 0.0
    s = t / T
    ang = 2.0 * np.pi * (-2.0 * s ** 3 + 3.0 * s ** 2)
    rate = (2.0 * np.pi / T) * (-6.0 * s ** 2 + 6.0 * s)
    return ang, rate


def lemniscate(spec, t):
    """Desired position and velocity at time t.

    x_d = c + cos(th)/(1 + sin(th)^2) * (r1 + sin(th) r2); the velocity is
    the analytic chain rule through the sweep rate, avoiding any
    differentiation noise.
    """
    th, th_rate = theta(t, spec.T)
    sin, cos = np.sin(th), np.cos(th)
    denom = 1.0 + sin * sin
    f = cos / denom
    g = cos * sin / denom
    x_d = spec.center + f * spec.r1 + g * spec.r2
    # d/dth of f and g
    df = -sin * (3.0 - sin * sin) / (denom * denom)
    cos2 = cos * cos - sin * sin
    dg = (cos2 * denom - 2.0 * sin * sin * cos * cos) / (denom * denom)
    xdot_d = th_rate * (df * spec.r1 + dg * spec.r2)
    return x_d, xdot_d


def approach_trajectory(x_start, x_goal, duration, t):
    """Smoothstep interpolation from x_start to x_goal with zero end velocities."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    x_start = np.asarray(x_start, dtype=float)
    x_goal = np.asarray(x_goal, dtype=float)
    if t >= duration:
        return x_goal.copy(), np.zeros_like(x_goal)
    s = t / duration
    blend = -2.0 * s ** 3 + 3.0 * s ** 2
    rate = (-6.0 * s ** 2 + 6.0 * s) / duration
    delta = x_goal - x_start
    return x_start + blend * delta, rate * delta


def gen_dataset(plant, home_q, amplitude, n_samples, seed, qdot_range=1.0,
                dwell=0.25, dt=0.002):
    """Exploration run around home_q, recorded as (t, q, qdot, x, xdot).

    Joint velocities are redrawn uniformly from [-qdot_range, qdot_range]
    every `dwell` seconds and held between draws; the walk reflects off
    the box home_q +- amplitude so samples stay in the covered region.
    Velocities jump at redraws, but positions are continuous, which the
    integrating observers used for pre-training require.  Every sample
    satisfies xdot = J(q) qdot by construction.
    """
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    home_q = np.asarray(home_q, dtype=float)
    m, p = plant.m, plant.p
    rng = np.random.Generator(np.random.PCG64(seed))
    dwell_steps = max(1, int(round(dwell / dt)))

    t = np.arange(n_samples) * dt
    q_out = np.empty((n_samples, m))
    qd_out = np.empty((n_samples, m))
    x_out = np.empty((n_samples, p))
    xd_out = np.empty((n_samples, p))

    state = plant.initial_state(home_q)
    qdot = np.zeros(m)
    if plant.kind == "teacher":
        x = plant.position(state)
    for i in range(n_samples):
        if i % dwell_steps == 0:
            qdot = rng.uniform(-qdot_range, qdot_range, size=m)
        if amplitude > 0:
            # reflect: flip any component that would leave the box
            next_q = state.q + dt * qdot
            off = next_q - home_q
            flip = np.abs(off) > amplitude
            qdot = np.where(flip, -qdot, qdot)
        else:
            qdot = np.zeros(m)
        J = plant.jacobian(state)
        q_out[i] = state.q
        qd_out[i] = qdot
        x_out[i] = plant.position(state)
        xd_out[i] = J @ qdot
        state = plant.step(state, qdot, dt)
    return Dataset(t=t, q=q_out, qdot=qd_out, x=x_out, xdot=xd_out)
