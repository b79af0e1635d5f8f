"""Kinematic control law, band-error shaping and the gain ramp.

Region mode drives each task error component into a band [-b_i, b_i]
instead of to zero: the banded error (region_error) vanishes inside the
band and grows polynomially outside, so no correction acts once the error
is acceptable.  Tracking mode is the classic variant with the raw error
and a sign function in place of the smooth saturation.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import pseudoinverse

REGION = "region"
TRACKING = "tracking"


@dataclass(frozen=True)
class ControllerConfig:
    mode: str = REGION
    k0: float = 0.01
    kT: float = 10.0
    ramp: float = 20.0          # seconds to ramp k_p from k0 to kT (region mode)
    k_s: float = 0.001
    b: np.ndarray = field(default_factory=lambda: np.full(3, 0.001))
    a: np.ndarray = field(default_factory=lambda: np.full(3, 0.001))
    N: int = 2
    qdot_max: Optional[float] = None   # optional joint-speed clamp, off by default

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        if self.mode not in (REGION, TRACKING):
            raise ValueError(f"mode must be 'region' or 'tracking', got {self.mode!r}")
        if self.N < 2 or int(self.N) != self.N:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if self.k0 <= 0 or self.kT <= 0:
            raise ValueError("k_0 and k_T must be positive")
        if self.k_s < 0:
            raise ValueError(f"k_s must be >= 0, got {self.k_s}")
        if self.ramp <= 0:
            raise ValueError(f"ramp duration must be positive, got {self.ramp}")
        if np.any(self.b <= 0) or np.any(self.a <= 0):
            raise ValueError("bounds b and saturation widths a must be positive")
        if self.b.shape != self.a.shape:
            raise ValueError("a and b must have the same length")
        if np.any(self.a > self.b):
            raise ValueError("saturation widths must satisfy a_i <= b_i")

    @property
    def p(self):
        return self.b.shape[0]


def region_error(dx, b, N):
    """Banded error: max(0, dx_i^2/b_i^2 - 1)^(N-1) * dx_i per component.

    Zero inside the band |dx_i| <= b_i, odd in dx, continuous at the band
    boundary (not C^1 there for N = 2; the formula is used literally).
    """
    dx = np.asarray(dx, dtype=float)
    b = np.asarray(b, dtype=float)
    excess = np.maximum(0.0, dx * dx / (b * b) - 1.0)
    return excess ** (N - 1) * dx


def smooth_sat(dx, a):
    """Componentwise sin(pi dx_i / (2 a_i)) inside |dx_i| < a_i, else sign."""
    dx = np.asarray(dx, dtype=float)
    a = np.asarray(a, dtype=float)
    inside = np.abs(dx) < a
    return np.where(inside, np.sin(0.5 * np.pi * dx / a), np.sign(dx))


def sgn_vec(dx):
    """Componentwise sign with sgn(0) = 0."""
    return np.sign(np.asarray(dx, dtype=float))


def potential(dx, b, N, mode=REGION):
    """Scalar potential whose gradient is the mode's error vector.

    Region mode: sum of (b_i^2 / 2N) max(0, dx_i^2/b_i^2 - 1)^N, so that
    the gradient is exactly region_error (the b_i^2 factor makes the chain
    rule come out clean).  Tracking mode: 0.5 ||dx||^2.
    """
    dx = np.asarray(dx, dtype=float)
    if mode == TRACKING:
        return 0.5 * float(np.dot(dx, dx))
    b = np.asarray(b, dtype=float)
    excess = np.maximum(0.0, dx * dx / (b * b) - 1.0)
    return float(np.sum(b * b / (2.0 * N) * excess ** N))


def gain_schedule(t, T, k0, kT):
    """Cubic smoothstep ramp from k0 at t=0 to kT at t>=T."""
    if t >= T:
        return kT
    s = t / T
    return (kT - k0) * (-2.0 * s ** 3 + 3.0 * s ** 2) + k0


def current_kp(config, t):
    """Proportional gain at time t: ramped in region mode, fixed in tracking."""
    if config.mode == TRACKING:
        return config.kT
    return gain_schedule(t, config.ramp, config.k0, config.kT)


def control_law(J_hat, xdot_d, dx, config, t):
    """Joint velocity command from the estimated Jacobian.

    Region:   qdot = J+ xdot_d - k_p J^T region_error(dx) - k_s J+ sat(dx)
    Tracking: qdot = J+ xdot_d - k_p J^T dx              - k_s J+ sgn(dx)
    """
    J_hat = np.asarray(J_hat, dtype=float)
    xdot_d = np.asarray(xdot_d, dtype=float)
    dx = np.asarray(dx, dtype=float)
    if not (np.all(np.isfinite(xdot_d)) and np.all(np.isfinite(dx))):
        raise ValueError("non-finite controller inputs")
    kp = current_kp(config, t)
    J_pinv = pseudoinverse(J_hat)
    if config.mode == REGION:
        err = region_error(dx, config.b, config.N)
        push = smooth_sat(dx, config.a)
    else:
        err = dx
        push = sgn_vec(dx)
    qdot = J_pinv @ xdot_d - kp * (J_hat.T @ err) - config.k_s * (J_pinv @ push)
    if config.qdot_max is not None:
        qdot = np.clip(qdot, -config.qdot_max, config.qdot_max)
    return qdot


def final_error(dx, config):
    """Error vector feeding the last two layers' update laws."""
    if config.mode == REGION:
        return region_error(dx, config.b, config.N)
    return np.asarray(dx, dtype=float)
