"""Modular observer systems and the weight update laws.

Every layer of the Jacobian network except the last two is the input
weight matrix of a shallow observer system: the observer predicts the
task velocity from its layer's hidden state, integrates it to an
estimated position, and is corrected toward the measured position.  The
discrepancy drives the layer's update law.  The last two layers are
driven by the controller's error instead (or, during pre-training, by
one extra synthetic observer built from the assembled Jacobian).

Each law pairs a correlation term with a -beta * ||error|| * W leakage
term that keeps the estimates bounded.  All updates in one step are
computed from the same state snapshot and applied together.

The granular functions here are plain reference implementations; the
experiment loops run the same arithmetic through the selected backend
kernel (see jacnet.backend), which is tested against these.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import backend, controller, network


@dataclass(frozen=True)
class LearnParams:
    """Update-law gains: per observer system, plus the last two layers.

    eta is a global multiplier on the discrete update step
    (delta = eta * dt * law); it is the only gain allowed to be zero.
    """

    alpha_obs: np.ndarray
    alpha_obs_out: np.ndarray
    beta_obs: np.ndarray
    beta_obs_out: np.ndarray
    alpha_last: float = 1.0
    beta_last: float = 1.0
    alpha_out: float = 1.0
    beta_out: float = 1.0
    eta: float = 0.01

    def __post_init__(self):
        for name in ("alpha_obs", "alpha_obs_out", "beta_obs", "beta_obs_out"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
            if np.any(arr <= 0):
                raise ValueError(f"{name} entries must be strictly positive")
        if min(self.alpha_last, self.beta_last, self.alpha_out, self.beta_out) <= 0:
            raise ValueError("layer gains must be strictly positive")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")

    @property
    def n_systems(self):
        return self.alpha_obs.shape[0]

    @classmethod
    def uniform(cls, n_systems, alpha=1.0, beta=1.0, eta=0.01):
        ones = np.full(n_systems, float(alpha))
        betas = np.full(n_systems, float(beta))
        return cls(alpha_obs=ones, alpha_obs_out=ones.copy(),
                   beta_obs=betas, beta_obs_out=betas.copy(),
                   alpha_last=alpha, beta_last=beta,
                   alpha_out=alpha, beta_out=beta, eta=eta)


@dataclass
class ObserverBank:
    """Estimated positions of the observer systems plus their gains/bounds.

    Row l-1 belongs to system l.  Pre-training banks carry one extra row
    for the synthetic observer of the last two layers.
    """

    x_hat: np.ndarray
    k_p: np.ndarray
    k_s: np.ndarray
    b: np.ndarray
    a: np.ndarray
    region_N: int = 2

    def __post_init__(self):
        self.x_hat = np.atleast_2d(np.asarray(self.x_hat, dtype=float))
        n_obs, p = self.x_hat.shape
        self.k_p = np.broadcast_to(np.asarray(self.k_p, dtype=float), (n_obs,)).copy()
        self.k_s = np.broadcast_to(np.asarray(self.k_s, dtype=float), (n_obs,)).copy()
        self.b = np.broadcast_to(np.asarray(self.b, dtype=float), (n_obs, p)).copy()
        self.a = np.broadcast_to(np.asarray(self.a, dtype=float), (n_obs, p)).copy()
        if np.any(self.a > self.b):
            raise ValueError("observer saturation widths must satisfy a_i <= b_i")

    @property
    def n_obs(self):
        return self.x_hat.shape[0]

    @property
    def p(self):
        return self.x_hat.shape[1]

    def copy(self):
        return ObserverBank(x_hat=self.x_hat.copy(), k_p=self.k_p.copy(),
                            k_s=self.k_s.copy(), b=self.b.copy(), a=self.a.copy(),
                            region_N=self.region_N)

    @classmethod
    def at_position(cls, n_obs, x0, k_p=10.0, k_s=0.001, b=0.001, a=0.001, region_N=2):
        x0 = np.asarray(x0, dtype=float)
        return cls(x_hat=np.tile(x0, (n_obs, 1)), k_p=k_p, k_s=k_s, b=b, a=a,
                   region_N=region_N)


def _system_error(dxh, bank, row, mode):
    if mode == controller.REGION:
        return controller.region_error(dxh, bank.b[row], bank.region_N)
    return dxh


def observer_velocity(net, bank, l, q, qdot, x, mode=controller.REGION):
    """Estimated task velocity of system l (1-based).

    Model part: sum over joints of Wo[l] applied to the layer's activation
    scaled by that joint's velocity.  Correction part: banded error with
    smooth saturation in region mode, raw error with sign in tracking.
    """
    cfg = net.config
    if not 1 <= l <= cfg.n_systems:
        raise IndexError(f"system index {l} out of range 1..{cfg.n_systems}")
    qdot = np.asarray(qdot, dtype=float)
    vel = np.zeros(cfg.p)
    for k in range(cfg.m):
        acts, _ = network.column_activations(net, k, q)
        vel += net.Wo[l - 1][k] @ (acts[l] * qdot[k])
    dxh = np.asarray(x, dtype=float) - bank.x_hat[l - 1]
    err = _system_error(dxh, bank, l - 1, mode)
    if mode == controller.REGION:
        push = controller.smooth_sat(dxh, bank.a[l - 1])
    else:
        push = controller.sgn_vec(dxh)
    return vel + bank.k_p[l - 1] * err + bank.k_s[l - 1] * push


def observer_integrate(bank, l, xdot_hat, dt):
    """Euler-advance system l's estimated position; returns a new bank."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    xdot_hat = np.asarray(xdot_hat, dtype=float)
    if not np.all(np.isfinite(xdot_hat)):
        raise ValueError("non-finite observer velocity")
    out = bank.copy()
    out.x_hat[l - 1] = bank.x_hat[l - 1] + dt * xdot_hat
    return out


def update_inner_estimated(net, l, k, q, qdot, err, dt, params):
    """Delta for the input weights of observer system l, column k.

    eta * dt * [alpha * PhiGrad^T Wo^T err z^T - alpha * beta * ||err|| * W].
    """
    cfg = net.config
    if not 1 <= l <= cfg.n_systems:
        raise IndexError(f"system index {l} out of range 1..{cfg.n_systems}")
    err = np.asarray(err, dtype=float)
    acts, pre = network.column_activations(net, k, q)
    sp = network.sigma_prime(pre[l])
    g = sp * (net.Wo[l - 1][k].T @ err) * np.asarray(qdot, dtype=float)[k]
    alpha = params.alpha_obs[l - 1]
    beta = params.beta_obs[l - 1]
    raw = alpha * np.outer(g, acts[l - 1]) - alpha * beta * np.linalg.norm(err) * net.W[l - 1][k]
    return params.eta * dt * raw


def update_output_estimated(net, l, k, q, qdot, err, dt, params):
    """Delta for the output weights of observer system l, column k."""
    cfg = net.config
    if not 1 <= l <= cfg.n_systems:
        raise IndexError(f"system index {l} out of range 1..{cfg.n_systems}")
    err = np.asarray(err, dtype=float)
    acts, pre = network.column_activations(net, k, q)
    sp = network.sigma_prime(pre[l])
    qd_k = np.asarray(qdot, dtype=float)[k]
    h = (acts[l] - sp * pre[l]) * qd_k
    alpha = params.alpha_obs_out[l - 1]
    beta = params.beta_obs_out[l - 1]
    raw = alpha * np.outer(err, h) - alpha * beta * np.linalg.norm(err) * net.Wo[l - 1][k]
    return params.eta * dt * raw


def update_inner_tracking(net, k, q, qdot, err, dt, params):
    """Delta for the next-to-last layer of column k, driven by err."""
    cfg = net.config
    err = np.asarray(err, dtype=float)
    acts, pre = network.column_activations(net, k, q)
    sp = network.sigma_prime(pre[cfg.n - 1])
    g = sp * (net.W[cfg.n - 1][k].T @ err) * np.asarray(qdot, dtype=float)[k]
    raw = params.alpha_last * np.outer(g, acts[cfg.n - 2]) \
        - params.alpha_last * params.beta_last * np.linalg.norm(err) * net.W[cfg.n - 2][k]
    return params.eta * dt * raw


def update_output_tracking(net, k, q, qdot, err, dt, params):
    """Delta for the last (output) layer of column k, driven by err."""
    cfg = net.config
    err = np.asarray(err, dtype=float)
    acts, pre = network.column_activations(net, k, q)
    sp = network.sigma_prime(pre[cfg.n - 1])
    qd_k = np.asarray(qdot, dtype=float)[k]
    h = (acts[cfg.n - 1] - sp * pre[cfg.n - 1]) * qd_k
    raw = params.alpha_out * np.outer(err, h) \
        - params.alpha_out * params.beta_out * np.linalg.norm(err) * net.W[cfg.n - 1][k]
    return params.eta * dt * raw


def make_stepper(config, params, bank, mode, dt, synthetic_final=False,
                 backend_module=None):
    """Backend kernel bound to this net architecture and gain set."""
    mod = backend_module or backend.get_backend()
    n_extra = 1 if synthetic_final else 0
    if bank.n_obs != config.n_systems + n_extra:
        raise ValueError(
            f"bank has {bank.n_obs} rows, expected {config.n_systems + n_extra}")
    mode_int = 0 if mode == controller.REGION else 1
    return mod.Stepper(
        config.layer_sizes, config.m, mode_int, bank.region_N, synthetic_final,
        params.alpha_obs, params.alpha_obs_out, params.beta_obs, params.beta_obs_out,
        params.alpha_last, params.beta_last, params.alpha_out, params.beta_out,
        params.eta, dt, bank.b, bank.a)


def learning_step(net, bank, q, qdot, x, err_final, dt, params,
                  mode=controller.REGION, column_order=None):
    """One simultaneous update of all weights and observer positions.

    err_final is the controller's error vector feeding the last two
    layers (banded in region mode, raw in tracking mode).  Returns a new
    (net, bank); the inputs are not mutated.
    """
    st = make_stepper(net.config, params, bank, mode, dt)
    st.load_weights(net.W, net.Wo)
    st.xhat[...] = bank.x_hat
    st.kp_obs[...] = bank.k_p
    st.ks_obs[...] = bank.k_s
    st.q[...] = np.asarray(q, dtype=float)
    st.qdot[...] = np.asarray(qdot, dtype=float)
    st.x[...] = np.asarray(x, dtype=float)
    st.err_final[...] = np.asarray(err_final, dtype=float)
    st.learn(column_order=column_order)
    W, Wo = st.export_weights()
    new_net = network.JacNet(config=net.config, W=W, Wo=Wo)
    new_bank = bank.copy()
    new_bank.x_hat[...] = st.xhat
    return new_net, new_bank


def prediction_error(net, dataset):
    """Mean ||xdot - J(q) qdot|| over a dataset (no learning)."""
    total = 0.0
    for i in range(len(dataset)):
        pred = network.jacobian_velocity(net, dataset.q[i], dataset.qdot[i])
        total += float(np.linalg.norm(dataset.xdot[i] - pred))
    return total / len(dataset)


def pretrain(net, dataset, epochs, dt, params, k_p=10.0, k_s=0.001,
             mode=controller.TRACKING, bounds=1.0, region_N=2):
    """Replay a dataset through the observer-form update laws.

    All modular systems run as usual, and the last two layers run as one
    extra observer whose position integrates the assembled Jacobian's
    velocity prediction plus the same correction terms; its estimated
    error drives the last-two-layer laws.  Estimated positions reset to
    the first sample's position at each epoch start.

    Returns (trained net, per-epoch mean velocity-prediction error).
    """
    if len(dataset) == 0:
        raise ValueError("pre-training dataset is empty")
    cfg = net.config
    if dataset.m != cfg.m or dataset.p != cfg.p:
        raise ValueError(
            f"dataset dims ({dataset.m}, {dataset.p}) do not match net ({cfg.m}, {cfg.p})")
    n_obs = cfg.n_systems + 1
    bank = ObserverBank.at_position(n_obs, dataset.x[0], k_p=k_p, k_s=k_s,
                                    b=bounds, a=bounds, region_N=region_N)
    st = make_stepper(cfg, params, bank, mode, dt, synthetic_final=True)
    st.load_weights(net.W, net.Wo)
    st.kp_obs[...] = bank.k_p
    st.ks_obs[...] = bank.k_s

    history = []
    for _ in range(epochs):
        st.xhat[...] = np.tile(dataset.x[0], (n_obs, 1))
        total = 0.0
        for i in range(len(dataset)):
            st.q[...] = dataset.q[i]
            st.qdot[...] = dataset.qdot[i]
            st.x[...] = dataset.x[i]
            st.compute_jacobian()
            resid = dataset.xdot[i] - st.predicted_velocity()
            total += float(np.sqrt(np.dot(resid, resid)))
            st.learn(recompute=False)
        history.append(total / len(dataset))
    W, Wo = st.export_weights()
    return network.JacNet(config=cfg, W=W, Wo=Wo), history
