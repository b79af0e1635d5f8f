"""Pure-NumPy learning-step kernels.

This is the fallback backend and the semantic reference for the compiled
extension (jacnet._speedups).  Both implement the same Stepper interface:
a per-experiment object owning working copies of the weights plus all
scratch buffers, so the 500 Hz loop allocates nothing.

One learn() call performs a full simultaneous update from a state
snapshot: every hidden state, observer velocity and weight delta is
computed with the pre-step weights and observer positions, and only then
applied.  Columns are processed independently, so any processing order
gives bit-identical results.
"""

import numpy as np

BACKEND_NAME = "python"

REGION_MODE = 0
TRACKING_MODE = 1


def _region_error(dx, b, N):
    excess = np.maximum(0.0, dx * dx / (b * b) - 1.0)
    return excess ** (N - 1) * dx


def _smooth_sat(dx, a):
    return np.where(np.abs(dx) < a, np.sin(0.5 * np.pi * dx / a), np.sign(dx))


class Stepper:
    """Owns working weights and runs forward passes and learning steps.

    Inputs for a step are written into the exposed buffers (q, qdot, x,
    err_final, kp_obs, ks_obs) before calling learn().  With
    synthetic_final=True the last two layers are trained in observer form
    against one extra integrated position row (pre-training); otherwise
    err_final supplies the controller's error vector.
    """

    def __init__(self, layer_sizes, m, mode, region_N, synthetic_final,
                 alpha_obs, alpha_obs_out, beta_obs, beta_obs_out,
                 alpha_last, beta_last, alpha_out, beta_out,
                 eta, dt, b_obs, a_obs):
        sizes = tuple(int(s) for s in layer_sizes)
        self.sizes = sizes
        self.n = len(sizes) - 1
        self.m = int(m)
        self.p = sizes[-1]
        self.n_systems = self.n - 2
        self.mode = int(mode)
        self.region_N = int(region_N)
        self.synthetic_final = bool(synthetic_final)
        self.n_obs = self.n_systems + (1 if self.synthetic_final else 0)

        self.alpha_obs = np.asarray(alpha_obs, dtype=float).copy()
        self.alpha_obs_out = np.asarray(alpha_obs_out, dtype=float).copy()
        self.beta_obs = np.asarray(beta_obs, dtype=float).copy()
        self.beta_obs_out = np.asarray(beta_obs_out, dtype=float).copy()
        for name in ("alpha_obs", "alpha_obs_out", "beta_obs", "beta_obs_out"):
            if getattr(self, name).shape != (self.n_systems,):
                raise ValueError(f"{name} must have length {self.n_systems}")
        self.alpha_last = float(alpha_last)
        self.beta_last = float(beta_last)
        self.alpha_out = float(alpha_out)
        self.beta_out = float(beta_out)
        self.eta = float(eta)
        self.dt = float(dt)
        self.b_obs = np.asarray(b_obs, dtype=float).reshape(self.n_obs, self.p).copy()
        self.a_obs = np.asarray(a_obs, dtype=float).reshape(self.n_obs, self.p).copy()

        # input buffers
        self.q = np.zeros(sizes[0])
        self.qdot = np.zeros(self.m)
        self.x = np.zeros(self.p)
        self.err_final = np.zeros(self.p)
        self.xhat = np.zeros((self.n_obs, self.p))
        self.kp_obs = np.zeros(self.n_obs)
        self.ks_obs = np.zeros(self.n_obs)

        # weights (working copies, bound via load_weights)
        self.W = [np.zeros((self.m, sizes[l + 1], sizes[l])) for l in range(self.n)]
        self.Wo = [np.zeros((self.m, self.p, sizes[l + 1])) for l in range(self.n_systems)]

        # scratch
        self.acts = [self.q] + [np.zeros((self.m, sizes[l])) for l in range(1, self.n)]
        self.pre = [None] + [np.zeros((self.m, sizes[l])) for l in range(1, self.n)]
        self.sp = [None] + [np.zeros((self.m, sizes[l])) for l in range(1, self.n)]
        self.jac = np.zeros((self.p, self.m))
        self.model = np.zeros((self.n_systems, self.m, self.p))
        self.xdot_hat = np.zeros((self.n_obs, self.p))
        self.e_obs = np.zeros((self.n_obs, self.p))

    def load_weights(self, W, Wo):
        for dst, src in zip(self.W, W):
            if dst.shape != src.shape:
                raise ValueError(f"weight shape {src.shape} does not match {dst.shape}")
            dst[...] = src
        for dst, src in zip(self.Wo, Wo):
            if dst.shape != src.shape:
                raise ValueError(f"weight shape {src.shape} does not match {dst.shape}")
            dst[...] = src

    def export_weights(self):
        return [w.copy() for w in self.W], [w.copy() for w in self.Wo]

    def _act(self, l, k):
        return self.acts[0] if l == 0 else self.acts[l][k]

    def _forward(self):
        """Hidden states, their slopes, and the Jacobian, at the q buffer."""
        for k in range(self.m):
            prev = self.acts[0]
            for l in range(1, self.n):
                v = self.W[l - 1][k] @ prev
                a = 1.0 / (1.0 + np.exp(-v))
                self.pre[l][k] = v
                self.acts[l][k] = a
                self.sp[l][k] = a * (1.0 - a)
                prev = self.acts[l][k]
            self.jac[:, k] = self.W[self.n - 1][k] @ self.acts[self.n - 1][k]
            for ls in range(self.n_systems):
                self.model[ls, k] = self.Wo[ls][k] @ (self.acts[ls + 1][k] * self.qdot[k])

    def compute_jacobian(self):
        with np.errstate(over="ignore"):
            self._forward()
        return self.jac

    def predicted_velocity(self):
        """Jacobian-based task velocity for the current buffers (post-forward)."""
        return self.jac @ self.qdot

    def learn(self, column_order=None, recompute=True):
        with np.errstate(over="ignore"):
            self._learn(column_order, recompute)

    def _learn(self, column_order, recompute):
        if recompute:
            self._forward()
        n, m, p = self.n, self.m, self.p

        # observer velocities and update errors from the snapshot
        for r in range(self.n_obs):
            dxh = self.x - self.xhat[r]
            if self.mode == REGION_MODE:
                err = _region_error(dxh, self.b_obs[r], self.region_N)
                push = _smooth_sat(dxh, self.a_obs[r])
            else:
                err = dxh
                push = np.sign(dxh)
            self.e_obs[r] = err
            vel = self.kp_obs[r] * err + self.ks_obs[r] * push
            if r < self.n_systems:
                vel = vel + np.add.reduce(self.model[r], axis=0)
            else:
                vel = vel + self.jac @ self.qdot
            self.xdot_hat[r] = vel

        if self.synthetic_final:
            e_fin = self.e_obs[self.n_obs - 1]
        else:
            e_fin = self.err_final
        ne_fin = float(np.sqrt(np.dot(e_fin, e_fin)))

        eta_dt = self.eta * self.dt
        ne_obs = [float(np.sqrt(np.dot(self.e_obs[r], self.e_obs[r])))
                  for r in range(self.n_systems)]
        cols = range(m) if column_order is None else column_order
        for k in cols:
            qd_k = self.qdot[k]
            for ls in range(self.n_systems):
                e = self.e_obs[ls]
                ne = ne_obs[ls]
                z = self._act(ls, k)
                a_l = self.acts[ls + 1][k]
                sp_l = self.sp[ls + 1][k]
                g = sp_l * (self.Wo[ls][k].T @ e) * qd_k
                raw = np.outer(g, z) - (self.beta_obs[ls] * ne) * self.W[ls][k]
                self.W[ls][k] += (eta_dt * self.alpha_obs[ls]) * raw
                h = (a_l - sp_l * self.pre[ls + 1][k]) * qd_k
                raw_o = np.outer(e, h) - (self.beta_obs_out[ls] * ne) * self.Wo[ls][k]
                self.Wo[ls][k] += (eta_dt * self.alpha_obs_out[ls]) * raw_o

            # last two layers; g reads the output weights before they move
            z = self._act(n - 2, k)
            a_l = self.acts[n - 1][k]
            sp_l = self.sp[n - 1][k]
            g = sp_l * (self.W[n - 1][k].T @ e_fin) * qd_k
            h = (a_l - sp_l * self.pre[n - 1][k]) * qd_k
            raw = np.outer(g, z) - (self.beta_last * ne_fin) * self.W[n - 2][k]
            self.W[n - 2][k] += (eta_dt * self.alpha_last) * raw
            raw = np.outer(e_fin, h) - (self.beta_out * ne_fin) * self.W[n - 1][k]
            self.W[n - 1][k] += (eta_dt * self.alpha_out) * raw

        self.xhat += self.dt * self.xdot_hat


def make_chain_fk_jac(chain):
    """Position/Jacobian evaluator for a DH chain (reference NumPy path)."""
    from .kinematics import analytic_jacobian, forward_kinematics

    def fk_jac(q):
        return forward_kinematics(chain, q), analytic_jacobian(chain, q)

    return fk_jac
