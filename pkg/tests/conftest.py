import numpy as np
import pytest

from optinput.model import StateSpaceModel, gaussian_logpdf


def brute_force_cycles(adj):
    """Simple cycles by plain DFS from each start node through larger nodes only."""
    nodes = sorted(set(adj) | {w for ws in adj.values() for w in ws})
    succ = {v: sorted(set(adj.get(v, ()))) for v in nodes}
    found = set()
    for s in nodes:
        stack = [(s, (s,))]
        while stack:
            v, path = stack.pop()
            for w in succ[v]:
                if w == s:
                    found.add(path)
                elif w > s and w not in path:
                    stack.append((w, path + (w,)))
    return found


FD_STEP = 1e-6
FD_TOL = 1e-5


def fd_grad(fun, theta, h=FD_STEP):
    theta = np.asarray(theta, dtype=float)
    g = np.empty_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (fun(theta + e) - fun(theta - e)) / (2 * h)
    return g


def max_rel_grad_error(model, points):
    """Relative error with a unit floor on the denominator."""
    worst = 0.0
    for theta, xp, xn, u in points:
        analytic = model.transition_grad(xp, xn, u, theta)
        numeric = fd_grad(lambda th: model.transition_logpdf(xp, xn, u, th), theta)
        err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
        worst = max(worst, float(err.max()))
    return worst


def random_points(rng, theta_lo, theta_hi, n=100):
    pts = []
    for _ in range(n):
        theta = rng.uniform(theta_lo, theta_hi)
        xp, u = rng.uniform(-2, 2), rng.choice([-1.0, 0.0, 1.0])
        xn = xp * theta[0] + u + rng.normal(0, 0.2)
        pts.append((theta, xp, xn, u))
    return pts


class ZeroNoise:
    """Stand-in generator whose Gaussian draws are all zero."""

    def standard_normal(self, size=None):
        return np.zeros(size) if size not in (None, ()) else 0.0

    def random(self, size=None):
        return np.full(size, 0.5) if size is not None else 0.5


class ThetaFreeModel(StateSpaceModel):
    """Random walk observed in noise; densities do not depend on theta."""

    name = "theta-free"
    dim_theta = 2

    def transition_logpdf(self, x_prev, x_next, u_prev, theta):
        return gaussian_logpdf(x_next, x_prev + u_prev, 0.5)

    def observation_logpdf(self, x, y, u, theta):
        return gaussian_logpdf(y, x, 0.3)

    def transition_grad(self, x_prev, x_next, u_prev, theta):
        return np.zeros(np.broadcast(x_prev, x_next).shape + (2,))

    def observation_grad(self, x, y, u, theta):
        return np.zeros(np.broadcast(x, y).shape + (2,))

    def sample_transition(self, x_prev, u_prev, theta, rng):
        m = x_prev + u_prev
        return m + 0.5 * rng.standard_normal(np.shape(m))

    def sample_observation(self, x, u, theta, rng):
        return x + 0.3 * rng.standard_normal(np.shape(x))


class FlatObservationModel(ThetaFreeModel):
    name = "flat"

    def observation_logpdf(self, x, y, u, theta):
        return np.zeros(np.broadcast(x, y).shape)


@pytest.fixture
def zero_rng():
    return ZeroNoise()
