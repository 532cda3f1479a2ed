"""Independent reference computations used by the tests."""
import math

import numpy as np


def fd_bloch_bands(V_L, q=0.0, points=512, n_bands=4):
    """Bloch bands from a 4th-order finite-difference discretization of one lattice period.

    Works with the periodic part u(x) of psi = exp(i q x) u(x) on x = k_L x in
    [0, pi), where H_q = (-i d/dx + q)^2 - (V_L/2) cos(2x).  Returns the
    energies and the comb amplitudes c_n (coefficient of exp(2 i n x)) of each band.
    """
    h = math.pi / points
    x = np.arange(points) * h
    eye = np.eye(points)

    def shift(k):
        return np.roll(eye, k, axis=1)

    d1 = (-shift(2) + 8 * shift(1) - 8 * shift(-1) + shift(-2)) / (12 * h)
    d2 = (-shift(2) + 16 * shift(1) - 30 * eye + 16 * shift(-1) - shift(-2)) / (12 * h * h)
    H = -d2 - 2j * q * d1 + q * q * eye + np.diag(-0.5 * V_L * np.cos(2 * x))
    H = 0.5 * (H + H.conj().T)
    E, U = np.linalg.eigh(H)
    coeffs = np.fft.fft(U[:, :n_bands], axis=0) / points
    return E[:n_bands], coeffs


def comb_from_fft(coeffs, n_max):
    """Pick the comb amplitudes n = -n_max..n_max out of FFT ordering and normalize."""
    idx = np.arange(-n_max, n_max + 1) % coeffs.shape[0]
    c = coeffs[idx]
    return c / np.linalg.norm(c, axis=0)


def binomial_fringe_info(theta, dtheta=1e-6):
    """Central-difference Fisher information of P = (sin^2 theta, cos^2 theta)."""
    def probs(t):
        return np.array([math.sin(t) ** 2, math.cos(t) ** 2])
    p = probs(theta)
    dp = (probs(theta + dtheta) - probs(theta - dtheta)) / (2 * dtheta)
    return float(np.sum(dp * dp / p))


def fd_gradients(loss, params, eps=1e-6):
    """Central finite-difference gradient of loss() with respect to every entry of every array."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            lp = loss()
            p[i] = old - eps
            lm = loss()
            p[i] = old
            g[i] = (lp - lm) / (2 * eps)
        grads.append(g)
    return grads


def network_gradient_error(seed, n_batch=8, eps=1e-6):
    """Max over layers of ||backprop - FD||_inf / ||FD||_inf for the Bellman loss of a random net."""
    from latticedsp.designer import ACTIONS, N_FEATURES, QNetwork, bellman_loss

    rng = np.random.default_rng(seed)
    net = QNetwork(N_FEATURES, 64, len(ACTIONS), rng)
    net.b1[:] = rng.normal(0.0, 0.1, net.b1.shape)
    net.b2[:] = rng.normal(0.0, 0.1, net.b2.shape)
    batch = {"s": rng.normal(size=(n_batch, N_FEATURES)), "a": rng.integers(0, len(ACTIONS), n_batch)}
    targets = rng.normal(size=n_batch)
    _, grads = bellman_loss(net, batch, targets)
    fd = fd_gradients(lambda: bellman_loss(net, batch, targets)[0], net.params, eps)
    return max(float(np.max(np.abs(g - f)) / np.max(np.abs(f))) for g, f in zip(grads, fd))
